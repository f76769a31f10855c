// Copyright 2026 The TaskCodec Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "taskcodec/experiment.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <omp.h>

#include "taskcodec/entropy_model.h"
#include "taskcodec/objectives.h"
#include "taskcodec/optimizer.h"

namespace taskcodec {

// ---------------------------------------------------------------------------
// Configuration

DatasetSpec DataConfig::Spec() const {
  DatasetSpec s;
  s.dataset_seed = seed;
  s.count = train_count + val_count + test_count + vinfo_count;
  s.size = size;
  s.num_classes = num_classes;
  return s;
}

void DataConfig::Validate() const {
  if (train_count < 1 || val_count < 1 || test_count < 1 || vinfo_count < 0) {
    throw ConfigError("data: split counts must be positive");
  }
  Spec().Validate();
}

void TrainingConfig::Validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("training: learning_rate must be positive");
  if (patience < 1) throw ConfigError("training: patience must be >= 1");
  if (max_epochs < 1 || warm_start_max_epochs < 0) throw ConfigError("training: bad epoch caps");
  if (batch_size < 1) throw ConfigError("training: batch_size must be >= 1");
  augmentation.Validate();
}

namespace {

const char* QuantizationName(QuantizationMode m) {
  return m == QuantizationMode::kUniformNoise ? "noise" : "ste";
}

nlohmann::json FamilyToJson(const PredictiveFamilySpec& f) {
  return {{"kind", FamilyKindName(f.kind)},
          {"width", f.width},
          {"depth", f.depth},
          {"steps", f.steps},
          {"learning_rate", f.learning_rate},
          {"batch_size", f.batch_size},
          {"eval_fraction", f.eval_fraction},
          {"validation_fraction", f.validation_fraction},
          {"bootstrap_resamples", f.bootstrap_resamples}};
}

PredictiveFamilySpec FamilyFromJson(const nlohmann::json& j) {
  PredictiveFamilySpec f;
  f.kind = ParseFamilyKind(j.value("kind", std::string(FamilyKindName(f.kind))));
  f.width = j.value("width", f.width);
  f.depth = j.value("depth", f.depth);
  f.steps = j.value("steps", f.steps);
  f.learning_rate = j.value("learning_rate", f.learning_rate);
  f.batch_size = j.value("batch_size", f.batch_size);
  f.eval_fraction = j.value("eval_fraction", f.eval_fraction);
  f.validation_fraction = j.value("validation_fraction", f.validation_fraction);
  f.bootstrap_resamples = j.value("bootstrap_resamples", f.bootstrap_resamples);
  return f;
}

std::string FormatNumber(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

}  // namespace

std::string MethodName(double beta) { return "beta_" + FormatNumber(beta); }

ExperimentConfig ExperimentConfig::Default() {
  ExperimentConfig c;
  c.model.transform = TransformSpec{};
  c.model.entropy = EntropyModelSpec{};
  c.model.entropy.latent_channels = c.model.transform.latent_channels;
  c.model.task = TaskKind::kDepth;
  c.model.num_classes = c.data.num_classes;
  c.secondary = {
      {TaskKind::kReconstruction,
       {SecondaryMode::kDirect, SecondaryMode::kScalable, SecondaryMode::kStandalone},
       {64.0, 16.0, 4.0, 1.0}},
      {TaskKind::kSegmentation, {SecondaryMode::kScalable}, {16.0, 4.0, 1.0, 0.25}},
  };
  return c;
}

nlohmann::json ExperimentConfig::ToJson() const {
  nlohmann::ordered_json j;
  j["data"] = {{"seed", data.seed},
               {"size", data.size},
               {"num_classes", data.num_classes},
               {"train_count", data.train_count},
               {"val_count", data.val_count},
               {"test_count", data.test_count},
               {"vinfo_count", data.vinfo_count},
               {"image_folder", data.image_folder}};
  j["model"] = {{"transform", taskcodec::ToJson(model.transform)},
                {"entropy", taskcodec::ToJson(model.entropy)},
                {"base_task", TaskKindName(model.task)}};
  j["base_lambdas"] = base_lambdas;
  j["beta"] = beta;
  j["run_baseline"] = run_baseline;
  nlohmann::json sec = nlohmann::json::array();
  for (const auto& s : secondary) {
    nlohmann::json modes = nlohmann::json::array();
    for (auto m : s.modes) modes.push_back(SecondaryModeName(m));
    sec.push_back({{"task", TaskKindName(s.task)}, {"modes", modes}, {"lambdas", s.lambdas}});
  }
  j["secondary"] = sec;
  j["training"] = {{"optimizer", "adam"},
                   {"learning_rate", training.learning_rate},
                   {"patience", training.patience},
                   {"max_epochs", training.max_epochs},
                   {"warm_start_max_epochs", training.warm_start_max_epochs},
                   {"batch_size", training.batch_size},
                   {"clip_norm", training.clip_norm},
                   {"quantization", QuantizationName(training.quantization)},
                   {"augmentation",
                    {{"horizontal_flip_prob", training.augmentation.horizontal_flip_prob},
                     {"jitter_brightness", training.augmentation.jitter_brightness},
                     {"jitter_contrast", training.augmentation.jitter_contrast},
                     {"jitter_saturation", training.augmentation.jitter_saturation}}}};
  j["seeds"] = seeds;
  j["match_tolerance"] = match_tolerance;
  j["vinfo"] = {{"enabled", vinfo.enabled},
                {"target_size", vinfo.target_size},
                {"family", FamilyToJson(vinfo.family)}};
  j["output_dir"] = output_dir;
  return j;
}

ExperimentConfig ExperimentConfig::FromJson(const nlohmann::json& j) {
  ExperimentConfig c = Default();
  try {
    if (j.contains("data")) {
      const auto& d = j["data"];
      c.data.seed = d.value("seed", c.data.seed);
      c.data.size = d.value("size", c.data.size);
      c.data.num_classes = d.value("num_classes", c.data.num_classes);
      c.data.train_count = d.value("train_count", c.data.train_count);
      c.data.val_count = d.value("val_count", c.data.val_count);
      c.data.test_count = d.value("test_count", c.data.test_count);
      c.data.vinfo_count = d.value("vinfo_count", c.data.vinfo_count);
      c.data.image_folder = d.value("image_folder", c.data.image_folder);
    }
    if (j.contains("model")) {
      const auto& m = j["model"];
      if (m.contains("transform")) c.model.transform = TransformSpecFromJson(m["transform"]);
      if (m.contains("entropy")) c.model.entropy = EntropyModelSpecFromJson(m["entropy"]);
      if (m.contains("base_task")) c.model.task = ParseTaskKind(m["base_task"].get<std::string>());
    }
    c.model.entropy.latent_channels = c.model.transform.latent_channels;
    c.model.entropy.side_input_channels = 0;
    c.model.num_classes = c.data.num_classes;
    c.base_lambdas = j.value("base_lambdas", c.base_lambdas);
    c.beta = j.value("beta", c.beta);
    c.run_baseline = j.value("run_baseline", c.run_baseline);
    if (j.contains("secondary")) {
      c.secondary.clear();
      for (const auto& s : j["secondary"]) {
        SecondaryTaskConfig t;
        t.task = ParseTaskKind(s.at("task").get<std::string>());
        for (const auto& m : s.at("modes")) t.modes.push_back(ParseSecondaryMode(m.get<std::string>()));
        t.lambdas = s.value("lambdas", std::vector<double>{});
        c.secondary.push_back(t);
      }
    }
    if (j.contains("training")) {
      const auto& t = j["training"];
      if (t.value("optimizer", std::string("adam")) != "adam") {
        throw ConfigError("training: only the adam optimizer is supported");
      }
      c.training.learning_rate = t.value("learning_rate", c.training.learning_rate);
      c.training.patience = t.value("patience", c.training.patience);
      c.training.max_epochs = t.value("max_epochs", c.training.max_epochs);
      c.training.warm_start_max_epochs =
          t.value("warm_start_max_epochs", c.training.warm_start_max_epochs);
      c.training.batch_size = t.value("batch_size", c.training.batch_size);
      c.training.clip_norm = t.value("clip_norm", c.training.clip_norm);
      if (t.contains("quantization")) {
        c.training.quantization = ParseQuantizationMode(t["quantization"].get<std::string>());
      }
      if (t.contains("augmentation")) {
        const auto& a = t["augmentation"];
        auto& p = c.training.augmentation;
        p.horizontal_flip_prob = a.value("horizontal_flip_prob", p.horizontal_flip_prob);
        p.jitter_brightness = a.value("jitter_brightness", p.jitter_brightness);
        p.jitter_contrast = a.value("jitter_contrast", p.jitter_contrast);
        p.jitter_saturation = a.value("jitter_saturation", p.jitter_saturation);
      }
    }
    c.seeds = j.value("seeds", c.seeds);
    c.match_tolerance = j.value("match_tolerance", c.match_tolerance);
    if (j.contains("vinfo")) {
      const auto& v = j["vinfo"];
      c.vinfo.enabled = v.value("enabled", c.vinfo.enabled);
      c.vinfo.target_size = v.value("target_size", c.vinfo.target_size);
      if (v.contains("family")) c.vinfo.family = FamilyFromJson(v["family"]);
    }
    c.output_dir = j.value("output_dir", c.output_dir);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.Validate();
  return c;
}

void ExperimentConfig::Validate() const {
  data.Validate();
  model.Validate();
  training.Validate();
  if (beta < 0.0) throw ConfigError("beta must be >= 0");
  if (base_lambdas.empty()) throw ConfigError("base_lambdas must not be empty");
  for (double l : base_lambdas) {
    if (!(l > 0.0)) throw ConfigError("lambdas must be positive");
  }
  if (seeds.empty()) throw ConfigError("seeds must not be empty");
  if (!(match_tolerance >= 0.0)) throw ConfigError("match_tolerance must be >= 0");
  const bool folder = !data.image_folder.empty();
  for (const auto& s : secondary) {
    if (s.modes.empty()) throw ConfigError("secondary task without modes");
    for (double l : s.lambdas) {
      if (!(l > 0.0)) throw ConfigError("lambdas must be positive");
    }
    for (auto m : s.modes) {
      if (m != SecondaryMode::kDirect && s.lambdas.empty()) {
        throw ConfigError("coded secondary modes need a lambda grid");
      }
      if (m == SecondaryMode::kStandalone &&
          std::find(s.modes.begin(), s.modes.end(), SecondaryMode::kScalable) == s.modes.end()) {
        throw ConfigError("standalone mode needs the scalable mode of the same task");
      }
      if (m == SecondaryMode::kStandalone && !(beta > 0.0)) {
        throw ConfigError("standalone mode needs a proposed method with beta > 0");
      }
    }
    if (folder && s.task != TaskKind::kReconstruction) {
      throw ConfigError("image folders carry no targets; only reconstruction tasks may run");
    }
  }
  if (folder && model.task != TaskKind::kReconstruction) {
    throw ConfigError("image folders carry no targets; the base task must be reconstruction");
  }
  if (vinfo.enabled) {
    vinfo.family.Validate();
    if (vinfo.target_size < 1 || data.size % vinfo.target_size != 0) {
      throw ConfigError("vinfo.target_size must divide the image size");
    }
    if (data.vinfo_count < 2) throw ConfigError("vinfo needs vinfo_count >= 2");
  }
}

std::vector<double> ExperimentConfig::Betas() const {
  std::vector<double> out;
  if (run_baseline && beta > 0.0) out.push_back(0.0);
  out.push_back(beta);
  return out;
}

nlohmann::json ApplyOverrides(nlohmann::json config, const std::vector<std::string>& sets) {
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override must be key=value: " + s);
    const std::string key = s.substr(0, eq);
    const std::string text = s.substr(eq + 1);
    nlohmann::json value;
    try {
      value = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception&) {
      value = text;
    }
    nlohmann::json* node = &config;
    std::istringstream parts(key);
    std::string part;
    std::vector<std::string> path;
    while (std::getline(parts, part, '.')) path.push_back(part);
    for (size_t i = 0; i + 1 < path.size(); ++i) {
      if (!node->is_object()) throw ConfigError("override path is not an object: " + key);
      node = &(*node)[path[i]];
      if (node->is_null()) *node = nlohmann::json::object();
    }
    if (!node->is_object()) throw ConfigError("override path is not an object: " + key);
    (*node)[path.back()] = value;
  }
  return config;
}

ExperimentConfig LoadExperimentConfig(const std::filesystem::path& path,
                                      const std::vector<std::string>& sets) {
  nlohmann::json j = nlohmann::json::object();
  if (!path.empty()) {
    try {
      j = nlohmann::json::parse(ReadTextFile(path));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(path.string() + ": " + e.what());
    }
  }
  return ExperimentConfig::FromJson(ApplyOverrides(j, sets));
}

bool DeterministicMode() {
  const char* v = std::getenv("TASKCODEC_DETERMINISTIC");
  return v != nullptr && std::string(v) == "1";
}

void ApplyDeterministicMode() {
  if (DeterministicMode()) omp_set_num_threads(1);
}

// ---------------------------------------------------------------------------
// Data

DataSplits BuildSplits(const DataConfig& config) {
  config.Validate();
  DataSplits s;
  if (!config.image_folder.empty()) {
    auto all = LoadImageFolder(config.image_folder);
    const size_t need = static_cast<size_t>(config.train_count + config.val_count + config.test_count);
    if (all.size() < need) {
      throw ConfigError("image folder holds " + std::to_string(all.size()) + " images, need " +
                        std::to_string(need));
    }
    s.train.assign(all.begin(), all.begin() + config.train_count);
    s.val.assign(all.begin() + config.train_count, all.begin() + config.train_count + config.val_count);
    s.test.assign(all.begin() + config.train_count + config.val_count, all.begin() + need);
    s.vinfo.assign(all.begin() + need,
                   all.begin() + std::min(all.size(), need + static_cast<size_t>(config.vinfo_count)));
    s.dataset_hash = "folder:" + config.image_folder;
    return s;
  }
  const DatasetSpec spec = config.Spec();
  auto all = GenerateDataset(spec.dataset_seed, spec.count, spec.size, spec.num_classes);
  auto take = [&](int begin, int count) {
    return std::vector<ShapesSample>(all.begin() + begin, all.begin() + begin + count);
  };
  int off = 0;
  s.train = take(off, config.train_count);
  off += config.train_count;
  s.val = take(off, config.val_count);
  off += config.val_count;
  s.test = take(off, config.test_count);
  off += config.test_count;
  s.vinfo = take(off, config.vinfo_count);
  const std::string manifest = DatasetManifestJson(spec);
  s.dataset_hash = Sha256Hex(std::span<const uint8_t>(
      reinterpret_cast<const uint8_t*>(manifest.data()), manifest.size()));
  return s;
}

namespace {

std::vector<const ShapesSample*> Pointers(const std::vector<ShapesSample>& samples, size_t begin,
                                          size_t end) {
  std::vector<const ShapesSample*> out;
  for (size_t i = begin; i < end; ++i) out.push_back(&samples[i]);
  return out;
}

Tensor<float> TargetFor(TaskKind kind, const Tensor<float>& image,
                        const std::vector<const ShapesSample*>& batch) {
  switch (kind) {
    case TaskKind::kReconstruction: return image;
    case TaskKind::kDepth: return BatchDepth(batch);
    case TaskKind::kSegmentation: return BatchSegmentation(batch);
  }
  throw ConfigError("bad task kind");
}

// Running totals of a task metric over an evaluation set.
struct TaskAccumulator {
  TaskAccumulator(TaskKind k, int classes) : kind(k), num_classes(classes) {}

  TaskKind kind;
  int num_classes;
  double sq = 0.0;
  double ce = 0.0;
  size_t elements = 0;
  size_t pixels = 0;
  std::vector<int32_t> pred_labels;
  std::vector<int32_t> true_labels;

  void Add(const Tensor<float>& prediction, const Tensor<float>& target) {
    if (kind == TaskKind::kSegmentation) {
      const LossValue<float> l = CrossEntropy(prediction, target);
      const size_t px = static_cast<size_t>(target.n()) * target.shape().plane();
      ce += l.value * px;
      pixels += px;
      const auto p = ArgmaxLabels(prediction);
      const auto t = LabelsFromTensor(target);
      pred_labels.insert(pred_labels.end(), p.begin(), p.end());
      true_labels.insert(true_labels.end(), t.begin(), t.end());
    } else {
      RequireSameShape(prediction.shape(), target.shape(), "evaluation");
      for (size_t i = 0; i < prediction.size(); ++i) {
        const double d = static_cast<double>(prediction[i]) - target[i];
        sq += d * d;
      }
      elements += prediction.size();
    }
  }
  double Rmse() const { return elements ? std::sqrt(sq / elements) : 0.0; }
  double Distortion() const { return kind == TaskKind::kSegmentation ? ce / pixels : Rmse(); }
  double Miou() const {
    return kind == TaskKind::kSegmentation ? MeanIou(pred_labels, true_labels, num_classes) : 0.0;
  }
  double Psnr() const { return elements ? PsnrFromMse(sq / elements) : 0.0; }
};

constexpr size_t kEvalBatch = 32;

}  // namespace

nlohmann::json BaseEval::ToJson() const {
  return {{"bpp", bpp},     {"distortion", distortion}, {"task_rmse", task_rmse},
          {"miou", miou},   {"psnr", psnr},             {"aux_rmse", aux_rmse},
          {"loss", loss}};
}

nlohmann::json SecondaryEval::ToJson() const {
  return {{"base_bpp", base_bpp}, {"enhancement_bpp", enhancement_bpp},
          {"total_bpp", total_bpp()}, {"distortion", distortion},
          {"rmse", rmse}, {"psnr", psnr}, {"miou", miou}, {"loss", loss}};
}

BaseEval EvaluateBase(BaseModel& model, const std::vector<ShapesSample>& samples, double lambda,
                      double beta) {
  TaskAccumulator task{model.spec().task, model.spec().num_classes};
  TaskAccumulator aux{TaskKind::kReconstruction, model.spec().num_classes};
  double bits = 0.0;
  size_t pixels = 0;
  for (size_t b = 0; b < samples.size(); b += kEvalBatch) {
    const auto batch = Pointers(samples, b, std::min(samples.size(), b + kEvalBatch));
    const Tensor<float> x = BatchImages(batch);
    const Tensor<float> y_hat = model.EncodeLatent(x);
    const auto params = model.entropy.Forward(y_hat, nullptr);
    bits += EstimateRate(y_hat, params).total_bits;
    pixels += static_cast<size_t>(x.n()) * x.shape().plane();
    task.Add(model.synthesis.Forward(y_hat), TargetFor(model.spec().task, x, batch));
    if (beta > 0.0) aux.Add(model.aux.Forward(y_hat), x);
  }
  BaseEval e;
  e.bpp = bits / pixels;
  e.distortion = task.Distortion();
  e.task_rmse = task.Rmse();
  e.miou = task.Miou();
  e.psnr = task.Psnr();
  e.aux_rmse = beta > 0.0 ? aux.Rmse() : 0.0;
  e.loss = lambda * e.distortion + e.bpp + beta * e.aux_rmse;
  return e;
}

SecondaryEval EvaluateSecondary(BaseModel& base, SecondaryModel& model,
                                const std::vector<ShapesSample>& samples, double lambda,
                                bool zero_side) {
  TaskAccumulator task{model.spec().task, model.spec().num_classes};
  double base_bits = 0.0;
  double enh_bits = 0.0;
  size_t pixels = 0;
  for (size_t b = 0; b < samples.size(); b += kEvalBatch) {
    const auto batch = Pointers(samples, b, std::min(samples.size(), b + kEvalBatch));
    const Tensor<float> x = BatchImages(batch);
    Tensor<float> y_b = base.EncodeLatent(x);
    base_bits += EstimateRate(y_b, base.entropy.Forward(y_b, nullptr)).total_bits;
    pixels += static_cast<size_t>(x.n()) * x.shape().plane();
    if (zero_side) y_b.Fill(0.0f);
    Tensor<float> prediction;
    if (model.coded()) {
      const Tensor<float> y_e = SteRound(model.analysis.Forward(x));
      enh_bits += EstimateRate(y_e, model.entropy.Forward(y_e, &y_b)).total_bits;
      prediction = model.synthesis.Forward(y_e);
    } else {
      prediction = model.synthesis.Forward(y_b);
    }
    task.Add(prediction, TargetFor(model.spec().task, x, batch));
  }
  SecondaryEval e;
  e.base_bpp = base_bits / pixels;
  e.enhancement_bpp = enh_bits / pixels;
  e.distortion = task.Distortion();
  e.rmse = task.Rmse();
  e.psnr = task.Psnr();
  e.miou = task.Miou();
  e.loss = lambda * e.distortion + e.enhancement_bpp;
  return e;
}

std::unique_ptr<BaseModel> LoadBaseModel(const CheckpointBundle& bundle) {
  if (bundle.kind != "base") throw ConfigError("checkpoint is not a base bundle");
  auto model = std::make_unique<BaseModel>(BaseModelSpecFromJson(bundle.meta.at("spec")));
  ImportParams(model->Parameters(), bundle.params);
  return model;
}

std::unique_ptr<SecondaryModel> LoadSecondaryModel(const CheckpointBundle& bundle) {
  if (bundle.kind != "secondary") throw ConfigError("checkpoint is not a secondary bundle");
  auto model =
      std::make_unique<SecondaryModel>(SecondaryModelSpecFromJson(bundle.meta.at("spec")));
  ImportParams(model->Parameters(), bundle.params);
  return model;
}

// ---------------------------------------------------------------------------
// Training

namespace {

struct StepResult {
  double total = 0.0;
  nlohmann::ordered_json breakdown;
};

using StepFn = std::function<StepResult(const std::vector<const ShapesSample*>&, Rng&)>;

struct FitResult {
  nlohmann::json history = nlohmann::json::array();
  int epochs = 0;
  int best_epoch = 0;
  double best_val = 0.0;
  bool early_stopped = false;
};

// Adam with early stopping on the held-out loss; restores the best
// parameters (epoch 0 is the initial state).
FitResult Fit(const ParameterList<float>& params, const TrainingConfig& tc, int max_epochs,
              const std::vector<ShapesSample>& train, uint64_t seed, const StepFn& step,
              const std::function<double()>& validate, const TrainHooks& hooks,
              const std::string& tag) {
  const LogFn& log = hooks.log;
  AdamOptions options;
  options.learning_rate = tc.learning_rate;
  options.clip_norm = tc.clip_norm;
  Adam<float> opt(params, options);
  FitResult r;
  r.best_val = validate();
  std::vector<Tensor<float>> best;
  auto snapshot = [&]() {
    best.clear();
    for (const auto& p : params) best.push_back(p.param->value);
  };
  snapshot();
  r.history.push_back({{"epoch", 0}, {"train_loss", nullptr}, {"val_loss", r.best_val}});

  const size_t batch = std::min<size_t>(tc.batch_size, train.size());
  const size_t steps = train.size() / batch;
  std::vector<size_t> order(train.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  const auto start = std::chrono::steady_clock::now();
  for (int epoch = 1; epoch <= max_epochs; ++epoch) {
    Rng rng(MixSeed(seed, static_cast<uint64_t>(epoch)));
    rng.Shuffle(order);
    double train_loss = 0.0;
    for (size_t s = 0; s < steps; ++s) {
      std::vector<ShapesSample> augmented;
      augmented.reserve(batch);
      for (size_t b = 0; b < batch; ++b) {
        augmented.push_back(Augment(train[order[s * batch + b]], tc.augmentation, rng));
      }
      const auto ptrs = Pointers(augmented, 0, augmented.size());
      opt.ZeroGrad();
      StepResult result = step(ptrs, rng);
      const double loss = result.total;
      if (hooks.step_log != nullptr) {
        nlohmann::ordered_json line;
        line["run"] = tag;
        line["epoch"] = epoch;
        line["step"] = s;
        for (auto& [k, v] : result.breakdown.items()) line[k] = v;
        *hooks.step_log << line.dump() << "\n";
      }
      if (!std::isfinite(loss)) {
        throw NumericError(tag + ": non-finite training loss at epoch " + std::to_string(epoch) +
                           ", step " + std::to_string(s));
      }
      opt.Step();
      train_loss += loss;
    }
    train_loss /= steps;
    const double val = validate();
    if (!std::isfinite(val)) {
      throw NumericError(tag + ": non-finite validation loss at epoch " + std::to_string(epoch));
    }
    r.history.push_back({{"epoch", epoch}, {"train_loss", train_loss}, {"val_loss", val}});
    r.epochs = epoch;
    if (val < r.best_val) {
      r.best_val = val;
      r.best_epoch = epoch;
      snapshot();
    } else if (epoch - r.best_epoch >= tc.patience) {
      r.early_stopped = true;
      break;
    }
  }
  for (size_t k = 0; k < params.size(); ++k) params[k].param->value = best[k];
  if (log) {
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s: %d epochs (best %d, val %.5f)%s in %.1fs", tag.c_str(),
                  r.epochs, r.best_epoch, r.best_val, r.early_stopped ? " early-stopped" : "",
                  secs);
    log(buf);
  }
  return r;
}

int EpochCap(const TrainingConfig& tc, bool warm) {
  return warm && tc.warm_start_max_epochs > 0 ? tc.warm_start_max_epochs : tc.max_epochs;
}

void AddInPlace(Tensor<float>& a, const Tensor<float>& b) {
  RequireSameShape(a.shape(), b.shape(), "gradient sum");
  for (size_t i = 0; i < a.size(); ++i) a[i] += b[i];
}

ParameterList<float> Trainable(const ParameterList<float>& all) {
  ParameterList<float> out;
  for (const auto& p : all) {
    if (p.param->trainable) out.push_back(p);
  }
  return out;
}

}  // namespace

CheckpointBundle TrainBase(const ExperimentConfig& config, const DataSplits& data, double lambda,
                           double beta, uint64_t seed, const CheckpointBundle* init,
                           const TrainHooks& hooks) {
  if (beta < 0.0) throw ConfigError("beta must be >= 0");
  BaseModel model(config.model);
  model.Initialize(seed);
  if (init != nullptr) {
    if (init->kind != "base" || BaseModelSpecFromJson(init->meta.at("spec")) != config.model) {
      throw ConfigError("warm start: architecture specs do not match");
    }
    ImportParams(model.Parameters(), init->params);
  }
  // With beta = 0 the auxiliary head is left out of the graph.
  SetTrainable(model.AuxParameters(), beta > 0.0);
  const ParameterList<float> params = Trainable(model.Parameters());
  const TaskKind kind = config.model.task;
  const bool noise = config.training.quantization == QuantizationMode::kUniformNoise;

  StepFn step = [&](const std::vector<const ShapesSample*>& batch, Rng& rng) {
    const Tensor<float> x = BatchImages(batch);
    const Tensor<float> target = TargetFor(kind, x, batch);
    const Tensor<float> y = model.analysis.Forward(x);
    const Tensor<float> y_hat = QuantizeLatent(y, config.training.quantization, true, &rng);
    const auto gp = model.entropy.Forward(y_hat, nullptr);
    const auto rate = EstimateRate(y_hat, gp, noise);
    const Tensor<float> z = model.synthesis.Forward(y_hat);
    Tensor<float> x_a;
    if (beta > 0.0) x_a = model.aux.Forward(y_hat);
    const auto loss = BaseLoss(x, kind, target, z, beta > 0.0 ? &x_a : nullptr,
                               rate.total_bits, lambda, beta);
    Tensor<float> dy(y_hat.shape()), dmu(y_hat.shape()), dsigma(y_hat.shape());
    EstimateRateBackward(y_hat, gp, loss.dtotal_bits, dy, dmu, dsigma);
    AddInPlace(dy, model.entropy.Backward(dmu, dsigma));
    AddInPlace(dy, model.synthesis.Backward(loss.dprediction));
    if (beta > 0.0) AddInPlace(dy, model.aux.Backward(loss.dreconstruction));
    model.analysis.Backward(SteRoundBackward(dy));
    const auto& bd = loss.breakdown;
    return StepResult{bd.total,
                      {{"task_distortion", bd.task_distortion},
                       {"rate_bpp", bd.rate_bits},
                       {"aux_recon", bd.aux_recon},
                       {"lambda", bd.lambda},
                       {"beta", bd.beta},
                       {"total", bd.total}}};
  };
  auto validate = [&]() { return EvaluateBase(model, data.val, lambda, beta).loss; };
  const std::string tag = "base " + MethodName(beta) + " lambda=" + FormatNumber(lambda) +
                          " seed=" + std::to_string(seed);
  const FitResult fit =
      Fit(params, config.training, EpochCap(config.training, init != nullptr), data.train,
          MixSeed(seed, std::hash<std::string>{}(tag)), step, validate, hooks, tag);

  CheckpointBundle b;
  b.kind = "base";
  b.config = config.ToJson();
  b.meta = {{"spec", ToJson(config.model)},
            {"lambda", lambda},
            {"beta", beta},
            {"method", MethodName(beta)},
            {"seed", seed},
            {"warm_start", init != nullptr ? nlohmann::json(init->ContentHash()) : nlohmann::json()},
            {"epochs", fit.epochs},
            {"best_epoch", fit.best_epoch},
            {"early_stopped", fit.early_stopped},
            {"dataset_hash", data.dataset_hash},
            {"test", EvaluateBase(model, data.test, lambda, beta).ToJson()}};
  b.history = fit.history;
  SetTrainable(model.AuxParameters(), true);
  b.params = ExportParams(model.Parameters());
  return b;
}

CheckpointBundle TrainSecondary(const ExperimentConfig& config, const DataSplits& data,
                                const CheckpointBundle& base, TaskKind task, SecondaryMode mode,
                                double lambda, uint64_t seed, const CheckpointBundle* init,
                                const TrainHooks& hooks) {
  auto base_model = LoadBaseModel(base);
  const std::string base_hash_before = base.ContentHash();
  const double base_beta = base.meta.at("beta").get<double>();
  SetTrainable(base_model->Parameters(), false);
  const SecondaryModelSpec spec = MakeSecondarySpec(base_model->spec(), task, mode);
  SecondaryModel model(spec);
  model.Initialize(seed);

  const bool standalone = mode == SecondaryMode::kStandalone;
  if (standalone) {
    if (!(base_beta > 0.0)) {
      throw ConfigError("standalone mode needs a base bundle from the proposed method (beta > 0)");
    }
    if (init == nullptr || init->kind != "secondary" ||
        init->meta.at("mode").get<std::string>() != "scalable" ||
        init->meta.at("base_hash").get<std::string>() != base_hash_before) {
      throw ConfigError("standalone mode needs the scalable bundle trained on the same base");
    }
  }
  if (init != nullptr) {
    SecondaryModelSpec init_spec = SecondaryModelSpecFromJson(init->meta.at("spec"));
    init_spec.mode = mode;
    if (init_spec != spec) throw ConfigError("warm start: architecture specs do not match");
    SecondaryModel donor(SecondaryModelSpecFromJson(init->meta.at("spec")));
    ImportParams(donor.Parameters(), init->params);
    ImportParams(model.Parameters(), ExportParams(donor.Parameters()));
  }
  if (standalone) {
    SetTrainable(model.Parameters(), false);
    SetTrainable(model.EntropyParameters(), true);
  }
  const ParameterList<float> params = Trainable(model.Parameters());
  const ParameterList<float> frozen_base = base_model->AnalysisParameters();
  const bool noise = config.training.quantization == QuantizationMode::kUniformNoise;

  StepFn step = [&](const std::vector<const ShapesSample*>& batch, Rng& rng) {
    const Tensor<float> x = BatchImages(batch);
    const Tensor<float> target = TargetFor(task, x, batch);
    Tensor<float> y_b = base_model->EncodeLatent(x);
    const size_t pixels = static_cast<size_t>(x.n()) * x.shape().plane();
    if (mode == SecondaryMode::kDirect) {
      const Tensor<float> z = model.synthesis.Forward(y_b);
      const auto d = EnhancementLoss(task, target, z, 0.0, pixels, 1.0, frozen_base);
      model.synthesis.Backward(d.dprediction);
      return StepResult{d.breakdown.total,
                        {{"task_distortion", d.breakdown.task_distortion},
                         {"total", d.breakdown.total}}};
    }
    if (standalone) y_b.Fill(0.0f);
    const Tensor<float> y = model.analysis.Forward(x);
    const Tensor<float> y_hat = QuantizeLatent(y, config.training.quantization, true, &rng);
    const auto gp = model.entropy.Forward(y_hat, &y_b);
    const auto rate = EstimateRate(y_hat, gp, noise);
    const Tensor<float> z = model.synthesis.Forward(y_hat);
    const auto loss = EnhancementLoss(task, target, z, rate.total_bits, pixels, lambda, frozen_base);
    Tensor<float> dy(y_hat.shape()), dmu(y_hat.shape()), dsigma(y_hat.shape());
    EstimateRateBackward(y_hat, gp, loss.dtotal_bits, dy, dmu, dsigma);
    AddInPlace(dy, model.entropy.Backward(dmu, dsigma));
    if (!standalone) {
      AddInPlace(dy, model.synthesis.Backward(loss.dprediction));
      model.analysis.Backward(SteRoundBackward(dy));
    }
    const auto& bd = loss.breakdown;
    return StepResult{bd.total,
                      {{"task_distortion", bd.task_distortion},
                       {"conditional_rate_bpp", bd.conditional_rate_bits},
                       {"lambda", bd.lambda},
                       {"total", bd.total}}};
  };
  const double eval_lambda = mode == SecondaryMode::kDirect ? 1.0 : lambda;
  auto validate = [&]() {
    return EvaluateSecondary(*base_model, model, data.val, eval_lambda, standalone).loss;
  };
  const std::string tag = std::string(TaskKindName(task)) + " " + SecondaryModeName(mode) +
                          " on " + base.meta.at("method").get<std::string>() +
                          " lambda=" + FormatNumber(lambda) + " seed=" + std::to_string(seed);
  const FitResult fit =
      Fit(params, config.training, EpochCap(config.training, init != nullptr), data.train,
          MixSeed(seed, std::hash<std::string>{}(tag)), step, validate, hooks, tag);

  if (HashParams(ExportParams(base_model->Parameters())) != base_hash_before) {
    throw ContractViolation("secondary training modified the frozen base");
  }
  CheckpointBundle b;
  b.kind = "secondary";
  b.config = config.ToJson();
  b.meta = {{"spec", ToJson(spec)},
            {"lambda", eval_lambda},
            {"mode", SecondaryModeName(mode)},
            {"task", TaskKindName(task)},
            {"seed", seed},
            {"base_hash", base_hash_before},
            {"base_beta", base_beta},
            {"base_method", base.meta.at("method")},
            {"epochs", fit.epochs},
            {"best_epoch", fit.best_epoch},
            {"early_stopped", fit.early_stopped},
            {"dataset_hash", data.dataset_hash},
            {"test",
             EvaluateSecondary(*base_model, model, data.test, eval_lambda, standalone).ToJson()}};
  b.history = fit.history;
  SetTrainable(model.Parameters(), true);
  b.params = ExportParams(model.Parameters());
  return b;
}

// ---------------------------------------------------------------------------
// Matched-rate selection

std::map<std::string, size_t> SelectMatchedRate(
    const std::map<std::string, std::vector<double>>& bpps, double tolerance) {
  if (bpps.empty()) throw ConfigError("matched rate: no methods");
  for (const auto& [method, list] : bpps) {
    if (list.empty()) throw ConfigError("matched rate: method " + method + " has no points");
    for (double v : list) {
      if (!(v > 0.0)) throw ConfigError("matched rate: bpp must be positive");
    }
  }
  std::vector<double> midpoints;
  for (auto a = bpps.begin(); a != bpps.end(); ++a) {
    for (auto b = std::next(a); b != bpps.end(); ++b) {
      double best = INFINITY;
      double mid = 0.0;
      for (double u : a->second)
        for (double v : b->second) {
          const double d = std::abs(std::log(u / v));
          if (d < best) {
            best = d;
            mid = std::sqrt(u * v);
          }
        }
      midpoints.push_back(mid);
    }
  }
  double target;
  if (midpoints.empty()) {
    target = bpps.begin()->second.front();
  } else {
    std::sort(midpoints.begin(), midpoints.end());
    const size_t n = midpoints.size();
    target = n % 2 ? midpoints[n / 2] : std::sqrt(midpoints[n / 2 - 1] * midpoints[n / 2]);
  }
  std::map<std::string, size_t> chosen;
  double lo = INFINITY, hi = 0.0;
  for (const auto& [method, list] : bpps) {
    size_t best = 0;
    for (size_t i = 1; i < list.size(); ++i) {
      if (std::abs(std::log(list[i] / target)) < std::abs(std::log(list[best] / target))) best = i;
    }
    chosen[method] = best;
    lo = std::min(lo, list[best]);
    hi = std::max(hi, list[best]);
  }
  if (hi / lo - 1.0 > tolerance) {
    std::string msg = "matched rate: no points within " + FormatNumber(100.0 * tolerance) +
                      "% of each other; available bpps:";
    for (const auto& [method, list] : bpps) {
      msg += " " + method + " {";
      for (size_t i = 0; i < list.size(); ++i) msg += (i ? ", " : "") + FormatNumber(list[i]);
      msg += "}";
    }
    throw ConfigError(msg);
  }
  return chosen;
}

Tensor<float> BaseLatents(BaseModel& model, const std::vector<ShapesSample>& samples) {
  if (samples.empty()) throw ConfigError("no samples to encode");
  std::vector<Tensor<float>> parts;
  for (size_t b = 0; b < samples.size(); b += kEvalBatch) {
    parts.push_back(
        model.EncodeLatent(BatchImages(Pointers(samples, b, std::min(samples.size(), b + kEvalBatch)))));
  }
  Tensor<float> y(static_cast<int>(samples.size()), parts[0].c(), parts[0].h(), parts[0].w());
  size_t off = 0;
  for (const auto& p : parts) {
    std::copy(p.data(), p.data() + p.size(), y.data() + off);
    off += p.size();
  }
  return y;
}

Tensor<float> DownsampledImages(const std::vector<ShapesSample>& samples, int side) {
  if (samples.empty()) throw ConfigError("vinfo: no samples");
  const int s = samples.front().image.h();
  if (side < 1 || s % side != 0) throw ConfigError("vinfo: target size must divide image size");
  const int f = s / side;
  Tensor<float> out(static_cast<int>(samples.size()), 3 * side * side, 1, 1);
  for (size_t n = 0; n < samples.size(); ++n) {
    const Tensor<float>& img = samples[n].image;
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x) {
          double acc = 0.0;
          for (int dy = 0; dy < f; ++dy)
            for (int dx = 0; dx < f; ++dx) acc += img.at(0, c, y * f + dy, x * f + dx);
          out.at(static_cast<int>(n), (c * side + y) * side + x, 0, 0) =
              static_cast<float>(acc / (f * f));
        }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Orchestration

nlohmann::json SeedOutcome::ToJson() const {
  auto bd = [](const BdRateResult& r) {
    return r.overlap ? nlohmann::json(r.percent) : nlohmann::json("no_overlap");
  };
  nlohmann::ordered_json j;
  j["seed"] = seed;
  j["completed"] = completed;
  if (!error.empty()) j["error"] = error;
  j["matched_base_bpp"] = matched_base_bpp;
  j["matched_lambda"] = matched_lambda;
  j["direct_rmse"] = direct_rmse;
  j["direct_psnr"] = direct_psnr;
  j["base_bd_rate_percent"] = bd(base_bd);
  j["scalable_bd_rate_percent"] = bd(scalable_bd);
  if (has_standalone) {
    j["standalone_gap_bpp"] = standalone_gap_bpp;
    j["standalone_gaps"] = standalone_gaps;
  }
  j["vinfo_I_V"] = vinfo_i_v;
  return j;
}

namespace {

MetricKind MetricFor(TaskKind kind) {
  switch (kind) {
    case TaskKind::kReconstruction: return MetricKind::kPsnr;
    case TaskKind::kDepth: return MetricKind::kRmse;
    case TaskKind::kSegmentation: return MetricKind::kMiou;
  }
  return MetricKind::kRmse;
}

double MetricValue(TaskKind kind, double rmse, double psnr, double miou) {
  switch (MetricFor(kind)) {
    case MetricKind::kPsnr: return psnr;
    case MetricKind::kRmse: return rmse;
    case MetricKind::kMiou: return miou;
  }
  return rmse;
}

std::vector<double> Descending(std::vector<double> v) {
  std::sort(v.begin(), v.end(), std::greater<>());
  return v;
}

std::string LambdaTag(double l) { return "l" + FormatNumber(l); }

struct BdEntry {
  std::string curve;
  uint64_t seed;
  std::string anchor_id;
  std::string test_id;
  BdRateResult result;
  std::string error;
};

BdEntry ComputeBd(const std::vector<RDPoint>& points, const std::string& curve, uint64_t seed,
                  const std::string& anchor_method, const std::string& anchor_mode,
                  const std::string& test_method, const std::string& test_mode) {
  BdEntry e{curve, seed, anchor_method + "/" + anchor_mode, test_method + "/" + test_mode, {}, {}};
  try {
    RDCurve a = SelectCurve(points, anchor_method, anchor_mode, seed);
    RDCurve t = SelectCurve(points, test_method, test_mode, seed);
    e.result = BdRate(a, t);
  } catch (const std::exception& ex) {
    e.error = ex.what();
  }
  return e;
}

void WriteOutputs(const std::filesystem::path& dir, const ExperimentConfig& config,
                  const ExperimentSummary& summary, const std::vector<BdEntry>& bd,
                  const nlohmann::json& vinfo, const nlohmann::json& checkpoints,
                  const std::string& dataset_hash, const std::string& status) {
  WriteTextFile(dir / "curves.csv", CurvesToCsv(summary.points));
  nlohmann::ordered_json bdj = nlohmann::ordered_json::array();
  for (const auto& e : bd) {
    nlohmann::ordered_json j = nlohmann::ordered_json::parse(BdRateJson(e.anchor_id, e.test_id, e.result));
    j["curve"] = e.curve;
    j["seed"] = e.seed;
    if (!e.error.empty()) j["error"] = e.error;
    bdj.push_back(j);
  }
  WriteTextFile(dir / "bdrate.json", bdj.dump(2) + "\n");
  WriteTextFile(dir / "vinfo.json", vinfo.dump(2) + "\n");
  nlohmann::ordered_json m;
  m["status"] = status;
  if (!summary.failure.empty()) m["failure"] = summary.failure;
  m["deterministic"] = DeterministicMode();
  m["dataset"] = nlohmann::json::parse(DatasetManifestJson(config.data.Spec()));
  m["dataset_hash"] = dataset_hash;
  m["config"] = config.ToJson();
  nlohmann::json seeds = nlohmann::json::array();
  for (const auto& s : summary.seeds) seeds.push_back(s.ToJson());
  m["seeds"] = seeds;
  m["checkpoints"] = checkpoints;
  WriteTextFile(dir / "manifest.json", m.dump(2) + "\n");
}

}  // namespace

std::string DescribePlan(const ExperimentConfig& config) {
  std::ostringstream out;
  auto list = [](const std::vector<double>& v) {
    std::string s = "[";
    for (size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + FormatNumber(v[i]);
    return s + "]";
  };
  const auto betas = config.Betas();
  int runs = 0;
  out << "experiment -> " << config.output_dir << "\n";
  out << "base task " << TaskKindName(config.model.task) << ", image " << config.data.size << "x"
      << config.data.size << ", M=" << config.model.transform.latent_channels << "\n";
  out << "seeds " << config.seeds.size() << ", methods:";
  for (double b : betas) out << " " << MethodName(b);
  out << "\n";
  out << "phase 1: base sweep per method, lambda_b " << list(Descending(config.base_lambdas))
      << " (warm-started in order)\n";
  runs += static_cast<int>(betas.size() * config.base_lambdas.size());
  out << "select matched base rate (tolerance " << FormatNumber(100 * config.match_tolerance)
      << "%)\n";
  for (const auto& s : config.secondary) {
    for (auto m : s.modes) {
      out << "phase 2: " << TaskKindName(s.task) << " " << SecondaryModeName(m);
      if (m == SecondaryMode::kDirect) {
        out << " on every method\n";
        runs += static_cast<int>(betas.size());
      } else if (m == SecondaryMode::kScalable) {
        out << " lambda_e " << list(Descending(s.lambdas)) << " on every method\n";
        runs += static_cast<int>(betas.size() * s.lambdas.size());
      } else {
        out << " lambda_e " << list(Descending(s.lambdas)) << " on " << MethodName(config.beta)
            << " only\n";
        runs += static_cast<int>(s.lambdas.size());
      }
    }
  }
  if (config.vinfo.enabled) {
    out << "v-information: " << FamilyKindName(config.vinfo.family.kind) << " family, target "
        << config.vinfo.target_size << "x" << config.vinfo.target_size << " image\n";
  }
  out << "training runs: " << runs << " per seed, " << runs * config.seeds.size() << " total\n";
  return out.str();
}

ExperimentSummary RunExperiment(const ExperimentConfig& config, const RunOptions& options) {
  config.Validate();
  ApplyDeterministicMode();
  const LogFn& log = options.log;
  ExperimentSummary summary;
  if (options.dry_run) {
    if (log) log(DescribePlan(config));
    return summary;
  }
  const std::filesystem::path dir = config.output_dir;
  std::filesystem::create_directories(dir / "checkpoints");
  WriteTextFile(dir / "config.json", config.ToJson().dump(2) + "\n");
  const DataSplits data = BuildSplits(config.data);
  std::ofstream step_log(dir / "train_log.jsonl");
  const TrainHooks hooks{log, &step_log};
  const auto betas = config.Betas();
  const std::string proposed = MethodName(config.beta);
  const std::string baseline = MethodName(0.0);
  const bool compare = betas.size() > 1;
  std::vector<BdEntry> bd;
  nlohmann::json vinfo = {{"target", "downsampled_image"},
                          {"target_size", config.vinfo.target_size},
                          {"reports", nlohmann::json::array()}};
  nlohmann::json checkpoints = nlohmann::json::array();
  const TaskKind base_task = config.model.task;

  auto save = [&](const CheckpointBundle& b, const std::filesystem::path& rel) {
    SaveCheckpoint(b, dir / rel);
    checkpoints.push_back({{"path", rel.string()}, {"hash", b.ContentHash()}});
  };

  for (uint64_t seed : config.seeds) {
    SeedOutcome outcome;
    outcome.seed = seed;
    const std::filesystem::path seed_dir = "checkpoints/seed" + std::to_string(seed);
    try {
      // Phase 1: base sweeps.
      std::map<std::string, std::vector<CheckpointBundle>> sweeps;
      std::map<std::string, std::vector<double>> sweep_bpp;
      for (double beta : betas) {
        const std::string method = MethodName(beta);
        const CheckpointBundle* prev = nullptr;
        for (double lambda : Descending(config.base_lambdas)) {
          sweeps[method].push_back(TrainBase(config, data, lambda, beta, seed, prev, hooks));
          const CheckpointBundle& b = sweeps[method].back();
          prev = &b;
          save(b, seed_dir / method / ("base_" + LambdaTag(lambda) + ".tckp"));
          const auto& t = b.meta.at("test");
          RDPoint p{method, "base", lambda, static_cast<int64_t>(seed), t.at("bpp").get<double>(),
                    MetricFor(base_task),
                    MetricValue(base_task, t.at("task_rmse").get<double>(),
                                t.at("psnr").get<double>(), t.at("miou").get<double>())};
          summary.points.push_back(p);
          sweep_bpp[method].push_back(p.bpp);
        }
      }
      if (compare) {
        bd.push_back(ComputeBd(summary.points, "base", seed, baseline, "base", proposed, "base"));
        outcome.base_bd = bd.back().result;
      }
      // Matched-rate selection.
      const auto chosen = SelectMatchedRate(sweep_bpp, config.match_tolerance);
      std::map<std::string, const CheckpointBundle*> matched;
      for (const auto& [method, index] : chosen) {
        matched[method] = &sweeps[method][index];
        outcome.matched_base_bpp[method] = sweep_bpp[method][index];
        outcome.matched_lambda[method] = sweeps[method][index].meta.at("lambda").get<double>();
      }
      if (log) {
        std::string msg = "seed " + std::to_string(seed) + " matched base rates:";
        for (const auto& [m, v] : outcome.matched_base_bpp) msg += " " + m + "=" + FormatNumber(v);
        log(msg);
      }
      // V-information of the matched base representations.
      if (config.vinfo.enabled && !data.vinfo.empty()) {
        VInfoData vd;
        vd.z_values = DownsampledImages(data.vinfo, config.vinfo.target_size);
        for (const auto& [method, bundle] : matched) {
          auto model = LoadBaseModel(*bundle);
          vd.y = BaseLatents(*model, data.vinfo);
          const VInfoReport r = EstimateVInformation(vd, config.vinfo.family, seed);
          outcome.vinfo_i_v[method] = r.i_v;
          nlohmann::json rj = nlohmann::json::parse(r.ToJson());
          rj["method"] = method;
          rj["experiment_seed"] = seed;
          rj["base_bpp"] = outcome.matched_base_bpp[method];
          vinfo["reports"].push_back(rj);
        }
      }
      // Phase 2.
      for (const auto& sec : config.secondary) {
        const std::string task_name = TaskKindName(sec.task);
        const MetricKind metric = MetricFor(sec.task);
        std::map<std::string, std::vector<CheckpointBundle>> scalable;
        std::map<std::string, std::vector<double>> scalable_enh_bpp;
        for (double beta : betas) {
          const std::string method = MethodName(beta);
          const CheckpointBundle& base = *matched[method];
          const double base_lambda = base.meta.at("lambda").get<double>();
          for (SecondaryMode mode : sec.modes) {
            const std::string mode_name = SecondaryModeName(mode);
            if (mode == SecondaryMode::kDirect) {
              const CheckpointBundle b = TrainSecondary(config, data, base, sec.task, mode, 1.0,
                                                        seed, nullptr, hooks);
              save(b, seed_dir / method / (task_name + "_direct.tckp"));
              const auto& t = b.meta.at("test");
              summary.points.push_back(
                  {method, "direct", base_lambda, static_cast<int64_t>(seed),
                   t.at("base_bpp").get<double>(), metric,
                   MetricValue(sec.task, t.at("rmse").get<double>(), t.at("psnr").get<double>(),
                               t.at("miou").get<double>())});
              if (sec.task == TaskKind::kReconstruction) {
                outcome.direct_rmse[method] = t.at("rmse").get<double>();
                outcome.direct_psnr[method] = t.at("psnr").get<double>();
              }
            } else if (mode == SecondaryMode::kScalable) {
              const CheckpointBundle* prev = nullptr;
              for (double lambda : Descending(sec.lambdas)) {
                scalable[method].push_back(
                    TrainSecondary(config, data, base, sec.task, mode, lambda, seed, prev, hooks));
                const CheckpointBundle& b = scalable[method].back();
                prev = &b;
                save(b, seed_dir / method / (task_name + "_scalable_" + LambdaTag(lambda) + ".tckp"));
                const auto& t = b.meta.at("test");
                scalable_enh_bpp[method].push_back(t.at("enhancement_bpp").get<double>());
                summary.points.push_back(
                    {method, "scalable", lambda, static_cast<int64_t>(seed),
                     t.at("total_bpp").get<double>(), metric,
                     MetricValue(sec.task, t.at("rmse").get<double>(), t.at("psnr").get<double>(),
                                 t.at("miou").get<double>())});
              }
            }
          }
        }
        if (compare && scalable.count(proposed) && scalable.count(baseline)) {
          const std::string mode_name = "scalable";
          bd.push_back(ComputeBd(summary.points, task_name + "_scalable", seed, baseline,
                                 mode_name, proposed, mode_name));
          if (sec.task == TaskKind::kReconstruction) outcome.scalable_bd = bd.back().result;
        }
        const bool wants_standalone =
            std::find(sec.modes.begin(), sec.modes.end(), SecondaryMode::kStandalone) !=
            sec.modes.end();
        if (wants_standalone) {
          const CheckpointBundle& base = *matched[proposed];
          std::vector<double> gaps;
          const auto lambdas = Descending(sec.lambdas);
          for (size_t i = 0; i < lambdas.size(); ++i) {
            const CheckpointBundle& init = scalable[proposed][i];
            const CheckpointBundle b = TrainSecondary(config, data, base, sec.task,
                                                      SecondaryMode::kStandalone, lambdas[i],
                                                      seed, &init, hooks);
            save(b, seed_dir / proposed /
                        (task_name + "_standalone_" + LambdaTag(lambdas[i]) + ".tckp"));
            const auto& t = b.meta.at("test");
            const double enh = t.at("enhancement_bpp").get<double>();
            gaps.push_back(enh - scalable_enh_bpp[proposed][i]);
            summary.points.push_back(
                {proposed, "standalone", lambdas[i], static_cast<int64_t>(seed), enh, metric,
                 MetricValue(sec.task, t.at("rmse").get<double>(), t.at("psnr").get<double>(),
                             t.at("miou").get<double>())});
          }
          if (sec.task == TaskKind::kReconstruction) {
            outcome.has_standalone = true;
            outcome.standalone_gaps = gaps;
            double mean = 0.0;
            for (double g : gaps) mean += g;
            outcome.standalone_gap_bpp = mean / gaps.size();
          }
        }
      }
      outcome.completed = true;
    } catch (const std::exception& e) {
      outcome.error = e.what();
      summary.ok = false;
      if (summary.failure.empty()) {
        summary.failure = "seed " + std::to_string(seed) + ": " + e.what();
      }
      if (log) log("seed " + std::to_string(seed) + " failed: " + e.what());
    }
    summary.seeds.push_back(outcome);
    WriteOutputs(dir, config, summary, bd, vinfo, checkpoints, data.dataset_hash, "running");
  }
  if (compare && config.vinfo.enabled) {
    int wins = 0, losses = 0;
    for (const auto& s : summary.seeds) {
      if (!s.vinfo_i_v.count(proposed) || !s.vinfo_i_v.count(baseline)) continue;
      if (s.vinfo_i_v.at(proposed) > s.vinfo_i_v.at(baseline)) ++wins;
      if (s.vinfo_i_v.at(proposed) < s.vinfo_i_v.at(baseline)) ++losses;
    }
    vinfo["comparison"] = {{"a", proposed}, {"b", baseline}, {"a_wins", wins},
                           {"b_wins", losses}, {"sign_test_p", SignTestPValue(wins, losses)}};
  }
  WriteOutputs(dir, config, summary, bd, vinfo, checkpoints, data.dataset_hash,
               summary.ok ? "complete" : "failed");
  return summary;
}

}  // namespace taskcodec
