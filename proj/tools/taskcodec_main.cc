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

// taskcodec command line: training, sweeps, evaluation, file coding and
// reports. Exit codes: 0 success, 1 runtime failure, 2 configuration error,
// 3 malformed input file.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "taskcodec/codec_file.h"
#include "taskcodec/experiment.h"
#include "taskcodec/image_io.h"

namespace tc = taskcodec;

namespace {

struct Common {
  std::string config;
  std::vector<std::string> sets;
};

void AddCommon(CLI::App* app, Common& c) {
  app->add_option("-c,--config", c.config, "JSON experiment config");
  app->add_option("--set", c.sets, "Override as dotted.key=value (repeatable)");
}

tc::ExperimentConfig Load(const Common& c) { return tc::LoadExperimentConfig(c.config, c.sets); }

void Log(const std::string& line) { std::cerr << line << std::endl; }

tc::TrainHooks Hooks() { return tc::TrainHooks{Log, nullptr}; }

void PrintJson(const nlohmann::json& j) { std::cout << j.dump(2) << std::endl; }

std::unique_ptr<tc::CheckpointBundle> MaybeLoad(const std::string& path) {
  if (path.empty()) return nullptr;
  return std::make_unique<tc::CheckpointBundle>(tc::LoadCheckpoint(path));
}

// Writes a task output as an image: RGB as P6, depth as P5, labels as
// evenly spaced gray levels.
void WriteTaskOutput(const std::string& path, tc::TaskKind task, int num_classes,
                     const tc::Tensor<float>& out) {
  if (task != tc::TaskKind::kSegmentation) {
    tc::WritePnm(path, out);
    return;
  }
  const auto labels = tc::ArgmaxLabels(out);
  tc::Tensor<float> gray(1, 1, out.h(), out.w());
  for (size_t i = 0; i < labels.size(); ++i) {
    gray[i] = num_classes > 1 ? static_cast<float>(labels[i]) / (num_classes - 1) : 0.0f;
  }
  tc::WritePnm(path, gray);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"taskcodec: multi-task learnable scalable compression"};
  app.require_subcommand(1);

  // run
  Common run_c;
  bool dry_run = false;
  auto* run = app.add_subcommand("run", "Full two-phase experiment");
  AddCommon(run, run_c);
  run->add_flag("--dry-run", dry_run, "Validate the config and print the plan");

  // train-base
  Common tb_c;
  double tb_lambda = 16.0, tb_beta = tc::kDefaultBeta;
  uint64_t tb_seed = 1;
  std::string tb_init, tb_out;
  auto* train_base = app.add_subcommand("train-base", "Train one base model");
  AddCommon(train_base, tb_c);
  train_base->add_option("--lambda", tb_lambda, "Base lambda");
  train_base->add_option("--beta", tb_beta, "Auxiliary reconstruction weight");
  train_base->add_option("--seed", tb_seed, "Seed");
  train_base->add_option("--init", tb_init, "Warm-start bundle");
  train_base->add_option("-o,--output", tb_out, "Output bundle")->required();

  // train-secondary
  Common ts_c;
  double ts_lambda = 16.0;
  uint64_t ts_seed = 1;
  std::string ts_base, ts_init, ts_out, ts_task = "reconstruction", ts_mode = "scalable";
  auto* train_sec = app.add_subcommand("train-secondary", "Train a secondary task on a frozen base");
  AddCommon(train_sec, ts_c);
  train_sec->add_option("--base", ts_base, "Base bundle")->required();
  train_sec->add_option("--task", ts_task, "reconstruction | depth | segmentation");
  train_sec->add_option("--mode", ts_mode, "direct | scalable | standalone");
  train_sec->add_option("--lambda", ts_lambda, "Enhancement lambda");
  train_sec->add_option("--seed", ts_seed, "Seed");
  train_sec->add_option("--init", ts_init, "Warm-start bundle (required for standalone)");
  train_sec->add_option("-o,--output", ts_out, "Output bundle")->required();

  // sweep
  Common sw_c;
  double sw_beta = tc::kDefaultBeta;
  uint64_t sw_seed = 1;
  std::string sw_out;
  auto* sweep = app.add_subcommand("sweep", "Warm-started base sweep over the lambda grid");
  AddCommon(sweep, sw_c);
  sweep->add_option("--beta", sw_beta, "Auxiliary reconstruction weight");
  sweep->add_option("--seed", sw_seed, "Seed");
  sweep->add_option("-o,--output", sw_out, "Output directory")->required();

  // eval
  Common ev_c;
  std::string ev_bundle, ev_base;
  auto* eval = app.add_subcommand("eval", "Evaluate a bundle on the test split");
  AddCommon(eval, ev_c);
  eval->add_option("--bundle", ev_bundle, "Base or secondary bundle")->required();
  eval->add_option("--base", ev_base, "Base bundle (for secondary bundles)");

  // encode / decode
  std::string en_base, en_enh, en_in, en_out;
  auto* encode = app.add_subcommand("encode", "Encode a PPM image into a TCC1 file");
  encode->add_option("--base", en_base, "Base bundle")->required();
  encode->add_option("--enhancement", en_enh, "Scalable secondary bundle");
  encode->add_option("-i,--input", en_in, "Input PPM")->required();
  encode->add_option("-o,--output", en_out, "Output file")->required();

  std::string de_base, de_enh, de_in, de_out, de_enh_out;
  auto* decode = app.add_subcommand("decode", "Decode a TCC1 file into task outputs");
  decode->add_option("--base", de_base, "Base bundle")->required();
  decode->add_option("--enhancement", de_enh, "Scalable secondary bundle");
  decode->add_option("-i,--input", de_in, "Input file")->required();
  decode->add_option("-o,--output", de_out, "Base task output image")->required();
  decode->add_option("--enhancement-output", de_enh_out, "Secondary task output image");

  // bdrate
  std::string bd_csv, bd_anchor, bd_test;
  int64_t bd_seed = -1;
  auto* bdrate = app.add_subcommand("bdrate", "BD-rate between two curves of a curves.csv");
  bdrate->add_option("--curves", bd_csv, "curves.csv")->required();
  bdrate->add_option("--anchor", bd_anchor, "method/mode")->required();
  bdrate->add_option("--test", bd_test, "method/mode")->required();
  bdrate->add_option("--seed", bd_seed, "Restrict to one seed");

  // vinfo
  Common vi_c;
  std::string vi_bundle;
  uint64_t vi_seed = 1;
  auto* vinfo = app.add_subcommand("vinfo", "V-information of a base representation");
  AddCommon(vinfo, vi_c);
  vinfo->add_option("--bundle", vi_bundle, "Base bundle")->required();
  vinfo->add_option("--seed", vi_seed, "Probe seed");

  // config
  Common cf_c;
  auto* config_cmd = app.add_subcommand("config", "Print the effective experiment config");
  AddCommon(config_cmd, cf_c);

  // report
  std::string rep_dir;
  auto* report = app.add_subcommand("report", "Summarize an experiment directory");
  report->add_option("dir", rep_dir, "Experiment directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    tc::ApplyDeterministicMode();
    if (*run) {
      const auto config = Load(run_c);
      tc::RunOptions options;
      options.dry_run = dry_run;
      options.log = dry_run ? tc::LogFn([](const std::string& s) { std::cout << s; }) : Log;
      const auto summary = tc::RunExperiment(config, options);
      if (!dry_run) {
        for (const auto& s : summary.seeds) PrintJson(s.ToJson());
        if (!summary.ok) {
          std::cerr << "experiment failed: " << summary.failure << std::endl;
          return 1;
        }
      }
    } else if (*train_base) {
      const auto config = Load(tb_c);
      const auto data = tc::BuildSplits(config.data);
      const auto init = MaybeLoad(tb_init);
      const auto b = tc::TrainBase(config, data, tb_lambda, tb_beta, tb_seed, init.get(), Hooks());
      tc::SaveCheckpoint(b, tb_out);
      PrintJson(b.meta);
    } else if (*train_sec) {
      const auto config = Load(ts_c);
      const auto data = tc::BuildSplits(config.data);
      const auto base = tc::LoadCheckpoint(ts_base);
      const auto init = MaybeLoad(ts_init);
      const auto b = tc::TrainSecondary(config, data, base, tc::ParseTaskKind(ts_task),
                                        tc::ParseSecondaryMode(ts_mode), ts_lambda, ts_seed,
                                        init.get(), Hooks());
      tc::SaveCheckpoint(b, ts_out);
      PrintJson(b.meta);
    } else if (*sweep) {
      const auto config = Load(sw_c);
      const auto data = tc::BuildSplits(config.data);
      std::vector<tc::RDPoint> points;
      std::vector<double> lambdas = config.base_lambdas;
      std::sort(lambdas.begin(), lambdas.end(), std::greater<>());
      std::unique_ptr<tc::CheckpointBundle> prev;
      for (double lambda : lambdas) {
        auto b = std::make_unique<tc::CheckpointBundle>(
            tc::TrainBase(config, data, lambda, sw_beta, sw_seed, prev.get(), Hooks()));
        char name[64];
        std::snprintf(name, sizeof(name), "base_l%g.tckp", lambda);
        tc::SaveCheckpoint(*b, std::filesystem::path(sw_out) / name);
        const auto& t = b->meta.at("test");
        const bool seg = config.model.task == tc::TaskKind::kSegmentation;
        const bool rec = config.model.task == tc::TaskKind::kReconstruction;
        points.push_back({tc::MethodName(sw_beta), "base", lambda, static_cast<int64_t>(sw_seed),
                          t.at("bpp").get<double>(),
                          seg ? tc::MetricKind::kMiou
                              : (rec ? tc::MetricKind::kPsnr : tc::MetricKind::kRmse),
                          seg ? t.at("miou").get<double>()
                              : (rec ? t.at("psnr").get<double>() : t.at("task_rmse").get<double>())});
        prev = std::move(b);
      }
      tc::WriteTextFile(std::filesystem::path(sw_out) / "curves.csv", tc::CurvesToCsv(points));
      std::cout << tc::CurvesToCsv(points);
    } else if (*eval) {
      const auto config = Load(ev_c);
      const auto data = tc::BuildSplits(config.data);
      const auto bundle = tc::LoadCheckpoint(ev_bundle);
      if (bundle.kind == "base") {
        auto model = tc::LoadBaseModel(bundle);
        PrintJson(tc::EvaluateBase(*model, data.test, bundle.meta.at("lambda").get<double>(),
                                   bundle.meta.at("beta").get<double>())
                      .ToJson());
      } else {
        if (ev_base.empty()) throw tc::ConfigError("secondary bundles need --base");
        const auto base_bundle = tc::LoadCheckpoint(ev_base);
        if (base_bundle.ContentHash() != bundle.meta.at("base_hash").get<std::string>()) {
          throw tc::ConfigError("--base is not the base this bundle was trained against");
        }
        auto base = tc::LoadBaseModel(base_bundle);
        auto model = tc::LoadSecondaryModel(bundle);
        const bool zero = model->spec().mode == tc::SecondaryMode::kStandalone;
        PrintJson(tc::EvaluateSecondary(*base, *model, data.test,
                                        bundle.meta.at("lambda").get<double>(), zero)
                      .ToJson());
      }
    } else if (*encode) {
      auto base = tc::LoadBaseModel(tc::LoadCheckpoint(en_base));
      std::unique_ptr<tc::SecondaryModel> enh;
      if (!en_enh.empty()) enh = tc::LoadSecondaryModel(tc::LoadCheckpoint(en_enh));
      const auto image = tc::ReadPnm(en_in);
      const auto bytes = tc::EncodeImage(*base, enh.get(), image);
      tc::WriteFileBytes(en_out, bytes);
      std::cout << en_out << ": " << bytes.size() << " bytes, "
                << tc::Bpp(8.0 * bytes.size(), image.h(), image.w()) << " bpp" << std::endl;
    } else if (*decode) {
      auto base = tc::LoadBaseModel(tc::LoadCheckpoint(de_base));
      std::unique_ptr<tc::SecondaryModel> enh;
      if (!de_enh.empty()) enh = tc::LoadSecondaryModel(tc::LoadCheckpoint(de_enh));
      const auto bytes = tc::ReadFileBytes(de_in);
      const auto out = tc::DecodeImage(*base, enh.get(), bytes);
      WriteTaskOutput(de_out, base->spec().task, base->spec().num_classes, out.base_output);
      if (out.enhancement_output && !de_enh_out.empty()) {
        WriteTaskOutput(de_enh_out, enh->spec().task, enh->spec().num_classes,
                        *out.enhancement_output);
      }
      std::cout << "base " << out.base_bytes << " bytes, enhancement " << out.enhancement_bytes
                << " bytes" << std::endl;
    } else if (*bdrate) {
      const auto points = tc::CurvesFromCsv(tc::ReadTextFile(bd_csv));
      auto split = [](const std::string& s) {
        const auto slash = s.find('/');
        if (slash == std::string::npos) throw tc::ConfigError("curve must be method/mode: " + s);
        return std::make_pair(s.substr(0, slash), s.substr(slash + 1));
      };
      const auto [am, amode] = split(bd_anchor);
      const auto [tm, tmode] = split(bd_test);
      std::optional<int64_t> seed;
      if (bd_seed >= 0) seed = bd_seed;
      const auto a = tc::SelectCurve(points, am, amode, seed);
      const auto t = tc::SelectCurve(points, tm, tmode, seed);
      std::cout << tc::BdRateJson(bd_anchor, bd_test, tc::BdRate(a, t)) << std::endl;
    } else if (*vinfo) {
      const auto config = Load(vi_c);
      const auto data = tc::BuildSplits(config.data);
      auto model = tc::LoadBaseModel(tc::LoadCheckpoint(vi_bundle));
      tc::VInfoData vd;
      vd.y = tc::BaseLatents(*model, data.vinfo);
      vd.z_values = tc::DownsampledImages(data.vinfo, config.vinfo.target_size);
      std::cout << tc::EstimateVInformation(vd, config.vinfo.family, vi_seed).ToJson()
                << std::endl;
    } else if (*config_cmd) {
      std::cout << Load(cf_c).ToJson().dump(2) << std::endl;
    } else if (*report) {
      const std::filesystem::path dir = rep_dir;
      const auto manifest = nlohmann::json::parse(tc::ReadTextFile(dir / "manifest.json"));
      std::cout << "status: " << manifest.value("status", "unknown") << "\n";
      if (manifest.contains("failure")) std::cout << "failure: " << manifest["failure"] << "\n";
      for (const auto& s : manifest.at("seeds")) {
        std::cout << "seed " << s.at("seed") << ": base BD " << s.at("base_bd_rate_percent")
                  << ", scalable BD " << s.at("scalable_bd_rate_percent") << ", direct PSNR "
                  << s.at("direct_psnr").dump() << "\n";
      }
      const auto vj = nlohmann::json::parse(tc::ReadTextFile(dir / "vinfo.json"));
      if (vj.contains("comparison")) std::cout << "vinfo: " << vj["comparison"].dump() << "\n";
      std::cout << "curves: " << tc::CurvesFromCsv(tc::ReadTextFile(dir / "curves.csv")).size()
                << " points" << std::endl;
    }
  } catch (const tc::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << std::endl;
    return 2;
  } catch (const tc::FormatError& e) {
    std::cerr << "format error: " << e.what() << std::endl;
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return 0;
}
