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

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "taskcodec/checkpoint.h"
#include "taskcodec/experiment.h"
#include "tiny_config.h"

namespace taskcodec {
namespace {

namespace fs = std::filesystem;

fs::path TempDir(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("taskcodec_exp_" + name);
  fs::remove_all(p);
  return p;
}

const DataSplits& TinyData() {
  static const DataSplits d = BuildSplits(testing::TinyConfig().data);
  return d;
}

TEST(MatchedRate, PicksClosestPair) {
  const auto idx = SelectMatchedRate({{"a", {0.1, 0.2}}, {"b", {0.11, 0.35}}}, 0.15);
  EXPECT_EQ(idx.at("a"), 0u);
  EXPECT_EQ(idx.at("b"), 0u);
}

TEST(MatchedRate, IdenticalGridsPickSameIndex) {
  const std::vector<double> grid = {0.05, 0.1, 0.2, 0.4};
  const auto idx = SelectMatchedRate({{"a", grid}, {"b", grid}}, 0.01);
  EXPECT_EQ(idx.at("a"), idx.at("b"));
}

TEST(MatchedRate, DisjointRatesFailWithRates) {
  try {
    SelectMatchedRate({{"a", {0.1}}, {"b", {0.5}}}, 0.15);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("0.1"), std::string::npos) << msg;
    EXPECT_NE(msg.find("0.5"), std::string::npos) << msg;
  }
}

TEST(ExperimentConfig, JsonRoundTrip) {
  const auto c = ExperimentConfig::Default();
  EXPECT_NO_THROW(c.Validate());
  EXPECT_EQ(ExperimentConfig::FromJson(c.ToJson()).ToJson(), c.ToJson());
  const auto t = testing::TinyConfig();
  EXPECT_EQ(ExperimentConfig::FromJson(t.ToJson()).ToJson(), t.ToJson());
}

TEST(ExperimentConfig, Overrides) {
  const auto j = ApplyOverrides(ExperimentConfig::Default().ToJson(),
                                {"training.learning_rate=0.01", "output_dir=/tmp/x",
                                 "seeds=[3,4]"});
  const auto c = ExperimentConfig::FromJson(j);
  EXPECT_DOUBLE_EQ(c.training.learning_rate, 0.01);
  EXPECT_EQ(c.output_dir, "/tmp/x");
  EXPECT_EQ(c.seeds, (std::vector<uint64_t>{3, 4}));
  EXPECT_THROW(ApplyOverrides(j, {"no_equals_sign"}), ConfigError);
}

TEST(ExperimentConfig, RejectsInvalid) {
  auto bad = [](auto mutate) {
    auto c = ExperimentConfig::Default();
    mutate(c);
    return c;
  };
  EXPECT_THROW(bad([](auto& c) { c.beta = -1; }).Validate(), ConfigError);
  EXPECT_THROW(bad([](auto& c) { c.beta = 0; }).Validate(), ConfigError);
  EXPECT_THROW(bad([](auto& c) { c.base_lambdas.clear(); }).Validate(), ConfigError);
  EXPECT_THROW(bad([](auto& c) { c.training.learning_rate = 0; }).Validate(), ConfigError);
  EXPECT_THROW(bad([](auto& c) { c.data.size = 40; }).Validate(), ConfigError);
  EXPECT_THROW(bad([](auto& c) { c.seeds.clear(); }).Validate(), ConfigError);
  EXPECT_THROW(bad([](auto& c) {
                 c.secondary = {{TaskKind::kReconstruction, {SecondaryMode::kStandalone}, {1}}};
               }).Validate(),
               ConfigError);
  auto j = ExperimentConfig::Default().ToJson();
  j["training"]["optimizer"] = "sgd";
  EXPECT_THROW(ExperimentConfig::FromJson(j), ConfigError);
  EXPECT_THROW(ExperimentConfig::FromJson(nlohmann::json::parse(R"({"beta": "x"})")),
               ConfigError);
}

TEST(TrainBase, ReloadedBundleReproducesEvaluation) {
  const auto c = testing::TinyConfig();
  const auto b = TrainBase(c, TinyData(), 16, 0.1, 3, nullptr);
  const auto reloaded = ParseCheckpoint(SerializeCheckpoint(b));
  EXPECT_EQ(reloaded.ContentHash(), b.ContentHash());
  auto model = LoadBaseModel(reloaded);
  const auto e = EvaluateBase(*model, TinyData().test, 16, 0.1);
  EXPECT_EQ(e.ToJson(), b.meta.at("test"));
  EXPECT_EQ(b.meta.at("dataset_hash"), TinyData().dataset_hash);
  EXPECT_EQ(b.history.size(), static_cast<size_t>(c.training.max_epochs + 1));
}

TEST(TrainBase, BaselineLeavesAuxHeadUntouched) {
  const auto c = testing::TinyConfig();
  const auto a = TrainBase(c, TinyData(), 64, 0.0, 5, nullptr);
  const auto b = TrainBase(c, TinyData(), 1, 0.0, 5, nullptr);
  const auto p = TrainBase(c, TinyData(), 1, 0.1, 5, nullptr);
  size_t aux = 0;
  bool moved = false;
  for (size_t i = 0; i < a.params.size(); ++i) {
    const auto& [name, t] = a.params[i];
    if (name.rfind("aux.", 0) != 0) continue;
    ++aux;
    const auto& other = b.params[i].second;
    for (size_t k = 0; k < t.size(); ++k) ASSERT_EQ(t[k], other[k]) << name;
    const auto& trained = p.params[i].second;
    for (size_t k = 0; k < t.size(); ++k) moved |= trained[k] != t[k];
  }
  EXPECT_GT(aux, 0u);
  EXPECT_TRUE(moved);
}

TEST(TrainBase, StepLogHasOneLinePerStep) {
  const auto c = testing::TinyConfig();
  std::ostringstream log;
  TrainHooks hooks;
  hooks.step_log = &log;
  TrainBase(c, TinyData(), 4, 0.1, 1, nullptr, hooks);
  std::istringstream in(log.str());
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_TRUE(j.contains("rate_bpp"));
    EXPECT_TRUE(j.contains("aux_recon"));
    ++lines;
  }
  const int steps = c.data.train_count / c.training.batch_size;
  EXPECT_EQ(lines, steps * c.training.max_epochs);
}

TEST(TrainBase, DivergenceIsReported) {
  auto c = testing::TinyConfig();
  c.training.learning_rate = 1e12;
  c.training.max_epochs = 4;
  EXPECT_THROW(TrainBase(c, TinyData(), 1e6, 0.1, 1, nullptr), NumericError);
}

TEST(TrainBase, WarmStartRequiresSameArchitecture) {
  auto c = testing::TinyConfig();
  const auto b = TrainBase(c, TinyData(), 16, 0.1, 1, nullptr);
  c.model.transform.latent_channels = 4;
  c.model.entropy.latent_channels = 4;
  EXPECT_THROW(TrainBase(c, TinyData(), 4, 0.1, 1, &b), ConfigError);
}

TEST(TrainSecondary, BaseStaysFrozenAndContractsHold) {
  const auto c = testing::TinyConfig();
  const auto base0 = TrainBase(c, TinyData(), 16, 0.0, 1, nullptr);
  const auto base1 = TrainBase(c, TinyData(), 16, 0.1, 1, nullptr);
  const std::string before = base1.ContentHash();
  const auto sc = TrainSecondary(c, TinyData(), base1, TaskKind::kReconstruction,
                                 SecondaryMode::kScalable, 4, 1, nullptr);
  EXPECT_EQ(base1.ContentHash(), before);
  EXPECT_EQ(sc.meta.at("base_hash"), before);

  const auto direct = TrainSecondary(c, TinyData(), base1, TaskKind::kReconstruction,
                                     SecondaryMode::kDirect, 1, 1, nullptr);
  for (const auto& [name, t] : direct.params) EXPECT_EQ(name.rfind("synthesis.", 0), 0u) << name;

  // Standalone needs the matching scalable bundle and a proposed-method base.
  EXPECT_THROW(TrainSecondary(c, TinyData(), base1, TaskKind::kReconstruction,
                              SecondaryMode::kStandalone, 4, 1, nullptr),
               ConfigError);
  EXPECT_THROW(TrainSecondary(c, TinyData(), base0, TaskKind::kReconstruction,
                              SecondaryMode::kStandalone, 4, 1, &sc),
               ConfigError);
  const auto sa = TrainSecondary(c, TinyData(), base1, TaskKind::kReconstruction,
                                 SecondaryMode::kStandalone, 4, 1, &sc);
  // Only the entropy model moves, so the task output is unchanged.
  for (size_t i = 0; i < sa.params.size(); ++i) {
    const auto& [name, t] = sa.params[i];
    if (name.rfind("entropy.", 0) == 0) continue;
    ASSERT_EQ(name, sc.params[i].first);
    EXPECT_EQ(HashParams({sa.params[i]}), HashParams({sc.params[i]})) << name;
  }
}

TEST(Objectives, EnhancementLossRejectsTrainableBase) {
  Parameter<float> p(Shape{1, 1, 1, 1});
  ParameterList<float> base = {{"analysis.w", &p}};
  const Tensor<float> target(1, 3, 2, 2, 0.5f);
  EXPECT_THROW(EnhancementLoss(TaskKind::kReconstruction, target, target, 1.0, 4, 1.0, base),
               ContractViolation);
  p.trainable = false;
  EXPECT_NO_THROW(
      EnhancementLoss(TaskKind::kReconstruction, target, target, 1.0, 4, 1.0, base));
}

TEST(DownsampledImages, AreaMeans) {
  ShapesSample s;
  s.image = Tensor<float>(1, 3, 4, 4);
  for (size_t i = 0; i < s.image.size(); ++i) s.image[i] = static_cast<float>(i % 16);
  const auto z = DownsampledImages({s}, 2);
  ASSERT_EQ(z.shape(), (Shape{1, 12, 1, 1}));
  EXPECT_FLOAT_EQ(z[0], (0 + 1 + 4 + 5) / 4.0f);
  EXPECT_FLOAT_EQ(z[3], (10 + 11 + 14 + 15) / 4.0f);
}

TEST(RunExperiment, DryRunWritesNothing) {
  auto c = testing::TinyConfig();
  c.output_dir = TempDir("dry").string();
  std::string plan;
  RunOptions o;
  o.dry_run = true;
  o.log = [&](const std::string& s) { plan += s; };
  RunExperiment(c, o);
  EXPECT_FALSE(fs::exists(c.output_dir));
  EXPECT_EQ(plan, DescribePlan(c));
  EXPECT_NE(plan.find("standalone"), std::string::npos);
}

TEST(RunExperiment, DeterministicRunsAreByteIdentical) {
  setenv("TASKCODEC_DETERMINISTIC", "1", 1);
  auto c = testing::TinyConfig();
  std::string csv[2];
  for (int i = 0; i < 2; ++i) {
    c.output_dir = TempDir("det" + std::to_string(i)).string();
    const auto summary = RunExperiment(c, {});
    ASSERT_TRUE(summary.ok) << summary.failure;
    ASSERT_EQ(summary.seeds.size(), 1u);
    EXPECT_TRUE(summary.seeds[0].completed) << summary.seeds[0].error;
    EXPECT_TRUE(summary.seeds[0].has_standalone);
    const fs::path dir = c.output_dir;
    for (const char* f : {"config.json", "curves.csv", "bdrate.json", "vinfo.json",
                          "manifest.json", "train_log.jsonl"})
      EXPECT_TRUE(fs::exists(dir / f)) << f;
    EXPECT_EQ(nlohmann::json::parse(ReadTextFile(dir / "manifest.json")).at("status"),
              "complete");
    EXPECT_TRUE(fs::exists(dir / "checkpoints/seed1/beta_0.1/base_l16.tckp"));
    csv[i] = ReadTextFile(dir / "curves.csv");
    const auto points = CurvesFromCsv(csv[i]);
    // 2 methods x (4 base + 1 direct + 4 scalable + 4 seg) + 4 standalone.
    EXPECT_EQ(points.size(), 2u * 13u + 4u);
  }
  EXPECT_EQ(csv[0], csv[1]);
  unsetenv("TASKCODEC_DETERMINISTIC");
}

}  // namespace
}  // namespace taskcodec
