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

#ifndef TASKCODEC_EXPERIMENT_H_
#define TASKCODEC_EXPERIMENT_H_

// Two-phase experiment orchestration: base sweeps per beta with warm
// starts, matched-rate selection, secondary training in direct, scalable
// and standalone modes, evaluation and report emission.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <ostream>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "taskcodec/checkpoint.h"
#include "taskcodec/metrics.h"
#include "taskcodec/models.h"
#include "taskcodec/objectives.h"
#include "taskcodec/quantizer.h"
#include "taskcodec/synthetic_data.h"
#include "taskcodec/vinfo.h"

namespace taskcodec {

struct DataConfig {
  uint64_t seed = 7;
  int size = 64;
  int num_classes = 4;
  int train_count = 512;
  int val_count = 64;
  int test_count = 128;
  int vinfo_count = 512;
  // Optional folder of PPM images; reconstruction-only experiments.
  std::string image_folder;

  DatasetSpec Spec() const;
  void Validate() const;
};

struct TrainingConfig {
  double learning_rate = 1e-4;
  int patience = 20;
  int max_epochs = 1000;
  // Epoch cap for warm-started points; 0 uses max_epochs.
  int warm_start_max_epochs = 0;
  int batch_size = 16;
  double clip_norm = 0.0;
  QuantizationMode quantization = QuantizationMode::kStraightThrough;
  AugmentationPolicy augmentation;

  void Validate() const;
};

struct SecondaryTaskConfig {
  TaskKind task = TaskKind::kReconstruction;
  std::vector<SecondaryMode> modes;
  std::vector<double> lambdas;
};

struct VInfoConfig {
  bool enabled = true;
  PredictiveFamilySpec family = {.kind = FamilyKind::kConvProbe, .learning_rate = 1e-3};
  // Side of the area-downsampled image used as the continuous target.
  int target_size = 8;
};

struct ExperimentConfig {
  DataConfig data;
  BaseModelSpec model;
  std::vector<double> base_lambdas = {64.0, 16.0, 4.0, 1.0};
  double beta = kDefaultBeta;
  bool run_baseline = true;  // also train the beta = 0 method
  std::vector<SecondaryTaskConfig> secondary;
  TrainingConfig training;
  std::vector<uint64_t> seeds = {1, 2, 3, 4, 5};
  double match_tolerance = 0.15;
  VInfoConfig vinfo;
  std::string output_dir = "runs/experiment";

  static ExperimentConfig Default();
  nlohmann::json ToJson() const;
  static ExperimentConfig FromJson(const nlohmann::json& j);
  void Validate() const;
  // Betas in run order: baseline first when enabled.
  std::vector<double> Betas() const;
};

std::string MethodName(double beta);

// Applies "a.b.c=value" overrides; the value is parsed as JSON when
// possible and taken as a string otherwise.
nlohmann::json ApplyOverrides(nlohmann::json config, const std::vector<std::string>& sets);
ExperimentConfig LoadExperimentConfig(const std::filesystem::path& path,
                                      const std::vector<std::string>& sets);

// TASKCODEC_DETERMINISTIC=1 forces single-threaded execution.
bool DeterministicMode();
void ApplyDeterministicMode();

struct DataSplits {
  std::vector<ShapesSample> train;
  std::vector<ShapesSample> val;
  std::vector<ShapesSample> test;
  std::vector<ShapesSample> vinfo;
  std::string dataset_hash;
};

DataSplits BuildSplits(const DataConfig& config);

using LogFn = std::function<void(const std::string&)>;

struct TrainHooks {
  LogFn log;
  // Receives one JSON line per optimizer step with the loss breakdown.
  std::ostream* step_log = nullptr;
};

struct BaseEval {
  double bpp = 0.0;
  double distortion = 0.0;  // RMSE (depth, reconstruction) or cross-entropy
  double task_rmse = 0.0;
  double miou = 0.0;
  double psnr = 0.0;
  double aux_rmse = 0.0;
  double loss = 0.0;
  nlohmann::json ToJson() const;
};

struct SecondaryEval {
  double base_bpp = 0.0;
  double enhancement_bpp = 0.0;  // 0 in direct mode
  double distortion = 0.0;
  double rmse = 0.0;
  double psnr = 0.0;
  double miou = 0.0;
  double loss = 0.0;
  double total_bpp() const { return base_bpp + enhancement_bpp; }
  nlohmann::json ToJson() const;
};

std::unique_ptr<BaseModel> LoadBaseModel(const CheckpointBundle& bundle);
std::unique_ptr<SecondaryModel> LoadSecondaryModel(const CheckpointBundle& bundle);

BaseEval EvaluateBase(BaseModel& model, const std::vector<ShapesSample>& samples,
                      double lambda, double beta);
// zero_side evaluates with the base latent replaced by zeros.
SecondaryEval EvaluateSecondary(BaseModel& base, SecondaryModel& model,
                                const std::vector<ShapesSample>& samples, double lambda,
                                bool zero_side);

CheckpointBundle TrainBase(const ExperimentConfig& config, const DataSplits& data,
                           double lambda, double beta, uint64_t seed,
                           const CheckpointBundle* init, const TrainHooks& hooks = {});

// Direct and scalable modes may warm-start from `init`. Standalone mode
// requires `init` to be a scalable bundle trained on `base`, and `base` to
// come from the proposed method (beta > 0).
CheckpointBundle TrainSecondary(const ExperimentConfig& config, const DataSplits& data,
                                const CheckpointBundle& base, TaskKind task,
                                SecondaryMode mode, double lambda, uint64_t seed,
                                const CheckpointBundle* init, const TrainHooks& hooks = {});

// Quantized base latents of all samples, stacked along the batch axis.
Tensor<float> BaseLatents(BaseModel& model, const std::vector<ShapesSample>& samples);

// Per method, the index of the point nearest the cross-method target rate.
// The target is the median over method pairs of the midpoint of each
// pair's closest points. Throws ConfigError when the selected rates differ
// by more than `tolerance` (relative).
std::map<std::string, size_t> SelectMatchedRate(
    const std::map<std::string, std::vector<double>>& bpps, double tolerance);

// Continuous V-information target: area-downsampled images, (N, 3*s*s, 1, 1).
Tensor<float> DownsampledImages(const std::vector<ShapesSample>& samples, int side);

struct SeedOutcome {
  uint64_t seed = 0;
  bool completed = false;
  std::string error;
  std::map<std::string, double> matched_base_bpp;
  std::map<std::string, double> matched_lambda;
  std::map<std::string, double> direct_rmse;
  std::map<std::string, double> direct_psnr;
  BdRateResult base_bd;      // proposed vs baseline, base task
  BdRateResult scalable_bd;  // proposed vs baseline, scalable reconstruction
  bool has_standalone = false;
  // Mean over the lambda_e grid of standalone minus scalable conditional
  // bpp for the proposed method; distortion is identical by construction.
  double standalone_gap_bpp = 0.0;
  std::vector<double> standalone_gaps;
  std::map<std::string, double> vinfo_i_v;
  nlohmann::json ToJson() const;
};

struct ExperimentSummary {
  std::vector<SeedOutcome> seeds;
  std::vector<RDPoint> points;
  bool ok = true;
  std::string failure;
};

struct RunOptions {
  bool dry_run = false;
  LogFn log;
};

// Plan text for a config (what a dry run prints).
std::string DescribePlan(const ExperimentConfig& config);

ExperimentSummary RunExperiment(const ExperimentConfig& config, const RunOptions& options);

}  // namespace taskcodec

#endif  // TASKCODEC_EXPERIMENT_H_
