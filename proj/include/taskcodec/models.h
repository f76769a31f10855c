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

#ifndef TASKCODEC_MODELS_H_
#define TASKCODEC_MODELS_H_

// Trainable model groups of the two-phase protocol.
//
//   base:      f_b, g_b (base task), g_a (auxiliary reconstruction), and an
//              autoregressive entropy model without side information.
//   secondary: direct mode trains a synthesis head on the frozen base
//              latent; scalable and standalone modes own f_e, g_e and an
//              entropy model conditioned on the base latent.

#include <string>

#include "json.hpp"
#include "taskcodec/checkpoint.h"
#include "taskcodec/entropy_model.h"
#include "taskcodec/transforms.h"

namespace taskcodec {

struct BaseModelSpec {
  TransformSpec transform;
  EntropyModelSpec entropy;  // side branch disabled
  TaskKind task = TaskKind::kDepth;
  int num_classes = 4;

  void Validate() const;
  bool operator==(const BaseModelSpec&) const = default;
};

enum class SecondaryMode { kDirect, kScalable, kStandalone };

const char* SecondaryModeName(SecondaryMode mode);
SecondaryMode ParseSecondaryMode(const std::string& name);

struct SecondaryModelSpec {
  TransformSpec transform;
  EntropyModelSpec entropy;  // side_input_channels = base latent channels
  TaskKind task = TaskKind::kReconstruction;
  int num_classes = 4;
  SecondaryMode mode = SecondaryMode::kScalable;

  void Validate() const;
  bool operator==(const SecondaryModelSpec&) const = default;
};

nlohmann::json ToJson(const TransformSpec& s);
nlohmann::json ToJson(const EntropyModelSpec& s);
nlohmann::json ToJson(const BaseModelSpec& s);
nlohmann::json ToJson(const SecondaryModelSpec& s);
TransformSpec TransformSpecFromJson(const nlohmann::json& j);
EntropyModelSpec EntropyModelSpecFromJson(const nlohmann::json& j);
BaseModelSpec BaseModelSpecFromJson(const nlohmann::json& j);
SecondaryModelSpec SecondaryModelSpecFromJson(const nlohmann::json& j);

// Copies values between a parameter list and a map; Import requires the
// exact same names and shapes.
ParamMap ExportParams(const ParameterList<float>& params);
void ImportParams(const ParameterList<float>& params, const ParamMap& values);

class BaseModel {
 public:
  explicit BaseModel(const BaseModelSpec& spec);

  void Initialize(uint64_t seed);
  // Parameters under "analysis.", "synthesis.", "aux." and "entropy.".
  ParameterList<float> Parameters();
  ParameterList<float> AnalysisParameters();
  ParameterList<float> AuxParameters();
  const BaseModelSpec& spec() const { return spec_; }

  // Quantized latent for an image batch (no caches kept for backward).
  Tensor<float> EncodeLatent(const Tensor<float>& image);

  AnalysisTransform<float> analysis;
  SynthesisTransform<float> synthesis;
  SynthesisTransform<float> aux;
  EntropyModel<float> entropy;

 private:
  BaseModelSpec spec_;
};

class SecondaryModel {
 public:
  explicit SecondaryModel(const SecondaryModelSpec& spec);

  void Initialize(uint64_t seed);
  // Direct mode exposes only "synthesis."; otherwise "analysis.",
  // "synthesis." and "entropy.".
  ParameterList<float> Parameters();
  ParameterList<float> EntropyParameters();
  const SecondaryModelSpec& spec() const { return spec_; }
  bool coded() const { return spec_.mode != SecondaryMode::kDirect; }

  AnalysisTransform<float> analysis;
  SynthesisTransform<float> synthesis;
  EntropyModel<float> entropy;

 private:
  SecondaryModelSpec spec_;
};

// Default secondary spec built on a base spec.
SecondaryModelSpec MakeSecondarySpec(const BaseModelSpec& base, TaskKind task,
                                     SecondaryMode mode);

}  // namespace taskcodec

#endif  // TASKCODEC_MODELS_H_
