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

#include "taskcodec/models.h"

#include "taskcodec/quantizer.h"
#include "taskcodec/rng.h"

namespace taskcodec {

void BaseModelSpec::Validate() const {
  transform.Validate();
  entropy.Validate();
  if (entropy.has_side()) throw ConfigError("base entropy model must not use side information");
  if (entropy.latent_channels != transform.latent_channels) {
    throw ConfigError("base entropy model latent channels mismatch");
  }
  if (num_classes < 2) throw ConfigError("num_classes must be >= 2");
}

const char* SecondaryModeName(SecondaryMode mode) {
  switch (mode) {
    case SecondaryMode::kDirect: return "direct";
    case SecondaryMode::kScalable: return "scalable";
    case SecondaryMode::kStandalone: return "standalone";
  }
  return "?";
}

SecondaryMode ParseSecondaryMode(const std::string& name) {
  if (name == "direct") return SecondaryMode::kDirect;
  if (name == "scalable") return SecondaryMode::kScalable;
  if (name == "standalone") return SecondaryMode::kStandalone;
  throw ConfigError("unknown secondary mode: " + name);
}

void SecondaryModelSpec::Validate() const {
  transform.Validate();
  entropy.Validate();
  if (!entropy.has_side()) throw ConfigError("secondary entropy model needs side information");
  if (entropy.latent_channels != transform.latent_channels) {
    throw ConfigError("secondary entropy model latent channels mismatch");
  }
  if (num_classes < 2) throw ConfigError("num_classes must be >= 2");
}

nlohmann::json ToJson(const TransformSpec& s) {
  return {{"latent_channels", s.latent_channels},
          {"base_width", s.base_width},
          {"blocks_per_stage", s.blocks_per_stage},
          {"scale_kernel", s.scale_kernel}};
}

nlohmann::json ToJson(const EntropyModelSpec& s) {
  return {{"latent_channels", s.latent_channels}, {"context_channels", s.context_channels},
          {"context_kernel", s.context_kernel},   {"side_input_channels", s.side_input_channels},
          {"side_channels", s.side_channels},     {"side_blocks", s.side_blocks},
          {"fusion_width", s.fusion_width}};
}

nlohmann::json ToJson(const BaseModelSpec& s) {
  return {{"transform", ToJson(s.transform)},
          {"entropy", ToJson(s.entropy)},
          {"task", TaskKindName(s.task)},
          {"num_classes", s.num_classes}};
}

nlohmann::json ToJson(const SecondaryModelSpec& s) {
  return {{"transform", ToJson(s.transform)},
          {"entropy", ToJson(s.entropy)},
          {"task", TaskKindName(s.task)},
          {"num_classes", s.num_classes},
          {"mode", SecondaryModeName(s.mode)}};
}

TransformSpec TransformSpecFromJson(const nlohmann::json& j) {
  TransformSpec s;
  s.latent_channels = j.value("latent_channels", s.latent_channels);
  s.base_width = j.value("base_width", s.base_width);
  s.blocks_per_stage = j.value("blocks_per_stage", s.blocks_per_stage);
  s.scale_kernel = j.value("scale_kernel", s.scale_kernel);
  return s;
}

EntropyModelSpec EntropyModelSpecFromJson(const nlohmann::json& j) {
  EntropyModelSpec s;
  s.latent_channels = j.value("latent_channels", s.latent_channels);
  s.context_channels = j.value("context_channels", s.context_channels);
  s.context_kernel = j.value("context_kernel", s.context_kernel);
  s.side_input_channels = j.value("side_input_channels", s.side_input_channels);
  s.side_channels = j.value("side_channels", s.side_channels);
  s.side_blocks = j.value("side_blocks", s.side_blocks);
  s.fusion_width = j.value("fusion_width", s.fusion_width);
  return s;
}

BaseModelSpec BaseModelSpecFromJson(const nlohmann::json& j) {
  BaseModelSpec s;
  s.transform = TransformSpecFromJson(j.at("transform"));
  s.entropy = EntropyModelSpecFromJson(j.at("entropy"));
  s.task = ParseTaskKind(j.at("task").get<std::string>());
  s.num_classes = j.at("num_classes").get<int>();
  s.Validate();
  return s;
}

SecondaryModelSpec SecondaryModelSpecFromJson(const nlohmann::json& j) {
  SecondaryModelSpec s;
  s.transform = TransformSpecFromJson(j.at("transform"));
  s.entropy = EntropyModelSpecFromJson(j.at("entropy"));
  s.task = ParseTaskKind(j.at("task").get<std::string>());
  s.num_classes = j.at("num_classes").get<int>();
  s.mode = ParseSecondaryMode(j.at("mode").get<std::string>());
  s.Validate();
  return s;
}

ParamMap ExportParams(const ParameterList<float>& params) {
  ParamMap out;
  out.reserve(params.size());
  for (const auto& p : params) out.emplace_back(p.name, p.param->value);
  return out;
}

void ImportParams(const ParameterList<float>& params, const ParamMap& values) {
  if (params.size() != values.size()) {
    throw ConfigError("parameter import: expected " + std::to_string(params.size()) +
                      " tensors, got " + std::to_string(values.size()));
  }
  for (size_t i = 0; i < params.size(); ++i) {
    if (params[i].name != values[i].first ||
        params[i].param->value.shape() != values[i].second.shape()) {
      throw ConfigError("parameter import: mismatch at " + params[i].name);
    }
  }
  for (size_t i = 0; i < params.size(); ++i) params[i].param->value = values[i].second;
}

BaseModel::BaseModel(const BaseModelSpec& spec)
    : analysis(spec.transform),
      synthesis(spec.transform, TaskHeadSpec::For(spec.task, spec.num_classes)),
      aux(spec.transform, TaskHeadSpec::For(TaskKind::kReconstruction, spec.num_classes)),
      entropy(spec.entropy),
      spec_(spec) {
  spec.Validate();
}

void BaseModel::Initialize(uint64_t seed) {
  Rng a(MixSeed(seed, 1)), s(MixSeed(seed, 2)), x(MixSeed(seed, 3)), e(MixSeed(seed, 4));
  analysis.Initialize(a);
  synthesis.Initialize(s);
  aux.Initialize(x);
  entropy.Initialize(e);
}

ParameterList<float> BaseModel::Parameters() {
  ParameterList<float> out;
  analysis.CollectParameters("analysis", out);
  synthesis.CollectParameters("synthesis", out);
  aux.CollectParameters("aux", out);
  entropy.CollectParameters("entropy", out);
  return out;
}

ParameterList<float> BaseModel::AnalysisParameters() {
  ParameterList<float> out;
  analysis.CollectParameters("analysis", out);
  return out;
}

ParameterList<float> BaseModel::AuxParameters() {
  ParameterList<float> out;
  aux.CollectParameters("aux", out);
  return out;
}

Tensor<float> BaseModel::EncodeLatent(const Tensor<float>& image) {
  return SteRound(analysis.Forward(image));
}

SecondaryModel::SecondaryModel(const SecondaryModelSpec& spec)
    : analysis(spec.transform),
      synthesis(spec.transform, TaskHeadSpec::For(spec.task, spec.num_classes)),
      entropy(spec.entropy),
      spec_(spec) {
  spec.Validate();
}

void SecondaryModel::Initialize(uint64_t seed) {
  Rng a(MixSeed(seed, 11)), s(MixSeed(seed, 12)), e(MixSeed(seed, 13));
  analysis.Initialize(a);
  synthesis.Initialize(s);
  entropy.Initialize(e);
}

ParameterList<float> SecondaryModel::Parameters() {
  ParameterList<float> out;
  if (coded()) analysis.CollectParameters("analysis", out);
  synthesis.CollectParameters("synthesis", out);
  if (coded()) entropy.CollectParameters("entropy", out);
  return out;
}

ParameterList<float> SecondaryModel::EntropyParameters() {
  ParameterList<float> out;
  entropy.CollectParameters("entropy", out);
  return out;
}

SecondaryModelSpec MakeSecondarySpec(const BaseModelSpec& base, TaskKind task,
                                     SecondaryMode mode) {
  SecondaryModelSpec s;
  s.transform = base.transform;
  s.entropy = base.entropy;
  s.entropy.side_input_channels = base.transform.latent_channels;
  s.task = task;
  s.num_classes = base.num_classes;
  s.mode = mode;
  return s;
}

}  // namespace taskcodec
