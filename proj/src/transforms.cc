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

#include "taskcodec/transforms.h"

#include <algorithm>
#include <map>

namespace taskcodec {

void TransformSpec::Validate() const {
  if (latent_channels < 1 || base_width < 1 || blocks_per_stage < 0) {
    throw ConfigError("transform spec: channel counts must be positive");
  }
  if (scale_kernel < 1 || scale_kernel % 2 == 0) {
    throw ConfigError("transform spec: scale_kernel must be odd");
  }
}

std::array<int, kScaleStages> TransformSpec::StageChannels() const {
  std::array<int, kScaleStages> ch{};
  for (int k = 0; k < kScaleStages - 1; ++k) {
    ch[k] = std::min(base_width << k, latent_channels);
  }
  ch[kScaleStages - 1] = latent_channels;
  return ch;
}

const char* TaskKindName(TaskKind kind) {
  switch (kind) {
    case TaskKind::kReconstruction: return "reconstruction";
    case TaskKind::kDepth: return "depth";
    case TaskKind::kSegmentation: return "segmentation";
  }
  return "?";
}

TaskKind ParseTaskKind(const std::string& name) {
  if (name == "reconstruction") return TaskKind::kReconstruction;
  if (name == "depth" || name == "depth_regression") return TaskKind::kDepth;
  if (name == "segmentation") return TaskKind::kSegmentation;
  throw ConfigError("unknown task kind: " + name);
}

TaskHeadSpec TaskHeadSpec::For(TaskKind kind, int num_classes) {
  switch (kind) {
    case TaskKind::kReconstruction: return {kind, 3};
    case TaskKind::kDepth: return {kind, 1};
    case TaskKind::kSegmentation: return {kind, num_classes};
  }
  throw ConfigError("bad task kind");
}

namespace {

ConvGeometry DownGeometry(const TransformSpec& spec) {
  return {spec.scale_kernel, 2, spec.scale_kernel / 2, 0};
}

ConvGeometry UpGeometry(const TransformSpec& spec) {
  return {spec.scale_kernel, 2, spec.scale_kernel / 2, 1};
}

size_t ConvParams(int in, int out, int k) {
  return static_cast<size_t>(in) * out * k * k + out;
}

size_t BottleneckParams(int c) {
  const int mid = std::max(1, c / 2);
  return ConvParams(c, mid, 1) + ConvParams(mid, mid, 3) + ConvParams(mid, c, 1);
}

}  // namespace

template <typename T>
AnalysisTransform<T>::AnalysisTransform(const TransformSpec& spec) : spec_(spec) {
  spec.Validate();
  const auto ch = spec.StageChannels();
  int in = 3;
  for (int k = 0; k < kScaleStages; ++k) {
    const std::string stage = "stage" + std::to_string(k);
    net_.template Add<Conv2d<T>>(stage + ".down", in, ch[k], DownGeometry(spec));
    if (k + 1 < kScaleStages) {
      net_.template Add<Elu<T>>(stage + ".act");
      for (int b = 0; b < spec.blocks_per_stage; ++b) {
        net_.template Add<ResidualBottleneck<T>>(
            stage + ".block" + std::to_string(b), ch[k]);
      }
    }
    in = ch[k];
  }
}

template <typename T>
Tensor<T> AnalysisTransform<T>::Forward(const Tensor<T>& image) {
  if (image.c() != 3) throw ShapeError("analysis: expected 3 input channels");
  if (image.h() % kDownscaleFactor != 0 || image.w() % kDownscaleFactor != 0) {
    throw ShapeError("analysis: spatial dims " + image.shape().ToString() +
                     " not divisible by 16");
  }
  return net_.Forward(image);
}

template <typename T>
SynthesisTransform<T>::SynthesisTransform(const TransformSpec& spec,
                                          const TaskHeadSpec& head)
    : spec_(spec), head_(head) {
  spec.Validate();
  const auto ch = spec.StageChannels();
  // Mirror of the analysis: stage k maps ch[k] -> ch[k-1], the last stage
  // maps ch[0] -> task channels.
  for (int k = kScaleStages - 1; k >= 0; --k) {
    const std::string stage = "stage" + std::to_string(k);
    const int out = k > 0 ? ch[k - 1] : head.out_channels;
    net_.template Add<ConvTranspose2d<T>>(stage + ".up", ch[k], out,
                                          UpGeometry(spec));
    if (k > 0) {
      net_.template Add<Elu<T>>(stage + ".act");
      for (int b = 0; b < spec.blocks_per_stage; ++b) {
        net_.template Add<ResidualBottleneck<T>>(
            stage + ".block" + std::to_string(b), out);
      }
    }
  }
  if (head.kind != TaskKind::kSegmentation) {
    net_.template Add<SaturatingOutput<T>>("bound", T(0.5), T(0), T(1));
  }
}

template <typename T>
Tensor<T> SynthesisTransform<T>::Forward(const Tensor<T>& latent) {
  if (latent.c() != spec_.latent_channels) {
    throw ShapeError("synthesis: latent has " + std::to_string(latent.c()) +
                     " channels, spec expects " +
                     std::to_string(spec_.latent_channels));
  }
  return net_.Forward(latent);
}

size_t CountAnalysisParams(const TransformSpec& spec) {
  const auto ch = spec.StageChannels();
  size_t total = 0;
  int in = 3;
  for (int k = 0; k < kScaleStages; ++k) {
    total += ConvParams(in, ch[k], spec.scale_kernel);
    if (k + 1 < kScaleStages) total += spec.blocks_per_stage * BottleneckParams(ch[k]);
    in = ch[k];
  }
  return total;
}

size_t CountSynthesisParams(const TransformSpec& spec, const TaskHeadSpec& head) {
  const auto ch = spec.StageChannels();
  size_t total = 0;
  for (int k = kScaleStages - 1; k >= 0; --k) {
    const int out = k > 0 ? ch[k - 1] : head.out_channels;
    total += ConvParams(ch[k], out, spec.scale_kernel);
    if (k > 0) total += spec.blocks_per_stage * BottleneckParams(out);
  }
  return total;
}

template <typename T>
bool IsSubsumed(const ParameterList<T>& inner, const ParameterList<T>& outer) {
  std::map<std::string, Shape> shapes;
  for (const auto& p : outer) shapes[p.name] = p.param->value.shape();
  for (const auto& p : inner) {
    auto it = shapes.find(p.name);
    if (it == shapes.end()) return false;
    const Shape& a = p.param->value.shape();
    const Shape& b = it->second;
    if (a.n > b.n || a.c > b.c || a.h > b.h || a.w > b.w) return false;
  }
  return true;
}

template class AnalysisTransform<float>;
template class AnalysisTransform<double>;
template class SynthesisTransform<float>;
template class SynthesisTransform<double>;
template bool IsSubsumed(const ParameterList<float>&, const ParameterList<float>&);
template bool IsSubsumed(const ParameterList<double>&, const ParameterList<double>&);

}  // namespace taskcodec
