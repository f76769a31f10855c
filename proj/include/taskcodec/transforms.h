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

#ifndef TASKCODEC_TRANSFORMS_H_
#define TASKCODEC_TRANSFORMS_H_

// Analysis (image -> latent) and synthesis (latent -> task output)
// transforms: four factor-2 scaling convolutions interleaved with stacks of
// residual bottleneck blocks, ELU activations, no attention.

#include <array>
#include <cstddef>
#include <string>

#include "taskcodec/layers.h"

namespace taskcodec {

inline constexpr int kScaleStages = 4;
inline constexpr int kDownscaleFactor = 16;

struct TransformSpec {
  int latent_channels = 64;
  int base_width = 8;
  int blocks_per_stage = 1;
  int scale_kernel = 3;  // odd

  void Validate() const;
  // Output channels of each scaling stage; the last equals latent_channels.
  std::array<int, kScaleStages> StageChannels() const;
  bool operator==(const TransformSpec&) const = default;
};

enum class TaskKind { kReconstruction, kDepth, kSegmentation };

const char* TaskKindName(TaskKind kind);
TaskKind ParseTaskKind(const std::string& name);

struct TaskHeadSpec {
  TaskKind kind = TaskKind::kReconstruction;
  int out_channels = 3;

  static TaskHeadSpec For(TaskKind kind, int num_classes);
  bool operator==(const TaskHeadSpec&) const = default;
};

template <typename T>
class AnalysisTransform {
 public:
  explicit AnalysisTransform(const TransformSpec& spec);

  // (N, 3, H, W) -> (N, M, H/16, W/16); throws ShapeError when H or W is
  // not divisible by 16.
  Tensor<T> Forward(const Tensor<T>& image);
  Tensor<T> Backward(const Tensor<T>& dlatent) { return net_.Backward(dlatent); }

  void Initialize(Rng& rng) { net_.Initialize(rng); }
  void CollectParameters(const std::string& prefix, ParameterList<T>& out) {
    net_.CollectParameters(prefix, out);
  }
  const TransformSpec& spec() const { return spec_; }

 private:
  TransformSpec spec_;
  Sequential<T> net_;
};

template <typename T>
class SynthesisTransform {
 public:
  SynthesisTransform(const TransformSpec& spec, const TaskHeadSpec& head);

  // (N, M, h, w) -> (N, out_channels, 16h, 16w). Reconstruction and depth
  // outputs are bounded to [0, 1]; segmentation outputs are raw scores.
  Tensor<T> Forward(const Tensor<T>& latent);
  Tensor<T> Backward(const Tensor<T>& doutput) { return net_.Backward(doutput); }

  void Initialize(Rng& rng) { net_.Initialize(rng); }
  void CollectParameters(const std::string& prefix, ParameterList<T>& out) {
    net_.CollectParameters(prefix, out);
  }
  const TransformSpec& spec() const { return spec_; }
  const TaskHeadSpec& head() const { return head_; }

 private:
  TransformSpec spec_;
  TaskHeadSpec head_;
  Sequential<T> net_;
};

// Exact learnable-parameter counts from the layer algebra.
size_t CountAnalysisParams(const TransformSpec& spec);
size_t CountSynthesisParams(const TransformSpec& spec, const TaskHeadSpec& head);

// True when every parameter of `inner` has a same-named counterpart in
// `outer` whose every dimension is at least as large.
template <typename T>
bool IsSubsumed(const ParameterList<T>& inner, const ParameterList<T>& outer);

}  // namespace taskcodec

#endif  // TASKCODEC_TRANSFORMS_H_
