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

#ifndef TASKCODEC_SYNTHETIC_DATA_H_
#define TASKCODEC_SYNTHETIC_DATA_H_

// Procedural "shapes world": RGB images of 1-5 disks, rectangles and
// triangles over a smooth background, with a depth map and a per-pixel
// shape-type segmentation. Every sample is a pure function of
// (dataset_seed, sample_id).

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "taskcodec/rng.h"
#include "taskcodec/tensor.h"

namespace taskcodec {

inline constexpr int kGeneratorVersion = 1;

struct ShapesSample {
  Tensor<float> image;         // (1, 3, S, S), values in [0, 1]
  Tensor<float> depth;         // (1, 1, S, S), values in [0, 1]; empty without targets
  Tensor<float> segmentation;  // (1, 1, S, S), class ids; empty without targets
  int64_t sample_id = 0;

  bool has_targets() const { return !depth.empty(); }
};

struct DatasetSpec {
  uint64_t dataset_seed = 7;
  int count = 512;
  int size = 64;
  int num_classes = 4;
  int generator_version = kGeneratorVersion;

  void Validate() const;
};

ShapesSample GenerateSample(const DatasetSpec& spec, int64_t sample_id);

std::vector<ShapesSample> GenerateDataset(uint64_t dataset_seed, int count,
                                          int size, int num_classes);

struct AugmentationPolicy {
  double horizontal_flip_prob = 0.5;
  double jitter_brightness = 0.1;  // additive offset half-range
  double jitter_contrast = 0.1;    // multiplicative half-range around 1
  double jitter_saturation = 0.1;  // multiplicative half-range around 1

  static AugmentationPolicy Identity() { return {0.0, 0.0, 0.0, 0.0}; }
  void Validate() const;
};

// Flips act on the image and both targets; jitter acts on the image only
// and the result is clamped to [0, 1].
ShapesSample Augment(const ShapesSample& sample, const AugmentationPolicy& policy,
                     Rng& rng);

// Manifest JSON: {dataset_seed, count, size, num_classes, generator_version}.
std::string DatasetManifestJson(const DatasetSpec& spec);
DatasetSpec ParseDatasetManifest(const std::string& json);

// Loads every binary PPM in `dir` (sorted by name) as a target-less sample.
// Image sides must be divisible by 16.
std::vector<ShapesSample> LoadImageFolder(const std::filesystem::path& dir);

// Batches of samples as (N, ...) tensors.
Tensor<float> BatchImages(const std::vector<const ShapesSample*>& samples);
Tensor<float> BatchDepth(const std::vector<const ShapesSample*>& samples);
Tensor<float> BatchSegmentation(const std::vector<const ShapesSample*>& samples);

}  // namespace taskcodec

#endif  // TASKCODEC_SYNTHETIC_DATA_H_
