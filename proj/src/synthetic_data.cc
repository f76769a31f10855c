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

#include "taskcodec/synthetic_data.h"

#include <algorithm>
#include <array>
#include <cmath>

#include "json.hpp"
#include "taskcodec/image_io.h"

namespace taskcodec {

void DatasetSpec::Validate() const {
  if (size <= 0 || size % 16 != 0) {
    throw ConfigError("dataset: size " + std::to_string(size) +
                      " must be a positive multiple of 16");
  }
  if (num_classes < 2) throw ConfigError("dataset: num_classes must be >= 2");
  if (count < 1) throw ConfigError("dataset: count must be >= 1");
  if (generator_version != kGeneratorVersion) {
    throw ConfigError("dataset: unsupported generator_version " +
                      std::to_string(generator_version));
  }
}

namespace {

enum ShapeType { kDisk = 0, kRectangle = 1, kTriangle = 2 };
constexpr int kShapeTypes = 3;

struct ShapeInstance {
  ShapeType type;
  double cx, cy, radius;
  double half_w, half_h;  // rectangle extents
  std::array<double, 3> color;
};

bool Contains(const ShapeInstance& s, double px, double py) {
  const double dx = px - s.cx;
  const double dy = py - s.cy;
  switch (s.type) {
    case kDisk:
      return dx * dx + dy * dy <= s.radius * s.radius;
    case kRectangle:
      return std::abs(dx) <= s.half_w && std::abs(dy) <= s.half_h;
    case kTriangle: {
      // Upward triangle with apex (0, -r) and base corners (+-r, 0.8 r).
      const double ax = 0, ay = -s.radius;
      const double bx = -s.radius, by = 0.8 * s.radius;
      const double cx = s.radius, cy = 0.8 * s.radius;
      auto edge = [](double x0, double y0, double x1, double y1, double x, double y) {
        return (x1 - x0) * (y - y0) - (y1 - y0) * (x - x0);
      };
      const double e0 = edge(ax, ay, bx, by, dx, dy);
      const double e1 = edge(bx, by, cx, cy, dx, dy);
      const double e2 = edge(cx, cy, ax, ay, dx, dy);
      return (e0 <= 0 && e1 <= 0 && e2 <= 0) || (e0 >= 0 && e1 >= 0 && e2 >= 0);
    }
  }
  return false;
}

}  // namespace

ShapesSample GenerateSample(const DatasetSpec& spec, int64_t sample_id) {
  spec.Validate();
  const int s = spec.size;
  Rng rng(MixSeed(spec.dataset_seed, static_cast<uint64_t>(sample_id)));
  ShapesSample out;
  out.sample_id = sample_id;
  out.image = Tensor<float>(1, 3, s, s);
  out.depth = Tensor<float>(1, 1, s, s);
  out.segmentation = Tensor<float>(1, 1, s, s);

  // Background: base colour plus a bilinearly upsampled 5x5 offset grid.
  constexpr int kGrid = 5;
  std::array<double, 3> base;
  for (auto& b : base) b = rng.Uniform(0.25, 0.75);
  std::array<std::array<double, kGrid * kGrid>, 3> grid;
  for (auto& g : grid)
    for (auto& v : g) v = rng.Uniform(-0.15, 0.15);
  for (int y = 0; y < s; ++y) {
    const double gy = (y + 0.5) / s * (kGrid - 1);
    const int y0 = std::min(static_cast<int>(gy), kGrid - 2);
    const double ty = gy - y0;
    for (int x = 0; x < s; ++x) {
      const double gx = (x + 0.5) / s * (kGrid - 1);
      const int x0 = std::min(static_cast<int>(gx), kGrid - 2);
      const double tx = gx - x0;
      for (int c = 0; c < 3; ++c) {
        const auto& g = grid[c];
        const double v =
            (1 - ty) * ((1 - tx) * g[y0 * kGrid + x0] + tx * g[y0 * kGrid + x0 + 1]) +
            ty * ((1 - tx) * g[(y0 + 1) * kGrid + x0] + tx * g[(y0 + 1) * kGrid + x0 + 1]);
        out.image.at(0, c, y, x) = static_cast<float>(std::clamp(base[c] + v, 0.0, 1.0));
      }
    }
  }

  const double r_min = s / 10.0;
  const double r_max = s / 4.0;
  const int num_shapes = rng.UniformInt(1, 5);
  std::vector<ShapeInstance> shapes;
  for (int i = 0; i < num_shapes; ++i) {
    ShapeInstance sh;
    sh.type = static_cast<ShapeType>(rng.UniformInt(0, kShapeTypes - 1));
    sh.radius = rng.Uniform(r_min, r_max);
    sh.cx = rng.Uniform(sh.radius * 0.5, s - sh.radius * 0.5);
    sh.cy = rng.Uniform(sh.radius * 0.5, s - sh.radius * 0.5);
    sh.half_w = sh.radius * rng.Uniform(0.6, 1.0);
    sh.half_h = sh.radius * rng.Uniform(0.6, 1.0);
    for (auto& c : sh.color) c = rng.Uniform();
    shapes.push_back(sh);
  }

  // Painter's order: later shapes occlude earlier ones. Shapes are forced to
  // own at least their centre pixel so every sample has a labelled shape.
  for (const auto& sh : shapes) {
    const int cls = 1 + static_cast<int>(sh.type) % (spec.num_classes - 1);
    const double peak = sh.radius / r_max;
    const int ccx = std::clamp(static_cast<int>(sh.cx), 0, s - 1);
    const int ccy = std::clamp(static_cast<int>(sh.cy), 0, s - 1);
    for (int y = 0; y < s; ++y) {
      for (int x = 0; x < s; ++x) {
        const double px = x + 0.5;
        const double py = y + 0.5;
        if (!Contains(sh, px, py) && !(x == ccx && y == ccy)) continue;
        const double rho = std::min(1.0, std::hypot(px - sh.cx, py - sh.cy) / sh.radius);
        for (int c = 0; c < 3; ++c) out.image.at(0, c, y, x) = static_cast<float>(sh.color[c]);
        out.depth.at(0, 0, y, x) =
            static_cast<float>(std::clamp(peak * (0.5 + 0.5 * (1.0 - rho)), 0.0, 1.0));
        out.segmentation.at(0, 0, y, x) = static_cast<float>(cls);
      }
    }
  }
  return out;
}

std::vector<ShapesSample> GenerateDataset(uint64_t dataset_seed, int count,
                                          int size, int num_classes) {
  DatasetSpec spec{dataset_seed, count, size, num_classes, kGeneratorVersion};
  spec.Validate();
  std::vector<ShapesSample> out(count);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < count; ++i) out[i] = GenerateSample(spec, i);
  return out;
}

void AugmentationPolicy::Validate() const {
  if (horizontal_flip_prob < 0.0 || horizontal_flip_prob > 1.0) {
    throw ConfigError("augmentation: flip probability outside [0, 1]");
  }
  if (jitter_brightness < 0.0 || jitter_contrast < 0.0 || jitter_saturation < 0.0) {
    throw ConfigError("augmentation: jitter half-ranges must be >= 0");
  }
  if (jitter_contrast > 1.0 || jitter_saturation > 1.0) {
    throw ConfigError("augmentation: contrast/saturation half-ranges must be <= 1");
  }
}

namespace {

void FlipColumns(Tensor<float>& t) {
  for (int c = 0; c < t.c(); ++c)
    for (int y = 0; y < t.h(); ++y)
      for (int x = 0; x < t.w() / 2; ++x) {
        std::swap(t.at(0, c, y, x), t.at(0, c, y, t.w() - 1 - x));
      }
}

}  // namespace

ShapesSample Augment(const ShapesSample& sample, const AugmentationPolicy& policy,
                     Rng& rng) {
  policy.Validate();
  ShapesSample out = sample;
  if (policy.horizontal_flip_prob > 0.0 && rng.Bernoulli(policy.horizontal_flip_prob)) {
    FlipColumns(out.image);
    if (out.has_targets()) {
      FlipColumns(out.depth);
      FlipColumns(out.segmentation);
    }
  }
  Tensor<float>& img = out.image;
  const size_t plane = img.shape().plane();
  float* r = img.data();
  float* g = r + plane;
  float* b = g + plane;
  if (policy.jitter_brightness > 0.0) {
    const float delta =
        static_cast<float>(rng.Uniform(-policy.jitter_brightness, policy.jitter_brightness));
    for (size_t i = 0; i < img.size(); ++i) img[i] += delta;
  }
  if (policy.jitter_contrast > 0.0) {
    const float factor = static_cast<float>(
        rng.Uniform(1.0 - policy.jitter_contrast, 1.0 + policy.jitter_contrast));
    double mean = 0.0;
    for (size_t i = 0; i < plane; ++i) mean += 0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i];
    const float m = static_cast<float>(mean / plane);
    for (size_t i = 0; i < img.size(); ++i) img[i] = (img[i] - m) * factor + m;
  }
  if (policy.jitter_saturation > 0.0) {
    const float factor = static_cast<float>(
        rng.Uniform(1.0 - policy.jitter_saturation, 1.0 + policy.jitter_saturation));
    for (size_t i = 0; i < plane; ++i) {
      const float gray = 0.299f * r[i] + 0.587f * g[i] + 0.114f * b[i];
      r[i] = gray + (r[i] - gray) * factor;
      g[i] = gray + (g[i] - gray) * factor;
      b[i] = gray + (b[i] - gray) * factor;
    }
  }
  if (policy.jitter_brightness > 0.0 || policy.jitter_contrast > 0.0 ||
      policy.jitter_saturation > 0.0) {
    for (size_t i = 0; i < img.size(); ++i) img[i] = std::clamp(img[i], 0.0f, 1.0f);
  }
  return out;
}

std::string DatasetManifestJson(const DatasetSpec& spec) {
  nlohmann::ordered_json j;
  j["dataset_seed"] = spec.dataset_seed;
  j["count"] = spec.count;
  j["size"] = spec.size;
  j["num_classes"] = spec.num_classes;
  j["generator_version"] = spec.generator_version;
  return j.dump(2);
}

DatasetSpec ParseDatasetManifest(const std::string& json) {
  const auto j = nlohmann::json::parse(json);
  DatasetSpec spec;
  spec.dataset_seed = j.at("dataset_seed").get<uint64_t>();
  spec.count = j.at("count").get<int>();
  spec.size = j.at("size").get<int>();
  spec.num_classes = j.at("num_classes").get<int>();
  spec.generator_version = j.at("generator_version").get<int>();
  spec.Validate();
  return spec;
}

std::vector<ShapesSample> LoadImageFolder(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto ext = entry.path().extension();
    if (entry.is_regular_file() && (ext == ".ppm" || ext == ".PPM")) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<ShapesSample> out;
  for (size_t i = 0; i < files.size(); ++i) {
    ShapesSample s;
    s.image = ReadPnm(files[i]);
    if (s.image.c() != 3) throw ConfigError(files[i].string() + ": expected RGB");
    if (s.image.h() % 16 != 0 || s.image.w() % 16 != 0) {
      throw ConfigError(files[i].string() + ": sides must be divisible by 16");
    }
    s.sample_id = static_cast<int64_t>(i);
    out.push_back(std::move(s));
  }
  return out;
}

namespace {

Tensor<float> BatchField(const std::vector<const ShapesSample*>& samples,
                         Tensor<float> ShapesSample::*field) {
  if (samples.empty()) throw ShapeError("empty batch");
  std::vector<Tensor<float>> items;
  items.reserve(samples.size());
  for (const auto* s : samples) {
    if ((s->*field).empty()) throw ConfigError("sample has no targets");
    items.push_back(s->*field);
  }
  return Stack<float>(items);
}

}  // namespace

Tensor<float> BatchImages(const std::vector<const ShapesSample*>& samples) {
  return BatchField(samples, &ShapesSample::image);
}
Tensor<float> BatchDepth(const std::vector<const ShapesSample*>& samples) {
  return BatchField(samples, &ShapesSample::depth);
}
Tensor<float> BatchSegmentation(const std::vector<const ShapesSample*>& samples) {
  return BatchField(samples, &ShapesSample::segmentation);
}

}  // namespace taskcodec
