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

#include <filesystem>

#include <gtest/gtest.h>

#include "taskcodec/checkpoint.h"
#include "taskcodec/image_io.h"
#include "taskcodec/synthetic_data.h"

namespace taskcodec {
namespace {

bool SameTensor(const Tensor<float>& a, const Tensor<float>& b) {
  if (!(a.shape() == b.shape())) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return false;
  return true;
}

TEST(SyntheticData, DeterministicPerSampleId) {
  DatasetSpec spec;
  const auto a = GenerateSample(spec, 17);
  const auto b = GenerateSample(spec, 17);
  const auto c = GenerateSample(spec, 18);
  EXPECT_TRUE(SameTensor(a.image, b.image));
  EXPECT_TRUE(SameTensor(a.depth, b.depth));
  EXPECT_TRUE(SameTensor(a.segmentation, b.segmentation));
  EXPECT_FALSE(SameTensor(a.image, c.image));
  const auto all = GenerateDataset(spec.dataset_seed, 20, spec.size, spec.num_classes);
  EXPECT_TRUE(SameTensor(all[17].image, a.image));
}

TEST(SyntheticData, TargetsAreConsistent) {
  DatasetSpec spec;
  spec.num_classes = 5;
  const auto data = GenerateDataset(3, 200, 64, 5);
  double background = 0.0, pixels = 0.0;
  for (const auto& s : data) {
    ASSERT_EQ(s.image.shape(), (Shape{1, 3, 64, 64}));
    ASSERT_EQ(s.depth.shape(), (Shape{1, 1, 64, 64}));
    for (size_t i = 0; i < s.image.size(); ++i) {
      ASSERT_GE(s.image[i], 0.0f);
      ASSERT_LE(s.image[i], 1.0f);
    }
    for (size_t i = 0; i < s.depth.size(); ++i) {
      const float label = s.segmentation[i];
      ASSERT_EQ(label, std::round(label));
      ASSERT_GE(label, 0.0f);
      ASSERT_LT(label, 5.0f);
      ASSERT_GE(s.depth[i], 0.0f);
      ASSERT_LE(s.depth[i], 1.0f);
      // Background has zero depth; shapes have positive depth.
      ASSERT_EQ(label == 0.0f, s.depth[i] == 0.0f);
      background += label == 0.0f;
      pixels += 1.0;
    }
  }
  const double fraction = background / pixels;
  EXPECT_GE(fraction, 0.4);
  EXPECT_LE(fraction, 0.9);
}

TEST(SyntheticData, RejectsBadSpecs) {
  DatasetSpec spec;
  spec.size = 40;
  EXPECT_THROW(spec.Validate(), ConfigError);
  spec.size = 64;
  spec.num_classes = 1;
  EXPECT_THROW(spec.Validate(), ConfigError);
}

TEST(SyntheticData, ManifestRoundTrips) {
  DatasetSpec spec;
  spec.dataset_seed = 99;
  spec.count = 33;
  spec.size = 32;
  spec.num_classes = 6;
  const auto back = ParseDatasetManifest(DatasetManifestJson(spec));
  EXPECT_EQ(back.dataset_seed, 99u);
  EXPECT_EQ(back.count, 33);
  EXPECT_EQ(back.size, 32);
  EXPECT_EQ(back.num_classes, 6);
  EXPECT_EQ(DatasetManifestJson(back), DatasetManifestJson(spec));
}

TEST(Augment, FlipMovesTargetsWithTheImage) {
  const auto s = GenerateSample(DatasetSpec{}, 5);
  AugmentationPolicy flip = AugmentationPolicy::Identity();
  flip.horizontal_flip_prob = 1.0;
  Rng rng(1);
  const auto f = Augment(s, flip, rng);
  const int w = s.image.w();
  for (int y = 0; y < s.image.h(); ++y)
    for (int x = 0; x < w; ++x) {
      ASSERT_EQ(f.image.at(0, 1, y, x), s.image.at(0, 1, y, w - 1 - x));
      ASSERT_EQ(f.depth.at(0, 0, y, x), s.depth.at(0, 0, y, w - 1 - x));
      ASSERT_EQ(f.segmentation.at(0, 0, y, x), s.segmentation.at(0, 0, y, w - 1 - x));
    }
}

TEST(Augment, IdentityPolicyIsANoOpAndJitterLeavesTargets) {
  const auto s = GenerateSample(DatasetSpec{}, 6);
  Rng rng(2);
  EXPECT_TRUE(SameTensor(Augment(s, AugmentationPolicy::Identity(), rng).image, s.image));
  AugmentationPolicy jitter;
  jitter.horizontal_flip_prob = 0.0;
  const auto j = Augment(s, jitter, rng);
  EXPECT_FALSE(SameTensor(j.image, s.image));
  EXPECT_TRUE(SameTensor(j.depth, s.depth));
  for (size_t i = 0; i < j.image.size(); ++i) {
    ASSERT_GE(j.image[i], 0.0f);
    ASSERT_LE(j.image[i], 1.0f);
  }
}

TEST(ImageFolder, LoadsSortedPpmsWithoutTargets) {
  const auto dir = std::filesystem::temp_directory_path() / "taskcodec_folder_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const auto a = GenerateSample(DatasetSpec{}, 1).image;
  const auto b = GenerateSample(DatasetSpec{}, 2).image;
  WritePnm(dir / "b.ppm", b);
  WritePnm(dir / "a.ppm", a);
  const auto loaded = LoadImageFolder(dir);
  ASSERT_EQ(loaded.size(), 2u);
  EXPECT_FALSE(loaded[0].has_targets());
  for (size_t i = 0; i < a.size(); ++i) {
    EXPECT_NEAR(loaded[0].image[i], a[i], 0.5 / 255 + 1e-6);
    EXPECT_NEAR(loaded[1].image[i], b[i], 0.5 / 255 + 1e-6);
  }
  WriteTextFile(dir / "c.ppm", "P6\n40 40\n255\n");
  EXPECT_THROW(LoadImageFolder(dir), std::exception);
  std::filesystem::remove_all(dir);
}

TEST(Batching, StacksSamples) {
  const auto data = GenerateDataset(1, 3, 32, 4);
  std::vector<const ShapesSample*> ptrs = {&data[0], &data[1], &data[2]};
  EXPECT_EQ(BatchImages(ptrs).shape(), (Shape{3, 3, 32, 32}));
  EXPECT_EQ(BatchDepth(ptrs).shape(), (Shape{3, 1, 32, 32}));
  EXPECT_EQ(BatchSegmentation(ptrs).shape(), (Shape{3, 1, 32, 32}));
}

}  // namespace
}  // namespace taskcodec
