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

#include "taskcodec/codec_file.h"
#include "taskcodec/experiment.h"
#include "tiny_config.h"

namespace taskcodec {
namespace {

struct Trained {
  ExperimentConfig config = testing::TinyConfig();
  DataSplits data = BuildSplits(config.data);
  CheckpointBundle base;
  CheckpointBundle scalable;

  Trained() {
    base = TrainBase(config, data, 16.0, 0.1, 1, nullptr);
    scalable = TrainSecondary(config, data, base, TaskKind::kReconstruction,
                              SecondaryMode::kScalable, 4.0, 1, nullptr);
  }
};

const Trained& Models() {
  static const Trained t;
  return t;
}

Tensor<float> Image(const ShapesSample& s) { return s.image; }

bool Same(const Tensor<float>& a, const Tensor<float>& b) {
  if (!(a.shape() == b.shape())) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return false;
  return true;
}

TEST(CodecFile, LatentRoundTripMatchesInMemoryEvaluation) {
  const auto& t = Models();
  auto base = LoadBaseModel(t.base);
  auto enh = LoadSecondaryModel(t.scalable);
  const auto samples = GenerateDataset(t.config.data.seed + 1, 10, t.config.data.size,
                                       t.config.data.num_classes);
  for (const auto& s : samples) {
    const auto x = Image(s);
    const auto bytes = EncodeImage(*base, enh.get(), x);
    const auto decoded = DecodeImage(*base, enh.get(), bytes);
    const auto y_b = base->EncodeLatent(x);
    ASSERT_TRUE(Same(decoded.base_latent, y_b));
    ASSERT_TRUE(Same(decoded.base_output, base->synthesis.Forward(y_b)));
    const auto y_e = SteRound(enh->analysis.Forward(x));
    ASSERT_TRUE(decoded.enhancement_latent.has_value());
    ASSERT_TRUE(Same(*decoded.enhancement_latent, y_e));
    ASSERT_TRUE(Same(*decoded.enhancement_output, enh->synthesis.Forward(y_e)));
    EXPECT_EQ(decoded.base_bytes + decoded.enhancement_bytes, bytes.size());
  }
}

TEST(CodecFile, PayloadTracksRateEstimate) {
  const auto& t = Models();
  auto base = LoadBaseModel(t.base);
  auto enh = LoadSecondaryModel(t.scalable);
  for (const auto& s : t.data.test) {
    const auto y_b = base->EncodeLatent(s.image);
    const double est_b = EstimateRate(y_b, base->entropy.Forward(y_b, nullptr)).total_bits;
    const auto stream_b = EncodeLatent(base->entropy, y_b, nullptr);
    const double bits_b = 8.0 * stream_b.payload.size();
    EXPECT_LE(bits_b, est_b + coder::OverheadBoundBits(est_b));
    const auto tables = BuildCodingTables(base->entropy, y_b, nullptr);
    EXPECT_GE(bits_b, coder::IdealBits(tables.symbols, tables.table) - 1.0);

    const auto y_e = SteRound(enh->analysis.Forward(s.image));
    const double est_e = EstimateRate(y_e, enh->entropy.Forward(y_e, &y_b)).total_bits;
    const double bits_e = 8.0 * EncodeLatent(enh->entropy, y_e, &y_b).payload.size();
    EXPECT_LE(bits_e, est_e + coder::OverheadBoundBits(est_e));
  }
}

TEST(CodecFile, TruncatedOrCorruptFilesFailClosed) {
  const auto& t = Models();
  auto base = LoadBaseModel(t.base);
  auto enh = LoadSecondaryModel(t.scalable);
  const auto bytes = EncodeImage(*base, enh.get(), t.data.test[0].image);
  const std::span<const uint8_t> all(bytes);
  EXPECT_THROW(DecodeImage(*base, enh.get(), all.first(bytes.size() - 3)), FormatError);
  EXPECT_THROW(DecodeImage(*base, enh.get(), all.first(20)), FormatError);
  auto bad = bytes;
  bad[1] = 'X';
  EXPECT_THROW(DecodeImage(*base, enh.get(), bad), FormatError);
  bad = bytes;
  bad[4] = 9;
  EXPECT_THROW(DecodeImage(*base, enh.get(), bad), FormatError);
  bad = bytes;
  bad[kBitstreamHeaderBytes + 2] ^= 1;
  EXPECT_THROW(DecodeImage(*base, enh.get(), bad), FormatError);
  // Base-only decoding of a scalable file leaves trailing bytes.
  EXPECT_THROW(DecodeImage(*base, nullptr, bytes), FormatError);
}

TEST(CodecFile, BaseOnlyFiles) {
  const auto& t = Models();
  auto base = LoadBaseModel(t.base);
  const auto bytes = EncodeImage(*base, nullptr, t.data.test[1].image);
  const auto decoded = DecodeImage(*base, nullptr, bytes);
  EXPECT_FALSE(decoded.enhancement_latent.has_value());
  EXPECT_EQ(decoded.base_bytes, bytes.size());
}

}  // namespace
}  // namespace taskcodec
