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

#ifndef TASKCODEC_CODEC_FILE_H_
#define TASKCODEC_CODEC_FILE_H_

// Lossless coding of quantized latents into TCC1 bitstreams, and the
// image-level encode/decode built on top of it. A scalable file is the base
// stream followed by the enhancement stream.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "taskcodec/entropy_model.h"
#include "taskcodec/models.h"
#include "taskcodec/range_coder.h"

namespace taskcodec {

// Symbols outside [-kSymbolLimit, kSymbolLimit] always take the escape path.
inline constexpr int32_t kSymbolLimit = 255;

// Elements are ordered position-major, channel-minor: the order in which
// the autoregressive decoder produces parameters.
struct CodingTables {
  std::vector<int32_t> symbols;
  QuantizedCdfTable table;
};

// `y_hat` is a single integer-valued latent (1, M, H, W); `side_latent` is
// the base latent when the model has a side branch.
CodingTables BuildCodingTables(EntropyModel<float>& model, const Tensor<float>& y_hat,
                               const Tensor<float>* side_latent);

Bitstream EncodeLatent(EntropyModel<float>& model, const Tensor<float>& y_hat,
                       const Tensor<float>* side_latent);

// Sequential decode; the result equals the encoded latent exactly.
Tensor<float> DecodeLatent(EntropyModel<float>& model, const Bitstream& stream,
                           const Tensor<float>* side_latent);

// `image` is (1, 3, H, W).
std::vector<uint8_t> EncodeImage(BaseModel& base, SecondaryModel* enhancement,
                                 const Tensor<float>& image);

struct DecodedImage {
  Tensor<float> base_latent;
  Tensor<float> base_output;  // g_b prediction
  std::optional<Tensor<float>> enhancement_latent;
  std::optional<Tensor<float>> enhancement_output;
  size_t base_bytes = 0;
  size_t enhancement_bytes = 0;
};

// Decodes the base stream and, when `enhancement` is given and a second
// stream follows, the enhancement stream. Trailing bytes are an error.
DecodedImage DecodeImage(BaseModel& base, SecondaryModel* enhancement,
                         std::span<const uint8_t> bytes);

}  // namespace taskcodec

#endif  // TASKCODEC_CODEC_FILE_H_
