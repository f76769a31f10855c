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

#include "taskcodec/codec_file.h"

#include <algorithm>

#include "taskcodec/quantizer.h"

namespace taskcodec {

namespace {

void CheckLatent(const EntropyModel<float>& model, const Tensor<float>& y_hat) {
  if (y_hat.n() != 1 || y_hat.c() != model.spec().latent_channels) {
    throw ShapeError("latent coding expects a single (1, M, H, W) latent, got " +
                     y_hat.shape().ToString());
  }
}

}  // namespace

CodingTables BuildCodingTables(EntropyModel<float>& model, const Tensor<float>& y_hat,
                               const Tensor<float>* side_latent) {
  CheckLatent(model, y_hat);
  const GaussianFieldParams<float> params = model.Forward(y_hat, side_latent);
  const SymbolPlane plane = Symbolize(y_hat, params.mu);
  const int m = y_hat.c();
  const int positions = y_hat.h() * y_hat.w();
  int32_t lo = 0, hi = 0;
  for (int32_t s : plane.symbols) {
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  CodingTables out;
  out.table.s_min = std::max(lo, -kSymbolLimit);
  out.table.s_max = std::min(hi, kSymbolLimit);
  out.symbols.reserve(plane.symbols.size());
  out.table.entries.reserve(plane.symbols.size() * (out.table.symbols() + 2));
  for (int p = 0; p < positions; ++p) {
    for (int c = 0; c < m; ++c) {
      const size_t i = static_cast<size_t>(c) * positions + p;
      out.symbols.push_back(plane.symbols[i]);
      AppendCdfRow(params.mu[i], params.sigma[i], out.table.s_min, out.table.s_max,
                   out.table.entries);
    }
  }
  return out;
}

Bitstream EncodeLatent(EntropyModel<float>& model, const Tensor<float>& y_hat,
                       const Tensor<float>* side_latent) {
  const CodingTables t = BuildCodingTables(model, y_hat, side_latent);
  Bitstream s;
  s.header.dims = y_hat.shape();
  s.header.s_min = t.table.s_min;
  s.header.s_max = t.table.s_max;
  s.payload = coder::Encode(t.symbols, t.table);
  return s;
}

Tensor<float> DecodeLatent(EntropyModel<float>& model, const Bitstream& stream,
                           const Tensor<float>* side_latent) {
  const BitstreamHeader& h = stream.header;
  if (h.dims.n != 1 || h.dims.c != model.spec().latent_channels || h.dims.h < 1 ||
      h.dims.w < 1) {
    throw FormatError("bitstream dims " + h.dims.ToString() + " do not fit the model");
  }
  if (h.s_min > h.s_max || h.s_min < -kSymbolLimit || h.s_max > kSymbolLimit) {
    throw FormatError("bitstream symbol range is invalid");
  }
  Tensor<float> side_features;
  const Tensor<float>* side = nullptr;
  if (model.spec().has_side()) {
    if (side_latent == nullptr) throw ContractViolation("decode: model needs the side latent");
    side_features = model.SideFeatures(*side_latent);
    side = &side_features;
  }
  AutoregressiveDecoder<float> decoder(model, h.dims.h, h.dims.w, side);
  coder::DecodeSession session(stream.payload);
  const int m = h.dims.c;
  std::vector<float> mu(m), sigma(m), values(m);
  std::vector<uint32_t> row;
  while (!decoder.done()) {
    decoder.NextParams(mu, sigma);
    for (int c = 0; c < m; ++c) {
      row.clear();
      AppendCdfRow(mu[c], sigma[c], h.s_min, h.s_max, row);
      const int32_t s = session.NextSymbol(row, h.s_min);
      values[c] = DesymbolizeOne(s, mu[c]);
    }
    decoder.Commit(values);
  }
  session.Finish();
  return decoder.plane();
}

std::vector<uint8_t> EncodeImage(BaseModel& base, SecondaryModel* enhancement,
                                 const Tensor<float>& image) {
  if (image.n() != 1 || image.c() != 3) throw ShapeError("encode expects a (1, 3, H, W) image");
  const Tensor<float> y_b = base.EncodeLatent(image);
  std::vector<uint8_t> out = WriteBitstream(EncodeLatent(base.entropy, y_b, nullptr));
  if (enhancement != nullptr) {
    if (!enhancement->coded()) throw ConfigError("direct-mode models have no enhancement stream");
    const Tensor<float> y_e = SteRound(enhancement->analysis.Forward(image));
    const auto enh = WriteBitstream(EncodeLatent(enhancement->entropy, y_e, &y_b));
    out.insert(out.end(), enh.begin(), enh.end());
  }
  return out;
}

DecodedImage DecodeImage(BaseModel& base, SecondaryModel* enhancement,
                         std::span<const uint8_t> bytes) {
  DecodedImage out;
  size_t used = 0;
  const Bitstream b = ReadBitstream(bytes, &used);
  out.base_bytes = used;
  out.base_latent = DecodeLatent(base.entropy, b, nullptr);
  out.base_output = base.synthesis.Forward(out.base_latent);
  bytes = bytes.subspan(used);
  if (enhancement != nullptr && !bytes.empty()) {
    if (!enhancement->coded()) throw ConfigError("direct-mode models have no enhancement stream");
    const Bitstream e = ReadBitstream(bytes, &used);
    out.enhancement_bytes = used;
    out.enhancement_latent = DecodeLatent(enhancement->entropy, e, &out.base_latent);
    out.enhancement_output = enhancement->synthesis.Forward(*out.enhancement_latent);
    bytes = bytes.subspan(used);
  }
  if (!bytes.empty()) throw FormatError("trailing bytes after the last bitstream");
  return out;
}

}  // namespace taskcodec
