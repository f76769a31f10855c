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

#ifndef TASKCODEC_RANGE_CODER_H_
#define TASKCODEC_RANGE_CODER_H_

// Boundary to the entropy coder and the "TCC1" plane bitstream.
//
// Symbols cross the boundary as flat int32 arrays and CDF rows in the
// QuantizedCdfTable layout; coded data crosses as byte buffers. A symbol
// outside [s_min, s_max] is coded as the row's escape slot followed by its
// raw 32-bit value.
//
// The builtin coder is a 64-bit-state rANS coder with 16-bit probabilities
// and 32-bit renormalization. Encoding needs every row up front; decoding
// pulls one row per symbol, so rows may depend on already-decoded symbols.

#include <cstdint>
#include <span>
#include <vector>

#include "taskcodec/entropy_model.h"

namespace taskcodec {

namespace coder {

// Codes symbols[i] with table.row(i). Throws ContractViolation on invalid
// rows or a symbol/row count mismatch, before producing output.
std::vector<uint8_t> Encode(std::span<const int32_t> symbols, const QuantizedCdfTable& table);

class DecodeSession {
 public:
  explicit DecodeSession(std::span<const uint8_t> payload);

  // Decodes the next symbol with a row of s_max - s_min + 3 entries.
  // Throws FormatError when the payload runs out.
  int32_t NextSymbol(std::span<const uint32_t> row, int32_t s_min);

  // Throws FormatError unless the payload was consumed exactly and the
  // coder returned to its initial state.
  void Finish() const;

 private:
  uint32_t ReadWord();
  uint32_t DecodeSlot(std::span<const uint32_t> row, size_t& index);

  std::span<const uint8_t> payload_;
  size_t offset_ = 0;
  uint64_t state_ = 0;
};

// Worst-case coder overhead allowed over the ideal code length.
double OverheadBoundBits(double ideal_bits);

// Ideal code length of `symbols` under the quantized rows.
double IdealBits(std::span<const int32_t> symbols, const QuantizedCdfTable& table);

}  // namespace coder

inline constexpr uint8_t kBitstreamVersion = 1;

// "TCC1" | version u8 | dims n, c, h, w (u32) | s_min i32 | s_max i32 |
// payload_bytes u32 | payload | crc32(payload) u32. Little-endian.
struct BitstreamHeader {
  Shape dims;
  int32_t s_min = 0;
  int32_t s_max = 0;
};

struct Bitstream {
  BitstreamHeader header;
  std::vector<uint8_t> payload;
};

inline constexpr size_t kBitstreamHeaderBytes = 4 + 1 + 16 + 8 + 4;
inline constexpr size_t kBitstreamTrailerBytes = 4;

std::vector<uint8_t> WriteBitstream(const Bitstream& stream);

// Validates magic, version, length and checksum before returning; any
// failure is a FormatError. Returns the number of bytes consumed.
Bitstream ReadBitstream(std::span<const uint8_t> bytes, size_t* consumed = nullptr);

}  // namespace taskcodec

#endif  // TASKCODEC_RANGE_CODER_H_
