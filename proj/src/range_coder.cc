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

#include "taskcodec/range_coder.h"

#include <algorithm>
#include <cmath>
#include <cstring>

#include <zlib.h>

namespace taskcodec {
namespace coder {

namespace {

constexpr uint64_t kLow = 1ull << 31;
constexpr int kScaleBits = kCdfPrecision;

struct Slot {
  uint32_t start;
  uint32_t freq;
};

void PutWord(std::vector<uint8_t>& out, uint32_t w) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(w >> (8 * i)));
}

}  // namespace

std::vector<uint8_t> Encode(std::span<const int32_t> symbols, const QuantizedCdfTable& table) {
  ValidateCdfTable(table);
  if (symbols.size() != table.rows()) {
    throw ContractViolation("coder: " + std::to_string(symbols.size()) + " symbols but " +
                            std::to_string(table.rows()) + " rows");
  }
  if (symbols.empty()) return {};
  // Slots in decode order; escapes expand to three slots.
  std::vector<Slot> slots;
  slots.reserve(symbols.size());
  const int n = table.symbols();
  for (size_t i = 0; i < symbols.size(); ++i) {
    const auto row = table.row(i);
    const int64_t k = static_cast<int64_t>(symbols[i]) - table.s_min;
    if (k >= 0 && k < n) {
      slots.push_back({row[k], row[k + 1] - row[k]});
    } else {
      slots.push_back({row[n], row[n + 1] - row[n]});
      const uint32_t raw = static_cast<uint32_t>(symbols[i]);
      slots.push_back({raw & 0xFFFFu, 1});
      slots.push_back({raw >> 16, 1});
    }
  }
  uint64_t x = kLow;
  std::vector<uint32_t> words;
  for (auto it = slots.rbegin(); it != slots.rend(); ++it) {
    const uint64_t x_max = ((kLow >> kScaleBits) << 32) * it->freq;
    if (x >= x_max) {
      words.push_back(static_cast<uint32_t>(x));
      x >>= 32;
    }
    x = ((x / it->freq) << kScaleBits) + (x % it->freq) + it->start;
  }
  std::vector<uint8_t> out;
  out.reserve(8 + 4 * words.size());
  PutWord(out, static_cast<uint32_t>(x >> 32));
  PutWord(out, static_cast<uint32_t>(x));
  for (auto it = words.rbegin(); it != words.rend(); ++it) PutWord(out, *it);
  return out;
}

DecodeSession::DecodeSession(std::span<const uint8_t> payload) : payload_(payload) {
  if (payload_.size() % 4 != 0) throw FormatError("coder: payload is not word aligned");
  if (payload_.empty()) {
    state_ = kLow;
    return;
  }
  const uint64_t hi = ReadWord();
  state_ = (hi << 32) | ReadWord();
}

uint32_t DecodeSession::ReadWord() {
  if (offset_ + 4 > payload_.size()) throw FormatError("coder: payload truncated");
  uint32_t w = 0;
  for (int i = 0; i < 4; ++i) w |= static_cast<uint32_t>(payload_[offset_ + i]) << (8 * i);
  offset_ += 4;
  return w;
}

uint32_t DecodeSession::DecodeSlot(std::span<const uint32_t> row, size_t& index) {
  const uint32_t slot = static_cast<uint32_t>(state_ & ((1u << kScaleBits) - 1));
  // Largest k with row[k] <= slot.
  const auto it = std::upper_bound(row.begin(), row.end() - 1, slot);
  index = static_cast<size_t>(it - row.begin()) - 1;
  const uint32_t start = row[index];
  const uint32_t freq = row[index + 1] - start;
  state_ = freq * (state_ >> kScaleBits) + slot - start;
  if (state_ < kLow) state_ = (state_ << 32) | ReadWord();
  return slot;
}

int32_t DecodeSession::NextSymbol(std::span<const uint32_t> row, int32_t s_min) {
  if (row.size() < 3 || row.front() != 0 || row.back() != (1u << kScaleBits)) {
    throw ContractViolation("coder: invalid cdf row");
  }
  const size_t n = row.size() - 2;
  size_t index = 0;
  DecodeSlot(row, index);
  if (index < n) return s_min + static_cast<int32_t>(index);
  // Escape: two raw 16-bit halves, low first.
  uint32_t halves[2];
  for (uint32_t& h : halves) {
    h = static_cast<uint32_t>(state_ & 0xFFFFu);
    state_ >>= kScaleBits;
    if (state_ < kLow) state_ = (state_ << 32) | ReadWord();
  }
  return static_cast<int32_t>(halves[0] | (halves[1] << 16));
}

void DecodeSession::Finish() const {
  if (offset_ != payload_.size() || state_ != kLow) {
    throw FormatError("coder: payload does not match the supplied rows");
  }
}

double OverheadBoundBits(double ideal_bits) { return 64.0 + std::ceil(0.01 * ideal_bits); }

double IdealBits(std::span<const int32_t> symbols, const QuantizedCdfTable& table) {
  const int n = table.symbols();
  double bits = 0.0;
  for (size_t i = 0; i < symbols.size(); ++i) {
    const auto row = table.row(i);
    const int64_t k = static_cast<int64_t>(symbols[i]) - table.s_min;
    const size_t slot = (k >= 0 && k < n) ? static_cast<size_t>(k) : static_cast<size_t>(n);
    bits += kScaleBits - std::log2(static_cast<double>(row[slot + 1] - row[slot]));
    if (slot == static_cast<size_t>(n)) bits += 32.0;
  }
  return bits;
}

}  // namespace coder

namespace {

constexpr char kMagic[4] = {'T', 'C', 'C', '1'};

void PutU32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

uint32_t GetU32(std::span<const uint8_t> b, size_t off) {
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[off + i]) << (8 * i);
  return v;
}

uint32_t Crc32(std::span<const uint8_t> data) {
  uLong crc = crc32(0L, Z_NULL, 0);
  return static_cast<uint32_t>(
      crc32(crc, data.data(), static_cast<uInt>(data.size())));
}

}  // namespace

std::vector<uint8_t> WriteBitstream(const Bitstream& stream) {
  std::vector<uint8_t> out(kMagic, kMagic + 4);
  out.push_back(kBitstreamVersion);
  const Shape& d = stream.header.dims;
  for (int v : {d.n, d.c, d.h, d.w}) PutU32(out, static_cast<uint32_t>(v));
  PutU32(out, static_cast<uint32_t>(stream.header.s_min));
  PutU32(out, static_cast<uint32_t>(stream.header.s_max));
  PutU32(out, static_cast<uint32_t>(stream.payload.size()));
  out.insert(out.end(), stream.payload.begin(), stream.payload.end());
  PutU32(out, Crc32(stream.payload));
  return out;
}

Bitstream ReadBitstream(std::span<const uint8_t> bytes, size_t* consumed) {
  if (bytes.size() < kBitstreamHeaderBytes + kBitstreamTrailerBytes) {
    throw FormatError("bitstream: truncated header");
  }
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("bitstream: bad magic");
  if (bytes[4] != kBitstreamVersion) {
    throw FormatError("bitstream: unsupported version " + std::to_string(bytes[4]));
  }
  Bitstream s;
  Shape& d = s.header.dims;
  d.n = static_cast<int>(GetU32(bytes, 5));
  d.c = static_cast<int>(GetU32(bytes, 9));
  d.h = static_cast<int>(GetU32(bytes, 13));
  d.w = static_cast<int>(GetU32(bytes, 17));
  s.header.s_min = static_cast<int32_t>(GetU32(bytes, 21));
  s.header.s_max = static_cast<int32_t>(GetU32(bytes, 25));
  const size_t length = GetU32(bytes, 29);
  if (d.n < 0 || d.c < 0 || d.h < 0 || d.w < 0 || s.header.s_max < s.header.s_min) {
    throw FormatError("bitstream: invalid header fields");
  }
  if (bytes.size() - kBitstreamHeaderBytes - kBitstreamTrailerBytes < length) {
    throw FormatError("bitstream: truncated payload");
  }
  const auto payload = bytes.subspan(kBitstreamHeaderBytes, length);
  if (Crc32(payload) != GetU32(bytes, kBitstreamHeaderBytes + length)) {
    throw FormatError("bitstream: checksum mismatch");
  }
  s.payload.assign(payload.begin(), payload.end());
  if (consumed) *consumed = kBitstreamHeaderBytes + length + kBitstreamTrailerBytes;
  return s;
}

}  // namespace taskcodec
