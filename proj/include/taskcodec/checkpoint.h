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

#ifndef TASKCODEC_CHECKPOINT_H_
#define TASKCODEC_CHECKPOINT_H_

// Checkpoint bundles: a JSON header (config echo, metadata, training
// history, parameter index) followed by little-endian float32 blobs.
//
//   "TCKP" | version u32 | header_bytes u64 | header JSON | blobs

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "taskcodec/tensor.h"

namespace taskcodec {

using ParamMap = std::vector<std::pair<std::string, Tensor<float>>>;

inline constexpr uint32_t kCheckpointVersion = 1;

struct CheckpointBundle {
  std::string kind;         // "base" or "secondary"
  nlohmann::json config;    // experiment config echo
  nlohmann::json meta;      // specs, lambda, beta, mode, seed, base hash
  nlohmann::json history;   // per-epoch records
  ParamMap params;

  // SHA-256 over parameter names, shapes and values, in order.
  std::string ContentHash() const;
  const Tensor<float>& Param(const std::string& name) const;
};

std::string HashParams(const ParamMap& params);
// Hex SHA-256 of arbitrary bytes.
std::string Sha256Hex(std::span<const uint8_t> bytes);

std::vector<uint8_t> SerializeCheckpoint(const CheckpointBundle& bundle);
CheckpointBundle ParseCheckpoint(std::span<const uint8_t> bytes);

void SaveCheckpoint(const CheckpointBundle& bundle, const std::filesystem::path& path);
CheckpointBundle LoadCheckpoint(const std::filesystem::path& path);

std::vector<uint8_t> ReadFileBytes(const std::filesystem::path& path);
void WriteFileBytes(const std::filesystem::path& path, std::span<const uint8_t> bytes);
void WriteTextFile(const std::filesystem::path& path, const std::string& text);
std::string ReadTextFile(const std::filesystem::path& path);

}  // namespace taskcodec

#endif  // TASKCODEC_CHECKPOINT_H_
