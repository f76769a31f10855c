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

#include "taskcodec/checkpoint.h"

#include <cstring>
#include <fstream>

#include <openssl/evp.h>

namespace taskcodec {

namespace {

constexpr char kMagic[4] = {'T', 'C', 'K', 'P'};

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new()) {
    if (ctx_ == nullptr || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1) {
      throw std::runtime_error("sha256: init failed");
    }
  }
  ~Sha256() { EVP_MD_CTX_free(ctx_); }
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void Update(const void* data, size_t n) { EVP_DigestUpdate(ctx_, data, n); }
  std::string HexDigest() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_, md, &len);
    static const char* kHex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
      out.push_back(kHex[md[i] >> 4]);
      out.push_back(kHex[md[i] & 15]);
    }
    return out;
  }

 private:
  EVP_MD_CTX* ctx_;
};

void AppendLe(std::vector<uint8_t>& out, uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

uint64_t ReadLe(std::span<const uint8_t> b, size_t off, int bytes) {
  uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<uint64_t>(b[off + i]) << (8 * i);
  return v;
}

void AppendFloats(std::vector<uint8_t>& out, const Tensor<float>& t) {
  for (size_t i = 0; i < t.size(); ++i) {
    uint32_t bits;
    std::memcpy(&bits, &t[i], 4);
    AppendLe(out, bits, 4);
  }
}

}  // namespace

std::string HashParams(const ParamMap& params) {
  Sha256 h;
  std::vector<uint8_t> buf;
  for (const auto& [name, t] : params) {
    buf.clear();
    AppendLe(buf, name.size(), 8);
    buf.insert(buf.end(), name.begin(), name.end());
    for (int d : {t.n(), t.c(), t.h(), t.w()}) AppendLe(buf, static_cast<uint32_t>(d), 4);
    AppendFloats(buf, t);
    h.Update(buf.data(), buf.size());
  }
  return h.HexDigest();
}

std::string Sha256Hex(std::span<const uint8_t> bytes) {
  Sha256 h;
  h.Update(bytes.data(), bytes.size());
  return h.HexDigest();
}

std::string CheckpointBundle::ContentHash() const { return HashParams(params); }

const Tensor<float>& CheckpointBundle::Param(const std::string& name) const {
  for (const auto& [n, t] : params) {
    if (n == name) return t;
  }
  throw ConfigError("checkpoint: no parameter named " + name);
}

std::vector<uint8_t> SerializeCheckpoint(const CheckpointBundle& bundle) {
  nlohmann::ordered_json header;
  header["kind"] = bundle.kind;
  header["config"] = bundle.config;
  header["meta"] = bundle.meta;
  header["history"] = bundle.history;
  header["content_hash"] = bundle.ContentHash();
  nlohmann::ordered_json index = nlohmann::ordered_json::array();
  for (const auto& [name, t] : bundle.params) {
    index.push_back({{"name", name}, {"shape", {t.n(), t.c(), t.h(), t.w()}}});
  }
  header["params"] = index;
  const std::string text = header.dump();
  std::vector<uint8_t> out(kMagic, kMagic + 4);
  AppendLe(out, kCheckpointVersion, 4);
  AppendLe(out, text.size(), 8);
  out.insert(out.end(), text.begin(), text.end());
  for (const auto& [name, t] : bundle.params) AppendFloats(out, t);
  return out;
}

CheckpointBundle ParseCheckpoint(std::span<const uint8_t> bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("checkpoint: bad magic");
  }
  if (ReadLe(bytes, 4, 4) != kCheckpointVersion) throw FormatError("checkpoint: unsupported version");
  const uint64_t header_bytes = ReadLe(bytes, 8, 8);
  if (header_bytes > bytes.size() - 16) throw FormatError("checkpoint: truncated header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + 16, bytes.begin() + 16 + header_bytes);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint: header is not JSON: ") + e.what());
  }
  CheckpointBundle b;
  b.kind = header.at("kind").get<std::string>();
  b.config = header.at("config");
  b.meta = header.at("meta");
  b.history = header.at("history");
  size_t off = 16 + header_bytes;
  for (const auto& entry : header.at("params")) {
    const auto& s = entry.at("shape");
    Tensor<float> t(s[0].get<int>(), s[1].get<int>(), s[2].get<int>(), s[3].get<int>());
    if (bytes.size() - off < 4 * t.size()) throw FormatError("checkpoint: truncated blobs");
    for (size_t i = 0; i < t.size(); ++i) {
      const uint32_t bits = static_cast<uint32_t>(ReadLe(bytes, off + 4 * i, 4));
      std::memcpy(&t[i], &bits, 4);
    }
    off += 4 * t.size();
    b.params.emplace_back(entry.at("name").get<std::string>(), std::move(t));
  }
  if (off != bytes.size()) throw FormatError("checkpoint: trailing bytes");
  if (b.ContentHash() != header.at("content_hash").get<std::string>()) {
    throw FormatError("checkpoint: content hash mismatch");
  }
  return b;
}

std::vector<uint8_t> ReadFileBytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  return std::vector<uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void WriteFileBytes(const std::filesystem::path& path, std::span<const uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ConfigError("write failed: " + path.string());
}

void WriteTextFile(const std::filesystem::path& path, const std::string& text) {
  WriteFileBytes(path, std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(text.data()),
                                                text.size()));
}

std::string ReadTextFile(const std::filesystem::path& path) {
  const auto bytes = ReadFileBytes(path);
  return std::string(bytes.begin(), bytes.end());
}

void SaveCheckpoint(const CheckpointBundle& bundle, const std::filesystem::path& path) {
  WriteFileBytes(path, SerializeCheckpoint(bundle));
}

CheckpointBundle LoadCheckpoint(const std::filesystem::path& path) {
  return ParseCheckpoint(ReadFileBytes(path));
}

}  // namespace taskcodec
