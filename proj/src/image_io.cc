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

#include "taskcodec/image_io.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

namespace taskcodec {

namespace {

// Reads the next header token, skipping whitespace and '#' comments.
std::string NextToken(std::istream& in) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

}  // namespace

Tensor<float> ReadPnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  const std::string magic = NextToken(in);
  int channels;
  if (magic == "P6") {
    channels = 3;
  } else if (magic == "P5") {
    channels = 1;
  } else {
    throw std::runtime_error(path.string() + ": not a binary PPM/PGM file");
  }
  const int width = std::stoi(NextToken(in));
  const int height = std::stoi(NextToken(in));
  const int maxval = std::stoi(NextToken(in));
  if (width <= 0 || height <= 0 || maxval != 255) {
    throw std::runtime_error(path.string() + ": unsupported PNM header");
  }
  std::vector<unsigned char> raw(static_cast<size_t>(width) * height * channels);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
    throw std::runtime_error(path.string() + ": truncated pixel data");
  }
  Tensor<float> img(1, channels, height, width);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < channels; ++c) {
        img.at(0, c, y, x) =
            raw[(static_cast<size_t>(y) * width + x) * channels + c] / 255.0f;
      }
  return img;
}

void WritePnm(const std::filesystem::path& path, const Tensor<float>& image) {
  if (image.n() != 1 || (image.c() != 3 && image.c() != 1)) {
    throw ShapeError("WritePnm: expected (1, 3|1, H, W), got " + image.shape().ToString());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << (image.c() == 3 ? "P6" : "P5") << "\n"
      << image.w() << " " << image.h() << "\n255\n";
  std::vector<unsigned char> raw(image.size());
  for (int y = 0; y < image.h(); ++y)
    for (int x = 0; x < image.w(); ++x)
      for (int c = 0; c < image.c(); ++c) {
        const float v = std::clamp(image.at(0, c, y, x), 0.0f, 1.0f);
        raw[(static_cast<size_t>(y) * image.w() + x) * image.c() + c] =
            static_cast<unsigned char>(std::lround(v * 255.0f));
      }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
}

}  // namespace taskcodec
