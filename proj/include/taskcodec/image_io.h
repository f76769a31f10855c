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

#ifndef TASKCODEC_IMAGE_IO_H_
#define TASKCODEC_IMAGE_IO_H_

#include <filesystem>

#include "taskcodec/tensor.h"

namespace taskcodec {

// Binary PPM (P6) / PGM (P5), 8 bits per channel. Values map to [0, 1].
Tensor<float> ReadPnm(const std::filesystem::path& path);
// Writes (1, 3, H, W) as P6 or (1, 1, H, W) as P5; values are clamped and
// rounded to 8 bits.
void WritePnm(const std::filesystem::path& path, const Tensor<float>& image);

}  // namespace taskcodec

#endif  // TASKCODEC_IMAGE_IO_H_
