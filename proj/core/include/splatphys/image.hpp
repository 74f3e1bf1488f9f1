// Copyright 2026 The splatphys Authors.
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

#ifndef SPLATPHYS_IMAGE_HPP_
#define SPLATPHYS_IMAGE_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "splatphys/tensor.hpp"

namespace splatphys {

// Row-major H x W x 3 buffer of reals in [0, 1].
struct Image {
  int width = 0;
  int height = 0;
  std::vector<double> rgb;

  Image() = default;
  Image(int w, int h) : width(w), height(h), rgb(3 * w * h, 0.0) {}

  double& at(int x, int y, int c) { return rgb[3 * (y * width + x) + c]; }
  double at(int x, int y, int c) const { return rgb[3 * (y * width + x) + c]; }
  bool same_size(const Image& o) const {
    return width == o.width && height == o.height;
  }

  // (h, w, 3) tensor, detached.
  Tensor to_tensor() const;
  static Image from_tensor(const Tensor& t);
};

// Values clamped to [0, 1] and rounded to the nearest of 256 levels, as
// stored by the 8-bit writers.
Image quantize_8bit(Image image);

// Binary PPM (P6, 8-bit).
void write_ppm(const std::filesystem::path& path, const Image& image);
Image read_ppm(const std::filesystem::path& path);
// 8-bit RGB PNG.
void write_png(const std::filesystem::path& path, const Image& image);
Image read_png(const std::filesystem::path& path);
// 8-bit palette PNG of integer labels.
void write_indexed_png(const std::filesystem::path& path, int width,
                       int height, const std::vector<int>& labels,
                       const std::vector<std::array<std::uint8_t, 3>>& palette);

// Evenly spread, saturated label colors.
std::vector<std::array<std::uint8_t, 3>> label_palette(int count);

}  // namespace splatphys

#endif  // SPLATPHYS_IMAGE_HPP_
