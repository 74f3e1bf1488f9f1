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

#include "splatphys/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>

namespace splatphys {

namespace {

std::uint8_t quantize(double v) {
  return static_cast<std::uint8_t>(
      std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) {
    throw std::runtime_error("cannot open '" + path.string() + "' (" +
                             (mode[0] == 'w' ? "write" : "read") + ")");
  }
  return f;
}

void write_png_rows(const std::filesystem::path& path, int width, int height,
                    int color_type,
                    const std::vector<std::array<std::uint8_t, 3>>* palette,
                    const std::vector<std::uint8_t>& pixels, int channels) {
  FilePtr f = open_file(path, "wb");
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng: cannot allocate writer");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng: failed writing '" + path.string() + "'");
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, width, height, 8, color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  std::vector<png_color> plte;
  if (palette) {
    for (const auto& c : *palette) plte.push_back({c[0], c[1], c[2]});
    png_set_PLTE(png, info, plte.data(), static_cast<int>(plte.size()));
  }
  // Fixed timestamps and no text chunks keep output byte-stable.
  png_write_info(png, info);
  std::vector<png_bytep> rows(height);
  for (int y = 0; y < height; ++y) {
    rows[y] = const_cast<png_bytep>(pixels.data() +
                                    static_cast<std::size_t>(y) * width *
                                        channels);
  }
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

Image quantize_8bit(Image image) {
  for (double& v : image.rgb) v = quantize(v) / 255.0;
  return image;
}

Tensor Image::to_tensor() const {
  return Tensor({static_cast<std::size_t>(height),
                 static_cast<std::size_t>(width), 3},
                rgb);
}

Image Image::from_tensor(const Tensor& t) {
  if (t.rank() != 3 || t.dim(2) != 3) {
    throw ShapeError("Image::from_tensor: expected (h, w, 3), got " +
                     shape_string(t.shape()));
  }
  Image img(static_cast<int>(t.dim(1)), static_cast<int>(t.dim(0)));
  img.rgb = t.values();
  return img;
}

void write_ppm(const std::filesystem::path& path, const Image& image) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open '" + path.string() + "'");
  os << "P6\n" << image.width << ' ' << image.height << "\n255\n";
  std::string bytes(image.rgb.size(), '\0');
  for (std::size_t i = 0; i < image.rgb.size(); ++i) {
    bytes[i] = static_cast<char>(quantize(image.rgb[i]));
  }
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw std::runtime_error("failed writing '" + path.string() + "'");
}

Image read_ppm(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  is >> magic >> w >> h >> maxval;
  is.get();
  if (magic != "P6" || w <= 0 || h <= 0 || maxval != 255) {
    throw std::runtime_error("'" + path.string() + "' is not an 8-bit P6 PPM");
  }
  Image img(w, h);
  std::string bytes(img.rgb.size(), '\0');
  is.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!is) throw std::runtime_error("truncated PPM '" + path.string() + "'");
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    img.rgb[i] = static_cast<unsigned char>(bytes[i]) / 255.0;
  }
  return img;
}

void write_png(const std::filesystem::path& path, const Image& image) {
  std::vector<std::uint8_t> px(image.rgb.size());
  std::transform(image.rgb.begin(), image.rgb.end(), px.begin(), quantize);
  write_png_rows(path, image.width, image.height, PNG_COLOR_TYPE_RGB, nullptr,
                 px, 3);
}

Image read_png(const std::filesystem::path& path) {
  FilePtr f = open_file(path, "rb");
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("libpng: cannot allocate reader");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("libpng: failed reading '" + path.string() + "'");
  }
  png_init_io(png, f.get());
  png_read_info(png, info);
  png_set_expand(png);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_gray_to_rgb(png);
  png_read_update_info(png, info);
  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  std::vector<std::uint8_t> px(static_cast<std::size_t>(w) * h * 3);
  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y) rows[y] = px.data() + static_cast<std::size_t>(y) * w * 3;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  Image img(w, h);
  for (std::size_t i = 0; i < px.size(); ++i) img.rgb[i] = px[i] / 255.0;
  return img;
}

void write_indexed_png(const std::filesystem::path& path, int width,
                       int height, const std::vector<int>& labels,
                       const std::vector<std::array<std::uint8_t, 3>>& palette) {
  if (labels.size() != static_cast<std::size_t>(width) * height) {
    throw std::invalid_argument("write_indexed_png: label count mismatch");
  }
  if (palette.empty() || palette.size() > 256) {
    throw std::invalid_argument("write_indexed_png: palette needs 1..256 colors");
  }
  std::vector<std::uint8_t> px(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= static_cast<int>(palette.size())) {
      throw std::invalid_argument("write_indexed_png: label " +
                                  std::to_string(labels[i]) +
                                  " outside palette");
    }
    px[i] = static_cast<std::uint8_t>(labels[i]);
  }
  write_png_rows(path, width, height, PNG_COLOR_TYPE_PALETTE, &palette, px, 1);
}

std::vector<std::array<std::uint8_t, 3>> label_palette(int count) {
  std::vector<std::array<std::uint8_t, 3>> out;
  out.push_back({0, 0, 0});  // background
  for (int i = 0; i < count; ++i) {
    // HSV hue wheel at full saturation/value.
    const double h = 6.0 * i / std::max(count, 1);
    const int sector = static_cast<int>(h) % 6;
    const double frac = h - std::floor(h);
    const auto up = static_cast<std::uint8_t>(std::lround(255 * frac));
    const auto down = static_cast<std::uint8_t>(std::lround(255 * (1 - frac)));
    switch (sector) {
      case 0: out.push_back({255, up, 0}); break;
      case 1: out.push_back({down, 255, 0}); break;
      case 2: out.push_back({0, 255, up}); break;
      case 3: out.push_back({0, down, 255}); break;
      case 4: out.push_back({up, 0, 255}); break;
      default: out.push_back({255, 0, down}); break;
    }
  }
  return out;
}

}  // namespace splatphys
