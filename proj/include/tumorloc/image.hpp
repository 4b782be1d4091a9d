// Copyright 2026 The tumorloc Authors. All Rights Reserved.
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

/// @file image.hpp
/// @brief Interleaved 8-bit RGB raster plus PNG / TIFF codecs.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace tumorloc {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Row-major interleaved RGB image. Pixel (x, y) lives at byte 3 * (y * width + x).
class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(int width, int height, Rgb fill = {});

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return width_ == 0 || height_ == 0; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }

  Rgb at(int x, int y) const noexcept {
    const std::uint8_t* p = &data_[offset(x, y)];
    return {p[0], p[1], p[2]};
  }
  void set(int x, int y, Rgb c) noexcept {
    std::uint8_t* p = &data_[offset(x, y)];
    p[0] = c.r;
    p[1] = c.g;
    p[2] = c.b;
  }

  std::span<std::uint8_t> bytes() noexcept { return data_; }
  std::span<const std::uint8_t> bytes() const noexcept { return data_; }
  std::span<std::uint8_t> row(int y) noexcept {
    return {data_.data() + offset(0, y), static_cast<std::size_t>(width_) * 3};
  }
  std::span<const std::uint8_t> row(int y) const noexcept {
    return {data_.data() + offset(0, y), static_cast<std::size_t>(width_) * 3};
  }

  /// Copies the rectangle [x, x + w) x [y, y + h). Caller guarantees bounds.
  RgbImage crop(int x, int y, int w, int h) const;
  /// Writes `src` with its top-left corner at (x, y). Caller guarantees bounds.
  void paste(const RgbImage& src, int x, int y);

  friend bool operator==(const RgbImage&, const RgbImage&) = default;

 private:
  std::size_t offset(int x, int y) const noexcept {
    return 3 * (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
                static_cast<std::size_t>(x));
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Single-channel 8-bit image, used for masks.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;
};

// PNG. Reading accepts 8-bit RGB and RGBA (alpha is dropped); anything else is
// UnsupportedFormat.
RgbImage ReadPng(const std::filesystem::path& path);
/// Any 8-bit PNG, converted to one gray channel.
GrayImage ReadGrayPng(const std::filesystem::path& path);
void WritePng(const std::filesystem::path& path, const RgbImage& image);
void WritePng(const std::filesystem::path& path, const GrayImage& image);
bool LooksLikePng(const std::filesystem::path& path);

// TIFF. Each page (directory) must be 8-bit, 3-sample, chunky RGB.
struct TiffPageInfo {
  int index = 0;
  int width = 0;
  int height = 0;
};
std::vector<TiffPageInfo> ProbeTiff(const std::filesystem::path& path);
RgbImage ReadTiffPage(const std::filesystem::path& path, int page_index);
/// Writes one page per image, in the given order. `tile_size` > 0 writes tiled pages.
void WriteTiff(const std::filesystem::path& path, std::span<const RgbImage> pages,
               int tile_size = 0);
bool LooksLikeTiff(const std::filesystem::path& path);

}  // namespace tumorloc
