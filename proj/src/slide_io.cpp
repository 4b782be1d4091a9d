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

#include "tumorloc/slide_io.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <optional>

#include "tumorloc/error.hpp"

namespace tumorloc {

namespace detail {

// Decoded level pixels, filled on first use. One once_flag per level keeps
// concurrent first reads from decoding twice.
class LevelStore {
 public:
  enum class Source { kMemory, kPng, kTiff };

  LevelStore(Source source, std::filesystem::path path, std::vector<int> pages)
      : source_(source), path_(std::move(path)), pages_(std::move(pages)),
        flags_(pages_.size()), images_(pages_.size()) {}

  explicit LevelStore(std::vector<RgbImage> images)
      : source_(Source::kMemory), flags_(images.size()), images_(images.size()) {
    for (std::size_t i = 0; i < images.size(); ++i) {
      images_[i] = std::move(images[i]);
    }
  }

  const RgbImage& Get(int level) const {
    if (source_ == Source::kMemory) {
      return *images_[static_cast<std::size_t>(level)];
    }
    auto idx = static_cast<std::size_t>(level);
    std::call_once(flags_[idx], [&] {
      images_[idx] = source_ == Source::kPng ? ReadPng(path_) : ReadTiffPage(path_, pages_[idx]);
    });
    return *images_[idx];
  }

 private:
  Source source_;
  std::filesystem::path path_;
  std::vector<int> pages_;
  mutable std::vector<std::once_flag> flags_;
  mutable std::vector<std::optional<RgbImage>> images_;
};

}  // namespace detail

namespace {

std::vector<LevelInfo> BuildLevels(const std::vector<std::pair<int, int>>& dims,
                                   const std::string& what) {
  std::vector<LevelInfo> levels;
  const auto [w0, h0] = dims.front();
  for (const auto& [w, h] : dims) {
    if (w < 1 || h < 1) {
      throw Error(ErrorCode::kEmptyImage, what);
    }
    const double ds_w = static_cast<double>(w0) / w;
    const double ds_h = static_cast<double>(h0) / h;
    if (std::abs(ds_w - ds_h) > 0.01 * ds_w) {
      throw Error(ErrorCode::kCorruptImage,
                  what + ": level " + std::to_string(w) + "x" + std::to_string(h) +
                      " has inconsistent width/height downsample");
    }
    levels.push_back({w, h, ds_w});
  }
  return levels;
}

}  // namespace

SlideSource SlideSource::Open(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorCode::kIoError, "no such file: " + path.string());
  }
  SlideSource slide;
  slide.slide_id_ = path.stem().string();

  if (LooksLikePng(path)) {
    // Decoding up front validates the file; PNG has no cheap header-only probe here.
    RgbImage image = ReadPng(path);
    slide.levels_ = {{image.width(), image.height(), 1.0}};
    std::vector<RgbImage> images;
    images.push_back(std::move(image));
    slide.store_ = std::make_shared<const detail::LevelStore>(std::move(images));
    return slide;
  }
  if (LooksLikeTiff(path)) {
    std::vector<TiffPageInfo> pages = ProbeTiff(path);
    std::stable_sort(pages.begin(), pages.end(), [](const TiffPageInfo& a, const TiffPageInfo& b) {
      return static_cast<long long>(a.width) * a.height > static_cast<long long>(b.width) * b.height;
    });
    std::vector<std::pair<int, int>> dims;
    std::vector<int> order;
    for (const auto& p : pages) {
      dims.emplace_back(p.width, p.height);
      order.push_back(p.index);
    }
    slide.levels_ = BuildLevels(dims, path.string());
    slide.store_ = std::make_shared<const detail::LevelStore>(detail::LevelStore::Source::kTiff,
                                                              path, std::move(order));
    return slide;
  }
  throw Error(ErrorCode::kUnsupportedFormat, path.string() + " is neither PNG nor TIFF");
}

SlideSource SlideSource::FromImages(std::string slide_id, std::vector<RgbImage> levels) {
  if (levels.empty()) {
    throw Error(ErrorCode::kEmptyImage, "slide " + slide_id + " has no levels");
  }
  SlideSource slide;
  slide.slide_id_ = std::move(slide_id);
  std::vector<std::pair<int, int>> dims;
  for (const auto& img : levels) {
    dims.emplace_back(img.width(), img.height());
  }
  slide.levels_ = BuildLevels(dims, slide.slide_id_);
  for (std::size_t i = 1; i < slide.levels_.size(); ++i) {
    if (slide.levels_[i].downsample < slide.levels_[i - 1].downsample) {
      throw Error(ErrorCode::kInvalidArgument, "levels must be ordered largest first");
    }
  }
  slide.store_ = std::make_shared<const detail::LevelStore>(std::move(levels));
  return slide;
}

const LevelInfo& SlideSource::level(int index) const {
  if (index < 0 || index >= level_count()) {
    throw Error(ErrorCode::kOutOfBounds, "slide " + slide_id_ + " has no level " + std::to_string(index));
  }
  return levels_[static_cast<std::size_t>(index)];
}

RgbImage SlideSource::ReadRegion(int level_index, int x, int y, int w, int h) const {
  const LevelInfo& info = level(level_index);
  if (x < 0 || y < 0 || w < 0 || h < 0 || x > info.width - w || y > info.height - h) {
    throw Error(ErrorCode::kOutOfBounds, "region outside level " + std::to_string(level_index));
  }
  return store_->Get(level_index).crop(x, y, w, h);
}

GridShape TileGridShape(const SlideSource& slide, int level, int tile_size) {
  if (tile_size < 1) {
    throw Error(ErrorCode::kInvalidArgument, "tile_size must be >= 1");
  }
  const LevelInfo& info = slide.level(level);
  return {info.width / tile_size, info.height / tile_size};
}

std::vector<TileCoord> TileGrid(const SlideSource& slide, int level, int tile_size) {
  const GridShape shape = TileGridShape(slide, level, tile_size);
  if (shape.cols == 0 || shape.rows == 0) {
    const LevelInfo& info = slide.level(level);
    throw Error(ErrorCode::kNoTiles, "level " + std::to_string(level) + " (" +
                                         std::to_string(info.width) + "x" +
                                         std::to_string(info.height) + ") is smaller than one " +
                                         std::to_string(tile_size) + " px tile");
  }
  std::vector<TileCoord> coords;
  coords.reserve(static_cast<std::size_t>(shape.cols) * static_cast<std::size_t>(shape.rows));
  for (int r = 0; r < shape.rows; ++r) {
    for (int c = 0; c < shape.cols; ++c) {
      coords.push_back({c, r, level, c * tile_size, r * tile_size, tile_size});
    }
  }
  return coords;
}

TileRecord ExtractTile(const SlideSource& slide, const TileCoord& coord) {
  if (coord.tile_size < 1 || coord.x != coord.col * coord.tile_size ||
      coord.y != coord.row * coord.tile_size) {
    throw Error(ErrorCode::kInvalidArgument, "inconsistent tile coordinate");
  }
  if (coord.level < 0 || coord.level >= slide.level_count()) {
    throw Error(ErrorCode::kOutOfBounds, "tile level does not exist");
  }
  const GridShape shape = TileGridShape(slide, coord.level, coord.tile_size);
  if (coord.col < 0 || coord.row < 0 || coord.col >= shape.cols || coord.row >= shape.rows) {
    throw Error(ErrorCode::kOutOfBounds, "tile (" + std::to_string(coord.col) + ", " +
                                             std::to_string(coord.row) + ") outside the grid");
  }
  return {coord,
          slide.ReadRegion(coord.level, coord.x, coord.y, coord.tile_size, coord.tile_size),
          slide.slide_id()};
}

PixelPoint Level0Origin(const SlideSource& slide, const TileCoord& coord) {
  const double ds = slide.level(coord.level).downsample;
  return {std::llround(coord.x * ds), std::llround(coord.y * ds)};
}

}  // namespace tumorloc
