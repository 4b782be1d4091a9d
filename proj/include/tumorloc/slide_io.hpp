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

/// @file slide_io.hpp
/// @brief Leveled slide abstraction over PNG and (pyramidal) RGB TIFF files,
/// plus the non-overlapping tile grid cut from one level.
///
/// A slide is a list of levels sorted by ascending downsample. Level 0 is the
/// full-resolution image. For a multi-page TIFF every page is a level; pages
/// are ordered by descending pixel area and each downsample is the width ratio
/// to level 0, which must agree with the height ratio within 1%.
///
/// Level pixels are decoded lazily on first access and then shared read-only,
/// so a SlideSource can be copied cheaply and read from several threads.

#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "tumorloc/image.hpp"

namespace tumorloc {

inline constexpr int kDefaultTileSize = 224;

struct LevelInfo {
  int width = 0;
  int height = 0;
  double downsample = 1.0;
};

namespace detail {
class LevelStore;
}

class SlideSource {
 public:
  /// Opens a PNG or 8-bit RGB TIFF. The slide id is the file stem.
  static SlideSource Open(const std::filesystem::path& path);
  /// Wraps in-memory levels (largest first). Used by tests and synthetic slides.
  static SlideSource FromImages(std::string slide_id, std::vector<RgbImage> levels);

  const std::string& slide_id() const noexcept { return slide_id_; }
  const std::vector<LevelInfo>& levels() const noexcept { return levels_; }
  int level_count() const noexcept { return static_cast<int>(levels_.size()); }
  const LevelInfo& level(int index) const;

  /// Returns exactly w * h pixels of `level` starting at (x, y). OutOfBounds otherwise.
  RgbImage ReadRegion(int level, int x, int y, int w, int h) const;

 private:
  std::string slide_id_;
  std::vector<LevelInfo> levels_;
  std::shared_ptr<const detail::LevelStore> store_;
};

struct TileCoord {
  int col = 0;
  int row = 0;
  int level = 0;
  int x = 0;  // origin in the level's pixel space
  int y = 0;
  int tile_size = kDefaultTileSize;

  friend bool operator==(const TileCoord&, const TileCoord&) = default;
};

struct TileRecord {
  TileCoord coord;
  RgbImage pixels;
  std::string slide_id;
};

/// Row-major grid of floor(W / tile_size) x floor(H / tile_size) tiles. Partial
/// edge tiles are dropped. NoTiles if the level is smaller than one tile.
std::vector<TileCoord> TileGrid(const SlideSource& slide, int level,
                                int tile_size = kDefaultTileSize);

struct GridShape {
  int cols = 0;
  int rows = 0;
};
GridShape TileGridShape(const SlideSource& slide, int level, int tile_size = kDefaultTileSize);

TileRecord ExtractTile(const SlideSource& slide, const TileCoord& coord);

/// Tile origin in level-0 pixels.
struct PixelPoint {
  long long x = 0;
  long long y = 0;
};
PixelPoint Level0Origin(const SlideSource& slide, const TileCoord& coord);

}  // namespace tumorloc
