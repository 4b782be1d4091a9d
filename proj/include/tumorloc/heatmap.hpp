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

/// @file heatmap.hpp
/// @brief Tile-aligned probability grid: assembly, Gaussian smoothing,
/// thresholding and colour rendering.

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "tumorloc/classifier.hpp"
#include "tumorloc/image.hpp"
#include "tumorloc/tile_qc.hpp"

namespace tumorloc {

inline constexpr double kDefaultSigma = 1.0;
inline constexpr double kDefaultThreshold = 0.5;

/// rows x cols probabilities; cells without a QC-passed score hold NO_TISSUE
/// (a quiet NaN, test with IsNoTissue()).
class ProbabilityGrid {
 public:
  static constexpr double kNoTissue = std::numeric_limits<double>::quiet_NaN();
  static bool IsNoTissue(double v) noexcept { return std::isnan(v); }

  ProbabilityGrid() = default;
  ProbabilityGrid(int cols, int rows, int tile_size = 224, double level_downsample = 1.0);

  int cols() const noexcept { return cols_; }
  int rows() const noexcept { return rows_; }
  int tile_size() const noexcept { return tile_size_; }
  double level_downsample() const noexcept { return level_downsample_; }

  double at(int col, int row) const noexcept { return values_[index(col, row)]; }
  void set(int col, int row, double v) noexcept { values_[index(col, row)] = v; }
  bool has_tissue(int col, int row) const noexcept { return !IsNoTissue(at(col, row)); }

  std::span<const double> values() const noexcept { return values_; }

 private:
  std::size_t index(int col, int row) const noexcept {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(cols_) +
           static_cast<std::size_t>(col);
  }

  int cols_ = 0;
  int rows_ = 0;
  int tile_size_ = 224;
  double level_downsample_ = 1.0;
  std::vector<double> values_;
};

struct TileQc {
  TileCoord coord;
  QcReport report;
};

/// Places every score at its (col, row). Cells with no score, or whose QC
/// entry failed, stay NO_TISSUE. DuplicateTile / CoordOutOfGrid on bad input.
ProbabilityGrid AssembleGrid(std::span<const TileScore> scores, std::span<const TileQc> qc,
                             int cols, int rows, int tile_size, double level_downsample);

/// Normalized 1-D kernel of radius ceil(3 sigma); sigma 0 gives {1}.
std::vector<double> GaussianKernel(double sigma);

/// Separable Gaussian with half-sample symmetric ("reflect") boundaries.
/// NO_TISSUE cells contribute 0 and stay NO_TISSUE.
ProbabilityGrid GaussianSmooth(const ProbabilityGrid& grid, double sigma);

struct BinaryMask {
  int cols = 0;
  int rows = 0;
  std::vector<std::uint8_t> cells;  // row-major, 0 or 1

  BinaryMask() = default;
  BinaryMask(int c, int r) : cols(c), rows(r), cells(static_cast<std::size_t>(c) * r, 0) {}
  bool at(int col, int row) const noexcept {
    return cells[static_cast<std::size_t>(row) * cols + col] != 0;
  }
  void set(int col, int row, bool v) noexcept {
    cells[static_cast<std::size_t>(row) * cols + col] = v ? 1 : 0;
  }
  std::size_t count() const noexcept;
};

/// Cell is true iff value >= t and the cell has tissue.
BinaryMask ThresholdMask(const ProbabilityGrid& grid, double t = kDefaultThreshold);

/// 0 / 255 grayscale image, one pixel per cell.
GrayImage MaskToImage(const BinaryMask& mask);
BinaryMask MaskFromImage(const GrayImage& image);

inline constexpr Rgb kNoTissueColor{128, 128, 128};

/// Known colormaps: "hot" (default) and "bwr". Both have a non-decreasing red channel.
std::vector<std::string> ColormapNames();
Rgb MapColor(double p, const std::string& colormap);

/// One pixel per cell, each cell drawn as a `scale` x `scale` block.
RgbImage RenderHeatmap(const ProbabilityGrid& grid, const std::string& colormap = "hot",
                       int scale = 1);

}  // namespace tumorloc
