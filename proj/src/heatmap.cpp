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

#include "tumorloc/heatmap.hpp"

#include <algorithm>
#include <numeric>

#include "tumorloc/error.hpp"

namespace tumorloc {

ProbabilityGrid::ProbabilityGrid(int cols, int rows, int tile_size, double level_downsample)
    : cols_(cols), rows_(rows), tile_size_(tile_size), level_downsample_(level_downsample) {
  if (cols < 1 || rows < 1) {
    throw Error(ErrorCode::kInvalidArgument, "probability grid needs at least one cell");
  }
  if (tile_size < 1 || !(level_downsample >= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "tile_size >= 1 and level_downsample >= 1 required");
  }
  values_.assign(static_cast<std::size_t>(cols) * static_cast<std::size_t>(rows), kNoTissue);
}

ProbabilityGrid AssembleGrid(std::span<const TileScore> scores, std::span<const TileQc> qc,
                             int cols, int rows, int tile_size, double level_downsample) {
  ProbabilityGrid grid(cols, rows, tile_size, level_downsample);
  auto inside = [&](const TileCoord& c) {
    return c.col >= 0 && c.row >= 0 && c.col < cols && c.row < rows;
  };

  std::vector<std::uint8_t> failed(static_cast<std::size_t>(cols) * rows, 0);
  for (const auto& entry : qc) {
    if (!inside(entry.coord)) {
      throw Error(ErrorCode::kCoordOutOfGrid, "QC entry outside the grid");
    }
    if (!entry.report.pass) {
      failed[static_cast<std::size_t>(entry.coord.row) * cols + entry.coord.col] = 1;
    }
  }

  std::vector<std::uint8_t> seen(failed.size(), 0);
  for (const auto& s : scores) {
    if (!inside(s.coord)) {
      throw Error(ErrorCode::kCoordOutOfGrid, "score for tile (" + std::to_string(s.coord.col) +
                                                  ", " + std::to_string(s.coord.row) +
                                                  ") outside the grid");
    }
    const std::size_t idx = static_cast<std::size_t>(s.coord.row) * cols + s.coord.col;
    if (seen[idx] != 0) {
      throw Error(ErrorCode::kDuplicateTile, "two scores for tile (" + std::to_string(s.coord.col) +
                                                 ", " + std::to_string(s.coord.row) + ")");
    }
    seen[idx] = 1;
    if (!(s.p_pos >= 0.0 && s.p_pos <= 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "p_pos outside [0, 1]");
    }
    if (failed[idx] == 0) {
      grid.set(s.coord.col, s.coord.row, s.p_pos);
    }
  }
  return grid;
}

std::vector<double> GaussianKernel(double sigma) {
  if (!(sigma >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "sigma must be >= 0");
  }
  if (sigma == 0.0) {
    return {1.0};
  }
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  for (int i = -radius; i <= radius; ++i) {
    k[static_cast<std::size_t>(i + radius)] = std::exp(-0.5 * (i * i) / (sigma * sigma));
  }
  const double sum = std::accumulate(k.begin(), k.end(), 0.0);
  for (double& v : k) {
    v /= sum;
  }
  return k;
}

namespace {

// Half-sample symmetric reflection: ... c b a | a b c ... | c b a ...
int Reflect(int i, int n) {
  const int period = 2 * n;
  int m = i % period;
  if (m < 0) {
    m += period;
  }
  return m < n ? m : period - 1 - m;
}

}  // namespace

ProbabilityGrid GaussianSmooth(const ProbabilityGrid& grid, double sigma) {
  const std::vector<double> kernel = GaussianKernel(sigma);
  if (kernel.size() == 1) {
    return grid;
  }
  const int radius = static_cast<int>(kernel.size() / 2);
  const int cols = grid.cols();
  const int rows = grid.rows();

  std::vector<double> src(static_cast<std::size_t>(cols) * rows);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const double v = grid.at(c, r);
      src[static_cast<std::size_t>(r) * cols + c] = ProbabilityGrid::IsNoTissue(v) ? 0.0 : v;
    }
  }
  std::vector<double> tmp(src.size(), 0.0);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        acc += kernel[static_cast<std::size_t>(k + radius)] *
               src[static_cast<std::size_t>(r) * cols + Reflect(c + k, cols)];
      }
      tmp[static_cast<std::size_t>(r) * cols + c] = acc;
    }
  }
  ProbabilityGrid out(cols, rows, grid.tile_size(), grid.level_downsample());
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (!grid.has_tissue(c, r)) {
        continue;
      }
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        acc += kernel[static_cast<std::size_t>(k + radius)] *
               tmp[static_cast<std::size_t>(Reflect(r + k, rows)) * cols + c];
      }
      out.set(c, r, std::clamp(acc, 0.0, 1.0));
    }
  }
  return out;
}

std::size_t BinaryMask::count() const noexcept {
  return static_cast<std::size_t>(std::count(cells.begin(), cells.end(), std::uint8_t{1}));
}

BinaryMask ThresholdMask(const ProbabilityGrid& grid, double t) {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "threshold must lie in [0, 1]");
  }
  BinaryMask mask(grid.cols(), grid.rows());
  for (int r = 0; r < grid.rows(); ++r) {
    for (int c = 0; c < grid.cols(); ++c) {
      const double v = grid.at(c, r);
      mask.set(c, r, !ProbabilityGrid::IsNoTissue(v) && v >= t);
    }
  }
  return mask;
}

GrayImage MaskToImage(const BinaryMask& mask) {
  GrayImage img{mask.cols, mask.rows, std::vector<std::uint8_t>(mask.cells.size())};
  for (std::size_t i = 0; i < mask.cells.size(); ++i) {
    img.data[i] = mask.cells[i] != 0 ? 255 : 0;
  }
  return img;
}

BinaryMask MaskFromImage(const GrayImage& image) {
  BinaryMask mask(image.width, image.height);
  for (std::size_t i = 0; i < image.data.size(); ++i) {
    mask.cells[i] = image.data[i] >= 128 ? 1 : 0;
  }
  return mask;
}

std::vector<std::string> ColormapNames() { return {"hot", "bwr"}; }

Rgb MapColor(double p, const std::string& colormap) {
  p = std::clamp(p, 0.0, 1.0);
  auto byte = [](double v) {
    return static_cast<std::uint8_t>(std::nearbyint(std::clamp(v, 0.0, 1.0) * 255.0));
  };
  if (colormap == "hot") {
    // black -> red -> yellow -> white, each channel ramps over one third.
    return {byte(3.0 * p), byte(3.0 * p - 1.0), byte(3.0 * p - 2.0)};
  }
  if (colormap == "bwr") {
    // blue -> white -> red
    if (p <= 0.5) {
      const double t = 2.0 * p;
      return {byte(t), byte(t), 255};
    }
    const double t = 2.0 * (1.0 - p);
    return {255, byte(t), byte(t)};
  }
  throw Error(ErrorCode::kUnknownColormap, "unknown colormap '" + colormap + "'");
}

RgbImage RenderHeatmap(const ProbabilityGrid& grid, const std::string& colormap, int scale) {
  if (scale < 1) {
    throw Error(ErrorCode::kInvalidArgument, "heatmap scale must be >= 1");
  }
  MapColor(0.0, colormap);  // rejects unknown names up front, even for empty grids
  RgbImage img(grid.cols() * scale, grid.rows() * scale);
  for (int r = 0; r < grid.rows(); ++r) {
    for (int c = 0; c < grid.cols(); ++c) {
      const double v = grid.at(c, r);
      const Rgb color = ProbabilityGrid::IsNoTissue(v) ? kNoTissueColor : MapColor(v, colormap);
      for (int dy = 0; dy < scale; ++dy) {
        for (int dx = 0; dx < scale; ++dx) {
          img.set(c * scale + dx, r * scale + dy, color);
        }
      }
    }
  }
  return img;
}

}  // namespace tumorloc
