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

/// @file contours.hpp
/// @brief Tumor region polygons traced from a binary tile mask.
///
/// Boundaries run along cell edges: cell (col, row) is the unit square
/// [col, col + 1] x [row, row + 1], so a polygon's area equals its cell count.
/// True cells group 8-connected; false cells (holes) 4-connected. Where two
/// true cells meet only at a corner the outer ring passes through that corner
/// twice instead of splitting into two rings.
///
/// Orientation is measured on the raw (x, y) numbers: outer rings have positive
/// shoelace area (counterclockwise), holes negative (clockwise).

#pragma once

#include <vector>

#include "tumorloc/heatmap.hpp"

namespace tumorloc {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

/// Closed ring: first point equals last point.
using Ring = std::vector<Point>;

struct TumorAnnotation {
  Ring outer_ring;
  std::vector<Ring> holes;
  double mean_probability = 0.0;
  double area = 0.0;  // grid cells before rescaling, level-0 pixels after

  friend bool operator==(const TumorAnnotation&, const TumorAnnotation&) = default;
};

struct ContourOptions {
  int min_area_cells = 2;
};

/// Signed shoelace area of a closed ring.
double SignedArea(const Ring& ring);

/// One annotation per 8-connected component with at least min_area_cells
/// cells, sorted by descending area, ties by (min row, min col).
/// mean_probability averages `probabilities` over the component's cells
/// (0 when no grid is given).
std::vector<TumorAnnotation> ExtractContours(const BinaryMask& mask, const ContourOptions& options = {},
                                             const ProbabilityGrid* probabilities = nullptr);

/// Multiplies every coordinate by tile_size * level_downsample.
TumorAnnotation RescaleToLevel0(const TumorAnnotation& annotation, int tile_size,
                                double level_downsample);
std::vector<TumorAnnotation> RescaleToLevel0(const std::vector<TumorAnnotation>& annotations,
                                             int tile_size, double level_downsample);

}  // namespace tumorloc
