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

/// @file tile_qc.hpp
/// @brief Tile quality gates: tissue fraction, blur (variance of Laplacian)
/// and blood-clot (red hue) fraction.

#pragma once

#include <string>
#include <vector>

#include "tumorloc/image.hpp"
#include "tumorloc/slide_io.hpp"

namespace tumorloc {

/// HSV components in [0, 360) degrees and [0, 1].
struct Hsv {
  double h = 0.0;
  double s = 0.0;
  double v = 0.0;
};
Hsv ToHsv(Rgb c) noexcept;

struct QcConfig {
  double min_tissue_fraction = 0.70;  // pass requires tissue_fraction > this
  double background_value_min = 0.90;
  double background_saturation_max = 0.07;
  double min_blur_score = 50.0;  // Laplacian variance on the 0-255 gray scale
  double max_blood_fraction = 0.30;
  // Red hue window wraps through 0: hue >= blood_hue_low or hue <= blood_hue_high.
  double blood_hue_low = 350.0;
  double blood_hue_high = 10.0;
  double blood_saturation_min = 0.60;
  double blood_value_min = 0.20;

  /// Throws InvalidArgument if a fraction leaves [0, 1] or a threshold is negative.
  void Validate() const;
};

enum class RejectReason { kLowTissue, kBlurred, kBloodClot };
std::string ToString(RejectReason reason);

struct QcReport {
  double tissue_fraction = 0.0;
  double blur_score = 0.0;
  double blood_fraction = 0.0;
  bool pass = false;
  std::vector<RejectReason> reject_reasons;
};

double TissueFraction(const RgbImage& tile, const QcConfig& cfg);
double TissueFraction(const TileRecord& tile, const QcConfig& cfg);

/// Variance of the 4-neighbour Laplacian of gray = 0.299 R + 0.587 G + 0.114 B
/// over interior pixels. Zero for tiles narrower than 3 px.
double BlurScore(const RgbImage& tile);
double BlurScore(const TileRecord& tile);

double BloodFraction(const RgbImage& tile, const QcConfig& cfg);
double BloodFraction(const TileRecord& tile, const QcConfig& cfg);

QcReport QcFilter(const RgbImage& tile, const QcConfig& cfg);
QcReport QcFilter(const TileRecord& tile, const QcConfig& cfg);

/// Semicolon-joined reason names, empty when the tile passed.
std::string JoinReasons(const std::vector<RejectReason>& reasons);

}  // namespace tumorloc
