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

/// @file stain_norm.hpp
/// @brief Macenko H&E stain estimation, normalization and stain perturbation.
///
/// Pixels are mapped to optical density OD = -log10(max(I, 1) / io). Under
/// Beer-Lambert mixing OD = S * C, where the 3x2 stain matrix S holds the unit
/// OD direction of hematoxylin (column 0) and eosin (column 1) and C >= 0 are
/// per-pixel concentrations.
///
/// Estimation follows Macenko et al.: drop near-transparent pixels (|OD| <= beta),
/// fit the plane of the two leading eigenvectors of the OD covariance, and take
/// the alpha / (100 - alpha) percentile angles within that plane as the two
/// stain directions. Column 0 is the direction with the larger red-channel OD,
/// which is hematoxylin for H&E (it absorbs red light most strongly).

#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>

#include "tumorloc/image.hpp"
#include "tumorloc/slide_io.hpp"

namespace tumorloc {

using StainMatrix = Eigen::Matrix<double, 3, 2>;
using OdPixels = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using Concentrations = Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>;

struct StainProfile {
  StainMatrix stain_matrix = StainMatrix::Zero();
  std::array<double, 2> max_concentration{0.0, 0.0};

  /// Unit-norm non-negative columns, hematoxylin first, positive maxima.
  void Validate() const;
};

struct MacenkoConfig {
  double od_threshold = 0.15;     // beta
  double angle_percentile = 1.0;  // alpha, in percent
  double io = 255.0;
  int min_valid_pixels = 100;

  void Validate() const;
};

/// OD of one 8-bit channel value; never negative, exactly 0 at io.
double OpticalDensity(std::uint8_t value, double io = 255.0) noexcept;

/// One row per pixel in row-major pixel order.
OdPixels RgbToOd(const RgbImage& image, double io = 255.0);

StainProfile EstimateStainProfile(const RgbImage& tile, const MacenkoConfig& cfg = {});
StainProfile EstimateStainProfile(const TileRecord& tile, const MacenkoConfig& cfg = {});
/// Pools the pixels of several tiles into one estimate.
StainProfile EstimateStainProfile(std::span<const RgbImage> tiles, const MacenkoConfig& cfg = {});

/// Least-squares concentrations via the pseudo-inverse of S, negatives clamped to 0.
Concentrations SolveConcentrations(const OdPixels& od, const StainProfile& profile);
Concentrations SolveConcentrations(const OdPixels& od, const StainMatrix& stains);

/// I = io * 10^(-S C), rounded to 8 bits.
RgbImage ReconstructRgb(const Concentrations& conc, const StainMatrix& stains, int width,
                        int height, double io = 255.0);

RgbImage NormalizeTile(const RgbImage& tile, const StainProfile& source,
                       const StainProfile& reference, double io = 255.0);
TileRecord NormalizeTile(const TileRecord& tile, const StainProfile& source,
                         const StainProfile& reference, double io = 255.0);

/// Scales each stain's concentrations by a factor drawn uniformly from
/// [1 - jitter, 1 + jitter] (hematoxylin first) and re-renders with `profile`.
RgbImage PerturbStains(const RgbImage& tile, const StainProfile& profile, std::uint64_t seed,
                       double jitter, double io = 255.0);
TileRecord PerturbStains(const TileRecord& tile, const StainProfile& profile, std::uint64_t seed,
                         double jitter, double io = 255.0);

/// Angle in degrees between two 3-vectors.
double AngleDegrees(const Eigen::Vector3d& a, const Eigen::Vector3d& b);

/// Linear-interpolation percentile (numpy default), p in [0, 100]. Reorders `values`.
double Percentile(std::span<double> values, double p);

/// JSON: {"stain_matrix": [[r_h, r_e], [g_h, g_e], [b_h, b_e]], "max_concentration": [h, e]}.
/// Loading renormalizes columns to unit length before validation.
StainProfile LoadStainProfile(const std::filesystem::path& path);
void SaveStainProfile(const std::filesystem::path& path, const StainProfile& profile);
StainProfile StainProfileFromJson(const std::string& text);
std::string StainProfileToJson(const StainProfile& profile);

/// Widely used H&E reference (the Macenko reference of common open-source tooling).
StainProfile DefaultReferenceProfile();

}  // namespace tumorloc
