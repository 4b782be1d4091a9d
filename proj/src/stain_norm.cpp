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

#include "tumorloc/stain_norm.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <vector>

#include "tumorloc/error.hpp"
#include "tumorloc/random.hpp"

namespace tumorloc {

namespace {

constexpr double kUnitTolerance = 1e-9;
constexpr double kDegenerateAngleDeg = 1.0;

struct OdTable {
  std::array<double, 256> od{};
};

OdTable MakeOdTable(double io) {
  OdTable t;
  for (int v = 0; v < 256; ++v) {
    t.od[static_cast<std::size_t>(v)] = OpticalDensity(static_cast<std::uint8_t>(v), io);
  }
  return t;
}

// Inverse of OD -> rounded intensity: bound[k - 1] is the largest OD that
// still renders to a byte >= k. Bounds decrease with k. A bucket table over
// OD gives an upper estimate that the exact bounds then correct.
class ByteTable {
 public:
  explicit ByteTable(double io) {
    for (int k = 1; k <= 255; ++k) {
      bound_[static_cast<std::size_t>(k - 1)] = -std::log10((k - 0.5) / io);
    }
    for (std::size_t j = 0; j < kBuckets; ++j) {
      bucket_[j] = Exact(static_cast<double>(j) / kBucketsPerOd);
    }
  }

  std::uint8_t operator()(double od) const {
    if (!(od > 0.0)) {
      return Exact(std::isnan(od) ? 0.0 : od);
    }
    const double pos = od * kBucketsPerOd;
    const std::size_t j = pos >= static_cast<double>(kBuckets - 1) ? kBuckets - 1 : static_cast<std::size_t>(pos);
    int b = bucket_[j];
    while (b > 0 && od > bound_[static_cast<std::size_t>(b - 1)]) {
      --b;
    }
    return static_cast<std::uint8_t>(b);
  }

 private:
  static constexpr std::size_t kBuckets = 8192;
  static constexpr double kBucketsPerOd = 1024.0;

  std::uint8_t Exact(double od) const {
    const auto it = std::partition_point(bound_.begin(), bound_.end(), [od](double b) { return od <= b; });
    return static_cast<std::uint8_t>(it - bound_.begin());
  }

  std::array<double, 255> bound_{};
  std::array<std::uint8_t, kBuckets> bucket_{};
};
// Pseudo-inverse of a 3x2 matrix; SingularStainMatrix when the columns are dependent.
Eigen::Matrix<double, 2, 3> PseudoInverse(const StainMatrix& s) {
  const Eigen::Matrix2d gram = s.transpose() * s;
  const double scale = gram(0, 0) * gram(1, 1);
  if (!(scale > 0.0) || gram.determinant() <= 1e-12 * scale) {
    throw Error(ErrorCode::kSingularStainMatrix, "stain columns are linearly dependent");
  }
  return gram.inverse() * s.transpose();
}

}  // namespace

void StainProfile::Validate() const {
  for (int c = 0; c < 2; ++c) {
    const Eigen::Vector3d col = stain_matrix.col(c);
    if (std::abs(col.norm() - 1.0) > kUnitTolerance) {
      throw Error(ErrorCode::kInvalidArgument, "stain column " + std::to_string(c) + " is not unit norm");
    }
    if ((col.array() < 0.0).any()) {
      throw Error(ErrorCode::kInvalidArgument, "stain column " + std::to_string(c) + " has negative OD");
    }
    if (!(max_concentration[static_cast<std::size_t>(c)] > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "max_concentration must be positive");
    }
  }
  if (stain_matrix(0, 1) > stain_matrix(0, 0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "column 0 must be hematoxylin (larger red-channel optical density)");
  }
}

void MacenkoConfig::Validate() const {
  if (!(od_threshold > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "od_threshold must be > 0");
  }
  if (!(angle_percentile > 0.0 && angle_percentile < 50.0)) {
    throw Error(ErrorCode::kInvalidArgument, "angle_percentile must lie in (0, 50)");
  }
  if (!(io > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "io must be > 0");
  }
  if (min_valid_pixels < 1) {
    throw Error(ErrorCode::kInvalidArgument, "min_valid_pixels must be >= 1");
  }
}

double OpticalDensity(std::uint8_t value, double io) noexcept {
  const double clamped = std::max(static_cast<double>(value), 1.0);
  return std::max(0.0, -std::log10(clamped / io));
}

OdPixels RgbToOd(const RgbImage& image, double io) {
  const OdTable table = MakeOdTable(io);
  const auto n = static_cast<Eigen::Index>(image.pixel_count());
  OdPixels od(n, 3);
  auto bytes = image.bytes();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int c = 0; c < 3; ++c) {
      od(i, c) = table.od[bytes[static_cast<std::size_t>(3 * i + c)]];
    }
  }
  return od;
}

double AngleDegrees(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  const double denom = a.norm() * b.norm();
  if (denom == 0.0) {
    return 0.0;
  }
  // atan2 of |a x b| and a.b stays accurate for nearly parallel vectors.
  return std::atan2(a.cross(b).norm(), a.dot(b)) * 180.0 / std::numbers::pi;
}

double Percentile(std::span<double> values, double p) {
  if (values.empty()) {
    throw Error(ErrorCode::kEmptyInput, "percentile of an empty set");
  }
  const double pos = std::clamp(p, 0.0, 100.0) / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(lo);
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(lo), values.end());
  const double a = values[lo];
  if (frac == 0.0 || lo + 1 >= values.size()) {
    return a;
  }
  const double b = *std::min_element(values.begin() + static_cast<std::ptrdiff_t>(lo) + 1, values.end());
  return a + frac * (b - a);
}

namespace {

StainProfile EstimateFromOd(const OdPixels& od, const MacenkoConfig& cfg) {
  cfg.Validate();
  std::vector<Eigen::Index> kept;
  kept.reserve(static_cast<std::size_t>(od.rows()));
  for (Eigen::Index i = 0; i < od.rows(); ++i) {
    if (od.row(i).norm() > cfg.od_threshold) {
      kept.push_back(i);
    }
  }
  if (kept.size() < static_cast<std::size_t>(cfg.min_valid_pixels)) {
    throw Error(ErrorCode::kInsufficientTissue,
                std::to_string(kept.size()) + " pixels above the OD threshold, need " +
                    std::to_string(cfg.min_valid_pixels));
  }

  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (Eigen::Index i : kept) {
    mean += od.row(i).transpose();
  }
  mean /= static_cast<double>(kept.size());
  Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
  for (Eigen::Index i : kept) {
    const Eigen::Vector3d d = od.row(i).transpose() - mean;
    scatter += d * d.transpose();
  }
  scatter /= static_cast<double>(kept.size() > 1 ? kept.size() - 1 : 1);

  // Eigenvalues come back ascending; the plane is spanned by the last two.
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(scatter);
  Eigen::Vector3d e1 = eig.eigenvectors().col(2);
  Eigen::Vector3d e2 = eig.eigenvectors().col(1);
  if (e1.dot(mean) < 0.0) {
    e1 = -e1;
  }
  if (e2(0) < 0.0) {
    e2 = -e2;
  }

  std::vector<double> angles;
  angles.reserve(kept.size());
  for (Eigen::Index i : kept) {
    const Eigen::Vector3d p = od.row(i).transpose();
    angles.push_back(std::atan2(p.dot(e2), p.dot(e1)));
  }
  const double phi_lo = Percentile(angles, cfg.angle_percentile);
  const double phi_hi = Percentile(angles, 100.0 - cfg.angle_percentile);

  auto direction = [&](double phi) {
    Eigen::Vector3d v = e1 * std::cos(phi) + e2 * std::sin(phi);
    v = v.cwiseMax(0.0);
    const double n = v.norm();
    if (n == 0.0) {
      throw Error(ErrorCode::kDegenerateStains, "stain direction vanished after clamping");
    }
    return Eigen::Vector3d(v / n);
  };
  const Eigen::Vector3d v_lo = direction(phi_lo);
  const Eigen::Vector3d v_hi = direction(phi_hi);
  const double separation = AngleDegrees(v_lo, v_hi);
  if (separation < kDegenerateAngleDeg) {
    throw Error(ErrorCode::kDegenerateStains,
                "extreme stain directions only " + std::to_string(separation) + " degrees apart");
  }

  StainProfile profile;
  // Hematoxylin absorbs red most strongly; ties keep the first direction.
  const bool lo_is_h = v_lo(0) >= v_hi(0);
  profile.stain_matrix.col(0) = lo_is_h ? v_lo : v_hi;
  profile.stain_matrix.col(1) = lo_is_h ? v_hi : v_lo;

  const Concentrations conc = SolveConcentrations(od, profile.stain_matrix);
  for (int s = 0; s < 2; ++s) {
    std::vector<double> column(static_cast<std::size_t>(conc.rows()));
    for (Eigen::Index i = 0; i < conc.rows(); ++i) {
      column[static_cast<std::size_t>(i)] = conc(i, s);
    }
    profile.max_concentration[static_cast<std::size_t>(s)] = Percentile(column, 99.0);
    if (!(profile.max_concentration[static_cast<std::size_t>(s)] > 0.0)) {
      throw Error(ErrorCode::kInsufficientTissue,
                  "99th percentile concentration of stain " + std::to_string(s) + " is zero");
    }
  }
  return profile;
}

}  // namespace

StainProfile EstimateStainProfile(const RgbImage& tile, const MacenkoConfig& cfg) {
  return EstimateFromOd(RgbToOd(tile, cfg.io), cfg);
}

StainProfile EstimateStainProfile(const TileRecord& tile, const MacenkoConfig& cfg) {
  return EstimateStainProfile(tile.pixels, cfg);
}

StainProfile EstimateStainProfile(std::span<const RgbImage> tiles, const MacenkoConfig& cfg) {
  Eigen::Index total = 0;
  for (const auto& t : tiles) {
    total += static_cast<Eigen::Index>(t.pixel_count());
  }
  OdPixels od(total, 3);
  Eigen::Index at = 0;
  for (const auto& t : tiles) {
    const OdPixels part = RgbToOd(t, cfg.io);
    od.middleRows(at, part.rows()) = part;
    at += part.rows();
  }
  return EstimateFromOd(od, cfg);
}

Concentrations SolveConcentrations(const OdPixels& od, const StainMatrix& stains) {
  const Eigen::Matrix<double, 2, 3> pinv = PseudoInverse(stains);
  Concentrations conc = od * pinv.transpose();
  return conc.cwiseMax(0.0);
}

Concentrations SolveConcentrations(const OdPixels& od, const StainProfile& profile) {
  return SolveConcentrations(od, profile.stain_matrix);
}

RgbImage ReconstructRgb(const Concentrations& conc, const StainMatrix& stains, int width,
                        int height, double io) {
  if (conc.rows() != static_cast<Eigen::Index>(width) * height) {
    throw Error(ErrorCode::kInvalidArgument, "concentration count does not match image size");
  }
  const ByteTable to_byte(io);
  RgbImage out(width, height);
  auto bytes = out.bytes();
  for (Eigen::Index i = 0; i < conc.rows(); ++i) {
    const Eigen::Vector3d od = stains * conc.row(i).transpose();
    for (int c = 0; c < 3; ++c) {
      bytes[static_cast<std::size_t>(3 * i + c)] = to_byte(od(c));
    }
  }
  return out;
}

namespace {

// Shared per-pixel kernel: solve against `source`, scale, render with `target`.
RgbImage Rerender(const RgbImage& tile, const StainMatrix& source, const StainMatrix& target,
                  std::array<double, 2> scale, double io) {
  const Eigen::Matrix<double, 2, 3> pinv = PseudoInverse(source);
  const OdTable table = MakeOdTable(io);
  const ByteTable to_byte(io);
  RgbImage out(tile.width(), tile.height());
  auto in = tile.bytes();
  auto dst = out.bytes();
  const std::size_t n = tile.pixel_count();
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector3d od(table.od[in[3 * i]], table.od[in[3 * i + 1]], table.od[in[3 * i + 2]]);
    Eigen::Vector2d c = (pinv * od).cwiseMax(0.0);
    c(0) *= scale[0];
    c(1) *= scale[1];
    const Eigen::Vector3d rendered = target * c;
    for (int ch = 0; ch < 3; ++ch) {
      dst[3 * i + static_cast<std::size_t>(ch)] = to_byte(rendered(ch));
    }
  }
  return out;
}

}  // namespace

RgbImage NormalizeTile(const RgbImage& tile, const StainProfile& source,
                       const StainProfile& reference, double io) {
  const std::array<double, 2> scale{
      reference.max_concentration[0] / source.max_concentration[0],
      reference.max_concentration[1] / source.max_concentration[1]};
  return Rerender(tile, source.stain_matrix, reference.stain_matrix, scale, io);
}

TileRecord NormalizeTile(const TileRecord& tile, const StainProfile& source,
                         const StainProfile& reference, double io) {
  return {tile.coord, NormalizeTile(tile.pixels, source, reference, io), tile.slide_id};
}

RgbImage PerturbStains(const RgbImage& tile, const StainProfile& profile, std::uint64_t seed,
                       double jitter, double io) {
  if (!(jitter >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "jitter must be >= 0");
  }
  SeededRng rng(seed);
  std::array<double, 2> scale{};
  scale[0] = rng.uniform(1.0 - jitter, 1.0 + jitter);
  scale[1] = rng.uniform(1.0 - jitter, 1.0 + jitter);
  return Rerender(tile, profile.stain_matrix, profile.stain_matrix, scale, io);
}

TileRecord PerturbStains(const TileRecord& tile, const StainProfile& profile, std::uint64_t seed,
                         double jitter, double io) {
  return {tile.coord, PerturbStains(tile.pixels, profile, seed, jitter, io), tile.slide_id};
}

StainProfile StainProfileFromJson(const std::string& text) {
  StainProfile profile;
  try {
    const nlohmann::json j = nlohmann::json::parse(text);
    const auto& m = j.at("stain_matrix");
    if (!m.is_array() || m.size() != 3) {
      throw Error(ErrorCode::kParseError, "stain_matrix must have 3 rows");
    }
    for (int r = 0; r < 3; ++r) {
      const auto& row = m.at(static_cast<std::size_t>(r));
      if (!row.is_array() || row.size() != 2) {
        throw Error(ErrorCode::kParseError, "stain_matrix rows must have 2 entries");
      }
      profile.stain_matrix(r, 0) = row.at(0).get<double>();
      profile.stain_matrix(r, 1) = row.at(1).get<double>();
    }
    const auto& mc = j.at("max_concentration");
    if (!mc.is_array() || mc.size() != 2) {
      throw Error(ErrorCode::kParseError, "max_concentration must have 2 entries");
    }
    profile.max_concentration = {mc.at(0).get<double>(), mc.at(1).get<double>()};
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("stain profile: ") + e.what());
  }
  for (int c = 0; c < 2; ++c) {
    const double n = profile.stain_matrix.col(c).norm();
    if (n > 0.0) {
      profile.stain_matrix.col(c) /= n;
    }
  }
  profile.Validate();
  return profile;
}

std::string StainProfileToJson(const StainProfile& profile) {
  nlohmann::ordered_json j;
  j["stain_matrix"] = nlohmann::json::array();
  for (int r = 0; r < 3; ++r) {
    j["stain_matrix"].push_back({profile.stain_matrix(r, 0), profile.stain_matrix(r, 1)});
  }
  j["max_concentration"] = {profile.max_concentration[0], profile.max_concentration[1]};
  return j.dump(2) + "\n";
}

StainProfile LoadStainProfile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kIoError, "cannot read stain profile " + path.string());
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return StainProfileFromJson(ss.str());
}

void SaveStainProfile(const std::filesystem::path& path, const StainProfile& profile) {
  std::ofstream out(path);
  if (!out) {
    throw Error(ErrorCode::kIoError, "cannot write stain profile " + path.string());
  }
  out << StainProfileToJson(profile);
}

StainProfile DefaultReferenceProfile() {
  StainProfile p;
  p.stain_matrix << 0.5626, 0.2159,
                    0.7201, 0.8012,
                    0.4062, 0.5581;
  p.stain_matrix.col(0).normalize();
  p.stain_matrix.col(1).normalize();
  p.max_concentration = {1.9705, 1.0308};
  return p;
}

}  // namespace tumorloc
