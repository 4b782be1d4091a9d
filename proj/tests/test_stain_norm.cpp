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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "synthetic.hpp"
#include "tumorloc/error.hpp"
#include "tumorloc/stain_norm.hpp"

using namespace tumorloc;
namespace syn = tumorloc::testing;

namespace {

ErrorCode CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::kInvalidArgument;
}

}  // namespace

TEST_CASE("optical density") {
  CHECK(OpticalDensity(255) == 0.0);
  CHECK(OpticalDensity(0) == doctest::Approx(std::log10(255.0)));
  const OdPixels od = RgbToOd(RgbImage(2, 1, {255, 255, 255}));
  CHECK(od.rows() == 2);
  CHECK(od.norm() == 0.0);
}

TEST_CASE("percentile interpolates linearly") {
  std::vector<double> v{4, 1, 3, 2};
  CHECK(Percentile(v, 50.0) == doctest::Approx(2.5));
  CHECK(Percentile(v, 0.0) == 1.0);
  CHECK(Percentile(v, 100.0) == 4.0);
  CHECK(Percentile(v, 25.0) == doctest::Approx(1.75));
}

TEST_CASE("default reference profile is valid, hematoxylin first") {
  const StainProfile p = DefaultReferenceProfile();
  CHECK_NOTHROW(p.Validate());
  CHECK(p.stain_matrix(0, 0) > p.stain_matrix(0, 1));
  CHECK(p.stain_matrix.col(0).norm() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("estimation recovers known stain directions") {
  SeededRng rng(2024);
  for (int trial = 0; trial < 10; ++trial) {
    const StainMatrix truth = syn::RandomStainMatrix(rng);
    const RgbImage tile = syn::TwoStainTile(truth, 100 + trial);
    const StainProfile est = EstimateStainProfile(tile);
    CHECK(AngleDegrees(est.stain_matrix.col(0), truth.col(0)) < 2.0);
    CHECK(AngleDegrees(est.stain_matrix.col(1), truth.col(1)) < 2.0);
    CHECK_NOTHROW(est.Validate());
  }
}

TEST_CASE("pooled estimation matches single-tile estimation on the same stains") {
  const StainMatrix truth = DefaultReferenceProfile().stain_matrix;
  std::vector<RgbImage> tiles{syn::TwoStainTile(truth, 1), syn::TwoStainTile(truth, 2)};
  const StainProfile pooled = EstimateStainProfile(std::span<const RgbImage>(tiles));
  CHECK(AngleDegrees(pooled.stain_matrix.col(0), truth.col(0)) < 2.0);
  CHECK(AngleDegrees(pooled.stain_matrix.col(1), truth.col(1)) < 2.0);
}

TEST_CASE("blank and single-stain tiles are rejected") {
  CHECK(CodeOf([] { EstimateStainProfile(syn::BlankTile(64, {255, 255, 255})); }) ==
        ErrorCode::kInsufficientTissue);
  const StainMatrix s = DefaultReferenceProfile().stain_matrix;
  SeededRng rng(9);
  const RgbImage single = syn::RenderStains(
      s, [&](int, int) { return Eigen::Vector2d(rng.uniform(0.2, 1.0), 0.0); }, 64, 64);
  CHECK(CodeOf([&] { EstimateStainProfile(single); }) == ErrorCode::kDegenerateStains);
}

TEST_CASE("concentrations solve the forward model") {
  const StainProfile p = DefaultReferenceProfile();
  const RgbImage tile = syn::RenderStains(
      p.stain_matrix, [](int x, int) { return Eigen::Vector2d(0.1 * x, 0.3); }, 8, 1);
  const Concentrations c = SolveConcentrations(RgbToOd(tile), p);
  for (int x = 0; x < 8; ++x) {
    CHECK(c(x, 0) == doctest::Approx(0.1 * x).epsilon(0.02));
    CHECK(c(x, 1) == doctest::Approx(0.3).epsilon(0.02));
  }
  StainMatrix singular;
  singular.col(0) = p.stain_matrix.col(0);
  singular.col(1) = p.stain_matrix.col(0);
  CHECK(CodeOf([&] { SolveConcentrations(RgbToOd(tile), singular); }) == ErrorCode::kSingularStainMatrix);
}

TEST_CASE("normalizing to the source profile is close to identity") {
  const RgbImage tile = syn::TissueTile(4);
  const StainProfile p = EstimateStainProfile(tile);
  const RgbImage out = NormalizeTile(tile, p, p);
  CHECK(out.width() == tile.width());
  std::size_t changed = 0;
  for (std::size_t i = 0; i < tile.bytes().size(); ++i) {
    changed += std::abs(int(tile.bytes()[i]) - int(out.bytes()[i])) > 2 ? 1 : 0;
  }
  CHECK(changed < tile.bytes().size() / 100);
}

TEST_CASE("normalization maps source stains onto the reference") {
  SeededRng rng(77);
  const StainMatrix other = syn::RandomStainMatrix(rng, 25.0, 0.1);
  const RgbImage tile = syn::TwoStainTile(other, 5, 128, 0.0, 0.8);
  const StainProfile source = EstimateStainProfile(tile);
  const StainProfile reference = DefaultReferenceProfile();
  const StainProfile after = EstimateStainProfile(NormalizeTile(tile, source, reference));
  CHECK(AngleDegrees(after.stain_matrix.col(0), reference.stain_matrix.col(0)) < 3.0);
  CHECK(AngleDegrees(after.stain_matrix.col(1), reference.stain_matrix.col(1)) < 3.0);
}

TEST_CASE("stain perturbation is seeded") {
  const RgbImage tile = syn::TissueTile(8, false, 64);
  const StainProfile p = EstimateStainProfile(tile);
  CHECK(PerturbStains(tile, p, 5, 0.1) == PerturbStains(tile, p, 5, 0.1));
  CHECK_FALSE(PerturbStains(tile, p, 5, 0.1) == PerturbStains(tile, p, 6, 0.1));
  CHECK(CodeOf([&] { PerturbStains(tile, p, 5, -1.0); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("profile json round trip") {
  const StainProfile p = DefaultReferenceProfile();
  const StainProfile back = StainProfileFromJson(StainProfileToJson(p));
  CHECK(back.stain_matrix.isApprox(p.stain_matrix, 1e-15));
  CHECK(back.max_concentration == p.max_concentration);
  CHECK(CodeOf([] { StainProfileFromJson("{\"stain_matrix\": [[1, 0]]}"); }) == ErrorCode::kParseError);
}

TEST_CASE("shipped reference profile loads") {
  const char* root = std::getenv("TUMORLOC_SOURCE_DIR");
  if (root == nullptr) {
    return;
  }
  const StainProfile p = LoadStainProfile(std::filesystem::path(root) / "config" / "reference_profile.json");
  CHECK(p.stain_matrix.isApprox(DefaultReferenceProfile().stain_matrix, 1e-9));
}

TEST_CASE("rendering matches rounding of the forward model") {
  SeededRng rng(31);
  const StainMatrix stains = DefaultReferenceProfile().stain_matrix;
  Concentrations conc(4096, 2);
  for (Eigen::Index i = 0; i < conc.rows(); ++i) {
    conc(i, 0) = rng.uniform(0.0, 3.0);
    conc(i, 1) = rng.uniform(0.0, 3.0);
  }
  conc(0, 0) = 0.0;
  conc(0, 1) = 0.0;
  const RgbImage out = ReconstructRgb(conc, stains, 64, 64);
  int mismatches = 0;
  for (Eigen::Index i = 0; i < conc.rows(); ++i) {
    const Eigen::Vector3d od = stains * conc.row(i).transpose();
    for (int c = 0; c < 3; ++c) {
      const double expected = std::clamp(std::nearbyint(255.0 * std::pow(10.0, -od(c))), 0.0, 255.0);
      mismatches += out.bytes()[static_cast<std::size_t>(3 * i + c)] != expected ? 1 : 0;
    }
  }
  CHECK(mismatches == 0);
  CHECK(out.at(0, 0).r == 255);
}
