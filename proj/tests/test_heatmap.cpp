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
#include <numeric>

#include "synthetic.hpp"
#include "tumorloc/error.hpp"
#include "tumorloc/heatmap.hpp"

using namespace tumorloc;

namespace {

TileScore Score(int col, int row, double p) {
  TileScore s;
  s.coord.col = col;
  s.coord.row = row;
  s.p_pos = p;
  return s;
}

TileQc Qc(int col, int row, bool pass) {
  TileQc q;
  q.coord.col = col;
  q.coord.row = row;
  q.report.pass = pass;
  return q;
}

ProbabilityGrid Filled(int cols, int rows, double v) {
  ProbabilityGrid g(cols, rows);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      g.set(c, r, v);
    }
  }
  return g;
}

bool SameGrid(const ProbabilityGrid& a, const ProbabilityGrid& b) {
  if (a.cols() != b.cols() || a.rows() != b.rows()) {
    return false;
  }
  for (std::size_t i = 0; i < a.values().size(); ++i) {
    const double x = a.values()[i];
    const double y = b.values()[i];
    if (!(x == y || (std::isnan(x) && std::isnan(y)))) {
      return false;
    }
  }
  return true;
}

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

TEST_CASE("assemble places scores and marks missing tiles") {
  const std::vector<TileScore> one{Score(0, 0, 0.8)};
  const ProbabilityGrid g1 = AssembleGrid(one, {}, 1, 1, 224, 1.0);
  CHECK(g1.at(0, 0) == 0.8);

  const std::vector<TileScore> scores{Score(0, 0, 0.1), Score(1, 0, 0.2), Score(0, 1, 0.3)};
  const std::vector<TileQc> qc{Qc(0, 0, true), Qc(1, 0, true), Qc(0, 1, false), Qc(1, 1, false)};
  const ProbabilityGrid g = AssembleGrid(scores, qc, 2, 2, 224, 1.0);
  CHECK(g.at(1, 0) == 0.2);
  CHECK_FALSE(g.has_tissue(0, 1));
  CHECK_FALSE(g.has_tissue(1, 1));
}

TEST_CASE("assemble is order independent") {
  std::vector<TileScore> scores;
  for (int r = 0; r < 5; ++r) {
    for (int c = 0; c < 6; ++c) {
      if ((r + c) % 4 != 0) {
        scores.push_back(Score(c, r, (r * 6 + c) / 30.0));
      }
    }
  }
  const ProbabilityGrid ref = AssembleGrid(scores, {}, 6, 5, 224, 1.0);
  SeededRng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    rng.shuffle(std::span<TileScore>(scores));
    CHECK(SameGrid(AssembleGrid(scores, {}, 6, 5, 224, 1.0), ref));
  }
}

TEST_CASE("assemble errors") {
  const std::vector<TileScore> dup{Score(0, 0, 0.1), Score(0, 0, 0.2)};
  CHECK(CodeOf([&] { AssembleGrid(dup, {}, 2, 2, 224, 1.0); }) == ErrorCode::kDuplicateTile);
  const std::vector<TileScore> out{Score(2, 0, 0.1)};
  CHECK(CodeOf([&] { AssembleGrid(out, {}, 2, 2, 224, 1.0); }) == ErrorCode::kCoordOutOfGrid);
}

TEST_CASE("gaussian kernel") {
  CHECK(GaussianKernel(0.0) == std::vector<double>{1.0});
  const auto k = GaussianKernel(1.0);
  CHECK(k.size() == 7);
  CHECK(std::accumulate(k.begin(), k.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-15));
  const auto k2 = GaussianKernel(1.5);
  CHECK(k2.size() == 11);
}

TEST_CASE("impulse response center equals the squared center weight") {
  ProbabilityGrid g = Filled(9, 9, 0.0);
  g.set(4, 4, 1.0);
  const auto k = GaussianKernel(1.0);
  const ProbabilityGrid s = GaussianSmooth(g, 1.0);
  CHECK(s.at(4, 4) == doctest::Approx(k[3] * k[3]).epsilon(1e-12));
  CHECK(s.at(5, 4) == doctest::Approx(k[3] * k[4]).epsilon(1e-12));
}

TEST_CASE("smoothing preserves constants and the mean") {
  const ProbabilityGrid flat = GaussianSmooth(Filled(7, 5, 0.6), 1.0);
  for (double v : flat.values()) {
    CHECK(std::abs(v - 0.6) < 1e-12);
  }
  ProbabilityGrid g(11, 8);
  SeededRng rng(4);
  double sum = 0.0;
  for (int r = 0; r < 8; ++r) {
    for (int c = 0; c < 11; ++c) {
      const double v = rng.uniform01();
      g.set(c, r, v);
      sum += v;
    }
  }
  const ProbabilityGrid s = GaussianSmooth(g, 1.3);
  const double smoothed_sum = std::accumulate(s.values().begin(), s.values().end(), 0.0);
  CHECK(std::abs(smoothed_sum - sum) / 88.0 < 1e-9);
  CHECK(SameGrid(GaussianSmooth(g, 0.0), g));
}

TEST_CASE("no-tissue cells count as zero and stay no-tissue") {
  ProbabilityGrid g = Filled(5, 5, 1.0);
  g.set(2, 2, ProbabilityGrid::kNoTissue);
  const ProbabilityGrid s = GaussianSmooth(g, 1.0);
  CHECK_FALSE(s.has_tissue(2, 2));
  CHECK(s.at(2, 1) < 1.0);
  CHECK_FALSE(ThresholdMask(s, 0.0).at(2, 2));
}

TEST_CASE("threshold is inclusive") {
  ProbabilityGrid g = Filled(3, 1, 0.0);
  g.set(1, 0, 0.5);
  g.set(2, 0, 0.4999999);
  const BinaryMask m = ThresholdMask(g);
  CHECK_FALSE(m.at(0, 0));
  CHECK(m.at(1, 0));
  CHECK_FALSE(m.at(2, 0));
  CHECK(ThresholdMask(Filled(4, 4, 0.0)).count() == 0);
  CHECK(CodeOf([&] { ThresholdMask(g, 1.5); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("mask image round trip") {
  BinaryMask m(3, 2);
  m.set(0, 0, true);
  m.set(2, 1, true);
  const BinaryMask back = MaskFromImage(MaskToImage(m));
  CHECK(back.cells == m.cells);
}

TEST_CASE("colormaps") {
  for (const auto& name : ColormapNames()) {
    CHECK_FALSE(MapColor(0.0, name) == MapColor(1.0, name));
    int prev = -1;
    for (int i = 0; i <= 1000; ++i) {
      const int red = MapColor(i / 1000.0, name).r;
      CHECK(red >= prev);
      prev = red;
    }
  }
  CHECK(MapColor(1.0, "hot").r == 255);
  CHECK(CodeOf([] { MapColor(0.5, "viridis"); }) == ErrorCode::kUnknownColormap);
}

TEST_CASE("render heatmap") {
  ProbabilityGrid g(2, 1);
  const RgbImage blank = RenderHeatmap(g, "hot", 3);
  CHECK(blank.width() == 6);
  for (int y = 0; y < blank.height(); ++y) {
    for (int x = 0; x < blank.width(); ++x) {
      CHECK(blank.at(x, y) == kNoTissueColor);
    }
  }
  g.set(1, 0, 1.0);
  const RgbImage img = RenderHeatmap(g);
  CHECK(img.at(1, 0) == MapColor(1.0, "hot"));
}
