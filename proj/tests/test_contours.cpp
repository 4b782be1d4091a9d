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

#include <cmath>

#include "tumorloc/contours.hpp"
#include "tumorloc/random.hpp"

using namespace tumorloc;

namespace {

BinaryMask FromRows(const std::vector<std::string>& rows) {
  BinaryMask m(static_cast<int>(rows[0].size()), static_cast<int>(rows.size()));
  for (int r = 0; r < m.rows; ++r) {
    for (int c = 0; c < m.cols; ++c) {
      m.set(c, r, rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] == '#');
    }
  }
  return m;
}

double NetArea(const std::vector<TumorAnnotation>& anns) {
  double total = 0.0;
  for (const auto& a : anns) {
    total += a.area;
  }
  return total;
}

}  // namespace

TEST_CASE("empty mask has no annotations") {
  CHECK(ExtractContours(BinaryMask(5, 5)).empty());
}

TEST_CASE("single cell with min area 1 is a unit square") {
  BinaryMask m(3, 3);
  m.set(1, 1, true);
  CHECK(ExtractContours(m).empty());
  const auto anns = ExtractContours(m, ContourOptions{1});
  REQUIRE(anns.size() == 1);
  const Ring expected{{1, 1}, {2, 1}, {2, 2}, {1, 2}, {1, 1}};
  CHECK(anns[0].outer_ring == expected);
  CHECK(anns[0].area == 1.0);
  CHECK(SignedArea(anns[0].outer_ring) > 0.0);
}

TEST_CASE("disk of radius 8") {
  BinaryMask m(20, 20);
  long long cells = 0;
  for (int r = 0; r < 20; ++r) {
    for (int c = 0; c < 20; ++c) {
      const double dx = c + 0.5 - 10.0;
      const double dy = r + 0.5 - 10.0;
      if (dx * dx + dy * dy <= 64.0) {
        m.set(c, r, true);
        ++cells;
      }
    }
  }
  const auto anns = ExtractContours(m);
  REQUIRE(anns.size() == 1);
  CHECK(anns[0].holes.empty());
  CHECK(std::abs(anns[0].area - static_cast<double>(cells)) <= 0.05 * cells);
  CHECK(std::abs(anns[0].area - M_PI * 64.0) <= 0.05 * M_PI * 64.0);
}

TEST_CASE("ring with a hole") {
  const BinaryMask m = FromRows({"#####", "#...#", "#.#.#", "#...#", "#####"});
  const auto anns = ExtractContours(m, ContourOptions{1});
  REQUIRE(anns.size() == 2);
  CHECK(anns[0].area == 16.0);
  REQUIRE(anns[0].holes.size() == 1);
  CHECK(SignedArea(anns[0].holes[0]) == -9.0);
  CHECK(anns[1].area == 1.0);
}

TEST_CASE("diagonal neighbours are one component") {
  const BinaryMask m = FromRows({"#..", ".#.", "..#"});
  const auto anns = ExtractContours(m);
  REQUIRE(anns.size() == 1);
  CHECK(anns[0].area == 3.0);
  CHECK(anns[0].outer_ring.front() == anns[0].outer_ring.back());
}

TEST_CASE("diagonal false cells form separate holes") {
  const BinaryMask m = FromRows({"####", "#.##", "##.#", "####"});
  const auto anns = ExtractContours(m);
  REQUIRE(anns.size() == 1);
  CHECK(anns[0].holes.size() == 2);
  CHECK(anns[0].area == 14.0);
}

TEST_CASE("annotations sorted by area then position") {
  const BinaryMask m = FromRows({"##..##", "......", "###..#", "......", "##...."});
  const auto anns = ExtractContours(m, ContourOptions{1});
  REQUIRE(anns.size() == 5);
  CHECK(anns[0].area == 3.0);
  CHECK(anns[1].outer_ring[0] == Point{0, 0});
  CHECK(anns[2].outer_ring[0] == Point{4, 0});
  CHECK(anns[3].outer_ring[0] == Point{0, 4});
  CHECK(anns[4].area == 1.0);
}

TEST_CASE("mean probability over component cells") {
  const BinaryMask m = FromRows({"##.", "..."});
  ProbabilityGrid g(3, 2);
  g.set(0, 0, 0.6);
  g.set(1, 0, 0.8);
  const auto anns = ExtractContours(m, {}, &g);
  REQUIRE(anns.size() == 1);
  CHECK(anns[0].mean_probability == doctest::Approx(0.7));
}

TEST_CASE("net area equals cell count on random masks") {
  SeededRng rng(12);
  for (int trial = 0; trial < 30; ++trial) {
    BinaryMask m(15, 12);
    for (auto& c : m.cells) {
      c = rng.uniform01() < 0.45 ? 1 : 0;
    }
    const auto anns = ExtractContours(m, ContourOptions{1});
    CHECK(NetArea(anns) == static_cast<double>(m.count()));
    for (const auto& a : anns) {
      CHECK(SignedArea(a.outer_ring) > 0.0);
      for (const auto& h : a.holes) {
        CHECK(SignedArea(h) < 0.0);
      }
    }
  }
}

TEST_CASE("rescaling") {
  const BinaryMask m = FromRows({"...", ".##", "..."});
  const auto anns = ExtractContours(m);
  REQUIRE(anns.size() == 1);
  const TumorAnnotation px = RescaleToLevel0(anns[0], 224, 4.0);
  REQUIRE(px.outer_ring.size() == anns[0].outer_ring.size());
  for (std::size_t i = 0; i < px.outer_ring.size(); ++i) {
    CHECK(px.outer_ring[i].x == anns[0].outer_ring[i].x * 896.0);
    CHECK(px.outer_ring[i].y == anns[0].outer_ring[i].y * 896.0);
  }
  CHECK(px.area == 2.0 * 896.0 * 896.0);
  CHECK(RescaleToLevel0(anns[0], 1, 1.0) == anns[0]);
  BinaryMask unit(1, 1);
  unit.set(0, 0, true);
  CHECK(RescaleToLevel0(ExtractContours(unit, ContourOptions{1})[0], 224, 1.0).area == 50176.0);
}

TEST_CASE("rescale commutes with contouring an upsampled mask") {
  const BinaryMask m = FromRows({"##..#", "#..##", "####.", "....."});
  const int k = 3;
  BinaryMask big(m.cols * k, m.rows * k);
  for (int r = 0; r < big.rows; ++r) {
    for (int c = 0; c < big.cols; ++c) {
      big.set(c, r, m.at(c / k, r / k));
    }
  }
  const auto small = RescaleToLevel0(ExtractContours(m), k, 1.0);
  const auto large = ExtractContours(big, ContourOptions{2 * k * k});
  REQUIRE(small.size() == large.size());
  for (std::size_t i = 0; i < small.size(); ++i) {
    CHECK(small[i].outer_ring == large[i].outer_ring);
    CHECK(small[i].holes == large[i].holes);
  }
}
