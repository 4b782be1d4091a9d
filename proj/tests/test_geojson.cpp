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

#include <json.hpp>

#include "tumorloc/error.hpp"
#include "tumorloc/geojson.hpp"

using namespace tumorloc;

namespace {

TumorAnnotation Square(double x, double y, double s, double p) {
  TumorAnnotation a;
  a.outer_ring = {{x, y}, {x + s, y}, {x + s, y + s}, {x, y + s}, {x, y}};
  a.area = s * s;
  a.mean_probability = p;
  return a;
}

}  // namespace

TEST_CASE("empty collection") {
  CHECK(ToGeoJson({}, "s") == R"({"type":"FeatureCollection","features":[]})");
}

TEST_CASE("feature schema") {
  const std::string text = ToGeoJson({Square(0, 0, 224, 0.9)}, "slide_7");
  const auto doc = nlohmann::json::parse(text);
  REQUIRE(doc["features"].size() == 1);
  const auto& f = doc["features"][0];
  CHECK(f["type"] == "Feature");
  CHECK(f["geometry"]["type"] == "Polygon");
  const auto& ring = f["geometry"]["coordinates"][0];
  CHECK(ring.front() == ring.back());
  CHECK(f["properties"]["objectType"] == "annotation");
  CHECK(f["properties"]["classification"]["name"] == "Tumor");
  CHECK(f["properties"]["classification"]["color"] == nlohmann::json::array({200, 0, 0}));
  CHECK(f["properties"]["measurements"]["mean_probability"] == 0.9);
  CHECK(ValidateGeoJson(text).empty());
}

TEST_CASE("serialize, parse, serialize is byte stable") {
  TumorAnnotation holed = Square(0, 0, 896, 0.73);
  holed.holes.push_back({{224, 224}, {224, 448}, {448, 448}, {448, 224}, {224, 224}});
  holed.area -= 224.0 * 224.0;
  const std::vector<TumorAnnotation> anns{holed, Square(1792, 0, 448, 1.0 / 3.0)};
  const std::string first = ToGeoJson(anns, "a");
  std::string id;
  const auto parsed = FromGeoJson(first, &id);
  CHECK(id == "a");
  CHECK(parsed == anns);
  CHECK(ToGeoJson(parsed, id) == first);
}

TEST_CASE("invalid rings are rejected") {
  TumorAnnotation open = Square(0, 0, 1, 0.5);
  open.outer_ring.pop_back();
  CHECK_THROWS_AS(ToGeoJson({open}, "s"), Error);
  TumorAnnotation tiny;
  tiny.outer_ring = {{0, 0}, {1, 0}, {0, 0}};
  try {
    ToGeoJson({tiny}, "s");
    FAIL("expected InvalidRing");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInvalidRing);
  }
}

TEST_CASE("validation reports structural problems") {
  CHECK_FALSE(ValidateGeoJson("{").empty());
  CHECK_FALSE(ValidateGeoJson(R"({"type":"Feature"})").empty());
  CHECK_FALSE(ValidateGeoJson(
                  R"({"type":"FeatureCollection","features":[{"type":"Feature","geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,1]]]}}]})")
                  .empty());
  CHECK(ValidateGeoJson(
            R"({"type":"FeatureCollection","features":[{"type":"Feature","geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,0]]]}}]})")
            .empty());
}
