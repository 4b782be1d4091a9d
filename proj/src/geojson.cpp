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

#include "tumorloc/geojson.hpp"

#include <json.hpp>

#include "tumorloc/error.hpp"

namespace tumorloc {

namespace {

using Json = nlohmann::ordered_json;

void CheckRing(const Ring& ring, const char* what) {
  if (ring.size() < 4) {
    throw Error(ErrorCode::kInvalidRing, std::string(what) + " has fewer than 4 points");
  }
  if (!(ring.front() == ring.back())) {
    throw Error(ErrorCode::kInvalidRing, std::string(what) + " is not closed");
  }
}

Json RingToJson(const Ring& ring) {
  Json out = Json::array();
  for (const Point& p : ring) {
    out.push_back(Json::array({p.x, p.y}));
  }
  return out;
}

Ring RingFromJson(const Json& j) {
  if (!j.is_array()) {
    throw Error(ErrorCode::kParseError, "ring must be an array of positions");
  }
  Ring ring;
  for (const auto& pos : j) {
    if (!pos.is_array() || pos.size() < 2 || !pos[0].is_number() || !pos[1].is_number()) {
      throw Error(ErrorCode::kParseError, "position must be [x, y]");
    }
    ring.push_back({pos[0].get<double>(), pos[1].get<double>()});
  }
  CheckRing(ring, "ring");
  return ring;
}

}  // namespace

std::string ToGeoJson(const std::vector<TumorAnnotation>& annotations, const std::string& slide_id,
                      bool pretty) {
  Json doc;
  doc["type"] = "FeatureCollection";
  doc["features"] = Json::array();
  for (const auto& ann : annotations) {
    CheckRing(ann.outer_ring, "outer ring");
    Json coords = Json::array();
    coords.push_back(RingToJson(ann.outer_ring));
    for (const auto& hole : ann.holes) {
      CheckRing(hole, "hole");
      coords.push_back(RingToJson(hole));
    }
    Json feature;
    feature["type"] = "Feature";
    feature["geometry"] = {{"type", "Polygon"}, {"coordinates", std::move(coords)}};
    Json props;
    props["objectType"] = "annotation";
    props["classification"] = {{"name", "Tumor"}, {"color", Json::array({200, 0, 0})}};
    props["measurements"] = {{"mean_probability", ann.mean_probability}, {"area_px", ann.area}};
    props["slide_id"] = slide_id;
    feature["properties"] = std::move(props);
    doc["features"].push_back(std::move(feature));
  }
  return pretty ? doc.dump(2) + "\n" : doc.dump();
}

namespace {

std::vector<TumorAnnotation> ParseCollection(const std::string& text, std::string* slide_id) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, e.what());
  }
  if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" ||
      !doc.contains("features") || !doc["features"].is_array()) {
    throw Error(ErrorCode::kParseError, "not a GeoJSON FeatureCollection");
  }
  std::vector<TumorAnnotation> out;
  for (const auto& feature : doc["features"]) {
    if (!feature.is_object() || feature.value("type", "") != "Feature" ||
        !feature.contains("geometry") || !feature["geometry"].is_object()) {
      throw Error(ErrorCode::kParseError, "feature without geometry");
    }
    const auto& geom = feature["geometry"];
    if (geom.value("type", "") != "Polygon" || !geom.contains("coordinates") ||
        !geom["coordinates"].is_array() || geom["coordinates"].empty()) {
      throw Error(ErrorCode::kParseError, "geometry must be a non-empty Polygon");
    }
    TumorAnnotation ann;
    const auto& rings = geom["coordinates"];
    ann.outer_ring = RingFromJson(rings[0]);
    for (std::size_t i = 1; i < rings.size(); ++i) {
      ann.holes.push_back(RingFromJson(rings[i]));
    }
    const Json* measurements = nullptr;
    if (feature.contains("properties") && feature["properties"].is_object() &&
        feature["properties"].contains("measurements") &&
        feature["properties"]["measurements"].is_object()) {
      measurements = &feature["properties"]["measurements"];
    }
    if (measurements != nullptr && measurements->contains("area_px")) {
      ann.area = (*measurements)["area_px"].get<double>();
    } else {
      ann.area = SignedArea(ann.outer_ring);
      for (const auto& hole : ann.holes) {
        ann.area += SignedArea(hole);
      }
    }
    if (slide_id != nullptr && out.empty() && feature.contains("properties") &&
        feature["properties"].is_object()) {
      *slide_id = feature["properties"].value("slide_id", "");
    }
    if (measurements != nullptr && measurements->contains("mean_probability")) {
      ann.mean_probability = (*measurements)["mean_probability"].get<double>();
    }
    out.push_back(std::move(ann));
  }
  return out;
}

}  // namespace

std::vector<TumorAnnotation> FromGeoJson(const std::string& text, std::string* slide_id) {
  try {
    return ParseCollection(text, slide_id);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, e.what());
  }
}

std::string ValidateGeoJson(const std::string& text) {
  try {
    FromGeoJson(text);
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace tumorloc
