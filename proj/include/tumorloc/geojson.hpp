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

/// @file geojson.hpp
/// @brief QuPath-flavoured GeoJSON FeatureCollection of tumor polygons.
///
/// Coordinates are level-0 pixels (x right, y down), the convention QuPath
/// uses for GeoJSON import; they are not geographic. Each feature carries
///   "properties": {"objectType": "annotation",
///                  "classification": {"name": "Tumor", "color": [200, 0, 0]},
///                  "measurements": {"mean_probability": p, "area_px": a}}

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tumorloc/contours.hpp"

namespace tumorloc {

/// InvalidRing if any ring is open or has fewer than 4 points.
std::string ToGeoJson(const std::vector<TumorAnnotation>& annotations, const std::string& slide_id,
                      bool pretty = false);

/// Parses a document produced by ToGeoJson (or any FeatureCollection of
/// Polygon features). ParseError / InvalidRing on structural problems.
/// The slide id of the first feature, if any, is stored in `slide_id`.
std::vector<TumorAnnotation> FromGeoJson(const std::string& text, std::string* slide_id = nullptr);

/// Structural RFC 7946 checks: FeatureCollection, Feature objects, Polygon
/// geometries with closed rings of >= 4 positions. Returns an empty string
/// when valid, otherwise the first problem found.
std::string ValidateGeoJson(const std::string& text);

}  // namespace tumorloc
