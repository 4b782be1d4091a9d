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

/// @file config.hpp
/// @brief Pipeline configuration and its TOML schema.
///
/// Every key is optional; omitted keys keep the defaults below. Unknown keys
/// are rejected. Relative paths resolve against the directory of the file.
///
///   [pipeline]   tile_size, level, output_dir, seed, workers, normalize, profile_tiles
///   [qc]         min_tissue_fraction, background_value_min, background_saturation_max,
///                min_blur_score, max_blood_fraction, blood_hue_low, blood_hue_high,
///                blood_saturation_min, blood_value_min
///   [stain]      od_threshold, angle_percentile, io, min_valid_pixels, reference_profile
///   [classifier] spec, batch_size, graph_output, imagenet_normalize
///   [heatmap]    sigma, threshold, min_area, colormap, scale

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "tumorloc/classifier.hpp"
#include "tumorloc/heatmap.hpp"
#include "tumorloc/stain_norm.hpp"
#include "tumorloc/tile_qc.hpp"

namespace tumorloc {

inline constexpr const char* kConfigEnvVar = "TUMORLOC_CONFIG";

struct PipelineConfig {
  int tile_size = kDefaultTileSize;
  int level = 0;
  std::filesystem::path output_dir = "tumorloc_out";
  std::uint64_t seed = 0;
  int workers = 0;  // 0: one per hardware thread
  bool normalize = true;
  int profile_tiles = 64;  // QC-passed tiles pooled for the slide's source profile

  QcConfig qc;
  MacenkoConfig macenko;
  std::filesystem::path reference_profile;  // empty: built-in reference

  ClassifierSpec classifier;
  BatchConfig batch;

  double sigma = kDefaultSigma;
  double threshold = kDefaultThreshold;
  int min_area = 2;
  std::string colormap = "hot";
  int heatmap_scale = 8;

  /// ConfigError on any violated invariant.
  void Validate() const;
  int EffectiveWorkers() const noexcept;
};

/// ConfigError on syntax errors, wrong types, unknown keys or invalid values.
PipelineConfig LoadPipelineConfig(const std::filesystem::path& path);
PipelineConfig ParsePipelineConfig(const std::string& toml_text,
                                   const std::filesystem::path& base_dir = {});

/// `explicit_path` if set, else $TUMORLOC_CONFIG if set, else nullopt.
std::optional<std::filesystem::path> ResolveConfigPath(const std::optional<std::filesystem::path>& explicit_path);

StainProfile LoadReferenceProfile(const PipelineConfig& cfg);

}  // namespace tumorloc
