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

/// @file orchestrator.hpp
/// @brief Per-slide pipeline, shard scheduling and the on-disk output layout.
///
/// Each slide writes into `<output_dir>/<slide_id>/`:
///   scores.csv           slide_id,col,row,x0,y0,p_pos (QC-passed tiles, grid order)
///   qc.csv               slide_id,col,row,tissue_fraction,blur_score,blood_fraction,pass,reject_reasons
///   heatmap.png          smoothed probabilities, one block of `heatmap_scale` pixels per tile
///   mask.png             thresholded mask, one pixel per tile
///   annotations.geojson  tumor polygons in level-0 pixels
///   .done                written last; its presence makes a rerun a no-op
///   errors.log           only for a failed slide
/// Every file is written to a unique temporary name and renamed into place.

#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "tumorloc/classifier.hpp"
#include "tumorloc/config.hpp"
#include "tumorloc/contours.hpp"
#include "tumorloc/heatmap.hpp"
#include "tumorloc/slide_io.hpp"

namespace tumorloc {

enum class SlideStatus { kPending, kDone, kFailed };
std::string ToString(SlideStatus status);

struct ShardManifest {
  int shard_id = 0;
  std::vector<std::string> slides;
  std::vector<SlideStatus> status;  // parallel to `slides`
};

/// Round-robin over the lexicographically sorted list. InvalidArgument if n_shards < 1.
std::vector<ShardManifest> ShardSlides(std::vector<std::string> slides, int n_shards);

/// Slide list file: one path per line, blank lines and `#` comments ignored,
/// relative paths resolved against the list's directory. A directory lists
/// its .png/.tif/.tiff files.
std::vector<std::string> ReadSlideList(const std::filesystem::path& path);

/// In-memory result of the per-slide chain.
struct SlideAnalysis {
  std::string slide_id;
  LevelInfo level;
  std::vector<TileQc> qc;           // every grid tile, grid order
  std::vector<TileScore> scores;    // QC-passed tiles, grid order
  std::vector<PixelPoint> origins;  // level-0 origin of each score
  ProbabilityGrid raw;
  ProbabilityGrid smoothed;
  BinaryMask mask;
  std::vector<TumorAnnotation> annotations;  // level-0 pixels
};

/// tile -> qc -> normalize -> score -> assemble -> smooth -> threshold ->
/// contours -> rescale. Tile work runs on cfg.EffectiveWorkers() threads.
SlideAnalysis AnalyzeSlide(const SlideSource& slide, const PipelineConfig& cfg,
                           const TileClassifier& model, const StainProfile& reference);

std::string ScoresCsv(const SlideAnalysis& analysis);
std::string QcCsv(const SlideAnalysis& analysis);

struct SlideResult {
  std::string slide_id;
  std::string path;
  SlideStatus status = SlideStatus::kPending;
  bool skipped = false;  // already complete
  std::string error;
  std::size_t n_tiles = 0;
  std::size_t n_passed = 0;
  std::size_t n_annotations = 0;
};

std::filesystem::path SlideOutputDir(const PipelineConfig& cfg, const std::string& slide_id);

/// Never throws for slide-level problems; they are reported in the result
/// and in errors.log.
SlideResult RunSlide(const std::filesystem::path& slide_path, const PipelineConfig& cfg,
                     const TileClassifier& model, const StainProfile& reference, bool force = false);

struct RunSummary {
  int shard_id = 0;
  int n_shards = 1;
  std::vector<SlideResult> slides;

  std::size_t failures() const noexcept;
  std::string ToJson() const;
};

/// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitSlideFailures = 1;
inline constexpr int kExitConfigError = 2;

/// Runs this shard's slides and writes `summary_shard<k>.json` to the output
/// directory. Returns kExitOk, kExitSlideFailures, or kExitConfigError when
/// the configuration, classifier or reference profile cannot be loaded.
int RunAll(const std::vector<std::string>& slides, const PipelineConfig& cfg, int shard_id,
           int n_shards, bool force = false, RunSummary* summary = nullptr);

/// Writes `contents` to `path` via a unique temporary file and rename.
void WriteFileAtomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace tumorloc
