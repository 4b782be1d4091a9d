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

/// @file classifier.hpp
/// @brief Batched tile scoring behind one interface.
///
/// Three backends share the port:
///  - stub: a (slide_id, col, row) -> p_pos lookup table with a default,
///  - baseline: logistic regression over six hand-crafted tile features,
///  - graph: an exported network (ONNX) run through OpenCV's dnn module.
///    Only present when built with TUMORLOC_WITH_GRAPH_BACKEND; otherwise
///    loading one raises BackendUnavailable.
///
/// A loaded classifier is immutable and may be shared by worker threads.

#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "tumorloc/slide_io.hpp"
#include "tumorloc/stain_norm.hpp"

namespace tumorloc {

inline constexpr int kClassifierInputSize = 224;
inline constexpr int kDefaultBatchSize = 375;

struct TileScore {
  TileCoord coord;
  std::string slide_id;
  double p_pos = 0.0;
};

struct BatchConfig {
  int batch_size = kDefaultBatchSize;
};

class TileClassifier {
 public:
  virtual ~TileClassifier() = default;

  virtual std::string name() const = 0;
  /// One probability per tile, in input order. Tiles are already shape-checked.
  virtual std::vector<double> ScoreBatch(std::span<const TileRecord> tiles) const = 0;
};

/// Scores `tiles` in chunks of cfg.batch_size. Chunking never changes a score.
std::vector<TileScore> ScoreBatch(std::span<const TileRecord> tiles, const TileClassifier& model,
                                  const BatchConfig& cfg = {});

// ---------------------------------------------------------------------------
// Stub backend.

class StubClassifier final : public TileClassifier {
 public:
  using Key = std::tuple<std::string, int, int>;

  StubClassifier(std::map<Key, double> table, double default_p);
  /// CSV header `slide_id,col,row,p_pos`; a row whose slide_id is `default`
  /// sets the fallback (0 when absent).
  static StubClassifier FromCsv(const std::filesystem::path& path);

  std::string name() const override { return "stub"; }
  std::vector<double> ScoreBatch(std::span<const TileRecord> tiles) const override;

  double default_probability() const noexcept { return default_p_; }

 private:
  std::map<Key, double> table_;
  double default_p_;
};

// ---------------------------------------------------------------------------
// Baseline backend.

inline constexpr int kBaselineFeatureCount = 6;
using BaselineFeatures = std::array<double, kBaselineFeatureCount>;

/// [mean H concentration, mean E concentration, tissue fraction,
///  blur score / 1000, mean gray / 255, std gray / 255], concentrations solved
/// against `reference`.
BaselineFeatures ComputeBaselineFeatures(const RgbImage& tile, const StainProfile& reference);
BaselineFeatures ComputeBaselineFeatures(const TileRecord& tile, const StainProfile& reference);

class BaselineClassifier final : public TileClassifier {
 public:
  /// weights: 6 feature weights followed by the bias.
  BaselineClassifier(std::array<double, kBaselineFeatureCount + 1> weights, StainProfile reference);
  /// JSON array of 7 reals.
  static BaselineClassifier FromJson(const std::filesystem::path& path, StainProfile reference);

  std::string name() const override { return "baseline"; }
  std::vector<double> ScoreBatch(std::span<const TileRecord> tiles) const override;

  double Probability(const BaselineFeatures& features) const;

 private:
  std::array<double, kBaselineFeatureCount + 1> weights_;
  StainProfile reference_;
};

// ---------------------------------------------------------------------------
// Loading.

enum class ClassifierKind { kStub, kBaseline, kGraph };

/// How a graph model's raw output becomes p_pos.
enum class GraphOutput {
  kSoftmax,      // two logits, positive class is index 1
  kProbability,  // one value already in [0, 1]
  kLogit,        // one logit
};

struct ClassifierSpec {
  ClassifierKind kind = ClassifierKind::kBaseline;
  std::filesystem::path path;
  // graph backend options
  GraphOutput graph_output = GraphOutput::kSoftmax;
  bool imagenet_normalize = true;

  /// Parses "stub:<csv>", "baseline:<json>" or "graph:<onnx>".
  static ClassifierSpec Parse(const std::string& text);
};

bool GraphBackendAvailable() noexcept;

/// `reference` is required by the baseline backend only.
std::shared_ptr<const TileClassifier> LoadClassifier(const ClassifierSpec& spec,
                                                     const StainProfile& reference);

}  // namespace tumorloc
