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

#include "tumorloc/classifier.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "tumorloc/csv.hpp"
#include "tumorloc/error.hpp"
#include "tumorloc/tile_qc.hpp"

#ifdef TUMORLOC_WITH_GRAPH_BACKEND
#include <mutex>
#include <opencv2/core.hpp>
#include <opencv2/dnn.hpp>
#endif

namespace tumorloc {

namespace {

double Logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void CheckShape(const TileRecord& tile) {
  if (tile.pixels.width() != kClassifierInputSize || tile.pixels.height() != kClassifierInputSize) {
    throw Error(ErrorCode::kShapeError,
                "classifier expects " + std::to_string(kClassifierInputSize) + "x" +
                    std::to_string(kClassifierInputSize) + "x3 tiles, got " +
                    std::to_string(tile.pixels.width()) + "x" + std::to_string(tile.pixels.height()));
  }
}

}  // namespace

std::vector<TileScore> ScoreBatch(std::span<const TileRecord> tiles, const TileClassifier& model,
                                  const BatchConfig& cfg) {
  if (cfg.batch_size < 1) {
    throw Error(ErrorCode::kInvalidArgument, "batch_size must be >= 1");
  }
  for (const auto& t : tiles) {
    CheckShape(t);
  }
  std::vector<TileScore> scores;
  scores.reserve(tiles.size());
  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  for (std::size_t start = 0; start < tiles.size(); start += batch) {
    const std::size_t count = std::min(batch, tiles.size() - start);
    const std::vector<double> p = model.ScoreBatch(tiles.subspan(start, count));
    if (p.size() != count) {
      throw Error(ErrorCode::kInferenceError,
                  model.name() + " returned " + std::to_string(p.size()) + " scores for " +
                      std::to_string(count) + " tiles");
    }
    for (std::size_t i = 0; i < count; ++i) {
      if (!(p[i] >= 0.0 && p[i] <= 1.0)) {
        throw Error(ErrorCode::kInferenceError, model.name() + " produced a probability outside [0, 1]");
      }
      const TileRecord& t = tiles[start + i];
      scores.push_back({t.coord, t.slide_id, p[i]});
    }
  }
  return scores;
}

// ---------------------------------------------------------------------------

StubClassifier::StubClassifier(std::map<Key, double> table, double default_p)
    : table_(std::move(table)), default_p_(default_p) {
  auto check = [](double p) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw Error(ErrorCode::kModelLoadError, "stub probability outside [0, 1]");
    }
  };
  check(default_p_);
  for (const auto& [key, p] : table_) {
    check(p);
  }
}

StubClassifier StubClassifier::FromCsv(const std::filesystem::path& path) {
  try {
    const CsvTable csv = CsvTable::Read(path);
    if (csv.header.empty()) {
      throw Error(ErrorCode::kModelLoadError, "stub table " + path.string() + " is empty");
    }
    const std::size_t id_col = csv.Column("slide_id");
    const std::size_t col_col = csv.Column("col");
    const std::size_t row_col = csv.Column("row");
    const std::size_t p_col = csv.Column("p_pos");
    std::map<Key, double> table;
    double default_p = 0.0;
    for (const auto& row : csv.rows) {
      const double p = ParseDouble(row[p_col]);
      if (row[id_col] == "default") {
        default_p = p;
        continue;
      }
      Key key{row[id_col], static_cast<int>(ParseInt(row[col_col])),
              static_cast<int>(ParseInt(row[row_col]))};
      if (!table.emplace(std::move(key), p).second) {
        throw Error(ErrorCode::kModelLoadError, "duplicate stub entry in " + path.string());
      }
    }
    return StubClassifier(std::move(table), default_p);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kModelLoadError) {
      throw;
    }
    throw Error(ErrorCode::kModelLoadError, e.what());
  }
}

std::vector<double> StubClassifier::ScoreBatch(std::span<const TileRecord> tiles) const {
  std::vector<double> out;
  out.reserve(tiles.size());
  for (const auto& t : tiles) {
    auto it = table_.find(Key{t.slide_id, t.coord.col, t.coord.row});
    out.push_back(it == table_.end() ? default_p_ : it->second);
  }
  return out;
}

// ---------------------------------------------------------------------------

BaselineFeatures ComputeBaselineFeatures(const RgbImage& tile, const StainProfile& reference) {
  BaselineFeatures f{};
  const std::size_t n = tile.pixel_count();
  if (n == 0) {
    return f;
  }
  const Concentrations conc = SolveConcentrations(RgbToOd(tile), reference);
  f[0] = conc.col(0).mean();
  f[1] = conc.col(1).mean();
  f[2] = TissueFraction(tile, QcConfig{});
  f[3] = BlurScore(tile) / 1000.0;

  auto bytes = tile.bytes();
  double sum = 0.0;
  std::vector<double> gray(n);
  for (std::size_t i = 0; i < n; ++i) {
    gray[i] = 0.299 * bytes[3 * i] + 0.587 * bytes[3 * i + 1] + 0.114 * bytes[3 * i + 2];
    sum += gray[i];
  }
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (double g : gray) {
    ss += (g - mean) * (g - mean);
  }
  f[4] = mean / 255.0;
  f[5] = std::sqrt(ss / static_cast<double>(n)) / 255.0;
  return f;
}

BaselineFeatures ComputeBaselineFeatures(const TileRecord& tile, const StainProfile& reference) {
  return ComputeBaselineFeatures(tile.pixels, reference);
}

BaselineClassifier::BaselineClassifier(std::array<double, kBaselineFeatureCount + 1> weights,
                                       StainProfile reference)
    : weights_(weights), reference_(std::move(reference)) {
  for (double w : weights_) {
    if (!std::isfinite(w)) {
      throw Error(ErrorCode::kModelLoadError, "baseline weights must be finite");
    }
  }
}

BaselineClassifier BaselineClassifier::FromJson(const std::filesystem::path& path,
                                                StainProfile reference) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kModelLoadError, "cannot read baseline weights " + path.string());
  }
  std::stringstream ss;
  ss << in.rdbuf();
  std::array<double, kBaselineFeatureCount + 1> weights{};
  try {
    const nlohmann::json j = nlohmann::json::parse(ss.str());
    if (!j.is_array() || j.size() != weights.size()) {
      throw Error(ErrorCode::kModelLoadError,
                  path.string() + " must hold a JSON array of " + std::to_string(weights.size()) + " reals");
    }
    for (std::size_t i = 0; i < weights.size(); ++i) {
      weights[i] = j.at(i).get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kModelLoadError, path.string() + ": " + e.what());
  }
  return BaselineClassifier(weights, std::move(reference));
}

double BaselineClassifier::Probability(const BaselineFeatures& features) const {
  double z = weights_[kBaselineFeatureCount];
  for (int i = 0; i < kBaselineFeatureCount; ++i) {
    z += weights_[static_cast<std::size_t>(i)] * features[static_cast<std::size_t>(i)];
  }
  return Logistic(z);
}

std::vector<double> BaselineClassifier::ScoreBatch(std::span<const TileRecord> tiles) const {
  std::vector<double> out;
  out.reserve(tiles.size());
  for (const auto& t : tiles) {
    out.push_back(Probability(ComputeBaselineFeatures(t, reference_)));
  }
  return out;
}

// ---------------------------------------------------------------------------

#ifdef TUMORLOC_WITH_GRAPH_BACKEND

namespace {

class GraphClassifier final : public TileClassifier {
 public:
  GraphClassifier(const ClassifierSpec& spec) : spec_(spec) {
    try {
      net_ = cv::dnn::readNetFromONNX(spec.path.string());
    } catch (const cv::Exception& e) {
      throw Error(ErrorCode::kModelLoadError, spec.path.string() + ": " + e.what());
    }
    if (net_.empty()) {
      throw Error(ErrorCode::kModelLoadError, "empty network in " + spec.path.string());
    }
    net_.setPreferableBackend(cv::dnn::DNN_BACKEND_OPENCV);
    net_.setPreferableTarget(cv::dnn::DNN_TARGET_CPU);
  }

  std::string name() const override { return "graph"; }

  std::vector<double> ScoreBatch(std::span<const TileRecord> tiles) const override {
    if (tiles.empty()) {
      return {};
    }
    const int n = static_cast<int>(tiles.size());
    const int s = kClassifierInputSize;
    const int dims[4] = {n, 3, s, s};
    cv::Mat blob(4, dims, CV_32F);
    static constexpr float kMean[3] = {0.485f, 0.456f, 0.406f};
    static constexpr float kStd[3] = {0.229f, 0.224f, 0.225f};
    auto* data = blob.ptr<float>();
    const std::size_t plane = static_cast<std::size_t>(s) * s;
    for (int b = 0; b < n; ++b) {
      auto bytes = tiles[static_cast<std::size_t>(b)].pixels.bytes();
      for (int c = 0; c < 3; ++c) {
        float* dst = data + (static_cast<std::size_t>(b) * 3 + static_cast<std::size_t>(c)) * plane;
        for (std::size_t i = 0; i < plane; ++i) {
          float v = static_cast<float>(bytes[3 * i + static_cast<std::size_t>(c)]) / 255.0f;
          if (spec_.imagenet_normalize) {
            v = (v - kMean[c]) / kStd[c];
          }
          dst[i] = v;
        }
      }
    }

    cv::Mat out;
    {
      std::lock_guard<std::mutex> lock(mutex_);
      try {
        net_.setInput(blob);
        out = net_.forward().clone();
      } catch (const cv::Exception& e) {
        throw Error(ErrorCode::kInferenceError, e.what());
      }
    }
    out = out.reshape(1, n);
    const int k = out.cols;
    std::vector<double> p;
    p.reserve(tiles.size());
    for (int b = 0; b < n; ++b) {
      const float* row = out.ptr<float>(b);
      switch (spec_.graph_output) {
        case GraphOutput::kSoftmax: {
          if (k != 2) {
            throw Error(ErrorCode::kInferenceError, "softmax output needs 2 columns, got " + std::to_string(k));
          }
          const double m = std::max(row[0], row[1]);
          const double e0 = std::exp(row[0] - m);
          const double e1 = std::exp(row[1] - m);
          p.push_back(e1 / (e0 + e1));
          break;
        }
        case GraphOutput::kProbability:
        case GraphOutput::kLogit:
          if (k != 1) {
            throw Error(ErrorCode::kInferenceError, "expected 1 output column, got " + std::to_string(k));
          }
          p.push_back(spec_.graph_output == GraphOutput::kLogit ? Logistic(row[0]) : row[0]);
          break;
      }
    }
    return p;
  }

 private:
  ClassifierSpec spec_;
  mutable std::mutex mutex_;
  mutable cv::dnn::Net net_;
};

}  // namespace

bool GraphBackendAvailable() noexcept { return true; }

#else

bool GraphBackendAvailable() noexcept { return false; }

#endif

ClassifierSpec ClassifierSpec::Parse(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) {
    throw Error(ErrorCode::kConfigError, "classifier spec must look like <kind>:<path>, got '" + text + "'");
  }
  const std::string kind = text.substr(0, colon);
  ClassifierSpec spec;
  spec.path = text.substr(colon + 1);
  if (kind == "stub") {
    spec.kind = ClassifierKind::kStub;
  } else if (kind == "baseline") {
    spec.kind = ClassifierKind::kBaseline;
  } else if (kind == "graph") {
    spec.kind = ClassifierKind::kGraph;
  } else {
    throw Error(ErrorCode::kConfigError, "unknown classifier kind '" + kind + "'");
  }
  return spec;
}

std::shared_ptr<const TileClassifier> LoadClassifier(const ClassifierSpec& spec,
                                                     const StainProfile& reference) {
  switch (spec.kind) {
    case ClassifierKind::kStub:
      return std::make_shared<StubClassifier>(StubClassifier::FromCsv(spec.path));
    case ClassifierKind::kBaseline:
      return std::make_shared<BaselineClassifier>(BaselineClassifier::FromJson(spec.path, reference));
    case ClassifierKind::kGraph:
#ifdef TUMORLOC_WITH_GRAPH_BACKEND
      if (!std::filesystem::exists(spec.path)) {
        throw Error(ErrorCode::kModelLoadError, "no such model file " + spec.path.string());
      }
      return std::make_shared<GraphClassifier>(spec);
#else
      throw Error(ErrorCode::kBackendUnavailable,
                  "graph classifier requested but this build has no graph backend");
#endif
  }
  throw Error(ErrorCode::kConfigError, "unknown classifier kind");
}

}  // namespace tumorloc
