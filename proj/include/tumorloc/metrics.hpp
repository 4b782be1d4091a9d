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

/// @file metrics.hpp
/// @brief Tile-level classification metrics, overall and per cohort.
///
/// A tile is predicted positive iff p_pos >= threshold (same convention as the
/// heatmap mask). Metrics whose denominator is zero are reported as absent
/// (std::nullopt) rather than 0 or 1.

#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tumorloc {

struct LabeledScore {
  double p_pos = 0.0;
  int label = 0;  // 1 = tumor
  std::string cohort;
};

struct ConfusionCounts {
  long long tp = 0;
  long long fp = 0;
  long long tn = 0;
  long long fn = 0;

  long long total() const noexcept { return tp + fp + tn + fn; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

struct SummaryStats {
  std::optional<double> sensitivity;
  std::optional<double> specificity;
  std::optional<double> f1;
  std::optional<double> misclassification_rate;
};

/// EmptyInput on an empty list.
ConfusionCounts Confusion(std::span<const LabeledScore> scores, double threshold = 0.5);

SummaryStats ComputeSummaryStats(const ConfusionCounts& counts);

/// Mann-Whitney statistic via average ranks: P(pos > neg) + 0.5 P(tie).
/// OneClassOnly unless both labels are present.
double RocAuc(std::span<const LabeledScore> scores);

struct MetricsRow {
  std::string cohort;  // "Overall" for the pooled row
  std::optional<double> auc;
  SummaryStats stats;
  ConfusionCounts counts;
  long long n_tiles = 0;
};

struct MetricsReport {
  double threshold = 0.5;
  std::vector<MetricsRow> rows;  // cohorts first, overall row last
};

/// Cohort order: MEL, HCC, CRC, NSCLC, PDAC first (when present), then any
/// other cohorts alphabetically, then the overall row.
MetricsReport StratifiedReport(std::span<const LabeledScore> scores, double threshold = 0.5);

/// Machine-readable report at full precision; absent metrics are null.
std::string ReportToJson(const MetricsReport& report);
/// Fixed-width table with 3-decimal rounding: Tumor Type, AUC, F1 Score,
/// Sensitivity, Specificity, nTiles.
std::string ReportToTable(const MetricsReport& report);

/// CSV columns slide_id, col, row, p_pos, label, cohort.
std::vector<LabeledScore> ReadPredictionsCsv(const std::filesystem::path& path);

}  // namespace tumorloc
