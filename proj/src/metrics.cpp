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

#include "tumorloc/metrics.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <map>
#include <numeric>

#include "tumorloc/csv.hpp"
#include "tumorloc/error.hpp"

namespace tumorloc {

ConfusionCounts Confusion(std::span<const LabeledScore> scores, double threshold) {
  if (scores.empty()) {
    throw Error(ErrorCode::kEmptyInput, "confusion counts of an empty score list");
  }
  ConfusionCounts c;
  for (const auto& s : scores) {
    const bool predicted = s.p_pos >= threshold;
    if (s.label == 1) {
      predicted ? ++c.tp : ++c.fn;
    } else {
      predicted ? ++c.fp : ++c.tn;
    }
  }
  return c;
}

SummaryStats ComputeSummaryStats(const ConfusionCounts& c) {
  SummaryStats s;
  auto ratio = [](long long num, long long den) -> std::optional<double> {
    if (den == 0) {
      return std::nullopt;
    }
    return static_cast<double>(num) / static_cast<double>(den);
  };
  s.sensitivity = ratio(c.tp, c.tp + c.fn);
  s.specificity = ratio(c.tn, c.tn + c.fp);
  s.f1 = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn);
  s.misclassification_rate = ratio(c.fp + c.fn, c.total());
  return s;
}

double RocAuc(std::span<const LabeledScore> scores) {
  long long n_pos = 0;
  long long n_neg = 0;
  for (const auto& s : scores) {
    (s.label == 1 ? n_pos : n_neg)++;
  }
  if (n_pos == 0 || n_neg == 0) {
    throw Error(ErrorCode::kOneClassOnly, "ROC-AUC needs both positive and negative tiles");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a].p_pos < scores[b].p_pos; });

  // Sum of average ranks (1-based) over positives; tied blocks share their mean rank.
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    long long pos_in_block = 0;
    while (j < order.size() && scores[order[j]].p_pos == scores[order[i]].p_pos) {
      pos_in_block += scores[order[j]].label == 1 ? 1 : 0;
      ++j;
    }
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    rank_sum_pos += avg_rank * static_cast<double>(pos_in_block);
    i = j;
  }
  const double u = rank_sum_pos - 0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1);
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

namespace {

const std::vector<std::string>& KnownCohortOrder() {
  static const std::vector<std::string> order{"MEL", "HCC", "CRC", "NSCLC", "PDAC"};
  return order;
}

MetricsRow MakeRow(const std::string& name, std::span<const LabeledScore> scores, double threshold) {
  MetricsRow row;
  row.cohort = name;
  row.counts = Confusion(scores, threshold);
  row.stats = ComputeSummaryStats(row.counts);
  row.n_tiles = row.counts.total();
  const bool has_pos = row.counts.tp + row.counts.fn > 0;
  const bool has_neg = row.counts.tn + row.counts.fp > 0;
  if (has_pos && has_neg) {
    row.auc = RocAuc(scores);
  }
  return row;
}

}  // namespace

MetricsReport StratifiedReport(std::span<const LabeledScore> scores, double threshold) {
  if (scores.empty()) {
    throw Error(ErrorCode::kEmptyInput, "no predictions to evaluate");
  }
  std::map<std::string, std::vector<LabeledScore>> by_cohort;
  for (const auto& s : scores) {
    by_cohort[s.cohort].push_back(s);
  }
  std::vector<std::string> names;
  for (const auto& known : KnownCohortOrder()) {
    if (by_cohort.count(known) != 0) {
      names.push_back(known);
    }
  }
  for (const auto& [name, unused] : by_cohort) {
    if (std::find(names.begin(), names.end(), name) == names.end()) {
      names.push_back(name);
    }
  }

  MetricsReport report;
  report.threshold = threshold;
  for (const auto& name : names) {
    report.rows.push_back(MakeRow(name, by_cohort[name], threshold));
  }
  report.rows.push_back(MakeRow("Overall", scores, threshold));
  return report;
}

std::string ReportToJson(const MetricsReport& report) {
  using Json = nlohmann::ordered_json;
  auto opt = [](const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); };
  Json doc;
  doc["threshold"] = report.threshold;
  doc["rows"] = Json::array();
  for (const auto& row : report.rows) {
    Json r;
    r["cohort"] = row.cohort;
    r["auc"] = opt(row.auc);
    r["f1"] = opt(row.stats.f1);
    r["sensitivity"] = opt(row.stats.sensitivity);
    r["specificity"] = opt(row.stats.specificity);
    r["n_tiles"] = row.n_tiles;
    r["misclassification_rate"] = opt(row.stats.misclassification_rate);
    r["tp"] = row.counts.tp;
    r["fp"] = row.counts.fp;
    r["tn"] = row.counts.tn;
    r["fn"] = row.counts.fn;
    doc["rows"].push_back(std::move(r));
  }
  return doc.dump(2) + "\n";
}

namespace {

std::string Thousands(long long n) {
  std::string digits = std::to_string(n < 0 ? -n : n);
  std::string out;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (i > 0 && (digits.size() - i) % 3 == 0) {
      out += ',';
    }
    out += digits[i];
  }
  return n < 0 ? "-" + out : out;
}

std::string Cell(const std::optional<double>& v) { return v ? fmt::format("{:.3f}", *v) : "-"; }

}  // namespace

std::string ReportToTable(const MetricsReport& report) {
  std::string out = fmt::format("{:<12}{:>8}{:>10}{:>13}{:>13}{:>9}\n", "Tumor Type", "AUC",
                                "F1 Score", "Sensitivity", "Specificity", "nTiles");
  for (const auto& row : report.rows) {
    out += fmt::format("{:<12}{:>8}{:>10}{:>13}{:>13}{:>9}\n", row.cohort, Cell(row.auc),
                       Cell(row.stats.f1), Cell(row.stats.sensitivity), Cell(row.stats.specificity),
                       Thousands(row.n_tiles));
  }
  return out;
}

std::vector<LabeledScore> ReadPredictionsCsv(const std::filesystem::path& path) {
  const CsvTable csv = CsvTable::Read(path);
  const std::size_t p_col = csv.Column("p_pos");
  const std::size_t label_col = csv.Column("label");
  const std::size_t cohort_col = csv.Column("cohort");
  std::vector<LabeledScore> out;
  out.reserve(csv.rows.size());
  for (const auto& row : csv.rows) {
    LabeledScore s;
    s.p_pos = ParseDouble(row[p_col]);
    const long long label = ParseInt(row[label_col]);
    if (label != 0 && label != 1) {
      throw Error(ErrorCode::kParseError, "label must be 0 or 1");
    }
    if (!(s.p_pos >= 0.0 && s.p_pos <= 1.0)) {
      throw Error(ErrorCode::kParseError, "p_pos must lie in [0, 1]");
    }
    s.label = static_cast<int>(label);
    s.cohort = row[cohort_col];
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace tumorloc
