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

#include "tumorloc/balancer.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <numeric>
#include <span>
#include <sstream>

#include "tumorloc/error.hpp"
#include "tumorloc/random.hpp"

namespace tumorloc {

namespace {

using Json = nlohmann::ordered_json;

ManifestEntry EntryFromJson(const Json& j) {
  if (!j.is_object()) {
    throw Error(ErrorCode::kParseError, "manifest line is not a JSON object");
  }
  ManifestEntry e;
  if (j.contains("path") && !j["path"].is_null()) {
    e.path = j["path"].get<std::string>();
  }
  e.slide_id = j.value("slide_id", "");
  e.col = j.value("col", -1);
  e.row = j.value("row", -1);
  if (!j.contains("label") || !j["label"].is_number_integer()) {
    throw Error(ErrorCode::kParseError, "manifest entry without integer label");
  }
  e.label = j["label"].get<int>();
  if (e.label != 0 && e.label != 1) {
    throw Error(ErrorCode::kParseError, "label must be 0 or 1");
  }
  if (!e.path && (e.slide_id.empty() || e.col < 0 || e.row < 0)) {
    throw Error(ErrorCode::kParseError, "manifest entry needs a path or (slide_id, col, row)");
  }
  e.tumor_type = j.value("tumor_type", "");
  if (j.contains("patient_id") && !j["patient_id"].is_null()) {
    e.patient_id = j["patient_id"].get<std::string>();
  }
  return e;
}

Json EntryToJson(const ManifestEntry& e) {
  Json j;
  if (e.path) {
    j["path"] = *e.path;
  }
  j["slide_id"] = e.slide_id;
  j["col"] = e.col;
  j["row"] = e.row;
  j["label"] = e.label;
  j["tumor_type"] = e.tumor_type;
  if (e.patient_id) {
    j["patient_id"] = *e.patient_id;
  }
  return j;
}

void CheckTarget(int target_total) {
  if (target_total <= 0 || target_total % 2 != 0) {
    throw Error(ErrorCode::kInvalidArgument, "target_total must be a positive even number");
  }
}

// Indices of each class, in input order.
std::array<std::vector<std::size_t>, 2> SplitByLabel(const std::vector<ManifestEntry>& entries) {
  std::array<std::vector<std::size_t>, 2> by_label;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    by_label[static_cast<std::size_t>(entries[i].label)].push_back(i);
  }
  if (by_label[0].empty() || by_label[1].empty()) {
    throw Error(ErrorCode::kOneClassOnly, "both tumor and non-tumor entries are required");
  }
  return by_label;
}

std::vector<ManifestEntry> Gather(const std::vector<ManifestEntry>& entries,
                                  const std::vector<std::size_t>& picked, SeededRng& rng) {
  std::vector<ManifestEntry> out;
  out.reserve(picked.size());
  for (std::size_t i : picked) {
    out.push_back(entries[i]);
  }
  rng.shuffle(std::span<ManifestEntry>(out));
  return out;
}

}  // namespace

std::vector<ManifestEntry> ParseManifest(const std::string& ndjson) {
  std::vector<ManifestEntry> out;
  std::istringstream in(ndjson);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    try {
      out.push_back(EntryFromJson(Json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kParseError, "manifest line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<ManifestEntry> ReadManifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kIoError, "cannot open manifest " + path.string());
  }
  std::ostringstream text;
  text << in.rdbuf();
  return ParseManifest(text.str());
}

std::string SerializeManifest(const std::vector<ManifestEntry>& entries) {
  std::string out;
  for (const auto& e : entries) {
    out += EntryToJson(e).dump();
    out += '\n';
  }
  return out;
}

void WriteManifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::kIoError, "cannot write manifest " + path.string());
  }
  out << SerializeManifest(entries);
  if (!out) {
    throw Error(ErrorCode::kIoError, "short write to " + path.string());
  }
}

std::vector<ManifestEntry> BalanceCohort(const std::vector<ManifestEntry>& entries, int target_total,
                                         std::uint64_t seed, bool allow_oversample) {
  CheckTarget(target_total);
  auto by_label = SplitByLabel(entries);
  const auto half = static_cast<std::size_t>(target_total / 2);
  SeededRng rng(seed);

  std::vector<std::size_t> picked;
  picked.reserve(2 * half);
  for (int label : {1, 0}) {
    auto& pool = by_label[static_cast<std::size_t>(label)];
    if (pool.size() >= half) {
      rng.shuffle(std::span<std::size_t>(pool));
      picked.insert(picked.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(half));
      continue;
    }
    if (!allow_oversample) {
      throw Error(ErrorCode::kInsufficientClass,
                  "class " + std::to_string(label) + " has " + std::to_string(pool.size()) +
                      " entries, " + std::to_string(half) + " required");
    }
    picked.insert(picked.end(), pool.begin(), pool.end());
    for (std::size_t k = pool.size(); k < half; ++k) {
      picked.push_back(pool[static_cast<std::size_t>(rng.uniform_index(pool.size()))]);
    }
  }
  return Gather(entries, picked, rng);
}

std::vector<ManifestEntry> BalanceByPatient(const std::vector<ManifestEntry>& entries,
                                            int target_total, std::uint64_t seed) {
  CheckTarget(target_total);
  for (const auto& e : entries) {
    if (!e.patient_id || e.patient_id->empty()) {
      throw Error(ErrorCode::kMissingPatientId, "entry for slide '" + e.slide_id + "' has no patient_id");
    }
  }
  if (entries.empty()) {
    throw Error(ErrorCode::kEmptyInput, "empty manifest");
  }
  const auto by_label = SplitByLabel(entries);

  std::vector<std::string> patients;
  for (const auto& e : entries) {
    patients.push_back(*e.patient_id);
  }
  std::sort(patients.begin(), patients.end());
  patients.erase(std::unique(patients.begin(), patients.end()), patients.end());
  const std::size_t n_patients = patients.size();
  const auto half = static_cast<std::size_t>(target_total / 2);

  SeededRng rng(seed);
  std::vector<std::size_t> picked;
  picked.reserve(2 * half);
  for (int label : {1, 0}) {
    std::map<std::string, std::vector<std::size_t>> pools;
    for (std::size_t i : by_label[static_cast<std::size_t>(label)]) {
      pools[*entries[i].patient_id].push_back(i);
    }

    std::vector<std::size_t> order(n_patients);
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(order));

    std::vector<std::size_t> quota(n_patients, half / n_patients);
    for (std::size_t k = 0; k < half % n_patients; ++k) {
      ++quota[order[k]];
    }

    std::vector<std::size_t> avail(n_patients);
    std::size_t deficit = 0;
    for (std::size_t p = 0; p < n_patients; ++p) {
      auto& pool = pools[patients[p]];
      rng.shuffle(std::span<std::size_t>(pool));
      avail[p] = pool.size();
      if (avail[p] < quota[p]) {
        deficit += quota[p] - avail[p];
        quota[p] = avail[p];
      }
    }

    if (deficit > 0) {
      std::vector<std::size_t> recipients;
      for (std::size_t p : order) {
        if (avail[p] > quota[p]) {
          recipients.push_back(p);
        }
      }
      if (!recipients.empty()) {
        const std::size_t share = deficit / recipients.size();
        const std::size_t extra = deficit % recipients.size();
        std::size_t moved = 0;
        for (std::size_t k = 0; k < recipients.size(); ++k) {
          const std::size_t p = recipients[k];
          const std::size_t add = std::min(share + (k < extra ? 1 : 0), avail[p] - quota[p]);
          quota[p] += add;
          moved += add;
        }
        deficit -= moved;
      }
      if (deficit > 0) {
        throw Error(ErrorCode::kInsufficientClass,
                    "class " + std::to_string(label) + " is " + std::to_string(deficit) +
                        " tiles short after redistribution");
      }
    }

    for (std::size_t p = 0; p < n_patients; ++p) {
      const auto& pool = pools[patients[p]];
      picked.insert(picked.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(quota[p]));
    }
  }
  return Gather(entries, picked, rng);
}

}  // namespace tumorloc
