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

/// @file balancer.hpp
/// @brief 50:50 tumor/non-tumor tile manifests, optionally balanced per patient.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace tumorloc {

inline constexpr int kDefaultBalanceTarget = 20000;

struct ManifestEntry {
  std::optional<std::string> path;
  std::string slide_id;
  int col = -1;
  int row = -1;
  int label = 0;
  std::string tumor_type;
  std::optional<std::string> patient_id;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

/// One JSON object per line. Keys: path (optional), slide_id, col, row, label,
/// tumor_type, patient_id (optional).
std::vector<ManifestEntry> ParseManifest(const std::string& ndjson);
std::vector<ManifestEntry> ReadManifest(const std::filesystem::path& path);
std::string SerializeManifest(const std::vector<ManifestEntry>& entries);
void WriteManifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries);

/// Exactly target_total / 2 entries per class, drawn without replacement.
/// A short class is topped up with replacement draws when allow_oversample,
/// otherwise InsufficientClass. OneClassOnly if a label is absent.
std::vector<ManifestEntry> BalanceCohort(const std::vector<ManifestEntry>& entries, int target_total,
                                         std::uint64_t seed, bool allow_oversample = false);

/// Per class, the target_total / 2 quota is split evenly across all patients;
/// the remainder goes to patients picked by a seeded shuffle. Patients with
/// too few tiles give all they have and the shortfall is spread over the
/// patients with spare tiles in a single round. A shortfall that survives that
/// round raises InsufficientClass. MissingPatientId if any entry lacks one.
std::vector<ManifestEntry> BalanceByPatient(const std::vector<ManifestEntry>& entries,
                                            int target_total, std::uint64_t seed);

}  // namespace tumorloc
