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

#include <doctest.h>

#include <cstdlib>
#include <fstream>

#include "synthetic.hpp"
#include "tumorloc/config.hpp"
#include "tumorloc/error.hpp"

using namespace tumorloc;

namespace {

ErrorCode CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::kInvalidArgument;
}

}  // namespace

TEST_CASE("empty document yields defaults") {
  const PipelineConfig cfg = ParsePipelineConfig("");
  CHECK(cfg.tile_size == 224);
  CHECK(cfg.batch.batch_size == 375);
  CHECK(cfg.threshold == 0.5);
  CHECK(cfg.sigma == 1.0);
  CHECK(cfg.min_area == 2);
  CHECK(cfg.qc.min_tissue_fraction == 0.70);
  CHECK(cfg.reference_profile.empty());
}

TEST_CASE("values and relative paths") {
  const PipelineConfig cfg = ParsePipelineConfig(R"(
[pipeline]
level = 1
output_dir = "out"
workers = 3
[classifier]
spec = "stub:table.csv"
batch_size = 3
[heatmap]
threshold = 0.6
colormap = "bwr"
)", "/base");
  CHECK(cfg.level == 1);
  CHECK(cfg.output_dir == std::filesystem::path("/base/out"));
  CHECK(cfg.EffectiveWorkers() == 3);
  CHECK(cfg.classifier.kind == ClassifierKind::kStub);
  CHECK(cfg.classifier.path == std::filesystem::path("/base/table.csv"));
  CHECK(cfg.batch.batch_size == 3);
  CHECK(cfg.threshold == 0.6);
}

TEST_CASE("invalid documents are configuration errors") {
  CHECK(CodeOf([] { ParsePipelineConfig("[heatmap]\nthreshold = 1.5\n"); }) == ErrorCode::kConfigError);
  CHECK(CodeOf([] { ParsePipelineConfig("[heatmap]\nthreshhold = 0.5\n"); }) == ErrorCode::kConfigError);
  CHECK(CodeOf([] { ParsePipelineConfig("[extra]\nx = 1\n"); }) == ErrorCode::kConfigError);
  CHECK(CodeOf([] { ParsePipelineConfig("[pipeline]\ntile_size = \"big\"\n"); }) == ErrorCode::kConfigError);
  CHECK(CodeOf([] { ParsePipelineConfig("[classifier]\nbatch_size = 0\n"); }) == ErrorCode::kConfigError);
  CHECK(CodeOf([] { ParsePipelineConfig("[qc]\nmin_tissue_fraction = 2.0\n"); }) == ErrorCode::kConfigError);
  CHECK(CodeOf([] { ParsePipelineConfig("[heatmap]\ncolormap = \"jet\"\n"); }) == ErrorCode::kConfigError);
  CHECK(CodeOf([] { ParsePipelineConfig("this is = = not toml"); }) == ErrorCode::kConfigError);
  CHECK(CodeOf([] { LoadPipelineConfig("/nonexistent/pipeline.toml"); }) == ErrorCode::kConfigError);
}

TEST_CASE("environment variable supplies the config path") {
  ::setenv(kConfigEnvVar, "/tmp/from_env.toml", 1);
  CHECK(ResolveConfigPath(std::nullopt) == std::filesystem::path("/tmp/from_env.toml"));
  CHECK(ResolveConfigPath(std::filesystem::path("/x.toml")) == std::filesystem::path("/x.toml"));
  ::unsetenv(kConfigEnvVar);
  CHECK_FALSE(ResolveConfigPath(std::nullopt).has_value());
}

TEST_CASE("shipped configuration holds the documented defaults") {
  const char* root = std::getenv("TUMORLOC_SOURCE_DIR");
  if (root == nullptr) {
    return;
  }
  const PipelineConfig cfg = LoadPipelineConfig(std::filesystem::path(root) / "config" / "pipeline.toml");
  const PipelineConfig defaults;
  CHECK(cfg.tile_size == defaults.tile_size);
  CHECK(cfg.batch.batch_size == 375);
  CHECK(cfg.threshold == 0.5);
  CHECK(cfg.sigma == defaults.sigma);
  CHECK(cfg.qc.max_blood_fraction == defaults.qc.max_blood_fraction);
  CHECK(cfg.macenko.od_threshold == defaults.macenko.od_threshold);
  CHECK(cfg.classifier.kind == ClassifierKind::kBaseline);
  CHECK_NOTHROW(LoadReferenceProfile(cfg));
  CHECK_NOTHROW(LoadClassifier(cfg.classifier, LoadReferenceProfile(cfg)));
}
