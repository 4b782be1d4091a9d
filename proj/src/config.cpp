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

#include "tumorloc/config.hpp"

#include <toml.hpp>

#include <cstdlib>
#include <exception>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "tumorloc/error.hpp"

namespace tumorloc {

void PipelineConfig::Validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) {
      throw Error(ErrorCode::kConfigError, what);
    }
  };
  require(tile_size >= 1, "pipeline.tile_size must be >= 1");
  require(level >= 0, "pipeline.level must be >= 0");
  require(workers >= 0, "pipeline.workers must be >= 0");
  require(profile_tiles >= 1, "pipeline.profile_tiles must be >= 1");
  require(batch.batch_size >= 1, "classifier.batch_size must be >= 1");
  require(sigma >= 0.0, "heatmap.sigma must be >= 0");
  require(threshold >= 0.0 && threshold <= 1.0, "heatmap.threshold must lie in [0, 1]");
  require(min_area >= 1, "heatmap.min_area must be >= 1");
  require(heatmap_scale >= 1, "heatmap.scale must be >= 1");
  bool known = false;
  for (const auto& name : ColormapNames()) {
    known = known || name == colormap;
  }
  require(known, "heatmap.colormap '" + colormap + "' is not a known colormap");
  try {
    qc.Validate();
    macenko.Validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfigError, e.what());
  }
}

int PipelineConfig::EffectiveWorkers() const noexcept {
  if (workers > 0) {
    return workers;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

namespace {

class TableReader {
 public:
  TableReader(const toml::table& root, std::string name) : name_(std::move(name)) {
    const toml::node* node = root.get(name_);
    if (node == nullptr) {
      return;
    }
    table_ = node->as_table();
    if (table_ == nullptr) {
      throw Error(ErrorCode::kConfigError, "'" + name_ + "' must be a table");
    }
  }

  ~TableReader() noexcept(false) {
    if (table_ == nullptr || std::uncaught_exceptions() > 0) {
      return;
    }
    for (const auto& [key, unused] : *table_) {
      if (seen_.count(std::string(key.str())) == 0) {
        throw Error(ErrorCode::kConfigError, "unknown key '" + name_ + "." + std::string(key.str()) + "'");
      }
    }
  }

  void Read(const char* key, double& out) {
    if (const toml::node* n = Find(key)) {
      if (auto v = n->value<double>()) {
        out = *v;
      } else {
        Fail(key, "a number");
      }
    }
  }

  void Read(const char* key, int& out) {
    if (const toml::node* n = Find(key)) {
      if (!n->is_integer()) {
        Fail(key, "an integer");
      }
      out = static_cast<int>(n->as_integer()->get());
    }
  }

  void Read(const char* key, std::uint64_t& out) {
    if (const toml::node* n = Find(key)) {
      if (!n->is_integer() || n->as_integer()->get() < 0) {
        Fail(key, "a non-negative integer");
      }
      out = static_cast<std::uint64_t>(n->as_integer()->get());
    }
  }

  void Read(const char* key, bool& out) {
    if (const toml::node* n = Find(key)) {
      if (!n->is_boolean()) {
        Fail(key, "a boolean");
      }
      out = n->as_boolean()->get();
    }
  }

  void Read(const char* key, std::string& out) {
    if (const toml::node* n = Find(key)) {
      if (!n->is_string()) {
        Fail(key, "a string");
      }
      out = n->as_string()->get();
    }
  }

  bool Has(const char* key) const { return table_ != nullptr && table_->get(key) != nullptr; }

 private:
  const toml::node* Find(const char* key) {
    seen_.insert(key);
    return table_ == nullptr ? nullptr : table_->get(key);
  }

  [[noreturn]] void Fail(const char* key, const char* expected) const {
    throw Error(ErrorCode::kConfigError, name_ + "." + key + " must be " + expected);
  }

  std::string name_;
  const toml::table* table_ = nullptr;
  std::set<std::string> seen_;
};

std::filesystem::path Resolve(const std::string& value, const std::filesystem::path& base) {
  std::filesystem::path p(value);
  return p.is_relative() && !base.empty() ? base / p : p;
}

GraphOutput ParseGraphOutput(const std::string& text) {
  if (text == "softmax") return GraphOutput::kSoftmax;
  if (text == "probability") return GraphOutput::kProbability;
  if (text == "logit") return GraphOutput::kLogit;
  throw Error(ErrorCode::kConfigError, "classifier.graph_output must be softmax, probability or logit");
}

}  // namespace

PipelineConfig ParsePipelineConfig(const std::string& toml_text, const std::filesystem::path& base_dir) {
  toml::table root;
  try {
    root = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    throw Error(ErrorCode::kConfigError, std::string("TOML: ") + std::string(e.description()));
  }
  const std::set<std::string> sections{"pipeline", "qc", "stain", "classifier", "heatmap"};
  for (const auto& [key, unused] : root) {
    if (sections.count(std::string(key.str())) == 0) {
      throw Error(ErrorCode::kConfigError, "unknown section '" + std::string(key.str()) + "'");
    }
  }

  PipelineConfig cfg;
  {
    TableReader t(root, "pipeline");
    t.Read("tile_size", cfg.tile_size);
    t.Read("level", cfg.level);
    std::string out_dir;
    t.Read("output_dir", out_dir);
    if (!out_dir.empty()) {
      cfg.output_dir = Resolve(out_dir, base_dir);
    }
    t.Read("seed", cfg.seed);
    t.Read("workers", cfg.workers);
    t.Read("normalize", cfg.normalize);
    t.Read("profile_tiles", cfg.profile_tiles);
  }
  {
    TableReader t(root, "qc");
    t.Read("min_tissue_fraction", cfg.qc.min_tissue_fraction);
    t.Read("background_value_min", cfg.qc.background_value_min);
    t.Read("background_saturation_max", cfg.qc.background_saturation_max);
    t.Read("min_blur_score", cfg.qc.min_blur_score);
    t.Read("max_blood_fraction", cfg.qc.max_blood_fraction);
    t.Read("blood_hue_low", cfg.qc.blood_hue_low);
    t.Read("blood_hue_high", cfg.qc.blood_hue_high);
    t.Read("blood_saturation_min", cfg.qc.blood_saturation_min);
    t.Read("blood_value_min", cfg.qc.blood_value_min);
  }
  {
    TableReader t(root, "stain");
    t.Read("od_threshold", cfg.macenko.od_threshold);
    t.Read("angle_percentile", cfg.macenko.angle_percentile);
    t.Read("io", cfg.macenko.io);
    t.Read("min_valid_pixels", cfg.macenko.min_valid_pixels);
    std::string reference;
    t.Read("reference_profile", reference);
    if (!reference.empty()) {
      cfg.reference_profile = Resolve(reference, base_dir);
    }
  }
  {
    TableReader t(root, "classifier");
    std::string spec;
    t.Read("spec", spec);
    if (!spec.empty()) {
      cfg.classifier = ClassifierSpec::Parse(spec);
      cfg.classifier.path = Resolve(cfg.classifier.path.string(), base_dir);
    }
    t.Read("batch_size", cfg.batch.batch_size);
    std::string graph_output;
    t.Read("graph_output", graph_output);
    if (!graph_output.empty()) {
      cfg.classifier.graph_output = ParseGraphOutput(graph_output);
    }
    t.Read("imagenet_normalize", cfg.classifier.imagenet_normalize);
  }
  {
    TableReader t(root, "heatmap");
    t.Read("sigma", cfg.sigma);
    t.Read("threshold", cfg.threshold);
    t.Read("min_area", cfg.min_area);
    t.Read("colormap", cfg.colormap);
    t.Read("scale", cfg.heatmap_scale);
  }
  cfg.Validate();
  return cfg;
}

PipelineConfig LoadPipelineConfig(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kConfigError, "cannot open config " + path.string());
  }
  std::ostringstream text;
  text << in.rdbuf();
  return ParsePipelineConfig(text.str(), path.parent_path());
}

std::optional<std::filesystem::path> ResolveConfigPath(
    const std::optional<std::filesystem::path>& explicit_path) {
  if (explicit_path && !explicit_path->empty()) {
    return explicit_path;
  }
  if (const char* env = std::getenv(kConfigEnvVar); env != nullptr && *env != '\0') {
    return std::filesystem::path(env);
  }
  return std::nullopt;
}

StainProfile LoadReferenceProfile(const PipelineConfig& cfg) {
  if (cfg.reference_profile.empty()) {
    return DefaultReferenceProfile();
  }
  try {
    return LoadStainProfile(cfg.reference_profile);
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfigError, std::string("reference profile: ") + e.what());
  }
}

}  // namespace tumorloc
