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

#include "tumorloc/orchestrator.hpp"

#include <fmt/format.h>
#include <json.hpp>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <functional>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "tumorloc/csv.hpp"
#include "tumorloc/error.hpp"
#include "tumorloc/geojson.hpp"
#include "tumorloc/image.hpp"
#include "tumorloc/stain_norm.hpp"
#include "tumorloc/tile_qc.hpp"

namespace tumorloc {

namespace fs = std::filesystem;

std::string ToString(SlideStatus status) {
  switch (status) {
    case SlideStatus::kPending:
      return "pending";
    case SlideStatus::kDone:
      return "done";
    case SlideStatus::kFailed:
      return "failed";
  }
  return "unknown";
}

std::vector<ShardManifest> ShardSlides(std::vector<std::string> slides, int n_shards) {
  if (n_shards < 1) {
    throw Error(ErrorCode::kInvalidArgument, "n_shards must be >= 1");
  }
  std::sort(slides.begin(), slides.end());
  std::vector<ShardManifest> shards(static_cast<std::size_t>(n_shards));
  for (int k = 0; k < n_shards; ++k) {
    shards[static_cast<std::size_t>(k)].shard_id = k;
  }
  for (std::size_t i = 0; i < slides.size(); ++i) {
    auto& shard = shards[i % static_cast<std::size_t>(n_shards)];
    shard.slides.push_back(slides[i]);
    shard.status.push_back(SlideStatus::kPending);
  }
  return shards;
}

namespace {

bool IsSlideFile(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".tif" || ext == ".tiff";
}

}  // namespace

std::vector<std::string> ReadSlideList(const fs::path& path) {
  std::vector<std::string> out;
  if (fs::is_directory(path)) {
    for (const auto& entry : fs::directory_iterator(path)) {
      if (entry.is_regular_file() && IsSlideFile(entry.path())) {
        out.push_back(entry.path().string());
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kIoError, "cannot open slide list " + path.string());
  }
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') {
      continue;
    }
    const auto last = line.find_last_not_of(" \t\r");
    fs::path p(line.substr(first, last - first + 1));
    if (p.is_relative()) {
      p = path.parent_path() / p;
    }
    out.push_back(p.string());
  }
  return out;
}

namespace {

// Runs fn(i) for i in [0, n) on up to `workers` threads. If several calls
// throw, the exception of the smallest index is rethrown.
void ParallelFor(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  const std::size_t n_threads = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(workers, 1)));
  if (n_threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      fn(i);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::size_t error_index = n;
  std::exception_ptr error;
  auto body = [&] {
    for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (i < error_index) {
          error_index = i;
          error = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> threads;
  threads.reserve(n_threads);
  for (std::size_t t = 0; t < n_threads; ++t) {
    threads.emplace_back(body);
  }
  for (auto& t : threads) {
    t.join();
  }
  if (error) {
    std::rethrow_exception(error);
  }
}

template <typename Fn>
auto Stage(const char* name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.code(), std::string(name) + ": " + e.what());
  }
}

}  // namespace

SlideAnalysis AnalyzeSlide(const SlideSource& slide, const PipelineConfig& cfg,
                           const TileClassifier& model, const StainProfile& reference) {
  SlideAnalysis out;
  out.slide_id = slide.slide_id();
  const int workers = cfg.EffectiveWorkers();

  const auto coords = Stage("tile", [&] {
    out.level = slide.level(cfg.level);
    return TileGrid(slide, cfg.level, cfg.tile_size);
  });
  const GridShape shape = TileGridShape(slide, cfg.level, cfg.tile_size);

  out.qc.resize(coords.size());
  Stage("qc", [&] {
    ParallelFor(coords.size(), workers, [&](std::size_t i) {
      out.qc[i] = {coords[i], QcFilter(ExtractTile(slide, coords[i]), cfg.qc)};
    });
  });

  std::vector<std::size_t> passed;
  for (std::size_t i = 0; i < coords.size(); ++i) {
    if (out.qc[i].report.pass) {
      passed.push_back(i);
    }
  }

  StainProfile source;
  if (cfg.normalize && !passed.empty()) {
    source = Stage("normalize", [&] {
      const std::size_t k = std::min(passed.size(), static_cast<std::size_t>(cfg.profile_tiles));
      std::vector<RgbImage> sample(k);
      ParallelFor(k, workers, [&](std::size_t j) {
        sample[j] = ExtractTile(slide, coords[passed[j * passed.size() / k]]).pixels;
      });
      return EstimateStainProfile(std::span<const RgbImage>(sample), cfg.macenko);
    });
  }

  out.scores.resize(passed.size());
  const auto batch = static_cast<std::size_t>(cfg.batch.batch_size);
  const std::size_t n_batches = (passed.size() + batch - 1) / batch;
  Stage("score", [&] {
    ParallelFor(n_batches, workers, [&](std::size_t b) {
      const std::size_t begin = b * batch;
      const std::size_t end = std::min(passed.size(), begin + batch);
      std::vector<TileRecord> tiles;
      tiles.reserve(end - begin);
      for (std::size_t k = begin; k < end; ++k) {
        TileRecord tile = ExtractTile(slide, coords[passed[k]]);
        if (cfg.normalize) {
          tile = NormalizeTile(tile, source, reference, cfg.macenko.io);
        }
        tiles.push_back(std::move(tile));
      }
      auto scores = ScoreBatch(tiles, model, cfg.batch);
      std::move(scores.begin(), scores.end(), out.scores.begin() + static_cast<std::ptrdiff_t>(begin));
    });
  });

  out.origins.reserve(out.scores.size());
  for (const auto& s : out.scores) {
    out.origins.push_back(Level0Origin(slide, s.coord));
  }

  Stage("heatmap", [&] {
    out.raw = AssembleGrid(out.scores, out.qc, shape.cols, shape.rows, cfg.tile_size,
                           out.level.downsample);
    out.smoothed = GaussianSmooth(out.raw, cfg.sigma);
    out.mask = ThresholdMask(out.smoothed, cfg.threshold);
    ContourOptions options;
    options.min_area_cells = cfg.min_area;
    out.annotations = RescaleToLevel0(ExtractContours(out.mask, options, &out.raw), cfg.tile_size,
                                      out.level.downsample);
  });
  return out;
}

std::string ScoresCsv(const SlideAnalysis& analysis) {
  CsvTable csv;
  csv.header = {"slide_id", "col", "row", "x0", "y0", "p_pos"};
  for (std::size_t i = 0; i < analysis.scores.size(); ++i) {
    const auto& s = analysis.scores[i];
    csv.rows.push_back({s.slide_id, std::to_string(s.coord.col), std::to_string(s.coord.row),
                        std::to_string(analysis.origins[i].x), std::to_string(analysis.origins[i].y),
                        FormatDouble(s.p_pos)});
  }
  return csv.Serialize();
}

std::string QcCsv(const SlideAnalysis& analysis) {
  CsvTable csv;
  csv.header = {"slide_id",       "col",  "row",           "tissue_fraction", "blur_score",
                "blood_fraction", "pass", "reject_reasons"};
  for (const auto& q : analysis.qc) {
    csv.rows.push_back({analysis.slide_id, std::to_string(q.coord.col), std::to_string(q.coord.row),
                        FormatDouble(q.report.tissue_fraction), FormatDouble(q.report.blur_score),
                        FormatDouble(q.report.blood_fraction), q.report.pass ? "true" : "false",
                        JoinReasons(q.report.reject_reasons)});
  }
  return csv.Serialize();
}

namespace {

constexpr const char* kTempTag = ".tmp.";

fs::path TempPathFor(const fs::path& path) {
  static std::atomic<unsigned long long> counter{0};
  return path.parent_path() /
         fmt::format(".{}{}{}.{}", path.filename().string(), kTempTag, ::getpid(), counter.fetch_add(1));
}

void WriteAtomicWith(const fs::path& path, const std::function<void(const fs::path&)>& writer) {
  const fs::path tmp = TempPathFor(path);
  try {
    writer(tmp);
    fs::rename(tmp, path);
  } catch (...) {
    std::error_code ignored;
    fs::remove(tmp, ignored);
    throw;
  }
}

void RemoveStaleTemps(const fs::path& dir) {
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    const std::string name = entry.path().filename().string();
    if (!name.empty() && name.front() == '.' && name.find(kTempTag) != std::string::npos) {
      fs::remove(entry.path(), ec);
    }
  }
}

}  // namespace

void WriteFileAtomic(const fs::path& path, const std::string& contents) {
  WriteAtomicWith(path, [&](const fs::path& tmp) {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << contents;
    out.close();
    if (!out) {
      throw Error(ErrorCode::kIoError, "cannot write " + tmp.string());
    }
  });
}

fs::path SlideOutputDir(const PipelineConfig& cfg, const std::string& slide_id) {
  return cfg.output_dir / slide_id;
}

SlideResult RunSlide(const fs::path& slide_path, const PipelineConfig& cfg, const TileClassifier& model,
                     const StainProfile& reference, bool force) {
  SlideResult result;
  result.path = slide_path.string();
  result.slide_id = slide_path.stem().string();
  const fs::path dir = SlideOutputDir(cfg, result.slide_id);
  const fs::path done_marker = dir / ".done";
  const fs::path error_log = dir / "errors.log";

  try {
    fs::create_directories(dir);
    if (fs::exists(done_marker) && !force) {
      result.status = SlideStatus::kDone;
      result.skipped = true;
      return result;
    }
    RemoveStaleTemps(dir);
    fs::remove(done_marker);
    fs::remove(error_log);

    const SlideSource slide = Stage("open", [&] { return SlideSource::Open(slide_path); });
    const SlideAnalysis analysis = AnalyzeSlide(slide, cfg, model, reference);
    const std::string scores = ScoresCsv(analysis);
    const std::string qc = QcCsv(analysis);
    const std::string geojson = Stage("geojson", [&] {
      return ToGeoJson(analysis.annotations, analysis.slide_id);
    });
    const RgbImage heatmap = RenderHeatmap(analysis.smoothed, cfg.colormap, cfg.heatmap_scale);
    const GrayImage mask = MaskToImage(analysis.mask);

    WriteFileAtomic(dir / "scores.csv", scores);
    WriteFileAtomic(dir / "qc.csv", qc);
    WriteAtomicWith(dir / "heatmap.png", [&](const fs::path& tmp) { WritePng(tmp, heatmap); });
    WriteAtomicWith(dir / "mask.png", [&](const fs::path& tmp) { WritePng(tmp, mask); });
    WriteFileAtomic(dir / "annotations.geojson", geojson);
    WriteFileAtomic(done_marker, "");

    result.status = SlideStatus::kDone;
    result.n_tiles = analysis.qc.size();
    result.n_passed = analysis.scores.size();
    result.n_annotations = analysis.annotations.size();
  } catch (const Error& e) {
    result.status = SlideStatus::kFailed;
    result.error = std::string(ToString(e.code())) + ": " + e.what();
  } catch (const std::exception& e) {
    result.status = SlideStatus::kFailed;
    result.error = std::string("internal: ") + e.what();
  }
  if (result.status == SlideStatus::kFailed) {
    try {
      WriteFileAtomic(error_log, result.error + "\n");
    } catch (const std::exception&) {
      // The summary still carries the error.
    }
  }
  return result;
}

std::size_t RunSummary::failures() const noexcept {
  return static_cast<std::size_t>(std::count_if(slides.begin(), slides.end(), [](const SlideResult& r) {
    return r.status == SlideStatus::kFailed;
  }));
}

std::string RunSummary::ToJson() const {
  nlohmann::ordered_json doc;
  doc["shard_id"] = shard_id;
  doc["n_shards"] = n_shards;
  doc["failures"] = failures();
  doc["slides"] = nlohmann::ordered_json::array();
  for (const auto& r : slides) {
    nlohmann::ordered_json s;
    s["slide_id"] = r.slide_id;
    s["path"] = r.path;
    s["status"] = ToString(r.status);
    s["skipped"] = r.skipped;
    s["n_tiles"] = r.n_tiles;
    s["n_passed"] = r.n_passed;
    s["n_annotations"] = r.n_annotations;
    if (!r.error.empty()) {
      s["error"] = r.error;
    }
    doc["slides"].push_back(std::move(s));
  }
  return doc.dump(2) + "\n";
}

int RunAll(const std::vector<std::string>& slides, const PipelineConfig& cfg, int shard_id, int n_shards,
           bool force, RunSummary* summary) {
  RunSummary local;
  RunSummary& report = summary != nullptr ? *summary : local;
  report = {};
  report.shard_id = shard_id;
  report.n_shards = n_shards;

  std::shared_ptr<const TileClassifier> model;
  StainProfile reference;
  std::vector<ShardManifest> shards;
  try {
    cfg.Validate();
    if (n_shards < 1 || shard_id < 0 || shard_id >= n_shards) {
      throw Error(ErrorCode::kConfigError,
                  fmt::format("shard {} of {} is not a valid shard address", shard_id, n_shards));
    }
    std::set<std::string> ids;
    for (const auto& s : slides) {
      if (!ids.insert(fs::path(s).stem().string()).second) {
        throw Error(ErrorCode::kConfigError, "two slides share the id '" + fs::path(s).stem().string() + "'");
      }
    }
    reference = LoadReferenceProfile(cfg);
    try {
      model = LoadClassifier(cfg.classifier, reference);
    } catch (const Error& e) {
      throw Error(ErrorCode::kConfigError, std::string(ToString(e.code())) + ": " + e.what());
    }
    shards = ShardSlides(slides, n_shards);
    fs::create_directories(cfg.output_dir);
  } catch (const std::exception& e) {
    fmt::print(stderr, "configuration error: {}\n", e.what());
    return kExitConfigError;
  }

  for (const auto& path : shards[static_cast<std::size_t>(shard_id)].slides) {
    report.slides.push_back(RunSlide(path, cfg, *model, reference, force));
  }

  try {
    WriteFileAtomic(cfg.output_dir / fmt::format("summary_shard{}.json", shard_id), report.ToJson());
  } catch (const std::exception& e) {
    fmt::print(stderr, "cannot write summary: {}\n", e.what());
    return kExitSlideFailures;
  }
  return report.failures() == 0 ? kExitOk : kExitSlideFailures;
}

}  // namespace tumorloc
