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

// Command-line front end. Every subcommand maps onto one library stage;
// `run` chains them per slide.

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "tumorloc/balancer.hpp"
#include "tumorloc/classifier.hpp"
#include "tumorloc/config.hpp"
#include "tumorloc/contours.hpp"
#include "tumorloc/csv.hpp"
#include "tumorloc/error.hpp"
#include "tumorloc/geojson.hpp"
#include "tumorloc/heatmap.hpp"
#include "tumorloc/image.hpp"
#include "tumorloc/metrics.hpp"
#include "tumorloc/orchestrator.hpp"
#include "tumorloc/slide_io.hpp"
#include "tumorloc/stain_norm.hpp"
#include "tumorloc/tile_qc.hpp"

namespace fs = std::filesystem;
using namespace tumorloc;

namespace {

constexpr const char* kTileManifestName = "tiles.ndjson";

struct TileFile {
  fs::path path;
  std::string slide_id;
  int col = 0;
  int row = 0;
  long long x0 = 0;
  long long y0 = 0;
};

std::string ReadText(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  }
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

std::vector<TileFile> ReadTileManifest(const fs::path& manifest) {
  std::vector<TileFile> out;
  std::istringstream in(ReadText(manifest));
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
      TileFile t;
      t.path = j.at("path").get<std::string>();
      if (t.path.is_relative()) {
        t.path = manifest.parent_path() / t.path;
      }
      t.slide_id = j.at("slide_id").get<std::string>();
      t.col = j.at("col").get<int>();
      t.row = j.at("row").get<int>();
      t.x0 = j.value("x0", 0LL);
      t.y0 = j.value("y0", 0LL);
      out.push_back(std::move(t));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kParseError, manifest.string() + ": " + e.what());
    }
  }
  return out;
}

// A directory with tiles.ndjson, a bare directory of {slide}_c{col}_r{row}.png
// files (level 0 assumed), or a manifest file.
std::vector<TileFile> ListTiles(const fs::path& input) {
  if (!fs::is_directory(input)) {
    return ReadTileManifest(input);
  }
  if (fs::exists(input / kTileManifestName)) {
    return ReadTileManifest(input / kTileManifestName);
  }
  static const std::regex pattern(R"((.+)_c(\d+)_r(\d+)\.png)");
  std::vector<TileFile> out;
  for (const auto& entry : fs::directory_iterator(input)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (!entry.is_regular_file() || !std::regex_match(name, m, pattern)) {
      continue;
    }
    TileFile t;
    t.path = entry.path();
    t.slide_id = m[1];
    t.col = std::stoi(m[2]);
    t.row = std::stoi(m[3]);
    out.push_back(std::move(t));
  }
  std::sort(out.begin(), out.end(), [](const TileFile& a, const TileFile& b) {
    return std::tie(a.slide_id, a.row, a.col) < std::tie(b.slide_id, b.row, b.col);
  });
  for (auto& t : out) {
    const RgbImage img = ReadPng(t.path);
    t.x0 = static_cast<long long>(t.col) * img.width();
    t.y0 = static_cast<long long>(t.row) * img.height();
  }
  return out;
}

TileRecord LoadTile(const TileFile& t) {
  TileRecord rec;
  rec.pixels = ReadPng(t.path);
  rec.slide_id = t.slide_id;
  rec.coord.col = t.col;
  rec.coord.row = t.row;
  rec.coord.tile_size = rec.pixels.width();
  rec.coord.x = t.col * rec.pixels.width();
  rec.coord.y = t.row * rec.pixels.height();
  return rec;
}

PipelineConfig ConfigFrom(const std::optional<fs::path>& explicit_path) {
  const auto path = ResolveConfigPath(explicit_path);
  return path ? LoadPipelineConfig(*path) : PipelineConfig{};
}

// ---------------------------------------------------------------------------

struct TileArgs {
  fs::path slide;
  int level = 0;
  int tile_size = kDefaultTileSize;
  fs::path out;
  std::optional<int> label;
  std::string tumor_type;
  std::string patient_id;
};

int RunTile(const TileArgs& a) {
  const SlideSource slide = SlideSource::Open(a.slide);
  fs::create_directories(a.out);
  std::string manifest;
  const auto coords = TileGrid(slide, a.level, a.tile_size);
  for (const auto& c : coords) {
    const TileRecord tile = ExtractTile(slide, c);
    const std::string name = fmt::format("{}_c{}_r{}.png", slide.slide_id(), c.col, c.row);
    WritePng(a.out / name, tile.pixels);
    const PixelPoint origin = Level0Origin(slide, c);
    nlohmann::ordered_json j;
    j["path"] = name;
    j["slide_id"] = slide.slide_id();
    j["col"] = c.col;
    j["row"] = c.row;
    j["level"] = c.level;
    j["tile_size"] = c.tile_size;
    j["x0"] = origin.x;
    j["y0"] = origin.y;
    if (a.label) {
      j["label"] = *a.label;
    }
    if (!a.tumor_type.empty()) {
      j["tumor_type"] = a.tumor_type;
    }
    if (!a.patient_id.empty()) {
      j["patient_id"] = a.patient_id;
    }
    manifest += j.dump() + "\n";
  }
  WriteFileAtomic(a.out / kTileManifestName, manifest);
  fmt::print("{}: {} tiles written to {}\n", slide.slide_id(), coords.size(), a.out.string());
  return 0;
}

struct QcArgs {
  fs::path tiles;
  std::optional<fs::path> config;
  fs::path report;
};

int RunQc(const QcArgs& a) {
  const PipelineConfig cfg = ConfigFrom(a.config);
  CsvTable csv;
  csv.header = {"slide_id",       "col",  "row",           "tissue_fraction", "blur_score",
                "blood_fraction", "pass", "reject_reasons"};
  std::size_t passed = 0;
  const auto tiles = ListTiles(a.tiles);
  for (const auto& t : tiles) {
    const QcReport r = QcFilter(ReadPng(t.path), cfg.qc);
    passed += r.pass ? 1 : 0;
    csv.rows.push_back({t.slide_id, std::to_string(t.col), std::to_string(t.row),
                        FormatDouble(r.tissue_fraction), FormatDouble(r.blur_score),
                        FormatDouble(r.blood_fraction), r.pass ? "true" : "false",
                        JoinReasons(r.reject_reasons)});
  }
  WriteFileAtomic(a.report, csv.Serialize());
  fmt::print("{} of {} tiles passed QC\n", passed, tiles.size());
  return 0;
}

struct NormalizeArgs {
  fs::path tiles;
  fs::path reference;
  fs::path out;
  fs::path estimate_reference;
  std::optional<fs::path> config;
};

int RunNormalize(const NormalizeArgs& a) {
  const PipelineConfig cfg = ConfigFrom(a.config);
  StainProfile reference;
  if (!a.estimate_reference.empty()) {
    const SlideSource slide = SlideSource::Open(a.estimate_reference);
    std::vector<RgbImage> passing;
    for (const auto& c : TileGrid(slide, cfg.level, cfg.tile_size)) {
      TileRecord tile = ExtractTile(slide, c);
      if (QcFilter(tile, cfg.qc).pass) {
        passing.push_back(std::move(tile.pixels));
      }
    }
    if (passing.empty()) {
      throw Error(ErrorCode::kInsufficientTissue, "no QC-passed tiles on " + a.estimate_reference.string());
    }
    reference = EstimateStainProfile(std::span<const RgbImage>(passing), cfg.macenko);
    SaveStainProfile(a.reference, reference);
    fmt::print("reference profile estimated from {} tiles written to {}\n", passing.size(),
               a.reference.string());
  } else if (!a.reference.empty()) {
    reference = LoadStainProfile(a.reference);
  } else {
    reference = LoadReferenceProfile(cfg);
  }
  if (a.tiles.empty()) {
    return 0;
  }
  if (a.out.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "--out is required with --tiles");
  }
  const auto tiles = ListTiles(a.tiles);
  if (tiles.empty()) {
    throw Error(ErrorCode::kNoTiles, "no tiles under " + a.tiles.string());
  }
  std::map<std::string, std::vector<const TileFile*>> by_slide;
  for (const auto& t : tiles) {
    by_slide[t.slide_id].push_back(&t);
  }
  fs::create_directories(a.out);
  for (const auto& [slide_id, group] : by_slide) {
    std::vector<RgbImage> pixels;
    for (const TileFile* t : group) {
      pixels.push_back(ReadPng(t->path));
    }
    const StainProfile source = EstimateStainProfile(std::span<const RgbImage>(pixels), cfg.macenko);
    for (std::size_t i = 0; i < group.size(); ++i) {
      WritePng(a.out / group[i]->path.filename(), NormalizeTile(pixels[i], source, reference, cfg.macenko.io));
    }
    fmt::print("{}: {} tiles normalized\n", slide_id, group.size());
  }
  if (fs::exists(a.tiles / kTileManifestName) && fs::is_directory(a.tiles)) {
    fs::copy_file(a.tiles / kTileManifestName, a.out / kTileManifestName,
                  fs::copy_options::overwrite_existing);
  }
  return 0;
}

struct InferArgs {
  fs::path tiles;
  std::string classifier;
  std::optional<fs::path> config;
  fs::path reference;
  int batch_size = 0;
  fs::path out;
};

int RunInfer(const InferArgs& a) {
  PipelineConfig cfg = ConfigFrom(a.config);
  if (!a.classifier.empty()) {
    const auto options = cfg.classifier;
    cfg.classifier = ClassifierSpec::Parse(a.classifier);
    cfg.classifier.graph_output = options.graph_output;
    cfg.classifier.imagenet_normalize = options.imagenet_normalize;
  }
  if (a.batch_size > 0) {
    cfg.batch.batch_size = a.batch_size;
  }
  const StainProfile reference = a.reference.empty() ? LoadReferenceProfile(cfg) : LoadStainProfile(a.reference);
  const auto model = LoadClassifier(cfg.classifier, reference);
  const auto files = ListTiles(a.tiles);
  std::vector<TileRecord> tiles;
  tiles.reserve(files.size());
  for (const auto& f : files) {
    tiles.push_back(LoadTile(f));
  }
  CsvTable csv;
  csv.header = {"slide_id", "col", "row", "x0", "y0", "p_pos"};
  if (!tiles.empty()) {
    const auto scores = ScoreBatch(tiles, *model, cfg.batch);
    for (std::size_t i = 0; i < scores.size(); ++i) {
      csv.rows.push_back({scores[i].slide_id, std::to_string(scores[i].coord.col),
                          std::to_string(scores[i].coord.row), std::to_string(files[i].x0),
                          std::to_string(files[i].y0), FormatDouble(scores[i].p_pos)});
    }
  }
  WriteFileAtomic(a.out, csv.Serialize());
  fmt::print("{} tiles scored with the {} classifier\n", tiles.size(), model->name());
  return 0;
}

struct HeatmapArgs {
  fs::path scores;
  fs::path qc;
  double sigma = kDefaultSigma;
  double threshold = kDefaultThreshold;
  fs::path geojson;
  fs::path png;
  fs::path mask;
  int tile_size = kDefaultTileSize;
  double downsample = 1.0;
  int min_area = 2;
  std::string colormap = "hot";
  int scale = 8;
};

int RunHeatmap(const HeatmapArgs& a) {
  const CsvTable qc_csv = CsvTable::Read(a.qc);
  const CsvTable score_csv = CsvTable::Read(a.scores);
  std::vector<TileQc> qc;
  std::string slide_id;
  int cols = 0;
  int rows = 0;
  {
    const auto id = qc_csv.Column("slide_id");
    const auto col = qc_csv.Column("col");
    const auto row = qc_csv.Column("row");
    const auto pass = qc_csv.Column("pass");
    for (const auto& r : qc_csv.rows) {
      TileQc q;
      q.coord.col = static_cast<int>(ParseInt(r[col]));
      q.coord.row = static_cast<int>(ParseInt(r[row]));
      q.coord.tile_size = a.tile_size;
      q.report.pass = r[pass] == "true" || r[pass] == "1";
      if (slide_id.empty()) {
        slide_id = r[id];
      } else if (slide_id != r[id]) {
        throw Error(ErrorCode::kInvalidArgument, "QC report mixes several slides");
      }
      cols = std::max(cols, q.coord.col + 1);
      rows = std::max(rows, q.coord.row + 1);
      qc.push_back(q);
    }
  }
  std::vector<TileScore> scores;
  {
    const auto col = score_csv.Column("col");
    const auto row = score_csv.Column("row");
    const auto p = score_csv.Column("p_pos");
    for (const auto& r : score_csv.rows) {
      TileScore s;
      s.coord.col = static_cast<int>(ParseInt(r[col]));
      s.coord.row = static_cast<int>(ParseInt(r[row]));
      s.coord.tile_size = a.tile_size;
      s.p_pos = ParseDouble(r[p]);
      s.slide_id = slide_id;
      scores.push_back(s);
    }
  }
  const ProbabilityGrid raw = AssembleGrid(scores, qc, cols, rows, a.tile_size, a.downsample);
  const ProbabilityGrid smoothed = GaussianSmooth(raw, a.sigma);
  const BinaryMask mask = ThresholdMask(smoothed, a.threshold);
  ContourOptions options;
  options.min_area_cells = a.min_area;
  const auto annotations = RescaleToLevel0(ExtractContours(mask, options, &raw), a.tile_size, a.downsample);
  if (!a.png.empty()) {
    WritePng(a.png, RenderHeatmap(smoothed, a.colormap, a.scale));
  }
  if (!a.mask.empty()) {
    WritePng(a.mask, MaskToImage(mask));
  }
  if (!a.geojson.empty()) {
    WriteFileAtomic(a.geojson, ToGeoJson(annotations, slide_id));
  }
  fmt::print("{}: {}x{} grid, {} tumor cells, {} annotations\n", slide_id, cols, rows, mask.count(),
             annotations.size());
  return 0;
}

struct GeojsonArgs {
  fs::path mask;
  fs::path validate;
  std::string slide_id;
  int tile_size = kDefaultTileSize;
  double downsample = 1.0;
  int min_area = 2;
  fs::path out;
};

int RunGeojson(const GeojsonArgs& a) {
  if (!a.validate.empty()) {
    const std::string text = ReadText(a.validate);
    const std::string problem = ValidateGeoJson(text);
    if (!problem.empty()) {
      fmt::print("{}: invalid: {}\n", a.validate.string(), problem);
      return 1;
    }
    std::string id;
    const auto annotations = FromGeoJson(text, &id);
    fmt::print("{}: valid, {} annotations\n", a.validate.string(), annotations.size());
    return 0;
  }
  if (a.mask.empty() || a.out.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "geojson needs --validate or --mask with --out");
  }
  const GrayImage gray = ReadGrayPng(a.mask);
  ContourOptions options;
  options.min_area_cells = a.min_area;
  const auto annotations =
      RescaleToLevel0(ExtractContours(MaskFromImage(gray), options), a.tile_size, a.downsample);
  const std::string id = a.slide_id.empty() ? a.mask.stem().string() : a.slide_id;
  WriteFileAtomic(a.out, ToGeoJson(annotations, id));
  fmt::print("{} annotations written to {}\n", annotations.size(), a.out.string());
  return 0;
}

struct EvalArgs {
  fs::path predictions;
  double threshold = kDefaultThreshold;
  fs::path out;
};

int RunEval(const EvalArgs& a) {
  const auto scores = ReadPredictionsCsv(a.predictions);
  const MetricsReport report = StratifiedReport(scores, a.threshold);
  if (!a.out.empty()) {
    WriteFileAtomic(a.out, ReportToJson(report));
  }
  fmt::print("{}", ReportToTable(report));
  return 0;
}

struct BalanceArgs {
  fs::path manifest;
  int target = kDefaultBalanceTarget;
  std::uint64_t seed = 0;
  bool by_patient = false;
  bool allow_oversample = false;
  fs::path out;
};

int RunBalance(const BalanceArgs& a) {
  const auto entries = ReadManifest(a.manifest);
  std::map<std::string, std::vector<ManifestEntry>> by_type;
  for (const auto& e : entries) {
    by_type[e.tumor_type].push_back(e);
  }
  std::vector<ManifestEntry> out;
  for (const auto& [type, group] : by_type) {
    auto balanced = a.by_patient ? BalanceByPatient(group, a.target, a.seed)
                                 : BalanceCohort(group, a.target, a.seed, a.allow_oversample);
    fmt::print("{}: {} -> {} entries\n", type.empty() ? "(untyped)" : type, group.size(), balanced.size());
    out.insert(out.end(), balanced.begin(), balanced.end());
  }
  WriteFileAtomic(a.out, SerializeManifest(out));
  return 0;
}

struct ShardArgs {
  fs::path slides;
  int n_shards = 1;
  fs::path out;
};

int RunShard(const ShardArgs& a) {
  const auto shards = ShardSlides(ReadSlideList(a.slides), a.n_shards);
  nlohmann::ordered_json doc = nlohmann::ordered_json::array();
  for (const auto& s : shards) {
    nlohmann::ordered_json j;
    j["shard_id"] = s.shard_id;
    j["slides"] = s.slides;
    nlohmann::ordered_json status = nlohmann::ordered_json::array();
    for (auto st : s.status) {
      status.push_back(ToString(st));
    }
    j["status"] = std::move(status);
    doc.push_back(std::move(j));
  }
  const std::string text = doc.dump(2) + "\n";
  if (a.out.empty()) {
    fmt::print("{}", text);
  } else {
    WriteFileAtomic(a.out, text);
  }
  return 0;
}

struct RunArgs {
  fs::path slides;
  std::optional<fs::path> config;
  int shard_id = 0;
  int n_shards = 1;
  bool force = false;
  fs::path out;
  int workers = -1;
};

int RunRun(const RunArgs& a) {
  PipelineConfig cfg;
  std::vector<std::string> slides;
  try {
    cfg = ConfigFrom(a.config);
    if (!a.out.empty()) {
      cfg.output_dir = a.out;
    }
    if (a.workers >= 0) {
      cfg.workers = a.workers;
    }
    slides = ReadSlideList(a.slides);
  } catch (const std::exception& e) {
    fmt::print(stderr, "configuration error: {}\n", e.what());
    return kExitConfigError;
  }
  RunSummary summary;
  const int code = RunAll(slides, cfg, a.shard_id, a.n_shards, a.force, &summary);
  for (const auto& r : summary.slides) {
    if (r.status == SlideStatus::kFailed) {
      fmt::print("{}: failed: {}\n", r.slide_id, r.error);
    } else if (r.skipped) {
      fmt::print("{}: already complete\n", r.slide_id);
    } else {
      fmt::print("{}: {} tiles, {} passed QC, {} annotations\n", r.slide_id, r.n_tiles, r.n_passed,
                 r.n_annotations);
    }
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tumorloc: tumor localization on whole-slide images"};
  app.require_subcommand(1);
  int code = 0;

  TileArgs tile;
  auto* tile_cmd = app.add_subcommand("tile", "Cut a slide level into non-overlapping tiles");
  tile_cmd->add_option("--slide", tile.slide, "PNG or RGB TIFF slide")->required()->check(CLI::ExistingFile);
  tile_cmd->add_option("--level", tile.level, "Pyramid level")->capture_default_str();
  tile_cmd->add_option("--tile-size", tile.tile_size, "Tile edge in pixels")->capture_default_str();
  tile_cmd->add_option("--out", tile.out, "Output directory")->required();
  tile_cmd->add_option("--label", tile.label, "Label recorded in the manifest (0 or 1)");
  tile_cmd->add_option("--tumor-type", tile.tumor_type, "Tumor type recorded in the manifest");
  tile_cmd->add_option("--patient-id", tile.patient_id, "Patient id recorded in the manifest");
  tile_cmd->callback([&] { code = RunTile(tile); });

  QcArgs qc;
  auto* qc_cmd = app.add_subcommand("qc", "Tissue, blur and blood checks per tile");
  qc_cmd->add_option("--tiles", qc.tiles, "Tile directory or manifest")->required()->check(CLI::ExistingPath);
  qc_cmd->add_option("--config", qc.config, "Pipeline TOML");
  qc_cmd->add_option("--report", qc.report, "Output CSV")->required();
  qc_cmd->callback([&] { code = RunQc(qc); });

  NormalizeArgs norm;
  auto* norm_cmd = app.add_subcommand("normalize", "Macenko stain normalization");
  norm_cmd->add_option("--tiles", norm.tiles, "Tile directory or manifest");
  norm_cmd->add_option("--reference", norm.reference, "Reference profile JSON (written with --estimate-reference)");
  norm_cmd->add_option("--out", norm.out, "Output directory");
  norm_cmd->add_option("--estimate-reference", norm.estimate_reference, "Slide to estimate the reference from")
      ->check(CLI::ExistingFile);
  norm_cmd->add_option("--config", norm.config, "Pipeline TOML");
  norm_cmd->callback([&] {
    if (!norm.estimate_reference.empty() && norm.reference.empty()) {
      throw CLI::ValidationError("--estimate-reference needs --reference");
    }
    code = RunNormalize(norm);
  });

  InferArgs infer;
  auto* infer_cmd = app.add_subcommand("infer", "Score tiles with a classifier");
  infer_cmd->add_option("--tiles", infer.tiles, "Tile directory or manifest")->required()->check(CLI::ExistingPath);
  infer_cmd->add_option("--classifier", infer.classifier, "stub:<csv>, baseline:<json> or graph:<onnx>");
  infer_cmd->add_option("--config", infer.config, "Pipeline TOML");
  infer_cmd->add_option("--reference", infer.reference, "Reference profile JSON");
  infer_cmd->add_option("--batch-size", infer.batch_size, "Tiles per batch");
  infer_cmd->add_option("--out", infer.out, "Scores CSV")->required();
  infer_cmd->callback([&] { code = RunInfer(infer); });

  HeatmapArgs heat;
  auto* heat_cmd = app.add_subcommand("heatmap", "Assemble, smooth, threshold and contour tile scores");
  heat_cmd->add_option("--scores", heat.scores, "Scores CSV")->required()->check(CLI::ExistingFile);
  heat_cmd->add_option("--qc", heat.qc, "QC CSV")->required()->check(CLI::ExistingFile);
  heat_cmd->add_option("--sigma", heat.sigma, "Gaussian sigma in tiles")->capture_default_str();
  heat_cmd->add_option("--threshold", heat.threshold, "Tumor threshold")->capture_default_str();
  heat_cmd->add_option("--geojson", heat.geojson, "GeoJSON output");
  heat_cmd->add_option("--png", heat.png, "Heatmap PNG output");
  heat_cmd->add_option("--mask", heat.mask, "Mask PNG output");
  heat_cmd->add_option("--tile-size", heat.tile_size, "Tile edge in level pixels")->capture_default_str();
  heat_cmd->add_option("--downsample", heat.downsample, "Level downsample")->capture_default_str();
  heat_cmd->add_option("--min-area", heat.min_area, "Smallest kept region in tiles")->capture_default_str();
  heat_cmd->add_option("--colormap", heat.colormap, "hot or bwr")->capture_default_str();
  heat_cmd->add_option("--scale", heat.scale, "Heatmap pixels per tile")->capture_default_str();
  heat_cmd->callback([&] { code = RunHeatmap(heat); });

  GeojsonArgs geo;
  auto* geo_cmd = app.add_subcommand("geojson", "Contour a mask PNG into GeoJSON, or validate a GeoJSON file");
  geo_cmd->add_option("--mask", geo.mask, "Mask PNG, one pixel per tile")->check(CLI::ExistingFile);
  geo_cmd->add_option("--validate", geo.validate, "GeoJSON file to check")->check(CLI::ExistingFile);
  geo_cmd->add_option("--slide-id", geo.slide_id, "Slide id property");
  geo_cmd->add_option("--tile-size", geo.tile_size, "Tile edge in level pixels")->capture_default_str();
  geo_cmd->add_option("--downsample", geo.downsample, "Level downsample")->capture_default_str();
  geo_cmd->add_option("--min-area", geo.min_area, "Smallest kept region in tiles")->capture_default_str();
  geo_cmd->add_option("--out", geo.out, "GeoJSON output");
  geo_cmd->callback([&] { code = RunGeojson(geo); });

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Tile-level metrics per cohort");
  eval_cmd->add_option("--predictions", eval.predictions, "CSV slide_id,col,row,p_pos,label,cohort")
      ->required()
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--threshold", eval.threshold, "Decision threshold")->capture_default_str();
  eval_cmd->add_option("--out", eval.out, "Metrics JSON");
  eval_cmd->callback([&] { code = RunEval(eval); });

  BalanceArgs bal;
  auto* bal_cmd = app.add_subcommand("balance", "Build a 50:50 manifest per tumor type");
  bal_cmd->add_option("--manifest", bal.manifest, "Input NDJSON manifest")->required()->check(CLI::ExistingFile);
  bal_cmd->add_option("--target", bal.target, "Entries per tumor type")->capture_default_str();
  bal_cmd->add_option("--seed", bal.seed, "Random seed")->capture_default_str();
  bal_cmd->add_flag("--by-patient", bal.by_patient, "Split each class quota evenly across patients");
  bal_cmd->add_flag("--allow-oversample", bal.allow_oversample, "Draw with replacement for a short class");
  bal_cmd->add_option("--out", bal.out, "Output NDJSON manifest")->required();
  bal_cmd->callback([&] { code = RunBalance(bal); });

  ShardArgs shard;
  auto* shard_cmd = app.add_subcommand("shard", "Partition a slide list into shards");
  shard_cmd->add_option("--slides", shard.slides, "Slide list file or directory")->required()->check(CLI::ExistingPath);
  shard_cmd->add_option("--n-shards", shard.n_shards, "Number of shards")->required()->check(CLI::PositiveNumber);
  shard_cmd->add_option("--out", shard.out, "Shard manifest JSON (stdout if omitted)");
  shard_cmd->callback([&] { code = RunShard(shard); });

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run the full pipeline on one shard of a slide list");
  run_cmd->add_option("--slides", run.slides, "Slide list file or directory")->required();
  run_cmd->add_option("--config", run.config, std::string("Pipeline TOML (default: $") + kConfigEnvVar + ")");
  run_cmd->add_option("--shard", run.shard_id, "Shard index")->capture_default_str();
  run_cmd->add_option("--n-shards", run.n_shards, "Shard count")->capture_default_str();
  run_cmd->add_flag("--force", run.force, "Recompute completed slides");
  run_cmd->add_option("--out", run.out, "Override pipeline.output_dir");
  run_cmd->add_option("--workers", run.workers, "Override pipeline.workers");
  run_cmd->callback([&] { code = RunRun(run); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfigError;
  } catch (const Error& e) {
    fmt::print(stderr, "error [{}]: {}\n", ToString(e.code()), e.what());
    return e.code() == ErrorCode::kConfigError ? kExitConfigError : 1;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return code;
}
