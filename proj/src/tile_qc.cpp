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

#include "tumorloc/tile_qc.hpp"

#include <algorithm>
#include <array>
#include <vector>

#include "tumorloc/error.hpp"

namespace tumorloc {

Hsv ToHsv(Rgb c) noexcept {
  const int r = c.r;
  const int g = c.g;
  const int b = c.b;
  const int mx = std::max({r, g, b});
  const int mn = std::min({r, g, b});
  const int delta = mx - mn;
  Hsv out;
  out.v = mx / 255.0;
  out.s = mx == 0 ? 0.0 : static_cast<double>(delta) / mx;
  if (delta == 0) {
    out.h = 0.0;
  } else if (mx == r) {
    out.h = 60.0 * static_cast<double>(g - b) / delta;
  } else if (mx == g) {
    out.h = 60.0 * (2.0 + static_cast<double>(b - r) / delta);
  } else {
    out.h = 60.0 * (4.0 + static_cast<double>(r - g) / delta);
  }
  if (out.h < 0.0) {
    out.h += 360.0;
  }
  return out;
}

void QcConfig::Validate() const {
  auto unit = [](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, std::string(name) + " must lie in [0, 1]");
    }
  };
  unit(min_tissue_fraction, "min_tissue_fraction");
  unit(background_value_min, "background_value_min");
  unit(background_saturation_max, "background_saturation_max");
  unit(max_blood_fraction, "max_blood_fraction");
  unit(blood_saturation_min, "blood_saturation_min");
  unit(blood_value_min, "blood_value_min");
  if (!(min_blur_score >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "min_blur_score must be >= 0");
  }
  if (blood_hue_low < 0.0 || blood_hue_low > 360.0 || blood_hue_high < 0.0 ||
      blood_hue_high > 360.0) {
    throw Error(ErrorCode::kInvalidArgument, "blood hue bounds must lie in [0, 360]");
  }
}

std::string ToString(RejectReason reason) {
  switch (reason) {
    case RejectReason::kLowTissue: return "LowTissue";
    case RejectReason::kBlurred: return "Blurred";
    case RejectReason::kBloodClot: return "BloodClot";
  }
  return "Unknown";
}

std::string JoinReasons(const std::vector<RejectReason>& reasons) {
  std::string out;
  for (std::size_t i = 0; i < reasons.size(); ++i) {
    if (i > 0) {
      out += ';';
    }
    out += ToString(reasons[i]);
  }
  return out;
}

namespace {

// For each max channel value mx, the smallest delta with delta / mx >= s
// (256 when none). Exact: delta / mx is monotone in delta.
std::array<int, 256> MinDeltaForSaturation(double s) {
  std::array<int, 256> out{};
  out[0] = s <= 0.0 ? 0 : 256;
  for (int mx = 1; mx < 256; ++mx) {
    int lo = 0;
    int hi = mx + 1;
    while (lo < hi) {
      const int mid = (lo + hi) / 2;
      if (static_cast<double>(mid) / mx >= s) {
        hi = mid;
      } else {
        lo = mid + 1;
      }
    }
    out[static_cast<std::size_t>(mx)] = lo > mx ? 256 : lo;
  }
  return out;
}

template <typename Pred>
double PixelFraction(const RgbImage& tile, Pred pred) {
  if (tile.empty()) {
    return 0.0;
  }
  std::size_t hits = 0;
  auto bytes = tile.bytes();
  for (std::size_t i = 0; i < tile.pixel_count(); ++i) {
    if (pred(Rgb{bytes[3 * i], bytes[3 * i + 1], bytes[3 * i + 2]})) {
      ++hits;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(tile.pixel_count());
}

}  // namespace

double TissueFraction(const RgbImage& tile, const QcConfig& cfg) {
  // Background: v > background_value_min and s < background_saturation_max.
  const std::array<int, 256> min_delta = MinDeltaForSaturation(cfg.background_saturation_max);
  return PixelFraction(tile, [&](Rgb c) {
    const int mx = std::max({c.r, c.g, c.b});
    if (!(mx / 255.0 > cfg.background_value_min)) {
      return true;
    }
    const int mn = std::min({c.r, c.g, c.b});
    return mx - mn >= min_delta[static_cast<std::size_t>(mx)];
  });
}

double BloodFraction(const RgbImage& tile, const QcConfig& cfg) {
  const std::array<int, 256> min_delta = MinDeltaForSaturation(cfg.blood_saturation_min);
  return PixelFraction(tile, [&](Rgb c) {
    const int mx = std::max({c.r, c.g, c.b});
    const int mn = std::min({c.r, c.g, c.b});
    if (mx == 0 || mx - mn < min_delta[static_cast<std::size_t>(mx)] ||
        !(mx / 255.0 >= cfg.blood_value_min)) {
      return false;
    }
    const Hsv hsv = ToHsv(c);
    return hsv.h >= cfg.blood_hue_low || hsv.h <= cfg.blood_hue_high;
  });
}

double BlurScore(const RgbImage& tile) {
  const int w = tile.width();
  const int h = tile.height();
  if (w < 3 || h < 3) {
    return 0.0;
  }
  std::vector<double> gray(tile.pixel_count());
  auto bytes = tile.bytes();
  for (std::size_t i = 0; i < gray.size(); ++i) {
    gray[i] = 0.299 * bytes[3 * i] + 0.587 * bytes[3 * i + 1] + 0.114 * bytes[3 * i + 2];
  }
  // Two-pass variance: mean first, then centred sum of squares.
  const auto at = [&](int x, int y) { return gray[static_cast<std::size_t>(y) * w + x]; };
  std::vector<double> lap;
  lap.reserve(static_cast<std::size_t>(w - 2) * static_cast<std::size_t>(h - 2));
  double sum = 0.0;
  for (int y = 1; y < h - 1; ++y) {
    for (int x = 1; x < w - 1; ++x) {
      const double v = at(x, y - 1) + at(x - 1, y) + at(x + 1, y) + at(x, y + 1) - 4.0 * at(x, y);
      lap.push_back(v);
      sum += v;
    }
  }
  const double mean = sum / static_cast<double>(lap.size());
  double ss = 0.0;
  for (double v : lap) {
    ss += (v - mean) * (v - mean);
  }
  return ss / static_cast<double>(lap.size());
}

QcReport QcFilter(const RgbImage& tile, const QcConfig& cfg) {
  QcReport report;
  report.tissue_fraction = TissueFraction(tile, cfg);
  report.blur_score = BlurScore(tile);
  report.blood_fraction = BloodFraction(tile, cfg);
  if (!(report.tissue_fraction > cfg.min_tissue_fraction)) {
    report.reject_reasons.push_back(RejectReason::kLowTissue);
  }
  if (!(report.blur_score >= cfg.min_blur_score)) {
    report.reject_reasons.push_back(RejectReason::kBlurred);
  }
  if (!(report.blood_fraction <= cfg.max_blood_fraction)) {
    report.reject_reasons.push_back(RejectReason::kBloodClot);
  }
  report.pass = report.reject_reasons.empty();
  return report;
}

double TissueFraction(const TileRecord& tile, const QcConfig& cfg) {
  return TissueFraction(tile.pixels, cfg);
}
double BlurScore(const TileRecord& tile) { return BlurScore(tile.pixels); }
double BloodFraction(const TileRecord& tile, const QcConfig& cfg) {
  return BloodFraction(tile.pixels, cfg);
}
QcReport QcFilter(const TileRecord& tile, const QcConfig& cfg) { return QcFilter(tile.pixels, cfg); }

}  // namespace tumorloc
