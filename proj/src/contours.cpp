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

#include "tumorloc/contours.hpp"

#include <algorithm>
#include <array>
#include <deque>

#include "tumorloc/error.hpp"

namespace tumorloc {

double SignedArea(const Ring& ring) {
  double twice = 0.0;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
    twice += ring[i].x * ring[i + 1].y - ring[i + 1].x * ring[i].y;
  }
  return 0.5 * twice;
}

namespace {

// Edge directions, counterclockwise in the (x right, y up) frame.
enum Dir : int { kPosX = 0, kPosY = 1, kNegX = 2, kNegY = 3 };
constexpr std::array<int, 4> kDx{1, 0, -1, 0};
constexpr std::array<int, 4> kDy{0, 1, 0, -1};

struct Edge {
  int from = 0;  // vertex ids
  int to = 0;
  int dir = 0;
  int label = 0;  // component of the generating cell
};

struct Component {
  long long cells = 0;
  int min_row = 0;
  int min_col = 0;
  double prob_sum = 0.0;
  long long prob_count = 0;
};

class Tracer {
 public:
  Tracer(const BinaryMask& mask, const std::vector<int>& labels)
      : mask_(mask), labels_(labels), vcols_(mask.cols + 1),
        outgoing_(static_cast<std::size_t>(mask.cols + 1) * (mask.rows + 1)) {
    for (int r = 0; r < mask.rows; ++r) {
      for (int c = 0; c < mask.cols; ++c) {
        if (!mask.at(c, r)) {
          continue;
        }
        const int label = labels_[static_cast<std::size_t>(r) * mask.cols + c];
        // The cell lies to the left of each edge.
        if (!True(c, r - 1)) AddEdge(c, r, kPosX, label);
        if (!True(c + 1, r)) AddEdge(c + 1, r, kPosY, label);
        if (!True(c, r + 1)) AddEdge(c + 1, r + 1, kNegX, label);
        if (!True(c - 1, r)) AddEdge(c, r + 1, kNegY, label);
      }
    }
  }

  struct TracedRing {
    Ring ring;
    int label = 0;
  };

  std::vector<TracedRing> TraceAll() {
    std::vector<TracedRing> rings;
    std::vector<std::uint8_t> used(edges_.size(), 0);
    for (std::size_t start = 0; start < edges_.size(); ++start) {
      if (used[start] != 0) {
        continue;
      }
      std::vector<int> vertices;
      std::vector<int> dirs;
      std::size_t e = start;
      do {
        used[e] = 1;
        vertices.push_back(edges_[e].from);
        dirs.push_back(edges_[e].dir);
        e = Next(edges_[e]);
      } while (e != start);
      rings.push_back({Simplify(vertices, dirs), edges_[start].label});
    }
    return rings;
  }

 private:
  bool True(int c, int r) const {
    return c >= 0 && r >= 0 && c < mask_.cols && r < mask_.rows && mask_.at(c, r);
  }

  void AddEdge(int x, int y, int dir, int label) {
    const int from = y * vcols_ + x;
    const int to = (y + kDy[static_cast<std::size_t>(dir)]) * vcols_ + x + kDx[static_cast<std::size_t>(dir)];
    outgoing_[static_cast<std::size_t>(from)].push_back(edges_.size());
    edges_.push_back({from, to, dir, label});
  }

  // At a saddle vertex the right turn keeps diagonal true cells in one ring.
  std::size_t Next(const Edge& in) const {
    const auto& out = outgoing_[static_cast<std::size_t>(in.to)];
    if (out.size() == 1) {
      return out.front();
    }
    const int right = (in.dir + 3) % 4;
    for (std::size_t idx : out) {
      if (edges_[idx].dir == right) {
        return idx;
      }
    }
    throw Error(ErrorCode::kInvalidArgument, "inconsistent boundary at saddle vertex");
  }

  Point ToPoint(int v) const {
    return {static_cast<double>(v % vcols_), static_cast<double>(v / vcols_)};
  }

  // Drops vertices where the direction does not change, rotates the ring to a
  // canonical start and closes it.
  Ring Simplify(const std::vector<int>& vertices, const std::vector<int>& dirs) const {
    const std::size_t n = vertices.size();
    std::vector<int> corners;
    for (std::size_t i = 0; i < n; ++i) {
      const int prev_dir = dirs[(i + n - 1) % n];
      if (dirs[i] != prev_dir) {
        corners.push_back(vertices[i]);
      }
    }
    // Canonical start: smallest (y, x) corner, then smallest following corner.
    auto key = [&](std::size_t i) {
      const Point p = ToPoint(corners[i]);
      const Point q = ToPoint(corners[(i + 1) % corners.size()]);
      return std::array<double, 4>{p.y, p.x, q.y, q.x};
    };
    std::size_t best = 0;
    for (std::size_t i = 1; i < corners.size(); ++i) {
      if (key(i) < key(best)) {
        best = i;
      }
    }
    Ring ring;
    ring.reserve(corners.size() + 1);
    for (std::size_t k = 0; k < corners.size(); ++k) {
      ring.push_back(ToPoint(corners[(best + k) % corners.size()]));
    }
    ring.push_back(ring.front());
    return ring;
  }

  const BinaryMask& mask_;
  const std::vector<int>& labels_;
  int vcols_;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::size_t>> outgoing_;
};

}  // namespace

std::vector<TumorAnnotation> ExtractContours(const BinaryMask& mask, const ContourOptions& options,
                                             const ProbabilityGrid* probabilities) {
  if (mask.cols < 0 || mask.rows < 0 ||
      mask.cells.size() != static_cast<std::size_t>(mask.cols) * static_cast<std::size_t>(mask.rows)) {
    throw Error(ErrorCode::kInvalidArgument, "malformed mask");
  }
  if (probabilities != nullptr &&
      (probabilities->cols() != mask.cols || probabilities->rows() != mask.rows)) {
    throw Error(ErrorCode::kInvalidArgument, "probability grid does not match mask shape");
  }

  // 8-connected labelling in scan order, so component ids sort by (min row, min col).
  std::vector<int> labels(mask.cells.size(), -1);
  std::vector<Component> components;
  std::deque<std::pair<int, int>> queue;
  for (int r = 0; r < mask.rows; ++r) {
    for (int c = 0; c < mask.cols; ++c) {
      const std::size_t idx = static_cast<std::size_t>(r) * mask.cols + c;
      if (!mask.at(c, r) || labels[idx] >= 0) {
        continue;
      }
      const int label = static_cast<int>(components.size());
      Component comp;
      comp.min_row = r;
      comp.min_col = c;
      labels[idx] = label;
      queue.emplace_back(c, r);
      while (!queue.empty()) {
        const auto [cc, cr] = queue.front();
        queue.pop_front();
        ++comp.cells;
        if (probabilities != nullptr && probabilities->has_tissue(cc, cr)) {
          comp.prob_sum += probabilities->at(cc, cr);
          ++comp.prob_count;
        }
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nc = cc + dx;
            const int nr = cr + dy;
            if (nc < 0 || nr < 0 || nc >= mask.cols || nr >= mask.rows || !mask.at(nc, nr)) {
              continue;
            }
            const std::size_t nidx = static_cast<std::size_t>(nr) * mask.cols + nc;
            if (labels[nidx] < 0) {
              labels[nidx] = label;
              queue.emplace_back(nc, nr);
            }
          }
        }
      }
      components.push_back(comp);
    }
  }

  std::vector<TumorAnnotation> annotations(components.size());
  std::vector<int> outer_count(components.size(), 0);
  Tracer tracer(mask, labels);
  for (auto& traced : tracer.TraceAll()) {
    auto& ann = annotations[static_cast<std::size_t>(traced.label)];
    if (SignedArea(traced.ring) > 0.0) {
      ann.outer_ring = std::move(traced.ring);
      ++outer_count[static_cast<std::size_t>(traced.label)];
    } else {
      ann.holes.push_back(std::move(traced.ring));
    }
  }

  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < components.size(); ++i) {
    if (outer_count[i] != 1) {
      throw Error(ErrorCode::kInvalidArgument, "component traced to " + std::to_string(outer_count[i]) +
                                                   " outer rings");
    }
    auto& ann = annotations[i];
    ann.area = SignedArea(ann.outer_ring);
    for (const auto& hole : ann.holes) {
      ann.area += SignedArea(hole);
    }
    const Component& comp = components[i];
    ann.mean_probability = comp.prob_count > 0 ? comp.prob_sum / static_cast<double>(comp.prob_count) : 0.0;
    if (comp.cells >= options.min_area_cells) {
      order.push_back(i);
    }
  }
  // Labels already follow (min row, min col), so a stable sort on area settles ties.
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return components[a].cells > components[b].cells;
  });

  std::vector<TumorAnnotation> out;
  out.reserve(order.size());
  for (std::size_t i : order) {
    out.push_back(std::move(annotations[i]));
  }
  return out;
}

TumorAnnotation RescaleToLevel0(const TumorAnnotation& annotation, int tile_size,
                                double level_downsample) {
  if (tile_size < 1 || !(level_downsample >= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "tile_size >= 1 and level_downsample >= 1 required");
  }
  const double s = tile_size * level_downsample;
  auto scale_ring = [s](const Ring& ring) {
    Ring out;
    out.reserve(ring.size());
    for (const Point& p : ring) {
      out.push_back({p.x * s, p.y * s});
    }
    return out;
  };
  TumorAnnotation out;
  out.outer_ring = scale_ring(annotation.outer_ring);
  for (const auto& hole : annotation.holes) {
    out.holes.push_back(scale_ring(hole));
  }
  out.mean_probability = annotation.mean_probability;
  out.area = annotation.area * s * s;
  return out;
}

std::vector<TumorAnnotation> RescaleToLevel0(const std::vector<TumorAnnotation>& annotations,
                                             int tile_size, double level_downsample) {
  std::vector<TumorAnnotation> out;
  out.reserve(annotations.size());
  for (const auto& a : annotations) {
    out.push_back(RescaleToLevel0(a, tile_size, level_downsample));
  }
  return out;
}

}  // namespace tumorloc
