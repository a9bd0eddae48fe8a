#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <tuple>
#include <utility>
#include <vector>

#include "pectoral/error.hpp"
#include "pectoral/morphology.hpp"
#include "pectoral/raster.hpp"

namespace pectoral {

struct GraphConfig {
  /// Added to the denominator of every edge weight so zero-probability
  /// pixels inside the mask stay finite.
  double epsilon = 1e-6;
};

struct PixelPath {
  std::vector<Pixel> nodes;
  double total_cost = 0;

  friend bool operator==(const PixelPath&, const PixelPath&) = default;
};

inline constexpr double kInfiniteWeight = std::numeric_limits<double>::infinity();

/// Weight of the graph edge p -> q: 2 / (M(p) + M(q) + epsilon) when both
/// pixels lie in B and are 8-neighbours, infinite otherwise.
inline double edge_weight(const EdgeProbMap& m, const BinaryMask& b, Pixel p, Pixel q, const GraphConfig& cfg = {}) {
  if (!are_8_neighbors(p, q) || !b.contains(p) || !b.contains(q) || !b[p] || !b[q]) return kInfiniteWeight;
  return 2.0 / (static_cast<double>(m[p]) + static_cast<double>(m[q]) + cfg.epsilon);
}

/// Start and end of the boundary search: the two skeleton end points of B,
/// the one nearer the first column first.
inline std::pair<Pixel, Pixel> select_terminals(const BinaryMask& b) {
  const SkeletonInfo skel = skeletonize(b);
  if (skel.endpoints.size() != 2) {
    throw Error(ErrorKind::AmbiguousSkeleton,
                "skeleton has " + std::to_string(skel.endpoints.size()) + " end points, expected 2");
  }
  return order_endpoints(skel.endpoints[0], skel.endpoints[1]);
}

inline double path_cost(const EdgeProbMap& m, const BinaryMask& b, const std::vector<Pixel>& nodes,
                        const GraphConfig& cfg = {}) {
  double cost = 0;
  for (std::size_t i = 1; i < nodes.size(); ++i) cost += edge_weight(m, b, nodes[i - 1], nodes[i], cfg);
  return cost;
}

/// Minimum-cost S -> E path over the 8-connected pixel graph restricted to B.
///
/// Label-setting Dijkstra: the queue is ordered by (distance, row, col), a
/// relaxation that ties the current distance keeps the row-major smaller
/// parent, and the search stops as soon as E is settled. The path is
/// recovered by walking parents back from E.
inline PixelPath shortest_path(const EdgeProbMap& m, const BinaryMask& b, Pixel start, Pixel end,
                               const GraphConfig& cfg = {}) {
  require_same_shape(m, b, "edge map and mask");
  if (!(cfg.epsilon > 0)) throw Error(ErrorKind::BadSpec, "epsilon must be positive");
  if (!b.contains(start) || !b.contains(end) || !b[start] || !b[end]) {
    throw Error(ErrorKind::NoPath, "terminals must lie inside the mask");
  }
  if (start == end) return {{start}, 0.0};

  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::vector<double> dist(b.size(), kInfiniteWeight);
  std::vector<std::size_t> parent(b.size(), kNone);
  std::vector<std::uint8_t> settled(b.size(), 0);

  using Item = std::tuple<double, int, int>;  // distance, row, col
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  dist[b.index(start)] = 0;
  queue.push({0.0, start.row, start.col});

  const std::size_t end_index = b.index(end);
  while (!queue.empty()) {
    const auto [d, row, col] = queue.top();
    queue.pop();
    const Pixel u{row, col};
    const std::size_t ui = b.index(u);
    if (settled[ui] || d > dist[ui]) continue;
    settled[ui] = 1;
    if (ui == end_index) break;
    for (const Pixel off : kNeighbors8) {
      const Pixel q{u.row + off.row, u.col + off.col};
      if (!b.contains(q) || !b[q]) continue;
      const std::size_t qi = b.index(q);
      if (settled[qi]) continue;
      const double candidate = d + edge_weight(m, b, u, q, cfg);
      if (candidate < dist[qi]) {
        dist[qi] = candidate;
        parent[qi] = ui;
        queue.push({candidate, q.row, q.col});
      } else if (candidate == dist[qi] && ui < parent[qi]) {
        parent[qi] = ui;
      }
    }
  }
  if (!settled[end_index]) throw Error(ErrorKind::NoPath, "end point is not reachable from start inside the mask");

  PixelPath path;
  for (std::size_t i = end_index; i != kNone; i = parent[i]) path.nodes.push_back(b.pixel_at(i));
  std::reverse(path.nodes.begin(), path.nodes.end());
  path.total_cost = dist[end_index];
  return path;
}

}  // namespace pectoral
