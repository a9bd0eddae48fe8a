#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <queue>
#include <span>
#include <utility>
#include <vector>

#include "pectoral/error.hpp"
#include "pectoral/raster.hpp"

namespace pectoral {

// ---------------------------------------------------------------------------
// Otsu thresholding
// ---------------------------------------------------------------------------

inline constexpr int kHistogramBins = 256;
using Histogram = std::array<std::uint64_t, kHistogramBins>;

/// Bin of a probability value. Bin k covers (k/256, (k+1)/256], bin 0 also
/// takes exact zeros, so "value > (k+1)/256" is exactly "bin > k".
inline int probability_bin(float value) {
  const double scaled = std::ceil(static_cast<double>(value) * kHistogramBins) - 1.0;
  return static_cast<int>(std::clamp(scaled, 0.0, static_cast<double>(kHistogramBins - 1)));
}

/// Index k maximizing the between-class variance of the split {0..k} | {k+1..255}.
/// Returns nullopt when fewer than two bins are populated. Ties go to the
/// smallest k.
///
/// With n0, n1 the class counts and s0, s1 the sums of bin indices, the
/// between-class variance is (n1*s0 - n0*s1)^2 / (N^2 * n0 * n1); N is
/// constant so candidates are compared on (n1*s0 - n0*s1)^2 / (n0*n1), in
/// exact integer arithmetic while it fits in 128 bits.
inline std::optional<int> otsu_bin(const Histogram& hist) {
  std::uint64_t total = 0;
  std::uint64_t total_sum = 0;
  int populated = 0;
  for (int k = 0; k < kHistogramBins; ++k) {
    total += hist[k];
    total_sum += hist[k] * static_cast<std::uint64_t>(k);
    populated += hist[k] != 0;
  }
  if (populated < 2) return std::nullopt;

  const bool exact = total <= (std::uint64_t{1} << 18);
  std::optional<int> best;
  unsigned __int128 best_num = 0;
  unsigned __int128 best_den = 1;
  long double best_value = -1;

  std::uint64_t n0 = 0;
  std::uint64_t s0 = 0;
  for (int k = 0; k < kHistogramBins - 1; ++k) {
    n0 += hist[k];
    s0 += hist[k] * static_cast<std::uint64_t>(k);
    const std::uint64_t n1 = total - n0;
    if (n0 == 0 || n1 == 0) continue;
    const std::uint64_t s1 = total_sum - s0;
    // n1*s0 - n0*s1 == total*s0 - n0*total_sum; the sign is irrelevant.
    const unsigned __int128 a = static_cast<unsigned __int128>(n1) * s0;
    const unsigned __int128 b = static_cast<unsigned __int128>(n0) * s1;
    const unsigned __int128 diff = a > b ? a - b : b - a;
    const unsigned __int128 den = static_cast<unsigned __int128>(n0) * n1;
    if (exact) {
      const unsigned __int128 num = diff * diff;
      if (!best || num * best_den > best_num * den) {
        best = k;
        best_num = num;
        best_den = den;
      }
    } else {
      const long double d = static_cast<long double>(diff);
      const long double value = d * d / static_cast<long double>(den);
      if (!best || value > best_value) {
        best = k;
        best_value = value;
      }
    }
  }
  return best;
}

inline Histogram probability_histogram(const EdgeProbMap& map) {
  Histogram hist{};
  for (float v : map.data()) ++hist[probability_bin(v)];
  return hist;
}

/// Otsu threshold of a probability map over 256 bins; pixels strictly above
/// the returned value form the foreground class.
inline float otsu_threshold(const EdgeProbMap& map) {
  const auto k = otsu_bin(probability_histogram(map));
  if (!k) throw Error(ErrorKind::DegenerateHistogram, "probability map has a single populated bin");
  return static_cast<float>(*k + 1) / static_cast<float>(kHistogramBins);
}

inline BinaryMask binarize(const EdgeProbMap& map, float threshold) {
  BinaryMask out(map.width(), map.height());
  for (std::size_t i = 0; i < map.size(); ++i) out.data()[i] = map.data()[i] > threshold;
  return out;
}

// ---------------------------------------------------------------------------
// Connected components (8-connectivity)
// ---------------------------------------------------------------------------

struct ComponentLabeling {
  /// Row-major component ids, 0 = background. Ids are assigned in row-major
  /// order of each component's first pixel, starting at 1.
  std::vector<std::int32_t> labels;
  /// component_sizes[id - 1] is the pixel count of component `id`.
  std::vector<std::size_t> component_sizes;
};

inline ComponentLabeling label_components(const BinaryMask& mask) {
  ComponentLabeling out;
  out.labels.assign(mask.size(), 0);
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < mask.size(); ++start) {
    if (!mask.data()[start] || out.labels[start] != 0) continue;
    const auto id = static_cast<std::int32_t>(out.component_sizes.size() + 1);
    std::size_t count = 0;
    out.labels[start] = id;
    stack.push_back(start);
    while (!stack.empty()) {
      const Pixel p = mask.pixel_at(stack.back());
      stack.pop_back();
      ++count;
      for (const Pixel d : kNeighbors8) {
        const Pixel q{p.row + d.row, p.col + d.col};
        if (!mask.contains(q)) continue;
        const std::size_t qi = mask.index(q);
        if (mask.data()[qi] && out.labels[qi] == 0) {
          out.labels[qi] = id;
          stack.push_back(qi);
        }
      }
    }
    out.component_sizes.push_back(count);
  }
  return out;
}

/// Keeps only the largest 8-connected component; ties go to the component
/// whose first pixel comes first in row-major order.
inline BinaryMask longest_component(const BinaryMask& mask) {
  const ComponentLabeling labeling = label_components(mask);
  if (labeling.component_sizes.empty()) throw Error(ErrorKind::EmptyMask, "mask has no true pixels");
  const auto best = std::max_element(labeling.component_sizes.begin(), labeling.component_sizes.end());
  const auto id = static_cast<std::int32_t>(std::distance(labeling.component_sizes.begin(), best) + 1);
  BinaryMask out(mask.width(), mask.height());
  for (std::size_t i = 0; i < mask.size(); ++i) out.data()[i] = labeling.labels[i] == id;
  return out;
}

// ---------------------------------------------------------------------------
// Skeletonization
// ---------------------------------------------------------------------------

namespace detail {

// Neighbour ring, clockwise from north: N, NE, E, SE, S, SW, W, NW.
inline constexpr std::array<Pixel, 8> kRing = {{
    {-1, 0}, {-1, 1}, {0, 1}, {1, 1}, {1, 0}, {1, -1}, {0, -1}, {-1, -1},
}};

inline unsigned ring_code(const BinaryMask& m, Pixel p) {
  unsigned code = 0;
  for (int i = 0; i < 8; ++i) {
    const Pixel q{p.row + kRing[i].row, p.col + kRing[i].col};
    if (m.contains(q) && m[q]) code |= 1u << i;
  }
  return code;
}

inline bool ring_bit(unsigned code, int i) { return (code >> (i & 7)) & 1u; }

/// A pixel is simple (deletable without changing topology under 8/4
/// connectivity) iff its foreground neighbours form one 8-connected set and
/// its background neighbours form one 4-connected set touching it.
inline bool is_simple_code(unsigned code) {
  // Foreground: ring neighbours are 8-adjacent to their ring successors, and
  // each edge neighbour (even index) is also adjacent to the next edge
  // neighbour across a corner.
  int fg_parent[8];
  for (int i = 0; i < 8; ++i) fg_parent[i] = i;
  auto find = [&](int x) {
    while (fg_parent[x] != x) x = fg_parent[x] = fg_parent[fg_parent[x]];
    return x;
  };
  auto unite = [&](int a, int b) { fg_parent[find(a)] = find(b); };
  int fg_count = 0;
  for (int i = 0; i < 8; ++i) {
    if (!ring_bit(code, i)) continue;
    ++fg_count;
    if (ring_bit(code, i + 1)) unite(i, (i + 1) & 7);
    if (i % 2 == 0 && ring_bit(code, i + 2)) unite(i, (i + 2) & 7);
  }
  if (fg_count == 0) return false;
  int fg_components = 0;
  for (int i = 0; i < 8; ++i)
    if (ring_bit(code, i) && find(i) == i) ++fg_components;
  if (fg_components != 1) return false;

  // Background: 4-adjacency inside the ring is ring succession; count runs
  // of zeros that contain an edge neighbour.
  if (code == 0xFF) return false;
  int bg_components = 0;
  for (int start = 0; start < 8; ++start) {
    if (ring_bit(code, start) || !ring_bit(code, start - 1 + 8)) continue;
    // `start` begins a run of zeros.
    bool touches_edge = false;
    for (int i = start; !ring_bit(code, i); ++i) touches_edge |= (i % 2 == 0);
    bg_components += touches_edge;
  }
  return bg_components == 1;
}

inline const std::array<bool, 256>& simple_table() {
  static const std::array<bool, 256> table = [] {
    std::array<bool, 256> t{};
    for (unsigned c = 0; c < 256; ++c) t[c] = is_simple_code(c);
    return t;
  }();
  return table;
}

inline int neighbor_count(unsigned code) { return std::popcount(code); }

struct Box {
  int row0, col0, row1, col1;  // inclusive
};

inline std::optional<Box> bounding_box(const BinaryMask& m) {
  std::optional<Box> box;
  for (int r = 0; r < m.height(); ++r)
    for (int c = 0; c < m.width(); ++c) {
      if (!m(r, c)) continue;
      if (!box) box = Box{r, c, r, c};
      box->row0 = std::min(box->row0, r);
      box->col0 = std::min(box->col0, c);
      box->row1 = std::max(box->row1, r);
      box->col1 = std::max(box->col1, c);
    }
  return box;
}

/// Two-subiteration thinning (Zhang-Suen directional conditions). Candidates
/// are marked in parallel from a snapshot, then deleted one at a time only if
/// still simple and not an end point, so topology is always preserved.
inline void thin_in_place(BinaryMask& m) {
  const auto& simple = simple_table();
  const auto box0 = bounding_box(m);
  if (!box0) return;
  const Box box = *box0;
  std::vector<Pixel> marked;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int sub = 0; sub < 2; ++sub) {
      marked.clear();
      for (int r = box.row0; r <= box.row1; ++r)
        for (int c = box.col0; c <= box.col1; ++c) {
          if (!m(r, c)) continue;
          const unsigned code = ring_code(m, {r, c});
          const int n = neighbor_count(code);
          if (n < 2 || n > 6 || !simple[code]) continue;
          const bool n_ = ring_bit(code, 0), e_ = ring_bit(code, 2), s_ = ring_bit(code, 4),
                     w_ = ring_bit(code, 6);
          const bool keep = sub == 0 ? ((n_ && e_ && s_) || (e_ && s_ && w_))
                                     : ((n_ && e_ && w_) || (n_ && s_ && w_));
          if (!keep) marked.push_back({r, c});
        }
      for (const Pixel p : marked) {
        const unsigned code = ring_code(m, p);
        if (neighbor_count(code) >= 2 && simple[code]) {
          m[p] = 0;
          changed = true;
        }
      }
    }
  }
  // Remove remaining staircase corners so the result has no 2x2 blocks
  // wherever that is topologically possible.
  changed = true;
  while (changed) {
    changed = false;
    for (int r = box.row0; r <= box.row1; ++r)
      for (int c = box.col0; c <= box.col1; ++c) {
        if (!m(r, c)) continue;
        const unsigned code = ring_code(m, {r, c});
        const bool n_ = ring_bit(code, 0), e_ = ring_bit(code, 2), s_ = ring_bit(code, 4),
                   w_ = ring_bit(code, 6);
        const bool corner = (n_ && e_) || (e_ && s_) || (s_ && w_) || (w_ && n_);
        if (corner && neighbor_count(code) >= 2 && simple[code]) {
          m(r, c) = 0;
          changed = true;
        }
      }
  }
}

/// Removes branches that run from an end point into a junction in fewer than
/// `min_length` pixels. Such spurs come from corners and blunt ends of the
/// thinned region rather than from its shape.
inline void prune_spurs(BinaryMask& skel, int min_length) {
  bool changed = true;
  std::vector<Pixel> branch;
  while (changed) {
    changed = false;
    std::vector<std::vector<Pixel>> spurs;
    for (int r = 0; r < skel.height(); ++r)
      for (int c = 0; c < skel.width(); ++c) {
        if (!skel(r, c) || neighbor_count(ring_code(skel, {r, c})) != 1) continue;
        branch.clear();
        Pixel prev{-1, -1};
        Pixel cur{r, c};
        bool reached_junction = false;
        while (static_cast<int>(branch.size()) < min_length) {
          if (neighbor_count(ring_code(skel, cur)) >= 3) {
            reached_junction = true;
            break;
          }
          branch.push_back(cur);
          std::optional<Pixel> next;
          for (const Pixel d : kNeighbors8) {
            const Pixel q{cur.row + d.row, cur.col + d.col};
            if (q != prev && skel.contains(q) && skel[q] &&
                std::find(branch.begin(), branch.end(), q) == branch.end()) {
              next = q;
              break;
            }
          }
          if (!next) break;  // isolated segment, not a spur
          prev = cur;
          cur = *next;
        }
        if (reached_junction && !branch.empty()) spurs.push_back(branch);
      }
    for (const auto& spur : spurs) {
      for (const Pixel p : spur) skel[p] = 0;
      changed = true;
    }
    if (changed) thin_in_place(skel);
  }
}

}  // namespace detail

struct SkeletonInfo {
  BinaryMask skeleton;
  /// Skeleton pixels with exactly one skeleton neighbour, row-major order.
  std::vector<Pixel> endpoints;
};

inline int skeleton_neighbors(const BinaryMask& skeleton, Pixel p) {
  return detail::neighbor_count(detail::ring_code(skeleton, p));
}

inline std::vector<Pixel> find_endpoints(const BinaryMask& skeleton) {
  std::vector<Pixel> out;
  for (int r = 0; r < skeleton.height(); ++r)
    for (int c = 0; c < skeleton.width(); ++c)
      if (skeleton(r, c) && skeleton_neighbors(skeleton, {r, c}) == 1) out.push_back({r, c});
  return out;
}

/// Margin by which masks are extended past the raster border before thinning.
inline constexpr int kSkeletonBorderPad = 32;

/// Thins `mask` to a one-pixel-wide, connected skeleton. Foreground touching
/// the raster border is treated as continuing beyond it (edge replication),
/// so a branch that reaches the border ends on the border instead of
/// retracting by half the stroke width. Spurs shorter than the mean stroke
/// thickness (area / skeleton length) are pruned.
inline SkeletonInfo skeletonize(const BinaryMask& mask) {
  if (count_true(mask) == 0) throw Error(ErrorKind::EmptyMask, "cannot skeletonize an empty mask");
  const int pad = kSkeletonBorderPad;
  BinaryMask padded(mask.width() + 2 * pad, mask.height() + 2 * pad);
  for (int r = 0; r < padded.height(); ++r) {
    const int sr = std::clamp(r - pad, 0, mask.height() - 1);
    for (int c = 0; c < padded.width(); ++c) {
      const int sc = std::clamp(c - pad, 0, mask.width() - 1);
      padded(r, c) = mask(sr, sc);
    }
  }
  detail::thin_in_place(padded);
  std::size_t inside = 0;
  for (int r = 0; r < mask.height(); ++r)
    for (int c = 0; c < mask.width(); ++c) inside += padded(r + pad, c + pad);
  const double thickness = static_cast<double>(count_true(mask)) / static_cast<double>(std::max<std::size_t>(inside, 1));
  detail::prune_spurs(padded, static_cast<int>(std::lround(thickness)));
  SkeletonInfo info{BinaryMask(mask.width(), mask.height()), {}};
  for (int r = 0; r < mask.height(); ++r)
    for (int c = 0; c < mask.width(); ++c) info.skeleton(r, c) = padded(r + pad, c + pad);
  info.endpoints = find_endpoints(info.skeleton);
  return info;
}

// ---------------------------------------------------------------------------
// Edge completion by linear extrapolation
// ---------------------------------------------------------------------------

struct BorderContact {
  /// No true pixel in column 0.
  bool left_short = false;
  /// No true pixel in the last row.
  bool right_short = false;

  friend bool operator==(const BorderContact&, const BorderContact&) = default;
};

/// Checks whether a canonically oriented edge mask reaches the first column
/// and the last row.
inline BorderContact is_disconnected(const BinaryMask& mask) {
  BorderContact out{true, true};
  for (int r = 0; r < mask.height(); ++r)
    if (mask(r, 0)) out.left_short = false;
  for (int c = 0; c < mask.width(); ++c)
    if (mask(mask.height() - 1, c)) out.right_short = false;
  return out;
}

struct CompletionParams {
  /// Arc length (pixels) of the skeleton stretch used for the line fit.
  double arc_distance = 25.0;
};

/// Total-least-squares line through a set of pixels; `direction` is a unit
/// vector pointing outward, away from the body of the skeleton.
struct LineFit {
  double centroid_row = 0;
  double centroid_col = 0;
  double dir_row = 0;
  double dir_col = 0;

  /// d(row)/d(col) of the fitted line.
  double slope() const { return dir_row / dir_col; }
};

struct CompletionResult {
  BinaryMask mask;
  bool extended_left = false;
  bool extended_bottom = false;
  int stroke_width = 0;
  /// The skeleton was shorter than the arc distance; the fit used all of it.
  bool short_skeleton = false;
  std::optional<LineFit> left_fit;
  std::optional<LineFit> bottom_fit;
};

namespace detail {

/// Geodesic arc length from `source` along the skeleton (1 per axial step,
/// sqrt(2) per diagonal step).
inline std::vector<double> skeleton_arc_length(const BinaryMask& skeleton, Pixel source) {
  std::vector<double> dist(skeleton.size(), std::numeric_limits<double>::infinity());
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  dist[skeleton.index(source)] = 0;
  queue.push({0.0, skeleton.index(source)});
  while (!queue.empty()) {
    const auto [d, i] = queue.top();
    queue.pop();
    if (d > dist[i]) continue;
    const Pixel p = skeleton.pixel_at(i);
    for (const Pixel off : kNeighbors8) {
      const Pixel q{p.row + off.row, p.col + off.col};
      if (!skeleton.contains(q) || !skeleton[q]) continue;
      const double step = (off.row != 0 && off.col != 0) ? std::sqrt(2.0) : 1.0;
      const std::size_t qi = skeleton.index(q);
      if (d + step < dist[qi]) {
        dist[qi] = d + step;
        queue.push({dist[qi], qi});
      }
    }
  }
  return dist;
}

inline LineFit fit_line(const std::vector<Pixel>& pixels, Pixel tip, Pixel fallback_direction) {
  double mr = 0, mc = 0;
  for (const Pixel p : pixels) {
    mr += p.row;
    mc += p.col;
  }
  mr /= static_cast<double>(pixels.size());
  mc /= static_cast<double>(pixels.size());
  double srr = 0, scc = 0, src = 0;
  for (const Pixel p : pixels) {
    const double dr = p.row - mr, dc = p.col - mc;
    srr += dr * dr;
    scc += dc * dc;
    src += dr * dc;
  }
  LineFit fit{mr, mc, 0, 0};
  if (srr + scc == 0) {
    fit.dir_row = fallback_direction.row;
    fit.dir_col = fallback_direction.col;
    return fit;
  }
  // Principal axis of the 2x2 scatter matrix.
  const double theta = 0.5 * std::atan2(2.0 * src, scc - srr);
  fit.dir_col = std::cos(theta);
  fit.dir_row = std::sin(theta);
  double outward = (tip.row - mr) * fit.dir_row + (tip.col - mc) * fit.dir_col;
  if (outward == 0) outward = fallback_direction.row * fit.dir_row + fallback_direction.col * fit.dir_col;
  if (outward < 0) {
    fit.dir_row = -fit.dir_row;
    fit.dir_col = -fit.dir_col;
  }
  return fit;
}

inline void stamp_disc(BinaryMask& m, Pixel center, int width) {
  const double radius = width / 2.0;
  const int reach = static_cast<int>(std::floor(radius));
  for (int dr = -reach; dr <= reach; ++dr)
    for (int dc = -reach; dc <= reach; ++dc) {
      if (dr * dr + dc * dc > radius * radius) continue;
      const Pixel q{center.row + dr, center.col + dc};
      if (m.contains(q)) m[q] = 1;
    }
}

enum class Border { Left, Bottom };

/// Draws the fitted line from `tip` outward until its centre pixel lands on
/// the required border. Throws if the line leaves the raster elsewhere.
inline void extend_to_border(BinaryMask& m, Pixel tip, const LineFit& fit, int width, Border border) {
  const double step = 0.25;
  const int max_steps = 4 * 4 * (m.width() + m.height());
  for (int i = 0; i <= max_steps; ++i) {
    const double t = i * step;
    const Pixel center{static_cast<int>(std::lround(tip.row + t * fit.dir_row)),
                       static_cast<int>(std::lround(tip.col + t * fit.dir_col))};
    if (!m.contains(center)) break;
    stamp_disc(m, center, width);
    if ((border == Border::Left && center.col == 0) ||
        (border == Border::Bottom && center.row == m.height() - 1)) {
      return;
    }
  }
  throw Error(ErrorKind::ExtrapolationDiverged,
              std::string("fitted line leaves the image before reaching the ") +
                  (border == Border::Left ? "first column" : "last row"));
}

}  // namespace detail

/// Orders two skeleton end points as (start, end): the start is the one with
/// the smaller column (toward the first column), ties by row.
inline std::pair<Pixel, Pixel> order_endpoints(Pixel a, Pixel b) {
  if (std::pair{b.col, b.row} < std::pair{a.col, a.row}) std::swap(a, b);
  return {a, b};
}

/// Completes an edge mask that stops short of the first column and/or the
/// last row by extrapolating a line fitted to the last `arc_distance` pixels
/// of its skeleton.
inline CompletionResult complete_mask_detailed(const BinaryMask& mask, const CompletionParams& params = {}) {
  if (!(params.arc_distance >= 2)) throw Error(ErrorKind::BadSpec, "arc distance must be at least 2");
  CompletionResult result{mask, false, false, 0, false, std::nullopt, std::nullopt};
  const BorderContact contact = is_disconnected(mask);
  if (!contact.left_short && !contact.right_short) return result;

  const SkeletonInfo skel = skeletonize(mask);
  if (skel.endpoints.size() != 2) {
    throw Error(ErrorKind::AmbiguousSkeleton,
                "skeleton has " + std::to_string(skel.endpoints.size()) + " end points, expected 2");
  }
  const auto [start, end] = order_endpoints(skel.endpoints[0], skel.endpoints[1]);
  const std::size_t skeleton_pixels = count_true(skel.skeleton);
  result.stroke_width = std::max(
      1, static_cast<int>(std::lround(static_cast<double>(count_true(mask)) / static_cast<double>(skeleton_pixels))));

  auto fit_from = [&](Pixel tip, Pixel fallback) {
    const std::vector<double> arc = detail::skeleton_arc_length(skel.skeleton, tip);
    std::vector<Pixel> walked;
    double reach = 0;
    for (std::size_t i = 0; i < arc.size(); ++i) {
      if (!std::isfinite(arc[i])) continue;
      reach = std::max(reach, arc[i]);
      if (arc[i] <= params.arc_distance) walked.push_back(mask.pixel_at(i));
    }
    if (reach < params.arc_distance) result.short_skeleton = true;
    return detail::fit_line(walked, tip, fallback);
  };

  if (contact.left_short) {
    result.left_fit = fit_from(start, Pixel{0, -1});
    detail::extend_to_border(result.mask, start, *result.left_fit, result.stroke_width, detail::Border::Left);
    result.extended_left = true;
  }
  if (contact.right_short) {
    result.bottom_fit = fit_from(end, Pixel{1, 0});
    detail::extend_to_border(result.mask, end, *result.bottom_fit, result.stroke_width, detail::Border::Bottom);
    result.extended_bottom = true;
  }
  return result;
}

inline BinaryMask complete_mask(const BinaryMask& mask, const CompletionParams& params = {}) {
  return complete_mask_detailed(mask, params).mask;
}

}  // namespace pectoral
