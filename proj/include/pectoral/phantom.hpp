#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "pectoral/boundary_graph.hpp"
#include "pectoral/error.hpp"
#include "pectoral/pipeline.hpp"
#include "pectoral/raster.hpp"

namespace pectoral {

// ---------------------------------------------------------------------------
// Portable random numbers
// ---------------------------------------------------------------------------

/// Platform-independent random source. std::mt19937_64 has a sequence fixed
/// by the standard; the conversions below avoid the implementation-defined
/// standard distributions so corpora are identical on every toolchain.
class PortableRng {
 public:
  explicit PortableRng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [lo, hi].
  int uniform_int(int lo, int hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(engine_() % span);
  }
  /// Standard normal via Box-Muller (one value per call).
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

 private:
  std::mt19937_64 engine_;
};

/// SplitMix64 finalizer; derives independent per-item seeds from a corpus seed.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// ---------------------------------------------------------------------------
// Phantom specification
// ---------------------------------------------------------------------------

enum class Scenario { Clean, Truncated, LowContrast, Cluttered };

inline std::string_view to_string(Scenario s) {
  switch (s) {
    case Scenario::Clean: return "clean";
    case Scenario::Truncated: return "truncated";
    case Scenario::LowContrast: return "low-contrast";
    case Scenario::Cluttered: return "cluttered";
  }
  return "clean";
}

inline std::optional<Scenario> parse_scenario(std::string_view name) {
  for (auto s : {Scenario::Clean, Scenario::Truncated, Scenario::LowContrast, Scenario::Cluttered})
    if (to_string(s) == name) return s;
  return std::nullopt;
}

/// Pectoral boundary, canonical frame, parameterized by s in [0,1]:
///   col(s) = bottom_col * s
///   row(s) = top_row + (size - 1 - top_row) * s + bend * s * (1 - s)
/// so row is a quadratic function of col running from (top_row, 0) to
/// (size - 1, bottom_col). Monotone iff |bend| < size - 1 - top_row.
struct BoundaryModel {
  double top_row = 70;
  double bottom_col = 80;
  double bend = 0;
};

struct Contrast {
  int background = 0;
  int tissue = 110;
  int pectoral = 200;
};

enum class TruncationSides { Both, Start, End };

struct PhantomSpec {
  std::uint64_t seed = 0;
  int size = 256;
  BoundaryModel boundary;
  Contrast contrast;
  /// Std. dev. of the Gaussian texture added to tissue and muscle.
  double texture_sigma = 6.0;
  /// Breast/air interface: half-ellipse centred on the first column.
  double breast_center_row = 90;
  double breast_semi_rows = 205;
  double breast_semi_cols = 225;
  double clutter_density = 0.0;
  /// Fraction of the boundary removed from OUT2 at each truncated end.
  double out2_truncation = 0.0;
  TruncationSides truncation_sides = TruncationSides::Both;
  /// Gaussian profile width of the OUT2 band, pixels.
  double out2_blur_radius = 3.0;
  /// Multiplicative speckle on the OUT1 ridge, in [0,1].
  double out1_noise_level = 0.0;
};

struct Phantom {
  GrayImage image;
  PixelPath gt_boundary;
  BinaryMask gt_foreground;
  BinaryMask gt_pectoral;
  BinaryMask gt_breast;
  EdgeProbMap out1;
  EdgeProbMap out2;
};

/// Canonical parameter draw for a scenario.
inline PhantomSpec make_spec(Scenario scenario, std::uint64_t seed, int size = 256) {
  PortableRng rng(seed);
  const double n = size;
  PhantomSpec s;
  s.seed = seed;
  s.size = size;
  s.boundary.top_row = rng.uniform(0.16, 0.36) * n;
  s.boundary.bottom_col = rng.uniform(0.20, 0.38) * n;
  s.boundary.bend = rng.uniform(-0.3, 0.3) * (n - 1 - s.boundary.top_row);
  s.contrast.tissue = rng.uniform_int(100, 130);
  s.contrast.pectoral = rng.uniform_int(185, 215);
  s.breast_center_row = rng.uniform(0.32, 0.38) * n;
  s.breast_semi_rows = rng.uniform(0.78, 0.85) * n;
  s.breast_semi_cols = rng.uniform(0.80, 0.92) * n;
  s.out2_blur_radius = rng.uniform(2.5, 3.5);
  s.out1_noise_level = rng.uniform(0.0, 0.2);
  switch (scenario) {
    case Scenario::Clean: break;
    case Scenario::Truncated: s.out2_truncation = rng.uniform(0.15, 0.35); break;
    case Scenario::LowContrast:
      s.contrast.pectoral = s.contrast.tissue + rng.uniform_int(20, 30);
      s.texture_sigma = 8.0;
      break;
    case Scenario::Cluttered: s.clutter_density = rng.uniform(0.3, 0.7); break;
  }
  return s;
}

/// key=value record of a spec, written next to each generated phantom.
inline std::string to_text(const PhantomSpec& s) {
  std::ostringstream out;
  out.precision(17);
  out << "seed=" << s.seed << '\n'
      << "size=" << s.size << '\n'
      << "boundary.top_row=" << s.boundary.top_row << '\n'
      << "boundary.bottom_col=" << s.boundary.bottom_col << '\n'
      << "boundary.bend=" << s.boundary.bend << '\n'
      << "contrast.background=" << s.contrast.background << '\n'
      << "contrast.tissue=" << s.contrast.tissue << '\n'
      << "contrast.pectoral=" << s.contrast.pectoral << '\n'
      << "texture_sigma=" << s.texture_sigma << '\n'
      << "breast.center_row=" << s.breast_center_row << '\n'
      << "breast.semi_rows=" << s.breast_semi_rows << '\n'
      << "breast.semi_cols=" << s.breast_semi_cols << '\n'
      << "clutter_density=" << s.clutter_density << '\n'
      << "out2_truncation=" << s.out2_truncation << '\n'
      << "out2_blur_radius=" << s.out2_blur_radius << '\n'
      << "out1_noise_level=" << s.out1_noise_level << '\n';
  return out.str();
}

namespace detail {

inline void validate(const PhantomSpec& s) {
  auto bad = [](const std::string& msg) { throw Error(ErrorKind::BadSpec, msg); };
  if (s.size < kMinImageSide) bad("size must be at least 16");
  const double last = s.size - 1;
  if (!(s.boundary.top_row >= 0 && s.boundary.top_row < last)) bad("top_row must lie in [0, size-1)");
  if (!(s.boundary.bottom_col > 0 && s.boundary.bottom_col <= last)) bad("bottom_col must lie in (0, size-1]");
  if (!(std::abs(s.boundary.bend) < last - s.boundary.top_row)) bad("boundary curve is not monotone");
  const Contrast& c = s.contrast;
  if (!(c.background >= 0 && c.background < c.tissue && c.tissue <= c.pectoral && c.pectoral <= 255)) {
    bad("intensities must satisfy background < tissue <= pectoral <= 255");
  }
  if (!(s.out2_truncation >= 0 && s.out2_truncation <= 0.4)) bad("out2_truncation must lie in [0, 0.4]");
  if (!(s.clutter_density >= 0 && s.clutter_density <= 1)) bad("clutter_density must lie in [0, 1]");
  if (!(s.out1_noise_level >= 0 && s.out1_noise_level <= 1)) bad("out1_noise_level must lie in [0, 1]");
  if (!(s.out2_blur_radius > 0)) bad("out2_blur_radius must be positive");
  if (!(s.texture_sigma >= 0)) bad("texture_sigma must be non-negative");
}

/// 8-connected, monotone rasterization of the boundary curve without
/// redundant corner pixels.
inline std::vector<Pixel> rasterize_boundary(const PhantomSpec& s) {
  const double last = s.size - 1;
  const BoundaryModel& b = s.boundary;
  const int samples = 8 * s.size;
  std::vector<Pixel> raw;
  for (int i = 0; i <= samples; ++i) {
    const double t = static_cast<double>(i) / samples;
    const double row = b.top_row + (last - b.top_row) * t + b.bend * t * (1 - t);
    const double col = b.bottom_col * t;
    const Pixel p{static_cast<int>(std::lround(row)), static_cast<int>(std::lround(col))};
    if (raw.empty()) {
      raw.push_back(p);
      continue;
    }
    // Fill any gap with unit steps (rows and columns only ever increase).
    while (raw.back() != p) {
      Pixel q = raw.back();
      if (q.row < p.row) ++q.row;
      if (q.col < p.col) ++q.col;
      raw.push_back(q);
    }
  }
  std::vector<Pixel> out;
  for (const Pixel p : raw) {
    while (out.size() >= 2 && are_8_neighbors(out[out.size() - 2], p)) out.pop_back();
    out.push_back(p);
  }
  return out;
}

/// For each pixel, max over `nodes` of exp(-d^2 / (2 sigma^2)), evaluated
/// within `reach` pixels; untouched pixels stay 0.
inline void stamp_gaussian_ridge(EdgeProbMap& map, const std::vector<Pixel>& nodes, double sigma, double reach) {
  const int r = static_cast<int>(std::floor(reach));
  for (const Pixel p : nodes)
    for (int dr = -r; dr <= r; ++dr)
      for (int dc = -r; dc <= r; ++dc) {
        const double d2 = dr * dr + dc * dc;
        if (d2 > reach * reach) continue;
        const Pixel q{p.row + dr, p.col + dc};
        if (!map.contains(q)) continue;
        map[q] = std::max(map[q], static_cast<float>(std::exp(-d2 / (2 * sigma * sigma))));
      }
}

inline void stamp_blob(EdgeProbMap& map, double row, double col, double sigma, double amplitude) {
  const int reach = static_cast<int>(std::ceil(3 * sigma));
  const int r0 = static_cast<int>(std::lround(row));
  const int c0 = static_cast<int>(std::lround(col));
  for (int r = r0 - reach; r <= r0 + reach; ++r)
    for (int c = c0 - reach; c <= c0 + reach; ++c) {
      if (!map.contains({r, c})) continue;
      const double d2 = (r - row) * (r - row) + (c - col) * (c - col);
      const auto v = static_cast<float>(amplitude * std::exp(-d2 / (2 * sigma * sigma)));
      map(r, c) = std::max(map(r, c), v);
    }
}

}  // namespace detail

/// Synthetic MLO-like phantom in the canonical frame (muscle at lower left),
/// with exact ground truth. Pure function of `spec`.
inline Phantom generate(const PhantomSpec& spec) {
  detail::validate(spec);
  const int n = spec.size;
  PortableRng rng(mix_seed(spec.seed, 0xF00D));

  Phantom ph;
  ph.gt_boundary.nodes = detail::rasterize_boundary(spec);
  ph.gt_pectoral = mask_from_boundary(ph.gt_boundary, n, n).pectoral;

  ph.gt_foreground = BinaryMask(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      const double u = c / spec.breast_semi_cols;
      const double v = (r - spec.breast_center_row) / spec.breast_semi_rows;
      ph.gt_foreground(r, c) = u * u + v * v <= 1.0;
    }
  for (std::size_t i = 0; i < ph.gt_pectoral.size(); ++i) {
    if (ph.gt_pectoral.data()[i] && !ph.gt_foreground.data()[i]) {
      throw Error(ErrorKind::BadSpec, "pectoral region extends outside the breast outline");
    }
  }
  ph.gt_breast = BinaryMask(n, n);
  for (std::size_t i = 0; i < ph.gt_breast.size(); ++i)
    ph.gt_breast.data()[i] = ph.gt_foreground.data()[i] && !ph.gt_pectoral.data()[i];

  // Clutter: dense-tissue blobs inside the breast, away from the muscle.
  struct Blob {
    double row, col, sigma, amplitude;
  };
  std::vector<Blob> blobs;
  const int blob_count = static_cast<int>(std::lround(spec.clutter_density * 40));
  while (static_cast<int>(blobs.size()) < blob_count) {
    const double row = rng.uniform(0, n - 1);
    const double col = rng.uniform(0, n - 1);
    const Pixel p{static_cast<int>(row), static_cast<int>(col)};
    const double sigma = rng.uniform(1.5, 4.0);
    const double amplitude = rng.uniform(0.3, 0.9);
    if (!ph.gt_breast[p]) continue;
    blobs.push_back({row, col, sigma, amplitude});
  }

  // Image: flat background, textured tissue and muscle, brighter where the
  // clutter blobs sit.
  const Contrast& c = spec.contrast;
  const double tissue_floor = std::max(c.background + 1.0, c.tissue - 3 * spec.texture_sigma);
  ph.image = GrayImage(n, n, static_cast<std::uint8_t>(c.background));
  EdgeProbMap density(n, n);
  for (const Blob& b : blobs) detail::stamp_blob(density, b.row, b.col, b.sigma * 2, 1.0);
  for (int r = 0; r < n; ++r)
    for (int col = 0; col < n; ++col) {
      if (!ph.gt_foreground(r, col)) continue;
      const double base = ph.gt_pectoral(r, col) ? c.pectoral : c.tissue + 40.0 * density(r, col);
      const double value = std::clamp(base + spec.texture_sigma * rng.normal(), tissue_floor, 255.0);
      ph.image(r, col) = static_cast<std::uint8_t>(std::lround(value));
    }

  // OUT1: thin ridge on the full boundary plus clutter responses.
  ph.out1 = EdgeProbMap(n, n);
  detail::stamp_gaussian_ridge(ph.out1, ph.gt_boundary.nodes, 0.8, 2.0);
  for (float& v : ph.out1.data())
    if (v > 0) v *= static_cast<float>(1.0 - spec.out1_noise_level * rng.uniform());
  for (const Blob& b : blobs) detail::stamp_blob(ph.out1, b.row, b.col, b.sigma, b.amplitude);

  // OUT2: wide smooth band on the (possibly truncated) boundary.
  const auto& nodes = ph.gt_boundary.nodes;
  const auto cut = static_cast<std::size_t>(std::floor(spec.out2_truncation * static_cast<double>(nodes.size())));
  const std::size_t first = spec.truncation_sides == TruncationSides::End ? 0 : cut;
  const std::size_t last = nodes.size() - (spec.truncation_sides == TruncationSides::Start ? 0 : cut);
  const std::vector<Pixel> kept(nodes.begin() + static_cast<std::ptrdiff_t>(first),
                                nodes.begin() + static_cast<std::ptrdiff_t>(last));
  ph.out2 = EdgeProbMap(n, n);
  const double sigma2 = spec.out2_blur_radius;
  detail::stamp_gaussian_ridge(ph.out2, kept, sigma2, 3.5 * sigma2);
  if (spec.clutter_density > 0) {
    // The coarse map sees only a faint echo of the strongest blobs.
    for (const Blob& b : blobs)
      if (b.amplitude > 0.7) detail::stamp_blob(ph.out2, b.row, b.col, b.sigma, 0.5 * b.amplitude);
  }
  return ph;
}

/// Mean and maximum, over estimated nodes, of the distance to the nearest
/// ground-truth node.
struct BoundaryDistance {
  double mean = 0;
  double max = 0;
};

inline BoundaryDistance boundary_distance(const PixelPath& est, const PixelPath& gt) {
  if (est.nodes.empty() || gt.nodes.empty()) throw Error(ErrorKind::InsufficientData, "empty path");
  std::vector<Pixel> sorted = gt.nodes;
  std::sort(sorted.begin(), sorted.end());
  BoundaryDistance out;
  double sum = 0;
  for (const Pixel p : est.nodes) {
    double best = std::numeric_limits<double>::infinity();
    // Scan outward by row from p and stop once the row gap alone exceeds the best distance.
    const auto mid = std::lower_bound(sorted.begin(), sorted.end(), Pixel{p.row, std::numeric_limits<int>::min()});
    for (auto it = mid; it != sorted.end(); ++it) {
      const double dr = it->row - p.row;
      if (dr * dr > best) break;
      const double dc = it->col - p.col;
      best = std::min(best, dr * dr + dc * dc);
    }
    for (auto it = mid; it != sorted.begin();) {
      --it;
      const double dr = it->row - p.row;
      if (dr * dr > best) break;
      const double dc = it->col - p.col;
      best = std::min(best, dr * dr + dc * dc);
    }
    const double d = std::sqrt(best);
    sum += d;
    out.max = std::max(out.max, d);
  }
  out.mean = sum / static_cast<double>(est.nodes.size());
  return out;
}

}  // namespace pectoral
