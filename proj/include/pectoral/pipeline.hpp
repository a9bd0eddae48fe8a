#pragma once

#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "pectoral/boundary_graph.hpp"
#include "pectoral/error.hpp"
#include "pectoral/morphology.hpp"
#include "pectoral/raster.hpp"
#include "pectoral/raster_io.hpp"

namespace pectoral {

enum class FusionSource { Out2, Out1 };

struct PipelineConfig {
  FusionSource fusion_source = FusionSource::Out2;
  CompletionParams completion;
  GraphConfig graph;
  /// Replaces the Otsu threshold when set; must lie in [0,1].
  std::optional<float> threshold_override;
};

// ---------------------------------------------------------------------------
// Fusion
// ---------------------------------------------------------------------------

namespace detail {

inline const EdgeProbMap& fusion_map(const EdgeProbMap& out1, const EdgeProbMap& out2, const PipelineConfig& cfg) {
  return cfg.fusion_source == FusionSource::Out1 ? out1 : out2;
}

}  // namespace detail

/// M = B * source, pointwise.
inline EdgeProbMap fuse(const BinaryMask& b, const EdgeProbMap& out1, const EdgeProbMap& out2,
                        const PipelineConfig& cfg = {}) {
  require_same_shape(b, out1, "mask and OUT1");
  require_same_shape(b, out2, "mask and OUT2");
  const EdgeProbMap& source = detail::fusion_map(out1, out2, cfg);
  EdgeProbMap m(b.width(), b.height());
  for (std::size_t i = 0; i < b.size(); ++i) m.data()[i] = b.data()[i] ? source.data()[i] : 0.0f;
  return m;
}

/// Fusion for a completed mask: pixels of `b` outside `original` (those added
/// by extrapolation) take the mean source value over `original`.
inline EdgeProbMap fuse(const BinaryMask& b, const BinaryMask& original, const EdgeProbMap& out1,
                        const EdgeProbMap& out2, const PipelineConfig& cfg = {}) {
  require_same_shape(b, original, "mask and original component");
  EdgeProbMap m = fuse(b, out1, out2, cfg);
  const EdgeProbMap& source = detail::fusion_map(out1, out2, cfg);
  double sum = 0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (original.data()[i]) {
      sum += source.data()[i];
      ++count;
    }
  }
  const float fill = count ? static_cast<float>(sum / static_cast<double>(count)) : 0.0f;
  for (std::size_t i = 0; i < b.size(); ++i)
    if (b.data()[i] && !original.data()[i]) m.data()[i] = fill;
  return m;
}

// ---------------------------------------------------------------------------
// Region masks
// ---------------------------------------------------------------------------

struct RegionMasks {
  BinaryMask pectoral;
  BinaryMask breast_region;
};

/// Splits the canonical frame along a boundary running from the first column
/// to the last row. The pectoral side is everything 4-connected to the
/// lower-left corner without crossing the path, plus the path itself.
inline RegionMasks mask_from_boundary(const PixelPath& path, int width, int height) {
  BinaryMask barrier(width, height);
  bool touches_left = false;
  bool touches_bottom = false;
  for (const Pixel p : path.nodes) {
    if (!barrier.contains(p)) throw Error(ErrorKind::Shape, "boundary node outside the raster");
    barrier[p] = 1;
    touches_left |= p.col == 0;
    touches_bottom |= p.row == height - 1;
  }
  if (!touches_left || !touches_bottom) {
    throw Error(ErrorKind::OpenBoundary, std::string("boundary does not reach the ") +
                                             (!touches_left ? "first column" : "last row"));
  }
  BinaryMask pectoral = barrier;
  const Pixel corner{height - 1, 0};
  if (!barrier[corner]) {
    std::vector<Pixel> stack{corner};
    pectoral[corner] = 1;
    while (!stack.empty()) {
      const Pixel p = stack.back();
      stack.pop_back();
      for (const Pixel d : kNeighbors4) {
        const Pixel q{p.row + d.row, p.col + d.col};
        if (pectoral.contains(q) && !pectoral[q]) {
          pectoral[q] = 1;
          stack.push_back(q);
        }
      }
    }
  }
  BinaryMask breast(width, height);
  for (std::size_t i = 0; i < breast.size(); ++i) breast.data()[i] = !pectoral.data()[i];
  return {std::move(pectoral), std::move(breast)};
}

/// Sets background pixels that are not 4-connected to the raster border.
inline BinaryMask fill_holes(const BinaryMask& mask) {
  BinaryMask outside(mask.width(), mask.height());
  std::vector<Pixel> stack;
  auto seed = [&](Pixel p) {
    if (!mask[p] && !outside[p]) {
      outside[p] = 1;
      stack.push_back(p);
    }
  };
  for (int r = 0; r < mask.height(); ++r) {
    seed({r, 0});
    seed({r, mask.width() - 1});
  }
  for (int c = 0; c < mask.width(); ++c) {
    seed({0, c});
    seed({mask.height() - 1, c});
  }
  while (!stack.empty()) {
    const Pixel p = stack.back();
    stack.pop_back();
    for (const Pixel d : kNeighbors4) {
      const Pixel q{p.row + d.row, p.col + d.col};
      if (mask.contains(q)) seed(q);
    }
  }
  BinaryMask out(mask.width(), mask.height());
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = !outside.data()[i];
  return out;
}

/// Breast/air separation: Otsu on the intensity histogram, largest component,
/// holes filled.
inline BinaryMask breast_foreground(const GrayImage& image) {
  Histogram hist{};
  for (auto v : image.data()) ++hist[v];
  const auto k = otsu_bin(hist);
  if (!k) throw Error(ErrorKind::DegenerateHistogram, "image has a single intensity");
  BinaryMask fg(image.width(), image.height());
  for (std::size_t i = 0; i < fg.size(); ++i) fg.data()[i] = image.data()[i] > *k;
  return fill_holes(longest_component(fg));
}

// ---------------------------------------------------------------------------
// End-to-end segmentation
// ---------------------------------------------------------------------------

struct RunReport {
  Orientation orientation;
  float threshold = 0;
  bool threshold_overridden = false;
  std::size_t component_pixels = 0;
  /// Border contact of the pruned component, before completion.
  BorderContact contact;
  bool completed_left = false;
  bool completed_bottom = false;
  int stroke_width = 0;
  bool short_skeleton = false;
  /// Terminals in the original image frame.
  Pixel start;
  Pixel end;
  std::size_t path_nodes = 0;
  double path_cost = 0;

  bool completion_applied() const { return completed_left || completed_bottom; }
};

struct SegmentationResult {
  /// Boundary from start to end, original image frame.
  PixelPath boundary;
  BinaryMask pectoral_mask;
  /// Breast foreground minus the pectoral region.
  BinaryMask breast_mask;
  RunReport report;
};

namespace detail {

template <typename Fn>
auto run_stage(const char* stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    if (!e.stage().empty()) throw;
    throw e.with_stage(stage);
  }
}

}  // namespace detail

/// Reorient, threshold OUT2, prune to the longest component, complete it if
/// it stops short of a border, fuse, find the minimal path between skeleton
/// end points, and turn it into masks in the original frame.
inline SegmentationResult segment(const GrayImage& image, const EdgeProbMap& out1, const EdgeProbMap& out2,
                                  const PipelineConfig& cfg = {}) {
  detail::run_stage("input", [&] {
    require_same_shape(image, out1, "image and OUT1");
    require_same_shape(image, out2, "image and OUT2");
    if (image.width() < kMinImageSide || image.height() < kMinImageSide) {
      throw Error(ErrorKind::Shape, "image must be at least 16x16");
    }
    if (cfg.threshold_override && !(*cfg.threshold_override >= 0.0f && *cfg.threshold_override <= 1.0f)) {
      throw Error(ErrorKind::BadSpec, "threshold override outside [0,1]");
    }
    return 0;
  });
  const int width = image.width();
  const int height = image.height();

  RunReport report;
  report.orientation = detail::run_stage("orient", [&] { return detect_orientation(image); });
  const Orientation o = report.orientation;
  const GrayImage canon_image = apply_orientation(image, o);
  const EdgeProbMap canon_out1 = apply_orientation(out1, o);
  const EdgeProbMap canon_out2 = apply_orientation(out2, o);

  report.threshold_overridden = cfg.threshold_override.has_value();
  report.threshold = detail::run_stage("threshold", [&] {
    return cfg.threshold_override ? *cfg.threshold_override : otsu_threshold(canon_out2);
  });
  const BinaryMask component =
      detail::run_stage("prune", [&] { return longest_component(binarize(canon_out2, report.threshold)); });
  report.component_pixels = count_true(component);
  report.contact = is_disconnected(component);

  const CompletionResult completion =
      detail::run_stage("complete", [&] { return complete_mask_detailed(component, cfg.completion); });
  report.completed_left = completion.extended_left;
  report.completed_bottom = completion.extended_bottom;
  report.stroke_width = completion.stroke_width;
  report.short_skeleton = completion.short_skeleton;
  const BinaryMask& b = completion.mask;

  const EdgeProbMap fused = detail::run_stage("fuse", [&] {
    return report.completion_applied() ? fuse(b, component, canon_out1, canon_out2, cfg)
                                       : fuse(b, canon_out1, canon_out2, cfg);
  });
  const auto [start, end] = detail::run_stage("terminals", [&] { return select_terminals(b); });
  PixelPath path = detail::run_stage("path", [&] { return shortest_path(fused, b, start, end, cfg.graph); });
  const RegionMasks regions = detail::run_stage("mask", [&] { return mask_from_boundary(path, width, height); });
  const BinaryMask foreground = detail::run_stage("foreground", [&] { return breast_foreground(canon_image); });

  BinaryMask breast(width, height);
  for (std::size_t i = 0; i < breast.size(); ++i)
    breast.data()[i] = foreground.data()[i] && !regions.pectoral.data()[i];

  report.start = apply_orientation(start, o, width, height);
  report.end = apply_orientation(end, o, width, height);
  report.path_nodes = path.nodes.size();
  report.path_cost = path.total_cost;
  for (Pixel& p : path.nodes) p = apply_orientation(p, o, width, height);

  return {std::move(path), apply_orientation(regions.pectoral, o), apply_orientation(breast, o), report};
}

/// Plain-text key=value rendering of a run report.
inline std::string to_text(const RunReport& r) {
  std::ostringstream out;
  char buf[64];
  auto flag = [](bool v) { return v ? "1" : "0"; };
  out << "orientation.flip_horizontal=" << flag(r.orientation.flip_horizontal) << '\n';
  out << "orientation.flip_vertical=" << flag(r.orientation.flip_vertical) << '\n';
  std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(r.threshold));
  out << "threshold=" << buf << '\n';
  out << "threshold.source=" << (r.threshold_overridden ? "override" : "otsu") << '\n';
  out << "component.pixels=" << r.component_pixels << '\n';
  out << "component.left_short=" << flag(r.contact.left_short) << '\n';
  out << "component.bottom_short=" << flag(r.contact.right_short) << '\n';
  out << "completion.applied=" << flag(r.completion_applied()) << '\n';
  out << "completion.left=" << flag(r.completed_left) << '\n';
  out << "completion.bottom=" << flag(r.completed_bottom) << '\n';
  out << "completion.stroke_width=" << r.stroke_width << '\n';
  out << "completion.short_skeleton=" << flag(r.short_skeleton) << '\n';
  out << "terminals.start=" << r.start.row << ',' << r.start.col << '\n';
  out << "terminals.end=" << r.end.row << ',' << r.end.col << '\n';
  out << "path.nodes=" << r.path_nodes << '\n';
  std::snprintf(buf, sizeof buf, "%.6f", r.path_cost);
  out << "path.cost=" << buf << '\n';
  return out.str();
}

}  // namespace pectoral
