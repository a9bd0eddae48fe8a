#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "pectoral/error.hpp"
#include "pectoral/raster.hpp"

namespace pectoral {

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;

  std::uint64_t area() const noexcept { return tp + tn + fp + fn; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// Pixelwise agreement of an estimated mask with its ground truth.
inline ConfusionCounts confusion(const BinaryMask& estimate, const BinaryMask& truth) {
  require_same_shape(estimate, truth, "estimate and ground truth");
  ConfusionCounts c;
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    const bool e = estimate.data()[i] != 0;
    const bool t = truth.data()[i] != 0;
    c.tp += e && t;
    c.fp += e && !t;
    c.fn += !e && t;
    c.tn += !e && !t;
  }
  return c;
}

struct MetricsReport {
  double dsc = 0;
  double jac = 0;
  double spe = 0;
  double sen = 0;
  double acc = 0;
  double fpr = 0;
  double fnr = 0;
  ConfusionCounts counts;
};

inline constexpr std::array<std::string_view, 7> kMetricNames = {"dsc", "jac", "spe", "sen", "acc", "fpr", "fnr"};

inline std::array<double, 7> metric_values(const MetricsReport& r) {
  return {r.dsc, r.jac, r.spe, r.sen, r.acc, r.fpr, r.fnr};
}

/// All seven overlap metrics. Metrics whose denominator is zero are not
/// fabricated: the call fails and names them.
inline MetricsReport compute_metrics(const ConfusionCounts& c) {
  std::string undefined;
  auto mark = [&](const char* name) {
    if (!undefined.empty()) undefined += ", ";
    undefined += name;
  };
  const std::uint64_t positives = c.tp + c.fn;
  const std::uint64_t negatives = c.tn + c.fp;
  const std::uint64_t union_size = c.tp + c.fp + c.fn;
  if (union_size == 0) {
    mark("DSC");
    mark("JAC");
  }
  if (negatives == 0) {
    mark("SPE");
    mark("FPR");
  }
  if (positives == 0) {
    mark("SEN");
    mark("FNR");
  }
  if (c.area() == 0) mark("ACC");
  if (!undefined.empty()) throw Error(ErrorKind::UndefinedMetric, "zero denominator for " + undefined);

  const auto d = [](std::uint64_t v) { return static_cast<double>(v); };
  MetricsReport r;
  r.counts = c;
  r.dsc = 2.0 * d(c.tp) / (2.0 * d(c.tp) + d(c.fp) + d(c.fn));
  r.jac = d(c.tp) / d(union_size);
  r.spe = d(c.tn) / d(negatives);
  r.sen = d(c.tp) / d(positives);
  r.acc = d(c.tp + c.tn) / d(c.area());
  r.fpr = d(c.fp) / d(negatives);
  r.fnr = d(c.fn) / d(positives);
  return r;
}

struct MeanStd {
  double mean = 0;
  double stddev = 0;
};

/// Per-metric mean and sample standard deviation, in kMetricNames order.
struct MetricsSummary {
  std::array<MeanStd, 7> metrics{};
  std::size_t count = 0;

  const MeanStd& operator[](std::size_t i) const { return metrics[i]; }
};

/// Dataset-level aggregation (Welford's running update).
inline MetricsSummary aggregate(const std::vector<MetricsReport>& reports) {
  if (reports.size() < 2) throw Error(ErrorKind::InsufficientData, "aggregation needs at least two reports");
  MetricsSummary out;
  out.count = reports.size();
  std::array<double, 7> mean{};
  std::array<double, 7> m2{};
  double n = 0;
  for (const auto& report : reports) {
    n += 1;
    const auto values = metric_values(report);
    for (std::size_t k = 0; k < 7; ++k) {
      const double delta = values[k] - mean[k];
      mean[k] += delta / n;
      m2[k] += delta * (values[k] - mean[k]);
    }
  }
  for (std::size_t k = 0; k < 7; ++k) {
    out.metrics[k].mean = mean[k];
    out.metrics[k].stddev = std::sqrt(std::max(0.0, m2[k]) / (n - 1));
  }
  return out;
}

}  // namespace pectoral
