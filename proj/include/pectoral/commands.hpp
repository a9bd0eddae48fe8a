#pragma once

// Batch commands behind the `pectoral` executable. They take explicit
// streams and return process exit codes so they can be driven from tests.

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "pectoral/error.hpp"
#include "pectoral/metrics.hpp"
#include "pectoral/phantom.hpp"
#include "pectoral/pipeline.hpp"
#include "pectoral/raster_io.hpp"

namespace pectoral::cli {

namespace fs = std::filesystem;

enum ExitCode : int {
  kExitOk = 0,
  kExitFailures = 1,
  kExitUsage = 2,
};

/// Verbosity from BOUNDARY_PATH_LOG: 0 (default) errors only, 1 per-item
/// progress, 2 per-stage detail.
inline int log_level() {
  const char* v = std::getenv("BOUNDARY_PATH_LOG");
  if (!v || !*v) return 0;
  const std::string s(v);
  if (s == "debug") return 2;
  if (s == "info") return 1;
  if (s == "quiet" || s == "off") return 0;
  return std::atoi(v);
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

struct ManifestEntry {
  std::string id;
  fs::path image;
  fs::path out1;
  fs::path out2;
  std::optional<fs::path> ground_truth;
};

struct RunManifest {
  std::vector<ManifestEntry> entries;
  fs::path out_dir;
};

/// One entry per line: `<image.pgm> <out1.epm> <out2.epm> [<gt_breast.pgm>]`.
/// Blank lines and '#' comments are ignored; relative paths resolve against
/// the manifest's directory. Item ids are the image stems, or the image's
/// parent directory names when stems repeat.
inline RunManifest read_manifest(const fs::path& manifest_path, const fs::path& out_dir) {
  std::ifstream in(manifest_path);
  if (!in) throw Error(ErrorKind::Io, "cannot read manifest " + manifest_path.string());
  const fs::path base = manifest_path.parent_path();
  RunManifest manifest{{}, out_dir};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::vector<std::string> parts;
    for (std::string f; fields >> f;) parts.push_back(f);
    if (parts.empty()) continue;
    if (parts.size() < 3 || parts.size() > 4) {
      throw Error(ErrorKind::Format, manifest_path.string() + ":" + std::to_string(line_no) +
                                         ": expected 3 or 4 paths, got " + std::to_string(parts.size()));
    }
    auto resolve = [&](const std::string& p) {
      const fs::path path(p);
      return path.is_absolute() ? path : base / path;
    };
    ManifestEntry e{{}, resolve(parts[0]), resolve(parts[1]), resolve(parts[2]), std::nullopt};
    if (parts.size() == 4) e.ground_truth = resolve(parts[3]);
    for (const fs::path* p : {&e.image, &e.out1, &e.out2}) {
      if (!fs::exists(*p)) throw Error(ErrorKind::Io, "manifest references missing file " + p->string());
    }
    if (e.ground_truth && !fs::exists(*e.ground_truth)) {
      throw Error(ErrorKind::Io, "manifest references missing file " + e.ground_truth->string());
    }
    manifest.entries.push_back(std::move(e));
  }
  if (manifest.entries.empty()) throw Error(ErrorKind::Format, "manifest " + manifest_path.string() + " is empty");

  auto unique_ids = [&](auto&& key) {
    std::set<std::string> seen;
    for (const auto& e : manifest.entries)
      if (!seen.insert(key(e)).second) return false;
    return true;
  };
  auto by_stem = [](const ManifestEntry& e) { return e.image.stem().string(); };
  auto by_dir = [](const ManifestEntry& e) { return e.image.parent_path().filename().string(); };
  if (unique_ids(by_stem)) {
    for (auto& e : manifest.entries) e.id = by_stem(e);
  } else if (unique_ids(by_dir)) {
    for (auto& e : manifest.entries) e.id = by_dir(e);
  } else {
    throw Error(ErrorKind::Format, "cannot derive unique item ids from image stems or directories");
  }
  return manifest;
}

// ---------------------------------------------------------------------------
// segment
// ---------------------------------------------------------------------------

struct ItemOutcome {
  bool ok = false;
  std::string report;
  std::string failure;
};

/// Atomic text-file write.
inline void write_text(const fs::path& path, const std::string& text) {
  pectoral::detail::write_file_bytes(path, pectoral::detail::ascii_header(text));
}

namespace detail {

template <typename Fn>
auto read_input(const fs::path& path, Fn&& read) {
  try {
    return read(path);
  } catch (const Error& e) {
    throw Error(e.kind(), e.detail(), "read " + path.string());
  }
}

inline std::string format_double(double v, const char* fmt = "%.6f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

inline ItemOutcome segment_item(const ManifestEntry& e, const fs::path& out_dir, const PipelineConfig& cfg) {
  ItemOutcome outcome;
  std::string report = "id=" + e.id + "\n";
  try {
    const GrayImage image = read_input(e.image, [](const fs::path& p) { return read_gray_image(p); });
    const EdgeProbMap out1 = read_input(e.out1, [](const fs::path& p) { return read_prob_map(p); });
    const EdgeProbMap out2 = read_input(e.out2, [](const fs::path& p) { return read_prob_map(p); });
    const SegmentationResult result = segment(image, out1, out2, cfg);
    write_mask(out_dir / (e.id + ".breast.pgm"), result.breast_mask);
    write_mask(out_dir / (e.id + ".pectoral.pgm"), result.pectoral_mask);
    report += "status=ok\n" + to_text(result.report);
    if (e.ground_truth) {
      const BinaryMask truth = read_input(*e.ground_truth, [](const fs::path& p) { return read_mask(p); });
      const MetricsReport m = compute_metrics(confusion(result.breast_mask, truth));
      const auto values = metric_values(m);
      for (std::size_t k = 0; k < values.size(); ++k)
        report += "metrics." + std::string(kMetricNames[k]) + "=" + format_double(values[k]) + "\n";
    }
    report += "boundary=";
    for (std::size_t i = 0; i < result.boundary.nodes.size(); ++i) {
      if (i) report += ';';
      report += std::to_string(result.boundary.nodes[i].row) + "," + std::to_string(result.boundary.nodes[i].col);
    }
    report += "\n";
    outcome.ok = true;
  } catch (const Error& ex) {
    const std::string stage = ex.stage().empty() ? "unknown" : ex.stage();
    report += "status=failed\nstage=" + stage + "\nerror=" + std::string(to_string(ex.kind())) + "\nmessage=" +
              ex.detail() + "\n";
    outcome.failure = e.id + " (" + e.image.string() + "): stage=" + stage + ": " + ex.what();
  }
  outcome.report = report;
  try {
    write_text(out_dir / (e.id + ".report.txt"), report);
  } catch (const Error& ex) {
    outcome.ok = false;
    outcome.failure = e.id + ": cannot write report: " + ex.what();
  }
  return outcome;
}

}  // namespace detail

/// Runs the pipeline over every manifest item. A failing item never stops
/// the batch; the exit code is 1 if any item failed.
inline int cmd_segment(const RunManifest& manifest, const PipelineConfig& cfg, int jobs, std::ostream& log,
                       std::ostream& err) {
  if (manifest.entries.empty()) {
    err << "error: empty manifest\n";
    return kExitUsage;
  }
  std::error_code ec;
  fs::create_directories(manifest.out_dir, ec);
  if (ec) {
    err << "error: cannot create " << manifest.out_dir.string() << ": " << ec.message() << "\n";
    return kExitUsage;
  }
  std::vector<ItemOutcome> outcomes(manifest.entries.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < manifest.entries.size(); i = next++)
      outcomes[i] = detail::segment_item(manifest.entries[i], manifest.out_dir, cfg);
  };
  const int threads = std::max(1, std::min<int>(jobs, static_cast<int>(manifest.entries.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  const int level = log_level();
  std::size_t failures = 0;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (!outcomes[i].ok) {
      ++failures;
      err << "FAILED " << outcomes[i].failure << "\n";
    } else if (level >= 1) {
      log << "ok " << manifest.entries[i].id << "\n";
      if (level >= 2) log << outcomes[i].report;
    }
  }
  if (level >= 1 || failures) {
    log << (outcomes.size() - failures) << " of " << outcomes.size() << " items segmented\n";
  }
  return failures ? kExitFailures : kExitOk;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

struct EvaluationRow {
  std::string id;
  MetricsReport metrics;
};

inline std::string csv_header() { return "id,dsc,jac,spe,sen,acc,fpr,fnr,tp,tn,fp,fn"; }

inline std::string csv_row(const EvaluationRow& row) {
  std::string out = row.id;
  for (double v : metric_values(row.metrics)) out += "," + detail::format_double(v);
  const ConfusionCounts& c = row.metrics.counts;
  for (auto v : {c.tp, c.tn, c.fp, c.fn}) out += "," + std::to_string(v);
  return out;
}

/// Summary row: each metric as `mean+-stddev`; count columns left empty.
inline std::string csv_summary_row(const MetricsSummary& s) {
  std::string out = "summary";
  for (std::size_t k = 0; k < kMetricNames.size(); ++k)
    out += "," + detail::format_double(s[k].mean) + "+-" + detail::format_double(s[k].stddev);
  out += ",,,,";
  return out;
}

/// Predictions are `<id>.breast.pgm` in `pred_dir`; ground truths are either
/// `<id>/gt_breast.pgm` (synth layout) or `<id>.breast.pgm` in `gt_dir`.
inline std::map<std::string, fs::path> collect_masks(const fs::path& dir, bool accept_synth_layout) {
  std::map<std::string, fs::path> out;
  const std::string suffix = ".breast.pgm";
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && name.size() > suffix.size() &&
        name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) {
      out[name.substr(0, name.size() - suffix.size())] = entry.path();
    } else if (accept_synth_layout && entry.is_directory() && fs::exists(entry.path() / "gt_breast.pgm")) {
      out[name] = entry.path() / "gt_breast.pgm";
    }
  }
  return out;
}

inline int cmd_evaluate(const fs::path& pred_dir, const fs::path& gt_dir, const fs::path& csv_path,
                        std::ostream& out, std::ostream& err) {
  std::map<std::string, fs::path> preds, truths;
  try {
    if (!fs::is_directory(pred_dir) || !fs::is_directory(gt_dir)) {
      throw Error(ErrorKind::Io, "prediction and ground-truth directories must exist");
    }
    preds = collect_masks(pred_dir, false);
    truths = collect_masks(gt_dir, true);
    std::vector<std::string> missing;
    for (const auto& [id, _] : preds)
      if (!truths.count(id)) missing.push_back("no ground truth for " + id);
    for (const auto& [id, _] : truths)
      if (!preds.count(id)) missing.push_back("no prediction for " + id);
    if (!missing.empty()) {
      std::string msg;
      for (const auto& m : missing) msg += "\n  " + m;
      throw Error(ErrorKind::ManifestMismatch, "file names differ between directories:" + msg);
    }
    if (preds.empty()) throw Error(ErrorKind::ManifestMismatch, "no masks found in " + pred_dir.string());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  std::vector<EvaluationRow> rows;
  int failures = 0;
  for (const auto& [id, pred_path] : preds) {
    try {
      const BinaryMask pred = read_mask(pred_path);
      const BinaryMask truth = read_mask(truths.at(id));
      rows.push_back({id, compute_metrics(confusion(pred, truth))});
    } catch (const Error& e) {
      ++failures;
      err << "FAILED " << id << ": " << e.what() << "\n";
    }
  }

  std::string csv = csv_header() + "\n";
  for (const auto& row : rows) csv += csv_row(row) + "\n";
  if (rows.size() >= 2) {
    std::vector<MetricsReport> reports;
    for (const auto& row : rows) reports.push_back(row.metrics);
    const MetricsSummary summary = aggregate(reports);
    csv += csv_summary_row(summary) + "\n";
    out << "evaluated " << rows.size() << " masks\n";
    for (std::size_t k = 0; k < kMetricNames.size(); ++k)
      out << "  " << kMetricNames[k] << " = " << detail::format_double(summary[k].mean) << " +- "
          << detail::format_double(summary[k].stddev) << "\n";
  } else {
    out << "evaluated " << rows.size() << " mask(s); summary needs at least two\n";
  }
  try {
    if (csv_path.has_parent_path()) fs::create_directories(csv_path.parent_path());
    write_text(csv_path, csv);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailures;
  }
  return failures ? kExitFailures : kExitOk;
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

inline std::string phantom_dir_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "phantom_%04d", index);
  return buf;
}

/// Writes `count` phantoms under `out_dir`, one directory each, plus a
/// manifest.txt ready for `segment`.
inline int cmd_synth(int count, Scenario scenario, std::uint64_t seed, const fs::path& out_dir, std::ostream& log,
                     std::ostream& err) {
  if (count < 1) {
    err << "error: --count must be at least 1\n";
    return kExitUsage;
  }
  try {
    fs::create_directories(out_dir);
    std::string manifest;
    for (int i = 0; i < count; ++i) {
      const std::string name = phantom_dir_name(i);
      const fs::path dir = out_dir / name;
      fs::create_directories(dir);
      const PhantomSpec spec = make_spec(scenario, mix_seed(seed, static_cast<std::uint64_t>(i)));
      const Phantom ph = generate(spec);
      write_gray_image(dir / "image.pgm", ph.image);
      write_prob_map(dir / "out1.epm", ph.out1);
      write_prob_map(dir / "out2.epm", ph.out2);
      write_mask(dir / "gt_breast.pgm", ph.gt_breast);
      std::string boundary;
      for (const Pixel p : ph.gt_boundary.nodes) boundary += std::to_string(p.row) + " " + std::to_string(p.col) + "\n";
      write_text(dir / "gt_boundary.txt", boundary);
      write_text(dir / "spec.txt", "scenario=" + std::string(to_string(scenario)) + "\n" + to_text(spec));
      manifest += name + "/image.pgm " + name + "/out1.epm " + name + "/out2.epm " + name + "/gt_breast.pgm\n";
    }
    write_text(out_dir / "manifest.txt", manifest);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailures;
  }
  if (log_level() >= 1) log << "wrote " << count << " phantoms to " << out_dir.string() << "\n";
  return kExitOk;
}

/// Reads a gt_boundary.txt written by cmd_synth.
inline PixelPath read_boundary_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  PixelPath out;
  for (Pixel p; in >> p.row >> p.col;) out.nodes.push_back(p);
  return out;
}

}  // namespace pectoral::cli
