#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pectoral {

enum class ErrorKind {
  Format,
  UnsupportedDepth,
  Range,
  AmbiguousOrientation,
  Shape,
  DegenerateHistogram,
  EmptyMask,
  AmbiguousSkeleton,
  ExtrapolationDiverged,
  NoPath,
  OpenBoundary,
  UndefinedMetric,
  InsufficientData,
  BadSpec,
  ManifestMismatch,
  Io,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Format: return "FormatError";
    case ErrorKind::UnsupportedDepth: return "UnsupportedDepth";
    case ErrorKind::Range: return "RangeError";
    case ErrorKind::AmbiguousOrientation: return "AmbiguousOrientation";
    case ErrorKind::Shape: return "ShapeError";
    case ErrorKind::DegenerateHistogram: return "DegenerateHistogram";
    case ErrorKind::EmptyMask: return "EmptyMask";
    case ErrorKind::AmbiguousSkeleton: return "AmbiguousSkeleton";
    case ErrorKind::ExtrapolationDiverged: return "ExtrapolationDiverged";
    case ErrorKind::NoPath: return "NoPath";
    case ErrorKind::OpenBoundary: return "OpenBoundary";
    case ErrorKind::UndefinedMetric: return "UndefinedMetric";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::BadSpec: return "BadSpec";
    case ErrorKind::ManifestMismatch: return "ManifestMismatch";
    case ErrorKind::Io: return "IoError";
  }
  return "Unknown";
}

/// Every failure in the library is reported through this exception. `stage`
/// is filled in by the pipeline when an error crosses a stage boundary.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, std::string stage = {})
      : std::runtime_error(format(kind, message, stage)),
        kind_(kind),
        detail_(message),
        stage_(std::move(stage)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& detail() const noexcept { return detail_; }
  const std::string& stage() const noexcept { return stage_; }

  Error with_stage(std::string stage) const { return Error(kind_, detail_, std::move(stage)); }

 private:
  static std::string format(ErrorKind kind, const std::string& message, const std::string& stage) {
    std::string out;
    if (!stage.empty()) out += "[" + stage + "] ";
    out += to_string(kind);
    if (!message.empty()) out += ": " + message;
    return out;
  }

  ErrorKind kind_;
  std::string detail_;
  std::string stage_;
};

}  // namespace pectoral
