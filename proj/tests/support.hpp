#pragma once

#include <filesystem>
#include <initializer_list>
#include <random>
#include <string>
#include <vector>

#include "pectoral/raster.hpp"

namespace support {

/// Mask from a picture: '#' or '1' is set, anything else clear.
inline pectoral::BinaryMask mask_from(std::initializer_list<std::string> rows) {
  const int h = static_cast<int>(rows.size());
  const int w = static_cast<int>(rows.begin()->size());
  pectoral::BinaryMask m(w, h);
  int r = 0;
  for (const auto& row : rows) {
    for (int c = 0; c < w; ++c) m(r, c) = row[c] == '#' || row[c] == '1';
    ++r;
  }
  return m;
}

inline pectoral::BinaryMask random_mask(std::mt19937_64& rng, int w, int h, double density) {
  std::bernoulli_distribution coin(density);
  pectoral::BinaryMask m(w, h);
  for (auto& v : m.data()) v = coin(rng);
  return m;
}

inline pectoral::EdgeProbMap random_map(std::mt19937_64& rng, int w, int h) {
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  pectoral::EdgeProbMap m(w, h);
  for (auto& v : m.data()) v = u(rng);
  return m;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("pectoral_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace support
