#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pectoral/error.hpp"

namespace pectoral {

/// Pixel coordinate. Ordering is row-major (row first, then column), which is
/// the tie-breaking order used throughout the library.
struct Pixel {
  int row = 0;
  int col = 0;

  friend constexpr auto operator<=>(const Pixel&, const Pixel&) = default;
};

inline constexpr std::array<Pixel, 8> kNeighbors8 = {{
    {-1, -1}, {-1, 0}, {-1, 1}, {0, -1}, {0, 1}, {1, -1}, {1, 0}, {1, 1},
}};

inline constexpr std::array<Pixel, 4> kNeighbors4 = {{{-1, 0}, {0, -1}, {0, 1}, {1, 0}}};

constexpr bool are_8_neighbors(Pixel a, Pixel b) {
  const int dr = a.row - b.row;
  const int dc = a.col - b.col;
  return (dr != 0 || dc != 0) && dr >= -1 && dr <= 1 && dc >= -1 && dc <= 1;
}

/// Dense row-major raster. `Tag` keeps otherwise identical storage types
/// (8-bit gray vs. binary mask) from being mixed up.
template <typename T, typename Tag>
class Raster {
 public:
  using value_type = T;

  Raster() = default;
  Raster(int width, int height, T fill = T{})
      : width_(width), height_(height), data_(checked_area(width, height), fill) {}
  Raster(int width, int height, std::vector<T> data)
      : width_(width), height_(height), data_(std::move(data)) {
    if (data_.size() != checked_area(width, height)) {
      throw Error(ErrorKind::Shape, "raster data length does not match " + std::to_string(width) +
                                        "x" + std::to_string(height));
    }
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }

  bool contains(Pixel p) const noexcept {
    return p.row >= 0 && p.col >= 0 && p.row < height_ && p.col < width_;
  }
  std::size_t index(Pixel p) const noexcept {
    return static_cast<std::size_t>(p.row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(p.col);
  }
  Pixel pixel_at(std::size_t i) const noexcept {
    return {static_cast<int>(i / static_cast<std::size_t>(width_)),
            static_cast<int>(i % static_cast<std::size_t>(width_))};
  }

  T& operator()(int row, int col) noexcept { return data_[index({row, col})]; }
  const T& operator()(int row, int col) const noexcept { return data_[index({row, col})]; }
  T& operator[](Pixel p) noexcept { return data_[index(p)]; }
  const T& operator[](Pixel p) const noexcept { return data_[index(p)]; }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  const std::vector<T>& values() const noexcept { return data_; }

  bool same_shape(int width, int height) const noexcept {
    return width_ == width && height_ == height;
  }
  template <typename U, typename OtherTag>
  bool same_shape(const Raster<U, OtherTag>& other) const noexcept {
    return same_shape(other.width(), other.height());
  }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  static std::size_t checked_area(int width, int height) {
    if (width < 0 || height < 0) throw Error(ErrorKind::Shape, "negative raster dimension");
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

struct GrayTag {};
struct ProbTag {};
struct MaskTag {};

/// 8-bit single channel intensity image.
using GrayImage = Raster<std::uint8_t, GrayTag>;
/// Per-pixel edge probability in [0,1].
using EdgeProbMap = Raster<float, ProbTag>;
/// Binary mask; stored as 0/1 bytes.
using BinaryMask = Raster<std::uint8_t, MaskTag>;

/// Smallest image edge accepted by the segmentation stages.
inline constexpr int kMinImageSide = 16;

inline std::size_t count_true(const BinaryMask& mask) {
  std::size_t n = 0;
  for (auto v : mask.data()) n += v != 0;
  return n;
}

template <typename A, typename B>
void require_same_shape(const A& a, const B& b, const char* what) {
  if (!a.same_shape(b)) {
    throw Error(ErrorKind::Shape, std::string(what) + ": " + std::to_string(a.width()) + "x" +
                                      std::to_string(a.height()) + " vs " +
                                      std::to_string(b.width()) + "x" + std::to_string(b.height()));
  }
}

}  // namespace pectoral
