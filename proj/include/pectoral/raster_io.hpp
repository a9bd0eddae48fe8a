#pragma once

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "pectoral/error.hpp"
#include "pectoral/raster.hpp"

namespace pectoral {

// ---------------------------------------------------------------------------
// Byte-level helpers
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Writes to a sibling temporary file and renames it into place, so readers
/// never observe a half-written file.
inline void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorKind::Io, "short write to " + path.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot rename into " + path.string() + ": " + ec.message());
}

/// Minimal netpbm-style header tokenizer: whitespace separated tokens with
/// '#' comments running to end of line.
class HeaderReader {
 public:
  HeaderReader(const std::vector<std::uint8_t>& bytes, std::string what)
      : bytes_(bytes), what_(std::move(what)) {}

  std::string token() {
    skip_space_and_comments();
    std::string out;
    while (pos_ < bytes_.size() && !std::isspace(bytes_[pos_]) && bytes_[pos_] != '#') {
      out.push_back(static_cast<char>(bytes_[pos_++]));
    }
    if (out.empty()) fail("unexpected end of header");
    return out;
  }

  int positive_int() {
    const std::string t = token();
    if (t.size() > 9 || !std::all_of(t.begin(), t.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      fail("expected an integer, got '" + t + "'");
    }
    const int v = std::stoi(t);
    if (v <= 0) fail("dimension must be positive");
    return v;
  }

  /// Consumes the single whitespace byte that separates header from payload.
  void end_of_header() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) fail("missing separator after header");
    ++pos_;
  }

  std::size_t position() const noexcept { return pos_; }

  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorKind::Format, what_ + ": " + msg);
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  const std::vector<std::uint8_t>& bytes_;
  std::string what_;
  std::size_t pos_ = 0;
};

inline std::vector<std::uint8_t> ascii_header(const std::string& text) {
  return {text.begin(), text.end()};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// PGM (P5, maxval 255)
// ---------------------------------------------------------------------------

inline GrayImage decode_gray_image(const std::vector<std::uint8_t>& bytes, const std::string& name = "pgm") {
  detail::HeaderReader header(bytes, name);
  if (header.token() != "P5") header.fail("not a binary PGM (magic P5 expected)");
  const int width = header.positive_int();
  const int height = header.positive_int();
  const int maxval = header.positive_int();
  if (maxval != 255) {
    throw Error(ErrorKind::UnsupportedDepth, name + ": maxval " + std::to_string(maxval) + " (only 255 supported)");
  }
  header.end_of_header();
  const std::size_t area = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  const std::size_t start = header.position();
  if (bytes.size() - start != area) {
    header.fail("payload has " + std::to_string(bytes.size() - start) + " bytes, expected " + std::to_string(area));
  }
  return GrayImage(width, height, std::vector<std::uint8_t>(bytes.begin() + static_cast<std::ptrdiff_t>(start), bytes.end()));
}

inline std::vector<std::uint8_t> encode_gray_image(const GrayImage& image) {
  auto out = detail::ascii_header("P5\n" + std::to_string(image.width()) + " " +
                                  std::to_string(image.height()) + "\n255\n");
  out.insert(out.end(), image.data().begin(), image.data().end());
  return out;
}

inline GrayImage read_gray_image(const std::filesystem::path& path) {
  return decode_gray_image(detail::read_file_bytes(path), path.string());
}

inline void write_gray_image(const std::filesystem::path& path, const GrayImage& image) {
  detail::write_file_bytes(path, encode_gray_image(image));
}

// Mask files are PGMs holding only 0 and 255.

inline BinaryMask decode_mask(const std::vector<std::uint8_t>& bytes, const std::string& name = "mask") {
  const GrayImage gray = decode_gray_image(bytes, name);
  std::vector<std::uint8_t> bits(gray.size());
  for (std::size_t i = 0; i < gray.size(); ++i) {
    const auto v = gray.data()[i];
    if (v != 0 && v != 255) {
      throw Error(ErrorKind::Format, name + ": mask value " + std::to_string(v) + " is neither 0 nor 255");
    }
    bits[i] = v == 255;
  }
  return BinaryMask(gray.width(), gray.height(), std::move(bits));
}

inline std::vector<std::uint8_t> encode_mask(const BinaryMask& mask) {
  GrayImage gray(mask.width(), mask.height());
  for (std::size_t i = 0; i < mask.size(); ++i) gray.data()[i] = mask.data()[i] ? 255 : 0;
  return encode_gray_image(gray);
}

inline BinaryMask read_mask(const std::filesystem::path& path) {
  return decode_mask(detail::read_file_bytes(path), path.string());
}

inline void write_mask(const std::filesystem::path& path, const BinaryMask& mask) {
  detail::write_file_bytes(path, encode_mask(mask));
}

// ---------------------------------------------------------------------------
// EPM1: "EPM1\n<w> <h>\n" followed by little-endian float32 payload
// ---------------------------------------------------------------------------

inline constexpr float kProbTolerance = 1e-6f;

inline EdgeProbMap decode_prob_map(const std::vector<std::uint8_t>& bytes, const std::string& name = "epm") {
  detail::HeaderReader header(bytes, name);
  if (header.token() != "EPM1") header.fail("magic mismatch (EPM1 expected)");
  const int width = header.positive_int();
  const int height = header.positive_int();
  header.end_of_header();
  const std::size_t area = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  const std::size_t start = header.position();
  if (bytes.size() - start != area * 4) {
    header.fail("payload has " + std::to_string(bytes.size() - start) + " bytes, expected " + std::to_string(area * 4));
  }
  std::vector<float> values(area);
  for (std::size_t i = 0; i < area; ++i) {
    const std::uint8_t* b = bytes.data() + start + 4 * i;
    const std::uint32_t word = std::uint32_t{b[0]} | (std::uint32_t{b[1]} << 8) |
                               (std::uint32_t{b[2]} << 16) | (std::uint32_t{b[3]} << 24);
    float v = std::bit_cast<float>(word);
    if (!(v >= -kProbTolerance && v <= 1.0f + kProbTolerance)) {
      throw Error(ErrorKind::Range, name + ": value " + std::to_string(v) + " at index " +
                                        std::to_string(i) + " outside [0,1]");
    }
    values[i] = std::clamp(v, 0.0f, 1.0f);
  }
  return EdgeProbMap(width, height, std::move(values));
}

inline std::vector<std::uint8_t> encode_prob_map(const EdgeProbMap& map) {
  auto out = detail::ascii_header("EPM1\n" + std::to_string(map.width()) + " " +
                                  std::to_string(map.height()) + "\n");
  out.reserve(out.size() + map.size() * 4);
  for (float v : map.data()) {
    const auto word = std::bit_cast<std::uint32_t>(v);
    for (int shift = 0; shift < 32; shift += 8) out.push_back(static_cast<std::uint8_t>(word >> shift));
  }
  return out;
}

inline EdgeProbMap read_prob_map(const std::filesystem::path& path) {
  return decode_prob_map(detail::read_file_bytes(path), path.string());
}

inline void write_prob_map(const std::filesystem::path& path, const EdgeProbMap& map) {
  detail::write_file_bytes(path, encode_prob_map(map));
}

// ---------------------------------------------------------------------------
// Canonical orientation: pectoral region at the lower-left corner
// ---------------------------------------------------------------------------

struct Orientation {
  bool flip_horizontal = false;
  bool flip_vertical = false;

  friend bool operator==(const Orientation&, const Orientation&) = default;
};

/// Mean intensity of the four corner windows, each a quarter of the image
/// in both directions.
struct CornerMeans {
  double lower_left = 0;
  double lower_right = 0;
  double upper_left = 0;
  double upper_right = 0;
};

inline CornerMeans corner_means(const GrayImage& image) {
  const int wh = std::max(1, image.width() / 4);
  const int hh = std::max(1, image.height() / 4);
  auto window_mean = [&](int row0, int col0) {
    double sum = 0;
    for (int r = row0; r < row0 + hh; ++r)
      for (int c = col0; c < col0 + wh; ++c) sum += image(r, c);
    return sum / (static_cast<double>(wh) * hh);
  };
  const int bottom = image.height() - hh;
  const int right = image.width() - wh;
  return {window_mean(bottom, 0), window_mean(bottom, right), window_mean(0, 0), window_mean(0, right)};
}

/// The flips that bring the brightest corner to the lower-left.
inline Orientation detect_orientation(const GrayImage& image) {
  if (image.width() < 1 || image.height() < 1) throw Error(ErrorKind::Shape, "empty image");
  const CornerMeans m = corner_means(image);
  const double values[4] = {m.lower_left, m.lower_right, m.upper_left, m.upper_right};
  const auto [lo, hi] = std::minmax_element(std::begin(values), std::end(values));
  if (*hi - *lo <= 1.0) {
    throw Error(ErrorKind::AmbiguousOrientation, "corner means agree within one intensity level");
  }
  const auto brightest = std::distance(std::begin(values), hi);
  switch (brightest) {
    case 0: return {false, false};
    case 1: return {true, false};
    case 2: return {false, true};
    default: return {true, true};
  }
}

inline Pixel apply_orientation(Pixel p, Orientation o, int width, int height) {
  if (o.flip_horizontal) p.col = width - 1 - p.col;
  if (o.flip_vertical) p.row = height - 1 - p.row;
  return p;
}

template <typename T, typename Tag>
Raster<T, Tag> apply_orientation(const Raster<T, Tag>& raster, Orientation o) {
  if (!o.flip_horizontal && !o.flip_vertical) return raster;
  Raster<T, Tag> out(raster.width(), raster.height());
  for (int r = 0; r < raster.height(); ++r)
    for (int c = 0; c < raster.width(); ++c)
      out[apply_orientation(Pixel{r, c}, o, raster.width(), raster.height())] = raster(r, c);
  return out;
}

}  // namespace pectoral
