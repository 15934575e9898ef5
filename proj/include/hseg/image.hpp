#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hseg/png_io.hpp"

namespace hseg {

using Index = Eigen::Index;

/// Intensities in [0, 1]; rows() is the image height, cols() the width.
using GrayImage = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Class indices in [0, M); same layout as GrayImage.
using LabelImage = Eigen::Array<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

std::string to_string(const Rgb& c);

/// Ordered list of (class name, color); the position of an entry is its class index.
class Palette {
 public:
  struct Entry {
    std::string name;
    Rgb color;
    friend bool operator==(const Entry&, const Entry&) = default;
  };

  explicit Palette(std::vector<Entry> entries);

  /// periphery=black, page=white, text=blue, decoration=red, comment=pink.
  static Palette standard();

  /// Parses one `name=R,G,B` line per class. Blank lines and `#` comments are skipped.
  static Palette parse(std::string_view text);
  static Palette load(const std::filesystem::path& path);

  std::string to_text() const;

  int size() const { return static_cast<int>(entries_.size()); }
  const std::vector<Entry>& entries() const { return entries_; }
  const Entry& operator[](int i) const { return entries_.at(static_cast<std::size_t>(i)); }

  std::optional<int> index_of(std::string_view name) const;
  std::optional<int> index_of(const Rgb& color) const;

  /// First `n` entries, for datasets that use a prefix of the class list.
  Palette prefix(int n) const;

  friend bool operator==(const Palette&, const Palette&) = default;

 private:
  std::vector<Entry> entries_;
};

/// Loads an 8-bit gray or RGB PNG; RGB goes through 0.299R + 0.587G + 0.114B.
GrayImage load_gray(const std::filesystem::path& path);

GrayImage gray_from_raw(const RawImage& raw);

/// Box-filter reduction by 2^exponent per side; trailing rows/cols that do not
/// fill a whole block are dropped.
GrayImage downscale(const GrayImage& img, int exponent);

/// Block-wise majority vote (ties go to the lower class index).
LabelImage downscale_labels(const LabelImage& labels, int exponent);

LabelImage load_labels(const std::filesystem::path& path, const Palette& palette);

LabelImage labels_from_raw(const RawImage& raw, const Palette& palette);

void write_labels(const LabelImage& labels, const Palette& palette, const std::filesystem::path& path);

/// Writes intensities quantized to 8 bits.
void write_gray(const GrayImage& img, const std::filesystem::path& path);

bool is_valid_gray(const GrayImage& img);

}  // namespace hseg
