#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hseg {

/// The file exists but is not a PNG layout we accept.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The file could not be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Decoded 8-bit PNG, interleaved, 1 (gray) or 3 (RGB) channels.
struct RawImage {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<std::uint8_t> data;
};

/// Reads 8-bit (or lower, expanded) gray, RGB and palette PNGs. Alpha is
/// composited onto black. 16-bit files are rejected with FormatError.
RawImage read_png(const std::filesystem::path& path);

void write_png(const std::filesystem::path& path, int width, int height, int channels,
               std::span<const std::uint8_t> data);

void write_png16(const std::filesystem::path& path, int width, int height,
                 std::span<const std::uint16_t> data);

}  // namespace hseg
