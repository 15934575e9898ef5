#include "hseg/png_io.hpp"

#include <png.h>

#include <cstring>
#include <fstream>

namespace hseg {

namespace {

struct ImageGuard {
  png_image image;
  ImageGuard() {
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
  }
  ~ImageGuard() { png_image_free(&image); }
  ImageGuard(const ImageGuard&) = delete;
  ImageGuard& operator=(const ImageGuard&) = delete;
};

void check_dims(int width, int height, std::size_t got, std::size_t per_pixel) {
  if (width <= 0 || height <= 0) throw std::invalid_argument("png: empty image");
  if (got != static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * per_pixel)
    throw std::invalid_argument("png: buffer size does not match dimensions");
}

}  // namespace

RawImage read_png(const std::filesystem::path& path) {
  {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw IoError("cannot open " + path.string());
  }
  ImageGuard g;
  if (!png_image_begin_read_from_file(&g.image, path.c_str()))
    throw FormatError(path.string() + ": " + g.image.message);
  if (g.image.format & PNG_FORMAT_FLAG_LINEAR)
    throw FormatError(path.string() + ": unsupported bit depth (16-bit); expected 8-bit gray or RGB");

  RawImage out;
  out.width = static_cast<int>(g.image.width);
  out.height = static_cast<int>(g.image.height);
  const bool color = g.image.format & PNG_FORMAT_FLAG_COLOR;
  out.channels = color ? 3 : 1;
  g.image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  out.data.resize(PNG_IMAGE_SIZE(g.image));
  png_color black{0, 0, 0};
  if (!png_image_finish_read(&g.image, &black, out.data.data(), 0, nullptr))
    throw FormatError(path.string() + ": " + g.image.message);
  return out;
}

void write_png(const std::filesystem::path& path, int width, int height, int channels,
               std::span<const std::uint8_t> data) {
  if (channels != 1 && channels != 3) throw std::invalid_argument("png: channels must be 1 or 3");
  check_dims(width, height, data.size(), static_cast<std::size_t>(channels));
  ImageGuard g;
  g.image.width = static_cast<png_uint_32>(width);
  g.image.height = static_cast<png_uint_32>(height);
  g.image.format = channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&g.image, path.c_str(), 0, data.data(), 0, nullptr))
    throw IoError(path.string() + ": " + g.image.message);
}

void write_png16(const std::filesystem::path& path, int width, int height,
                 std::span<const std::uint16_t> data) {
  check_dims(width, height, data.size(), 1);
  ImageGuard g;
  g.image.width = static_cast<png_uint_32>(width);
  g.image.height = static_cast<png_uint_32>(height);
  g.image.format = PNG_FORMAT_LINEAR_Y;
  if (!png_image_write_to_file(&g.image, path.c_str(), 0, data.data(), 0, nullptr))
    throw IoError(path.string() + ": " + g.image.message);
}

}  // namespace hseg
