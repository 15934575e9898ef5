#include "hseg/dataset.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace hseg {

namespace {

constexpr std::array<char, 4> kPatchSetMagic = {'H', 'S', 'P', 'S'};
constexpr std::uint32_t kPatchSetVersion = 1;
constexpr std::uint8_t kNoLabel = 0xFF;

void put_u32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {char(v & 0xFF), char((v >> 8) & 0xFF), char((v >> 16) & 0xFF), char((v >> 24) & 0xFF)};
  out.write(b, 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw FormatError("patch set: truncated file");
  return std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 | std::uint32_t(b[2]) << 16 | std::uint32_t(b[3]) << 24;
}

}  // namespace

void PatchSet::add(Patch patch) {
  if (!patch.label || *patch.label < 0 || *patch.label >= num_classes)
    throw std::invalid_argument("PatchSet::add: patch label missing or outside [0, " + std::to_string(num_classes) + ")");
  ++class_histogram[static_cast<std::size_t>(*patch.label)];
  patches.push_back(std::move(patch));
}

int mirror_index(int i, int n) {
  const int period = 2 * n;
  int m = i % period;
  if (m < 0) m += period;
  return m < n ? m : period - 1 - m;
}

Patch extract_patch(const GrayImage& img, PixelCoord center, int side) {
  const int w = static_cast<int>(img.cols()), h = static_cast<int>(img.rows());
  if (center.x < 0 || center.y < 0 || center.x >= w || center.y >= h)
    throw std::out_of_range("extract_patch: center (" + std::to_string(center.x) + "," + std::to_string(center.y) +
                            ") outside " + std::to_string(w) + "x" + std::to_string(h) + " image");
  if (side < 1) throw std::invalid_argument("extract_patch: side must be positive");
  Patch patch;
  patch.origin = center;
  const int half = side / 2;
  const int x0 = center.x - half, y0 = center.y - half;
  if (x0 >= 0 && y0 >= 0 && x0 + side <= w && y0 + side <= h) {
    patch.values = img.block(y0, x0, side, side);
    return patch;
  }
  patch.values.resize(side, side);
  for (int v = 0; v < side; ++v) {
    const int y = mirror_index(y0 + v, h);
    for (int u = 0; u < side; ++u) patch.values(v, u) = img(y, mirror_index(x0 + u, w));
  }
  return patch;
}

PatchSet build_training_set(std::span<const LabeledPage> pages, int num_classes, int side) {
  PatchSet set(num_classes);
  for (const auto& page : pages) {
    const auto& sp = page.superpixels;
    if (page.labels.rows() != page.image.rows() || page.labels.cols() != page.image.cols() ||
        sp.height != page.image.rows() || sp.width != page.image.cols())
      throw std::invalid_argument("build_training_set: image, label map and superpixel map of '" + page.name +
                                  "' differ in size");
    for (const auto& c : centroids(sp)) {
      Patch p = extract_patch(page.image, c, side);
      const int label = page.labels(c.y, c.x);
      if (label < 0 || label >= num_classes)
        throw std::invalid_argument("build_training_set: label " + std::to_string(label) + " in '" + page.name +
                                    "' outside [0, " + std::to_string(num_classes) + ")");
      p.label = label;
      set.add(std::move(p));
    }
  }
  return set;
}

std::vector<Patch> inference_patches(const GrayImage& img, const SuperpixelMap& map, int side) {
  if (map.height != img.rows() || map.width != img.cols())
    throw std::invalid_argument("inference_patches: image and superpixel map differ in size");
  std::vector<Patch> out;
  out.reserve(map.superpixels.size());
  for (const auto& c : centroids(map)) out.push_back(extract_patch(img, c, side));
  return out;
}

LabelImage project_labels(const SuperpixelMap& map, std::span<const int> center_labels) {
  if (center_labels.size() != map.superpixels.size())
    throw std::invalid_argument("project_labels: " + std::to_string(center_labels.size()) + " labels for " +
                                std::to_string(map.superpixels.size()) + " superpixels");
  LabelImage out(map.height, map.width);
  for (Index i = 0; i < out.size(); ++i) out.data()[i] = center_labels[static_cast<std::size_t>(map.assignment.data()[i])];
  return out;
}

void write_patchset(const PatchSet& set, const std::filesystem::path& path) {
  if (set.num_classes > 255) throw std::invalid_argument("patch set: at most 255 classes fit in a label byte");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(kPatchSetMagic.data(), 4);
  put_u32(out, kPatchSetVersion);
  put_u32(out, static_cast<std::uint32_t>(set.patches.size()));
  put_u32(out, static_cast<std::uint32_t>(set.num_classes));
  for (const auto& p : set.patches) {
    if (p.values.size() != kPatchSide * kPatchSide)
      throw std::invalid_argument("patch set: dump format holds 28x28 patches only");
    for (Index i = 0; i < p.values.size(); ++i) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(p.values.data()[i])));
    const char label = static_cast<char>(p.label ? static_cast<std::uint8_t>(*p.label) : kNoLabel);
    out.write(&label, 1);
  }
  if (!out) throw IoError("failed writing " + path.string());
}

PatchSet read_patchset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), 4) || magic != kPatchSetMagic) throw FormatError(path.string() + ": not a patch set file");
  if (const auto v = get_u32(in); v != kPatchSetVersion)
    throw FormatError(path.string() + ": unsupported patch set version " + std::to_string(v));
  const auto count = get_u32(in);
  const auto classes = get_u32(in);
  PatchSet set(static_cast<int>(classes));
  for (std::uint32_t k = 0; k < count; ++k) {
    Patch p;
    p.values.resize(kPatchSide, kPatchSide);
    for (Index i = 0; i < p.values.size(); ++i) p.values.data()[i] = std::bit_cast<float>(get_u32(in));
    char label = 0;
    if (!in.read(&label, 1)) throw FormatError(path.string() + ": truncated file");
    const auto l = static_cast<std::uint8_t>(label);
    if (l == kNoLabel) {
      set.patches.push_back(std::move(p));
    } else {
      p.label = l;
      set.add(std::move(p));
    }
  }
  return set;
}

}  // namespace hseg
