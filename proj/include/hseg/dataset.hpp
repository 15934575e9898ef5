#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hseg/image.hpp"
#include "hseg/superpixel.hpp"

namespace hseg {

inline constexpr int kPatchSide = 28;

using PatchValues = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Square intensity window centred on `origin`; the center sits at offset (side/2, side/2).
struct Patch {
  PatchValues values;
  std::optional<int> label;
  PixelCoord origin;

  int side() const { return static_cast<int>(values.rows()); }
};

struct PatchSet {
  std::vector<Patch> patches;
  int num_classes = 0;
  std::vector<std::size_t> class_histogram;

  PatchSet() = default;
  explicit PatchSet(int num_classes)
      : num_classes(num_classes), class_histogram(static_cast<std::size_t>(num_classes), 0) {}

  /// Appends a labelled patch; throws if the label is missing or out of range.
  void add(Patch patch);

  std::size_t size() const { return patches.size(); }
  bool empty() const { return patches.empty(); }
};

/// A training page: downscaled image, its label map and its superpixels.
struct LabeledPage {
  std::string name;
  GrayImage image;
  LabelImage labels;
  SuperpixelMap superpixels;
};

/// Half-sample symmetric reflection: -1 -> 0, n -> n-1, periodic with period 2n.
int mirror_index(int i, int n);

/// Rows center.y - side/2 .. center.y + side/2 - 1 (likewise for columns);
/// out-of-image samples are mirrored about the edge.
Patch extract_patch(const GrayImage& img, PixelCoord center, int side = kPatchSide);

/// One patch per superpixel, labelled with the label-map value at its rounded centroid.
PatchSet build_training_set(std::span<const LabeledPage> pages, int num_classes, int side = kPatchSide);

/// Unlabelled patches at every superpixel centroid, in superpixel id order.
std::vector<Patch> inference_patches(const GrayImage& img, const SuperpixelMap& map, int side = kPatchSide);

/// Spreads one label per superpixel over all of its pixels.
LabelImage project_labels(const SuperpixelMap& map, std::span<const int> center_labels);

/// Debug dump: "HSPS", u32 version, u32 count, u32 M, then per patch 784
/// little-endian float32 values and one label byte (0xFF when unlabelled).
void write_patchset(const PatchSet& set, const std::filesystem::path& path);
PatchSet read_patchset(const std::filesystem::path& path);

}  // namespace hseg
