#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <vector>

#include "hseg/image.hpp"

namespace hseg {

struct PixelCoord {
  int x = 0;
  int y = 0;
  friend bool operator==(const PixelCoord&, const PixelCoord&) = default;
};

struct Superpixel {
  int id = 0;
  Eigen::Vector2d centroid = Eigen::Vector2d::Zero();  // (x, y)
  std::vector<PixelCoord> members;
};

using AssignmentImage = Eigen::Array<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Partition of an image into superpixels with dense ids 0..n-1.
struct SuperpixelMap {
  int width = 0;
  int height = 0;
  AssignmentImage assignment;
  std::vector<Superpixel> superpixels;

  int size() const { return static_cast<int>(superpixels.size()); }
};

struct SlicOptions {
  double compactness = 10.0;
  int iterations = 10;
};

/// SLIC on a single intensity channel (scaled to [0, 100]).
///
/// Seeds sit on a regular grid of step S = sqrt(W*H / k) and are moved to the
/// lowest-gradient pixel of their 3x3 neighbourhood. Each iteration assigns the
/// pixels inside a 2S x 2S window around every center by
///   D = sqrt(d_intensity^2 + (d_spatial / S)^2 * m^2)
/// and recomputes centers as member means. Afterwards every cluster keeps its
/// largest 4-connected component; other components of at least S^2/4 pixels
/// become superpixels of their own and smaller ones are merged into the
/// largest adjacent region.
///
/// Throws std::invalid_argument unless 1 <= k <= W*H.
SuperpixelMap slic(const GrayImage& img, int k, const SlicOptions& options = {});

/// Builds the member lists and centroids from a raster of ids. Ids must be
/// dense (every value in 0..max used at least once).
SuperpixelMap map_from_assignment(const AssignmentImage& assignment);

/// One pixel coordinate per superpixel; centroids rounded half-up in both axes.
std::vector<PixelCoord> centroids(const SuperpixelMap& map);

/// Checks the partition and density invariants (not contiguity).
bool is_partition(const SuperpixelMap& map);

/// True iff every superpixel is a single 4-connected component.
bool is_contiguous(const SuperpixelMap& map);

/// Mask of pixels whose right or lower neighbour belongs to another superpixel.
Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> boundary_mask(const SuperpixelMap& map);

/// Superpixel ids as a 16-bit grayscale PNG.
void write_assignment_png(const SuperpixelMap& map, const std::filesystem::path& path);

/// The image in gray with superpixel boundaries drawn in red.
void write_boundary_overlay(const GrayImage& img, const SuperpixelMap& map, const std::filesystem::path& path);

}  // namespace hseg
