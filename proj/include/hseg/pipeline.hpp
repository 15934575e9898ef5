#pragma once

#include <string>
#include <vector>

#include "hseg/dataset.hpp"
#include "hseg/image.hpp"
#include "hseg/nn/network.hpp"
#include "hseg/superpixel.hpp"

namespace hseg {

struct PipelineOptions {
  int scale_exponent = 3;  // images are reduced by 2^-scale_exponent
  int superpixels = 3000;
  SlicOptions slic;
};

struct Segmentation {
  GrayImage image;  // downscaled input
  SuperpixelMap superpixels;
  std::vector<int> superpixel_labels;
  LabelImage labels;
};

/// Superpixels of an already downscaled image, then one prediction per
/// superpixel centroid spread over the superpixel.
Segmentation segment_downscaled(const nn::Network<double>& net, GrayImage image, const PipelineOptions& options);

/// downscale -> slic -> classify centroid patches -> project labels.
Segmentation segment_image(const nn::Network<double>& net, const GrayImage& image, const PipelineOptions& options);

/// Downscales an image and its full-resolution label map (block majority)
/// and computes superpixels, ready for build_training_set.
LabeledPage prepare_page(std::string name, const GrayImage& image, const LabelImage& labels,
                         const PipelineOptions& options);

}  // namespace hseg
