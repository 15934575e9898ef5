#include "hseg/pipeline.hpp"

#include <stdexcept>

namespace hseg {

Segmentation segment_downscaled(const nn::Network<double>& net, GrayImage image, const PipelineOptions& options) {
  Segmentation s;
  s.image = std::move(image);
  s.superpixels = slic(s.image, options.superpixels, options.slic);
  const auto patches = inference_patches(s.image, s.superpixels, net.config().input_side);
  s.superpixel_labels = nn::predict_labels(net, std::span<const Patch>(patches));
  s.labels = project_labels(s.superpixels, s.superpixel_labels);
  return s;
}

Segmentation segment_image(const nn::Network<double>& net, const GrayImage& image, const PipelineOptions& options) {
  return segment_downscaled(net, downscale(image, options.scale_exponent), options);
}

LabeledPage prepare_page(std::string name, const GrayImage& image, const LabelImage& labels,
                         const PipelineOptions& options) {
  if (image.rows() != labels.rows() || image.cols() != labels.cols())
    throw std::invalid_argument("'" + name + "': image is " + std::to_string(image.cols()) + "x" +
                                std::to_string(image.rows()) + " but its label map is " + std::to_string(labels.cols()) +
                                "x" + std::to_string(labels.rows()));
  LabeledPage page;
  page.name = std::move(name);
  page.image = downscale(image, options.scale_exponent);
  page.labels = downscale_labels(labels, options.scale_exponent);
  page.superpixels = slic(page.image, options.superpixels, options.slic);
  return page;
}

}  // namespace hseg
