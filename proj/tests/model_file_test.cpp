#include "hseg/model_file.hpp"

#include <gtest/gtest.h>

#include <utility>

#include "hseg/pipeline.hpp"
#include "support/synthetic_docs.hpp"
#include "support/temp_dir.hpp"

namespace hseg {
namespace {

nn::NetworkConfig config(int classes, bool pool, std::vector<int> kernels) {
  nn::NetworkConfig cfg;
  cfg.num_classes = classes;
  cfg.use_max_pool = pool;
  cfg.conv_kernel_counts = std::move(kernels);
  cfg.dense_width = 17;
  return cfg;
}

TEST(ModelFileTest, RoundTripAfterQuantization) {
  testing::TempDir dir;
  const auto palette = Palette::standard().prefix(3);
  for (bool pool : {false, true}) {
    nn::Network<double> net(config(3, pool, {4, 6}), 1);
    nn::quantize_to_float(net);
    save_model(net, palette, dir / "m.hseg");
    const auto back = load_model(dir / "m.hseg");
    EXPECT_EQ(back.palette, palette);
    EXPECT_EQ(back.network.config(), net.config());
    const auto a = std::as_const(net).parameters().tensors();
    const auto b = back.network.parameters().tensors();
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(*a[i], *b[i]);
    EXPECT_EQ(serialize_model(back.network, back.palette), serialize_model(net, palette));
  }
}

TEST(ModelFileTest, SegmentationSurvivesRoundTrip) {
  testing::TempDir dir;
  nn::Network<double> net(config(3, false, {4}), 2);
  nn::quantize_to_float(net);
  save_model(net, testing::synthetic_palette(), dir / "m.hseg");
  const auto loaded = load_model(dir / "m.hseg");
  const auto doc = testing::make_synthetic_doc(3, 96);
  PipelineOptions opts;
  opts.scale_exponent = 0;
  opts.superpixels = 150;
  const auto a = segment_image(net, doc.image, opts), b = segment_image(loaded.network, doc.image, opts);
  EXPECT_TRUE((a.labels == b.labels).all());
}

TEST(ModelFileTest, CorruptFilesAreRejected) {
  const nn::Network<double> net(config(2, false, {1}), 3);
  const auto bytes = serialize_model(net, Palette::standard().prefix(2));
  EXPECT_NO_THROW(deserialize_model(bytes));

  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(deserialize_model(bad_magic), FormatError);

  auto bad_version = bytes;
  bad_version[4] = 9;
  EXPECT_THROW(deserialize_model(bad_version), FormatError);

  const std::vector<std::uint8_t> truncated(bytes.begin(), bytes.end() - 3);
  EXPECT_THROW(deserialize_model(truncated), FormatError);

  auto trailing = bytes;
  trailing.push_back(0);
  EXPECT_THROW(deserialize_model(trailing), FormatError);
}

TEST(ModelFileTest, PaletteMustMatchClassCount) {
  const nn::Network<double> net(config(3, false, {1}), 3);
  EXPECT_THROW(serialize_model(net, Palette::standard()), std::invalid_argument);
}

TEST(ModelFileTest, MissingFile) {
  testing::TempDir dir;
  EXPECT_THROW(load_model(dir / "none.hseg"), IoError);
}

}  // namespace
}  // namespace hseg
