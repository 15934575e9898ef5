#include "hseg/cli/commands.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <iterator>

#include "hseg/model_file.hpp"
#include "hseg/png_io.hpp"
#include "support/cli_runner.hpp"
#include "support/synthetic_docs.hpp"
#include "support/temp_dir.hpp"

namespace hseg::cli {
namespace {

using testing::run_cli;
using testing::TempDir;

std::vector<char> read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_palette(const fs::path& p, const Palette& palette) {
  std::ofstream(p) << palette.to_text();
}

// Small, fast settings for end-to-end runs on 64x64 synthetic pages.
std::vector<std::string> quick_flags(const fs::path& palette) {
  return {"--scale-exp", "0", "--superpixels", "60", "--batches", "5", "--batch-size", "8", "--dense", "10",
          "--palette", palette.string()};
}

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

TEST(CliTest, MissingInputFails) {
  TempDir dir;
  const auto r = run_cli({"superpixels", (dir / "missing.png").string()});
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("error"), std::string::npos) << r.err;
}

TEST(CliTest, UnknownSubcommandFails) {
  EXPECT_NE(run_cli({"frobnicate"}).code, 0);
  EXPECT_NE(run_cli({}).code, 0);
}

TEST(CliTest, SuperpixelsSingleRegionHasNoBoundaries) {
  TempDir dir;
  const auto doc = testing::make_synthetic_doc(1, 64);
  write_gray(doc.image, dir / "page.png");
  const auto r = run_cli({"superpixels", (dir / "page.png").string(), "--scale-exp", "0", "--superpixels", "1",
                          "--assignment", (dir / "ids.png").string(), "--overlay", (dir / "overlay.png").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto overlay = read_png(dir / "overlay.png");
  ASSERT_EQ(overlay.channels, 3);
  for (std::size_t i = 0; i < overlay.data.size(); i += 3)
    EXPECT_TRUE(overlay.data[i] == overlay.data[i + 1] && overlay.data[i + 1] == overlay.data[i + 2]);
}

TEST(CliTest, SuperpixelsDefaultsToThreeThousand) {
  TempDir dir;
  write_gray(GrayImage::Constant(800, 640, 0.5), dir / "page.png");
  const auto r = run_cli({"superpixels", (dir / "page.png").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("80x100"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("requested 3000"), std::string::npos) << r.out;
}

TEST(CliTest, EvalReportsWorkedExample) {
  TempDir dir;
  fs::create_directories(dir / "pred");
  fs::create_directories(dir / "gt");
  const auto palette = Palette::standard().prefix(2);
  write_palette(dir / "palette.txt", palette);
  // Truth row 0 x4, row 1 x6; confusion [[3,1],[2,4]].
  LabelImage truth(1, 10), pred(1, 10);
  truth << 0, 0, 0, 0, 1, 1, 1, 1, 1, 1;
  pred << 0, 0, 0, 1, 0, 0, 1, 1, 1, 1;
  write_labels(truth, palette, dir / "gt" / "a.png");
  write_labels(pred, palette, dir / "pred" / "a.png");
  const auto r = run_cli({"eval", "--pred", (dir / "pred").string(), "--gt", (dir / "gt").string(), "--palette",
                          (dir / "palette.txt").string(), "--name", "toy", "--csv", (dir / "s.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("toy,70,71,54,54,"), std::string::npos) << r.out;
  std::ifstream csv(dir / "s.csv");
  std::string header, row;
  std::getline(csv, header);
  std::getline(csv, row);
  EXPECT_EQ(header.rfind("dataset,pixel_acc,mean_acc,mean_iu,fw_iu", 0), 0u);
  EXPECT_EQ(row.rfind("toy,70,71,54,54,", 0), 0u);
}

TEST(CliTest, EvalPerfectPredictionAndFullSizeTruth) {
  TempDir dir;
  fs::create_directories(dir / "pred");
  fs::create_directories(dir / "gt");
  const auto doc = testing::make_synthetic_doc(2, 64);
  const auto palette = testing::synthetic_palette();
  write_palette(dir / "palette.txt", palette);
  write_labels(doc.labels, palette, dir / "gt" / "p.png");
  write_labels(downscale_labels(doc.labels, 3), palette, dir / "pred" / "p.png");
  const auto r = run_cli({"eval", "--pred", (dir / "pred").string(), "--gt", (dir / "gt").string(), "--palette",
                          (dir / "palette.txt").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find(",100,100,100,100,"), std::string::npos) << r.out;
}

TEST(CliTest, EvalRejectsUnmatchedFiles) {
  TempDir dir;
  fs::create_directories(dir / "pred");
  fs::create_directories(dir / "gt");
  write_labels(LabelImage::Zero(2, 2), Palette::standard(), dir / "pred" / "a.png");
  write_labels(LabelImage::Zero(2, 2), Palette::standard(), dir / "gt" / "b.png");
  EXPECT_NE(run_cli({"eval", "--pred", (dir / "pred").string(), "--gt", (dir / "gt").string()}).code, 0);
}

class CliDatasetTest : public ::testing::Test {
 protected:
  void SetUp() override {
    testing::write_synthetic_dataset(dir_.path() / "train", 10, 3, 64);
    testing::write_synthetic_dataset(dir_.path() / "test", 50, 2, 64);
    write_palette(dir_ / "palette.txt", testing::synthetic_palette());
  }
  fs::path path(const std::string& name) const { return dir_ / name; }
  std::vector<std::string> train_args(const fs::path& model) const {
    return concat({"train", "--images", (path("train") / "images").string(), "--labels",
                   (path("train") / "labels").string(), "--model", model.string()},
                  quick_flags(path("palette.txt")));
  }

  TempDir dir_;
};

TEST_F(CliDatasetTest, TrainIsByteDeterministic) {
  const auto a = run_cli(concat(train_args(path("a.hseg")), {"--log", path("log.csv").string()}));
  const auto b = run_cli(train_args(path("b.hseg")));
  ASSERT_EQ(a.code, 0) << a.err;
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(read_bytes(path("a.hseg")), read_bytes(path("b.hseg")));
  const auto c = run_cli(concat(train_args(path("c.hseg")), {"--seed", "7"}));
  ASSERT_EQ(c.code, 0) << c.err;
  EXPECT_NE(read_bytes(path("a.hseg")), read_bytes(path("c.hseg")));

  std::ifstream log(path("log.csv"));
  std::string line;
  int lines = 0;
  while (std::getline(log, line)) ++lines;
  EXPECT_EQ(lines, 6);
}

TEST_F(CliDatasetTest, PatchCountIsSuperpixelTotal) {
  const auto r = run_cli(train_args(path("m.hseg")));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto palette = testing::synthetic_palette();
  PipelineOptions opts;
  opts.scale_exponent = 0;
  opts.superpixels = 60;
  const auto pages = load_pages(match_pairs(path("train") / "images", path("train") / "labels"), palette, opts);
  std::size_t total = 0;
  for (const auto& p : pages) total += p.superpixels.superpixels.size();
  EXPECT_NE(r.out.find("patches: " + std::to_string(total) + "\n"), std::string::npos) << r.out;
}

TEST_F(CliDatasetTest, ZeroBatchesSavesInitialNetwork) {
  auto args = train_args(path("m.hseg"));
  *(std::find(args.begin(), args.end(), "--batches") + 1) = "0";
  ASSERT_EQ(run_cli(args).code, 0);
  const auto model = load_model(path("m.hseg"));
  nn::NetworkConfig cfg;
  cfg.dense_width = 10;
  cfg.num_classes = 3;
  nn::Network<double> fresh(cfg, 42);
  nn::quantize_to_float(fresh);
  EXPECT_EQ(serialize_model(model.network, model.palette), serialize_model(fresh, testing::synthetic_palette()));
}

TEST_F(CliDatasetTest, SegmentWritesPaletteColoredMaps) {
  ASSERT_EQ(run_cli(train_args(path("m.hseg"))).code, 0);
  const auto r = run_cli({"segment", "--model", path("m.hseg").string(), "--input", (path("test") / "images").string(),
                          "--output", path("out").string(), "--scale-exp", "1", "--superpixels", "40"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto palette = testing::synthetic_palette();
  for (const auto* name : {"doc00.png", "doc01.png"}) {
    const auto raw = read_png(path("out") / name);
    EXPECT_EQ(raw.width, 32);
    EXPECT_EQ(raw.height, 32);
    EXPECT_NO_THROW(labels_from_raw(raw, palette));
  }
}

TEST_F(CliDatasetTest, SegmentRejectsForeignPalette) {
  ASSERT_EQ(run_cli(train_args(path("m.hseg"))).code, 0);
  write_palette(path("five.txt"), Palette::standard());
  const auto r = run_cli({"segment", "--model", path("m.hseg").string(), "--input",
                          (path("test") / "images" / "doc00.png").string(), "--output", path("o.png").string(),
                          "--palette", path("five.txt").string()});
  EXPECT_NE(r.code, 0);
}

TEST_F(CliDatasetTest, SegmentationCountsMatchSuperpixelSizes) {
  ASSERT_EQ(run_cli(train_args(path("m.hseg"))).code, 0);
  const auto model = load_model(path("m.hseg"));
  PipelineOptions opts;
  opts.scale_exponent = 0;
  opts.superpixels = 60;
  const auto seg = segment_image(model.network, load_gray(path("test") / "images" / "doc00.png"), opts);
  for (int c = 0; c < 3; ++c) {
    std::size_t expected = 0;
    for (const auto& sp : seg.superpixels.superpixels)
      if (seg.superpixel_labels[static_cast<std::size_t>(sp.id)] == c) expected += sp.members.size();
    EXPECT_EQ(static_cast<std::size_t>((seg.labels == c).count()), expected);
  }
}

TEST_F(CliDatasetTest, KernelSweepEmitsEightRows) {
  const auto r = run_cli(concat({"sweep", "kernels", "--train-images", (path("train") / "images").string(),
                                 "--train-labels", (path("train") / "labels").string(), "--test-images",
                                 (path("test") / "images").string(), "--test-labels",
                                 (path("test") / "labels").string(), "--csv", path("sweep.csv").string()},
                                quick_flags(path("palette.txt"))));
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream csv(path("sweep.csv"));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "sweep_value,pixel_acc,mean_acc,mean_iu,fw_iu");
  std::vector<int> values;
  while (std::getline(csv, line)) values.push_back(std::stoi(line.substr(0, line.find(','))));
  EXPECT_EQ(values, kKernelSweep);
}

TEST_F(CliDatasetTest, TrainImageSweepIsTruncatedToAvailablePages) {
  SweepArgs args;
  args.kind = SweepKind::train_images;
  EXPECT_EQ(sweep_values(args, 3), (std::vector<int>{1, 2}));
  EXPECT_EQ(sweep_values(args, 10), (std::vector<int>{1, 2, 4, 8, 10}));
  args.values = {5};
  EXPECT_THROW(sweep_values(args, 3), std::invalid_argument);

  const auto r = run_cli(concat({"sweep", "train_images", "--train-images", (path("train") / "images").string(),
                                 "--train-labels", (path("train") / "labels").string(), "--test-images",
                                 (path("test") / "images").string(), "--test-labels",
                                 (path("test") / "labels").string(), "--values", "4"},
                                quick_flags(path("palette.txt"))));
  EXPECT_NE(r.code, 0);
}

TEST(SweepTest, LayerSweepUsesTwoMoreKernelsPerLayer) {
  SweepArgs args;
  args.kind = SweepKind::layers;
  args.max_depth = 3;
  EXPECT_EQ(sweep_values(args, 1), (std::vector<int>{1, 2, 3}));
  const nn::NetworkConfig base;
  EXPECT_EQ(sweep_network(SweepKind::layers, 3, base).conv_kernel_counts, (std::vector<int>{4, 6, 8}));
  EXPECT_EQ(sweep_network(SweepKind::kernels, 12, base).conv_kernel_counts, (std::vector<int>{12}));
  EXPECT_EQ(sweep_network(SweepKind::train_images, 8, base), base);
  EXPECT_EQ(parse_sweep_kind("layers"), SweepKind::layers);
  EXPECT_THROW(parse_sweep_kind("depth"), std::invalid_argument);
}

TEST_F(CliDatasetTest, ParallelSweepMatchesSequential) {
  const auto palette = testing::synthetic_palette();
  SweepArgs args;
  args.kind = SweepKind::kernels;
  args.values = {1, 2};
  args.run.pipeline.scale_exponent = 0;
  args.run.pipeline.superpixels = 60;
  args.run.network.num_classes = 3;
  args.run.network.dense_width = 10;
  args.run.train.num_batches = 5;
  args.run.train.batch_size = 8;
  const auto train = load_pages(match_pairs(path("train") / "images", path("train") / "labels"), palette,
                                args.run.pipeline);
  const auto test = load_pages(match_pairs(path("test") / "images", path("test") / "labels"), palette,
                               args.run.pipeline);
  const auto seq = run_sweep(args, train, test);
  args.parallel = true;
  const auto par = run_sweep(args, train, test);
  ASSERT_EQ(seq.size(), 2u);
  ASSERT_EQ(par.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(seq[i].value, par[i].value);
    EXPECT_EQ(seq[i].scores.fw_iu, par[i].scores.fw_iu);
  }
}

}  // namespace
}  // namespace hseg::cli
