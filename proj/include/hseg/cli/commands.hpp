#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hseg/dataset.hpp"
#include "hseg/image.hpp"
#include "hseg/metrics.hpp"
#include "hseg/nn/network.hpp"
#include "hseg/nn/train.hpp"
#include "hseg/pipeline.hpp"

namespace hseg::cli {

namespace fs = std::filesystem;

/// Everything a train/segment/sweep run depends on. Defaults:
/// 2^-3 scaling, 3000 superpixels, one conv layer of 4
/// kernels, 100 hidden units, 5000 batches of 128, dropout 0.5.
struct RunConfig {
  PipelineOptions pipeline;
  nn::NetworkConfig network;
  nn::TrainConfig train;
  std::optional<fs::path> palette_path;

  Palette palette() const;
};

struct DatasetPair {
  std::string stem;
  fs::path image;
  fs::path labels;
};

/// PNG files present in both directories under the same stem, sorted by stem.
/// Throws if none match.
std::vector<DatasetPair> match_pairs(const fs::path& image_dir, const fs::path& label_dir);

/// Loads, downscales and superpixel-segments every pair.
std::vector<LabeledPage> load_pages(const std::vector<DatasetPair>& pairs, const Palette& palette,
                                    const PipelineOptions& options);

struct TrainedModel {
  nn::Network<double> network;
  nn::TrainLog log;
  std::size_t patch_count = 0;
};

/// Builds the patch set from `pages`, trains a fresh network (seeded from
/// cfg.train.seed) and rounds its parameters to float32 so that the in-memory
/// network equals what save_model writes.
TrainedModel train_on_pages(std::span<const LabeledPage> pages, const RunConfig& cfg,
                            std::span<const LabeledPage> validation = {});

/// Classifies the superpixels already attached to each page.
LabelImage segment_page(const nn::Network<double>& net, const LabeledPage& page);

/// Dataset-level confusion matrix over all pages.
ConfusionMatrix evaluate_pages(const nn::Network<double>& net, std::span<const LabeledPage> pages);

/// Pixel accuracy of segment_page over `pages`.
double pixel_accuracy_on(const nn::Network<double>& net, std::span<const LabeledPage> pages);

// Subcommands. Each throws on error; the executable maps that to exit code 1.

struct SuperpixelsArgs {
  fs::path input;
  fs::path assignment_out;
  fs::path overlay_out;
  PipelineOptions pipeline;
};
void cmd_superpixels(const SuperpixelsArgs& args, std::ostream& out);

struct TrainArgs {
  fs::path images;
  fs::path labels;
  fs::path model_out;
  std::optional<fs::path> log_out;
  std::optional<fs::path> val_images;
  std::optional<fs::path> val_labels;
  RunConfig run;
};
void cmd_train(const TrainArgs& args, std::ostream& out);

struct SegmentArgs {
  fs::path model;
  fs::path input;   // a PNG, or a directory of PNGs
  fs::path output;  // a PNG, or a directory when input is one
  RunConfig run;    // pipeline options and optional palette check
};
void cmd_segment(const SegmentArgs& args, std::ostream& out);

struct EvalArgs {
  fs::path predictions;
  fs::path ground_truth;
  std::string dataset_name = "dataset";
  std::optional<fs::path> csv_out;
  int scale_exponent = 3;
  std::optional<fs::path> palette_path;
};
SegmentationScores cmd_eval(const EvalArgs& args, std::ostream& out);

/// "dataset,pixel_acc,mean_acc,mean_iu,fw_iu,..." with integer percentages
/// followed by full-precision fractions.
std::string scores_csv_header();
std::string scores_csv_row(const std::string& name, const SegmentationScores& s);
std::string scores_table(const std::string& name, const SegmentationScores& s);

enum class SweepKind { kernels, layers, train_images };

SweepKind parse_sweep_kind(const std::string& s);

inline const std::vector<int> kKernelSweep = {1, 2, 4, 6, 8, 10, 12, 14};
inline const std::vector<int> kTrainImageSweep = {1, 2, 4, 8, 10, 12, 14, 16, 18, 20};

struct SweepArgs {
  SweepKind kind = SweepKind::kernels;
  fs::path train_images;
  fs::path train_labels;
  fs::path test_images;
  fs::path test_labels;
  std::vector<int> values;  // empty: the default sweep for `kind`
  int max_depth = 3;
  bool parallel = false;
  std::optional<fs::path> csv_out;
  RunConfig run;
};

struct SweepPoint {
  int value = 0;
  nn::NetworkConfig network;
  std::size_t train_images = 0;
  SegmentationScores scores;
};

/// Sweep values after defaults and truncation, e.g. train_images capped at
/// the number of available training pages.
std::vector<int> sweep_values(const SweepArgs& args, std::size_t available_train_images);

/// Network config for one sweep point.
nn::NetworkConfig sweep_network(SweepKind kind, int value, const nn::NetworkConfig& base);

std::vector<SweepPoint> run_sweep(const SweepArgs& args, std::span<const LabeledPage> train_pages,
                                  std::span<const LabeledPage> test_pages);
std::vector<SweepPoint> cmd_sweep(const SweepArgs& args, std::ostream& out);

/// "sweep_value,pixel_acc,mean_acc,mean_iu,fw_iu" rows.
void write_sweep_csv(const std::vector<SweepPoint>& points, std::ostream& out);

/// Full command-line entry point; returns the process exit code.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace hseg::cli
