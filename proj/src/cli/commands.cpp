#include "hseg/cli/commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "hseg/model_file.hpp"
#include "hseg/superpixel.hpp"

namespace hseg::cli {

Palette RunConfig::palette() const { return palette_path ? Palette::load(*palette_path) : Palette::standard(); }

namespace {

std::map<std::string, fs::path> pngs_by_stem(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::map<std::string, fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    auto ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png") out[entry.path().stem().string()] = entry.path();
  }
  return out;
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
}

int percent(double v) { return static_cast<int>(std::lround(100.0 * v)); }

}  // namespace

std::vector<DatasetPair> match_pairs(const fs::path& image_dir, const fs::path& label_dir) {
  const auto images = pngs_by_stem(image_dir);
  const auto labels = pngs_by_stem(label_dir);
  std::vector<DatasetPair> pairs;
  for (const auto& [stem, path] : images)
    if (auto it = labels.find(stem); it != labels.end()) pairs.push_back({stem, path, it->second});
  if (pairs.empty())
    throw std::runtime_error("no image/label pairs with matching names in " + image_dir.string() + " and " +
                             label_dir.string());
  return pairs;
}

std::vector<LabeledPage> load_pages(const std::vector<DatasetPair>& pairs, const Palette& palette,
                                    const PipelineOptions& options) {
  std::vector<LabeledPage> pages;
  pages.reserve(pairs.size());
  for (const auto& p : pairs)
    pages.push_back(prepare_page(p.stem, load_gray(p.image), load_labels(p.labels, palette), options));
  return pages;
}

TrainedModel train_on_pages(std::span<const LabeledPage> pages, const RunConfig& cfg,
                            std::span<const LabeledPage> validation) {
  const auto set = build_training_set(pages, cfg.network.num_classes, cfg.network.input_side);
  TrainedModel m{nn::Network<double>(cfg.network, cfg.train.seed), {}, set.size()};
  nn::Validator validator;
  if (!validation.empty())
    validator = [validation](const nn::Network<double>& net) { return pixel_accuracy_on(net, validation); };
  m.log = nn::train(m.network, set, cfg.train, validator);
  nn::quantize_to_float(m.network);
  return m;
}

LabelImage segment_page(const nn::Network<double>& net, const LabeledPage& page) {
  const auto patches = inference_patches(page.image, page.superpixels, net.config().input_side);
  const auto labels = nn::predict_labels(net, std::span<const Patch>(patches));
  return project_labels(page.superpixels, labels);
}

ConfusionMatrix evaluate_pages(const nn::Network<double>& net, std::span<const LabeledPage> pages) {
  ConfusionMatrix cm(net.config().num_classes);
  for (const auto& page : pages) cm.accumulate(segment_page(net, page), page.labels);
  return cm;
}

double pixel_accuracy_on(const nn::Network<double>& net, std::span<const LabeledPage> pages) {
  return pixel_accuracy(evaluate_pages(net, pages));
}

void cmd_superpixels(const SuperpixelsArgs& args, std::ostream& out) {
  const auto img = downscale(load_gray(args.input), args.pipeline.scale_exponent);
  const auto map = slic(img, args.pipeline.superpixels, args.pipeline.slic);
  if (!args.assignment_out.empty()) write_assignment_png(map, args.assignment_out);
  if (!args.overlay_out.empty()) write_boundary_overlay(img, map, args.overlay_out);
  out << args.input.string() << ": " << img.cols() << "x" << img.rows() << ", " << map.size()
      << " superpixels (requested " << args.pipeline.superpixels << ")\n";
}

void cmd_train(const TrainArgs& args, std::ostream& out) {
  RunConfig run = args.run;
  const auto palette = run.palette();
  run.network.num_classes = palette.size();
  const auto pairs = match_pairs(args.images, args.labels);
  const auto pages = load_pages(pairs, palette, run.pipeline);
  std::vector<LabeledPage> validation;
  if (args.val_images || args.val_labels) {
    if (!args.val_images || !args.val_labels)
      throw std::invalid_argument("--val-images and --val-labels must be given together");
    validation = load_pages(match_pairs(*args.val_images, *args.val_labels), palette, run.pipeline);
  }
  out << "training pages: " << pages.size() << "\nnetwork: " << run.network.describe() << '\n';

  const auto start = std::chrono::steady_clock::now();
  const auto model = train_on_pages(pages, run, validation);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  out << "patches: " << model.patch_count << "\nbatches: " << model.log.entries.size();
  if (!model.log.entries.empty()) out << ", final loss " << model.log.entries.back().mean_loss;
  out << " (" << std::fixed << std::setprecision(1) << secs << " s)\n" << std::defaultfloat;

  save_model(model.network, palette, args.model_out);
  if (args.log_out) {
    std::ofstream f(*args.log_out);
    if (!f) throw IoError("cannot write " + args.log_out->string());
    model.log.write_csv(f);
  }
  out << "model written to " << args.model_out.string() << '\n';
}

void cmd_segment(const SegmentArgs& args, std::ostream& out) {
  const auto model = load_model(args.model);
  if (args.run.palette_path && Palette::load(*args.run.palette_path) != model.palette)
    throw std::invalid_argument("palette " + args.run.palette_path->string() + " differs from the model's palette");

  std::vector<std::pair<fs::path, fs::path>> jobs;
  if (fs::is_directory(args.input)) {
    fs::create_directories(args.output);
    for (const auto& [stem, path] : pngs_by_stem(args.input)) jobs.emplace_back(path, args.output / (stem + ".png"));
    if (jobs.empty()) throw std::runtime_error("no PNG files in " + args.input.string());
  } else {
    jobs.emplace_back(args.input, args.output);
  }

  for (const auto& [in, dst] : jobs) {
    const auto start = std::chrono::steady_clock::now();
    const auto seg = segment_image(model.network, load_gray(in), args.run.pipeline);
    write_labels(seg.labels, model.palette, dst);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out << in.string() << " -> " << dst.string() << " (" << seg.labels.cols() << "x" << seg.labels.rows() << ", "
        << seg.superpixels.size() << " superpixels, " << std::fixed << std::setprecision(2) << secs << " s)\n"
        << std::defaultfloat;
  }
}

std::string scores_csv_header() {
  return "dataset,pixel_acc,mean_acc,mean_iu,fw_iu,pixel_acc_exact,mean_acc_exact,mean_iu_exact,fw_iu_exact";
}

std::string scores_csv_row(const std::string& name, const SegmentationScores& s) {
  std::ostringstream os;
  os << name << ',' << percent(s.pixel_accuracy) << ',' << percent(s.mean_accuracy) << ',' << percent(s.mean_iu) << ','
     << percent(s.fw_iu) << std::setprecision(17) << ',' << s.pixel_accuracy << ',' << s.mean_accuracy << ','
     << s.mean_iu << ',' << s.fw_iu;
  return os.str();
}

std::string scores_table(const std::string& name, const SegmentationScores& s) {
  std::ostringstream os;
  const int w = std::max<int>(10, static_cast<int>(name.size()) + 2);
  os << std::left << std::setw(w) << "dataset" << std::right << std::setw(12) << "pixel acc." << std::setw(11)
     << "mean acc." << std::setw(9) << "mean IU" << std::setw(9) << "f.w. IU" << '\n'
     << std::left << std::setw(w) << name << std::right << std::setw(12) << percent(s.pixel_accuracy) << std::setw(11)
     << percent(s.mean_accuracy) << std::setw(9) << percent(s.mean_iu) << std::setw(9) << percent(s.fw_iu) << '\n';
  return os.str();
}

SegmentationScores cmd_eval(const EvalArgs& args, std::ostream& out) {
  const auto palette = args.palette_path ? Palette::load(*args.palette_path) : Palette::standard();
  const auto preds = pngs_by_stem(args.predictions);
  const auto truths = pngs_by_stem(args.ground_truth);
  for (const auto& [stem, path] : preds)
    if (!truths.count(stem)) throw std::runtime_error("prediction " + path.string() + " has no ground truth");
  for (const auto& [stem, path] : truths)
    if (!preds.count(stem)) throw std::runtime_error("ground truth " + path.string() + " has no prediction");
  if (preds.empty()) throw std::runtime_error("no PNG files in " + args.predictions.string());

  ConfusionMatrix cm(palette.size());
  for (const auto& [stem, pred_path] : preds) {
    const auto pred = load_labels(pred_path, palette);
    auto truth = load_labels(truths.at(stem), palette);
    if (truth.rows() != pred.rows() || truth.cols() != pred.cols()) {
      // Full-resolution ground truth is reduced the same way as training labels.
      if ((truth.rows() >> args.scale_exponent) != pred.rows() || (truth.cols() >> args.scale_exponent) != pred.cols())
        throw std::invalid_argument(stem + ": prediction is " + std::to_string(pred.cols()) + "x" +
                                    std::to_string(pred.rows()) + ", ground truth " + std::to_string(truth.cols()) +
                                    "x" + std::to_string(truth.rows()));
      truth = downscale_labels(truth, args.scale_exponent);
    }
    cm.accumulate(pred, truth);
  }
  const auto s = score(cm);
  out << scores_table(args.dataset_name, s) << '\n' << scores_csv_header() << '\n' << scores_csv_row(args.dataset_name, s) << '\n';
  if (args.csv_out)
    write_text_file(*args.csv_out, scores_csv_header() + "\n" + scores_csv_row(args.dataset_name, s) + "\n");
  return s;
}

namespace {

void add_pipeline_flags(CLI::App* app, PipelineOptions& p) {
  app->add_option("--scale-exp", p.scale_exponent, "Downscale images by 2^-k")->capture_default_str()->check(CLI::Range(0, 16));
  app->add_option("--superpixels", p.superpixels, "Superpixels per (downscaled) image")->capture_default_str()->check(CLI::PositiveNumber);
  app->add_option("--compactness", p.slic.compactness, "SLIC compactness m")->capture_default_str()->check(CLI::PositiveNumber);
  app->add_option("--slic-iterations", p.slic.iterations, "SLIC k-means iterations")->capture_default_str()->check(CLI::PositiveNumber);
}

void add_run_flags(CLI::App* app, RunConfig& run) {
  add_pipeline_flags(app, run.pipeline);
  app->add_option("--kernels", run.network.conv_kernel_counts, "Kernels per conv layer (comma separated for several layers)")
      ->delimiter(',')
      ->capture_default_str();
  app->add_flag("--max-pool", run.network.use_max_pool, "Add a 2x2 max-pooling layer after the conv stack");
  app->add_option("--dense", run.network.dense_width, "Hidden dense layer width")->capture_default_str()->check(CLI::PositiveNumber);
  app->add_option("--lr", run.train.learning_rate, "SGD learning rate")->capture_default_str()->check(CLI::PositiveNumber);
  app->add_option("--batch-size", run.train.batch_size, "Patches per batch")->capture_default_str()->check(CLI::PositiveNumber);
  app->add_option("--batches", run.train.num_batches, "Number of training batches")->capture_default_str()->check(CLI::NonNegativeNumber);
  app->add_option("--dropout", run.train.dropout_p, "Dropout probability on the hidden layer")->capture_default_str()->check(CLI::Range(0.0, 0.999999));
  app->add_option("--seed", run.train.seed, "Random seed")->capture_default_str();
  app->add_option("--palette", run.palette_path, "Palette file (name=R,G,B per line)");
}

}  // namespace

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Page segmentation of historical document images with a small CNN"};
  app.require_subcommand(1);

  SuperpixelsArgs sp_args;
  auto* sp = app.add_subcommand("superpixels", "Compute SLIC superpixels of an image");
  sp->add_option("input", sp_args.input, "Input PNG")->required();
  sp->add_option("--assignment", sp_args.assignment_out, "16-bit PNG of superpixel ids")->capture_default_str();
  sp->add_option("--overlay", sp_args.overlay_out, "PNG with superpixel boundaries drawn in red");
  add_pipeline_flags(sp, sp_args.pipeline);

  TrainArgs tr_args;
  auto* tr = app.add_subcommand("train", "Train a network on image/label-map pairs");
  tr->add_option("--images", tr_args.images, "Directory of page images")->required();
  tr->add_option("--labels", tr_args.labels, "Directory of color-coded label maps")->required();
  tr->add_option("--model", tr_args.model_out, "Output model file")->required();
  tr->add_option("--log", tr_args.log_out, "Training log CSV");
  tr->add_option("--val-images", tr_args.val_images, "Validation images");
  tr->add_option("--val-labels", tr_args.val_labels, "Validation label maps");
  add_run_flags(tr, tr_args.run);

  SegmentArgs sg_args;
  auto* sg = app.add_subcommand("segment", "Label every pixel of a page");
  sg->add_option("--model", sg_args.model, "Model file")->required();
  sg->add_option("--input", sg_args.input, "Input PNG or directory")->required();
  sg->add_option("--output", sg_args.output, "Output label map PNG or directory")->required();
  add_pipeline_flags(sg, sg_args.run.pipeline);
  sg->add_option("--palette", sg_args.run.palette_path, "Expected palette; must match the model");

  EvalArgs ev_args;
  auto* ev = app.add_subcommand("eval", "Score predicted label maps against ground truth");
  ev->add_option("--pred", ev_args.predictions, "Directory of predicted label maps")->required();
  ev->add_option("--gt", ev_args.ground_truth, "Directory of ground-truth label maps")->required();
  ev->add_option("--name", ev_args.dataset_name, "Dataset name for the report")->capture_default_str();
  ev->add_option("--csv", ev_args.csv_out, "Write the CSV row to this file");
  ev->add_option("--scale-exp", ev_args.scale_exponent, "Reduction applied to full-size ground truth")->capture_default_str();
  ev->add_option("--palette", ev_args.palette_path, "Palette file");

  SweepArgs sw_args;
  std::string sweep_kind;
  auto* sw = app.add_subcommand("sweep", "Train and evaluate over a range of one hyperparameter");
  sw->add_option("kind", sweep_kind, "kernels | layers | train_images")->required()->check(CLI::IsMember({"kernels", "layers", "train_images"}));
  sw->add_option("--train-images", sw_args.train_images)->required();
  sw->add_option("--train-labels", sw_args.train_labels)->required();
  sw->add_option("--test-images", sw_args.test_images)->required();
  sw->add_option("--test-labels", sw_args.test_labels)->required();
  sw->add_option("--values", sw_args.values, "Explicit sweep values")->delimiter(',');
  sw->add_option("--max-depth", sw_args.max_depth, "Deepest network of the layers sweep")->capture_default_str();
  sw->add_flag("--parallel", sw_args.parallel, "Run sweep points concurrently");
  sw->add_option("--csv", sw_args.csv_out, "Write the sweep CSV to this file");
  add_run_flags(sw, sw_args.run);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*sp) {
      cmd_superpixels(sp_args, out);
    } else if (*tr) {
      cmd_train(tr_args, out);
    } else if (*sg) {
      cmd_segment(sg_args, out);
    } else if (*ev) {
      cmd_eval(ev_args, out);
    } else if (*sw) {
      sw_args.kind = parse_sweep_kind(sweep_kind);
      cmd_sweep(sw_args, out);
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace hseg::cli
