#include <algorithm>
#include <fstream>
#include <future>
#include <iomanip>
#include <ostream>
#include <stdexcept>

#include "hseg/cli/commands.hpp"

namespace hseg::cli {

SweepKind parse_sweep_kind(const std::string& s) {
  if (s == "kernels") return SweepKind::kernels;
  if (s == "layers") return SweepKind::layers;
  if (s == "train_images") return SweepKind::train_images;
  throw std::invalid_argument("unknown sweep kind '" + s + "'");
}

std::vector<int> sweep_values(const SweepArgs& args, std::size_t available_train_images) {
  const auto available = static_cast<int>(available_train_images);
  if (!args.values.empty()) {
    for (int v : args.values) {
      if (v < 1) throw std::invalid_argument("sweep values must be >= 1");
      if (args.kind == SweepKind::train_images && v > available)
        throw std::invalid_argument("sweep asks for " + std::to_string(v) + " training images but only " +
                                    std::to_string(available) + " are available");
    }
    return args.values;
  }
  switch (args.kind) {
    case SweepKind::kernels:
      return kKernelSweep;
    case SweepKind::layers: {
      if (args.max_depth < 1) throw std::invalid_argument("--max-depth must be >= 1");
      std::vector<int> v(static_cast<std::size_t>(args.max_depth));
      for (int d = 0; d < args.max_depth; ++d) v[static_cast<std::size_t>(d)] = d + 1;
      return v;
    }
    case SweepKind::train_images: {
      std::vector<int> v;
      std::copy_if(kTrainImageSweep.begin(), kTrainImageSweep.end(), std::back_inserter(v),
                   [&](int n) { return n <= available; });
      if (v.empty()) throw std::invalid_argument("no training images available for the sweep");
      return v;
    }
  }
  return {};
}

nn::NetworkConfig sweep_network(SweepKind kind, int value, const nn::NetworkConfig& base) {
  nn::NetworkConfig cfg = base;
  switch (kind) {
    case SweepKind::kernels:
      cfg.conv_kernel_counts = {value};
      break;
    case SweepKind::layers:
      cfg.conv_kernel_counts = nn::layer_sweep_kernels(value);
      break;
    case SweepKind::train_images:
      break;
  }
  cfg.validate();
  return cfg;
}

std::vector<SweepPoint> run_sweep(const SweepArgs& args, std::span<const LabeledPage> train_pages,
                                  std::span<const LabeledPage> test_pages) {
  const auto values = sweep_values(args, train_pages.size());

  // Seeds are drawn in sweep order so results do not depend on --parallel.
  SplitMix64 master(args.run.train.seed);
  std::vector<std::uint64_t> seeds;
  for (std::size_t i = 0; i < values.size(); ++i) seeds.push_back(master.next());

  auto run_point = [&](std::size_t i) {
    SweepPoint p;
    p.value = values[i];
    RunConfig cfg = args.run;
    cfg.network = sweep_network(args.kind, p.value, args.run.network);
    cfg.train.seed = seeds[i];
    const std::size_t n = args.kind == SweepKind::train_images ? static_cast<std::size_t>(p.value) : train_pages.size();
    const auto model = train_on_pages(train_pages.first(n), cfg);
    p.network = cfg.network;
    p.train_images = n;
    p.scores = score(evaluate_pages(model.network, test_pages));
    return p;
  };

  std::vector<SweepPoint> points;
  if (args.parallel) {
    std::vector<std::future<SweepPoint>> futures;
    for (std::size_t i = 0; i < values.size(); ++i) futures.push_back(std::async(std::launch::async, run_point, i));
    for (auto& f : futures) points.push_back(f.get());
  } else {
    for (std::size_t i = 0; i < values.size(); ++i) points.push_back(run_point(i));
  }
  return points;
}

void write_sweep_csv(const std::vector<SweepPoint>& points, std::ostream& out) {
  out << "sweep_value,pixel_acc,mean_acc,mean_iu,fw_iu\n" << std::setprecision(10);
  for (const auto& p : points)
    out << p.value << ',' << p.scores.pixel_accuracy << ',' << p.scores.mean_accuracy << ',' << p.scores.mean_iu << ','
        << p.scores.fw_iu << '\n';
}

std::vector<SweepPoint> cmd_sweep(const SweepArgs& args, std::ostream& out) {
  SweepArgs a = args;
  const auto palette = a.run.palette();
  a.run.network.num_classes = palette.size();
  const auto train_pages = load_pages(match_pairs(a.train_images, a.train_labels), palette, a.run.pipeline);
  const auto test_pages = load_pages(match_pairs(a.test_images, a.test_labels), palette, a.run.pipeline);
  const auto points = run_sweep(a, train_pages, test_pages);
  write_sweep_csv(points, out);
  if (a.csv_out) {
    std::ofstream f(*a.csv_out);
    if (!f) throw IoError("cannot write " + a.csv_out->string());
    write_sweep_csv(points, f);
  }
  return points;
}

}  // namespace hseg::cli
