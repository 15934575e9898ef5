#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "hseg/dataset.hpp"
#include "hseg/nn/network.hpp"

namespace hseg::nn {

struct TrainConfig {
  double learning_rate = 0.01;
  int batch_size = 128;
  int num_batches = 5000;
  double dropout_p = 0.5;
  std::uint64_t seed = 42;
  /// Batches between validation callbacks.
  int validation_interval = 500;

  void validate() const;
};

struct TrainLogEntry {
  int batch_index = 0;
  double mean_loss = 0.0;
  std::optional<double> validation_accuracy;
};

struct TrainLog {
  std::vector<TrainLogEntry> entries;

  /// CSV with header `batch_index,mean_loss,validation_accuracy`; the last
  /// column is empty where no validation ran.
  void write_csv(std::ostream& out) const;
};

/// Called every `validation_interval` batches (and after the last one);
/// returns an accuracy in [0, 1].
using Validator = std::function<double(const Network<double>&)>;

/// Plain SGD over `num_batches` mini-batches, each drawn uniformly with
/// replacement from `set`. Dropout masks the hidden dense layer during
/// training only. Deterministic for a fixed seed.
TrainLog train(Network<double>& net, const PatchSet& set, const TrainConfig& cfg, const Validator& validator = {});

/// Fraction of patches whose predicted class matches their label.
double patch_accuracy(const Network<double>& net, const PatchSet& set);

}  // namespace hseg::nn
