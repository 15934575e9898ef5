#include "hseg/nn/train.hpp"

#include <iomanip>
#include <ostream>
#include <stdexcept>

namespace hseg::nn {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  if (num_batches < 0) throw std::invalid_argument("batch count must be >= 0");
  if (!(dropout_p >= 0.0 && dropout_p < 1.0)) throw std::invalid_argument("dropout must be in [0, 1)");
  if (validation_interval < 1) throw std::invalid_argument("validation interval must be >= 1");
}

void TrainLog::write_csv(std::ostream& out) const {
  out << "batch_index,mean_loss,validation_accuracy\n";
  const auto flags = out.flags();
  const auto prec = out.precision();
  out << std::setprecision(10);
  for (const auto& e : entries) {
    out << e.batch_index << ',' << e.mean_loss << ',';
    if (e.validation_accuracy) out << *e.validation_accuracy;
    out << '\n';
  }
  out.flags(flags);
  out.precision(prec);
}

TrainLog train(Network<double>& net, const PatchSet& set, const TrainConfig& cfg, const Validator& validator) {
  cfg.validate();
  if (set.empty()) throw std::invalid_argument("train: empty patch set");
  if (set.num_classes != net.config().num_classes)
    throw std::invalid_argument("train: patch set has " + std::to_string(set.num_classes) + " classes, network " +
                                std::to_string(net.config().num_classes));

  TrainLog log;
  SplitMix64 rng(cfg.seed);
  SplitMix64 sampler = rng.split();
  SplitMix64 dropout_rng = rng.split();

  const auto n = static_cast<std::size_t>(cfg.batch_size);
  std::vector<std::size_t> indices(n);
  const double keep = 1.0 / (1.0 - cfg.dropout_p);
  Matrix<double> mask(net.config().dense_width, cfg.batch_size);

  for (int b = 0; b < cfg.num_batches; ++b) {
    for (auto& i : indices) i = static_cast<std::size_t>(sampler.below(set.size()));
    const auto batch = make_batch<double>(set, indices);

    const Matrix<double>* mask_ptr = nullptr;
    if (cfg.dropout_p > 0.0) {
      for (Index s = 0; s < mask.cols(); ++s)
        for (Index u = 0; u < mask.rows(); ++u) mask(u, s) = dropout_rng.bernoulli(cfg.dropout_p) ? 0.0 : keep;
      mask_ptr = &mask;
    }

    const auto result = backward(net, batch, mask_ptr);
    sgd_step(net, result.grads, cfg.learning_rate);

    TrainLogEntry entry{b, result.loss, std::nullopt};
    const bool last = b + 1 == cfg.num_batches;
    if (validator && ((b + 1) % cfg.validation_interval == 0 || last)) entry.validation_accuracy = validator(net);
    log.entries.push_back(entry);
  }
  return log;
}

double patch_accuracy(const Network<double>& net, const PatchSet& set) {
  if (set.empty()) throw std::invalid_argument("patch_accuracy: empty patch set");
  const auto predicted = predict_labels(net, std::span<const Patch>(set.patches));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) correct += predicted[i] == set.patches[i].label.value_or(-1);
  return static_cast<double>(correct) / static_cast<double>(predicted.size());
}

}  // namespace hseg::nn
