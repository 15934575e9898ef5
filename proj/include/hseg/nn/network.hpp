#pragma once

#include <Eigen/Core>

#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hseg/dataset.hpp"
#include "hseg/nn/layers.hpp"
#include "hseg/rng.hpp"
#include "hseg/tensor.hpp"

namespace hseg::nn {

struct NetworkConfig {
  std::vector<int> conv_kernel_counts{4};
  bool use_max_pool = false;
  int dense_width = 100;
  int num_classes = 5;
  int input_side = kPatchSide;

  void validate() const {
    if (conv_kernel_counts.empty()) throw std::invalid_argument("network needs at least one conv layer");
    for (int k : conv_kernel_counts)
      if (k < 1) throw std::invalid_argument("conv kernel counts must be >= 1");
    if (dense_width < 1) throw std::invalid_argument("dense width must be >= 1");
    if (num_classes < 2) throw std::invalid_argument("need at least 2 classes");
    if (input_side < 1) throw std::invalid_argument("input side must be positive");
    const int side = conv_output_side();
    if (side < 1) throw std::invalid_argument("input side too small for the conv stack");
    if (use_max_pool && side < 2) throw std::invalid_argument("conv output too small for 2x2 pooling");
  }

  int depth() const { return static_cast<int>(conv_kernel_counts.size()); }
  int conv_output_side() const { return input_side - 2 * depth(); }
  int feature_side() const { return use_max_pool ? conv_output_side() / 2 : conv_output_side(); }
  int feature_count() const { return feature_side() * feature_side() * conv_kernel_counts.back(); }

  /// Layer shapes as (height, width, channels) for spatial stages and (units)
  /// afterwards, e.g. {28,28,1} {26,26,4} {100} {M} for the default config.
  std::vector<Shape> shape_chain() const {
    std::vector<Shape> chain{{input_side, input_side, 1}};
    int side = input_side;
    for (int k : conv_kernel_counts) {
      side -= 2;
      chain.push_back({side, side, k});
    }
    if (use_max_pool) chain.push_back({side / 2, side / 2, conv_kernel_counts.back()});
    chain.push_back({dense_width});
    chain.push_back({num_classes});
    return chain;
  }

  std::string describe() const {
    std::ostringstream os;
    bool first = true;
    for (const auto& s : shape_chain()) {
      if (!first) os << " - ";
      first = false;
      for (std::size_t i = 0; i < s.size(); ++i) os << (i ? " x " : "") << s[i];
    }
    return os.str();
  }

  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

/// Kernel counts for a depth-d stack where each layer has two more kernels
/// than the previous one, starting from `first`.
inline std::vector<int> layer_sweep_kernels(int depth, int first = 4) {
  if (depth < 1) throw std::invalid_argument("depth must be >= 1");
  std::vector<int> counts;
  for (int d = 0; d < depth; ++d) counts.push_back(first + 2 * d);
  return counts;
}

/// All learnable tensors of a network; gradients use the same type.
template <typename Scalar>
struct Parameters {
  std::vector<ConvLayer<Scalar>> conv;
  DenseLayer<Scalar> hidden;
  DenseLayer<Scalar> output;

  /// Tensors in serialization order: conv kernels/biases per layer, hidden, output.
  std::vector<Tensor<Scalar>*> tensors() {
    std::vector<Tensor<Scalar>*> out;
    for (auto& c : conv) {
      out.push_back(&c.kernels);
      out.push_back(&c.biases);
    }
    for (auto* d : {&hidden, &output}) {
      out.push_back(&d->weights);
      out.push_back(&d->biases);
    }
    return out;
  }
  std::vector<const Tensor<Scalar>*> tensors() const {
    std::vector<const Tensor<Scalar>*> out;
    for (auto* t : const_cast<Parameters*>(this)->tensors()) out.push_back(t);
    return out;
  }

  Index count() const {
    Index n = 0;
    for (const auto* t : tensors()) n += t->size();
    return n;
  }

  static Parameters zeros(const NetworkConfig& cfg) {
    cfg.validate();
    Parameters p;
    Index in_channels = 1;
    for (int k : cfg.conv_kernel_counts) {
      p.conv.emplace_back(k, in_channels);
      in_channels = k;
    }
    p.hidden = DenseLayer<Scalar>(cfg.dense_width, cfg.feature_count());
    p.output = DenseLayer<Scalar>(cfg.num_classes, cfg.dense_width);
    return p;
  }
};

/// A mini-batch: one flattened input patch per column.
template <typename Scalar>
struct Batch {
  Matrix<Scalar> inputs;
  std::vector<int> labels;

  Index size() const { return inputs.cols(); }
};

template <typename Scalar>
Batch<Scalar> make_batch(std::span<const Patch> patches) {
  Batch<Scalar> b;
  if (patches.empty()) return b;
  const Index n = patches.front().values.size();
  b.inputs.resize(n, static_cast<Index>(patches.size()));
  for (std::size_t i = 0; i < patches.size(); ++i) {
    const auto& p = patches[i];
    if (p.values.size() != n) throw std::invalid_argument("make_batch: patches differ in size");
    b.inputs.col(static_cast<Index>(i)) = Eigen::Map<const Vector<double>>(p.values.data(), n).template cast<Scalar>();
    b.labels.push_back(p.label.value_or(-1));
  }
  return b;
}

template <typename Scalar>
Batch<Scalar> make_batch(const PatchSet& set, std::span<const std::size_t> indices) {
  Batch<Scalar> b;
  if (indices.empty()) return b;
  const Index n = set.patches.at(indices.front()).values.size();
  b.inputs.resize(n, static_cast<Index>(indices.size()));
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto& p = set.patches.at(indices[i]);
    b.inputs.col(static_cast<Index>(i)) = Eigen::Map<const Vector<double>>(p.values.data(), n).template cast<Scalar>();
    b.labels.push_back(p.label.value_or(-1));
  }
  return b;
}

/// Activations recorded by a batch forward pass; each column is one sample.
template <typename Scalar>
struct ForwardCache {
  std::vector<Matrix<Scalar>> conv_out;  // post-ReLU, [K, H, W] flattened per column
  std::vector<std::vector<Index>> pool_argmax;
  Matrix<Scalar> features;  // input to the hidden dense layer
  Matrix<Scalar> hidden;    // post-ReLU, before dropout
  Matrix<Scalar> hidden_dropped;
  Matrix<Scalar> probs;
};

/// conv (3x3, ReLU) x depth -> [2x2 max pool] -> dense (ReLU, dropout) -> dense -> softmax
template <typename Scalar>
class Network {
 public:
  Network() = default;

  /// Zero biases; weights uniform in +-sqrt(6 / (fan_in + fan_out)).
  Network(NetworkConfig config, SplitMix64& rng) : config_(std::move(config)) {
    params_ = Parameters<Scalar>::zeros(config_);
    for (auto& c : params_.conv) {
      const double fan_in = static_cast<double>(c.in_channels() * 9), fan_out = static_cast<double>(c.out_channels() * 9);
      const double a = std::sqrt(6.0 / (fan_in + fan_out));
      c.kernels = rng_uniform<Scalar>(c.kernels.shape(), -a, a, rng);
    }
    for (auto* d : {&params_.hidden, &params_.output}) {
      const double a = std::sqrt(6.0 / static_cast<double>(d->in_features() + d->out_features()));
      d->weights = rng_uniform<Scalar>(d->weights.shape(), -a, a, rng);
    }
  }

  Network(NetworkConfig config, std::uint64_t seed) {
    SplitMix64 rng(seed);
    *this = Network(std::move(config), rng);
  }

  Network(NetworkConfig config, Parameters<Scalar> params) : config_(std::move(config)), params_(std::move(params)) {
    config_.validate();
    auto expect = Parameters<Scalar>::zeros(config_);
    const auto a = expect.tensors();
    const auto b = params_.tensors();
    if (a.size() != b.size()) throw ShapeError("Network: parameter layer count does not match config");
    for (std::size_t i = 0; i < a.size(); ++i)
      if (a[i]->shape() != b[i]->shape()) throw ShapeError("Network", a[i]->shape(), b[i]->shape());
  }

  const NetworkConfig& config() const { return config_; }
  Parameters<Scalar>& parameters() { return params_; }
  const Parameters<Scalar>& parameters() const { return params_; }

  /// Batch forward pass. `dropout_mask` (dense_width x batch, entries 0 or
  /// 1/(1-p)) is applied to the hidden layer when given.
  ForwardCache<Scalar> forward(const Matrix<Scalar>& inputs, const Matrix<Scalar>* dropout_mask = nullptr) const {
    const Index n = inputs.cols();
    const Index side = config_.input_side;
    if (inputs.rows() != side * side)
      throw ShapeError("Network::forward", Shape{inputs.rows(), n}, Shape{side * side, n});
    ForwardCache<Scalar> cache;
    const Matrix<Scalar>* in = &inputs;
    Index channels = 1, h = side;
    RowMatrix<Scalar> cols;
    for (const auto& layer : params_.conv) {
      const Index oh = h - 2, k = layer.out_channels();
      Matrix<Scalar> out(k * oh * oh, n);
      for (Index s = 0; s < n; ++s) {
        detail::im2col(in->col(s).data(), channels, h, h, cols);
        Eigen::Map<RowMatrix<Scalar>> o(out.col(s).data(), k, oh * oh);
        o.noalias() = layer.kernel_matrix() * cols;
        o.colwise() += layer.biases.values();
      }
      out = out.cwiseMax(Scalar(0));
      cache.conv_out.push_back(std::move(out));
      in = &cache.conv_out.back();
      channels = k;
      h = oh;
    }
    if (config_.use_max_pool) {
      const Index oh = h / 2;
      cache.features.resize(channels * oh * oh, n);
      cache.pool_argmax.resize(static_cast<std::size_t>(n));
      for (Index s = 0; s < n; ++s) {
        Tensor<Scalar> t({channels, h, h}, in->col(s));
        auto r = maxpool_forward(t);
        cache.features.col(s) = r.output.values();
        cache.pool_argmax[static_cast<std::size_t>(s)] = std::move(r.argmax);
      }
    } else {
      cache.features = *in;
    }

    const auto w1 = params_.hidden.weight_matrix();
    cache.hidden.noalias() = w1 * cache.features;
    cache.hidden.colwise() += params_.hidden.biases.values();
    cache.hidden = cache.hidden.cwiseMax(Scalar(0));
    if (dropout_mask) {
      if (dropout_mask->rows() != cache.hidden.rows() || dropout_mask->cols() != n)
        throw ShapeError("dropout mask", Shape{dropout_mask->rows(), dropout_mask->cols()},
                         Shape{cache.hidden.rows(), n});
      cache.hidden_dropped = cache.hidden.cwiseProduct(*dropout_mask);
    } else {
      cache.hidden_dropped = cache.hidden;
    }

    Matrix<Scalar> logits = params_.output.weight_matrix() * cache.hidden_dropped;
    logits.colwise() += params_.output.biases.values();
    cache.probs.resize(logits.rows(), n);
    for (Index s = 0; s < n; ++s) {
      auto z = logits.col(s);
      cache.probs.col(s) = (z.array() - z.maxCoeff()).exp().matrix();
      cache.probs.col(s) /= cache.probs.col(s).sum();
    }
    return cache;
  }

  /// Softmax outputs, one column per input column.
  Matrix<Scalar> probabilities(const Matrix<Scalar>& inputs) const { return forward(inputs).probs; }

 private:
  NetworkConfig config_;
  Parameters<Scalar> params_;
};

/// Mean cross-entropy of a batch.
template <typename Scalar>
Scalar batch_loss(const Matrix<Scalar>& probs, std::span<const int> labels) {
  if (static_cast<std::size_t>(probs.cols()) != labels.size())
    throw std::invalid_argument("batch_loss: label count does not match batch");
  Scalar sum = 0;
  for (Index s = 0; s < probs.cols(); ++s) {
    const int y = labels[static_cast<std::size_t>(s)];
    if (y < 0 || y >= probs.rows()) throw std::out_of_range("batch_loss: label " + std::to_string(y) + " out of range");
    sum += -std::log(std::max(probs(y, s), static_cast<Scalar>(kLogFloor)));
  }
  return sum / static_cast<Scalar>(probs.cols());
}

template <typename Scalar>
Scalar batch_loss(const Network<Scalar>& net, const Batch<Scalar>& batch, const Matrix<Scalar>* dropout_mask = nullptr) {
  return batch_loss<Scalar>(net.forward(batch.inputs, dropout_mask).probs, batch.labels);
}

template <typename Scalar>
struct BackwardResult {
  Parameters<Scalar> grads;
  Scalar loss = 0;
};

/// Exact gradients of the mean cross-entropy over the batch. The combined
/// softmax/cross-entropy gradient at the logits is (p - onehot(y)) / n.
template <typename Scalar>
BackwardResult<Scalar> backward(const Network<Scalar>& net, const Batch<Scalar>& batch,
                                const Matrix<Scalar>* dropout_mask = nullptr) {
  const Index n = batch.size();
  if (n == 0) throw std::invalid_argument("backward: empty batch");
  if (static_cast<Index>(batch.labels.size()) != n) throw std::invalid_argument("backward: label count does not match batch");
  const auto& cfg = net.config();
  const auto& params = net.parameters();
  const auto cache = net.forward(batch.inputs, dropout_mask);

  BackwardResult<Scalar> r;
  r.grads = Parameters<Scalar>::zeros(cfg);
  r.loss = batch_loss<Scalar>(cache.probs, batch.labels);

  Matrix<Scalar> d_logits = cache.probs;
  for (Index s = 0; s < n; ++s) d_logits(batch.labels[static_cast<std::size_t>(s)], s) -= Scalar(1);
  d_logits /= static_cast<Scalar>(n);

  r.grads.output.weight_matrix().noalias() = d_logits * cache.hidden_dropped.transpose();
  r.grads.output.biases.values() = d_logits.rowwise().sum();

  Matrix<Scalar> d_hidden = params.output.weight_matrix().transpose() * d_logits;
  if (dropout_mask) d_hidden = d_hidden.cwiseProduct(*dropout_mask);
  d_hidden = (cache.hidden.array() > Scalar(0)).select(d_hidden, Scalar(0));

  r.grads.hidden.weight_matrix().noalias() = d_hidden * cache.features.transpose();
  r.grads.hidden.biases.values() = d_hidden.rowwise().sum();

  Matrix<Scalar> d_features = params.hidden.weight_matrix().transpose() * d_hidden;

  const int depth = cfg.depth();
  Matrix<Scalar> d_out;  // gradient w.r.t. the post-ReLU output of the current conv layer
  Index h = cfg.conv_output_side();
  if (cfg.use_max_pool) {
    d_out = Matrix<Scalar>::Zero(cache.conv_out.back().rows(), n);
    for (Index s = 0; s < n; ++s) {
      const auto& am = cache.pool_argmax[static_cast<std::size_t>(s)];
      for (std::size_t o = 0; o < am.size(); ++o) d_out(am[o], s) += d_features(static_cast<Index>(o), s);
    }
  } else {
    d_out = std::move(d_features);
  }

  RowMatrix<Scalar> cols;
  for (int l = depth - 1; l >= 0; --l) {
    const auto& layer = params.conv[static_cast<std::size_t>(l)];
    auto& grad = r.grads.conv[static_cast<std::size_t>(l)];
    const Index k = layer.out_channels(), c = layer.in_channels(), in_side = h + 2;
    const Matrix<Scalar>& in = l == 0 ? batch.inputs : cache.conv_out[static_cast<std::size_t>(l - 1)];
    const Matrix<Scalar>& out = cache.conv_out[static_cast<std::size_t>(l)];
    Matrix<Scalar> d_pre = (out.array() > Scalar(0)).select(d_out, Scalar(0));
    Matrix<Scalar> d_in;
    if (l > 0) d_in = Matrix<Scalar>::Zero(c * in_side * in_side, n);
    auto gk = grad.kernel_matrix();
    for (Index s = 0; s < n; ++s) {
      detail::im2col(in.col(s).data(), c, in_side, in_side, cols);
      Eigen::Map<const RowMatrix<Scalar>> g(d_pre.col(s).data(), k, h * h);
      gk.noalias() += g * cols.transpose();
      grad.biases.values() += g.rowwise().sum();
      if (l > 0) {
        RowMatrix<Scalar> dcols = layer.kernel_matrix().transpose() * g;
        detail::col2im_add(dcols, c, in_side, in_side, d_in.col(s).data());
      }
    }
    d_out = std::move(d_in);
    h = in_side;
  }
  return r;
}

/// theta <- theta - lr * grad for every parameter tensor.
template <typename Scalar>
void sgd_step(Network<Scalar>& net, const Parameters<Scalar>& grads, Scalar lr) {
  auto p = net.parameters().tensors();
  const auto g = grads.tensors();
  if (p.size() != g.size()) throw ShapeError("sgd_step: parameter and gradient layer counts differ");
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i]->shape() != g[i]->shape()) throw ShapeError("sgd_step", p[i]->shape(), g[i]->shape());
  for (std::size_t i = 0; i < p.size(); ++i) p[i]->values() -= lr * g[i]->values();
}

struct Prediction {
  int label = 0;
  std::vector<double> probabilities;
};

/// Argmax of the softmax output; ties go to the lowest class index.
template <typename Scalar>
Prediction predict(const Network<Scalar>& net, const Patch& patch) {
  const Index side = net.config().input_side;
  if (patch.values.rows() != side || patch.values.cols() != side)
    throw std::invalid_argument("predict: patch is " + std::to_string(patch.values.rows()) + "x" +
                                std::to_string(patch.values.cols()) + ", network expects " + std::to_string(side));
  Matrix<Scalar> x = Eigen::Map<const Vector<double>>(patch.values.data(), side * side).template cast<Scalar>();
  const Matrix<Scalar> p = net.probabilities(x);
  Prediction out;
  out.label = argmax(p.col(0));
  out.probabilities.assign(p.data(), p.data() + p.size());
  return out;
}

/// Class of every patch, evaluated in chunks.
template <typename Scalar>
std::vector<int> predict_labels(const Network<Scalar>& net, std::span<const Patch> patches, std::size_t chunk = 256) {
  std::vector<int> out;
  out.reserve(patches.size());
  for (std::size_t start = 0; start < patches.size(); start += chunk) {
    const auto part = patches.subspan(start, std::min(chunk, patches.size() - start));
    const auto batch = make_batch<Scalar>(part);
    const Matrix<Scalar> p = net.probabilities(batch.inputs);
    for (Index s = 0; s < p.cols(); ++s) out.push_back(argmax(p.col(s)));
  }
  return out;
}

/// Rounds every parameter through float32, the precision models are stored at.
template <typename Scalar>
void quantize_to_float(Network<Scalar>& net) {
  for (auto* t : net.parameters().tensors()) t->values() = t->values().template cast<float>().template cast<Scalar>();
}

}  // namespace hseg::nn
