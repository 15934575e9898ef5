#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hseg/rng.hpp"
#include "hseg/tensor.hpp"

namespace hseg::nn {

inline constexpr int kKernelSide = 3;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// kernels: [K, C_in, 3, 3], biases: [K].
template <typename Scalar>
struct ConvLayer {
  Tensor<Scalar> kernels;
  Tensor<Scalar> biases;

  ConvLayer() = default;
  ConvLayer(Index out_channels, Index in_channels)
      : kernels({out_channels, in_channels, kKernelSide, kKernelSide}), biases({out_channels}) {
    if (out_channels < 1 || in_channels < 1) throw std::invalid_argument("ConvLayer: channel counts must be >= 1");
  }

  Index out_channels() const { return kernels.dim(0); }
  Index in_channels() const { return kernels.dim(1); }

  /// K x (C_in * 9) view, row k holding kernel k in (c, u, v) order.
  auto kernel_matrix() const { return kernels.matrix(out_channels(), in_channels() * kKernelSide * kKernelSide); }
  auto kernel_matrix() { return kernels.matrix(out_channels(), in_channels() * kKernelSide * kKernelSide); }
};

/// weights: [out, in], biases: [out].
template <typename Scalar>
struct DenseLayer {
  Tensor<Scalar> weights;
  Tensor<Scalar> biases;

  DenseLayer() = default;
  DenseLayer(Index out, Index in) : weights({out, in}), biases({out}) {
    if (out < 1 || in < 1) throw std::invalid_argument("DenseLayer: sizes must be >= 1");
  }

  Index out_features() const { return weights.dim(0); }
  Index in_features() const { return weights.dim(1); }

  auto weight_matrix() const { return weights.matrix(out_features(), in_features()); }
  auto weight_matrix() { return weights.matrix(out_features(), in_features()); }
};

namespace detail {

/// Unrolls 3x3 windows of a [C, H, W] block into a (C*9) x (H-2)(W-2) matrix.
template <typename Scalar>
void im2col(const Scalar* input, Index channels, Index height, Index width, RowMatrix<Scalar>& cols) {
  const Index oh = height - 2, ow = width - 2;
  cols.resize(channels * 9, oh * ow);
  for (Index c = 0; c < channels; ++c)
    for (Index u = 0; u < 3; ++u)
      for (Index v = 0; v < 3; ++v) {
        Scalar* row = cols.row((c * 3 + u) * 3 + v).data();
        const Scalar* plane = input + c * height * width;
        for (Index i = 0; i < oh; ++i) {
          const Scalar* src = plane + (i + u) * width + v;
          std::copy(src, src + ow, row + i * ow);
        }
      }
}

/// Adds the columns back onto a zeroed [C, H, W] block (adjoint of im2col).
template <typename Scalar>
void col2im_add(const RowMatrix<Scalar>& cols, Index channels, Index height, Index width, Scalar* out) {
  const Index oh = height - 2, ow = width - 2;
  for (Index c = 0; c < channels; ++c)
    for (Index u = 0; u < 3; ++u)
      for (Index v = 0; v < 3; ++v) {
        const Scalar* row = cols.row((c * 3 + u) * 3 + v).data();
        Scalar* plane = out + c * height * width;
        for (Index i = 0; i < oh; ++i) {
          Scalar* dst = plane + (i + u) * width + v;
          for (Index j = 0; j < ow; ++j) dst[j] += row[i * ow + j];
        }
      }
}

inline void check_spatial(const Shape& s, Index min_side, const char* op) {
  if (s.size() != 3 || s[1] < min_side || s[2] < min_side)
    throw ShapeError(std::string(op) + ": expected [C, H, W] with H, W >= " + std::to_string(min_side) + ", got " +
                     format_shape(s));
}

}  // namespace detail

/// Valid 3x3 cross-correlation with stride 1:
///   out[k, i, j] = b_k + sum_{c,u,v} kernel[k, c, u, v] * input[c, i + u, j + v]
template <typename Scalar>
Tensor<Scalar> conv_forward(const ConvLayer<Scalar>& layer, const Tensor<Scalar>& input) {
  detail::check_spatial(input.shape(), 3, "conv_forward");
  if (input.dim(0) != layer.in_channels())
    throw ShapeError("conv_forward", layer.kernels.shape(), input.shape());
  const Index h = input.dim(1), w = input.dim(2);
  RowMatrix<Scalar> cols;
  detail::im2col(input.data(), input.dim(0), h, w, cols);
  Tensor<Scalar> out({layer.out_channels(), h - 2, w - 2});
  auto o = out.matrix(layer.out_channels(), (h - 2) * (w - 2));
  o.noalias() = layer.kernel_matrix() * cols;
  o.colwise() += layer.biases.values();
  return out;
}

/// Accumulates parameter gradients into `grad` and returns dL/dinput.
template <typename Scalar>
Tensor<Scalar> conv_backward(const ConvLayer<Scalar>& layer, const Tensor<Scalar>& input,
                             const Tensor<Scalar>& grad_out, ConvLayer<Scalar>& grad) {
  const Index c = input.dim(0), h = input.dim(1), w = input.dim(2);
  if (grad_out.shape() != Shape{layer.out_channels(), h - 2, w - 2})
    throw ShapeError("conv_backward", grad_out.shape(), Shape{layer.out_channels(), h - 2, w - 2});
  RowMatrix<Scalar> cols;
  detail::im2col(input.data(), c, h, w, cols);
  const auto g = grad_out.matrix(layer.out_channels(), (h - 2) * (w - 2));
  grad.kernel_matrix().noalias() += g * cols.transpose();
  grad.biases.values() += g.rowwise().sum();
  RowMatrix<Scalar> dcols = layer.kernel_matrix().transpose() * g;
  Tensor<Scalar> grad_in(input.shape());
  detail::col2im_add(dcols, c, h, w, grad_in.data());
  return grad_in;
}

template <typename Scalar>
Tensor<Scalar> relu(const Tensor<Scalar>& x) {
  return Tensor<Scalar>(x.shape(), x.values().cwiseMax(Scalar(0)));
}

/// Gradient through ReLU given its output (units with output 0 pass nothing).
template <typename Scalar>
Tensor<Scalar> relu_backward(const Tensor<Scalar>& out, const Tensor<Scalar>& grad_out) {
  if (out.shape() != grad_out.shape()) throw ShapeError("relu_backward", out.shape(), grad_out.shape());
  return Tensor<Scalar>(out.shape(), (out.values().array() > Scalar(0)).select(grad_out.values(), Scalar(0)));
}

template <typename Scalar>
struct MaxPoolResult {
  Tensor<Scalar> output;
  std::vector<Index> argmax;  // flat input offset of each output's maximum
};

/// Non-overlapping 2x2 max pooling; an odd trailing row/column is dropped.
/// Ties resolve to the first element in row-major window order.
template <typename Scalar>
MaxPoolResult<Scalar> maxpool_forward(const Tensor<Scalar>& input) {
  detail::check_spatial(input.shape(), 2, "maxpool_forward");
  const Index c = input.dim(0), h = input.dim(1), w = input.dim(2);
  const Index oh = h / 2, ow = w / 2;
  MaxPoolResult<Scalar> r{Tensor<Scalar>({c, oh, ow}), std::vector<Index>(static_cast<std::size_t>(c * oh * ow))};
  Index o = 0;
  for (Index k = 0; k < c; ++k)
    for (Index i = 0; i < oh; ++i)
      for (Index j = 0; j < ow; ++j, ++o) {
        Index best = (k * h + 2 * i) * w + 2 * j;
        for (Index di = 0; di < 2; ++di)
          for (Index dj = 0; dj < 2; ++dj) {
            const Index idx = (k * h + 2 * i + di) * w + 2 * j + dj;
            if (input[idx] > input[best]) best = idx;
          }
        r.output[o] = input[best];
        r.argmax[static_cast<std::size_t>(o)] = best;
      }
  return r;
}

template <typename Scalar>
Tensor<Scalar> maxpool_backward(const Shape& input_shape, const std::vector<Index>& argmax,
                                const Tensor<Scalar>& grad_out) {
  if (static_cast<std::size_t>(grad_out.size()) != argmax.size())
    throw ShapeError("maxpool_backward", grad_out.shape(), Shape{static_cast<Index>(argmax.size())});
  Tensor<Scalar> grad_in(input_shape);
  for (std::size_t o = 0; o < argmax.size(); ++o) grad_in[argmax[o]] += grad_out[static_cast<Index>(o)];
  return grad_in;
}

template <typename Scalar>
Tensor<Scalar> dense_forward(const DenseLayer<Scalar>& layer, const Tensor<Scalar>& x) {
  return add(matvec(layer.weights, x), layer.biases);
}

/// p_i = exp(z_i - max z) / sum_j exp(z_j - max z)
template <typename Scalar>
Tensor<Scalar> softmax(const Tensor<Scalar>& logits) {
  if (logits.rank() != 1 || logits.size() == 0) throw ShapeError("softmax", logits.shape(), Shape{-1});
  Vector<Scalar> e = (logits.values().array() - logits.values().maxCoeff()).exp().matrix();
  e /= e.sum();
  return Tensor<Scalar>(logits.shape(), std::move(e));
}

inline constexpr double kLogFloor = 1e-12;

/// -ln(max(p[label], 1e-12))
template <typename Scalar>
Scalar cross_entropy(const Tensor<Scalar>& probs, int label) {
  if (label < 0 || label >= probs.size())
    throw std::out_of_range("cross_entropy: label " + std::to_string(label) + " outside " + format_shape(probs.shape()));
  return -std::log(std::max(probs[label], static_cast<Scalar>(kLogFloor)));
}

/// Lowest index among maximal entries.
template <typename Derived>
int argmax(const Eigen::MatrixBase<Derived>& v) {
  Index best = 0;
  for (Index i = 1; i < v.size(); ++i)
    if (v(i) > v(best)) best = i;
  return static_cast<int>(best);
}

template <typename Scalar>
struct DropoutResult {
  Tensor<Scalar> output;
  Tensor<Scalar> mask;  // 0 for dropped units, 1/(1-p) for survivors
};

/// Inverted dropout: each unit is zeroed with probability p, survivors are scaled by 1/(1-p).
template <typename Scalar>
DropoutResult<Scalar> apply_dropout(const Tensor<Scalar>& activations, double p, SplitMix64& rng) {
  if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("apply_dropout: p must be in [0, 1)");
  Tensor<Scalar> mask = Tensor<Scalar>::constant(activations.shape(), Scalar(1));
  if (p > 0.0) {
    const auto keep = static_cast<Scalar>(1.0 / (1.0 - p));
    for (Index i = 0; i < mask.size(); ++i) mask[i] = rng.bernoulli(p) ? Scalar(0) : keep;
  }
  return {hadamard(activations, mask), std::move(mask)};
}

}  // namespace hseg::nn
