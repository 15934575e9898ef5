#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hseg/rng.hpp"

namespace hseg {

using Index = Eigen::Index;
using Shape = std::vector<Index>;

inline std::string format_shape(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

inline Index shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), Index{1}, std::multiplies<>());
}

class ShapeError : public std::invalid_argument {
 public:
  ShapeError(const std::string& op, const Shape& a, const Shape& b)
      : std::invalid_argument(op + ": shape mismatch " + format_shape(a) + " vs " +
                              format_shape(b)) {}
  using std::invalid_argument::invalid_argument;
};

/// Dense row-major array of arbitrary rank backed by an Eigen vector.
template <typename Scalar>
class Tensor {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using RowMajorMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using MatrixMap = Eigen::Map<RowMajorMatrix>;
  using ConstMatrixMap = Eigen::Map<const RowMajorMatrix>;

  Tensor() = default;

  explicit Tensor(Shape shape) : shape_(std::move(shape)), data_(Vector::Zero(shape_size(shape_))) {
    check_dims();
  }

  Tensor(Shape shape, Vector data) : shape_(std::move(shape)), data_(std::move(data)) {
    check_dims();
    if (data_.size() != shape_size(shape_))
      throw ShapeError("Tensor", shape_, Shape{data_.size()});
  }

  Tensor(Shape shape, std::initializer_list<Scalar> values)
      : Tensor(std::move(shape), Vector(Eigen::Map<const Vector>(values.begin(),
                                                                 static_cast<Index>(values.size())))) {}

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }

  static Tensor constant(Shape shape, Scalar value) {
    Tensor t(std::move(shape));
    t.data_.setConstant(value);
    return t;
  }

  const Shape& shape() const { return shape_; }
  Index rank() const { return static_cast<Index>(shape_.size()); }
  Index dim(Index i) const { return shape_.at(static_cast<std::size_t>(i)); }
  Index size() const { return data_.size(); }

  Vector& values() { return data_; }
  const Vector& values() const { return data_; }
  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }

  Scalar& operator[](Index i) { return data_[i]; }
  Scalar operator[](Index i) const { return data_[i]; }

  template <typename... I>
  Scalar& operator()(I... idx) {
    return data_[offset({static_cast<Index>(idx)...})];
  }
  template <typename... I>
  Scalar operator()(I... idx) const {
    return data_[offset({static_cast<Index>(idx)...})];
  }

  /// Row-major matrix view with `rows * cols == size()`.
  MatrixMap matrix(Index rows, Index cols) {
    if (rows * cols != size()) throw ShapeError("matrix", shape_, Shape{rows, cols});
    return MatrixMap(data_.data(), rows, cols);
  }
  ConstMatrixMap matrix(Index rows, Index cols) const {
    if (rows * cols != size()) throw ShapeError("matrix", shape_, Shape{rows, cols});
    return ConstMatrixMap(data_.data(), rows, cols);
  }

  bool all_finite() const { return data_.allFinite(); }

  void validate() const {
    if (!all_finite()) throw std::domain_error("tensor " + format_shape(shape_) + " has non-finite values");
  }

  template <typename Other>
  Tensor<Other> cast() const {
    return Tensor<Other>(shape_, data_.template cast<Other>());
  }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  void check_dims() const {
    for (Index d : shape_)
      if (d < 0) throw std::invalid_argument("negative dimension in " + format_shape(shape_));
  }

  Index offset(std::initializer_list<Index> idx) const {
    if (static_cast<std::size_t>(idx.size()) != shape_.size())
      throw std::out_of_range("index rank does not match tensor " + format_shape(shape_));
    Index off = 0;
    std::size_t k = 0;
    for (Index i : idx) {
      if (i < 0 || i >= shape_[k]) throw std::out_of_range("index out of range for " + format_shape(shape_));
      off = off * shape_[k++] + i;
    }
    return off;
  }

  Shape shape_;
  Vector data_;
};

using TensorD = Tensor<double>;
using TensorF = Tensor<float>;

template <typename Scalar>
Tensor<Scalar> matvec(const Tensor<Scalar>& w, const Tensor<Scalar>& x) {
  if (w.rank() != 2 || x.rank() != 1 || w.dim(1) != x.dim(0)) throw ShapeError("matvec", w.shape(), x.shape());
  typename Tensor<Scalar>::Vector y = w.matrix(w.dim(0), w.dim(1)) * x.values();
  return Tensor<Scalar>({w.dim(0)}, std::move(y));
}

template <typename Scalar>
Tensor<Scalar> add(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  if (a.shape() != b.shape()) throw ShapeError("add", a.shape(), b.shape());
  return Tensor<Scalar>(a.shape(), a.values() + b.values());
}

template <typename Scalar>
Tensor<Scalar> scale(const Tensor<Scalar>& a, Scalar s) {
  return Tensor<Scalar>(a.shape(), a.values() * s);
}

template <typename Scalar>
Tensor<Scalar> hadamard(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  if (a.shape() != b.shape()) throw ShapeError("hadamard", a.shape(), b.shape());
  return Tensor<Scalar>(a.shape(), a.values().cwiseProduct(b.values()));
}

template <typename Scalar>
Tensor<Scalar> reshape(const Tensor<Scalar>& a, Shape shape) {
  if (shape_size(shape) != a.size()) throw ShapeError("reshape", a.shape(), shape);
  return Tensor<Scalar>(std::move(shape), a.values());
}

template <typename Scalar>
Tensor<Scalar> operator+(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  return add(a, b);
}

template <typename Scalar = double>
Tensor<Scalar> rng_uniform(Shape shape, double lo, double hi, SplitMix64& rng) {
  if (!(lo < hi)) throw std::invalid_argument("rng_uniform: lo must be < hi");
  Tensor<Scalar> t(std::move(shape));
  for (Index i = 0; i < t.size(); ++i) {
    auto v = static_cast<Scalar>(rng.uniform(lo, hi));
    t[i] = v < static_cast<Scalar>(hi) ? v : std::nextafter(static_cast<Scalar>(hi), static_cast<Scalar>(lo));
  }
  return t;
}

template <typename Scalar = double>
Tensor<Scalar> rng_uniform(Shape shape, double lo, double hi, std::uint64_t seed) {
  SplitMix64 rng(seed);
  return rng_uniform<Scalar>(std::move(shape), lo, hi, rng);
}

}  // namespace hseg
