#pragma once

#include <Eigen/Core>

#include <cstdint>

#include "hseg/image.hpp"

namespace hseg {

/// counts(i, j): pixels of true class i predicted as class j.
class ConfusionMatrix {
 public:
  using Counts = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

  explicit ConfusionMatrix(int num_classes);
  explicit ConfusionMatrix(Counts counts);

  int num_classes() const { return static_cast<int>(counts_.rows()); }
  const Counts& counts() const { return counts_; }
  std::int64_t operator()(int truth, int pred) const { return counts_(truth, pred); }

  std::int64_t total() const { return counts_.sum(); }
  /// t_i: ground-truth pixels of class i (row sum).
  std::int64_t truth_count(int i) const { return counts_.row(i).sum(); }
  /// Pixels predicted as class i (column sum).
  std::int64_t predicted_count(int i) const { return counts_.col(i).sum(); }

  /// Adds one pixel per position; images must match in size and hold labels < num_classes().
  void accumulate(const LabelImage& pred, const LabelImage& truth);

  /// Elementwise sum, for reducing per-image matrices.
  void merge(const ConfusionMatrix& other);

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  Counts counts_;
};

ConfusionMatrix accumulate(ConfusionMatrix cm, const LabelImage& pred, const LabelImage& truth);

/// sum_i n_ii / sum_i t_i
double pixel_accuracy(const ConfusionMatrix& cm);

/// Mean of n_ii / t_i over classes present in the ground truth.
double mean_accuracy(const ConfusionMatrix& cm);

/// n_ii / (t_i + predicted_i - n_ii), averaged over classes present in truth or prediction.
double class_iu(const ConfusionMatrix& cm, int i);
double mean_iu(const ConfusionMatrix& cm);

/// sum_i t_i * IU_i / sum_k t_k
double fw_iu(const ConfusionMatrix& cm);

struct SegmentationScores {
  double pixel_accuracy = 0;
  double mean_accuracy = 0;
  double mean_iu = 0;
  double fw_iu = 0;
};

SegmentationScores score(const ConfusionMatrix& cm);

}  // namespace hseg
