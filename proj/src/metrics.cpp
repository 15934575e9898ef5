#include "hseg/metrics.hpp"

#include <stdexcept>
#include <string>

namespace hseg {

ConfusionMatrix::ConfusionMatrix(int num_classes) {
  if (num_classes < 1) throw std::invalid_argument("confusion matrix needs at least one class");
  counts_ = Counts::Zero(num_classes, num_classes);
}

ConfusionMatrix::ConfusionMatrix(Counts counts) : counts_(std::move(counts)) {
  if (counts_.rows() < 1 || counts_.rows() != counts_.cols())
    throw std::invalid_argument("confusion matrix must be square and nonempty");
  if ((counts_.array() < 0).any()) throw std::invalid_argument("confusion matrix counts must be nonnegative");
}

void ConfusionMatrix::accumulate(const LabelImage& pred, const LabelImage& truth) {
  if (pred.rows() != truth.rows() || pred.cols() != truth.cols())
    throw std::invalid_argument("accumulate: prediction is " + std::to_string(pred.cols()) + "x" +
                                std::to_string(pred.rows()) + ", ground truth " + std::to_string(truth.cols()) + "x" +
                                std::to_string(truth.rows()));
  const int n = num_classes();
  // Validate before touching the counts so a bad image leaves the matrix unchanged.
  for (Index i = 0; i < pred.size(); ++i) {
    const int p = pred.data()[i], t = truth.data()[i];
    if (p < 0 || p >= n || t < 0 || t >= n)
      throw std::out_of_range("accumulate: label outside [0, " + std::to_string(n) + ") at pixel " + std::to_string(i));
  }
  for (Index i = 0; i < pred.size(); ++i) ++counts_(truth.data()[i], pred.data()[i]);
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.num_classes() != num_classes()) throw std::invalid_argument("merge: class counts differ");
  counts_ += other.counts_;
}

ConfusionMatrix accumulate(ConfusionMatrix cm, const LabelImage& pred, const LabelImage& truth) {
  cm.accumulate(pred, truth);
  return cm;
}

namespace {

void require_nonempty(const ConfusionMatrix& cm) {
  if (cm.total() <= 0) throw std::domain_error("metrics of an empty confusion matrix are undefined");
}

}  // namespace

double pixel_accuracy(const ConfusionMatrix& cm) {
  require_nonempty(cm);
  return static_cast<double>(cm.counts().trace()) / static_cast<double>(cm.total());
}

double mean_accuracy(const ConfusionMatrix& cm) {
  require_nonempty(cm);
  double sum = 0;
  int present = 0;
  for (int i = 0; i < cm.num_classes(); ++i) {
    const auto t = cm.truth_count(i);
    if (t == 0) continue;
    sum += static_cast<double>(cm(i, i)) / static_cast<double>(t);
    ++present;
  }
  return sum / present;
}

double class_iu(const ConfusionMatrix& cm, int i) {
  const auto uni = cm.truth_count(i) + cm.predicted_count(i) - cm(i, i);
  if (uni == 0) throw std::domain_error("IU of class " + std::to_string(i) + " is undefined (absent everywhere)");
  return static_cast<double>(cm(i, i)) / static_cast<double>(uni);
}

double mean_iu(const ConfusionMatrix& cm) {
  require_nonempty(cm);
  double sum = 0;
  int present = 0;
  for (int i = 0; i < cm.num_classes(); ++i) {
    if (cm.truth_count(i) + cm.predicted_count(i) == 0) continue;
    sum += class_iu(cm, i);
    ++present;
  }
  return sum / present;
}

double fw_iu(const ConfusionMatrix& cm) {
  require_nonempty(cm);
  double sum = 0;
  for (int i = 0; i < cm.num_classes(); ++i) {
    const auto t = cm.truth_count(i);
    if (t == 0) continue;
    sum += static_cast<double>(t) * class_iu(cm, i);
  }
  return sum / static_cast<double>(cm.total());
}

SegmentationScores score(const ConfusionMatrix& cm) {
  return {pixel_accuracy(cm), mean_accuracy(cm), mean_iu(cm), fw_iu(cm)};
}

}  // namespace hseg
