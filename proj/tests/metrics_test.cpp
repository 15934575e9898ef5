#include "hseg/metrics.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "hseg/rng.hpp"
#include "support/oracles.hpp"

namespace hseg {
namespace {

ConfusionMatrix worked_example() {
  ConfusionMatrix::Counts c(2, 2);
  c << 3, 1, 2, 4;
  return ConfusionMatrix(c);
}

LabelImage random_labels(int n_c, SplitMix64& rng, int side = 16) {
  LabelImage l(side, side);
  for (Index i = 0; i < l.size(); ++i) l.data()[i] = static_cast<int>(rng.below(static_cast<std::uint64_t>(n_c)));
  return l;
}

TEST(ConfusionMatrixTest, Accumulate) {
  ConfusionMatrix cm(3);
  const LabelImage zeros = LabelImage::Zero(10, 10);
  cm.accumulate(zeros, zeros);
  EXPECT_EQ(cm(0, 0), 100);
  EXPECT_EQ(cm.total(), 100);

  ConfusionMatrix one(2);
  LabelImage truth(1, 1), pred(1, 1);
  truth << 0;
  pred << 1;
  one.accumulate(pred, truth);
  EXPECT_EQ(one(0, 1), 1);
  EXPECT_EQ(one(1, 0), 0);
}

TEST(ConfusionMatrixTest, AccumulationIsAdditive) {
  SplitMix64 rng(1);
  const auto p1 = random_labels(3, rng), t1 = random_labels(3, rng);
  const auto p2 = random_labels(3, rng), t2 = random_labels(3, rng);
  LabelImage pc(16, 32), tc(16, 32);
  pc << p1, p2;
  tc << t1, t2;
  ConfusionMatrix split(3);
  split.accumulate(p1, t1);
  split.accumulate(p2, t2);
  EXPECT_EQ(split, accumulate(ConfusionMatrix(3), pc, tc));

  ConfusionMatrix a(3), b(3);
  a.accumulate(p1, t1);
  b.accumulate(p2, t2);
  a.merge(b);
  EXPECT_EQ(a, split);
}

TEST(ConfusionMatrixTest, Errors) {
  ConfusionMatrix cm(2);
  EXPECT_THROW(cm.accumulate(LabelImage::Zero(2, 2), LabelImage::Zero(2, 3)), std::invalid_argument);
  EXPECT_THROW(cm.accumulate(LabelImage::Constant(2, 2, 2), LabelImage::Zero(2, 2)), std::out_of_range);
  EXPECT_EQ(cm.total(), 0);
  EXPECT_THROW(pixel_accuracy(cm), std::domain_error);
  EXPECT_THROW(mean_accuracy(cm), std::domain_error);
  EXPECT_THROW(mean_iu(cm), std::domain_error);
  EXPECT_THROW(fw_iu(cm), std::domain_error);
  EXPECT_THROW(cm.merge(ConfusionMatrix(3)), std::invalid_argument);
}

TEST(MetricsTest, WorkedExample) {
  const auto cm = worked_example();
  EXPECT_EQ(cm.truth_count(0), 4);
  EXPECT_EQ(cm.truth_count(1), 6);
  EXPECT_EQ(cm.predicted_count(0), 5);
  EXPECT_NEAR(pixel_accuracy(cm), 0.7, 1e-15);
  EXPECT_NEAR(mean_accuracy(cm), 0.5 * (3.0 / 4 + 4.0 / 6), 1e-15);
  EXPECT_NEAR(class_iu(cm, 0), 0.5, 1e-15);
  EXPECT_NEAR(class_iu(cm, 1), 4.0 / 7, 1e-15);
  EXPECT_NEAR(mean_iu(cm), 0.5 * (0.5 + 4.0 / 7), 1e-15);
  EXPECT_NEAR(fw_iu(cm), (4 * 0.5 + 6 * 4.0 / 7) / 10, 1e-15);
  EXPECT_NEAR(mean_accuracy(cm), 0.70833, 1e-5);
  EXPECT_NEAR(mean_iu(cm), 0.5357, 1e-4);
  EXPECT_NEAR(fw_iu(cm), 0.5429, 1e-4);
}

TEST(MetricsTest, PerfectAndAllWrong) {
  ConfusionMatrix::Counts c = ConfusionMatrix::Counts::Zero(3, 3);
  c.diagonal() << 5, 2, 9;
  const auto s = score(ConfusionMatrix(c));
  EXPECT_EQ(s.pixel_accuracy, 1.0);
  EXPECT_EQ(s.mean_accuracy, 1.0);
  EXPECT_EQ(s.mean_iu, 1.0);
  EXPECT_EQ(s.fw_iu, 1.0);

  ConfusionMatrix::Counts w(2, 2);
  w << 0, 3, 4, 0;
  EXPECT_EQ(pixel_accuracy(ConfusionMatrix(w)), 0.0);
}

TEST(MetricsTest, AbsentClassesAreExcluded) {
  ConfusionMatrix::Counts c = ConfusionMatrix::Counts::Zero(3, 3);
  c(0, 0) = 10;
  EXPECT_EQ(mean_accuracy(ConfusionMatrix(c)), 1.0);
  EXPECT_EQ(mean_iu(ConfusionMatrix(c)), 1.0);
  c(0, 2) = 10;
  // Class 2 is predicted but absent from the truth: it counts for IU only.
  EXPECT_EQ(mean_accuracy(ConfusionMatrix(c)), 0.5);
  EXPECT_NEAR(mean_iu(ConfusionMatrix(c)), 0.25, 1e-15);
}

TEST(MetricsTest, UniformFrequenciesMakeFwEqualMean) {
  ConfusionMatrix::Counts c(3, 3);
  c << 5, 3, 2,
       1, 8, 1,
       0, 4, 6;
  const ConfusionMatrix cm(c);
  EXPECT_NEAR(fw_iu(cm), mean_iu(cm), 1e-15);
}

TEST(MetricsTest, AgreeWithBruteForceOracle) {
  SplitMix64 rng(2024);
  const int classes[] = {2, 3, 5};
  for (int trial = 0; trial < 100; ++trial) {
    const int n_c = classes[trial % 3];
    const auto pred = random_labels(n_c, rng), truth = random_labels(n_c, rng);
    const auto s = score(accumulate(ConfusionMatrix(n_c), pred, truth));
    const auto o = testing::brute_force_scores(pred, truth, n_c);
    EXPECT_NEAR(s.pixel_accuracy, o.pixel_accuracy, 1e-12);
    EXPECT_NEAR(s.mean_accuracy, o.mean_accuracy, 1e-12);
    EXPECT_NEAR(s.mean_iu, o.mean_iu, 1e-12);
    EXPECT_NEAR(s.fw_iu, o.fw_iu, 1e-12);
  }
}

TEST(MetricsTest, BoundsAndIuInequalities) {
  SplitMix64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const int n_c = 2 + static_cast<int>(rng.below(4));
    const auto cm = accumulate(ConfusionMatrix(n_c), random_labels(n_c, rng, 8), random_labels(n_c, rng, 8));
    const auto s = score(cm);
    for (double v : {s.pixel_accuracy, s.mean_accuracy, s.mean_iu, s.fw_iu}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    for (int i = 0; i < n_c; ++i) {
      if (cm.truth_count(i) == 0 || cm.predicted_count(i) == 0) continue;
      const double iu = class_iu(cm, i);
      EXPECT_LE(iu, static_cast<double>(cm(i, i)) / cm.truth_count(i));
      EXPECT_LE(iu, static_cast<double>(cm(i, i)) / cm.predicted_count(i));
    }
  }
}

TEST(MetricsTest, InvariantUnderClassPermutation) {
  SplitMix64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const int n_c = 5;
    const auto pred = random_labels(n_c, rng), truth = random_labels(n_c, rng);
    std::vector<int> perm(n_c);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    LabelImage pp = pred.unaryExpr([&](int v) { return perm[static_cast<std::size_t>(v)]; });
    LabelImage tp = truth.unaryExpr([&](int v) { return perm[static_cast<std::size_t>(v)]; });
    const auto a = score(accumulate(ConfusionMatrix(n_c), pred, truth));
    const auto b = score(accumulate(ConfusionMatrix(n_c), pp, tp));
    EXPECT_NEAR(a.pixel_accuracy, b.pixel_accuracy, 1e-12);
    EXPECT_NEAR(a.mean_accuracy, b.mean_accuracy, 1e-12);
    EXPECT_NEAR(a.mean_iu, b.mean_iu, 1e-12);
    EXPECT_NEAR(a.fw_iu, b.fw_iu, 1e-12);
  }
}

}  // namespace
}  // namespace hseg
