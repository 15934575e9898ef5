#include "hseg/nn/train.hpp"

#include <gtest/gtest.h>

#include <sstream>

namespace hseg::nn {
namespace {

// Class 0: dark constant patches, class 1: bright constant patches.
PatchSet separable_set(int n, std::uint64_t seed) {
  SplitMix64 rng(seed);
  PatchSet set(2);
  for (int i = 0; i < n; ++i) {
    const int label = i % 2;
    const double v = label ? rng.uniform(0.7, 1.0) : rng.uniform(0.0, 0.3);
    set.add({PatchValues::Constant(28, 28, v), label, {}});
  }
  return set;
}

NetworkConfig two_class_config() {
  NetworkConfig cfg;
  cfg.num_classes = 2;
  return cfg;
}

TEST(TrainTest, LearnsSeparableSet) {
  const auto set = separable_set(200, 1);
  Network<double> net(two_class_config(), 2);
  TrainConfig cfg;
  cfg.num_batches = 500;
  cfg.batch_size = 32;
  const auto log = train(net, set, cfg);
  EXPECT_EQ(log.entries.size(), 500u);
  EXPECT_GE(patch_accuracy(net, set), 0.99);
  EXPECT_GE(patch_accuracy(net, separable_set(200, 99)), 0.99);
}

TEST(TrainTest, ZeroBatchesLeaveNetworkUnchanged) {
  const auto set = separable_set(10, 1);
  const Network<double> start(two_class_config(), 3);
  Network<double> net = start;
  TrainConfig cfg;
  cfg.num_batches = 0;
  const auto log = train(net, set, cfg);
  EXPECT_TRUE(log.entries.empty());
  EXPECT_EQ(net.parameters().hidden.weights, start.parameters().hidden.weights);
  EXPECT_EQ(net.parameters().conv[0].kernels, start.parameters().conv[0].kernels);
}

TEST(TrainTest, SameSeedSameParameters) {
  const auto set = separable_set(50, 4);
  TrainConfig cfg;
  cfg.num_batches = 20;
  cfg.batch_size = 16;
  Network<double> a(two_class_config(), 5), b(two_class_config(), 5);
  train(a, set, cfg);
  train(b, set, cfg);
  const auto pa = a.parameters().tensors(), pb = b.parameters().tensors();
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_EQ(*pa[i], *pb[i]);

  cfg.seed += 1;
  Network<double> c(two_class_config(), 5);
  train(c, set, cfg);
  EXPECT_FALSE(c.parameters().hidden.weights == a.parameters().hidden.weights);
}

TEST(TrainTest, FullBatchLossIsNonIncreasing) {
  const auto set = separable_set(64, 6);
  Network<double> net(two_class_config(), 7);
  std::vector<std::size_t> all(set.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const auto batch = make_batch<double>(set, all);
  double prev = batch_loss(net, batch);
  for (int step = 0; step < 50; ++step) {
    sgd_step(net, backward(net, batch).grads, 1e-3);
    const double loss = batch_loss(net, batch);
    EXPECT_LE(loss, prev + 1e-15) << "step " << step;
    prev = loss;
  }
}

TEST(TrainTest, ValidatorRunsOnIntervalAndAtEnd) {
  const auto set = separable_set(20, 8);
  Network<double> net(two_class_config(), 9);
  TrainConfig cfg;
  cfg.num_batches = 12;
  cfg.batch_size = 4;
  cfg.validation_interval = 5;
  int calls = 0;
  const auto log = train(net, set, cfg, [&](const Network<double>&) { return ++calls / 10.0; });
  EXPECT_EQ(calls, 3);
  EXPECT_TRUE(log.entries[4].validation_accuracy.has_value());
  EXPECT_TRUE(log.entries[9].validation_accuracy.has_value());
  EXPECT_TRUE(log.entries[11].validation_accuracy.has_value());
  EXPECT_FALSE(log.entries[0].validation_accuracy.has_value());

  std::ostringstream csv;
  log.write_csv(csv);
  std::string line;
  std::istringstream in(csv.str());
  std::getline(in, line);
  EXPECT_EQ(line, "batch_index,mean_loss,validation_accuracy");
  std::getline(in, line);
  EXPECT_EQ(line.back(), ',');
}

TEST(TrainTest, Errors) {
  Network<double> net(two_class_config(), 1);
  TrainConfig cfg;
  EXPECT_THROW(train(net, PatchSet(2), cfg), std::invalid_argument);
  EXPECT_THROW(train(net, PatchSet(3), cfg), std::invalid_argument);
  const auto set = separable_set(4, 1);
  PatchSet wrong_m(3);
  wrong_m.add(set.patches[0]);
  EXPECT_THROW(train(net, wrong_m, cfg), std::invalid_argument);
  cfg.dropout_p = 1.0;
  EXPECT_THROW(train(net, set, cfg), std::invalid_argument);
  cfg = {};
  cfg.learning_rate = 0;
  EXPECT_THROW(train(net, set, cfg), std::invalid_argument);
}

}  // namespace
}  // namespace hseg::nn
