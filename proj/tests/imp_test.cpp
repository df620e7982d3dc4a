// Copyright 2026 The prunelaw Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "prunelaw/errors.hpp"
#include "prunelaw/imp.hpp"

namespace prunelaw {
namespace {

Mlp single_layer(std::vector<double> w) {
  Mlp net;
  DenseLayer l;
  l.in = static_cast<int>(w.size());
  l.out = 1;
  l.w = std::move(w);
  l.b = {0.0};
  net.layers.push_back(l);
  return net;
}

// Small, fast configuration shared by the training tests.
struct Small {
  ToyDataset data = make_toy_dataset(600, 8, 3, 5, {2, 5.0, 0.25});
  ToyFamilySpec family{3, 0.5, 8, 3, 16};
  TrainConfig train{8, 2, 0.05, 0.9, 32, 11};
};

TEST(Prune, DropsSmallestMagnitude) {
  const auto net = single_layer({1, -2, 3, -4, 5});
  const auto mask = prune_global_magnitude(net, net.full_mask(), 0.2);
  EXPECT_EQ(mask[0], (std::vector<std::uint8_t>{0, 1, 1, 1, 1}));
}

TEST(Prune, TiesBreakByTraversalOrder) {
  const auto net = single_layer(std::vector<double>(10, 0.5));
  const auto mask = prune_global_magnitude(net, net.full_mask(), 0.35);
  EXPECT_EQ(mask[0], (std::vector<std::uint8_t>{0, 0, 0, 1, 1, 1, 1, 1, 1, 1}));
}

TEST(Prune, IsGlobalAcrossLayers) {
  Mlp net = single_layer({10, 20, 30, 40});
  net.layers.push_back({4, 1, {0.1, 0.2, 50, 60}, {0.0}});
  const auto mask = prune_global_magnitude(net, net.full_mask(), 0.25);
  EXPECT_EQ(mask[0], (std::vector<std::uint8_t>{1, 1, 1, 1}));
  EXPECT_EQ(mask[1], (std::vector<std::uint8_t>{0, 0, 1, 1}));
}

TEST(Prune, ComposesToSquaredDensity) {
  const auto net = Mlp::init({3, 1.0, 16, 4, 16}, 3);
  const auto total = net.prunable_count();
  auto mask = prune_global_magnitude(net, net.full_mask(), 0.2);
  mask = prune_global_magnitude(net, mask, 0.2);
  const double expect = 0.64 * static_cast<double>(total);
  EXPECT_LE(std::abs(static_cast<double>(unmasked_count(mask)) - expect), 1.0);
}

TEST(Prune, MasksOnlyShrinkAndNothingLeftIsAnError) {
  const auto net = Mlp::init({2, 0.25, 4, 2, 16}, 1);
  auto mask = net.full_mask();
  for (int i = 0; i < 10; ++i) {
    const auto next = prune_global_magnitude(net, mask, 0.2);
    for (std::size_t k = 0; k < mask.size(); ++k)
      for (std::size_t j = 0; j < mask[k].size(); ++j) EXPECT_LE(next[k][j], mask[k][j]);
    mask = next;
  }
  const auto tiny = single_layer({1.0});
  EXPECT_THROW((void)prune_global_magnitude(tiny, tiny.full_mask(), 0.5), InvalidParameterError);
}

TEST(Dataset, DeterministicAndValidated) {
  const auto a = make_toy_dataset(200, 4, 2, 9);
  const auto b = make_toy_dataset(200, 4, 2, 9);
  EXPECT_EQ(a.train_x, b.train_x);
  EXPECT_EQ(a.test_y, b.test_y);
  EXPECT_EQ(a.train_size() + a.test_size(), 200u);
  EXPECT_THROW((void)make_toy_dataset(19, 4, 2, 9), InvalidParameterError);
  EXPECT_THROW((void)make_toy_dataset(200, 4, 1, 9), InvalidParameterError);
}

TEST(Subsample, FullViewIsIdentityAndRangeChecked) {
  const auto data = make_toy_dataset(400, 4, 2, 1);
  const auto v = subsample(data, data.train_size(), 3);
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(v.indices[i], i);
  EXPECT_THROW((void)subsample(data, 0, 3), InvalidParameterError);
  EXPECT_THROW((void)subsample(data, data.train_size() + 1, 3), InvalidParameterError);
  EXPECT_EQ(subsample(data, 50, 8).indices, subsample(data, 50, 8).indices);
}

TEST(Subsample, PreservesClassProportions) {
  const auto data = make_toy_dataset(4000, 2, 4, 2);
  const std::size_t n = 400;
  int outside = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto v = subsample(data, n, seed);
    std::vector<double> count(4, 0.0);
    for (auto i : v.indices) count[static_cast<std::size_t>(data.train_y[i])] += 1.0;
    for (double c : count) {
      // Binomial(400, 1/4) has std ~8.7; 3 std is generous.
      if (std::abs(c - 100.0) > 3.0 * std::sqrt(n * 0.25 * 0.75)) ++outside;
    }
  }
  EXPECT_LE(outside, 8);
}

TEST(Train, MaskedLayerStaysZero) {
  Small s;
  auto net = Mlp::init(s.family, 4);
  auto mask = net.full_mask();
  std::fill(mask[1].begin(), mask[1].end(), 0);
  for (auto& w : net.layers[1].w) w = 0.0;
  const auto view = subsample(s.data, s.data.train_size(), 1);
  (void)train(net, mask, view, s.train, 0, s.train.total_epochs);
  for (double w : net.layers[1].w) EXPECT_EQ(w, 0.0);
}

TEST(Train, LossDecreasesOnSeparatedTask) {
  Small s;
  auto net = Mlp::init(s.family, 4);
  const auto view = subsample(s.data, s.data.train_size(), 1);
  const auto r = train(net, net.full_mask(), view, s.train, 0, s.train.total_epochs);
  ASSERT_EQ(r.epoch_losses.size(), static_cast<std::size_t>(s.train.total_epochs));
  EXPECT_LT(r.epoch_losses.back(), r.epoch_losses.front());
}

TEST(Train, TwoClassSeparatedBlobsAreNearlyPerfect) {
  const auto data = make_toy_dataset(1000, 16, 2, 3, {1, 12.0, 0.25});
  const ToyFamilySpec fam{3, 1.0, 16, 2, 16};
  auto net = Mlp::init(fam, 1);
  TrainConfig cfg{20, 3, 0.05, 0.9, 32, 1};
  (void)train(net, net.full_mask(), subsample(data, data.train_size(), 1), cfg, 0, cfg.total_epochs);
  EXPECT_LT(test_error(net, data), 0.02);
}

TEST(Train, CheckpointIsTheRewindState) {
  Small s;
  const auto view = subsample(s.data, s.data.train_size(), 1);
  auto a = Mlp::init(s.family, 4);
  Mlp checkpoint;
  (void)train(a, a.full_mask(), view, s.train, 0, s.train.total_epochs, &checkpoint);
  auto b = Mlp::init(s.family, 4);
  (void)train(b, b.full_mask(), view, s.train, 0, s.train.rewind_epoch);
  for (std::size_t k = 0; k < b.layers.size(); ++k) EXPECT_EQ(checkpoint.layers[k].w, b.layers[k].w);
}

TEST(Imp, MatchesHandRolledAlgorithm) {
  Small s;
  const ImpConfig imp{0.2, 3, 0};
  const auto run = imp_run(s.data, s.family, s.train, imp);
  ASSERT_FALSE(run.failed) << run.failure;
  ASSERT_EQ(run.records.size(), 3u);

  const auto view = subsample(s.data, s.data.train_size(), s.train.rng_seed);
  Mlp net = Mlp::init(s.family, s.train.rng_seed);
  Mask mask = net.full_mask();
  Mlp checkpoint;
  (void)train(net, mask, view, s.train, 0, s.train.rewind_epoch, &checkpoint);
  for (int it = 0; it < 3; ++it) {
    // Every surviving weight starts the iteration at its checkpoint value.
    for (std::size_t k = 0; k < net.layers.size(); ++k)
      for (std::size_t j = 0; j < mask[k].size(); ++j)
        if (mask[k][j]) ASSERT_EQ(net.layers[k].w[j], checkpoint.layers[k].w[j]);
    (void)train(net, mask, view, s.train, s.train.rewind_epoch, s.train.total_epochs);
    const auto& r = run.records[static_cast<std::size_t>(it)];
    EXPECT_EQ(r.test_error, test_error(net, s.data));
    EXPECT_EQ(r.surviving_weights, unmasked_count(mask));
    EXPECT_EQ(r.density, static_cast<double>(unmasked_count(mask)) / static_cast<double>(net.prunable_count()));
    mask = prune_global_magnitude(net, mask, 0.2);
    net = checkpoint;
    for (std::size_t k = 0; k < net.layers.size(); ++k)
      for (std::size_t j = 0; j < mask[k].size(); ++j)
        if (!mask[k][j]) net.layers[k].w[j] = 0.0;
  }
}

TEST(Imp, SingleIterationIsDenseTraining) {
  Small s;
  const auto run = imp_run(s.data, s.family, s.train, {0.2, 1, 0});
  ASSERT_EQ(run.records.size(), 1u);
  EXPECT_EQ(run.records[0].density, 1.0);
  const auto view = subsample(s.data, s.data.train_size(), s.train.rng_seed);
  Mlp net = Mlp::init(s.family, s.train.rng_seed);
  (void)train(net, net.full_mask(), view, s.train, 0, s.train.rewind_epoch);
  (void)train(net, net.full_mask(), view, s.train, s.train.rewind_epoch, s.train.total_epochs);
  EXPECT_EQ(run.records[0].test_error, test_error(net, s.data));
}

TEST(Imp, DeterministicAndDensitiesStrictlyDecrease) {
  Small s;
  const ImpConfig imp{0.2, 6, 200};
  const auto a = imp_run(s.data, s.family, s.train, imp);
  const auto b = imp_run(s.data, s.family, s.train, imp);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ(a.records[i].test_error, b.records[i].test_error);
    EXPECT_EQ(a.records[i].density, b.records[i].density);
    if (i > 0) EXPECT_LT(a.records[i].density, a.records[i - 1].density);
  }
  // Each round removes floor(0.2 * alive) weights.
  std::size_t alive = a.records[0].surviving_weights;
  for (const auto& r : a.records) {
    EXPECT_EQ(r.surviving_weights, alive);
    alive -= alive / 5;
  }
  const auto pts = to_measurements(a);
  ASSERT_EQ(pts.size(), a.records.size());
  EXPECT_EQ(pts[0].family, kToyFamily);
  EXPECT_EQ(pts[0].cfg.subsample_size, 200);
}

TEST(Imp, MismatchedFamilyIsRejected) {
  Small s;
  ToyFamilySpec wrong = s.family;
  wrong.input_dim = 9;
  EXPECT_THROW((void)imp_run(s.data, wrong, s.train, {}), InvalidParameterError);
  EXPECT_THROW(TrainConfig({10, 10, 0.1, 0.9, 64, 0}).validate(), InvalidParameterError);
  EXPECT_THROW(ImpConfig({1.0, 3, 0}).validate(), InvalidParameterError);
}

TEST(Regions, RecognisesAllThreeOnAConstructedCurve) {
  std::vector<CurvePoint> c;
  for (int i = 0; i < 30; ++i) {
    const double d = std::pow(0.8, i);
    const SingleLawParams p{0.1, 0.74, 1.5, 0.02};
    c.push_back({d, eval_single(p, d)});
  }
  const auto s = summarize_regions(c, 0.75);
  EXPECT_TRUE(s.low_plateau);
  EXPECT_TRUE(s.power_law);
  EXPECT_TRUE(s.high_plateau);
  c.resize(10);
  EXPECT_THROW((void)summarize_regions(c, 0.75), InsufficientDataError);
}

}  // namespace
}  // namespace prunelaw
