// Copyright 2026 The prunelaw Authors
// SPDX-License-Identifier: Apache-2.0
//
// Iterative magnitude pruning with weight rewinding on small fully connected
// classifiers trained on Gaussian blobs. Produces real pruning curves in the
// measurement format, in seconds rather than GPU-days.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "prunelaw/dataset.hpp"
#include "prunelaw/fitter.hpp"

namespace prunelaw {

inline constexpr std::string_view kToyFamily = "toy-mlp";

struct ToyTaskOptions {
  int clusters_per_class = 3;
  double separation = 3.0;     // typical distance between cluster centers, in noise std units
  double test_fraction = 0.25; // held-out share of n_total
};

/// Row-major features with integer labels; the test split is fixed at
/// construction and never subsampled.
struct ToyDataset {
  int input_dim = 0;
  int n_classes = 0;
  std::vector<double> train_x;
  std::vector<int> train_y;
  std::vector<double> test_x;
  std::vector<int> test_y;

  [[nodiscard]] std::size_t train_size() const noexcept { return train_y.size(); }
  [[nodiscard]] std::size_t test_size() const noexcept { return test_y.size(); }
};

/// Throws InvalidParameterError when n_total < 10 * n_classes or a dimension
/// is not positive.
[[nodiscard]] ToyDataset make_toy_dataset(std::size_t n_total, int input_dim, int n_classes, std::uint64_t rng_seed,
                                          const ToyTaskOptions& options = {});

/// A fixed subset of the training split.
struct DatasetView {
  const ToyDataset* data = nullptr;
  std::vector<std::size_t> indices;  // ascending

  [[nodiscard]] std::size_t size() const noexcept { return indices.size(); }
};

/// n training examples drawn uniformly without replacement, ignoring labels.
[[nodiscard]] DatasetView subsample(const ToyDataset& data, std::size_t n, std::uint64_t rng_seed);

struct ToyFamilySpec {
  int depth = 3;  // weight layers; depth - 1 hidden layers
  double width_scale = 1.0;
  int input_dim = 64;
  int n_classes = 4;
  int base_width = 16;

  [[nodiscard]] int hidden_width() const;
  void validate() const;
};

struct TrainConfig {
  int total_epochs = 40;
  int rewind_epoch = 3;
  double learning_rate = 0.1;  // divided by 10 from total_epochs / 2 on
  double momentum = 0.9;
  int batch_size = 64;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

struct ImpConfig {
  double prune_fraction = 0.2;
  int iterations = 25;
  std::int64_t subsample_size = 0;  // 0 uses the whole training split

  void validate() const;
};

struct DenseLayer {
  int in = 0;
  int out = 0;
  std::vector<double> w;  // out x in, row-major
  std::vector<double> b;
};

/// 1 keeps a connection weight, 0 removes it; biases are never masked.
using Mask = std::vector<std::vector<std::uint8_t>>;

struct Mlp {
  std::vector<DenseLayer> layers;

  /// He-normal weights, zero biases.
  [[nodiscard]] static Mlp init(const ToyFamilySpec& spec, std::uint64_t rng_seed);
  [[nodiscard]] Mask full_mask() const;
  [[nodiscard]] std::size_t prunable_count() const noexcept;
  /// Output logits for one example.
  [[nodiscard]] std::vector<double> forward(std::span<const double> x) const;
};

[[nodiscard]] std::size_t unmasked_count(const Mask& mask) noexcept;

/// Fraction of misclassified test examples; ties in the logits go to the
/// lowest class index.
[[nodiscard]] double test_error(const Mlp& net, const ToyDataset& data);

struct TrainResult {
  double final_loss = 0.0;  // mean training loss of the last epoch
  std::vector<double> epoch_losses;
};

/// Minibatch SGD with momentum on softmax cross-entropy over epochs
/// [from_epoch, to_epoch). Masked weights receive no update and stay zero.
/// When `checkpoint` is non-null the weights at the end of
/// cfg.rewind_epoch are copied into it. Throws DivergenceError on a
/// non-finite loss.
TrainResult train(Mlp& net, const Mask& mask, const DatasetView& view, const TrainConfig& cfg, int from_epoch,
                  int to_epoch, Mlp* checkpoint = nullptr);

/// Removes the floor(fraction * count) smallest-magnitude surviving weights
/// across all layers; equal magnitudes are removed in traversal order (layer,
/// row, column). Throws InvalidParameterError when that would remove nothing
/// or everything.
[[nodiscard]] Mask prune_global_magnitude(const Mlp& net, const Mask& mask, double fraction);

struct ImpRunRecord {
  int iteration = 0;
  double density = 1.0;  // surviving / total prunable weights
  double test_error = 0.0;
  double train_loss = 0.0;
  std::size_t surviving_weights = 0;
  std::int64_t seed = 0;
};

struct ImpRunResult {
  ToyFamilySpec family;
  TrainConfig train;
  ImpConfig imp;
  std::vector<ImpRunRecord> records;
  bool failed = false;
  std::string failure;  // message of the error that stopped the chain
};

/// Train to the rewind epoch, then `iterations` times: train the masked net
/// to completion, record, prune, rewind survivors (weights and biases) to the
/// checkpoint. The last iteration does not prune. Errors stop the chain and
/// are reported through `failed`, keeping the records gathered so far.
[[nodiscard]] ImpRunResult imp_run(const ToyDataset& data, const ToyFamilySpec& family, const TrainConfig& train_cfg,
                                   const ImpConfig& imp_cfg);

/// Records as measurement points of family "toy-mlp".
[[nodiscard]] std::vector<MeasurementPoint> to_measurements(const ImpRunResult& run);

/// Quantitative check of the three-region shape of a pruning curve ordered by
/// descending density.
struct RegionSummary {
  double plateau_max_rel_change = 0.0;  // over the first five points
  double power_law_r2 = 0.0;            // log-log regression over the middle band
  double power_law_slope = 0.0;
  std::size_t power_law_points = 0;
  double tail_mean_error = 0.0;         // mean of the last four points
  double tail_slope = 0.0;              // log-log slope over the last four points
  bool low_plateau = false;
  bool power_law = false;
  bool high_plateau = false;
};

/// The middle band holds the points whose log-error progress between the
/// first-five mean and the last-four mean lies in [0.2, 0.8]. The tail counts
/// as a high plateau when its mean reaches 0.7 * chance_error and its slope is
/// under half the middle slope in magnitude.
[[nodiscard]] RegionSummary summarize_regions(std::span<const CurvePoint> curve, double chance_error);

}  // namespace prunelaw
