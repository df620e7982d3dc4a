// Copyright 2026 The prunelaw Authors
// SPDX-License-Identifier: Apache-2.0
//
// How stable is a joint fit when only a random handful of measurements is
// available, and how well does a fit on small networks carry over to large
// ones.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "prunelaw/dataset.hpp"
#include "prunelaw/fitter.hpp"

namespace prunelaw {

enum class ExperimentKind { RandomPoints, RandomConfigs };

[[nodiscard]] std::string to_string(ExperimentKind kind);

struct TrialOutcome {
  double mu = 0.0;     // evaluated on the full set
  double sigma = 0.0;  // evaluated on the full set
  bool flagged = false;
  std::string flag_reason;  // empty unless flagged
};

struct StabilityRow {
  std::size_t t = 0;
  double mean_mu = 0.0;
  double std_mu = 0.0;
  double mean_sigma = 0.0;
  double std_sigma = 0.0;
  std::size_t trials_used = 0;
  std::size_t trials_flagged = 0;
  std::vector<TrialOutcome> trials;
};

struct StabilityReport {
  ExperimentKind kind = ExperimentKind::RandomPoints;
  std::size_t trials = 0;
  std::uint64_t rng_seed = 0;
  std::vector<std::size_t> t_values;
  std::vector<StabilityRow> rows;  // one per entry of t_values
};

/// For every T, `trials` times: sample T points without replacement, fit
/// jointly, evaluate on the whole set. Trials whose sample leaves a fitted
/// exponent unidentifiable, or that fail to converge, are flagged and left
/// out of the aggregates. Spreads across trials use the sample (n - 1)
/// standard deviation.
[[nodiscard]] StabilityReport experiment_random_points(const MeasurementSet& set, const UnprunedErrorTable& np_table,
                                                       std::span<const std::size_t> t_values, std::size_t trials,
                                                       const FitOptions& opts);

/// As above, sampling T configurations (family, l, w, n) and keeping all of
/// their densities.
[[nodiscard]] StabilityReport experiment_random_configs(const MeasurementSet& set, const UnprunedErrorTable& np_table,
                                                        std::span<const std::size_t> t_values, std::size_t trials,
                                                        const FitOptions& opts);

struct ExtrapolationReport {
  std::string train_filter;
  JointLawParams params;
  FitStats in_fit;
  FitStats out_of_fit;
};

using ConfigPredicate = std::function<bool(const ConfigKey&)>;

/// Fits on the configurations selected by `train` and reports stats on the
/// selected and held-out points separately.
[[nodiscard]] ExtrapolationReport extrapolation_eval(const MeasurementSet& set, const UnprunedErrorTable& np_table,
                                                     const ConfigPredicate& train, std::string description,
                                                     const FitOptions& opts);

}  // namespace prunelaw
