// Copyright 2026 The prunelaw Authors
// SPDX-License-Identifier: Apache-2.0
//
// Least-squares estimation of the law's constants. The objective is always
// the sum of squared relative deviations (predicted - actual) / actual; ε↑,
// gamma and p (or p') are optimized in log space so they stay positive, and
// the depth/width exponents are unconstrained.

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "prunelaw/dataset.hpp"
#include "prunelaw/law.hpp"
#include "prunelaw/minimize.hpp"

namespace prunelaw {

struct FitStats {
  double mu = 0.0;     // mean relative deviation
  double sigma = 0.0;  // population standard deviation of the relative deviation
  std::size_t n_points = 0;
};

struct FitOptions {
  bool fit_phi = true;
  bool fit_psi = true;
  int restarts = 8;
  int max_iterations = 500;
  double tolerance = 1e-12;
  std::uint64_t rng_seed = 0;
  /// Local solver; null selects Levenberg-Marquardt.
  std::shared_ptr<const Minimizer> minimizer;

  void validate() const;
};

/// One (density, error) sample of a single configuration's pruning curve.
struct CurvePoint {
  double density = 1.0;
  double error = 0.0;
};

struct SingleFit {
  SingleLawParams params;
  FitStats stats;
  double objective = 0.0;
  bool eps_high_capped = false;
  int iterations = 0;
};

struct JointFit {
  JointLawParams params;
  FitStats stats;
  double objective = 0.0;
  bool eps_high_capped = false;
  bool fit_phi = true;
  bool fit_psi = true;
  int best_restart = 0;
  int restarts = 0;
  int restarts_converged = 0;
  int max_iterations = 0;
  double tolerance = 0.0;
  std::uint64_t rng_seed = 0;
  std::string optimizer;
  UnprunedErrorTable eps_np_table;
  std::string provenance;
};

struct ContourSlopes {
  double phi = 0.0;
  double psi = 0.0;
  std::size_t levels_used = 0;
};

struct PointDeviation {
  MeasurementPoint point;
  double eps_np = 0.0;
  double predicted = 0.0;
  double delta = 0.0;
};

struct BreakdownRow {
  std::string dimension;  // "depth", "width_scale", "subsample_size" or "density_decade"
  std::string group;
  FitStats stats;
};

struct FitReport {
  JointLawParams params;
  FitStats stats;
  std::vector<PointDeviation> deviations;  // canonical point order
  std::vector<BreakdownRow> breakdowns;
};

/// (predicted - actual) / actual. Throws DomainError when actual == 0.
[[nodiscard]] double relative_deviation(double predicted, double actual);

/// Mean and population standard deviation. Throws InsufficientDataError on
/// empty input.
[[nodiscard]] FitStats fit_stats(std::span<const double> deviations);

/// Starting point for a single-curve fit. Needs at least four distinct
/// densities; throws DegenerateCurveError when every error is equal.
[[nodiscard]] SingleLawParams init_heuristics(std::span<const CurvePoint> curve, double eps_np);

/// Iso-error contour slopes. For every level, the density reaching it is
/// interpolated (linear in log-log) along each configuration's curve, and log d
/// is regressed on log l and log w. Levels may be empty, in which case levels
/// inside the power-law band are chosen from the data. Requires at least three
/// depths and three widths.
[[nodiscard]] ContourSlopes estimate_contour_slopes(const MeasurementSet& set, std::span<const double> error_levels);

[[nodiscard]] SingleFit fit_single(std::span<const CurvePoint> curve, double eps_np, const FitOptions& opts);

/// Joint fit over every point of `set`. Disabled exponents are pinned to 0
/// and require the corresponding dimension to be constant in the set.
[[nodiscard]] JointFit fit_joint(const MeasurementSet& set, const UnprunedErrorTable& np_table,
                                 const FitOptions& opts);

/// Per-point deviations, aggregate stats, and stats grouped by depth, width,
/// subsample size and density decade.
[[nodiscard]] FitReport evaluate_fit(const JointFit& fit, const MeasurementSet& set);
[[nodiscard]] FitReport evaluate_params(const JointLawParams& params, const UnprunedErrorTable& np_table,
                                        const MeasurementSet& set);

/// Points of one configuration as a density-sorted curve (descending density).
[[nodiscard]] std::vector<CurvePoint> curve_of(const MeasurementSet& set, const ConfigKey& key);

}  // namespace prunelaw
