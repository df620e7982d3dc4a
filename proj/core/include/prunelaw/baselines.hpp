// Copyright 2026 The prunelaw Authors
// SPDX-License-Identifier: Apache-2.0
//
// Competing functional forms: the (m, n) envelope of Rosenfeld et al. and
// its rewrite in terms of density, used to judge how well each form follows
// the bend between the low-error plateau and the power-law region.

#pragma once

#include <span>
#include <string>
#include <vector>

#include "prunelaw/fitter.hpp"

namespace prunelaw {

struct RosenfeldParams {
  double a = 0.0;
  double alpha = 0.0;
  double b = 0.0;
  double beta = 0.0;
  double c_inf = 0.0;
  double eta = 1.0;
  double eps0 = 1.0;

  void validate() const;
};

struct AdaptedDensityParams {
  double b_x = 0.0;
  double beta_x = 1.0;
  double eps_np = 0.1;

  void validate() const;
};

/// eps0 * e / sqrt(e^2 + eta^2) with e = a n^-alpha + b m^-beta + c_inf.
[[nodiscard]] double eval_rosenfeld(const RosenfeldParams& params, double m, double n);

/// b_x d^-beta_x + eps_np - b_x; exactly eps_np at d = 1.
[[nodiscard]] double eval_adapted_density(const AdaptedDensityParams& params, double density);

struct OverlayRow {
  double density = 1.0;
  double actual = 0.0;
  double ours = 0.0;
  double baseline = 0.0;
};

struct ComparisonReport {
  SingleLawParams ours;
  AdaptedDensityParams baseline;
  FitStats ours_stats;
  FitStats baseline_stats;
  std::vector<double> ours_deltas;      // same order as `overlay`
  std::vector<double> baseline_deltas;
  std::vector<OverlayRow> overlay;      // descending density
  std::string optimizer;
};

/// Fits both the single-curve law and the density-adapted baseline to the
/// same curve, with the same objective, solver and restart scheme. Needs at
/// least six points.
[[nodiscard]] ComparisonReport compare_transition_fits(std::span<const CurvePoint> curve, double eps_np,
                                                       const FitOptions& opts);

}  // namespace prunelaw
