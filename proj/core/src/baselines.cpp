// Copyright 2026 The prunelaw Authors
// SPDX-License-Identifier: Apache-2.0

#include "prunelaw/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>

#include "parallel.hpp"
#include "prunelaw/errors.hpp"

namespace prunelaw {

void RosenfeldParams::validate() const {
  if (!(alpha >= 0.0)) throw InvalidParameterError("rosenfeld: alpha must be >= 0");
  if (!(beta >= 0.0)) throw InvalidParameterError("rosenfeld: beta must be >= 0");
  if (!(eta > 0.0)) throw InvalidParameterError("rosenfeld: eta must be > 0");
  if (!(eps0 > 0.0 && eps0 <= 1.0)) throw InvalidParameterError("rosenfeld: eps0 must lie in (0, 1]");
  if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c_inf)) {
    throw InvalidParameterError("rosenfeld: a, b and c_inf must be finite");
  }
}

void AdaptedDensityParams::validate() const {
  if (!std::isfinite(b_x)) throw InvalidParameterError("adapted density: b_x must be finite");
  if (!(beta_x > 0.0) || !std::isfinite(beta_x)) throw InvalidParameterError("adapted density: beta_x must be > 0");
  if (!(eps_np > 0.0 && eps_np < 1.0)) throw InvalidParameterError("adapted density: eps_np must lie in (0, 1)");
}

double eval_rosenfeld(const RosenfeldParams& params, double m, double n) {
  params.validate();
  if (!(m > 0.0)) throw DomainError("eval_rosenfeld: m must be > 0");
  if (!(n > 0.0)) throw DomainError("eval_rosenfeld: n must be > 0");
  const double e = params.a * std::pow(n, -params.alpha) + params.b * std::pow(m, -params.beta) + params.c_inf;
  return params.eps0 * e / std::hypot(e, params.eta);
}

double eval_adapted_density(const AdaptedDensityParams& params, double density) {
  params.validate();
  if (!(density > 0.0 && density <= 1.0)) throw DomainError("eval_adapted_density: density must lie in (0, 1]");
  if (density == 1.0) return params.eps_np;
  return params.b_x * std::pow(density, -params.beta_x) + params.eps_np - params.b_x;
}

namespace {

double adapted_unchecked(double b_x, double beta_x, double eps_np, double d) {
  return b_x * (std::pow(d, -beta_x) - 1.0) + eps_np;
}

/// Grid over beta with the closed-form weighted least-squares b_x.
std::pair<double, double> baseline_start(std::span<const CurvePoint> curve, double eps_np) {
  double best_obj = std::numeric_limits<double>::infinity();
  std::pair<double, double> best{0.0, 1.0};
  for (int i = 0; i <= 80; ++i) {
    const double beta = std::pow(10.0, -2.0 + 3.0 * i / 80.0);
    double num = 0.0, den = 0.0;
    for (const auto& c : curve) {
      const double g = std::pow(c.density, -beta) - 1.0;
      num += g * (c.error - eps_np) / (c.error * c.error);
      den += g * g / (c.error * c.error);
    }
    const double b = den > 0.0 ? num / den : 0.0;
    double obj = 0.0;
    for (const auto& c : curve) {
      const double r = (adapted_unchecked(b, beta, eps_np, c.density) - c.error) / c.error;
      obj += r * r;
    }
    if (obj < best_obj) {
      best_obj = obj;
      best = {b, beta};
    }
  }
  return best;
}

AdaptedDensityParams fit_baseline(std::span<const CurvePoint> curve, double eps_np, const FitOptions& opts,
                                  const std::shared_ptr<const Minimizer>& minimizer) {
  LeastSquaresProblem problem;
  problem.residual_count = curve.size();
  problem.lower = {-1e6, std::log(1e-4)};
  problem.upper = {1e6, std::log(1e2)};
  problem.residuals = [curve, eps_np](std::span<const double> x, std::span<double> out) {
    const double beta = std::exp(x[1]);
    for (std::size_t i = 0; i < curve.size(); ++i) {
      out[i] = (adapted_unchecked(x[0], beta, eps_np, curve[i].density) - curve[i].error) / curve[i].error;
    }
  };

  const auto [b0, beta0] = baseline_start(curve, eps_np);
  const std::vector<double> x0{b0, std::log(beta0)};
  const auto restarts = static_cast<std::size_t>(opts.restarts);
  std::vector<std::vector<double>> starts(restarts, x0);
  for (std::size_t k = 1; k < restarts; ++k) {
    std::seed_seq seq{static_cast<std::uint32_t>(opts.rng_seed), static_cast<std::uint32_t>(opts.rng_seed >> 32),
                      static_cast<std::uint32_t>(k)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> z(0.0, 1.0);
    starts[k][0] *= std::exp(0.4 * z(rng));
    starts[k][1] += 0.4 * z(rng);
  }
  std::vector<MinimizeResult> results(restarts);
  detail::parallel_for(restarts, [&](std::size_t k) {
    results[k] = minimizer->minimize(problem, starts[k], MinimizeOptions{opts.tolerance, opts.max_iterations});
  });
  std::optional<std::size_t> best;
  std::size_t best_any = 0;
  for (std::size_t k = 0; k < restarts; ++k) {
    if (results[k].objective < results[best_any].objective * (1.0 - 1e-6)) best_any = k;
    if (!results[k].converged) continue;
    if (!best || results[k].objective < results[*best].objective * (1.0 - 1e-6)) best = k;
  }
  if (!best) {
    throw NonConvergenceError(results[best_any].x, results[best_any].iterations,
                              "adapted-density baseline: no restart converged");
  }
  return {results[*best].x[0], std::exp(results[*best].x[1]), eps_np};
}

}  // namespace

ComparisonReport compare_transition_fits(std::span<const CurvePoint> curve, double eps_np, const FitOptions& opts) {
  opts.validate();
  if (curve.size() < 6) {
    throw InsufficientDataError("compare_transition_fits needs at least 6 points, got " +
                                std::to_string(curve.size()));
  }
  std::vector<CurvePoint> sorted(curve.begin(), curve.end());
  std::sort(sorted.begin(), sorted.end(), [](const CurvePoint& a, const CurvePoint& b) {
    return a.density != b.density ? a.density > b.density : a.error < b.error;
  });
  const auto minimizer = opts.minimizer ? opts.minimizer : default_minimizer();
  FitOptions same = opts;
  same.minimizer = minimizer;

  ComparisonReport report;
  report.optimizer = minimizer->name();
  report.ours = fit_single(sorted, eps_np, same).params;
  report.baseline = fit_baseline(sorted, eps_np, same, minimizer);

  for (const auto& c : sorted) {
    const double ours = eval_single(report.ours, c.density);
    const double base = eval_adapted_density(report.baseline, c.density);
    report.overlay.push_back({c.density, c.error, ours, base});
    report.ours_deltas.push_back(relative_deviation(ours, c.error));
    report.baseline_deltas.push_back(relative_deviation(base, c.error));
  }
  report.ours_stats = fit_stats(report.ours_deltas);
  report.baseline_stats = fit_stats(report.baseline_deltas);
  return report;
}

}  // namespace prunelaw
