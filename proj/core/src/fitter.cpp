// Copyright 2026 The prunelaw Authors
// SPDX-License-Identifier: Apache-2.0

#include "prunelaw/fitter.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <tuple>

#include "parallel.hpp"
#include "prunelaw/errors.hpp"

namespace prunelaw {

namespace {

struct Prepared {
  double eps_np;
  int depth;
  double width;
  double density;
  double error;
};

struct Layout {
  bool phi = false;
  bool psi = false;
  [[nodiscard]] std::size_t size() const { return 3 + (phi ? 1 : 0) + (psi ? 1 : 0); }
};

JointLawParams unpack(std::span<const double> x, Layout layout) {
  JointLawParams p;
  p.eps_high = std::exp(x[0]);
  p.gamma = std::exp(x[1]);
  p.p_prime = std::exp(x[2]);
  std::size_t k = 3;
  p.phi = layout.phi ? x[k++] : 0.0;
  p.psi = layout.psi ? x[k++] : 0.0;
  return p;
}

std::vector<double> pack(const JointLawParams& p, Layout layout) {
  std::vector<double> x{std::log(p.eps_high), std::log(p.gamma), std::log(p.p_prime)};
  if (layout.phi) x.push_back(p.phi);
  if (layout.psi) x.push_back(p.psi);
  return x;
}

double predict(const JointLawParams& p, const Prepared& pt) {
  return law_kernel(pt.eps_np, p.eps_high, p.gamma, p.p_prime,
                    invariant_scale(p.phi, p.psi, pt.depth, pt.width) * pt.density);
}

LeastSquaresProblem make_problem(const std::vector<Prepared>& pts, Layout layout) {
  LeastSquaresProblem problem;
  problem.residual_count = pts.size();
  problem.residuals = [&pts, layout](std::span<const double> x, std::span<double> out) {
    const JointLawParams p = unpack(x, layout);
    for (std::size_t i = 0; i < pts.size(); ++i) out[i] = (predict(p, pts[i]) - pts[i].error) / pts[i].error;
  };
  problem.lower = {std::log(1e-6), std::log(1e-3), -60.0};
  problem.upper = {std::log(10.0), std::log(1e3), 60.0};
  for (std::size_t k = 3; k < layout.size(); ++k) {
    problem.lower.push_back(-20.0);
    problem.upper.push_back(20.0);
  }
  return problem;
}

struct MultiStartResult {
  std::vector<double> x;
  double objective = 0.0;
  int iterations = 0;
  int best_restart = 0;
  int converged = 0;
  std::string optimizer;
};

MultiStartResult multi_start(const std::vector<Prepared>& pts, Layout layout, const std::vector<double>& x0,
                             const FitOptions& opts) {
  const auto minimizer = opts.minimizer ? opts.minimizer : default_minimizer();
  const LeastSquaresProblem problem = make_problem(pts, layout);

  const auto restarts = static_cast<std::size_t>(opts.restarts);
  std::vector<std::vector<double>> starts(restarts, x0);
  const std::vector<double> spread{0.05, 0.4, 1.0, 0.75, 0.75};
  for (std::size_t k = 1; k < restarts; ++k) {
    std::seed_seq seq{static_cast<std::uint32_t>(opts.rng_seed), static_cast<std::uint32_t>(opts.rng_seed >> 32),
                      static_cast<std::uint32_t>(k)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> z(0.0, 1.0);
    for (std::size_t j = 0; j < x0.size(); ++j) starts[k][j] += spread[std::min(j, spread.size() - 1)] * z(rng);
  }

  std::vector<MinimizeResult> results(restarts);
  detail::parallel_for(restarts, [&](std::size_t k) {
    results[k] = minimizer->minimize(problem, starts[k], MinimizeOptions{opts.tolerance, opts.max_iterations});
  });

  // Deterministic reduction: lowest objective among converged restarts,
  // ties (relative 1e-6) resolved toward the lowest restart index.
  MultiStartResult out;
  out.optimizer = minimizer->name();
  std::optional<std::size_t> best;
  std::size_t best_any = 0;
  for (std::size_t k = 0; k < restarts; ++k) {
    if (results[k].objective < results[best_any].objective * (1.0 - 1e-6)) best_any = k;
    if (!results[k].converged) continue;
    ++out.converged;
    if (!best || results[k].objective < results[*best].objective * (1.0 - 1e-6)) best = k;
  }
  if (!best) {
    const auto& r = results[best_any];
    const JointLawParams b = unpack(r.x, layout);
    throw NonConvergenceError({b.eps_high, b.gamma, b.p_prime, b.phi, b.psi}, r.iterations,
                              "no restart converged within " + std::to_string(opts.max_iterations) +
                                  " iterations; best objective " + format_double(r.objective));
  }
  out.x = results[*best].x;
  out.objective = results[*best].objective;
  out.iterations = results[*best].iterations;
  out.best_restart = static_cast<int>(*best);
  return out;
}

struct Seed {
  double eps_high;
  double gamma;
  double transition;
};

/// Least-squares slope of y on x.
std::optional<double> ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() < 2) return std::nullopt;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) return std::nullopt;
  return sxy / sxx;
}

/// Heuristic starting values from a cloud of (x, error, eps_np) samples,
/// where x is the density (single curve) or the invariant (joint).
/// The slope is read off the points whose log-error progress between the two
/// plateaus lies in the middle third; the transition location is recovered
/// from the point nearest the geometric mid-error, shifted by half the
/// power-law span.
Seed seed_from_cloud(const std::vector<double>& x, const std::vector<double>& err, const std::vector<double>& eps_np) {
  const double max_err = *std::max_element(err.begin(), err.end());
  const double max_np = *std::max_element(eps_np.begin(), eps_np.end());
  const double eps_high = std::min(1.0, std::max(max_err, 1.01 * max_np));

  std::vector<double> t(x.size(), -1.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (eps_high > eps_np[i]) t[i] = std::log(err[i] / eps_np[i]) / std::log(eps_high / eps_np[i]);
  }
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (t[i] >= 1.0 / 3.0 && t[i] <= 2.0 / 3.0) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(err[i]));
    }
  }
  auto slope = ols_slope(lx, ly);
  if (!slope || *slope >= 0.0) {
    // Fall back to the middle tercile of x.
    std::vector<std::size_t> order(x.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    lx.clear();
    ly.clear();
    const std::size_t lo = order.size() / 3, hi = std::max(lo + 2, 2 * order.size() / 3);
    for (std::size_t k = lo; k < std::min(hi, order.size()); ++k) {
      lx.push_back(std::log(x[order[k]]));
      ly.push_back(std::log(err[order[k]]));
    }
    slope = ols_slope(lx, ly);
  }
  const double gamma = (slope && *slope < 0.0) ? std::clamp(-*slope, 0.1, 10.0) : 1.0;

  std::size_t mid = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (t[i] < 0.0) continue;
    if (std::abs(t[i] - 0.5) < best) {
      best = std::abs(t[i] - 0.5);
      mid = i;
    }
  }
  const double ratio = eps_high > eps_np[mid] ? eps_np[mid] / eps_high : 1.0;
  const double transition = x[mid] * std::pow(ratio, 1.0 / (2.0 * gamma));
  return Seed{eps_high, gamma, transition};
}

struct ConfigCurve {
  int depth;
  double width;
  std::vector<CurvePoint> curve;  // descending density
};

std::vector<ConfigCurve> config_curves(const MeasurementSet& set) {
  const MeasurementSet agg = aggregate_replicates(set);
  std::vector<ConfigCurve> out;
  std::optional<ConfigKey> current;
  for (const auto& p : agg) {
    if (!current || p.key() != *current) {
      current = p.key();
      out.push_back({p.cfg.depth, p.cfg.width_scale, {}});
    }
    out.back().curve.push_back({p.cfg.density, p.test_error});
  }
  for (auto& c : out) {
    std::sort(c.curve.begin(), c.curve.end(),
              [](const CurvePoint& a, const CurvePoint& b) { return a.density > b.density; });
  }
  return out;
}

/// Density at which a curve first reaches `level` walking down in density.
std::optional<double> crossing_density(const std::vector<CurvePoint>& curve, double level) {
  for (std::size_t i = 0; i + 1 < curve.size(); ++i) {
    const auto& hi = curve[i];
    const auto& lo = curve[i + 1];
    if (hi.error < level && lo.error >= level) {
      const double t = (std::log(level) - std::log(hi.error)) / (std::log(lo.error) - std::log(hi.error));
      return std::exp(std::log(hi.density) + t * (std::log(lo.density) - std::log(hi.density)));
    }
  }
  return std::nullopt;
}

std::optional<ContourSlopes> contour_slopes_impl(const MeasurementSet& set, std::span<const double> levels_in,
                                                 bool use_depth, bool use_width) {
  const auto curves = config_curves(set);
  if (curves.empty() || (!use_depth && !use_width)) return std::nullopt;

  std::vector<double> levels(levels_in.begin(), levels_in.end());
  if (levels.empty()) {
    std::vector<double> lows, highs;
    for (const auto& c : curves) {
      if (c.curve.size() < 2) continue;
      lows.push_back(c.curve.front().error);
      double mx = 0.0;
      for (const auto& p : c.curve) mx = std::max(mx, p.error);
      highs.push_back(mx);
    }
    if (lows.empty()) return std::nullopt;
    std::sort(lows.begin(), lows.end());
    std::sort(highs.begin(), highs.end());
    const double lo = lows[lows.size() / 2];
    const double hi = highs[highs.size() / 2];
    if (!(hi > lo)) return std::nullopt;
    for (double f : {0.3, 0.4, 0.5, 0.6, 0.7}) levels.push_back(lo * std::pow(hi / lo, f));
  }

  double phi_sum = 0.0, psi_sum = 0.0;
  std::size_t used = 0;
  for (double level : levels) {
    std::vector<std::array<double, 3>> rows;  // log l, log w, log d
    for (const auto& c : curves) {
      if (auto d = crossing_density(c.curve, level)) {
        rows.push_back({std::log(static_cast<double>(c.depth)), std::log(c.width), std::log(*d)});
      }
    }
    std::set<double> depths, widths;
    for (const auto& r : rows) {
      depths.insert(r[0]);
      widths.insert(r[1]);
    }
    const bool fit_l = use_depth && depths.size() >= 2;
    const bool fit_w = use_width && widths.size() >= 2;
    if ((use_depth && !fit_l) || (use_width && !fit_w)) continue;
    const Eigen::Index cols = 1 + (fit_l ? 1 : 0) + (fit_w ? 1 : 0);
    if (static_cast<Eigen::Index>(rows.size()) < cols + 1) continue;
    Eigen::MatrixXd a(static_cast<Eigen::Index>(rows.size()), cols);
    Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      Eigen::Index c = 0;
      a(r, c++) = 1.0;
      if (fit_l) a(r, c++) = rows[i][0];
      if (fit_w) a(r, c++) = rows[i][1];
      y(r) = rows[i][2];
    }
    const Eigen::VectorXd coef = a.colPivHouseholderQr().solve(y);
    Eigen::Index c = 1;
    if (fit_l) phi_sum += -coef(c++);
    if (fit_w) psi_sum += -coef(c++);
    ++used;
  }
  if (used == 0) return std::nullopt;
  return ContourSlopes{phi_sum / static_cast<double>(used), psi_sum / static_cast<double>(used), used};
}

std::size_t distinct_depths(const MeasurementSet& set) {
  std::set<int> s;
  for (const auto& p : set) s.insert(p.cfg.depth);
  return s.size();
}

std::size_t distinct_widths(const MeasurementSet& set) {
  std::set<double> s;
  for (const auto& p : set) s.insert(p.cfg.width_scale);
  return s.size();
}

std::string group_label_decade(double density) {
  const int decade = static_cast<int>(std::floor(std::log10(density) + 1e-12));
  return "1e" + std::to_string(decade);
}

}  // namespace

void FitOptions::validate() const {
  if (!(tolerance > 0.0)) throw InvalidParameterError("FitOptions: tolerance must be positive");
  if (restarts < 1) throw InvalidParameterError("FitOptions: restarts must be >= 1");
  if (max_iterations < 1) throw InvalidParameterError("FitOptions: max_iterations must be >= 1");
}

double relative_deviation(double predicted, double actual) {
  if (actual == 0.0) throw DomainError("relative_deviation: actual error is zero");
  return (predicted - actual) / actual;
}

FitStats fit_stats(std::span<const double> deviations) {
  if (deviations.empty()) throw InsufficientDataError("fit_stats: no deviations");
  double sum = 0.0;
  for (double d : deviations) sum += d;
  const double n = static_cast<double>(deviations.size());
  const double mu = sum / n;
  double ss = 0.0;
  for (double d : deviations) ss += (d - mu) * (d - mu);
  return FitStats{mu, std::sqrt(ss / n), deviations.size()};
}

SingleLawParams init_heuristics(std::span<const CurvePoint> curve, double eps_np) {
  std::set<double> densities;
  for (const auto& p : curve) densities.insert(p.density);
  if (densities.size() < 4) {
    throw InsufficientDataError("init_heuristics: need at least 4 distinct densities, got " +
                                std::to_string(densities.size()));
  }
  if (!(eps_np > 0.0 && eps_np < 1.0)) throw InvalidParameterError("init_heuristics: eps_np must lie in (0, 1)");
  const auto [lo, hi] = std::minmax_element(curve.begin(), curve.end(),
                                            [](const CurvePoint& a, const CurvePoint& b) { return a.error < b.error; });
  if (lo->error == hi->error) throw DegenerateCurveError("init_heuristics: every error on the curve is equal");

  std::vector<double> x, err, np;
  for (const auto& p : curve) {
    x.push_back(p.density);
    err.push_back(p.error);
    np.push_back(eps_np);
  }
  const Seed s = seed_from_cloud(x, err, np);
  return SingleLawParams{eps_np, std::max(s.eps_high, eps_np), s.gamma, s.transition};
}

ContourSlopes estimate_contour_slopes(const MeasurementSet& set, std::span<const double> error_levels) {
  const auto nd = distinct_depths(set), nw = distinct_widths(set);
  if (nd < 3 || nw < 3) {
    throw InsufficientDataError("estimate_contour_slopes: need >= 3 depths and >= 3 widths, got " +
                                std::to_string(nd) + " and " + std::to_string(nw));
  }
  auto result = contour_slopes_impl(set, error_levels, true, true);
  if (!result) {
    throw InsufficientDataError("estimate_contour_slopes: no error level is crossed by enough configurations");
  }
  return *result;
}

SingleFit fit_single(std::span<const CurvePoint> curve, double eps_np, const FitOptions& opts) {
  opts.validate();
  if (curve.size() < 4) {
    throw InsufficientDataError("fit_single: need at least 4 points, got " + std::to_string(curve.size()));
  }
  const SingleLawParams init = init_heuristics(curve, eps_np);

  std::vector<Prepared> pts;
  pts.reserve(curve.size());
  for (const auto& p : curve) {
    if (!(p.density > 0.0 && p.density <= 1.0)) throw DomainError("fit_single: density outside (0, 1]");
    if (!(p.error > 0.0)) throw DomainError("fit_single: error must be positive");
    pts.push_back({eps_np, 1, 1.0, p.density, p.error});
  }
  std::sort(pts.begin(), pts.end(), [](const Prepared& a, const Prepared& b) {
    return std::tie(a.density, a.error) < std::tie(b.density, b.error);
  });

  const Layout layout{false, false};
  const JointLawParams start{init.eps_high, init.gamma, init.p, 0.0, 0.0};
  const auto best = multi_start(pts, layout, pack(start, layout), opts);
  JointLawParams fitted = unpack(best.x, layout);

  SingleFit out;
  if (fitted.eps_high > 1.0) {
    fitted.eps_high = 1.0;
    out.eps_high_capped = true;
  }
  out.params = SingleLawParams{eps_np, fitted.eps_high, fitted.gamma, fitted.p_prime};
  std::vector<double> deltas;
  deltas.reserve(pts.size());
  double objective = 0.0;
  for (const auto& pt : pts) {
    const double d = relative_deviation(law_kernel(eps_np, fitted.eps_high, fitted.gamma, fitted.p_prime, pt.density),
                                        pt.error);
    deltas.push_back(d);
    objective += d * d;
  }
  out.stats = fit_stats(deltas);
  out.objective = objective;
  out.iterations = best.iterations;
  return out;
}

JointFit fit_joint(const MeasurementSet& set, const UnprunedErrorTable& np_table, const FitOptions& opts) {
  opts.validate();
  if (set.empty()) throw InsufficientDataError("fit_joint: measurement set is empty");
  np_table.require_coverage(set);
  if (!opts.fit_phi && distinct_depths(set) > 1) {
    throw InconsistencyError("fit_joint: depth varies across the set (" + std::to_string(distinct_depths(set)) +
                             " values) but the depth exponent phi is disabled");
  }
  if (!opts.fit_psi && distinct_widths(set) > 1) {
    throw InconsistencyError("fit_joint: width varies across the set (" + std::to_string(distinct_widths(set)) +
                             " values) but the width exponent psi is disabled");
  }

  const MeasurementSet canon = set.canonical();
  std::vector<Prepared> pts;
  pts.reserve(canon.size());
  for (const auto& p : canon) {
    pts.push_back({np_table.at(p.key()), p.cfg.depth, p.cfg.width_scale, p.cfg.density, p.test_error});
  }

  const bool phi_varies = opts.fit_phi && distinct_depths(canon) >= 2;
  const bool psi_varies = opts.fit_psi && distinct_widths(canon) >= 2;
  double phi0 = 0.0, psi0 = 0.0;
  if (phi_varies || psi_varies) {
    if (auto slopes = contour_slopes_impl(canon, {}, phi_varies, psi_varies)) {
      phi0 = phi_varies ? slopes->phi : 0.0;
      psi0 = psi_varies ? slopes->psi : 0.0;
    }
  }
  std::vector<double> x, err, np;
  for (const auto& pt : pts) {
    x.push_back(invariant_scale(phi0, psi0, pt.depth, pt.width) * pt.density);
    err.push_back(pt.error);
    np.push_back(pt.eps_np);
  }
  const Seed s = seed_from_cloud(x, err, np);

  const Layout layout{opts.fit_phi, opts.fit_psi};
  const JointLawParams start{s.eps_high, s.gamma, s.transition, phi0, psi0};
  const auto best = multi_start(pts, layout, pack(start, layout), opts);

  JointFit fit;
  fit.params = unpack(best.x, layout);
  if (fit.params.eps_high > 1.0) {
    fit.params.eps_high = 1.0;
    fit.eps_high_capped = true;
  }
  fit.fit_phi = opts.fit_phi;
  fit.fit_psi = opts.fit_psi;
  fit.best_restart = best.best_restart;
  fit.restarts = opts.restarts;
  fit.restarts_converged = best.converged;
  fit.max_iterations = opts.max_iterations;
  fit.tolerance = opts.tolerance;
  fit.rng_seed = opts.rng_seed;
  fit.optimizer = best.optimizer;
  fit.eps_np_table = np_table;
  fit.provenance = set.provenance();

  const FitReport report = evaluate_params(fit.params, np_table, canon);
  fit.stats = report.stats;
  double objective = 0.0;
  for (const auto& d : report.deviations) objective += d.delta * d.delta;
  fit.objective = objective;
  return fit;
}

FitReport evaluate_params(const JointLawParams& params, const UnprunedErrorTable& np_table, const MeasurementSet& set) {
  if (set.empty()) throw InsufficientDataError("evaluate_fit: measurement set is empty");
  np_table.require_coverage(set);
  const MeasurementSet canon = set.canonical();

  FitReport report;
  report.params = params;
  std::vector<double> all;
  all.reserve(canon.size());
  std::map<std::pair<int, double>, std::vector<double>> by_depth, by_width, by_n, by_decade;
  for (const auto& p : canon) {
    PointDeviation dev;
    dev.point = p;
    dev.eps_np = np_table.at(p.key());
    const double m = invariant_scale(params.phi, params.psi, p.cfg.depth, p.cfg.width_scale) * p.cfg.density;
    dev.predicted = law_kernel(dev.eps_np, params.eps_high, params.gamma, params.p_prime, m);
    dev.delta = relative_deviation(dev.predicted, p.test_error);
    all.push_back(dev.delta);
    by_depth[{0, static_cast<double>(p.cfg.depth)}].push_back(dev.delta);
    by_width[{0, p.cfg.width_scale}].push_back(dev.delta);
    by_n[{0, static_cast<double>(p.cfg.subsample_size)}].push_back(dev.delta);
    by_decade[{static_cast<int>(std::floor(std::log10(p.cfg.density) + 1e-12)), 0.0}].push_back(dev.delta);
    report.deviations.push_back(std::move(dev));
  }
  report.stats = fit_stats(all);

  for (const auto& [k, v] : by_depth) {
    report.breakdowns.push_back({"depth", std::to_string(static_cast<int>(k.second)), fit_stats(v)});
  }
  for (const auto& [k, v] : by_width) report.breakdowns.push_back({"width_scale", format_double(k.second), fit_stats(v)});
  for (const auto& [k, v] : by_n) {
    report.breakdowns.push_back({"subsample_size", std::to_string(static_cast<std::int64_t>(k.second)), fit_stats(v)});
  }
  for (const auto& [k, v] : by_decade) {
    report.breakdowns.push_back({"density_decade", group_label_decade(std::pow(10.0, k.first)), fit_stats(v)});
  }
  return report;
}

FitReport evaluate_fit(const JointFit& fit, const MeasurementSet& set) {
  return evaluate_params(fit.params, fit.eps_np_table, set);
}

std::vector<CurvePoint> curve_of(const MeasurementSet& set, const ConfigKey& key) {
  std::vector<CurvePoint> curve;
  for (const auto& p : set) {
    if (p.key() == key) curve.push_back({p.cfg.density, p.test_error});
  }
  std::sort(curve.begin(), curve.end(), [](const CurvePoint& a, const CurvePoint& b) {
    return a.density > b.density || (a.density == b.density && a.error < b.error);
  });
  return curve;
}

}  // namespace prunelaw
