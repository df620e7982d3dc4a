// Copyright 2026 The prunelaw Authors
// SPDX-License-Identifier: Apache-2.0

#include "prunelaw/minimize.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "prunelaw/errors.hpp"

namespace prunelaw {

namespace {

void project(const LeastSquaresProblem& p, std::vector<double>& x) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!p.lower.empty()) x[i] = std::max(x[i], p.lower[i]);
    if (!p.upper.empty()) x[i] = std::min(x[i], p.upper[i]);
  }
}

double sum_squares(std::span<const double> r) {
  double s = 0.0;
  for (double v : r) s += v * v;
  return std::isfinite(s) ? s : std::numeric_limits<double>::infinity();
}

void check_problem(const LeastSquaresProblem& p, std::size_t n) {
  if (!p.residuals) throw InvalidParameterError("minimize: residual function is empty");
  if (p.residual_count == 0) throw InvalidParameterError("minimize: problem has no residuals");
  if ((!p.lower.empty() && p.lower.size() != n) || (!p.upper.empty() && p.upper.size() != n)) {
    throw InvalidParameterError("minimize: bound dimension does not match the initial point");
  }
}

}  // namespace

double LeastSquaresProblem::objective(std::span<const double> x) const {
  std::vector<double> r(residual_count);
  residuals(x, r);
  return sum_squares(r);
}

MinimizeResult LevenbergMarquardt::minimize(const LeastSquaresProblem& problem, std::span<const double> x0,
                                            const MinimizeOptions& options) const {
  const std::size_t n = x0.size();
  const std::size_t m = problem.residual_count;
  check_problem(problem, n);

  std::vector<double> x(x0.begin(), x0.end());
  project(problem, x);
  std::vector<double> r(m), r_try(m), r_plus(m), r_minus(m), x_try(n);
  problem.residuals(x, r);
  double f = sum_squares(r);

  MinimizeResult result;
  Eigen::MatrixXd jac(m, n);
  double lambda = 1e-3;
  int iter = 0;
  bool converged = false;

  while (iter < options.max_iterations && !converged) {
    ++iter;
    if (f == 0.0) {
      converged = true;
      break;
    }
    // Central differences, one-sided at an active bound.
    for (std::size_t j = 0; j < n; ++j) {
      const double h = 6e-6 * std::max(1.0, std::abs(x[j]));
      std::vector<double> xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      const bool up_ok = problem.upper.empty() || xp[j] <= problem.upper[j];
      const bool down_ok = problem.lower.empty() || xm[j] >= problem.lower[j];
      if (up_ok) problem.residuals(xp, r_plus);
      if (down_ok) problem.residuals(xm, r_minus);
      for (std::size_t i = 0; i < m; ++i) {
        if (up_ok && down_ok) {
          jac(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (r_plus[i] - r_minus[i]) / (2.0 * h);
        } else if (up_ok) {
          jac(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (r_plus[i] - r[i]) / h;
        } else {
          jac(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (r[i] - r_minus[i]) / h;
        }
      }
    }
    const Eigen::Map<const Eigen::VectorXd> rv(r.data(), static_cast<Eigen::Index>(m));
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd grad = jac.transpose() * rv;
    if (!grad.allFinite()) break;

    const double diag_floor = 1e-12 * std::max(1.0, jtj.diagonal().maxCoeff());
    bool accepted = false;
    while (!accepted) {
      Eigen::MatrixXd lhs = jtj;
      for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(n); ++j) {
        lhs(j, j) += lambda * std::max(jtj(j, j), diag_floor);
      }
      const Eigen::VectorXd step = lhs.ldlt().solve(-grad);
      for (std::size_t j = 0; j < n; ++j) x_try[j] = x[j] + step(static_cast<Eigen::Index>(j));
      project(problem, x_try);
      problem.residuals(x_try, r_try);
      const double f_try = sum_squares(r_try);
      if (step.allFinite() && f_try < f) {
        double step_norm = 0.0, x_norm = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          step_norm += (x_try[j] - x[j]) * (x_try[j] - x[j]);
          x_norm += x[j] * x[j];
        }
        const double decrease = f - f_try;
        x.swap(x_try);
        r.swap(r_try);
        f = f_try;
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        if (decrease <= options.tolerance * f ||
            std::sqrt(step_norm) <= options.tolerance * (std::sqrt(x_norm) + options.tolerance) || f < 1e-300) {
          converged = true;
        }
      } else {
        lambda *= 10.0;
        if (lambda > 1e16) {
          // No descent direction left at working precision: stationary point.
          converged = true;
          break;
        }
      }
    }
  }
  result.x = std::move(x);
  result.objective = f;
  result.iterations = iter;
  result.converged = converged;
  return result;
}

MinimizeResult NelderMead::minimize(const LeastSquaresProblem& problem, std::span<const double> x0,
                                    const MinimizeOptions& options) const {
  const std::size_t n = x0.size();
  check_problem(problem, n);
  std::vector<double> r(problem.residual_count);
  auto eval = [&](std::vector<double>& x) {
    project(problem, x);
    problem.residuals(x, r);
    return sum_squares(r);
  };

  std::vector<std::vector<double>> simplex(n + 1, std::vector<double>(x0.begin(), x0.end()));
  for (std::size_t j = 0; j < n; ++j) {
    simplex[j + 1][j] += initial_step_ * std::max(1.0, std::abs(x0[j]));
  }
  std::vector<double> fv(n + 1);
  for (std::size_t i = 0; i <= n; ++i) fv[i] = eval(simplex[i]);

  std::vector<std::size_t> order(n + 1);
  int iter = 0;
  bool converged = false;
  while (iter < options.max_iterations) {
    ++iter;
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[n - 1];

    double size = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
      for (std::size_t j = 0; j < n; ++j) size = std::max(size, std::abs(simplex[i][j] - simplex[best][j]));
    }
    if (fv[worst] - fv[best] <= options.tolerance * (std::abs(fv[best]) + 1e-300) &&
        size <= std::sqrt(options.tolerance)) {
      converged = true;
      break;
    }
    if (fv[best] == 0.0) {
      converged = true;
      break;
    }

    std::vector<double> centroid(n, 0.0);
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == worst) continue;
      for (std::size_t j = 0; j < n; ++j) centroid[j] += simplex[i][j] / static_cast<double>(n);
    }
    auto along = [&](double t) {
      std::vector<double> p(n);
      for (std::size_t j = 0; j < n; ++j) p[j] = centroid[j] + t * (simplex[worst][j] - centroid[j]);
      return p;
    };
    auto reflected = along(-1.0);
    const double fr = eval(reflected);
    if (fr < fv[best]) {
      auto expanded = along(-2.0);
      const double fe = eval(expanded);
      if (fe < fr) {
        simplex[worst] = std::move(expanded);
        fv[worst] = fe;
      } else {
        simplex[worst] = std::move(reflected);
        fv[worst] = fr;
      }
    } else if (fr < fv[second]) {
      simplex[worst] = std::move(reflected);
      fv[worst] = fr;
    } else {
      auto contracted = fr < fv[worst] ? along(-0.5) : along(0.5);
      const double fc = eval(contracted);
      if (fc < std::min(fr, fv[worst])) {
        simplex[worst] = std::move(contracted);
        fv[worst] = fc;
      } else {
        for (std::size_t i = 0; i <= n; ++i) {
          if (i == best) continue;
          for (std::size_t j = 0; j < n; ++j) simplex[i][j] = simplex[best][j] + 0.5 * (simplex[i][j] - simplex[best][j]);
          fv[i] = eval(simplex[i]);
        }
      }
    }
  }
  const auto best = static_cast<std::size_t>(std::min_element(fv.begin(), fv.end()) - fv.begin());
  return MinimizeResult{simplex[best], fv[best], iter, converged};
}

std::shared_ptr<const Minimizer> default_minimizer() {
  static const auto instance = std::make_shared<const LevenbergMarquardt>();
  return instance;
}

}  // namespace prunelaw
