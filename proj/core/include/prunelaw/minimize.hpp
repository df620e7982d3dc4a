// Copyright 2026 The prunelaw Authors
// SPDX-License-Identifier: Apache-2.0
//
// Local minimization of a sum of squared residuals behind a single contract:
// residual function, initial point, box bounds, tolerance and iteration cap.

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace prunelaw {

struct LeastSquaresProblem {
  /// Writes residuals(x) into `out` (size `residual_count`).
  std::function<void(std::span<const double> x, std::span<double> out)> residuals;
  std::size_t residual_count = 0;
  /// Box bounds; empty means unbounded. Iterates are projected onto the box.
  std::vector<double> lower;
  std::vector<double> upper;

  [[nodiscard]] double objective(std::span<const double> x) const;
};

struct MinimizeOptions {
  double tolerance = 1e-12;
  int max_iterations = 500;
};

struct MinimizeResult {
  std::vector<double> x;
  double objective = 0.0;  // sum of squared residuals at x
  int iterations = 0;
  bool converged = false;
};

class Minimizer {
 public:
  virtual ~Minimizer() = default;
  [[nodiscard]] virtual MinimizeResult minimize(const LeastSquaresProblem& problem, std::span<const double> x0,
                                                const MinimizeOptions& options) const = 0;
  [[nodiscard]] virtual std::string name() const = 0;
};

/// Levenberg-Marquardt with a central-difference Jacobian.
class LevenbergMarquardt final : public Minimizer {
 public:
  [[nodiscard]] MinimizeResult minimize(const LeastSquaresProblem& problem, std::span<const double> x0,
                                        const MinimizeOptions& options) const override;
  [[nodiscard]] std::string name() const override { return "levenberg-marquardt"; }
};

/// Derivative-free Nelder-Mead simplex on the summed squares.
class NelderMead final : public Minimizer {
 public:
  explicit NelderMead(double initial_step = 0.1) : initial_step_(initial_step) {}
  [[nodiscard]] MinimizeResult minimize(const LeastSquaresProblem& problem, std::span<const double> x0,
                                        const MinimizeOptions& options) const override;
  [[nodiscard]] std::string name() const override { return "nelder-mead"; }

 private:
  double initial_step_;
};

[[nodiscard]] std::shared_ptr<const Minimizer> default_minimizer();

}  // namespace prunelaw
