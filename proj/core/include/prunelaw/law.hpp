// Copyright 2026 The prunelaw Authors
// SPDX-License-Identifier: Apache-2.0
//
// Closed-form evaluation of the pruned-error scaling law.
//
// For a single network the predicted error at density d is
//
//     eps_np * ((d^2 + a^2) / (d^2 + b^2))^(gamma / 2),
//     a = p * (eps_high / eps_np)^(1 / gamma),  b = p,
//
// which is the modulus |(d - ja) / (d - jb)|^gamma written without complex
// arithmetic. The joint form over a family replaces d with the invariant
// m* = l^phi * w^psi * d and p with p'.

#pragma once

#include <cstdint>
#include <string>

namespace prunelaw {

/// One member of a network family together with its training-set size and
/// the density it has been pruned to.
struct NetworkConfig {
  int depth = 1;                   // layers, excluding skip connections
  double width_scale = 1.0;        // multiplier applied to every layer's width
  std::int64_t subsample_size = 1; // number of training examples
  double density = 1.0;            // fraction of prunable weights remaining

  /// Throws InvalidParameterError naming the first offending field.
  void validate() const;

  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

/// Per-configuration law: the unpruned error plus the three shape constants.
struct SingleLawParams {
  double eps_np = 0.1;    // low-error plateau
  double eps_high = 0.9;  // high-error plateau
  double gamma = 1.0;     // power-law slope on log-log axes
  double p = 0.01;        // density of the high-plateau / power-law bend

  void validate() const;
};

/// The five constants shared by an entire family.
struct JointLawParams {
  double eps_high = 0.9;
  double gamma = 1.0;
  double p_prime = 1.0;
  double phi = 0.0;  // depth exponent of the invariant
  double psi = 0.0;  // width exponent of the invariant

  void validate() const;

  friend bool operator==(const JointLawParams&, const JointLawParams&) = default;
};

/// Error-preserving invariant m* = l^phi * w^psi * d.
struct Invariant {
  double m_star = 1.0;
};

/// Relative parameter count m = d * l * w^2.
struct ParamCount {
  double m = 1.0;
};

/// ((x^2 + a^2) / (x^2 + b^2))^(gamma / 2). Requires x > 0 and gamma > 0.
[[nodiscard]] double rational_modulus(double x, double a, double b, double gamma);

/// Unchecked law kernel shared by evaluation and fitting. Computes
/// eps_np * rational_modulus(x, p * (eps_high / eps_np)^(1/gamma), p, gamma)
/// without validating any argument.
[[nodiscard]] double law_kernel(double eps_np, double eps_high, double gamma, double p, double x) noexcept;

[[nodiscard]] double eval_single(const SingleLawParams& params, double density);

[[nodiscard]] Invariant invariant(double phi, double psi, const NetworkConfig& cfg);

/// l^phi * w^psi, the factor that converts density to the invariant.
[[nodiscard]] double invariant_scale(double phi, double psi, int depth, double width_scale) noexcept;

[[nodiscard]] double eval_joint(const JointLawParams& params, double eps_np, const NetworkConfig& cfg);

/// Evaluates the joint law directly at an invariant value. eval_joint routes
/// through this function, so two configurations that produce the same m*
/// produce bit-identical predictions.
[[nodiscard]] double eval_joint_at(const JointLawParams& params, double eps_np, Invariant m);

/// Invariant value at which the joint law equals `target`.
/// Throws OutOfRangeError unless eps_np < target < eps_high.
[[nodiscard]] Invariant invert_joint_invariant(const JointLawParams& params, double eps_np, double target);

/// Density at which a network of the given depth and width reaches `target`.
/// Throws OutOfRangeError when the target lies outside the open plateau
/// interval or when reaching it would require a density above 1.
[[nodiscard]] double invert_joint(const JointLawParams& params, double eps_np, int depth,
                                  double width_scale, double target);

[[nodiscard]] ParamCount param_count(const NetworkConfig& cfg);

/// Transition location of the per-configuration law implied by a joint fit:
/// p = p' / (l^phi * w^psi).
[[nodiscard]] double per_config_transition(const JointLawParams& params, int depth, double width_scale);

/// Restricts a joint law to one (l, w, eps_np) member.
[[nodiscard]] SingleLawParams restrict_to_config(const JointLawParams& params, double eps_np, int depth,
                                                 double width_scale);

}  // namespace prunelaw
