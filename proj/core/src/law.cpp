// Copyright 2026 The prunelaw Authors
// SPDX-License-Identifier: Apache-2.0

#include "prunelaw/law.hpp"

#include <cmath>
#include <sstream>

#include "prunelaw/errors.hpp"

namespace prunelaw {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

[[noreturn]] void bad_param(const std::string& name, double value, const std::string& rule) {
  throw InvalidParameterError(name + " = " + fmt(value) + " violates " + rule);
}

}  // namespace

void NetworkConfig::validate() const {
  if (depth < 1) bad_param("depth", depth, "depth >= 1");
  if (!(width_scale > 0.0) || !std::isfinite(width_scale)) bad_param("width_scale", width_scale, "width_scale > 0");
  if (subsample_size < 1) bad_param("subsample_size", static_cast<double>(subsample_size), "subsample_size >= 1");
  if (!(density > 0.0 && density <= 1.0)) bad_param("density", density, "0 < density <= 1");
}

void SingleLawParams::validate() const {
  if (!(eps_np > 0.0 && eps_np < 1.0)) bad_param("eps_np", eps_np, "0 < eps_np < 1");
  if (!(eps_high > 0.0 && eps_high <= 1.0)) bad_param("eps_high", eps_high, "0 < eps_high <= 1");
  if (!(eps_high >= eps_np)) bad_param("eps_high", eps_high, "eps_high >= eps_np");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) bad_param("gamma", gamma, "gamma > 0");
  if (!(p > 0.0) || !std::isfinite(p)) bad_param("p", p, "p > 0");
}

void JointLawParams::validate() const {
  if (!(eps_high > 0.0 && eps_high <= 1.0)) bad_param("eps_high", eps_high, "0 < eps_high <= 1");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) bad_param("gamma", gamma, "gamma > 0");
  if (!(p_prime > 0.0) || !std::isfinite(p_prime)) bad_param("p_prime", p_prime, "p_prime > 0");
  if (!std::isfinite(phi)) bad_param("phi", phi, "finite phi");
  if (!std::isfinite(psi)) bad_param("psi", psi, "finite psi");
}

double rational_modulus(double x, double a, double b, double gamma) {
  if (!(x > 0.0)) throw DomainError("rational_modulus: x must be positive, got " + fmt(x));
  if (!(gamma > 0.0)) throw DomainError("rational_modulus: gamma must be positive, got " + fmt(gamma));
  const double x2 = x * x;
  return std::pow((x2 + a * a) / (x2 + b * b), 0.5 * gamma);
}

double law_kernel(double eps_np, double eps_high, double gamma, double p, double x) noexcept {
  const double a = p * std::pow(eps_high / eps_np, 1.0 / gamma);
  const double x2 = x * x;
  return eps_np * std::pow((x2 + a * a) / (x2 + p * p), 0.5 * gamma);
}

double eval_single(const SingleLawParams& params, double density) {
  params.validate();
  if (!(density > 0.0 && density <= 1.0)) throw DomainError("eval_single: density must lie in (0, 1], got " + fmt(density));
  return law_kernel(params.eps_np, params.eps_high, params.gamma, params.p, density);
}

double invariant_scale(double phi, double psi, int depth, double width_scale) noexcept {
  return std::pow(static_cast<double>(depth), phi) * std::pow(width_scale, psi);
}

Invariant invariant(double phi, double psi, const NetworkConfig& cfg) {
  cfg.validate();
  return Invariant{invariant_scale(phi, psi, cfg.depth, cfg.width_scale) * cfg.density};
}

double eval_joint_at(const JointLawParams& params, double eps_np, Invariant m) {
  params.validate();
  if (!(eps_np > 0.0)) throw DomainError("eval_joint: eps_np must be positive, got " + fmt(eps_np));
  if (eps_np > params.eps_high) {
    throw DomainError("eval_joint: eps_np = " + fmt(eps_np) + " exceeds eps_high = " + fmt(params.eps_high) +
                      " (plateaus would invert)");
  }
  if (!(m.m_star > 0.0)) throw DomainError("eval_joint: invariant must be positive, got " + fmt(m.m_star));
  return law_kernel(eps_np, params.eps_high, params.gamma, params.p_prime, m.m_star);
}

double eval_joint(const JointLawParams& params, double eps_np, const NetworkConfig& cfg) {
  return eval_joint_at(params, eps_np, invariant(params.phi, params.psi, cfg));
}

Invariant invert_joint_invariant(const JointLawParams& params, double eps_np, double target) {
  params.validate();
  if (!(eps_np > 0.0 && eps_np < target && target < params.eps_high)) {
    throw OutOfRangeError(eps_np, params.eps_high,
                          "target error " + fmt(target) + " outside the reachable interval (" + fmt(eps_np) + ", " +
                              fmt(params.eps_high) + ") between the low- and high-error plateaus");
  }
  const double b = params.p_prime;
  const double a = b * std::pow(params.eps_high / eps_np, 1.0 / params.gamma);
  // r - 1 through expm1 keeps precision when the target sits just above eps_np.
  const double log_r = (2.0 / params.gamma) * std::log1p((target - eps_np) / eps_np);
  const double r = std::exp(log_r);
  const double rm1 = std::expm1(log_r);
  const double m2 = (a * a - r * b * b) / rm1;
  if (!(m2 > 0.0) || !std::isfinite(m2)) {
    throw OutOfRangeError(eps_np, params.eps_high, "target error " + fmt(target) + " not reachable at positive invariant");
  }
  return Invariant{std::sqrt(m2)};
}

double invert_joint(const JointLawParams& params, double eps_np, int depth, double width_scale, double target) {
  if (depth < 1) bad_param("depth", depth, "depth >= 1");
  if (!(width_scale > 0.0)) bad_param("width_scale", width_scale, "width_scale > 0");
  const Invariant m = invert_joint_invariant(params, eps_np, target);
  const double d = m.m_star / invariant_scale(params.phi, params.psi, depth, width_scale);
  // A target equal to the full-density error can land a few ulps above 1.
  if (d > 1.0 && d <= 1.0 + 1e-12) return 1.0;
  if (d > 1.0) {
    throw OutOfRangeError(eps_np, params.eps_high,
                          "target error " + fmt(target) + " requires density " + fmt(d) + " > 1 for depth " +
                              std::to_string(depth) + ", width " + fmt(width_scale));
  }
  return d;
}

ParamCount param_count(const NetworkConfig& cfg) {
  cfg.validate();
  return ParamCount{cfg.density * static_cast<double>(cfg.depth) * cfg.width_scale * cfg.width_scale};
}

double per_config_transition(const JointLawParams& params, int depth, double width_scale) {
  return params.p_prime / invariant_scale(params.phi, params.psi, depth, width_scale);
}

SingleLawParams restrict_to_config(const JointLawParams& params, double eps_np, int depth, double width_scale) {
  return SingleLawParams{eps_np, params.eps_high, params.gamma, per_config_transition(params, depth, width_scale)};
}

}  // namespace prunelaw
