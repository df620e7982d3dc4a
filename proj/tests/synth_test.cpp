// Copyright 2026 The prunelaw Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <map>
#include <vector>

#include <gtest/gtest.h>

#include "prunelaw/errors.hpp"
#include "prunelaw/fitter.hpp"
#include "prunelaw/synth.hpp"

namespace prunelaw {
namespace {

SynthSpec spec(double noise = 0.0, std::uint64_t seed = 1) {
  SynthSpec s;
  // High plateau low enough that 6% noise keeps every error below 1.
  s.truth = {0.75, 2.0, 1.0, 1.2, 0.8};
  s.depths = {2, 4, 8};
  s.widths = {0.5, 1.0, 2.0};
  s.subsample_sizes = {50000};
  s.eps_np = model_eps_np_table(s.family, s.depths, s.widths, s.subsample_sizes);
  s.noise_rel_std = noise;
  s.rng_seed = seed;
  return s;
}

TEST(Spec, DefaultDensitiesAreTheIMPGrid) {
  const auto d = SynthSpec::default_densities();
  ASSERT_EQ(d.size(), 41u);
  for (int i = 0; i <= 40; ++i) EXPECT_DOUBLE_EQ(d[i], std::pow(0.8, i));
}

TEST(Spec, Validation) {
  auto s = spec();
  s.noise_rel_std = -0.1;
  EXPECT_THROW(s.validate(), InvalidParameterError);
  s = spec();
  s.densities = {1.0, 0.0};
  EXPECT_THROW(s.validate(), InvalidParameterError);
}

TEST(Generate, NoiselessEqualsTheLaw) {
  const auto s = spec();
  const auto out = generate_surface(s);
  EXPECT_EQ(out.measurements.size(), 9u * 41u);
  for (const auto& p : out.measurements) {
    EXPECT_EQ(p.test_error, eval_joint(s.truth, out.eps_np.at(p.key()), p.cfg));
  }
}

TEST(Generate, DeterministicPerSeedAndSeedsDiffer) {
  const auto a = generate_surface(spec(0.03, 5));
  const auto b = generate_surface(spec(0.03, 5));
  const auto c = generate_surface(spec(0.03, 6));
  EXPECT_EQ(serialize_measurements(a.measurements), serialize_measurements(b.measurements));
  EXPECT_NE(serialize_measurements(a.measurements), serialize_measurements(c.measurements));
}

TEST(Generate, InterchangeableConfigsGiveEqualErrors) {
  // Two configs with the same l^phi w^psi and the same eps_np.
  auto s = spec();
  s.truth = {0.9, 2.0, 1.0, 1.0, 2.0};
  s.depths = {1, 4};
  s.widths = {1.0, 2.0, 0.5};
  UnprunedErrorTable t;
  for (int l : s.depths)
    for (double w : s.widths) t.set({s.family, l, w, 50000}, 0.07);
  s.eps_np = t;
  const auto out = generate_surface(s);
  std::map<double, std::vector<double>> by_density_a, by_density_b;
  for (const auto& p : out.measurements) {
    if (p.cfg.depth == 4 && p.cfg.width_scale == 1.0) by_density_a[p.cfg.density].push_back(p.test_error);
    if (p.cfg.depth == 1 && p.cfg.width_scale == 2.0) by_density_b[p.cfg.density].push_back(p.test_error);
  }
  ASSERT_EQ(by_density_a.size(), 41u);
  for (const auto& [d, e] : by_density_a) EXPECT_EQ(e, by_density_b.at(d));
}

TEST(Generate, ReplicateSpreadMatchesNoise) {
  auto s = spec(0.034, 11);
  s.replicates = 3;
  const auto out = generate_surface(s);
  EXPECT_EQ(out.measurements.size(), 3u * 9u * 41u);
  EXPECT_NEAR(replicate_spread(out.measurements).pooled_relative_std, 0.034, 0.0034);
}

TEST(Generate, DipLowersThePlateauOnly) {
  auto base = spec();
  base.truth.p_prime = 0.05;  // long low-error plateau
  auto s = base;
  s.dip = DipSpec{0.03, 1.0};
  const auto clean = generate_surface(base);
  const auto dipped = generate_surface(s);
  ASSERT_EQ(clean.measurements.size(), dipped.measurements.size());
  bool any = false;
  for (std::size_t i = 0; i < clean.measurements.size(); ++i) {
    const double c = clean.measurements[i].test_error, d = dipped.measurements[i].test_error;
    EXPECT_LE(d, c);
    EXPECT_GE(d, c * 0.97 * (1 - 1e-12));
    const double density = clean.measurements[i].cfg.density;
    if (density == 1.0 || density < 0.1) EXPECT_EQ(d, c);
    any |= d < c;
  }
  EXPECT_TRUE(any);
}

TEST(Generate, DipBiasesTheFitPositive) {
  auto s = reference_spec();
  s.dip = DipSpec{0.03, 1.0};
  const auto out = generate_surface(s);
  const auto fit = fit_joint(out.measurements, out.eps_np, {});
  EXPECT_GT(fit.stats.mu, 0.002);
  EXPECT_LT(fit.stats.mu, 0.03);
}

TEST(Generate, FittedSigmaGrowsWithNoise) {
  FitOptions o;
  o.restarts = 2;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    double prev = -1.0;
    for (double noise : {0.0, 0.01, 0.03, 0.06}) {
      const auto out = generate_surface(spec(noise, seed));
      const double sigma = fit_joint(out.measurements, out.eps_np, o).stats.sigma;
      EXPECT_GT(sigma, prev) << "seed " << seed << " noise " << noise;
      prev = sigma;
    }
  }
}

TEST(Generate, OutOfRangeErrorIsReported) {
  auto s = spec(3.0, 1);
  EXPECT_THROW((void)generate_surface(s), DomainError);
}

TEST(EpsNpModel, ShrinksWithSizeAndData) {
  EXPECT_GT(model_eps_np(2, 0.5, 5000), model_eps_np(4, 0.5, 5000));
  EXPECT_GT(model_eps_np(2, 0.5, 5000), model_eps_np(2, 1.0, 5000));
  EXPECT_GT(model_eps_np(2, 0.5, 5000), model_eps_np(2, 0.5, 50000));
  for (int l : {1, 2, 100})
    for (double w : {0.01, 1.0, 100.0}) {
      EXPECT_GT(model_eps_np(l, w, 10), 0.0);
      EXPECT_LT(model_eps_np(l, w, 10), 1.0);
    }
}

}  // namespace
}  // namespace prunelaw
