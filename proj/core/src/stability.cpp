// Copyright 2026 The prunelaw Authors
// SPDX-License-Identifier: Apache-2.0

#include "prunelaw/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include "parallel.hpp"
#include "prunelaw/errors.hpp"

namespace prunelaw {

namespace {

std::mt19937_64 trial_rng(std::uint64_t seed, std::size_t t, std::size_t trial) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(t), static_cast<std::uint32_t>(trial)};
  return std::mt19937_64(seq);
}

/// First `k` entries of a partial Fisher-Yates shuffle of [0, n).
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k, std::mt19937_64& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

double sample_std(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

TrialOutcome run_trial(const MeasurementSet& full, const UnprunedErrorTable& np_table, const MeasurementSet& sample,
                       const FitOptions& opts) {
  std::set<double> densities;
  std::set<int> depths;
  std::set<double> widths;
  for (const auto& p : sample) {
    densities.insert(p.cfg.density);
    depths.insert(p.cfg.depth);
    widths.insert(p.cfg.width_scale);
  }
  if (densities.size() < 2) {
    throw InsufficientDataError("stability trial sample has " + std::to_string(densities.size()) +
                                " distinct densities; at least 2 are required");
  }
  std::set<int> all_depths;
  std::set<double> all_widths;
  for (const auto& p : full) {
    all_depths.insert(p.cfg.depth);
    all_widths.insert(p.cfg.width_scale);
  }
  TrialOutcome out;
  if (opts.fit_phi && all_depths.size() > 1 && depths.size() < 2) {
    out.flagged = true;
    out.flag_reason = "depth constant in sample; phi unidentifiable";
    return out;
  }
  if (opts.fit_psi && all_widths.size() > 1 && widths.size() < 2) {
    out.flagged = true;
    out.flag_reason = "width constant in sample; psi unidentifiable";
    return out;
  }
  try {
    const JointFit fit = fit_joint(sample, np_table, opts);
    const FitReport report = evaluate_params(fit.params, np_table, full);
    out.mu = report.stats.mu;
    out.sigma = report.stats.sigma;
  } catch (const NonConvergenceError& e) {
    out.flagged = true;
    out.flag_reason = std::string("fit did not converge: ") + e.what();
  }
  return out;
}

void aggregate(StabilityRow& row) {
  std::vector<double> mus, sigmas;
  for (const auto& t : row.trials) {
    if (t.flagged) {
      ++row.trials_flagged;
      continue;
    }
    mus.push_back(t.mu);
    sigmas.push_back(t.sigma);
  }
  row.trials_used = mus.size();
  if (mus.empty()) {
    row.mean_mu = row.std_mu = row.mean_sigma = row.std_sigma = std::numeric_limits<double>::quiet_NaN();
    return;
  }
  row.mean_mu = std::accumulate(mus.begin(), mus.end(), 0.0) / static_cast<double>(mus.size());
  row.mean_sigma = std::accumulate(sigmas.begin(), sigmas.end(), 0.0) / static_cast<double>(sigmas.size());
  row.std_mu = sample_std(mus, row.mean_mu);
  row.std_sigma = sample_std(sigmas, row.mean_sigma);
}

template <typename Sampler>
StabilityReport run_experiment(ExperimentKind kind, const MeasurementSet& set, const UnprunedErrorTable& np_table,
                               std::span<const std::size_t> t_values, std::size_t trials, const FitOptions& opts,
                               std::size_t population, Sampler&& draw) {
  opts.validate();
  if (trials < 2) throw InvalidParameterError("stability experiment needs at least 2 trials");
  if (set.empty()) throw InsufficientDataError("stability experiment: measurement set is empty");
  np_table.require_coverage(set);
  for (auto t : t_values) {
    if (t < 1 || t > population) {
      throw InvalidParameterError("T = " + std::to_string(t) + " outside [1, " + std::to_string(population) + "]");
    }
  }
  StabilityReport report;
  report.kind = kind;
  report.trials = trials;
  report.rng_seed = opts.rng_seed;
  report.t_values.assign(t_values.begin(), t_values.end());
  for (auto t : t_values) {
    StabilityRow row;
    row.t = t;
    row.trials.resize(trials);
    detail::parallel_for(trials, [&](std::size_t trial) {
      auto rng = trial_rng(opts.rng_seed, t, trial);
      const MeasurementSet sample = draw(t, rng);
      row.trials[trial] = run_trial(set, np_table, sample, opts);
    });
    aggregate(row);
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  return kind == ExperimentKind::RandomPoints ? "random_points" : "random_configs";
}

StabilityReport experiment_random_points(const MeasurementSet& set, const UnprunedErrorTable& np_table,
                                         std::span<const std::size_t> t_values, std::size_t trials,
                                         const FitOptions& opts) {
  const MeasurementSet canon = set.canonical();
  return run_experiment(ExperimentKind::RandomPoints, canon, np_table, t_values, trials, opts, canon.size(),
                        [&](std::size_t t, std::mt19937_64& rng) {
                          return canon.subset(sample_without_replacement(canon.size(), t, rng),
                                              canon.provenance() + " [random points T=" + std::to_string(t) + "]");
                        });
}

StabilityReport experiment_random_configs(const MeasurementSet& set, const UnprunedErrorTable& np_table,
                                          std::span<const std::size_t> t_values, std::size_t trials,
                                          const FitOptions& opts) {
  const MeasurementSet canon = set.canonical();
  const auto keys = canon.config_keys();
  return run_experiment(ExperimentKind::RandomConfigs, canon, np_table, t_values, trials, opts, keys.size(),
                        [&](std::size_t t, std::mt19937_64& rng) {
                          const auto chosen = sample_without_replacement(keys.size(), t, rng);
                          std::vector<std::size_t> idx;
                          for (std::size_t i = 0; i < canon.size(); ++i) {
                            const auto key = canon[i].key();
                            for (auto c : chosen) {
                              if (keys[c] == key) {
                                idx.push_back(i);
                                break;
                              }
                            }
                          }
                          return canon.subset(idx, canon.provenance() + " [random configs T=" + std::to_string(t) + "]");
                        });
}

ExtrapolationReport extrapolation_eval(const MeasurementSet& set, const UnprunedErrorTable& np_table,
                                       const ConfigPredicate& train, std::string description, const FitOptions& opts) {
  const MeasurementSet canon = set.canonical();
  std::vector<std::size_t> in, out;
  for (std::size_t i = 0; i < canon.size(); ++i) (train(canon[i].key()) ? in : out).push_back(i);
  if (in.empty()) throw InsufficientDataError("extrapolation_eval: training predicate selects no points");
  if (out.empty()) throw InsufficientDataError("extrapolation_eval: training predicate selects every point");

  const MeasurementSet train_set = canon.subset(in, canon.provenance() + " [train: " + description + "]");
  const MeasurementSet test_set = canon.subset(out, canon.provenance() + " [held out]");
  const JointFit fit = fit_joint(train_set, np_table, opts);

  ExtrapolationReport report;
  report.train_filter = std::move(description);
  report.params = fit.params;
  report.in_fit = evaluate_params(fit.params, np_table, train_set).stats;
  report.out_of_fit = evaluate_params(fit.params, np_table, test_set).stats;
  return report;
}

}  // namespace prunelaw
