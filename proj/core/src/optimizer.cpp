// Copyright 2026 The prunelaw Authors
// SPDX-License-Identifier: Apache-2.0

#include "prunelaw/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <utility>

#include "parallel.hpp"
#include "prunelaw/errors.hpp"

namespace prunelaw {

ConfigCatalog::ConfigCatalog(std::vector<CatalogEntry> entries) : entries_(std::move(entries)) {
  if (entries_.empty()) throw InvalidParameterError("config catalog is empty");
  std::set<std::pair<int, double>> seen;
  for (const auto& e : entries_) {
    if (e.depth < 1) throw InvalidParameterError("catalog: depth must be >= 1");
    if (!(e.width_scale > 0.0) || !std::isfinite(e.width_scale)) {
      throw InvalidParameterError("catalog: width_scale must be > 0");
    }
    if (!(e.eps_np > 0.0 && e.eps_np < 1.0)) throw InvalidParameterError("catalog: eps_np must lie in (0, 1)");
    if (!seen.emplace(e.depth, e.width_scale).second) {
      throw InvalidParameterError("catalog: duplicate entry depth=" + std::to_string(e.depth) +
                                  " width_scale=" + format_double(e.width_scale));
    }
  }
}

ConfigCatalog ConfigCatalog::from_table(const UnprunedErrorTable& table, const std::string& family,
                                        std::int64_t subsample_size) {
  std::vector<CatalogEntry> out;
  for (const auto& [key, eps] : table.entries()) {
    if (key.family == family && key.subsample_size == subsample_size) {
      out.push_back({key.depth, key.width_scale, eps});
    }
  }
  return ConfigCatalog(std::move(out));
}

std::string to_string(Binding binding) {
  switch (binding) {
    case Binding::Interior:
      return "interior";
    case Binding::AtDEquals1:
      return "at_d_equals_1";
    case Binding::Infeasible:
      break;
  }
  return "infeasible";
}

namespace {

void check_level(double eps_k) {
  if (!(eps_k > 0.0 && eps_k < 1.0)) throw InvalidParameterError("eps_k must lie in (0, 1)");
}

double relative_params(int depth, double width_scale, double density) {
  return density * static_cast<double>(depth) * width_scale * width_scale;
}

OptResult infeasible(double eps_k) {
  OptResult r;
  r.eps_k = eps_k;
  return r;
}

/// Strict total order on feasible outcomes: fewer parameters, then smaller
/// depth, then smaller width.
bool better(const OptResult& a, const OptResult& b) {
  if (!b.feasible()) return a.feasible();
  if (!a.feasible()) return false;
  if (a.param_count != b.param_count) return a.param_count < b.param_count;
  if (a.depth != b.depth) return a.depth < b.depth;
  return a.width_scale < b.width_scale;
}

OptResult best_of(std::vector<OptResult> candidates, double eps_k) {
  OptResult best = infeasible(eps_k);
  for (auto& c : candidates) {
    if (better(c, best)) best = std::move(c);
  }
  return best;
}

/// Best outcome for one catalog entry. The caller guarantees eps_k < eps_high.
OptResult solve_entry(const JointLawParams& params, const CatalogEntry& e, double eps_k) {
  OptResult r = infeasible(eps_k);
  if (e.eps_np > eps_k) return r;
  r.depth = e.depth;
  r.width_scale = e.width_scale;
  double density = 1.0;
  if (e.eps_np < eps_k) {
    const Invariant m = invert_joint_invariant(params, e.eps_np, eps_k);
    density = std::min(1.0, m.m_star / invariant_scale(params.phi, params.psi, e.depth, e.width_scale));
  }
  r.density = density;
  r.param_count = relative_params(e.depth, e.width_scale, density);
  if (density >= 1.0) {
    r.binding = Binding::AtDEquals1;
    r.predicted_error = e.eps_np;
  } else {
    r.binding = Binding::Interior;
    r.predicted_error =
        eval_joint_at(params, e.eps_np, Invariant{invariant_scale(params.phi, params.psi, e.depth, e.width_scale) * density});
  }
  return r;
}

OptResult solve(const JointFit& fit, const ConfigCatalog& catalog, double eps_k) {
  check_level(eps_k);
  if (catalog.size() == 0) throw InvalidParameterError("config catalog is empty");
  if (eps_k >= fit.params.eps_high) return infeasible(eps_k);
  const auto& entries = catalog.entries();
  std::vector<OptResult> per_entry(entries.size());
  detail::parallel_for(entries.size(),
                       [&](std::size_t i) { per_entry[i] = solve_entry(fit.params, entries[i], eps_k); });
  return best_of(std::move(per_entry), eps_k);
}

}  // namespace

OptResult min_params_at_error(const JointFit& fit, const ConfigCatalog& catalog, double eps_k) {
  check_level(eps_k);
  if (eps_k >= fit.params.eps_high) {
    throw InfeasibleError("eps_k = " + format_double(eps_k) + " is at or above the high-error plateau " +
                          format_double(fit.params.eps_high) + "; any density qualifies and the minimum is unbounded");
  }
  OptResult r = solve(fit, catalog, eps_k);
  if (!r.feasible()) {
    throw InfeasibleError("no catalog entry reaches eps_k = " + format_double(eps_k) +
                          " (every unpruned error is higher)");
  }
  return r;
}

std::vector<OptResult> pareto_frontier(const JointFit& fit, const ConfigCatalog& catalog,
                                       std::span<const double> eps_grid) {
  if (!std::is_sorted(eps_grid.begin(), eps_grid.end())) {
    throw InvalidParameterError("pareto_frontier: eps_grid must be sorted ascending");
  }
  std::vector<OptResult> out;
  out.reserve(eps_grid.size());
  for (double eps_k : eps_grid) out.push_back(solve(fit, catalog, eps_k));
  return out;
}

OptResult brute_force_oracle(const JointFit& fit, const ConfigCatalog& catalog, double eps_k,
                             std::span<const double> density_grid) {
  check_level(eps_k);
  OptResult best = infeasible(eps_k);
  for (const auto& e : catalog.entries()) {
    for (double d : density_grid) {
      if (!(d > 0.0 && d <= 1.0)) throw InvalidParameterError("density grid values must lie in (0, 1]");
      OptResult c;
      c.eps_k = eps_k;
      c.depth = e.depth;
      c.width_scale = e.width_scale;
      c.density = d;
      c.param_count = relative_params(e.depth, e.width_scale, d);
      if (d == 1.0) {
        c.predicted_error = e.eps_np;
        c.binding = Binding::AtDEquals1;
      } else {
        NetworkConfig cfg{e.depth, e.width_scale, 1, d};
        c.predicted_error = e.eps_np <= fit.params.eps_high ? eval_joint(fit.params, e.eps_np, cfg) : 1.0;
        c.binding = Binding::Interior;
      }
      if (c.predicted_error > eps_k) continue;
      if (better(c, best)) best = c;
    }
  }
  return best;
}

}  // namespace prunelaw
