// Copyright 2026 The prunelaw Authors
// SPDX-License-Identifier: Apache-2.0
//
// Which family member should be trained and how far should it be pruned to
// reach an error budget with the fewest parameters.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "prunelaw/dataset.hpp"
#include "prunelaw/fitter.hpp"

namespace prunelaw {

struct CatalogEntry {
  int depth = 1;
  double width_scale = 1.0;
  double eps_np = 0.1;
};

/// Candidate unpruned networks with their measured (or modeled) error.
class ConfigCatalog {
 public:
  ConfigCatalog() = default;
  /// Throws InvalidParameterError on an empty list, an out-of-range entry or
  /// a repeated (depth, width_scale).
  explicit ConfigCatalog(std::vector<CatalogEntry> entries);

  [[nodiscard]] const std::vector<CatalogEntry>& entries() const noexcept { return entries_; }
  [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }

  /// Entries of `table` with the given family and subsample size.
  [[nodiscard]] static ConfigCatalog from_table(const UnprunedErrorTable& table, const std::string& family,
                                                std::int64_t subsample_size);

 private:
  std::vector<CatalogEntry> entries_;
};

enum class Binding { Interior, AtDEquals1, Infeasible };

[[nodiscard]] std::string to_string(Binding binding);

struct OptResult {
  double eps_k = 0.0;
  int depth = 0;
  double width_scale = 0.0;
  double density = 0.0;
  double param_count = 0.0;      // d * l * w^2
  double predicted_error = 0.0;  // eps_np at d = 1, otherwise the joint law
  Binding binding = Binding::Infeasible;

  [[nodiscard]] bool feasible() const noexcept { return binding != Binding::Infeasible; }
};

/// Smallest d * l * w^2 over the catalog subject to predicted error <= eps_k.
/// An unpruned network (d = 1) is credited with its measured eps_np. Ties go
/// to the smaller depth, then the smaller width. Throws InfeasibleError when
/// no entry reaches eps_k, or when eps_k >= eps_high leaves the problem
/// unbounded.
[[nodiscard]] OptResult min_params_at_error(const JointFit& fit, const ConfigCatalog& catalog, double eps_k);

/// One result per level (levels must be ascending); unreachable levels come
/// back with Binding::Infeasible instead of throwing.
[[nodiscard]] std::vector<OptResult> pareto_frontier(const JointFit& fit, const ConfigCatalog& catalog,
                                                     std::span<const double> eps_grid);

/// Exhaustive search over catalog x density_grid with the same error
/// convention as min_params_at_error. Intended for testing.
[[nodiscard]] OptResult brute_force_oracle(const JointFit& fit, const ConfigCatalog& catalog, double eps_k,
                                           std::span<const double> density_grid);

}  // namespace prunelaw
