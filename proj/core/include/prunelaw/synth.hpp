// Copyright 2026 The prunelaw Authors
// SPDX-License-Identifier: Apache-2.0
//
// Ground-truth error surfaces generated from known law constants, with
// optional multiplicative noise and a shallow dip below the unpruned error at
// high density.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "prunelaw/dataset.hpp"
#include "prunelaw/law.hpp"

namespace prunelaw {

struct DipSpec {
  double depth_rel = 0.03;      // peak fractional reduction of the error
  double width_decades = 1.0;   // span below d = 1, in decades of density
};

struct SynthSpec {
  std::string family = "synth";
  JointLawParams truth;
  /// Must cover every (family, l, w, n) of the grid.
  UnprunedErrorTable eps_np;
  std::vector<int> depths;
  std::vector<double> widths;
  std::vector<std::int64_t> subsample_sizes;
  std::vector<double> densities = default_densities();
  double noise_rel_std = 0.0;
  std::optional<DipSpec> dip;
  int replicates = 1;
  std::uint64_t rng_seed = 0;

  /// 0.8^i for i = 0..40.
  [[nodiscard]] static std::vector<double> default_densities();

  void validate() const;
};

struct SynthSurface {
  MeasurementSet measurements;
  UnprunedErrorTable eps_np;
};

/// Noise-free law value for one grid point, dip included when configured.
[[nodiscard]] double clean_error(const SynthSpec& spec, double eps_np, const NetworkConfig& cfg);

/// One point per (l, w, n, d, replicate). Point i of replicate r is scaled by
/// exp(z * noise_rel_std), z drawn from a stream seeded by (rng_seed, i, r),
/// so the output does not depend on evaluation order. Replicates are stamped
/// with seeds 0..replicates-1.
[[nodiscard]] SynthSurface generate_surface(const SynthSpec& spec);

/// A smooth unpruned-error model, eps_np = 0.02 + 0.6 n^-0.3 + 0.08 (l w^2)^-0.5
/// clipped to (0, 0.5], for populating synthetic tables. Larger and more
/// data-rich networks come out more accurate.
[[nodiscard]] double model_eps_np(int depth, double width_scale, std::int64_t subsample_size);

/// Table for the full grid of `spec` from model_eps_np.
[[nodiscard]] UnprunedErrorTable model_eps_np_table(const std::string& family, const std::vector<int>& depths,
                                                    const std::vector<double>& widths,
                                                    const std::vector<std::int64_t>& subsample_sizes);

/// The reference 6 x 5 x 3 x 41 surface used across tests and demos.
[[nodiscard]] SynthSpec reference_spec();

}  // namespace prunelaw
