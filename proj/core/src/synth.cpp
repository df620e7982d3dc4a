// Copyright 2026 The prunelaw Authors
// SPDX-License-Identifier: Apache-2.0

#include "prunelaw/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "parallel.hpp"
#include "prunelaw/errors.hpp"

namespace prunelaw {

std::vector<double> SynthSpec::default_densities() {
  std::vector<double> d;
  for (int i = 0; i <= 40; ++i) d.push_back(std::pow(0.8, i));
  return d;
}

void SynthSpec::validate() const {
  truth.validate();
  if (family.empty()) throw InvalidParameterError("synth: family must be non-empty");
  if (depths.empty() || widths.empty() || subsample_sizes.empty() || densities.empty()) {
    throw InvalidParameterError("synth: every grid axis needs at least one value");
  }
  for (int l : depths) {
    if (l < 1) throw InvalidParameterError("synth: depths must be >= 1");
  }
  for (double w : widths) {
    if (!(w > 0.0)) throw InvalidParameterError("synth: widths must be > 0");
  }
  for (auto n : subsample_sizes) {
    if (n < 1) throw InvalidParameterError("synth: subsample sizes must be >= 1");
  }
  if (std::set<double>(densities.begin(), densities.end()).size() != densities.size()) {
    throw InvalidParameterError("synth: densities must be distinct");
  }
  for (double d : densities) {
    if (!(d > 0.0 && d <= 1.0)) throw InvalidParameterError("synth: densities must lie in (0, 1]");
  }
  if (!(noise_rel_std >= 0.0) || !std::isfinite(noise_rel_std)) {
    throw InvalidParameterError("synth: noise_rel_std must be >= 0");
  }
  if (dip) {
    if (!(dip->depth_rel > 0.0 && dip->depth_rel < 1.0)) throw InvalidParameterError("synth: dip depth must lie in (0, 1)");
    if (!(dip->width_decades > 0.0)) throw InvalidParameterError("synth: dip width must be > 0");
  }
  if (replicates < 1) throw InvalidParameterError("synth: replicates must be >= 1");
  for (int l : depths) {
    for (double w : widths) {
      for (auto n : subsample_sizes) {
        const ConfigKey key{family, l, w, n};
        const double e = eps_np.at(key);
        if (!(e > 0.0 && e < truth.eps_high)) {
          throw InvalidParameterError("synth: eps_np for " + key.to_string() + " must lie in (0, eps_high)");
        }
      }
    }
  }
}

double clean_error(const SynthSpec& spec, double eps_np, const NetworkConfig& cfg) {
  double e = eval_joint(spec.truth, eps_np, cfg);
  if (spec.dip && e <= 1.05 * eps_np) {
    // sin^2 hump over -log10(d) in [0, width]; zero at d = 1 and at the far edge.
    const double u = -std::log10(cfg.density) / spec.dip->width_decades;
    if (u > 0.0 && u < 1.0) {
      const double s = std::sin(std::numbers::pi * u);
      e *= 1.0 - spec.dip->depth_rel * s * s;
    }
  }
  return e;
}

SynthSurface generate_surface(const SynthSpec& spec) {
  spec.validate();
  struct Slot {
    ConfigKey key;
    double density;
    int replicate;
  };
  std::vector<Slot> slots;
  for (int l : spec.depths) {
    for (double w : spec.widths) {
      for (auto n : spec.subsample_sizes) {
        for (double d : spec.densities) {
          for (int r = 0; r < spec.replicates; ++r) slots.push_back({{spec.family, l, w, n}, d, r});
        }
      }
    }
  }

  std::vector<MeasurementPoint> points(slots.size());
  detail::parallel_for(slots.size(), [&](std::size_t i) {
    const Slot& s = slots[i];
    const NetworkConfig cfg{s.key.depth, s.key.width_scale, s.key.subsample_size, s.density};
    const double eps_np = spec.eps_np.at(s.key);
    double e = clean_error(spec, eps_np, cfg);
    if (spec.noise_rel_std > 0.0) {
      std::seed_seq seq{static_cast<std::uint32_t>(spec.rng_seed), static_cast<std::uint32_t>(spec.rng_seed >> 32),
                        static_cast<std::uint32_t>(i / static_cast<std::size_t>(spec.replicates)),
                        static_cast<std::uint32_t>(s.replicate)};
      std::mt19937_64 rng(seq);
      std::normal_distribution<double> z(0.0, 1.0);
      e *= std::exp(spec.noise_rel_std * z(rng));
    }
    if (!(e > 0.0 && e < 1.0)) {
      throw DomainError("synth: generated error " + format_double(e) + " for " + s.key.to_string() +
                        " left (0, 1); lower eps_high or the noise level");
    }
    points[i] = MeasurementPoint{spec.family, cfg, e, s.replicate};
  });

  SynthSurface out;
  out.measurements = MeasurementSet(std::move(points), "synth(seed=" + std::to_string(spec.rng_seed) +
                                                            ", noise=" + format_double(spec.noise_rel_std) +
                                                            (spec.dip ? ", dip" : "") + ")");
  for (int l : spec.depths) {
    for (double w : spec.widths) {
      for (auto n : spec.subsample_sizes) {
        const ConfigKey key{spec.family, l, w, n};
        out.eps_np.set(key, spec.eps_np.at(key));
      }
    }
  }
  return out;
}

double model_eps_np(int depth, double width_scale, std::int64_t subsample_size) {
  const double m = static_cast<double>(depth) * width_scale * width_scale;
  const double e = 0.02 + 0.6 * std::pow(static_cast<double>(subsample_size), -0.3) + 0.08 * std::pow(m, -0.5);
  return std::min(e, 0.5);
}

UnprunedErrorTable model_eps_np_table(const std::string& family, const std::vector<int>& depths,
                                      const std::vector<double>& widths,
                                      const std::vector<std::int64_t>& subsample_sizes) {
  UnprunedErrorTable table;
  for (int l : depths) {
    for (double w : widths) {
      for (auto n : subsample_sizes) table.set({family, l, w, n}, model_eps_np(l, w, n));
    }
  }
  return table;
}

SynthSpec reference_spec() {
  SynthSpec spec;
  spec.truth = JointLawParams{0.85, 1.8, 0.02, 1.0, 0.8};
  spec.depths = {2, 3, 4, 6, 8, 12};
  spec.widths = {0.25, 0.5, 1.0, 2.0, 4.0};
  spec.subsample_sizes = {5000, 20000, 50000};
  spec.eps_np = model_eps_np_table(spec.family, spec.depths, spec.widths, spec.subsample_sizes);
  return spec;
}

}  // namespace prunelaw
