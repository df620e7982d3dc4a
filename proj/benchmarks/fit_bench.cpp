// Copyright 2026 The prunelaw Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "prunelaw/fitter.hpp"
#include "prunelaw/synth.hpp"

namespace prunelaw {
namespace {

void BM_FitJointReference(benchmark::State& state) {
  SynthSpec spec = reference_spec();
  spec.noise_rel_std = 0.034;
  spec.rng_seed = 1;
  const auto surface = generate_surface(spec);
  FitOptions o;
  o.restarts = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(fit_joint(surface.measurements, surface.eps_np, o));
  state.counters["points"] = static_cast<double>(surface.measurements.size());
}
BENCHMARK(BM_FitJointReference)->Arg(1)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_GenerateSurface(benchmark::State& state) {
  SynthSpec spec = reference_spec();
  spec.noise_rel_std = 0.034;
  for (auto _ : state) benchmark::DoNotOptimize(generate_surface(spec));
}
BENCHMARK(BM_GenerateSurface)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace prunelaw
