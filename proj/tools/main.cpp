// Copyright 2026 The prunelaw Authors
// SPDX-License-Identifier: Apache-2.0
//
// prunelaw: file-in/file-out front end for fitting, evaluating and using the
// pruned-error law. Every run writes manifest.json next to its outputs.

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "prunelaw/baselines.hpp"
#include "prunelaw/dataset.hpp"
#include "prunelaw/errors.hpp"
#include "prunelaw/fitter.hpp"
#include "prunelaw/imp.hpp"
#include "prunelaw/law.hpp"
#include "prunelaw/optimizer.hpp"
#include "prunelaw/report_io.hpp"
#include "prunelaw/stability.hpp"
#include "prunelaw/synth.hpp"

#ifndef PRUNELAW_VERSION
#define PRUNELAW_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace prunelaw;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitNumeric = 2;
constexpr int kExitInfeasible = 3;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Input:
      return kExitInput;
    case ErrorKind::Numeric:
      return kExitNumeric;
    case ErrorKind::Infeasible:
      return kExitInfeasible;
  }
  return kExitInput;
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << int{digest[i]};
  return out.str();
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* what) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    T v{};
    std::istringstream is(item);
    if (!(is >> v) || !is.eof()) throw InvalidParameterError(std::string(what) + ": cannot parse '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw InvalidParameterError(std::string(what) + ": empty list");
  return out;
}

/// Shared state of one invocation: global flags, the files read and written.
struct Run {
  std::string command;
  fs::path out_dir = "out";
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string format = "json";
  std::vector<std::pair<std::string, std::string>> inputs;  // path, digest
  std::vector<std::string> outputs;
  CLI::App* sub = nullptr;
  CLI::App* root = nullptr;

  std::string read(const std::string& path) {
    std::string text = read_text_file(path);
    inputs.emplace_back(path, sha256_hex(text));
    return text;
  }

  void write(const std::string& name, std::string_view text) {
    fs::create_directories(out_dir);
    write_text_file(out_dir / name, text);
    outputs.push_back(name);
  }

  /// JSON artifacts carry a pointer back to the manifest of the run.
  void write_json(const std::string& name, const std::string& text) {
    json j = json::parse(text);
    j["manifest"] = "manifest.json";
    write(name, j.dump(2) + "\n");
  }

  void require_seed() const {
    if (!seed_given) throw InvalidParameterError(command + " is randomized and requires --seed");
  }

  void write_manifest(int status) {
    json options = json::object();
    for (CLI::App* app : {root, sub}) {
      if (app == nullptr) continue;
      for (const CLI::Option* opt : app->get_options()) {
        if (opt->get_name() == "--help" || opt->get_name() == "-h" || opt->count() == 0) continue;
        const auto& res = opt->results();
        std::string name = opt->get_name();
        if (name.rfind("--", 0) == 0) name = name.substr(2);
        if (opt->get_type_size() == 0) {
          options[name] = true;
        } else if (res.size() == 1) {
          options[name] = res.front();
        } else {
          options[name] = res;
        }
      }
    }
    json in = json::array();
    for (const auto& [path, digest] : inputs) in.push_back({{"path", path}, {"sha256", digest}});
    json m{{"command", command},
           {"tool", "prunelaw"},
           {"version", PRUNELAW_VERSION},
           {"rng_seed", seed_given ? json(seed) : json(nullptr)},
           {"options", options},
           {"inputs", in},
           {"outputs", outputs},
           {"exit_code", status},
           {"timestamp", utc_timestamp()}};
    fs::create_directories(out_dir);
    write_text_file(out_dir / "manifest.json", m.dump(2) + "\n");
  }
};

// ---------------------------------------------------------------- options

struct FitFlags {
  bool no_phi = false;
  bool no_psi = false;
  int restarts = 8;
  int max_iterations = 500;
  double tolerance = 1e-12;
  std::string optimizer = "lm";
};

void add_fit_flags(CLI::App* app, FitFlags& f) {
  app->add_flag("--no-phi", f.no_phi, "Pin the depth exponent phi to 0");
  app->add_flag("--no-psi", f.no_psi, "Pin the width exponent psi to 0");
  app->add_option("--restarts", f.restarts, "Multi-start restarts")->check(CLI::PositiveNumber);
  app->add_option("--max-iterations", f.max_iterations, "Iteration cap per restart")->check(CLI::PositiveNumber);
  app->add_option("--tolerance", f.tolerance, "Relative convergence tolerance")->check(CLI::PositiveNumber);
  app->add_option("--optimizer", f.optimizer, "Local solver")->check(CLI::IsMember({"lm", "nelder-mead"}));
}

FitOptions to_options(const FitFlags& f, std::uint64_t seed) {
  FitOptions o;
  o.fit_phi = !f.no_phi;
  o.fit_psi = !f.no_psi;
  o.restarts = f.restarts;
  o.max_iterations = f.max_iterations;
  o.tolerance = f.tolerance;
  o.rng_seed = seed;
  if (f.optimizer == "nelder-mead") {
    o.minimizer = std::make_shared<NelderMead>();
  } else {
    o.minimizer = std::make_shared<LevenbergMarquardt>();
  }
  return o;
}

/// Measurements plus the unpruned-error table, prepared the same way for every
/// command that consumes them.
struct DataFlags {
  std::string measurements;
  std::string np_table;
  std::string replicates = "mean";
  std::optional<double> chance_error;
  bool monotone_np = false;
};

void add_data_flags(CLI::App* app, DataFlags& d) {
  app->add_option("--measurements", d.measurements, "Measurements CSV")->required()->check(CLI::ExistingFile);
  app->add_option("--np-table", d.np_table, "Unpruned-error table JSON (default: density-1 rows of the measurements)")
      ->check(CLI::ExistingFile);
  app->add_option("--replicates", d.replicates, "Use replicate means or raw replicate rows")
      ->check(CLI::IsMember({"mean", "raw"}));
  app->add_option("--chance-error", d.chance_error, "Drop points at or above this error");
  app->add_flag("--monotone-np", d.monotone_np, "Drop configurations that are worse than a smaller member");
}

struct Loaded {
  MeasurementSet set;
  UnprunedErrorTable table;
};

// Without --chance-error only errors of exactly 1 are dropped.
MeasurementSet apply_filters(MeasurementSet set, const DataFlags& d) {
  if (!d.chance_error && !d.monotone_np) return set;
  return filter_feasible(set, d.chance_error.value_or(std::nextafter(1.0, 0.0)), d.monotone_np);
}

Loaded load_data(Run& run, const DataFlags& d) {
  MeasurementSet raw = parse_measurements(run.read(d.measurements), d.measurements);
  UnprunedErrorTable table =
      d.np_table.empty() ? UnprunedErrorTable::from_measurements(raw) : np_table_from_json(run.read(d.np_table));
  MeasurementSet set = d.replicates == "mean" ? aggregate_replicates(raw) : raw;
  set = apply_filters(std::move(set), d);
  return {std::move(set), std::move(table)};
}

JointFit load_fit(Run& run, const std::string& path) { return fit_from_json(run.read(path)); }

/// Explicit catalog CSV, or the fit's own table restricted to one family and n.
struct CatalogFlags {
  std::string catalog;
  std::string family;
  std::int64_t subsample_size = 0;
};

void add_catalog_flags(CLI::App* app, CatalogFlags& c) {
  app->add_option("--catalog", c.catalog, "Catalog CSV (depth,width_scale,eps_np)")->check(CLI::ExistingFile);
  app->add_option("--family", c.family, "Family to take from the fit's table when no catalog is given");
  app->add_option("--subsample-size", c.subsample_size, "Subsample size to take from the fit's table");
}

ConfigCatalog load_catalog(Run& run, const CatalogFlags& c, const JointFit& fit) {
  if (!c.catalog.empty()) return parse_catalog_csv(run.read(c.catalog));
  if (c.family.empty() || c.subsample_size <= 0) {
    throw InvalidParameterError("give --catalog, or --family and --subsample-size to use the fit's table");
  }
  return ConfigCatalog::from_table(fit.eps_np_table, c.family, c.subsample_size);
}

// --------------------------------------------------------------- commands

void cmd_fit(Run& run, const DataFlags& d, const FitFlags& f) {
  run.require_seed();
  const Loaded data = load_data(run, d);
  const FitOptions opts = to_options(f, run.seed);
  try {
    const JointFit fit = fit_joint(data.set, data.table, opts);
    run.write_json("fit.json", fit_to_json(fit));
    run.write("deviations.csv", deviations_csv(evaluate_fit(fit, data.set)));
  } catch (const NonConvergenceError& e) {
    // Best-so-far parameters are still worth inspecting.
    const auto& b = e.best_so_far();
    JointFit partial;
    if (b.size() == 5) {
      partial.params = {std::min(b[0], 1.0), b[1], b[2], b[3], b[4]};
      partial.eps_high_capped = b[0] > 1.0;
    }
    partial.fit_phi = opts.fit_phi;
    partial.fit_psi = opts.fit_psi;
    partial.eps_np_table = data.table;
    partial.provenance = data.set.provenance();
    partial.optimizer = opts.minimizer->name();
    partial.restarts = opts.restarts;
    try {
      const FitReport report = evaluate_params(partial.params, data.table, data.set);
      partial.stats = report.stats;
      run.write("deviations.csv", deviations_csv(report));
    } catch (const Error&) {
    }
    json j = json::parse(fit_to_json(partial));
    j["converged"] = false;
    j["error"] = e.what();
    run.write_json("fit.json", j.dump());
    throw;
  }
}

void cmd_eval(Run& run, const std::string& fit_path, const DataFlags& d) {
  JointFit fit = load_fit(run, fit_path);
  MeasurementSet raw = parse_measurements(run.read(d.measurements), d.measurements);
  UnprunedErrorTable table = !d.np_table.empty()      ? np_table_from_json(run.read(d.np_table))
                             : !fit.eps_np_table.empty() ? fit.eps_np_table
                                                         : UnprunedErrorTable::from_measurements(raw);
  MeasurementSet set = d.replicates == "mean" ? aggregate_replicates(raw) : raw;
  set = apply_filters(std::move(set), d);
  const FitReport report = evaluate_params(fit.params, table, set);
  if (run.format == "csv") {
    run.write("deviations.csv", deviations_csv(report));
  } else {
    run.write_json("eval.json", fit_report_to_json(report, set.provenance()));
  }
}

struct InvertFlags {
  std::string fit;
  double target = 0.0;
  double eps_np = 0.0;
  int depth = 1;
  double width = 1.0;
};

void cmd_invert(Run& run, const InvertFlags& f) {
  const JointFit fit = load_fit(run, f.fit);
  const Invariant m = invert_joint_invariant(fit.params, f.eps_np, f.target);
  const double scale = invariant_scale(fit.params.phi, fit.params.psi, f.depth, f.width);
  const double density = m.m_star / scale;
  if (density > 1.0) {
    throw OutOfRangeError(f.eps_np, fit.params.eps_high,
                          "target " + format_double(f.target) + " needs density " + format_double(density) +
                              " > 1 for depth " + std::to_string(f.depth) + ", width " + format_double(f.width));
  }
  if (run.format == "csv") {
    std::ostringstream out;
    out << "depth,width_scale,eps_np,target,m_star,density\n"
        << f.depth << ',' << format_double(f.width) << ',' << format_double(f.eps_np) << ','
        << format_double(f.target) << ',' << format_double(m.m_star) << ',' << format_double(density) << '\n';
    run.write("invert.csv", out.str());
  } else {
    json j{{"depth", f.depth},     {"width_scale", f.width}, {"eps_np", f.eps_np},
           {"target", f.target},   {"m_star", m.m_star},     {"density", density},
           {"param_count", density * f.depth * f.width * f.width}};
    run.write_json("invert.json", j.dump());
  }
}

void cmd_optimize(Run& run, const std::string& fit_path, const CatalogFlags& c, double eps_k) {
  const JointFit fit = load_fit(run, fit_path);
  const ConfigCatalog catalog = load_catalog(run, c, fit);
  const OptResult r = min_params_at_error(fit, catalog, eps_k);
  if (run.format == "csv") {
    run.write("optimize.csv", frontier_csv(std::span<const OptResult>(&r, 1)));
  } else {
    run.write_json("optimize.json", opt_result_to_json(r));
  }
}

struct FrontierFlags {
  std::string eps_grid;
  double eps_min = 0.0;
  double eps_max = 0.0;
  int levels = 50;
};

void cmd_frontier(Run& run, const std::string& fit_path, const CatalogFlags& c, const FrontierFlags& f) {
  const JointFit fit = load_fit(run, fit_path);
  const ConfigCatalog catalog = load_catalog(run, c, fit);
  std::vector<double> grid;
  if (!f.eps_grid.empty()) {
    grid = parse_list<double>(f.eps_grid, "--eps-grid");
  } else {
    if (!(f.eps_min > 0.0 && f.eps_max > f.eps_min && f.eps_max < 1.0) || f.levels < 2) {
      throw InvalidParameterError("give --eps-grid, or 0 < --eps-min < --eps-max < 1 with --levels >= 2");
    }
    for (int i = 0; i < f.levels; ++i) {
      grid.push_back(f.eps_min * std::pow(f.eps_max / f.eps_min, static_cast<double>(i) / (f.levels - 1)));
    }
  }
  const auto frontier = pareto_frontier(fit, catalog, grid);
  if (run.format == "csv") {
    run.write("frontier.csv", frontier_csv(frontier));
  } else {
    run.write_json("frontier.json", frontier_to_json(frontier));
  }
}

struct StabilityFlags {
  std::string experiment = "points";
  std::string t_values = "10,20,40,80";
  std::size_t trials = 30;
};

void cmd_stability(Run& run, const DataFlags& d, const FitFlags& ff, const StabilityFlags& s) {
  run.require_seed();
  const Loaded data = load_data(run, d);
  const auto ts = parse_list<std::size_t>(s.t_values, "--t");
  const FitOptions opts = to_options(ff, run.seed);
  const StabilityReport report = s.experiment == "points"
                                     ? experiment_random_points(data.set, data.table, ts, s.trials, opts)
                                     : experiment_random_configs(data.set, data.table, ts, s.trials, opts);
  if (run.format == "csv") {
    run.write("stability.csv", stability_csv(report));
  } else {
    run.write_json("stability.json", stability_to_json(report));
  }
}

struct ExtrapolateFlags {
  std::optional<int> max_depth;
  std::optional<double> max_width;
  double smallest_fraction = 0.25;
};

void cmd_extrapolate(Run& run, const DataFlags& d, const FitFlags& ff, const ExtrapolateFlags& x) {
  run.require_seed();
  const Loaded data = load_data(run, d);
  ConfigPredicate train;
  std::string description;
  if (x.max_depth || x.max_width) {
    const int l = x.max_depth.value_or(std::numeric_limits<int>::max());
    const double w = x.max_width.value_or(std::numeric_limits<double>::infinity());
    train = [l, w](const ConfigKey& k) { return k.depth <= l && k.width_scale <= w; };
    description = "depth <= " + (x.max_depth ? std::to_string(l) : std::string("any")) +
                  ", width_scale <= " + (x.max_width ? format_double(w) : std::string("any"));
  } else {
    // Smallest (l, w) pairs by l * w^2.
    std::vector<std::pair<int, double>> lw;
    for (const auto& k : data.set.config_keys()) lw.emplace_back(k.depth, k.width_scale);
    std::sort(lw.begin(), lw.end());
    lw.erase(std::unique(lw.begin(), lw.end()), lw.end());
    std::stable_sort(lw.begin(), lw.end(), [](const auto& a, const auto& b) {
      return a.first * a.second * a.second < b.first * b.second * b.second;
    });
    const auto keep = static_cast<std::size_t>(std::ceil(x.smallest_fraction * static_cast<double>(lw.size())));
    lw.resize(std::min(keep, lw.size()));
    train = [lw](const ConfigKey& k) {
      return std::find(lw.begin(), lw.end(), std::pair<int, double>{k.depth, k.width_scale}) != lw.end();
    };
    description = "smallest " + format_double(x.smallest_fraction) + " of (depth, width) pairs by l*w^2";
  }
  const ExtrapolationReport report =
      extrapolation_eval(data.set, data.table, train, description, to_options(ff, run.seed));
  if (run.format == "csv") {
    std::ostringstream out;
    out << "split,mu,sigma,n_points\n"
        << "in_fit," << format_double(report.in_fit.mu) << ',' << format_double(report.in_fit.sigma) << ','
        << report.in_fit.n_points << '\n'
        << "out_of_fit," << format_double(report.out_of_fit.mu) << ',' << format_double(report.out_of_fit.sigma)
        << ',' << report.out_of_fit.n_points << '\n';
    run.write("extrapolation.csv", out.str());
  } else {
    run.write_json("extrapolation.json", extrapolation_to_json(report));
  }
}

struct SynthFlags {
  std::string depths;
  std::string widths;
  std::string subsample_sizes;
  std::optional<double> eps_high, gamma, p_prime, phi, psi;
  double noise = 0.0;
  std::optional<double> dip_depth;
  double dip_width = 1.0;
  int replicates = 1;
};

void cmd_synth(Run& run, const SynthFlags& f) {
  run.require_seed();
  SynthSpec spec = reference_spec();
  if (!f.depths.empty()) spec.depths = parse_list<int>(f.depths, "--depths");
  if (!f.widths.empty()) spec.widths = parse_list<double>(f.widths, "--widths");
  if (!f.subsample_sizes.empty()) spec.subsample_sizes = parse_list<std::int64_t>(f.subsample_sizes, "--subsample-sizes");
  if (f.eps_high) spec.truth.eps_high = *f.eps_high;
  if (f.gamma) spec.truth.gamma = *f.gamma;
  if (f.p_prime) spec.truth.p_prime = *f.p_prime;
  if (f.phi) spec.truth.phi = *f.phi;
  if (f.psi) spec.truth.psi = *f.psi;
  spec.eps_np = model_eps_np_table(spec.family, spec.depths, spec.widths, spec.subsample_sizes);
  spec.noise_rel_std = f.noise;
  if (f.dip_depth) spec.dip = DipSpec{*f.dip_depth, f.dip_width};
  spec.replicates = f.replicates;
  spec.rng_seed = run.seed;
  const SynthSurface s = generate_surface(spec);
  run.write("measurements.csv", serialize_measurements(s.measurements));
  run.write_json("np_table.json", np_table_to_json(s.eps_np));
}

struct ImpFlags {
  int depth = 3;
  double width = 1.0;
  std::int64_t subsample_size = 0;
  int iterations = 25;
  double prune_fraction = 0.2;
  int epochs = 40;
  int rewind = 3;
  double lr = 0.1;
  double momentum = 0.9;
  int batch = 64;
  std::size_t n_total = 4000;
  int input_dim = 64;
  int classes = 4;
  double separation = 5.0;
  int clusters = 3;
  std::uint64_t data_seed = 7;
  int seeds = 1;
};

void cmd_imp(Run& run, const ImpFlags& f) {
  run.require_seed();
  ToyTaskOptions task;
  task.separation = f.separation;
  task.clusters_per_class = f.clusters;
  const ToyDataset data = make_toy_dataset(f.n_total, f.input_dim, f.classes, f.data_seed, task);
  const ToyFamilySpec family{f.depth, f.width, f.input_dim, f.classes, 16};
  const ImpConfig imp{f.prune_fraction, f.iterations, f.subsample_size};
  if (f.seeds < 1) throw InvalidParameterError("--seeds must be >= 1");

  std::vector<ImpRunResult> runs(static_cast<std::size_t>(f.seeds));
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(runs.size());
  for (std::size_t i = 0; i < runs.size(); ++i) {
    pool.emplace_back([&, i] {
      try {
        TrainConfig tc{f.epochs, f.rewind, f.lr, f.momentum, f.batch, run.seed + i};
        runs[i] = imp_run(data, family, tc, imp);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::vector<MeasurementPoint> points;
  json log = json::array();
  std::string failure;
  for (const auto& r : runs) {
    for (auto& p : to_measurements(r)) points.push_back(std::move(p));
    log.push_back(json::parse(imp_run_log_json(r)));
    if (r.failed && failure.empty()) failure = r.failure;
  }
  run.write("measurements.csv", serialize_measurements(MeasurementSet(std::move(points), "imp")));
  run.write_json("run_log.json", json{{"runs", log}}.dump());
  if (!failure.empty()) throw DivergenceError("IMP chain stopped early: " + failure);
}

struct CompareFlags {
  std::string family;
  int depth = 0;
  double width = 0.0;
  std::int64_t subsample_size = 0;
};

void cmd_compare(Run& run, const DataFlags& d, const FitFlags& ff, const CompareFlags& c) {
  run.require_seed();
  const Loaded data = load_data(run, d);
  const auto keys = data.set.config_keys();
  std::optional<ConfigKey> key;
  for (const auto& k : keys) {
    if ((c.family.empty() || k.family == c.family) && (c.depth == 0 || k.depth == c.depth) &&
        (c.width == 0.0 || k.width_scale == c.width) && (c.subsample_size == 0 || k.subsample_size == c.subsample_size)) {
      if (key) throw InvalidParameterError("configuration selection is ambiguous; add --family/--depth/--width/--subsample-size");
      key = k;
    }
  }
  if (!key) throw InvalidParameterError("no configuration matches the selection");
  const auto curve = curve_of(aggregate_replicates(data.set), *key);
  const ComparisonReport report = compare_transition_fits(curve, data.table.at(*key), to_options(ff, run.seed));
  if (run.format == "csv") {
    run.write("overlay.csv", overlay_csv(report));
  } else {
    run.write_json("compare.json", comparison_to_json(report));
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"prunelaw: fit and apply the pruned-error scaling law", "prunelaw"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", PRUNELAW_VERSION);

  Run run;
  run.root = &app;
  auto* seed_opt = app.add_option("--seed", run.seed, "Master RNG seed (required by randomized commands)");
  app.add_option("--out", run.out_dir, "Output directory")->capture_default_str();
  app.add_option("--format", run.format, "Tabular output format")->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();

  DataFlags data_flags;
  FitFlags fit_flags;

  auto* fit = app.add_subcommand("fit", "Joint fit of the law to a measurement set");
  add_data_flags(fit, data_flags);
  add_fit_flags(fit, fit_flags);

  std::string fit_path;
  auto* eval = app.add_subcommand("eval", "Deviations of a saved fit on a measurement set");
  eval->add_option("--fit", fit_path, "Fit JSON")->required()->check(CLI::ExistingFile);
  add_data_flags(eval, data_flags);

  InvertFlags invert_flags;
  auto* invert = app.add_subcommand("invert", "Density at which a network reaches a target error");
  invert->add_option("--fit", invert_flags.fit, "Fit JSON")->required()->check(CLI::ExistingFile);
  invert->add_option("--target", invert_flags.target, "Target error")->required();
  invert->add_option("--eps-np", invert_flags.eps_np, "Unpruned error of the network")->required();
  invert->add_option("--depth", invert_flags.depth, "Depth l")->required();
  invert->add_option("--width", invert_flags.width, "Width scale w")->required();

  CatalogFlags catalog_flags;
  double eps_k = 0.0;
  auto* optimize = app.add_subcommand("optimize", "Fewest parameters reaching an error budget");
  optimize->add_option("--fit", fit_path, "Fit JSON")->required()->check(CLI::ExistingFile);
  optimize->add_option("--eps-k", eps_k, "Error budget")->required();
  add_catalog_flags(optimize, catalog_flags);

  FrontierFlags frontier_flags;
  auto* frontier = app.add_subcommand("frontier", "Minimal parameter count across error budgets");
  frontier->add_option("--fit", fit_path, "Fit JSON")->required()->check(CLI::ExistingFile);
  frontier->add_option("--eps-grid", frontier_flags.eps_grid, "Comma-separated ascending budgets");
  frontier->add_option("--eps-min", frontier_flags.eps_min, "Smallest budget of a geometric grid");
  frontier->add_option("--eps-max", frontier_flags.eps_max, "Largest budget of a geometric grid");
  frontier->add_option("--levels", frontier_flags.levels, "Number of geometric grid levels");
  add_catalog_flags(frontier, catalog_flags);

  StabilityFlags stability_flags;
  auto* stability = app.add_subcommand("stability", "Fit stability under random subsets");
  add_data_flags(stability, data_flags);
  add_fit_flags(stability, fit_flags);
  stability->add_option("--experiment", stability_flags.experiment, "Sample points or whole configurations")
      ->check(CLI::IsMember({"points", "configs"}));
  stability->add_option("--t", stability_flags.t_values, "Comma-separated sample sizes T");
  stability->add_option("--trials", stability_flags.trials, "Trials per T");

  ExtrapolateFlags extrapolate_flags;
  auto* extrapolate = app.add_subcommand("extrapolate", "Fit on small networks, score on the rest");
  add_data_flags(extrapolate, data_flags);
  add_fit_flags(extrapolate, fit_flags);
  extrapolate->add_option("--train-max-depth", extrapolate_flags.max_depth, "Train on depth <= this");
  extrapolate->add_option("--train-max-width", extrapolate_flags.max_width, "Train on width_scale <= this");
  extrapolate->add_option("--train-smallest-fraction", extrapolate_flags.smallest_fraction,
                          "Without max flags: train on this share of (l, w) pairs with the fewest parameters")
      ->check(CLI::Range(0.0, 1.0));

  SynthFlags synth_flags;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic measurement surface");
  synth->add_option("--depths", synth_flags.depths, "Comma-separated depths");
  synth->add_option("--widths", synth_flags.widths, "Comma-separated width scales");
  synth->add_option("--subsample-sizes", synth_flags.subsample_sizes, "Comma-separated subsample sizes");
  synth->add_option("--eps-high", synth_flags.eps_high, "True eps_high");
  synth->add_option("--gamma", synth_flags.gamma, "True gamma");
  synth->add_option("--p-prime", synth_flags.p_prime, "True p'");
  synth->add_option("--phi", synth_flags.phi, "True phi");
  synth->add_option("--psi", synth_flags.psi, "True psi");
  synth->add_option("--noise", synth_flags.noise, "Relative std of multiplicative lognormal noise");
  synth->add_option("--dip-depth", synth_flags.dip_depth, "Enable a high-density dip of this relative depth");
  synth->add_option("--dip-width", synth_flags.dip_width, "Dip span in decades of density");
  synth->add_option("--replicates", synth_flags.replicates, "Noise replicates per point");

  ImpFlags imp_flags;
  auto* imp = app.add_subcommand("imp", "Iterative magnitude pruning on a toy MLP");
  imp->add_option("--depth", imp_flags.depth, "Weight layers (>= 2)");
  imp->add_option("--width", imp_flags.width, "Width scale over 16 hidden units");
  imp->add_option("--subsample-size", imp_flags.subsample_size, "Training examples (0: all)");
  imp->add_option("--iterations", imp_flags.iterations, "Pruning iterations K");
  imp->add_option("--prune-fraction", imp_flags.prune_fraction, "Fraction pruned per iteration");
  imp->add_option("--epochs", imp_flags.epochs, "Training epochs T_e");
  imp->add_option("--rewind", imp_flags.rewind, "Rewind epoch k");
  imp->add_option("--lr", imp_flags.lr, "Learning rate");
  imp->add_option("--momentum", imp_flags.momentum, "SGD momentum");
  imp->add_option("--batch", imp_flags.batch, "Batch size");
  imp->add_option("--n-total", imp_flags.n_total, "Examples in the toy task (train + test)");
  imp->add_option("--input-dim", imp_flags.input_dim, "Input dimension");
  imp->add_option("--classes", imp_flags.classes, "Number of classes");
  imp->add_option("--separation", imp_flags.separation, "Cluster-center separation in noise std units");
  imp->add_option("--clusters", imp_flags.clusters, "Gaussian clusters per class");
  imp->add_option("--data-seed", imp_flags.data_seed, "Seed of the toy task");
  imp->add_option("--seeds", imp_flags.seeds, "Independent chains, seeded --seed, --seed+1, ...");

  CompareFlags compare_flags;
  auto* compare = app.add_subcommand("compare", "Our law against the density-adapted baseline on one curve");
  add_data_flags(compare, data_flags);
  add_fit_flags(compare, fit_flags);
  compare->add_option("--family", compare_flags.family, "Family of the configuration");
  compare->add_option("--depth", compare_flags.depth, "Depth of the configuration");
  compare->add_option("--width", compare_flags.width, "Width scale of the configuration");
  compare->add_option("--subsample-size", compare_flags.subsample_size, "Subsample size of the configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitInput;
  }
  run.seed_given = seed_opt->count() > 0;
  run.sub = app.get_subcommands().front();
  run.command = run.sub->get_name();

  int status = kExitOk;
  try {
    if (run.sub == fit) cmd_fit(run, data_flags, fit_flags);
    else if (run.sub == eval) cmd_eval(run, fit_path, data_flags);
    else if (run.sub == invert) cmd_invert(run, invert_flags);
    else if (run.sub == optimize) cmd_optimize(run, fit_path, catalog_flags, eps_k);
    else if (run.sub == frontier) cmd_frontier(run, fit_path, catalog_flags, frontier_flags);
    else if (run.sub == stability) cmd_stability(run, data_flags, fit_flags, stability_flags);
    else if (run.sub == extrapolate) cmd_extrapolate(run, data_flags, fit_flags, extrapolate_flags);
    else if (run.sub == synth) cmd_synth(run, synth_flags);
    else if (run.sub == imp) cmd_imp(run, imp_flags);
    else if (run.sub == compare) cmd_compare(run, data_flags, fit_flags, compare_flags);
  } catch (const CoverageError& e) {
    std::cerr << "prunelaw " << run.command << ": " << e.what() << '\n';
    for (const auto& k : e.missing()) std::cerr << "  missing: " << k << '\n';
    status = kExitInput;
  } catch (const Error& e) {
    std::cerr << "prunelaw " << run.command << ": " << e.what() << '\n';
    status = exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "prunelaw " << run.command << ": " << e.what() << '\n';
    status = kExitInput;
  }
  try {
    run.write_manifest(status);
  } catch (const std::exception& e) {
    std::cerr << "prunelaw: could not write manifest: " << e.what() << '\n';
    if (status == kExitOk) status = kExitInput;
  }
  return status;
}
