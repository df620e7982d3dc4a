// Copyright 2026 The prunelaw Authors
// SPDX-License-Identifier: Apache-2.0

#include "prunelaw/report_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "prunelaw/errors.hpp"

namespace prunelaw {

namespace {

using json = nlohmann::ordered_json;

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json parse_json(std::string_view text, std::string_view what) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const auto upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n'));
    throw ParseError(line, std::string(what) + ": " + e.what());
  }
}

template <typename T>
T require(const json& j, const char* key, std::string_view what) {
  if (!j.is_object() || !j.contains(key)) {
    throw ValidationError(0, key, std::string(what) + ": missing field");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(0, key, std::string(what) + ": wrong type");
  }
}

json stats_json(const FitStats& s) { return json{{"mu", s.mu}, {"sigma", s.sigma}, {"n_points", s.n_points}}; }

json table_json(const UnprunedErrorTable& table) {
  json arr = json::array();
  for (const auto& [k, v] : table.entries()) {
    arr.push_back({{"family", k.family},
                   {"depth", k.depth},
                   {"width_scale", k.width_scale},
                   {"subsample_size", k.subsample_size},
                   {"eps_np", v}});
  }
  return arr;
}

UnprunedErrorTable table_from(const json& arr, std::string_view what) {
  if (!arr.is_array()) throw ValidationError(0, "entries", std::string(what) + ": expected an array");
  UnprunedErrorTable t;
  for (const auto& e : arr) {
    ConfigKey k{require<std::string>(e, "family", what), require<int>(e, "depth", what),
                require<double>(e, "width_scale", what), require<std::int64_t>(e, "subsample_size", what)};
    const double eps = require<double>(e, "eps_np", what);
    if (!(eps > 0.0 && eps < 1.0)) throw ValidationError(0, "eps_np", std::string(what) + ": must lie in (0, 1)");
    if (t.contains(k)) throw ValidationError(0, "entries", std::string(what) + ": duplicate key " + k.to_string());
    t.set(k, eps);
  }
  return t;
}

json opt_json(const OptResult& r) {
  json j{{"eps_k", r.eps_k}, {"binding", to_string(r.binding)}};
  if (r.feasible()) {
    j["depth"] = r.depth;
    j["width_scale"] = r.width_scale;
    j["density"] = r.density;
    j["param_count"] = r.param_count;
    j["predicted_error"] = r.predicted_error;
  }
  return j;
}

}  // namespace

std::string fit_to_json(const JointFit& fit) {
  json j;
  j["eps_high"] = fit.params.eps_high;
  j["gamma"] = fit.params.gamma;
  j["p_prime"] = fit.params.p_prime;
  j["phi"] = fit.params.phi;
  j["psi"] = fit.params.psi;
  j["fit"] = stats_json(fit.stats);
  j["provenance"] = fit.provenance;
  j["objective"] = fit.objective;
  j["eps_high_capped"] = fit.eps_high_capped;
  j["fit_phi"] = fit.fit_phi;
  j["fit_psi"] = fit.fit_psi;
  j["optimizer"] = {{"name", fit.optimizer},
                    {"restarts", fit.restarts},
                    {"restarts_converged", fit.restarts_converged},
                    {"best_restart", fit.best_restart},
                    {"max_iterations", fit.max_iterations},
                    {"tolerance", fit.tolerance},
                    {"rng_seed", fit.rng_seed}};
  j["sigma_kind"] = "population";
  j["eps_np_table"] = table_json(fit.eps_np_table);
  return dump(j);
}

JointFit fit_from_json(std::string_view text) {
  constexpr std::string_view what = "fit JSON";
  const json j = parse_json(text, what);
  JointFit fit;
  fit.params = {require<double>(j, "eps_high", what), require<double>(j, "gamma", what),
                require<double>(j, "p_prime", what), require<double>(j, "phi", what), require<double>(j, "psi", what)};
  try {
    fit.params.validate();
  } catch (const Error& e) {
    throw ValidationError(0, "params", std::string(what) + ": " + e.what());
  }
  if (j.contains("fit")) {
    const auto& f = j["fit"];
    fit.stats = {require<double>(f, "mu", what), require<double>(f, "sigma", what),
                 require<std::size_t>(f, "n_points", what)};
  }
  fit.provenance = j.value("provenance", std::string{});
  fit.objective = j.value("objective", 0.0);
  fit.eps_high_capped = j.value("eps_high_capped", false);
  fit.fit_phi = j.value("fit_phi", true);
  fit.fit_psi = j.value("fit_psi", true);
  if (j.contains("optimizer") && j["optimizer"].is_object()) {
    const auto& o = j["optimizer"];
    fit.optimizer = o.value("name", std::string{});
    fit.restarts = o.value("restarts", 0);
    fit.restarts_converged = o.value("restarts_converged", 0);
    fit.best_restart = o.value("best_restart", 0);
    fit.max_iterations = o.value("max_iterations", 0);
    fit.tolerance = o.value("tolerance", 0.0);
    fit.rng_seed = o.value("rng_seed", std::uint64_t{0});
  }
  if (j.contains("eps_np_table")) fit.eps_np_table = table_from(j["eps_np_table"], what);
  return fit;
}

std::string np_table_to_json(const UnprunedErrorTable& table) { return dump(json{{"entries", table_json(table)}}); }

UnprunedErrorTable np_table_from_json(std::string_view text) {
  constexpr std::string_view what = "eps_np table JSON";
  const json j = parse_json(text, what);
  if (!j.is_object() || !j.contains("entries")) throw ValidationError(0, "entries", std::string(what) + ": missing field");
  return table_from(j["entries"], what);
}

std::string deviations_csv(const FitReport& report) {
  std::ostringstream out;
  out << kDeviationsHeader << '\n';
  for (const auto& d : report.deviations) {
    out << d.point.family << ',' << d.point.cfg.depth << ',' << format_double(d.point.cfg.width_scale) << ','
        << d.point.cfg.subsample_size << ',' << format_double(d.point.cfg.density) << ','
        << format_double(d.point.test_error) << ',' << format_double(d.predicted) << ',' << format_double(d.delta)
        << '\n';
  }
  return out.str();
}

std::string fit_report_to_json(const FitReport& report, std::string_view provenance) {
  json j;
  j["params"] = {{"eps_high", report.params.eps_high},
                 {"gamma", report.params.gamma},
                 {"p_prime", report.params.p_prime},
                 {"phi", report.params.phi},
                 {"psi", report.params.psi}};
  j["fit"] = stats_json(report.stats);
  j["provenance"] = provenance;
  json rows = json::array();
  for (const auto& b : report.breakdowns) {
    rows.push_back({{"dimension", b.dimension}, {"group", b.group}, {"stats", stats_json(b.stats)}});
  }
  j["breakdowns"] = rows;
  return dump(j);
}

std::string stability_to_json(const StabilityReport& report) {
  json j;
  j["experiment_kind"] = to_string(report.kind);
  j["trials"] = report.trials;
  j["rng_seed"] = report.rng_seed;
  j["t_values"] = report.t_values;
  json rows = json::array();
  for (const auto& r : report.rows) {
    json trials = json::array();
    for (const auto& t : r.trials) {
      json tj{{"flagged", t.flagged}};
      if (t.flagged) {
        tj["reason"] = t.flag_reason;
      } else {
        tj["mu"] = t.mu;
        tj["sigma"] = t.sigma;
      }
      trials.push_back(tj);
    }
    rows.push_back({{"T", r.t},
                    {"mean_mu", r.mean_mu},
                    {"std_mu", r.std_mu},
                    {"mean_sigma", r.mean_sigma},
                    {"std_sigma", r.std_sigma},
                    {"trials_used", r.trials_used},
                    {"trials_flagged", r.trials_flagged},
                    {"per_trial", trials}});
  }
  j["rows"] = rows;
  return dump(j);
}

std::string stability_csv(const StabilityReport& report) {
  std::ostringstream out;
  out << kStabilityHeader << '\n';
  for (const auto& r : report.rows) {
    out << r.t << ',' << format_double(r.mean_mu) << ',' << format_double(r.std_mu) << ','
        << format_double(r.mean_sigma) << ',' << format_double(r.std_sigma) << '\n';
  }
  return out.str();
}

std::string extrapolation_to_json(const ExtrapolationReport& report) {
  json j;
  j["train_filter"] = report.train_filter;
  j["params"] = {{"eps_high", report.params.eps_high},
                 {"gamma", report.params.gamma},
                 {"p_prime", report.params.p_prime},
                 {"phi", report.params.phi},
                 {"psi", report.params.psi}};
  j["in_fit"] = stats_json(report.in_fit);
  j["out_of_fit"] = stats_json(report.out_of_fit);
  return dump(j);
}

std::string opt_result_to_json(const OptResult& result) { return dump(opt_json(result)); }

std::string frontier_csv(std::span<const OptResult> frontier) {
  std::ostringstream out;
  out << kFrontierHeader << '\n';
  for (const auto& r : frontier) {
    out << format_double(r.eps_k) << ',';
    if (r.feasible()) {
      out << r.depth << ',' << format_double(r.width_scale) << ',' << format_double(r.density) << ','
          << format_double(r.param_count);
    } else {
      out << ",,,";
    }
    out << ',' << to_string(r.binding) << '\n';
  }
  return out.str();
}

std::string frontier_to_json(std::span<const OptResult> frontier) {
  json arr = json::array();
  for (const auto& r : frontier) arr.push_back(opt_json(r));
  return dump(json{{"frontier", arr}});
}

std::string catalog_csv(const ConfigCatalog& catalog) {
  std::ostringstream out;
  out << kCatalogHeader << '\n';
  for (const auto& e : catalog.entries()) {
    out << e.depth << ',' << format_double(e.width_scale) << ',' << format_double(e.eps_np) << '\n';
  }
  return out.str();
}

ConfigCatalog parse_catalog_csv(std::string_view text) {
  if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
  std::vector<CatalogEntry> entries;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line_no == 1) {
      if (line != kCatalogHeader) throw ParseError(1, "catalog header must be exactly '" + std::string(kCatalogHeader) + "'");
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string_view> f;
    for (std::size_t pos = 0;;) {
      const auto c = line.find(',', pos);
      f.push_back(line.substr(pos, c == std::string_view::npos ? std::string_view::npos : c - pos));
      if (c == std::string_view::npos) break;
      pos = c + 1;
    }
    if (f.size() != 3) throw ParseError(line_no, "expected 3 fields, got " + std::to_string(f.size()));
    CatalogEntry e;
    const auto num = [&](std::string_view s, auto& out, const char* name) {
      const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
      if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) {
        throw ParseError(line_no, std::string("field '") + name + "' is not a number: '" + std::string(s) + "'");
      }
    };
    num(f[0], e.depth, "depth");
    num(f[1], e.width_scale, "width_scale");
    num(f[2], e.eps_np, "eps_np");
    entries.push_back(e);
  }
  if (line_no == 0) throw ParseError(1, "catalog is empty; header required");
  return ConfigCatalog(std::move(entries));
}

std::string comparison_to_json(const ComparisonReport& report) {
  json j;
  j["optimizer"] = report.optimizer;
  j["ours"] = {{"eps_np", report.ours.eps_np},
               {"eps_high", report.ours.eps_high},
               {"gamma", report.ours.gamma},
               {"p", report.ours.p},
               {"fit", stats_json(report.ours_stats)},
               {"deltas", report.ours_deltas}};
  j["baseline"] = {{"eps_np", report.baseline.eps_np},
                   {"b_x", report.baseline.b_x},
                   {"beta_x", report.baseline.beta_x},
                   {"fit", stats_json(report.baseline_stats)},
                   {"deltas", report.baseline_deltas}};
  return dump(j);
}

std::string overlay_csv(const ComparisonReport& report) {
  std::ostringstream out;
  out << kOverlayHeader << '\n';
  for (const auto& r : report.overlay) {
    out << format_double(r.density) << ',' << format_double(r.actual) << ',' << format_double(r.ours) << ','
        << format_double(r.baseline) << '\n';
  }
  return out.str();
}

std::string imp_run_log_json(const ImpRunResult& run) {
  json j;
  j["family"] = {{"name", kToyFamily},
                 {"depth", run.family.depth},
                 {"width_scale", run.family.width_scale},
                 {"hidden_width", run.family.hidden_width()},
                 {"input_dim", run.family.input_dim},
                 {"n_classes", run.family.n_classes}};
  j["train"] = {{"total_epochs", run.train.total_epochs},
                {"rewind_epoch", run.train.rewind_epoch},
                {"learning_rate", run.train.learning_rate},
                {"momentum", run.train.momentum},
                {"batch_size", run.train.batch_size},
                {"rng_seed", run.train.rng_seed}};
  j["imp"] = {{"prune_fraction", run.imp.prune_fraction},
              {"iterations", run.imp.iterations},
              {"subsample_size", run.imp.subsample_size}};
  json recs = json::array();
  for (const auto& r : run.records) {
    recs.push_back({{"iteration", r.iteration},
                    {"density", r.density},
                    {"surviving_weights", r.surviving_weights},
                    {"train_loss", r.train_loss},
                    {"test_error", r.test_error}});
  }
  j["records"] = recs;
  j["failed"] = run.failed;
  if (run.failed) j["failure"] = run.failure;
  return dump(j);
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidParameterError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidParameterError("cannot open '" + path.string() + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw InvalidParameterError("failed writing '" + path.string() + "'");
}

}  // namespace prunelaw
