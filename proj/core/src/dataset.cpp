// Copyright 2026 The prunelaw Authors
// SPDX-License-Identifier: Apache-2.0

#include "prunelaw/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <tuple>

#include "prunelaw/errors.hpp"

namespace prunelaw {

namespace {

auto full_key(const MeasurementPoint& p) {
  return std::tie(p.family, p.cfg.depth, p.cfg.width_scale, p.cfg.subsample_size, p.cfg.density, p.seed);
}

auto cfg_key(const MeasurementPoint& p) {
  return std::tie(p.family, p.cfg.depth, p.cfg.width_scale, p.cfg.subsample_size, p.cfg.density);
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_number(std::string_view text, std::size_t line, const char* field) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (!text.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || text.empty()) {
    throw ParseError(line, std::string("cannot parse field '") + field + "' from '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string ConfigKey::to_string() const {
  return "(" + family + ", l=" + std::to_string(depth) + ", w=" + format_double(width_scale) +
         ", n=" + std::to_string(subsample_size) + ")";
}

bool canonical_less(const MeasurementPoint& a, const MeasurementPoint& b) {
  const auto ka = std::tuple_cat(full_key(a), std::tie(a.test_error));
  const auto kb = std::tuple_cat(full_key(b), std::tie(b.test_error));
  return ka < kb;
}

MeasurementSet::MeasurementSet(std::vector<MeasurementPoint> points, std::string provenance,
                               std::vector<std::size_t> source_lines)
    : points_(std::move(points)), lines_(std::move(source_lines)), provenance_(std::move(provenance)) {
  if (!lines_.empty() && lines_.size() != points_.size()) {
    throw InvalidParameterError("MeasurementSet: source line count does not match point count");
  }
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const auto& p = points_[i];
    const std::size_t line = source_line(i);
    try {
      p.cfg.validate();
    } catch (const InvalidParameterError& e) {
      std::string msg = e.what();
      throw ValidationError(line, msg.substr(0, msg.find(' ')), msg);
    }
    if (!(p.test_error > 0.0 && p.test_error < 1.0)) {
      throw ValidationError(line, "test_error", "must lie in (0, 1), got " + format_double(p.test_error));
    }
    if (p.family.empty()) throw ValidationError(line, "family", "must be non-empty");
  }
  std::vector<std::size_t> order(points_.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return full_key(points_[a]) < full_key(points_[b]); });
  for (std::size_t k = 1; k < order.size(); ++k) {
    if (full_key(points_[order[k - 1]]) == full_key(points_[order[k]])) {
      const auto first = std::min(order[k - 1], order[k]);
      const auto second = std::max(order[k - 1], order[k]);
      throw ValidationError(source_line(second), "seed",
                            "duplicate (family, config, seed) key; first seen at line " +
                                std::to_string(source_line(first)));
    }
  }
}

std::size_t MeasurementSet::source_line(std::size_t i) const noexcept {
  return lines_.empty() ? 0 : lines_[i];
}

MeasurementSet MeasurementSet::canonical() const {
  std::vector<std::size_t> order(points_.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return canonical_less(points_[a], points_[b]); });
  return subset(order, provenance_);
}

std::vector<ConfigKey> MeasurementSet::config_keys() const {
  std::vector<ConfigKey> keys;
  keys.reserve(points_.size());
  for (const auto& p : points_) keys.push_back(p.key());
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  return keys;
}

MeasurementSet MeasurementSet::subset(const std::vector<std::size_t>& indices, std::string provenance) const {
  MeasurementSet out;
  out.provenance_ = std::move(provenance);
  out.points_.reserve(indices.size());
  for (auto i : indices) out.points_.push_back(points_.at(i));
  if (!lines_.empty()) {
    out.lines_.reserve(indices.size());
    for (auto i : indices) out.lines_.push_back(lines_[i]);
  }
  return out;
}

void UnprunedErrorTable::set(const ConfigKey& key, double eps_np) {
  if (!(eps_np > 0.0 && eps_np < 1.0)) {
    throw InvalidParameterError("unpruned error for " + key.to_string() + " must lie in (0, 1), got " +
                                format_double(eps_np));
  }
  entries_[key] = eps_np;
}

std::optional<double> UnprunedErrorTable::find(const ConfigKey& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

double UnprunedErrorTable::at(const ConfigKey& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) {
    throw CoverageError({key.to_string()}, "unpruned-error table has no entry for " + key.to_string());
  }
  return it->second;
}

std::vector<ConfigKey> UnprunedErrorTable::missing_keys(const MeasurementSet& set) const {
  std::vector<ConfigKey> missing;
  for (const auto& key : set.config_keys()) {
    if (!entries_.contains(key)) missing.push_back(key);
  }
  return missing;
}

void UnprunedErrorTable::require_coverage(const MeasurementSet& set) const {
  const auto missing = missing_keys(set);
  if (missing.empty()) return;
  std::vector<std::string> names;
  std::string msg = "unpruned-error table is missing " + std::to_string(missing.size()) + " key(s):";
  for (const auto& k : missing) {
    names.push_back(k.to_string());
    msg += " " + names.back();
  }
  throw CoverageError(std::move(names), msg);
}

UnprunedErrorTable UnprunedErrorTable::from_measurements(const MeasurementSet& set) {
  std::map<ConfigKey, std::pair<double, int>> sums;
  for (const auto& p : set.canonical()) {
    if (p.cfg.density != 1.0) continue;
    auto& [sum, count] = sums[p.key()];
    sum += p.test_error;
    ++count;
  }
  UnprunedErrorTable table;
  for (const auto& [key, acc] : sums) table.set(key, acc.first / acc.second);
  return table;
}

MeasurementSet parse_measurements(std::string_view text, std::string provenance) {
  std::vector<MeasurementPoint> points;
  std::vector<std::size_t> lines;
  std::size_t line_no = 0;
  bool saw_header = false;
  std::size_t pos = 0;
  // Skip a UTF-8 byte-order mark.
  if (text.substr(0, 3) == "\xEF\xBB\xBF") pos = 3;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view raw = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
    if (trim(raw).empty()) {
      if (pos > text.size()) break;
      continue;
    }
    if (!saw_header) {
      if (raw != kMeasurementsHeader) {
        throw ParseError(line_no, "expected header '" + std::string(kMeasurementsHeader) + "', got '" +
                                      std::string(raw) + "'");
      }
      saw_header = true;
      continue;
    }
    const auto fields = split_fields(raw);
    if (fields.size() != 7) {
      throw ParseError(line_no, "expected 7 fields, got " + std::to_string(fields.size()));
    }
    MeasurementPoint p;
    p.family = std::string(trim(fields[0]));
    if (p.family.find('"') != std::string::npos) throw ParseError(line_no, "quoted family names are not supported");
    p.cfg.depth = parse_number<int>(trim(fields[1]), line_no, "depth");
    p.cfg.width_scale = parse_number<double>(trim(fields[2]), line_no, "width_scale");
    p.cfg.subsample_size = parse_number<std::int64_t>(trim(fields[3]), line_no, "subsample_size");
    p.cfg.density = parse_number<double>(trim(fields[4]), line_no, "density");
    p.test_error = parse_number<double>(trim(fields[5]), line_no, "test_error");
    p.seed = parse_number<std::int64_t>(trim(fields[6]), line_no, "seed");

    if (p.family.empty()) throw ValidationError(line_no, "family", "must be non-empty");
    if (p.cfg.depth < 1) throw ValidationError(line_no, "depth", "must be >= 1");
    if (!(p.cfg.width_scale > 0.0) || !std::isfinite(p.cfg.width_scale)) {
      throw ValidationError(line_no, "width_scale", "must be > 0");
    }
    if (p.cfg.subsample_size < 1) throw ValidationError(line_no, "subsample_size", "must be >= 1");
    if (!(p.cfg.density > 0.0 && p.cfg.density <= 1.0)) {
      throw ValidationError(line_no, "density", "must lie in (0, 1], got " + std::string(trim(fields[4])));
    }
    if (!(p.test_error > 0.0 && p.test_error < 1.0)) {
      throw ValidationError(line_no, "test_error", "must lie in (0, 1), got " + std::string(trim(fields[5])));
    }
    points.push_back(std::move(p));
    lines.push_back(line_no);
    if (pos > text.size()) break;
  }
  if (!saw_header) throw ParseError(line_no == 0 ? 1 : line_no, "missing header");
  return MeasurementSet(std::move(points), std::move(provenance), std::move(lines));
}

MeasurementSet read_measurements(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open measurements file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_measurements(buf.str(), path.filename().string());
}

std::string serialize_measurements(const MeasurementSet& set) {
  std::string out(kMeasurementsHeader);
  out += '\n';
  for (const auto& p : set.canonical()) {
    out += p.family;
    out += ',';
    out += std::to_string(p.cfg.depth);
    out += ',';
    out += format_double(p.cfg.width_scale);
    out += ',';
    out += std::to_string(p.cfg.subsample_size);
    out += ',';
    out += format_double(p.cfg.density);
    out += ',';
    out += format_double(p.test_error);
    out += ',';
    out += std::to_string(p.seed);
    out += '\n';
  }
  return out;
}

void write_measurements(const std::filesystem::path& path, const MeasurementSet& set) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << serialize_measurements(set);
}

MeasurementSet aggregate_replicates(const MeasurementSet& set) {
  const MeasurementSet sorted = set.canonical();
  std::vector<MeasurementPoint> out;
  const auto& pts = sorted.points();
  for (std::size_t i = 0; i < pts.size();) {
    std::size_t j = i;
    double sum = 0.0;
    while (j < pts.size() && cfg_key(pts[j]) == cfg_key(pts[i])) sum += pts[j++].test_error;
    MeasurementPoint agg = pts[i];
    agg.test_error = (j - i == 1) ? pts[i].test_error : sum / static_cast<double>(j - i);
    agg.seed = kAggregateSeed;
    out.push_back(std::move(agg));
    i = j;
  }
  return MeasurementSet(std::move(out), set.provenance() + " [replicate means]");
}

ReplicateSpread replicate_spread(const MeasurementSet& set) {
  const MeasurementSet sorted = set.canonical();
  const auto& pts = sorted.points();
  ReplicateSpread result;
  double sum_sq = 0.0;
  std::size_t dof = 0;
  for (std::size_t i = 0; i < pts.size();) {
    std::size_t j = i;
    while (j < pts.size() && cfg_key(pts[j]) == cfg_key(pts[i])) ++j;
    ConfigSpread cs{pts[i].family, pts[i].cfg, j - i, pts[i].test_error, 0.0, pts[i].test_error};
    double sum = 0.0;
    for (std::size_t k = i; k < j; ++k) {
      cs.min = std::min(cs.min, pts[k].test_error);
      cs.max = std::max(cs.max, pts[k].test_error);
      sum += pts[k].test_error;
    }
    cs.mean = sum / static_cast<double>(j - i);
    if (j - i >= 2) {
      for (std::size_t k = i; k < j; ++k) {
        const double rel = (pts[k].test_error - cs.mean) / cs.mean;
        sum_sq += rel * rel;
      }
      dof += j - i - 1;
      ++result.groups_with_replicates;
    }
    result.per_config.push_back(std::move(cs));
    i = j;
  }
  if (result.groups_with_replicates == 0) {
    throw InsufficientDataError("replicate_spread: no configuration has two or more seeds");
  }
  result.pooled_relative_std = std::sqrt(sum_sq / static_cast<double>(dof));
  return result;
}

MeasurementSet filter_feasible(const MeasurementSet& set, double chance_error, bool monotone_np_filter) {
  if (!(chance_error > 0.0 && chance_error < 1.0)) {
    throw InvalidParameterError("chance_error must lie in (0, 1), got " + format_double(chance_error));
  }
  std::vector<ConfigKey> dropped;
  if (monotone_np_filter) {
    const auto np = UnprunedErrorTable::from_measurements(set);
    for (const auto& [key, err] : np.entries()) {
      for (const auto& [other, other_err] : np.entries()) {
        if (other.family != key.family || other.subsample_size != key.subsample_size) continue;
        const bool no_larger = other.depth <= key.depth && other.width_scale <= key.width_scale;
        const bool strictly = other.depth < key.depth || other.width_scale < key.width_scale;
        if (no_larger && strictly && other_err < err) {
          dropped.push_back(key);
          break;
        }
      }
    }
  }
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto& p = set[i];
    if (p.test_error >= chance_error) continue;
    if (std::find(dropped.begin(), dropped.end(), p.key()) != dropped.end()) continue;
    keep.push_back(i);
  }
  return set.subset(keep, set.provenance());
}

}  // namespace prunelaw
