// Copyright 2026 The prunelaw Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "prunelaw/law.hpp"

namespace prunelaw {

/// Seed stamped on points produced by aggregate_replicates.
inline constexpr std::int64_t kAggregateSeed = -1;

inline constexpr std::string_view kMeasurementsHeader =
    "family,depth,width_scale,subsample_size,density,test_error,seed";

/// Identifies one unpruned family member trained on one subsample size.
struct ConfigKey {
  std::string family;
  int depth = 1;
  double width_scale = 1.0;
  std::int64_t subsample_size = 1;

  [[nodiscard]] std::string to_string() const;

  friend auto operator<=>(const ConfigKey&, const ConfigKey&) = default;
  friend bool operator==(const ConfigKey&, const ConfigKey&) = default;
};

struct MeasurementPoint {
  std::string family;
  NetworkConfig cfg;
  double test_error = 0.0;
  std::int64_t seed = 0;

  [[nodiscard]] ConfigKey key() const { return {family, cfg.depth, cfg.width_scale, cfg.subsample_size}; }
};

/// Total order (family, l, w, n, d, seed, error). Serialization and fitting
/// both work in this order so results do not depend on input row order.
[[nodiscard]] bool canonical_less(const MeasurementPoint& a, const MeasurementPoint& b);

/// Immutable, validated collection of measurements.
class MeasurementSet {
 public:
  MeasurementSet() = default;

  /// Validates every point and rejects duplicate (family, cfg, seed) keys.
  /// `source_lines`, when given, must match `points` in length and is used in
  /// error messages.
  MeasurementSet(std::vector<MeasurementPoint> points, std::string provenance,
                 std::vector<std::size_t> source_lines = {});

  [[nodiscard]] const std::vector<MeasurementPoint>& points() const noexcept { return points_; }
  [[nodiscard]] const std::string& provenance() const noexcept { return provenance_; }
  [[nodiscard]] std::size_t size() const noexcept { return points_.size(); }
  [[nodiscard]] bool empty() const noexcept { return points_.empty(); }
  [[nodiscard]] auto begin() const noexcept { return points_.begin(); }
  [[nodiscard]] auto end() const noexcept { return points_.end(); }
  [[nodiscard]] const MeasurementPoint& operator[](std::size_t i) const { return points_[i]; }

  /// Line number of point i in its source file, 0 when constructed in memory.
  [[nodiscard]] std::size_t source_line(std::size_t i) const noexcept;

  /// Copy in canonical order.
  [[nodiscard]] MeasurementSet canonical() const;

  /// Distinct configuration keys in ascending order.
  [[nodiscard]] std::vector<ConfigKey> config_keys() const;

  /// New set holding points[i] for each index, in the given order.
  [[nodiscard]] MeasurementSet subset(const std::vector<std::size_t>& indices, std::string provenance) const;

 private:
  std::vector<MeasurementPoint> points_;
  std::vector<std::size_t> lines_;
  std::string provenance_;
};

/// Map from (family, l, w, n) to the error of the dense network.
class UnprunedErrorTable {
 public:
  void set(const ConfigKey& key, double eps_np);
  [[nodiscard]] std::optional<double> find(const ConfigKey& key) const;
  /// Throws CoverageError naming the key when absent.
  [[nodiscard]] double at(const ConfigKey& key) const;
  [[nodiscard]] bool contains(const ConfigKey& key) const { return entries_.contains(key); }
  [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }
  [[nodiscard]] bool empty() const noexcept { return entries_.empty(); }
  [[nodiscard]] const std::map<ConfigKey, double>& entries() const noexcept { return entries_; }

  /// Keys of `set` without an entry, deduplicated and sorted.
  [[nodiscard]] std::vector<ConfigKey> missing_keys(const MeasurementSet& set) const;
  /// Throws CoverageError listing every missing key.
  void require_coverage(const MeasurementSet& set) const;

  /// Mean error of the density-1 points of each configuration.
  [[nodiscard]] static UnprunedErrorTable from_measurements(const MeasurementSet& set);

 private:
  std::map<ConfigKey, double> entries_;
};

/// Parses the measurements CSV. Throws ParseError on malformed rows and
/// ValidationError on out-of-range fields or duplicate keys.
[[nodiscard]] MeasurementSet parse_measurements(std::string_view text, std::string provenance = {});
[[nodiscard]] MeasurementSet read_measurements(const std::filesystem::path& path);

/// Canonical-order CSV with shortest round-trip number formatting.
[[nodiscard]] std::string serialize_measurements(const MeasurementSet& set);
void write_measurements(const std::filesystem::path& path, const MeasurementSet& set);

/// One point per (family, cfg) whose error is the mean over seeds. The
/// provenance gains a " [replicate means]" suffix.
[[nodiscard]] MeasurementSet aggregate_replicates(const MeasurementSet& set);

struct ConfigSpread {
  std::string family;
  NetworkConfig cfg;
  std::size_t replicates = 0;
  double min = 0.0;
  double mean = 0.0;
  double max = 0.0;
};

struct ReplicateSpread {
  std::vector<ConfigSpread> per_config;
  /// sqrt(sum of squared relative deviations / sum of (replicates - 1)) over
  /// every (family, cfg) with two or more seeds.
  double pooled_relative_std = 0.0;
  std::size_t groups_with_replicates = 0;
};

/// Throws InsufficientDataError when no configuration has two seeds.
[[nodiscard]] ReplicateSpread replicate_spread(const MeasurementSet& set);

/// Drops points at or above chance error. With `monotone_np_filter`, also
/// drops every configuration whose unpruned error exceeds that of a strictly
/// smaller member (no deeper, no wider, same family and n).
[[nodiscard]] MeasurementSet filter_feasible(const MeasurementSet& set, double chance_error, bool monotone_np_filter);

/// Shortest decimal text that parses back to exactly `v`.
[[nodiscard]] std::string format_double(double v);

}  // namespace prunelaw
