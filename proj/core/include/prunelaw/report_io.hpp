// Copyright 2026 The prunelaw Authors
// SPDX-License-Identifier: Apache-2.0
//
// Text serialization of fits, tables and reports. JSON numbers are written in
// the shortest form that parses back to the same double; CSV numbers likewise.

#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>

#include "prunelaw/baselines.hpp"
#include "prunelaw/dataset.hpp"
#include "prunelaw/fitter.hpp"
#include "prunelaw/imp.hpp"
#include "prunelaw/optimizer.hpp"
#include "prunelaw/stability.hpp"

namespace prunelaw {

inline constexpr std::string_view kDeviationsHeader =
    "family,depth,width_scale,subsample_size,density,actual,predicted,delta";
inline constexpr std::string_view kStabilityHeader = "T,mean_mu,std_mu,mean_sigma,std_sigma";
inline constexpr std::string_view kFrontierHeader = "eps_k,depth,width_scale,density,param_count,binding";
inline constexpr std::string_view kOverlayHeader = "density,actual,ours,baseline";
inline constexpr std::string_view kCatalogHeader = "depth,width_scale,eps_np";

/// Fit-result JSON: eps_high, gamma, p_prime, phi, psi, fit {mu, sigma,
/// n_points}, provenance, plus solver metadata and the unpruned-error table.
[[nodiscard]] std::string fit_to_json(const JointFit& fit);
/// Throws ParseError on malformed JSON and ValidationError on missing or
/// out-of-range fields.
[[nodiscard]] JointFit fit_from_json(std::string_view text);

[[nodiscard]] std::string np_table_to_json(const UnprunedErrorTable& table);
[[nodiscard]] UnprunedErrorTable np_table_from_json(std::string_view text);

[[nodiscard]] std::string deviations_csv(const FitReport& report);
[[nodiscard]] std::string fit_report_to_json(const FitReport& report, std::string_view provenance);

[[nodiscard]] std::string stability_to_json(const StabilityReport& report);
[[nodiscard]] std::string stability_csv(const StabilityReport& report);
[[nodiscard]] std::string extrapolation_to_json(const ExtrapolationReport& report);

[[nodiscard]] std::string opt_result_to_json(const OptResult& result);
[[nodiscard]] std::string frontier_csv(std::span<const OptResult> frontier);
[[nodiscard]] std::string frontier_to_json(std::span<const OptResult> frontier);
[[nodiscard]] std::string catalog_csv(const ConfigCatalog& catalog);
[[nodiscard]] ConfigCatalog parse_catalog_csv(std::string_view text);

[[nodiscard]] std::string comparison_to_json(const ComparisonReport& report);
[[nodiscard]] std::string overlay_csv(const ComparisonReport& report);

[[nodiscard]] std::string imp_run_log_json(const ImpRunResult& run);

/// Whole-file helpers; both throw InvalidParameterError naming the path.
[[nodiscard]] std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace prunelaw
