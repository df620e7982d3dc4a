// Copyright 2026 The prunelaw Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "prunelaw/dataset.hpp"
#include "prunelaw/errors.hpp"

namespace prunelaw {
namespace {

std::string csv(std::initializer_list<const char*> rows) {
  std::string out(kMeasurementsHeader);
  out += '\n';
  for (const char* r : rows) {
    out += r;
    out += '\n';
  }
  return out;
}

MeasurementPoint pt(std::string fam, int l, double w, std::int64_t n, double d, double e, std::int64_t seed = 0) {
  return {std::move(fam), {l, w, n, d}, e, seed};
}

TEST(ParseMeasurements, HeaderAndOneRow) {
  const auto set = parse_measurements(csv({"resnet,20,1,50000,0.8,0.085,0"}));
  ASSERT_EQ(set.size(), 1u);
  EXPECT_EQ(set[0].family, "resnet");
  EXPECT_EQ(set[0].cfg.depth, 20);
  EXPECT_EQ(set[0].cfg.subsample_size, 50000);
  EXPECT_DOUBLE_EQ(set[0].cfg.density, 0.8);
  EXPECT_DOUBLE_EQ(set[0].test_error, 0.085);
  EXPECT_EQ(set.source_line(0), 2u);
}

TEST(ParseMeasurements, ZeroDensityNamesField) {
  try {
    (void)parse_measurements(csv({"a,2,1,10,0.5,0.1,0", "a,2,1,10,0,0.1,0"}));
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.field(), "density");
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(ParseMeasurements, ThreeReplicates) {
  const auto set = parse_measurements(csv({"a,2,1,10,0.5,0.10,0", "a,2,1,10,0.5,0.12,1", "a,2,1,10,0.5,0.14,2"}));
  ASSERT_EQ(set.size(), 3u);
  EXPECT_NE(set[0].seed, set[1].seed);
  EXPECT_NE(set[1].seed, set[2].seed);
}

TEST(ParseMeasurements, ScientificNotationCrlfAndBom) {
  const std::string text = "\xEF\xBB\xBF" + std::string(kMeasurementsHeader) + "\r\na,2,1.5e0,10,4e-3,1.25E-1,7\r\n";
  const auto set = parse_measurements(text);
  ASSERT_EQ(set.size(), 1u);
  EXPECT_DOUBLE_EQ(set[0].cfg.width_scale, 1.5);
  EXPECT_DOUBLE_EQ(set[0].cfg.density, 0.004);
  EXPECT_DOUBLE_EQ(set[0].test_error, 0.125);
}

TEST(ParseMeasurements, MalformedRowsCarryLineNumbers) {
  try {
    (void)parse_measurements(csv({"a,2,1,10,0.5,0.1,0", "a,2,1,10,0.5,zero,1"}));
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  EXPECT_THROW((void)parse_measurements(csv({"a,2,1,10,0.5,0.1"})), ParseError);
  EXPECT_THROW((void)parse_measurements("family,depth\na,2\n"), ParseError);
  EXPECT_THROW((void)parse_measurements(""), ParseError);
}

TEST(ParseMeasurements, OutOfRangeFields) {
  EXPECT_THROW((void)parse_measurements(csv({"a,0,1,10,0.5,0.1,0"})), ValidationError);
  EXPECT_THROW((void)parse_measurements(csv({"a,2,-1,10,0.5,0.1,0"})), ValidationError);
  EXPECT_THROW((void)parse_measurements(csv({"a,2,1,0,0.5,0.1,0"})), ValidationError);
  EXPECT_THROW((void)parse_measurements(csv({"a,2,1,10,1.5,0.1,0"})), ValidationError);
  EXPECT_THROW((void)parse_measurements(csv({"a,2,1,10,0.5,1.0,0"})), ValidationError);
  EXPECT_THROW((void)parse_measurements(csv({"a,2,1,10,0.5,0,0"})), ValidationError);
}

TEST(ParseMeasurements, DuplicateKeyIsAnError) {
  try {
    (void)parse_measurements(csv({"a,2,1,10,0.5,0.1,0", "b,2,1,10,0.5,0.1,0", "a,2,1,10,0.5,0.2,0"}));
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.line(), 4u);
  }
}

TEST(Serialize, RoundTripIsFieldExact) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<MeasurementPoint> pts;
  for (int i = 0; i < 500; ++i) {
    pts.push_back(pt(i % 3 ? "fam" : "other", 1 + i % 7, std::pow(2.0, -3 + i % 6) * (1 + u(rng)), 100 + i % 4,
                     std::max(1e-12, u(rng)), 1e-6 + 0.99 * u(rng), i));
  }
  const MeasurementSet set(pts, "random");
  const auto back = parse_measurements(serialize_measurements(set));
  const auto canon = set.canonical();
  ASSERT_EQ(back.size(), canon.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].family, canon[i].family);
    EXPECT_EQ(back[i].cfg, canon[i].cfg);
    EXPECT_EQ(back[i].test_error, canon[i].test_error);
    EXPECT_EQ(back[i].seed, canon[i].seed);
  }
  EXPECT_EQ(serialize_measurements(back), serialize_measurements(set));
}

TEST(Serialize, OrderIsCanonical) {
  const MeasurementSet set({pt("b", 1, 1, 1, 0.5, 0.1), pt("a", 2, 1, 1, 0.5, 0.1), pt("a", 1, 2, 1, 0.5, 0.1),
                            pt("a", 1, 1, 1, 1.0, 0.1, 1), pt("a", 1, 1, 1, 1.0, 0.1, 0), pt("a", 1, 1, 1, 0.25, 0.1)},
                           "x");
  const auto text = serialize_measurements(set);
  EXPECT_EQ(text, std::string(kMeasurementsHeader) +
                      "\na,1,1,1,0.25,0.1,0\na,1,1,1,1,0.1,0\na,1,1,1,1,0.1,1\na,1,2,1,0.5,0.1,0\n"
                      "a,2,1,1,0.5,0.1,0\nb,1,1,1,0.5,0.1,0\n");
}

TEST(AggregateReplicates, MeanOfThree) {
  const MeasurementSet set({pt("a", 2, 1, 10, 0.5, 0.10, 0), pt("a", 2, 1, 10, 0.5, 0.12, 1),
                            pt("a", 2, 1, 10, 0.5, 0.14, 2)},
                           "x");
  const auto agg = aggregate_replicates(set);
  ASSERT_EQ(agg.size(), 1u);
  EXPECT_NEAR(agg[0].test_error, 0.12, 1e-15);
  EXPECT_EQ(agg[0].seed, kAggregateSeed);
  EXPECT_EQ(agg.provenance(), "x [replicate means]");
  const auto spread = replicate_spread(set);
  ASSERT_EQ(spread.per_config.size(), 1u);
  EXPECT_DOUBLE_EQ(spread.per_config[0].min, 0.10);
  EXPECT_DOUBLE_EQ(spread.per_config[0].max, 0.14);
}

TEST(AggregateReplicates, SingleReplicateUnchangedAndIdempotent) {
  const MeasurementSet set({pt("a", 2, 1, 10, 0.5, 0.1234, 4), pt("a", 2, 1, 10, 0.25, 0.2, 4),
                            pt("a", 2, 1, 10, 0.25, 0.3, 5)},
                           "x");
  const auto once = aggregate_replicates(set);
  const auto twice = aggregate_replicates(once);
  ASSERT_EQ(once.size(), 2u);
  EXPECT_EQ(once[1].test_error, 0.1234);
  EXPECT_EQ(serialize_measurements(once), serialize_measurements(twice));
}

// Oracle: pool relative deviations over groups, divide by sum of (n - 1).
double pooled_oracle(const std::vector<std::vector<double>>& groups) {
  double ss = 0.0, dof = 0.0;
  for (const auto& g : groups) {
    if (g.size() < 2) continue;
    const double m = std::accumulate(g.begin(), g.end(), 0.0) / static_cast<double>(g.size());
    for (double e : g) ss += ((e - m) / m) * ((e - m) / m);
    dof += static_cast<double>(g.size()) - 1.0;
  }
  return std::sqrt(ss / dof);
}

TEST(ReplicateSpread, MatchesStatisticsOracle) {
  const MeasurementSet set({pt("a", 2, 1, 10, 0.5, 0.10, 0), pt("a", 2, 1, 10, 0.5, 0.12, 1),
                            pt("a", 2, 1, 10, 0.5, 0.14, 2)},
                           "x");
  // Relative deviations -1/6, 0, 1/6; sample std = 1/6.
  EXPECT_NEAR(replicate_spread(set).pooled_relative_std, 1.0 / 6.0, 1e-12);
  EXPECT_NEAR(replicate_spread(set).pooled_relative_std, pooled_oracle({{0.10, 0.12, 0.14}}), 1e-15);

  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.05, 0.5);
  std::vector<MeasurementPoint> pts;
  std::vector<std::vector<double>> groups;
  for (int c = 0; c < 20; ++c) {
    std::vector<double> g;
    for (int s = 0; s < 1 + c % 4; ++s) {
      g.push_back(u(rng));
      pts.push_back(pt("a", 1 + c, 1, 10, 0.5, g.back(), s));
    }
    groups.push_back(g);
  }
  EXPECT_NEAR(replicate_spread(MeasurementSet(pts, "x")).pooled_relative_std, pooled_oracle(groups), 1e-12);
}

TEST(ReplicateSpread, EdgeCases) {
  const MeasurementSet same({pt("a", 2, 1, 10, 0.5, 0.2, 0), pt("a", 2, 1, 10, 0.5, 0.2, 1)}, "x");
  EXPECT_EQ(replicate_spread(same).pooled_relative_std, 0.0);

  const MeasurementSet one({pt("a", 2, 1, 10, 0.5, 0.10, 0), pt("a", 2, 1, 10, 0.5, 0.14, 1)}, "x");
  const MeasurementSet two({pt("a", 2, 1, 10, 0.5, 0.10, 0), pt("a", 2, 1, 10, 0.5, 0.14, 1),
                            pt("a", 3, 1, 10, 0.5, 0.10, 0), pt("a", 3, 1, 10, 0.5, 0.14, 1)},
                           "x");
  EXPECT_NEAR(replicate_spread(two).pooled_relative_std, replicate_spread(one).pooled_relative_std, 1e-15);

  EXPECT_THROW((void)replicate_spread(MeasurementSet({pt("a", 2, 1, 10, 0.5, 0.1, 0)}, "x")), InsufficientDataError);
}

TEST(FilterFeasible, ChanceErrorDropsAtThreshold) {
  const MeasurementSet set({pt("c", 20, 1, 50000, 0.01, 0.9), pt("c", 20, 1, 50000, 0.02, 0.89)}, "x");
  const auto out = filter_feasible(set, 0.9, false);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].test_error, 0.89);
}

TEST(FilterFeasible, IdentityWhenAllBelow) {
  const MeasurementSet set({pt("c", 2, 1, 5, 0.5, 0.3), pt("c", 2, 1, 5, 0.25, 0.4), pt("c", 2, 1, 5, 1.0, 0.2)}, "x");
  const auto out = filter_feasible(set, 0.9, true);
  ASSERT_EQ(out.size(), set.size());
  for (std::size_t i = 0; i < set.size(); ++i) EXPECT_EQ(out[i].cfg, set[i].cfg);
}

TEST(FilterFeasible, MonotoneFilterDropsWorseWiderMember) {
  const MeasurementSet set({pt("c", 2, 1, 5, 1.0, 0.20), pt("c", 2, 1, 5, 0.5, 0.25), pt("c", 2, 2, 5, 1.0, 0.30),
                            pt("c", 2, 2, 5, 0.5, 0.35)},
                           "x");
  const auto kept = filter_feasible(set, 0.9, true);
  ASSERT_EQ(kept.size(), 2u);
  for (const auto& p : kept) EXPECT_EQ(p.cfg.width_scale, 1.0);
  EXPECT_EQ(filter_feasible(set, 0.9, false).size(), 4u);
}

TEST(FilterFeasible, NeverAddsAndPreservesOrder) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  std::vector<MeasurementPoint> pts;
  for (int i = 0; i < 200; ++i) pts.push_back(pt("f", 1 + i % 5, 1 + i % 3, 10, (i % 7 + 1) / 7.0, u(rng), i / 105));
  const MeasurementSet set(pts, "x");
  for (bool mono : {false, true}) {
    const auto out = filter_feasible(set, 0.6, mono);
    EXPECT_LE(out.size(), set.size());
    std::size_t j = 0;
    for (const auto& p : out) {
      while (j < set.size() && !(set[j].cfg == p.cfg && set[j].seed == p.seed)) ++j;
      ASSERT_LT(j, set.size()) << "point out of order or invented";
      ++j;
    }
  }
}

TEST(UnprunedErrorTable, CoverageErrorListsMissingKeys) {
  const MeasurementSet set({pt("a", 2, 1, 10, 0.5, 0.2), pt("a", 3, 1, 10, 0.5, 0.2), pt("b", 3, 1, 10, 0.5, 0.2)}, "x");
  UnprunedErrorTable t;
  t.set({"a", 2, 1, 10}, 0.1);
  try {
    t.require_coverage(set);
    FAIL();
  } catch (const CoverageError& e) {
    ASSERT_EQ(e.missing().size(), 2u);
    EXPECT_EQ(e.kind(), ErrorKind::Input);
  }
}

TEST(UnprunedErrorTable, FromMeasurementsAveragesDensityOne) {
  const MeasurementSet set({pt("a", 2, 1, 10, 1.0, 0.1, 0), pt("a", 2, 1, 10, 1.0, 0.2, 1), pt("a", 2, 1, 10, 0.5, 0.3, 0)},
                           "x");
  const auto t = UnprunedErrorTable::from_measurements(set);
  ASSERT_EQ(t.size(), 1u);
  EXPECT_NEAR(t.at({"a", 2, 1, 10}), 0.15, 1e-15);
}

}  // namespace
}  // namespace prunelaw
