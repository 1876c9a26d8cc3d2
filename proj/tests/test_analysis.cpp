//
// Copyright 2026 The Minirec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "minirec/analysis.hpp"
#include "minirec/synthetic.hpp"

namespace minirec {
namespace {

Split grouped_split(std::uint64_t seed = 1) {
  SyntheticSpec spec;
  spec.n_users = 60;
  spec.n_items = 40;
  spec.interactions_per_user = 12;
  spec.noise_sd = 0.3;
  spec.group_fractions = {{"a", 0.7}, {"b", 0.3}};
  spec.group_preference_shift = 1.0;
  spec.seed = seed;
  return split(generate_synthetic(spec), SplitScheme::temporal_holdout(0.25), 0);
}

TEST(Pearson, HandValuesAndAffineInvariance) {
  const std::vector<double> x = {1, 2, 3, 4, 5};
  std::vector<double> y;
  for (double v : x) y.push_back(2.0 * v + 1.0);
  EXPECT_NEAR(pearson(x, y), 1.0, 1e-12);
  for (auto& v : y) v = -v;
  EXPECT_NEAR(pearson(x, y), -1.0, 1e-12);
  EXPECT_NEAR(pearson({1, 2, 3, 4}, {2, 1, 4, 3}), 0.6, 1e-12);
}

TEST(Pearson, GuardsAndZeroVariance) {
  EXPECT_THROW(pearson({1, 2}, {1, 2, 3}), ConfigError);
  EXPECT_THROW(pearson({1}, {2}), ConfigError);
  EXPECT_TRUE(std::isnan(pearson({3, 3, 3}, {1, 2, 3})));
}

TEST(PermutationPvalue, DeterministicBoundedAndCalibrated) {
  std::vector<double> x, y;
  Prng rng(5);
  for (int i = 0; i < 12; ++i) {
    x.push_back(rng.normal());
    y.push_back(x.back() * 1.5 + 0.1);
  }
  const double p1 = permutation_pvalue(x, y, 999, 42);
  const double p2 = permutation_pvalue(x, y, 999, 42);
  EXPECT_DOUBLE_EQ(p1, p2);
  EXPECT_GE(p1, 1.0 / 1000.0);
  EXPECT_LE(p1, 0.05);  // perfect monotone link on 12 samples is significant

  // With only 3 samples |r| = 1 happens for 2 of the 6 orderings, so even
  // a perfect correlation cannot look significant.
  const double p3 = permutation_pvalue({1, 2, 3}, {6, 4, 2}, 999, 42);
  EXPECT_GT(p3, 0.2);
  EXPECT_THROW(permutation_pvalue(x, y, 0, 42), ConfigError);
}

TEST(DecideVerdict, AllCells) {
  const CompatThresholds t;  // r_min 0.5, p_max 0.05
  EXPECT_EQ(decide_verdict(0.9, 0.01, t), Verdict::compatible);
  EXPECT_EQ(decide_verdict(0.5, 0.05, t), Verdict::compatible);  // inclusive bounds
  EXPECT_EQ(decide_verdict(0.9, 0.2, t), Verdict::inconclusive);  // strong but unconvincing
  EXPECT_EQ(decide_verdict(0.3, 0.01, t), Verdict::inconclusive);
  EXPECT_EQ(decide_verdict(-0.9, 1.0, t), Verdict::incompatible);  // no p requirement
  EXPECT_EQ(decide_verdict(-0.5, 0.5, t), Verdict::incompatible);
  EXPECT_EQ(decide_verdict(-0.3, 0.01, t), Verdict::inconclusive);
  EXPECT_EQ(decide_verdict(std::nan(""), 0.01, t), Verdict::inconclusive);
}

TEST(CompatThresholds, Validation) {
  CompatThresholds t;
  t.r_min = 0.0;
  EXPECT_THROW(t.validate(), ConfigError);
  t.r_min = 1.5;
  EXPECT_THROW(t.validate(), ConfigError);
  t = {};
  t.p_max = 0.0;
  EXPECT_THROW(t.validate(), ConfigError);
  t = {};
  t.permutations = 0;
  EXPECT_THROW(t.validate(), ConfigError);
}

TEST(AnalyzePairs, AffinePairIsCompatible) {
  std::vector<std::pair<double, double>> samples;
  Prng rng(3);
  for (int i = 0; i < 16; ++i) {
    const double d = rng.normal();
    samples.emplace_back(d, 0.7 * d + 0.02);
  }
  const auto rep = analyze_pairs("a", "b", samples, {}, 9);
  EXPECT_NEAR(rep.pearson_r, 1.0, 1e-9);
  EXPECT_LE(rep.permutation_p, 0.05);
  EXPECT_EQ(rep.verdict, Verdict::compatible);
  EXPECT_FALSE(rep.zero_variance);

  for (auto& [da, db] : samples) db = -db;
  const auto anti = analyze_pairs("a", "b", samples, {}, 9);
  EXPECT_NEAR(anti.pearson_r, -1.0, 1e-9);
  EXPECT_EQ(anti.verdict, Verdict::incompatible);
}

TEST(AnalyzePairs, GuardsAndZeroVariance) {
  std::vector<std::pair<double, double>> few(7, {0.1, 0.2});
  try {
    analyze_pairs("a", "b", few, {}, 0);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("got 7"), std::string::npos) << e.what();
  }

  std::vector<std::pair<double, double>> flat;
  for (int i = 0; i < 10; ++i) flat.emplace_back(0.5, 0.01 * i);
  const auto rep = analyze_pairs("a", "b", flat, {}, 0);
  EXPECT_TRUE(rep.zero_variance);
  EXPECT_DOUBLE_EQ(rep.pearson_r, 0.0);
  EXPECT_DOUBLE_EQ(rep.permutation_p, 1.0);
  EXPECT_EQ(rep.verdict, Verdict::inconclusive);
}

TEST(CompatibilityReport, CsvShape) {
  CompatibilityReport rep;
  rep.purpose_a = "a";
  rep.purpose_b = "b";
  rep.samples = {{0.1, 0.2}, {0.3, 0.4}};
  rep.pearson_r = 1.0;
  rep.permutation_p = 0.25;
  rep.verdict = Verdict::compatible;
  rep.seed = 7;
  std::ostringstream out;
  rep.write_csv(out);
  EXPECT_EQ(out.str(),
            "# purpose_a=a purpose_b=b\n"
            "# r_min=0.5 p_max=0.05 permutations=1000 seed=7\n"
            "# pearson_r=1 permutation_p=0.25 verdict=compatible\n"
            "delta_a,delta_b\n"
            "0.1,0.2\n"
            "0.3,0.4\n");
}

TEST(CompatTask, PrefixRestriction) {
  Dataset d;
  d.rating_min = 1.0;
  d.rating_max = 5.0;
  d.interactions.push_back({"u1", "m:001", 4.0, 1, ""});
  d.interactions.push_back({"u1", "s:001", 2.0, 2, ""});
  d.interactions.push_back({"u2", "m:002", 3.0, 1, ""});
  CompatTask task;
  task.item_prefix = "m:";
  const Dataset r = task.restrict(d);
  EXPECT_EQ(r.size(), 2u);
  for (const auto& x : r.interactions) EXPECT_EQ(x.item_id.rfind("m:", 0), 0u);
  task.item_prefix.clear();
  EXPECT_EQ(task.restrict(d).size(), 3u);
}

TEST(Perturbation, NamesAndDropUsers) {
  MinimisationPlan p;
  p.strategy = Strategy::random_k;
  p.budget = 4;
  EXPECT_EQ(Perturbation::with_plan(p).name(), "random:4");
  EXPECT_EQ(Perturbation::dropping_users(0.3).name(), "drop_users:0.3");
  EXPECT_THROW(Perturbation::dropping_users(0.0), ConfigError);
  EXPECT_THROW(Perturbation::dropping_users(1.0), ConfigError);

  SyntheticSpec spec;
  spec.n_users = 20;
  spec.n_items = 15;
  spec.interactions_per_user = 6;
  spec.seed = 2;
  const Dataset d = generate_synthetic(spec);
  const Perturbation drop = Perturbation::dropping_users(0.25);
  const Dataset out = drop.apply_to(d, 11);
  EXPECT_EQ(out.users().size(), 15u);  // floor(0.25 * 20) = 5 users dropped
  const auto before_list = d.users();
  const std::set<std::string> before(before_list.begin(), before_list.end());
  for (const auto& u : out.users()) EXPECT_TRUE(before.count(u));
  const Dataset again = drop.apply_to(d, 11);
  EXPECT_EQ(out.users(), again.users());
  EXPECT_NE(out.users(), drop.apply_to(d, 12).users());
}

TEST(Compatibility, IdenticalRatingTasksAreCompatible) {
  const Split s = grouped_split(4);
  CompatTask a, b;
  a.label = "rating_a";
  b.label = "rating_b";
  a.model.kind = b.model.kind = ModelKind::popularity;
  a.metric = b.metric = MetricKind::parse("rmse");

  std::vector<Perturbation> schedule;
  for (int k : {1, 2, 4, 8}) {
    MinimisationPlan p;
    p.strategy = Strategy::random_k;
    p.budget = k;
    schedule.push_back(Perturbation::with_plan(p));
  }
  const auto rep = compatibility(s, a, b, schedule, {1, 2}, {}, 20);
  ASSERT_EQ(rep.samples.size(), 8u);
  for (const auto& [da, db] : rep.samples) EXPECT_DOUBLE_EQ(da, db);
  EXPECT_NEAR(rep.pearson_r, 1.0, 1e-12);
  EXPECT_EQ(rep.verdict, Verdict::compatible);
}

TEST(Compatibility, Guards) {
  const Split s = grouped_split(5);
  CompatTask a, b;
  a.label = "a";
  b.label = "b";
  a.metric = b.metric = MetricKind::parse("rmse");

  EXPECT_THROW(compatibility(s, a, b, {}, {1}, {}), ConfigError);

  MinimisationPlan p;
  p.strategy = Strategy::random_k;
  p.budget = 2;
  const std::vector<Perturbation> one = {Perturbation::with_plan(p)};
  EXPECT_THROW(compatibility(s, a, b, one, {1, 2}, {}), ConfigError);  // 2 cells < 8

  CompatTask empty_side = a;
  empty_side.item_prefix = "no_such_prefix:";
  std::vector<Perturbation> schedule(8, Perturbation::with_plan(p));
  EXPECT_THROW(compatibility(s, empty_side, b, schedule, {1}, {}), DataError);
}

TEST(Disparity, FullPlanYieldsZeroEverywhere) {
  const Split s = grouped_split(6);
  ModelConfig cfg;
  cfg.kind = ModelKind::popularity;
  const auto rep = disparity_under_minimisation(s, cfg, MetricKind::parse("rmse"),
                                                MinimisationPlan{}, {1, 2}, 20);
  ASSERT_EQ(rep.group_delta.size(), 2u);
  for (const auto& [g, d] : rep.group_delta) EXPECT_DOUBLE_EQ(d, 0.0) << g;
  EXPECT_DOUBLE_EQ(rep.disparity, 0.0);
  EXPECT_GT(rep.group_test_users.at("a"), 0);
  EXPECT_GT(rep.group_test_users.at("b"), 0);
}

TEST(Disparity, InvariantUnderGroupRelabeling) {
  const Split s = grouped_split(7);
  Split renamed = s;
  const std::map<std::string, std::string> alias = {{"a", "x"}, {"b", "y"}};
  for (auto* d : {&renamed.train, &renamed.test}) {
    for (auto& [user, g] : d->group_map) g = alias.at(g);
    for (auto& x : d->interactions) x.group = alias.at(x.group);
  }
  MinimisationPlan plan;
  plan.strategy = Strategy::recency;
  plan.budget = 4;
  ModelConfig cfg;
  cfg.kind = ModelKind::popularity;
  const auto orig =
      disparity_under_minimisation(s, cfg, MetricKind::parse("rmse"), plan, {1, 2}, 20);
  const auto relab =
      disparity_under_minimisation(renamed, cfg, MetricKind::parse("rmse"), plan, {1, 2}, 20);
  EXPECT_DOUBLE_EQ(orig.group_delta.at("a"), relab.group_delta.at("x"));
  EXPECT_DOUBLE_EQ(orig.group_delta.at("b"), relab.group_delta.at("y"));
  EXPECT_DOUBLE_EQ(orig.disparity, relab.disparity);
}

TEST(Disparity, Guards) {
  SyntheticSpec spec;
  spec.n_users = 20;
  spec.n_items = 15;
  spec.interactions_per_user = 6;
  spec.seed = 3;
  const Split bare = split(generate_synthetic(spec), SplitScheme::temporal_holdout(0.25), 0);
  ModelConfig cfg;
  cfg.kind = ModelKind::popularity;
  EXPECT_THROW(disparity_under_minimisation(bare, cfg, MetricKind::parse("rmse"),
                                            MinimisationPlan{}, {1}),
               DataError);

  // A labeled group whose users never reach the test side must be called
  // out by name instead of silently reporting nothing.
  Split s = grouped_split(8);
  Dataset filtered;
  filtered.rating_min = s.test.rating_min;
  filtered.rating_max = s.test.rating_max;
  filtered.group_map = s.test.group_map;
  for (const auto& x : s.test.interactions)
    if (x.group != "b") filtered.interactions.push_back(x);
  s.test = filtered;
  try {
    disparity_under_minimisation(s, cfg, MetricKind::parse("rmse"), MinimisationPlan{}, {1});
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("'b'"), std::string::npos) << e.what();
  }
}

TEST(CrossUser, EmptyRemovalSetIsExactlyNeutral) {
  const Split s = grouped_split(9);
  ModelConfig cfg;
  cfg.kind = ModelKind::popularity;
  const auto impact = cross_user_impact(s, cfg, MetricKind::parse("rmse"), {}, 1, 20);
  EXPECT_EQ(impact.delta.size(), s.test.users().size());
  for (const auto& [u, d] : impact.delta) EXPECT_DOUBLE_EQ(d, 0.0) << u;
  EXPECT_DOUBLE_EQ(impact.mean_abs, 0.0);
  EXPECT_DOUBLE_EQ(impact.max_abs, 0.0);
}

TEST(CrossUser, RemovedUsersAreExcludedFromTheReport) {
  const Split s = grouped_split(10);
  const auto users = s.train.users();
  const std::set<std::string> removed = {users[0], users[1]};
  ModelConfig cfg;
  cfg.kind = ModelKind::popularity;
  const auto impact = cross_user_impact(s, cfg, MetricKind::parse("rmse"), removed, 1, 20);
  for (const auto& u : removed) EXPECT_FALSE(impact.delta.count(u));
  EXPECT_EQ(impact.delta.size(), s.test.users().size() - removed.size());
  EXPECT_GE(impact.max_abs, impact.mean_abs);
}

TEST(CrossUser, RemovingEveryoneIsAnError) {
  const Split s = grouped_split(11);
  const auto users = s.train.users();
  const std::set<std::string> all(users.begin(), users.end());
  ModelConfig cfg;
  cfg.kind = ModelKind::popularity;
  EXPECT_THROW(cross_user_impact(s, cfg, MetricKind::parse("rmse"), all, 1), DataError);
}

TEST(CrossUser, CsvShape) {
  CrossUserImpact impact;
  impact.delta = {{"u1", -0.05}, {"u2", 0.1}};
  impact.mean_abs = 0.075;
  impact.max_abs = 0.1;
  std::ostringstream out;
  impact.write_csv(out);
  EXPECT_EQ(out.str(),
            "# mean_abs=0.075 max_abs=0.1\n"
            "user_id,delta\n"
            "u1,-0.05\n"
            "u2,0.1\n");
}

}  // namespace
}  // namespace minirec
