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
#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "gtest/gtest.h"
#include "minirec/csv.hpp"
#include "minirec/minimisation.hpp"
#include "minirec/synthetic.hpp"

namespace minirec {
namespace {

using Row = std::tuple<std::string, std::string, double, std::int64_t>;

std::multiset<Row> rows(const Dataset& d) {
  std::multiset<Row> out;
  for (const auto& x : d.interactions)
    out.insert({x.user_id, x.item_id, x.rating, x.timestamp});
  return out;
}

std::multiset<std::tuple<std::string, double, std::int64_t>> payload(const Dataset& d) {
  std::multiset<std::tuple<std::string, double, std::int64_t>> out;
  for (const auto& x : d.interactions) out.insert({x.item_id, x.rating, x.timestamp});
  return out;
}

std::map<std::string, std::size_t> profile_sizes(const Dataset& d) {
  std::map<std::string, std::size_t> out;
  for (const auto& x : d.interactions) ++out[x.user_id];
  return out;
}

Dataset from_rows(const std::string& body) {
  std::istringstream in("user,item,rating,timestamp\n" + body);
  return load_csv(in);
}

Dataset medium_synthetic(std::uint64_t seed) {
  SyntheticSpec spec;
  spec.n_users = 20;
  spec.n_items = 30;
  spec.interactions_per_user = 10;
  spec.noise_sd = 0.3;
  spec.seed = seed;
  return generate_synthetic(spec);
}

MinimisationPlan plan(Strategy s, int budget, std::uint64_t seed = 0) {
  MinimisationPlan p;
  p.strategy = s;
  p.budget = budget;
  p.seed = seed;
  return p;
}

MinimisationPlan shuffle_plan(double fraction, std::uint64_t seed = 0) {
  MinimisationPlan p;
  p.strategy = Strategy::shuffle;
  p.fraction = fraction;
  p.seed = seed;
  return p;
}

TEST(MinimisationPlan, NamesValidationAndParsing) {
  EXPECT_EQ(plan(Strategy::recency, 8).name(), "recency:8");
  EXPECT_EQ(plan(Strategy::random_k, 4).name(), "random:4");
  EXPECT_EQ(shuffle_plan(0.3).name(), "shuffle:0.3");
  EXPECT_EQ(MinimisationPlan{}.name(), "full");
  EXPECT_THROW(plan(Strategy::recency, -1).validate(), ConfigError);
  EXPECT_THROW(shuffle_plan(1.5).validate(), ConfigError);
  EXPECT_THROW(parse_strategy("bogus"), ConfigError);
  EXPECT_EQ(parse_strategy("extreme_value"), Strategy::extreme_value);
  EXPECT_TRUE(strategy_budgeted(Strategy::popularity));
  EXPECT_FALSE(strategy_budgeted(Strategy::shuffle));
}

TEST(Minimisation, FullIsIdentity) {
  const Dataset d = medium_synthetic(1);
  const Dataset out = apply(MinimisationPlan{}, d);
  EXPECT_EQ(rows(out), rows(d));
  EXPECT_EQ(out.size(), d.size());
}

TEST(Minimisation, BudgetedStrategiesKeepPerUserSubsets) {
  const Dataset d = medium_synthetic(2);
  const auto in_rows = rows(d);
  const auto in_sizes = profile_sizes(d);
  for (const auto s :
       {Strategy::random_k, Strategy::recency, Strategy::popularity, Strategy::extreme_value}) {
    for (const int k : {0, 1, 4, 10, 50}) {
      const Dataset out = apply(plan(s, k, 7), d);
      const auto out_rows = rows(out);
      EXPECT_TRUE(std::includes(in_rows.begin(), in_rows.end(), out_rows.begin(),
                                out_rows.end()))
          << strategy_name(s) << " k=" << k;
      for (const auto& [user, n] : profile_sizes(out))
        EXPECT_EQ(n, std::min<std::size_t>(static_cast<std::size_t>(k), in_sizes.at(user)))
            << strategy_name(s) << " k=" << k << " user=" << user;
      if (k > 0) {
        EXPECT_EQ(profile_sizes(out).size(), in_sizes.size())
            << strategy_name(s) << " must keep every user at k > 0";
      }
    }
  }
}

TEST(Minimisation, RecencyMatchesNaiveOracle) {
  const Dataset d = medium_synthetic(3);
  const int k = 4;
  const Dataset out = apply(plan(Strategy::recency, k), d);

  std::map<std::string, std::vector<Row>> kept;
  for (const auto& x : out.interactions)
    kept[x.user_id].push_back({x.user_id, x.item_id, x.rating, x.timestamp});

  for (const auto& [user, idxs] : d.profiles()) {
    std::vector<Row> all;
    for (std::size_t i : idxs) {
      const auto& x = d.interactions[i];
      all.push_back({x.user_id, x.item_id, x.rating, x.timestamp});
    }
    std::sort(all.begin(), all.end(), [](const Row& a, const Row& b) {
      if (std::get<3>(a) != std::get<3>(b)) return std::get<3>(a) > std::get<3>(b);
      return std::get<1>(a) < std::get<1>(b);
    });
    all.resize(std::min<std::size_t>(all.size(), k));
    std::multiset<Row> expect(all.begin(), all.end());
    std::multiset<Row> got(kept[user].begin(), kept[user].end());
    EXPECT_EQ(got, expect) << user;
  }
}

TEST(Minimisation, RecencyTimestampTiesBreakByItemId) {
  const Dataset d = from_rows("u1,b,3,5\nu1,a,4,5\nu1,c,2,1\n");
  const Dataset out = apply(plan(Strategy::recency, 1), d);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out.interactions[0].item_id, "a");
}

TEST(Minimisation, NestedRecencyBudgetsAreMonotone) {
  const Dataset d = medium_synthetic(4);
  const auto small = rows(apply(plan(Strategy::recency, 2), d));
  const auto large = rows(apply(plan(Strategy::recency, 6), d));
  EXPECT_TRUE(std::includes(large.begin(), large.end(), small.begin(), small.end()));
}

TEST(Minimisation, PopularityCountsOnTheInputDataset) {
  // Item A rated 3 times, B twice, C once. u1 with budget 1 keeps A;
  // budget 2 keeps A and B.
  const Dataset d = from_rows(
      "u1,A,4,1\nu1,B,3,2\nu1,C,5,3\n"
      "u2,A,2,1\nu2,B,3,2\n"
      "u3,A,1,1\n");
  const Dataset one = apply(plan(Strategy::popularity, 1), d);
  std::set<std::string> u1_items;
  for (const auto& x : one.interactions)
    if (x.user_id == "u1") u1_items.insert(x.item_id);
  EXPECT_EQ(u1_items, (std::set<std::string>{"A"}));

  const Dataset two = apply(plan(Strategy::popularity, 2), d);
  u1_items.clear();
  for (const auto& x : two.interactions)
    if (x.user_id == "u1") u1_items.insert(x.item_id);
  EXPECT_EQ(u1_items, (std::set<std::string>{"A", "B"}));
}

TEST(Minimisation, ExtremeValueKeepsOutliersFirst) {
  // Mean is 3; |1-3| = |5-3| = 2 outrank |3-3| = 0, and the tie between
  // the extremes breaks toward the newer timestamp.
  const Dataset d = from_rows("u1,a,1,1\nu1,b,3,2\nu1,c,5,3\n");
  const Dataset two = apply(plan(Strategy::extreme_value, 2), d);
  std::set<std::string> kept;
  for (const auto& x : two.interactions) kept.insert(x.item_id);
  EXPECT_EQ(kept, (std::set<std::string>{"a", "c"}));

  const Dataset one = apply(plan(Strategy::extreme_value, 1), d);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one.interactions[0].item_id, "c");
}

TEST(Minimisation, RandomIsSeedDeterministicAndSeedSensitive) {
  const Dataset d = medium_synthetic(5);
  const Dataset a = apply(plan(Strategy::random_k, 3, 7), d);
  const Dataset b = apply(plan(Strategy::random_k, 3, 7), d);
  const Dataset c = apply(plan(Strategy::random_k, 3, 8), d);
  EXPECT_EQ(rows(a), rows(b));
  EXPECT_NE(rows(a), rows(c));
}

TEST(Minimisation, ShufflePreservesSizesAndPayload) {
  SyntheticSpec spec;
  spec.n_users = 20;
  spec.n_items = 30;
  spec.interactions_per_user = 10;
  spec.group_fractions = {{"big", 0.8}, {"small", 0.2}};
  spec.group_preference_shift = 1.0;
  spec.seed = 6;
  const Dataset d = generate_synthetic(spec);

  const Dataset out = apply(shuffle_plan(0.5, 3), d);
  EXPECT_EQ(profile_sizes(out), profile_sizes(d));
  EXPECT_EQ(payload(out), payload(d));
  EXPECT_NE(rows(out), rows(d));  // some rows changed owner
  for (const auto& x : out.interactions)
    EXPECT_EQ(x.group, out.group_map.at(x.user_id));  // labels follow the new owner

  const Dataset again = apply(shuffle_plan(0.5, 3), d);
  EXPECT_EQ(rows(again), rows(out));
}

TEST(Minimisation, ShuffleFractionZeroIsIdentity) {
  const Dataset d = medium_synthetic(7);
  EXPECT_EQ(rows(apply(shuffle_plan(0.0, 1), d)), rows(d));
}

TEST(Minimisation, ShuffleNeedsTwoUsers) {
  const Dataset d = from_rows("u1,a,3,1\nu1,b,4,2\n");
  EXPECT_THROW(apply(shuffle_plan(0.5, 1), d), DataError);
}

TEST(Minimisation, ShuffleTwoUsersFullFraction) {
  const Dataset d = from_rows("u1,a,5,1\nu1,b,4,2\nu2,c,1,1\nu2,e,2,2\n");
  const Dataset out = apply(shuffle_plan(1.0, 11), d);
  EXPECT_EQ(profile_sizes(out), profile_sizes(d));
  EXPECT_EQ(payload(out), payload(d));
  // With everything selected, each swap crosses users, so every item must
  // still be owned by exactly one of the two users.
  for (const auto& x : out.interactions)
    EXPECT_TRUE(x.user_id == "u1" || x.user_id == "u2");
}

TEST(Minimisation, ShuffleMovedFractionTracksProbability) {
  const Dataset d = medium_synthetic(8);  // 200 interactions
  const double p = 0.3;
  double moved = 0.0;
  const int trials = 100;
  for (int t = 0; t < trials; ++t) {
    const Dataset out = apply(shuffle_plan(p, 1000 + static_cast<std::uint64_t>(t)), d);
    ASSERT_EQ(out.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i)
      if (out.interactions[i].user_id != d.interactions[i].user_id) moved += 1.0;
  }
  const double mean_fraction = moved / (trials * static_cast<double>(d.size()));
  // Selected rows are Bernoulli(p); nearly all get paired, a handful stay
  // put. Band = p +- (pairing slack + 3 standard errors), measured.
  EXPECT_GT(mean_fraction, p - 0.025);
  EXPECT_LT(mean_fraction, p + 0.015);
}

TEST(Minimisation, ComposedStepsChainLeftToRight) {
  const Dataset d = medium_synthetic(9);
  std::vector<MinimisationPlan> steps = {plan(Strategy::recency, 8, 1),
                                         plan(Strategy::extreme_value, 4, 2)};
  const Dataset composed = minirec::apply(steps, d);
  const Dataset manual = apply(steps[1], apply(steps[0], d));
  EXPECT_EQ(rows(composed), rows(manual));

  const auto stage1 = rows(apply(steps[0], d));
  const auto final_rows = rows(composed);
  EXPECT_TRUE(std::includes(stage1.begin(), stage1.end(), final_rows.begin(), final_rows.end()));
  for (const auto& [user, n] : profile_sizes(composed)) {
    (void)user;
    EXPECT_LE(n, 4u);
  }
}

TEST(Minimisation, BudgetLargerThanProfileKeepsEverything) {
  const Dataset d = medium_synthetic(10);
  for (const auto s :
       {Strategy::random_k, Strategy::recency, Strategy::popularity, Strategy::extreme_value})
    EXPECT_EQ(rows(apply(plan(s, 999, 5), d)), rows(d)) << strategy_name(s);
}

}  // namespace
}  // namespace minirec
