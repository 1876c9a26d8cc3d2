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
#include <sstream>
#include <vector>

#include "gtest/gtest.h"
#include "minirec/curve.hpp"
#include "minirec/prng.hpp"
#include "minirec/synthetic.hpp"

namespace minirec {
namespace {

std::vector<std::pair<double, double>> sample_curve(double a, double b, double c,
                                                    const std::vector<double>& budgets,
                                                    double noise_sd = 0.0,
                                                    std::uint64_t seed = 123) {
  Prng rng(seed);
  std::vector<std::pair<double, double>> pts;
  for (double n : budgets)
    pts.emplace_back(n, a * std::pow(n, -b) + c + noise_sd * rng.normal());
  return pts;
}

TEST(FitPowerLaw, RecoversCleanParameters) {
  const auto pts = sample_curve(2.0, 0.7, 0.5, {1, 2, 4, 8, 16, 32, 64, 128});
  const auto fit = fit_power_law(pts);
  ASSERT_TRUE(fit.has_value());
  EXPECT_NEAR(fit->a, 2.0, 1e-6);
  EXPECT_NEAR(fit->b, 0.7, 1e-6);
  EXPECT_NEAR(fit->c, 0.5, 1e-6);
  EXPECT_LT(fit->residual, 1e-7);
}

TEST(FitPowerLaw, RecoversParametersUnderNoise) {
  const auto pts =
      sample_curve(2.0, 0.7, 0.5, {2, 4, 8, 16, 32, 64, 128, 256, 512}, 0.005, 77);
  const auto fit = fit_power_law(pts);
  ASSERT_TRUE(fit.has_value());
  EXPECT_NEAR(fit->b, 0.7, 0.05);
  EXPECT_NEAR(fit->c, 0.5, 0.02);
}

TEST(FitPowerLaw, FlatCurveCanonicalizesToZeroExponent) {
  const auto fit = fit_power_law({{1, 0.3}, {2, 0.3}, {4, 0.3}, {8, 0.3}});
  ASSERT_TRUE(fit.has_value());
  EXPECT_DOUBLE_EQ(fit->a, 0.0);
  EXPECT_DOUBLE_EQ(fit->b, 0.0);
  EXPECT_DOUBLE_EQ(fit->c, 0.3);
  EXPECT_DOUBLE_EQ(fit->residual, 0.0);
}

TEST(FitPowerLaw, InputGuards) {
  EXPECT_THROW(fit_power_law({{1, 0.5}, {2, 0.4}}), ConfigError);
  try {
    fit_power_law({{1, 0.5}, {2, 0.4}, {2, 0.4}});
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("got 2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(fit_power_law({{0.5, 0.5}, {2, 0.4}, {4, 0.3}}), ConfigError);
}

TEST(DecideStop, MatchesHandSolvedThreshold) {
  // gain(k) = a * k^-b * (1 - 2^-b) = 0.768856.. * k^-0.7 with a = 2,
  // b = 0.7; gain(32) = 0.0680 > 0.05, gain(64) = 0.0418 < 0.05.
  LearningCurve curve;
  curve.fit = PowerLawFit{2.0, 0.7, 0.5, 0.0, 0};
  StoppingRule rule;
  rule.epsilon = 0.05;
  rule.grid = {1, 2, 4, 8, 16, 32, 64, 128, 256};
  const StopDecision d = decide_stop(curve, rule);
  EXPECT_TRUE(d.stop);
  EXPECT_EQ(d.budget, 64);
}

TEST(DecideStop, MonotoneInEpsilonAndContinueWhenStrict) {
  LearningCurve curve;
  curve.fit = PowerLawFit{2.0, 0.7, 0.5, 0.0, 0};
  StoppingRule rule;
  rule.grid = {1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024};

  rule.epsilon = 1e-9;
  EXPECT_FALSE(decide_stop(curve, rule).stop);

  rule.epsilon = 10.0;
  const StopDecision loose = decide_stop(curve, rule);
  EXPECT_TRUE(loose.stop);
  EXPECT_EQ(loose.budget, 1);

  int prev = 1 << 20;
  for (double eps : {0.01, 0.05, 0.2, 1.0}) {
    rule.epsilon = eps;
    const StopDecision d = decide_stop(curve, rule);
    ASSERT_TRUE(d.stop);
    EXPECT_LE(d.budget, prev);  // looser epsilon never stops later
    prev = d.budget;
  }
}

TEST(DecideStop, ValidatesRuleAndFit) {
  LearningCurve unfit;
  StoppingRule rule;
  rule.epsilon = 0.1;
  rule.grid = {1, 2, 4};
  EXPECT_THROW(decide_stop(unfit, rule), DataError);

  LearningCurve curve;
  curve.fit = PowerLawFit{1.0, 0.5, 0.0, 0.0, 0};
  rule.epsilon = 0.0;
  EXPECT_THROW(decide_stop(curve, rule), ConfigError);
  rule.epsilon = 0.1;
  rule.grid = {4, 2};
  EXPECT_THROW(decide_stop(curve, rule), ConfigError);
  rule.grid = {};
  EXPECT_THROW(decide_stop(curve, rule), ConfigError);
}

TEST(PredictionError, MeasuresExtrapolationGap) {
  LearningCurve curve;
  for (const auto& [n, y] : sample_curve(1.5, 0.6, 0.2, {1, 2, 4, 8, 16}))
    curve.points.push_back({static_cast<int>(n), 0, y});
  curve.fit_now();
  ASSERT_TRUE(curve.fit.has_value());

  const auto on_curve = sample_curve(1.5, 0.6, 0.2, {32, 64});
  const PredictionError tight = prediction_error(curve, on_curve);
  EXPECT_LT(tight.max_abs, 1e-6);

  auto off_curve = on_curve;
  for (auto& [n, y] : off_curve) y += 0.1;
  const PredictionError off = prediction_error(curve, off_curve);
  EXPECT_NEAR(off.max_abs, 0.1, 1e-6);
  EXPECT_NEAR(off.mean_abs, 0.1, 1e-6);
}

TEST(PredictionError, Guards) {
  LearningCurve unfit;
  EXPECT_THROW(prediction_error(unfit, {{32, 0.5}}), DataError);

  LearningCurve curve;
  for (const auto& [n, y] : sample_curve(1.0, 0.5, 0.0, {1, 2, 4}))
    curve.points.push_back({static_cast<int>(n), 0, y});
  curve.fit_now();
  EXPECT_THROW(prediction_error(curve, {}), ConfigError);
  EXPECT_THROW(prediction_error(curve, {{2, 0.7}}), ConfigError);  // overlaps fitted budget
}

TEST(LearningCurve, MeanPointsAverageSeedsPerBudget) {
  LearningCurve curve;
  curve.points = {{4, 0, 0.5}, {2, 0, 0.3}, {4, 1, 0.7}};
  const auto mp = curve.mean_points();
  ASSERT_EQ(mp.size(), 2u);
  EXPECT_DOUBLE_EQ(mp[0].first, 2.0);
  EXPECT_DOUBLE_EQ(mp[0].second, 0.3);
  EXPECT_DOUBLE_EQ(mp[1].first, 4.0);
  EXPECT_DOUBLE_EQ(mp[1].second, 0.6);
}

TEST(LearningCurve, CsvSidecarsIncludingDivergenceMarker) {
  LearningCurve curve;
  curve.points = {{2, 0, 0.25}, {4, 1, 0.5}};
  std::ostringstream pts;
  curve.write_points_csv(pts);
  EXPECT_EQ(pts.str(), "budget,seed,metric_value\n2,0,0.25\n4,1,0.5\n");

  std::ostringstream no_fit;
  curve.write_fit_csv(no_fit);
  EXPECT_EQ(no_fit.str(), "a,b,c,residual\n");

  curve.fit = PowerLawFit{1.0, 0.5, 0.25, 0.0, 3};
  std::ostringstream with_fit;
  curve.write_fit_csv(with_fit);
  EXPECT_EQ(with_fit.str(), "a,b,c,residual\n1,0.5,0.25,0\n");
}

TEST(CurveRequest, Validation) {
  CurveRequest req;
  req.metric = MetricKind::parse("rmse");
  req.grid = {1, 2, 4};
  req.seeds = {0};
  EXPECT_NO_THROW(req.validate());

  CurveRequest bad = req;
  bad.plan_family = Strategy::shuffle;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = req;
  bad.grid = {1, 2};
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = req;
  bad.grid = {1, 4, 2};
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = req;
  bad.seeds.clear();
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(BuildLearningCurve, CoversGridDeterministically) {
  SyntheticSpec spec;
  spec.n_users = 40;
  spec.n_items = 30;
  spec.interactions_per_user = 12;
  spec.noise_sd = 0.4;
  spec.seed = 17;
  const Dataset d = generate_synthetic(spec);
  const Split s = split(d, SplitScheme::temporal_holdout(0.25), 0);

  CurveRequest req;
  req.model.kind = ModelKind::popularity;
  req.metric = MetricKind::parse("rmse");
  req.plan_family = Strategy::random_k;
  req.grid = {1, 2, 4, 8};
  req.seeds = {0, 1, 2};

  const LearningCurve a = build_learning_curve(s, req);
  ASSERT_EQ(a.points.size(), 12u);
  std::map<int, int> per_budget;
  for (const auto& p : a.points) {
    ++per_budget[p.budget];
    EXPECT_TRUE(std::isfinite(p.value));
  }
  for (int k : req.grid) EXPECT_EQ(per_budget[k], 3);

  const LearningCurve b = build_learning_curve(s, req);
  std::ostringstream ca, cb;
  a.write_points_csv(ca);
  b.write_points_csv(cb);
  EXPECT_EQ(ca.str(), cb.str());
}

}  // namespace
}  // namespace minirec
