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
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "minirec/curve.hpp"
#include "minirec/dataset.hpp"
#include "minirec/errors.hpp"
#include "minirec/format.hpp"
#include "minirec/metrics.hpp"
#include "minirec/minimisation.hpp"
#include "minirec/model.hpp"
#include "minirec/models.hpp"
#include "minirec/parallel.hpp"
#include "minirec/prng.hpp"

namespace minirec {

/// Pearson correlation; NaN when either side has zero variance.
inline double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw ConfigError("pearson: length mismatch");
  const auto n = static_cast<double>(xs.size());
  if (xs.size() < 2) throw ConfigError("pearson: need >= 2 samples");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  return sxy / std::sqrt(sxx * syy);
}

/// Two-sided permutation test for the null r = 0: shuffles one side P
/// times and counts |r_perm| >= |r_obs|. Returns (1 + count) / (P + 1),
/// so the value lies in [1/(P+1), 1] and is deterministic for a fixed
/// seed.
inline double permutation_pvalue(const std::vector<double>& xs, const std::vector<double>& ys,
                                 int permutations, std::uint64_t seed) {
  if (permutations < 1) throw ConfigError("permutation test: permutations must be >= 1");
  const double observed = std::fabs(pearson(xs, ys));
  Prng rng(derive_seed(seed, "permutation"));
  std::vector<double> shuffled = ys;
  int hits = 0;
  for (int p = 0; p < permutations; ++p) {
    rng.shuffle(shuffled);
    const double r = std::fabs(pearson(xs, shuffled));
    if (std::isfinite(r) && r >= observed - 1e-15) ++hits;
  }
  return static_cast<double>(1 + hits) / static_cast<double>(permutations + 1);
}

enum class Verdict { compatible, incompatible, inconclusive };

inline std::string verdict_name(Verdict v) {
  switch (v) {
    case Verdict::compatible: return "compatible";
    case Verdict::incompatible: return "incompatible";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "?";
}

/// Decision thresholds, always echoed in the report. The correlation
/// criterion itself comes with no canonical cutoffs; these are explicit,
/// audited parameters.
struct CompatThresholds {
  double r_min = 0.5;
  double p_max = 0.05;
  int permutations = 1000;

  void validate() const {
    if (r_min <= 0.0 || r_min > 1.0) throw ConfigError("compat: r_min must be in (0, 1]");
    if (p_max <= 0.0 || p_max > 1.0) throw ConfigError("compat: p_max must be in (0, 1]");
    if (permutations < 1) throw ConfigError("compat: permutations must be >= 1");
  }
};

/// compatible requires both strong positive correlation and permutation
/// significance. A strong negative correlation is incompatible on its
/// own: significance is a guard against declaring compatibility, not a
/// prerequisite for rejecting it. Everything else is inconclusive.
inline Verdict decide_verdict(double r, double p, const CompatThresholds& t) {
  if (!std::isfinite(r)) return Verdict::inconclusive;
  if (r >= t.r_min && p <= t.p_max) return Verdict::compatible;
  if (r <= -t.r_min) return Verdict::incompatible;
  return Verdict::inconclusive;
}

struct CompatibilityReport {
  std::string purpose_a;
  std::string purpose_b;
  std::vector<std::pair<double, double>> samples;  // (delta_a, delta_b)
  double pearson_r = 0.0;
  double permutation_p = 1.0;
  Verdict verdict = Verdict::inconclusive;
  bool zero_variance = false;
  CompatThresholds thresholds;
  std::uint64_t seed = 0;

  void write_csv(std::ostream& os) const {
    os << "# purpose_a=" << purpose_a << " purpose_b=" << purpose_b << "\n";
    os << "# r_min=" << format_double(thresholds.r_min)
       << " p_max=" << format_double(thresholds.p_max)
       << " permutations=" << thresholds.permutations << " seed=" << seed << "\n";
    os << "# pearson_r=" << format_double(pearson_r)
       << " permutation_p=" << format_double(permutation_p) << " verdict=" << verdict_name(verdict)
       << (zero_variance ? " zero_variance=1" : "") << "\n";
    os << "delta_a,delta_b\n";
    for (const auto& [da, db] : samples)
      os << format_double(da) << "," << format_double(db) << "\n";
  }
};

/// Correlates two pre-computed improvement series and decides the
/// verdict. Zero variance on either side leaves r/p at their neutral
/// values and the verdict inconclusive.
inline CompatibilityReport analyze_pairs(const std::string& purpose_a,
                                         const std::string& purpose_b,
                                         std::vector<std::pair<double, double>> samples,
                                         const CompatThresholds& thresholds,
                                         std::uint64_t seed) {
  thresholds.validate();
  if (samples.size() < 8)
    throw ConfigError("compatibility: got " + std::to_string(samples.size()) +
                      " paired samples, need >= 8");
  CompatibilityReport rep;
  rep.purpose_a = purpose_a;
  rep.purpose_b = purpose_b;
  rep.samples = std::move(samples);
  rep.thresholds = thresholds;
  rep.seed = seed;
  std::vector<double> xs, ys;
  xs.reserve(rep.samples.size());
  ys.reserve(rep.samples.size());
  for (const auto& [a, b] : rep.samples) {
    xs.push_back(a);
    ys.push_back(b);
  }
  const double r = pearson(xs, ys);
  if (!std::isfinite(r)) {
    rep.zero_variance = true;
    rep.pearson_r = 0.0;
    rep.permutation_p = 1.0;
    rep.verdict = Verdict::inconclusive;
    return rep;
  }
  rep.pearson_r = r;
  rep.permutation_p = permutation_pvalue(xs, ys, thresholds.permutations, seed);
  rep.verdict = decide_verdict(rep.pearson_r, rep.permutation_p, thresholds);
  return rep;
}

/// One purpose under test: a model plus the metric that operationalizes
/// it. item_prefix, when set, restricts the purpose to its own item
/// namespace (both train and test) so unrelated catalogs can share one
/// dataset.
struct CompatTask {
  std::string label;
  ModelConfig model;
  MetricKind metric;
  std::string item_prefix;

  Dataset restrict(const Dataset& d) const {
    if (item_prefix.empty()) return d;
    Dataset out;
    out.rating_min = d.rating_min;
    out.rating_max = d.rating_max;
    out.group_map = d.group_map;
    for (const auto& x : d.interactions)
      if (x.item_id.rfind(item_prefix, 0) == 0) out.interactions.push_back(x);
    return out;
  }
};

/// A shared data change both purposes observe: either a minimisation
/// step or dropping a seeded fraction of users outright.
struct Perturbation {
  enum class Kind { plan, drop_users };
  Kind kind = Kind::plan;
  MinimisationPlan plan;
  double fraction = 0.0;  // drop_users

  static Perturbation with_plan(const MinimisationPlan& p) {
    Perturbation out;
    out.kind = Kind::plan;
    out.plan = p;
    return out;
  }
  static Perturbation dropping_users(double fraction) {
    if (fraction <= 0.0 || fraction >= 1.0)
      throw ConfigError("perturbation: drop fraction must be in (0, 1)");
    Perturbation out;
    out.kind = Kind::drop_users;
    out.fraction = fraction;
    return out;
  }

  std::string name() const {
    if (kind == Kind::plan) return plan.name();
    return "drop_users:" + format_double(fraction);
  }

  Dataset apply_to(const Dataset& train, std::uint64_t seed) const {
    if (kind == Kind::plan) {
      MinimisationPlan seeded = plan;
      seeded.seed = seed;
      return apply(seeded, train);
    }
    const auto users = train.users();
    const auto n_drop = static_cast<std::size_t>(
        std::floor(fraction * static_cast<double>(users.size())));
    if (n_drop >= users.size())
      throw DataError("perturbation: dropping every user");
    std::vector<std::string> ordered(users.begin(), users.end());
    Prng rng(derive_seed(seed, "drop_users"));
    const auto picks = rng.sample_indices(ordered.size(), n_drop);
    std::set<std::string> dropped;
    for (std::size_t i : picks) dropped.insert(ordered[i]);
    Dataset out;
    out.rating_min = train.rating_min;
    out.rating_max = train.rating_max;
    out.group_map = train.group_map;
    for (const auto& x : train.interactions)
      if (!dropped.count(x.user_id)) out.interactions.push_back(x);
    return out;
  }
};

namespace detail {

// Scalar metric value of a task on (train, test), fallback-safe.
inline double task_value(const CompatTask& task, const Dataset& train, const Dataset& test,
                         std::uint64_t fit_seed, std::uint64_t eval_seed,
                         int negative_samples) {
  const Dataset tr = task.restrict(train);
  const Dataset te = task.restrict(test);
  if (tr.size() == 0 || te.size() == 0)
    throw DataError("compatibility: task '" + task.label +
                    "' has an empty train or test side after restriction");
  const auto model = fit_model(task.model, tr, fit_seed);
  EvalOptions opts;
  opts.negative_samples = negative_samples;
  opts.seed = eval_seed;
  return evaluate(*model, tr, te, task.metric, Aggregation::global_mean, opts).value;
}

}  // namespace detail

/// The compatible-use analyzer. For every (seed, perturbation) cell both
/// tasks are retrained on the identically perturbed train set; their
/// orientation-normalized improvements over the unperturbed baseline form
/// one paired sample. Pearson r over the pairs plus a seeded permutation
/// test yields the verdict.
inline CompatibilityReport compatibility(const Split& split, const CompatTask& task_a,
                                         const CompatTask& task_b,
                                         const std::vector<Perturbation>& schedule,
                                         const std::vector<std::uint64_t>& seeds,
                                         const CompatThresholds& thresholds,
                                         int negative_samples = 100) {
  thresholds.validate();
  if (schedule.empty()) throw ConfigError("compatibility: empty perturbation schedule");
  if (seeds.empty()) throw ConfigError("compatibility: need >= 1 seed");
  const std::size_t n_cells = schedule.size() * seeds.size();
  if (n_cells < 8)
    throw ConfigError("compatibility: schedule produces " + std::to_string(n_cells) +
                      " paired samples, need >= 8");

  std::vector<std::pair<double, double>> samples(n_cells);
  detail::parallel_for(seeds.size(), [&](std::size_t si) {
    const std::uint64_t seed = seeds[si];
    const std::uint64_t eval_a = derive_seed(seed, "eval:" + task_a.label);
    const std::uint64_t eval_b = derive_seed(seed, "eval:" + task_b.label);
    const double base_a = detail::task_value(task_a, split.train, split.test,
                                             derive_seed(seed, "fit:" + task_a.label), eval_a,
                                             negative_samples);
    const double base_b = detail::task_value(task_b, split.train, split.test,
                                             derive_seed(seed, "fit:" + task_b.label), eval_b,
                                             negative_samples);
    for (std::size_t pi = 0; pi < schedule.size(); ++pi) {
      const Dataset perturbed =
          schedule[pi].apply_to(split.train, derive_seed(seed, "perturb:" + schedule[pi].name()));
      const double after_a = detail::task_value(task_a, perturbed, split.test,
                                                derive_seed(seed, "fit:" + task_a.label), eval_a,
                                                negative_samples);
      const double after_b = detail::task_value(task_b, perturbed, split.test,
                                                derive_seed(seed, "fit:" + task_b.label), eval_b,
                                                negative_samples);
      samples[si * schedule.size() + pi] = {improvement_value(task_a.metric, base_a, after_a),
                                            improvement_value(task_b.metric, base_b, after_b)};
    }
  });
  return analyze_pairs(task_a.label, task_b.label, std::move(samples), thresholds,
                       seeds.front());
}

struct DisparityReport {
  std::string plan;
  std::string metric;
  std::map<std::string, double> group_delta;            // seed-averaged improvement
  std::vector<std::map<std::string, double>> per_seed;  // one map per seed, input order
  std::map<std::string, int> group_test_users;
  double disparity = 0.0;  // max over groups - min over groups
  std::vector<std::uint64_t> seeds;

  void write_csv(std::ostream& os) const {
    os << "# plan=" << plan << " metric=" << metric << " disparity=" << format_double(disparity)
       << "\n";
    os << "# seeds=";
    for (std::size_t i = 0; i < seeds.size(); ++i) os << (i ? "," : "") << seeds[i];
    os << "\n";
    os << "group,delta,test_users\n";
    for (const auto& [g, d] : group_delta)
      os << g << "," << format_double(d) << "," << group_test_users.at(g) << "\n";
  }
};

/// Per-group mean improvement when the train set is minimised (negative
/// values are losses), averaged over seeds; disparity is the spread of
/// those averages across groups.
inline DisparityReport disparity_under_minimisation(const Split& split,
                                                    const ModelConfig& model_config,
                                                    const MetricKind& metric,
                                                    const MinimisationPlan& plan,
                                                    const std::vector<std::uint64_t>& seeds,
                                                    int negative_samples = 100) {
  plan.validate();
  model_config.validate();
  if (seeds.empty()) throw ConfigError("disparity: need >= 1 seed");
  if (!split.train.has_groups()) throw DataError("disparity: dataset has no group labels");
  std::set<std::string> groups;
  for (const auto& [user, group] : split.train.group_map) groups.insert(group);
  std::map<std::string, int> test_users;
  for (const auto& g : groups) test_users[g] = 0;
  for (const auto& user : split.test.users()) {
    const auto it = split.test.group_map.find(user);
    if (it != split.test.group_map.end()) ++test_users[it->second];
  }
  for (const auto& [g, n] : test_users)
    if (n == 0) throw DataError("disparity: group '" + g + "' has 0 test users");

  DisparityReport rep;
  rep.plan = plan.name();
  rep.metric = metric.name();
  rep.group_test_users = test_users;
  rep.seeds = seeds;
  rep.per_seed.resize(seeds.size());

  detail::parallel_for(seeds.size(), [&](std::size_t si) {
    const std::uint64_t seed = seeds[si];
    EvalOptions opts;
    opts.negative_samples = negative_samples;
    opts.seed = detail::cell_eval_seed(seed);
    const auto full_model = fit_model(model_config, split.train, detail::cell_fit_seed(seed));
    const EvalReport full = evaluate(*full_model, split.train, split.test, metric,
                                     Aggregation::per_group, opts);
    MinimisationPlan seeded = plan;
    seeded.seed = detail::cell_plan_seed(seed);
    const Dataset reduced = apply(seeded, split.train);
    const auto min_model = fit_model(model_config, reduced, detail::cell_fit_seed(seed));
    const EvalReport minimised =
        evaluate(*min_model, reduced, split.test, metric, Aggregation::per_group, opts);
    std::map<std::string, double> deltas;
    for (const auto& [g, before] : full.values) {
      const auto it = minimised.values.find(g);
      if (it != minimised.values.end())
        deltas[g] = improvement_value(metric, before, it->second);
    }
    rep.per_seed[si] = std::move(deltas);
  });

  std::map<std::string, std::pair<double, int>> acc;
  for (const auto& per : rep.per_seed)
    for (const auto& [g, d] : per) {
      acc[g].first += d;
      ++acc[g].second;
    }
  for (const auto& [g, sc] : acc)
    rep.group_delta[g] = sc.first / static_cast<double>(sc.second);
  if (!rep.group_delta.empty()) {
    double lo = rep.group_delta.begin()->second, hi = lo;
    for (const auto& [g, d] : rep.group_delta) {
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
    rep.disparity = hi - lo;
  }
  return rep;
}

struct CrossUserImpact {
  std::map<std::string, double> delta;  // remaining test users only
  double mean_abs = 0.0;
  double max_abs = 0.0;

  void write_csv(std::ostream& os) const {
    os << "# mean_abs=" << format_double(mean_abs) << " max_abs=" << format_double(max_abs)
       << "\n";
    os << "user_id,delta\n";
    for (const auto& [u, d] : delta) os << u << "," << format_double(d) << "\n";
  }
};

/// Removing one user's train data and retraining shifts the metric for
/// everyone else; this measures that spillover per remaining test user.
inline CrossUserImpact cross_user_impact(const Split& split, const ModelConfig& model_config,
                                         const MetricKind& metric,
                                         const std::set<std::string>& removed_users,
                                         std::uint64_t seed, int negative_samples = 100) {
  model_config.validate();
  Dataset reduced;
  reduced.rating_min = split.train.rating_min;
  reduced.rating_max = split.train.rating_max;
  reduced.group_map = split.train.group_map;
  for (const auto& x : split.train.interactions)
    if (!removed_users.count(x.user_id)) reduced.interactions.push_back(x);
  if (reduced.size() == 0) throw DataError("cross_user_impact: removal empties the train set");

  EvalOptions opts;
  opts.negative_samples = negative_samples;
  opts.seed = detail::cell_eval_seed(seed);
  const auto before_model = fit_model(model_config, split.train, detail::cell_fit_seed(seed));
  const EvalReport before = evaluate(*before_model, split.train, split.test, metric,
                                     Aggregation::per_user, opts);
  const auto after_model = fit_model(model_config, reduced, detail::cell_fit_seed(seed));
  const EvalReport after =
      evaluate(*after_model, reduced, split.test, metric, Aggregation::per_user, opts);

  CrossUserImpact impact;
  for (const auto& [user, b] : before.values) {
    if (removed_users.count(user)) continue;
    const auto it = after.values.find(user);
    if (it == after.values.end()) continue;
    const double d = improvement_value(metric, b, it->second);
    impact.delta[user] = d;
    impact.mean_abs += std::fabs(d);
    impact.max_abs = std::max(impact.max_abs, std::fabs(d));
  }
  if (!impact.delta.empty()) impact.mean_abs /= static_cast<double>(impact.delta.size());
  return impact;
}

}  // namespace minirec
