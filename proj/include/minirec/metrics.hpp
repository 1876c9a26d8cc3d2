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

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "minirec/dataset.hpp"
#include "minirec/errors.hpp"
#include "minirec/format.hpp"
#include "minirec/model.hpp"
#include "minirec/prng.hpp"

namespace minirec {

enum class MetricId { rmse, mae, ndcg, hit_rate };

/// A metric selector: rmse / mae over rating predictions, ndcg@k /
/// hit_rate@k over rankings. Lower is better for the error metrics,
/// higher for the ranking metrics; `improvement` normalizes that
/// orientation so positive always means the service got better.
struct MetricKind {
  MetricId id = MetricId::rmse;
  int k = 10;  // ranking cutoff, ignored for rmse/mae

  bool is_error() const { return id == MetricId::rmse || id == MetricId::mae; }
  bool is_ranking() const { return !is_error(); }

  std::string name() const {
    switch (id) {
      case MetricId::rmse: return "rmse";
      case MetricId::mae: return "mae";
      case MetricId::ndcg: return "ndcg@" + std::to_string(k);
      case MetricId::hit_rate: return "hit_rate@" + std::to_string(k);
    }
    return "?";
  }

  /// Filename-safe tag ("ndcg@10" -> "ndcg10").
  std::string file_tag() const {
    std::string n = name();
    std::string out;
    for (char c : n)
      if (c != '@') out += c;
    return out;
  }

  /// Parses "rmse", "mae", "ndcg@10", "hit_rate@5" (default k = 10).
  static MetricKind parse(const std::string& s) {
    MetricKind m;
    std::string base = s;
    const auto at = s.find('@');
    if (at != std::string::npos) {
      base = s.substr(0, at);
      try {
        m.k = std::stoi(s.substr(at + 1));
      } catch (const std::exception&) {
        throw ConfigError("metric: bad cutoff in '" + s + "'");
      }
    }
    if (base == "rmse") m.id = MetricId::rmse;
    else if (base == "mae") m.id = MetricId::mae;
    else if (base == "ndcg") m.id = MetricId::ndcg;
    else if (base == "hit_rate") m.id = MetricId::hit_rate;
    else throw ConfigError("metric: unknown kind '" + s + "'");
    if (m.k < 1) throw ConfigError("metric: cutoff must be >= 1 in '" + s + "'");
    return m;
  }

  bool operator==(const MetricKind& o) const {
    return id == o.id && (is_error() || k == o.k);
  }
};

enum class Aggregation { global_mean, per_user, per_group };

inline std::string aggregation_name(Aggregation a) {
  switch (a) {
    case Aggregation::global_mean: return "global_mean";
    case Aggregation::per_user: return "per_user";
    case Aggregation::per_group: return "per_group";
  }
  return "?";
}

inline Aggregation parse_aggregation(const std::string& s) {
  if (s == "global_mean") return Aggregation::global_mean;
  if (s == "per_user") return Aggregation::per_user;
  if (s == "per_group") return Aggregation::per_group;
  throw ConfigError("metric: unknown aggregation '" + s + "'");
}

/// Binary-relevance NDCG@k with the log2(rank + 1) discount, ranks 1-based.
inline double ndcg_at_k(const std::vector<std::string>& ranked,
                        const std::set<std::string>& relevant, int k) {
  if (relevant.empty()) return 0.0;
  const std::size_t cutoff = std::min<std::size_t>(ranked.size(), static_cast<std::size_t>(k));
  double dcg = 0.0;
  for (std::size_t pos = 0; pos < cutoff; ++pos)
    if (relevant.count(ranked[pos])) dcg += 1.0 / std::log2(static_cast<double>(pos) + 2.0);
  const std::size_t ideal = std::min<std::size_t>(relevant.size(), static_cast<std::size_t>(k));
  double idcg = 0.0;
  for (std::size_t j = 0; j < ideal; ++j) idcg += 1.0 / std::log2(static_cast<double>(j) + 2.0);
  return dcg / idcg;
}

/// 1 if any relevant item appears in the top-k, else 0.
inline double hit_rate_at_k(const std::vector<std::string>& ranked,
                            const std::set<std::string>& relevant, int k) {
  const std::size_t cutoff = std::min<std::size_t>(ranked.size(), static_cast<std::size_t>(k));
  for (std::size_t pos = 0; pos < cutoff; ++pos)
    if (relevant.count(ranked[pos])) return 1.0;
  return 0.0;
}

struct EvalOptions {
  int negative_samples = 100;  // sampled per user for ranking metrics
  std::uint64_t seed = 0;      // negative-sampling seed
};

/// Deterministic negative sample for one user: `count` items drawn without
/// replacement from the sorted candidate pool, with a per-user stream
/// derived from (seed, user_id) so the draw does not depend on evaluation
/// order.
inline std::vector<std::string> sample_negatives(const std::vector<std::string>& pool,
                                                 std::size_t count, std::uint64_t seed,
                                                 const std::string& user_id) {
  Prng rng(derive_seed(seed, "negatives:" + user_id));
  const auto idx = rng.sample_indices(pool.size(), count);
  std::vector<std::string> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(pool[i]);
  return out;
}

/// One evaluation result. `value` is set for global_mean; `values` maps
/// user or group to its score otherwise. n_evaluated + n_skipped_cold
/// equals the number of test units (triples for rmse/mae, users for the
/// ranking metrics). Cold users are evaluated through the model's fallback
/// rather than skipped, so minimisation damage shows up in the numbers.
struct EvalReport {
  MetricKind metric;
  Aggregation aggregation = Aggregation::global_mean;
  double value = std::numeric_limits<double>::quiet_NaN();
  std::map<std::string, double> values;
  int n_evaluated = 0;
  int n_skipped_cold = 0;

  /// One number for grid summaries: `value` for global_mean, otherwise the
  /// uniform mean over scopes (macro average; for ranking metrics this
  /// coincides with the global_mean report, for rmse/mae it weights every
  /// user or group equally instead of pooling residuals).
  double summary() const {
    if (aggregation == Aggregation::global_mean) return value;
    if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
    double sum = 0.0;
    for (const auto& [scope, v] : values) sum += v;
    return sum / static_cast<double>(values.size());
  }

  /// `metric,aggregation,scope,value,n_evaluated,n_skipped` rows.
  void write_csv(std::ostream& out) const {
    out << "metric,aggregation,scope,value,n_evaluated,n_skipped\n";
    if (aggregation == Aggregation::global_mean) {
      out << metric.name() << ',' << aggregation_name(aggregation) << ",global,"
          << format_double(value) << ',' << n_evaluated << ',' << n_skipped_cold << '\n';
    } else {
      for (const auto& [scope, v] : values)
        out << metric.name() << ',' << aggregation_name(aggregation) << ',' << scope << ','
            << format_double(v) << ',' << n_evaluated << ',' << n_skipped_cold << '\n';
    }
  }
};

namespace detail {

inline const std::string& group_of(const std::string& user, const Dataset& test,
                                   const Dataset& train) {
  auto it = test.group_map.find(user);
  if (it != test.group_map.end()) return it->second;
  it = train.group_map.find(user);
  if (it != train.group_map.end()) return it->second;
  throw DataError("evaluate: user '" + user + "' has no group label");
}

}  // namespace detail

/// Evaluates a fitted model on a test set. rmse/mae run over all test
/// (user, item, rating) triples (pooled within each scope); ndcg/hit_rate
/// are computed per user over a candidate set of the user's test items
/// plus seeded sampled negatives, then averaged with uniform user weights.
inline EvalReport evaluate(const RecommenderModel& model, const Dataset& train,
                           const Dataset& test, MetricKind metric, Aggregation aggregation,
                           const EvalOptions& options = {}) {
  if (test.empty()) throw DataError("evaluate: test set is empty");
  if (aggregation == Aggregation::per_group && !test.has_groups() && !train.has_groups())
    throw DataError("evaluate: per_group aggregation on a dataset without groups");

  EvalReport report;
  report.metric = metric;
  report.aggregation = aggregation;

  if (metric.is_error()) {
    // scope key: "" = global pool, else user or group.
    std::map<std::string, std::pair<double, int>> acc;  // scope -> (sum, n)
    auto add = [&](const std::string& scope, double err) {
      auto& a = acc[scope];
      a.first += metric.id == MetricId::rmse ? err * err : std::fabs(err);
      a.second += 1;
    };
    for (const auto& x : test.interactions) {
      const double err = x.rating - model.predict(x.user_id, x.item_id);
      switch (aggregation) {
        case Aggregation::global_mean: add("", err); break;
        case Aggregation::per_user: add(x.user_id, err); break;
        case Aggregation::per_group: add(detail::group_of(x.user_id, test, train), err); break;
      }
      ++report.n_evaluated;
    }
    auto finish = [&](const std::pair<double, int>& a) {
      const double mean = a.first / static_cast<double>(a.second);
      return metric.id == MetricId::rmse ? std::sqrt(mean) : mean;
    };
    if (aggregation == Aggregation::global_mean) {
      report.value = finish(acc.at(""));
    } else {
      for (const auto& [scope, a] : acc) report.values[scope] = finish(a);
    }
    return report;
  }

  // Ranking metrics.
  std::map<std::string, std::set<std::string>> test_items;
  for (const auto& x : test.interactions) test_items[x.user_id].insert(x.item_id);
  std::map<std::string, std::set<std::string>> train_items;
  for (const auto& x : train.interactions) train_items[x.user_id].insert(x.item_id);
  std::set<std::string> catalog_set;
  for (const auto& x : train.interactions) catalog_set.insert(x.item_id);
  for (const auto& x : test.interactions) catalog_set.insert(x.item_id);

  std::map<std::string, std::pair<double, int>> acc;  // scope -> (sum, n users)
  for (const auto& [user, relevant] : test_items) {
    std::vector<std::string> pool;
    pool.reserve(catalog_set.size());
    const auto ti = train_items.find(user);
    for (const auto& item : catalog_set) {
      if (relevant.count(item)) continue;
      if (ti != train_items.end() && ti->second.count(item)) continue;
      pool.push_back(item);
    }
    std::vector<std::string> candidates(relevant.begin(), relevant.end());
    const auto negatives = sample_negatives(
        pool, static_cast<std::size_t>(options.negative_samples), options.seed, user);
    candidates.insert(candidates.end(), negatives.begin(), negatives.end());

    const auto ranked = model.rank(user, candidates, metric.k);
    const double v = metric.id == MetricId::ndcg ? ndcg_at_k(ranked, relevant, metric.k)
                                                 : hit_rate_at_k(ranked, relevant, metric.k);
    ++report.n_evaluated;
    std::string scope;
    switch (aggregation) {
      case Aggregation::global_mean: scope = ""; break;
      case Aggregation::per_user: scope = user; break;
      case Aggregation::per_group: scope = detail::group_of(user, test, train); break;
    }
    auto& a = acc[scope];
    a.first += v;
    a.second += 1;
  }
  if (aggregation == Aggregation::global_mean) {
    const auto& a = acc.at("");
    report.value = a.first / static_cast<double>(a.second);
  } else {
    for (const auto& [scope, a] : acc)
      report.values[scope] = a.first / static_cast<double>(a.second);
  }
  return report;
}

inline EvalReport evaluate(const RecommenderModel& model, const Split& split, MetricKind metric,
                           Aggregation aggregation, const EvalOptions& options = {}) {
  return evaluate(model, split.train, split.test, metric, aggregation, options);
}

/// Orientation-normalized improvement: positive always means better
/// service. Error metrics: before - after; gain metrics: after - before.
inline double improvement_value(MetricKind metric, double before, double after) {
  return metric.is_error() ? before - after : after - before;
}

/// Delta between two reports of the same metric and aggregation. Scopes
/// present on only one side are listed as skipped, never fabricated as 0.
struct Improvement {
  std::optional<double> value;          // global_mean aggregation
  std::map<std::string, double> values; // per_user / per_group
  std::vector<std::string> skipped;
};

inline Improvement improvement(const EvalReport& before, const EvalReport& after) {
  if (!(before.metric == after.metric) || before.aggregation != after.aggregation)
    throw ConfigError("improvement: reports differ in metric or aggregation");
  Improvement out;
  if (before.aggregation == Aggregation::global_mean) {
    out.value = improvement_value(before.metric, before.value, after.value);
    return out;
  }
  for (const auto& [scope, vb] : before.values) {
    auto it = after.values.find(scope);
    if (it == after.values.end())
      out.skipped.push_back(scope);
    else
      out.values[scope] = improvement_value(before.metric, vb, it->second);
  }
  for (const auto& [scope, va] : after.values) {
    (void)va;
    if (!before.values.count(scope)) out.skipped.push_back(scope);
  }
  return out;
}

}  // namespace minirec
