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
#include <set>
#include <string>
#include <vector>

#include "minirec/dataset.hpp"
#include "minirec/errors.hpp"
#include "minirec/format.hpp"
#include "minirec/prng.hpp"

namespace minirec {

enum class Strategy { full, random_k, recency, popularity, extreme_value, shuffle };

inline std::string strategy_name(Strategy s) {
  switch (s) {
    case Strategy::full: return "full";
    case Strategy::random_k: return "random";
    case Strategy::recency: return "recency";
    case Strategy::popularity: return "popularity";
    case Strategy::extreme_value: return "extreme_value";
    case Strategy::shuffle: return "shuffle";
  }
  return "?";
}

inline Strategy parse_strategy(const std::string& s) {
  if (s == "full") return Strategy::full;
  if (s == "random") return Strategy::random_k;
  if (s == "recency") return Strategy::recency;
  if (s == "popularity") return Strategy::popularity;
  if (s == "extreme_value") return Strategy::extreme_value;
  if (s == "shuffle") return Strategy::shuffle;
  throw ConfigError("plan: unknown strategy '" + s + "'");
}

/// Whether the strategy takes a per-user budget k (everything except full
/// and shuffle).
inline bool strategy_budgeted(Strategy s) {
  return s != Strategy::full && s != Strategy::shuffle;
}

/// One minimisation step: a selection strategy plus its per-user budget
/// (or shuffled fraction) and seed. Budgets are per data subject, not
/// global row counts.
struct MinimisationPlan {
  Strategy strategy = Strategy::full;
  int budget = 0;         // per-user k, budgeted strategies
  double fraction = 0.0;  // shuffle
  std::uint64_t seed = 0;

  void validate() const {
    if (strategy_budgeted(strategy) && budget < 0)
      throw ConfigError("plan: budget must be >= 0");
    if (strategy == Strategy::shuffle && (fraction < 0.0 || fraction > 1.0))
      throw ConfigError("plan: shuffle fraction must be in [0, 1]");
  }

  std::string name() const {
    if (strategy == Strategy::full) return "full";
    if (strategy == Strategy::shuffle) return "shuffle:" + format_double(fraction);
    return strategy_name(strategy) + ":" + std::to_string(budget);
  }
};

namespace detail {

// Keeps the interactions at `keep` (input order preserved).
inline Dataset subset(const Dataset& d, const std::set<std::size_t>& keep) {
  Dataset out;
  out.rating_min = d.rating_min;
  out.rating_max = d.rating_max;
  out.group_map = d.group_map;
  out.interactions.reserve(keep.size());
  for (std::size_t i : keep) out.interactions.push_back(d.interactions[i]);
  return out;
}

}  // namespace detail

/// Applies one minimisation step to a training set.
///
/// Selection strategies keep a per-user subset of the input:
///   random(k)        seeded uniform sample of min(k, profile size)
///   recency(k)       newest k by (timestamp desc, item_id asc)
///   popularity(k)    k whose items have the most ratings in the input
///                    (ties: item_id asc)
///   extreme_value(k) k maximizing |rating - user mean| (ties: timestamp
///                    desc, then item_id asc)
/// shuffle(p) instead degrades data quality at constant volume: a seeded
/// Bernoulli(p) selection of interactions is randomly paired across
/// distinct users and each pair exchanges owners, preserving every profile
/// size and the global (item, rating, timestamp) multiset exactly.
/// Unpairable leftovers stay in place.
inline Dataset apply(const MinimisationPlan& plan, const Dataset& train) {
  plan.validate();
  if (plan.strategy == Strategy::full) return train;

  if (plan.strategy == Strategy::shuffle) {
    if (train.users().size() < 2)
      throw DataError("plan: shuffle requires at least 2 users");
    Prng rng(derive_seed(plan.seed, "shuffle"));
    std::vector<std::size_t> selected;
    for (std::size_t i = 0; i < train.size(); ++i)
      if (rng.uniform01() < plan.fraction) selected.push_back(i);
    rng.shuffle(selected);

    Dataset out = train;
    std::vector<std::size_t> unpaired;
    for (std::size_t idx : selected) {
      const auto& user = out.interactions[idx].user_id;
      bool paired = false;
      for (std::size_t back = unpaired.size(); back > 0; --back) {
        const std::size_t other = unpaired[back - 1];
        if (out.interactions[other].user_id != user) {
          std::swap(out.interactions[idx].user_id, out.interactions[other].user_id);
          unpaired.erase(unpaired.begin() + static_cast<std::ptrdiff_t>(back - 1));
          paired = true;
          break;
        }
      }
      if (!paired) unpaired.push_back(idx);
    }
    // Re-align group labels with the new owners.
    for (auto& x : out.interactions) {
      auto it = out.group_map.find(x.user_id);
      x.group = it == out.group_map.end() ? std::string() : it->second;
    }
    return out;
  }

  const auto profiles = train.profiles();
  const std::size_t k = static_cast<std::size_t>(plan.budget);
  std::set<std::size_t> keep;

  std::map<std::string, int> item_counts;
  if (plan.strategy == Strategy::popularity)
    for (const auto& x : train.interactions) ++item_counts[x.item_id];

  for (const auto& [user, idxs] : profiles) {
    std::vector<std::size_t> order = idxs;
    switch (plan.strategy) {
      case Strategy::random_k: {
        Prng rng(derive_seed(plan.seed, "random:" + user));
        const auto pick = rng.sample_indices(idxs.size(), k);
        for (std::size_t p : pick) keep.insert(idxs[p]);
        continue;
      }
      case Strategy::recency:
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
          const auto& x = train.interactions[a];
          const auto& y = train.interactions[b];
          if (x.timestamp != y.timestamp) return x.timestamp > y.timestamp;
          return x.item_id < y.item_id;
        });
        break;
      case Strategy::popularity:
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
          const auto& x = train.interactions[a];
          const auto& y = train.interactions[b];
          const int ca = item_counts[x.item_id], cb = item_counts[y.item_id];
          if (ca != cb) return ca > cb;
          return x.item_id < y.item_id;
        });
        break;
      case Strategy::extreme_value: {
        double mean = 0.0;
        for (std::size_t i : idxs) mean += train.interactions[i].rating;
        mean /= static_cast<double>(idxs.size());
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
          const auto& x = train.interactions[a];
          const auto& y = train.interactions[b];
          const double da = std::fabs(x.rating - mean), db = std::fabs(y.rating - mean);
          if (da != db) return da > db;
          if (x.timestamp != y.timestamp) return x.timestamp > y.timestamp;
          return x.item_id < y.item_id;
        });
        break;
      }
      default:
        break;
    }
    for (std::size_t i = 0; i < std::min(k, order.size()); ++i) keep.insert(order[i]);
  }
  return detail::subset(train, keep);
}

/// Iterated minimisation: applies the steps left to right. A composition
/// of selection steps is itself a selection (its output is a subset of the
/// input).
inline Dataset apply(const std::vector<MinimisationPlan>& steps, const Dataset& train) {
  Dataset cur = train;
  for (const auto& step : steps) cur = apply(step, cur);
  return cur;
}

}  // namespace minirec
