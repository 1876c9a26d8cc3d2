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

#include "minirec/errors.hpp"

namespace minirec {

/// One (user, item, rating, timestamp) event, optionally tagged with the
/// user's demographic group. The atom that minimisation strategies select
/// over and that withdrawal removes.
struct Interaction {
  std::string user_id;
  std::string item_id;
  double rating = 0.0;
  std::int64_t timestamp = 0;
  std::string group;  // empty = no group label
};

/// An ordered interaction log with explicit rating bounds and a user->group
/// map. Immutable by convention once constructed; every operation in the
/// library returns new datasets instead of mutating.
struct Dataset {
  std::vector<Interaction> interactions;
  double rating_min = 1.0;
  double rating_max = 5.0;
  std::map<std::string, std::string> group_map;  // user_id -> group

  std::size_t size() const { return interactions.size(); }
  bool empty() const { return interactions.empty(); }
  bool has_groups() const { return !group_map.empty(); }

  /// Sorted distinct user ids.
  std::vector<std::string> users() const {
    std::set<std::string> s;
    for (const auto& x : interactions) s.insert(x.user_id);
    return {s.begin(), s.end()};
  }

  /// Sorted distinct item ids.
  std::vector<std::string> items() const {
    std::set<std::string> s;
    for (const auto& x : interactions) s.insert(x.item_id);
    return {s.begin(), s.end()};
  }

  /// Interaction indices per user, in input order.
  std::map<std::string, std::vector<std::size_t>> profiles() const {
    std::map<std::string, std::vector<std::size_t>> p;
    for (std::size_t i = 0; i < interactions.size(); ++i)
      p[interactions[i].user_id].push_back(i);
    return p;
  }

  /// Distinct group labels present in the group map.
  std::set<std::string> groups() const {
    std::set<std::string> g;
    for (const auto& [user, group] : group_map) {
      (void)user;
      g.insert(group);
    }
    return g;
  }
};

/// Collapses duplicate (user, item) pairs, keeping the interaction with the
/// latest timestamp (ties: the later occurrence in input order wins).
/// Output preserves the input order of the surviving interactions.
inline Dataset deduplicate(const Dataset& d) {
  std::map<std::pair<std::string, std::string>, std::size_t> latest;
  for (std::size_t i = 0; i < d.interactions.size(); ++i) {
    const auto& x = d.interactions[i];
    auto key = std::make_pair(x.user_id, x.item_id);
    auto it = latest.find(key);
    if (it == latest.end() || d.interactions[it->second].timestamp <= x.timestamp)
      latest[key] = i;
  }
  std::vector<std::size_t> keep;
  keep.reserve(latest.size());
  for (const auto& [key, idx] : latest) {
    (void)key;
    keep.push_back(idx);
  }
  std::sort(keep.begin(), keep.end());
  Dataset out;
  out.rating_min = d.rating_min;
  out.rating_max = d.rating_max;
  out.group_map = d.group_map;
  out.interactions.reserve(keep.size());
  for (std::size_t idx : keep) out.interactions.push_back(d.interactions[idx]);
  return out;
}

enum class SplitSchemeKind { temporal_holdout, leave_last_k };

struct SplitScheme {
  SplitSchemeKind kind = SplitSchemeKind::leave_last_k;
  double fraction = 0.2;  // temporal_holdout
  int k = 1;              // leave_last_k

  static SplitScheme temporal_holdout(double fraction) {
    return {SplitSchemeKind::temporal_holdout, fraction, 0};
  }
  static SplitScheme leave_last_k(int k) {
    return {SplitSchemeKind::leave_last_k, 0.0, k};
  }
};

/// A train/test partition. Train and test are disjoint as (user, item)
/// pairs, and per user every test timestamp >= every train timestamp.
struct Split {
  Dataset train;
  Dataset test;
  SplitScheme scheme;
  std::uint64_t seed = 0;
};

namespace detail {

// Total order for "most recent last": (timestamp asc, item_id asc).
inline bool older_than(const Interaction& a, const Interaction& b) {
  if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
  return a.item_id < b.item_id;
}

}  // namespace detail

/// Deterministic per-user temporal split of a deduplicated dataset.
///
/// temporal_holdout(f): the newest floor(f * profile_size) interactions of
/// each user go to test, capped so each user keeps at least one training
/// interaction. leave_last_k(k): the newest k go to test; users with fewer
/// than k+1 interactions are an error.
inline Split split(const Dataset& dataset, SplitScheme scheme, std::uint64_t seed) {
  const Dataset dedup = deduplicate(dataset);
  if (dedup.empty()) throw DataError("split: dataset is empty");
  if (scheme.kind == SplitSchemeKind::temporal_holdout &&
      (scheme.fraction < 0.0 || scheme.fraction > 1.0))
    throw ConfigError("split: temporal_holdout fraction must be in [0, 1]");
  if (scheme.kind == SplitSchemeKind::leave_last_k && scheme.k < 1)
    throw ConfigError("split: leave_last_k requires k >= 1");

  auto profiles = dedup.profiles();
  if (scheme.kind == SplitSchemeKind::leave_last_k) {
    std::vector<std::string> offenders;
    for (const auto& [user, idxs] : profiles)
      if (idxs.size() < static_cast<std::size_t>(scheme.k) + 1)
        offenders.push_back(user);
    if (!offenders.empty()) {
      std::string msg = "split: users with too few interactions for leave_last_k(" +
                        std::to_string(scheme.k) + "):";
      for (const auto& u : offenders) msg += " " + u;
      throw DataError(msg);
    }
  }

  std::set<std::size_t> test_idx;
  for (auto& [user, idxs] : profiles) {
    (void)user;
    std::vector<std::size_t> order = idxs;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return detail::older_than(dedup.interactions[a], dedup.interactions[b]);
    });
    std::size_t n_test;
    if (scheme.kind == SplitSchemeKind::leave_last_k) {
      n_test = static_cast<std::size_t>(scheme.k);
    } else {
      n_test = static_cast<std::size_t>(
          std::floor(scheme.fraction * static_cast<double>(order.size())));
      if (n_test >= order.size()) n_test = order.size() - 1;
    }
    for (std::size_t i = order.size() - n_test; i < order.size(); ++i)
      test_idx.insert(order[i]);
  }
  if (test_idx.empty()) throw DataError("split: resulting test set is empty");

  Split out;
  out.scheme = scheme;
  out.seed = seed;
  out.train.rating_min = out.test.rating_min = dedup.rating_min;
  out.train.rating_max = out.test.rating_max = dedup.rating_max;
  out.train.group_map = out.test.group_map = dedup.group_map;
  for (std::size_t i = 0; i < dedup.interactions.size(); ++i) {
    if (test_idx.count(i))
      out.test.interactions.push_back(dedup.interactions[i]);
    else
      out.train.interactions.push_back(dedup.interactions[i]);
  }
  return out;
}

}  // namespace minirec
