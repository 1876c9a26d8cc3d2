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
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "minirec/dataset.hpp"
#include "minirec/errors.hpp"
#include "minirec/prng.hpp"

namespace minirec {

/// Recipe for a latent-factor rating dataset with controllable group
/// structure. Ratings come from dot(user_vec, item_vec) + noise, min-max
/// rescaled to [1, 5]. The first listed group is the reference; each later
/// group's user-vector mean is displaced by `group_preference_shift` along
/// its own latent axis, which gives groups genuinely different preferences.
struct SyntheticSpec {
  int n_users = 100;
  int n_items = 50;
  int latent_dim = 4;
  std::vector<std::pair<std::string, double>> group_fractions;  // empty = no groups
  double group_preference_shift = 0.0;
  double noise_sd = 0.0;
  int interactions_per_user = 10;
  std::uint64_t seed = 0;

  void validate() const {
    if (n_users < 1) throw ConfigError("synthetic: n_users must be >= 1");
    if (n_items < 1) throw ConfigError("synthetic: n_items must be >= 1");
    if (latent_dim < 1) throw ConfigError("synthetic: latent_dim must be >= 1");
    if (interactions_per_user < 1)
      throw ConfigError("synthetic: interactions_per_user must be >= 1");
    if (interactions_per_user > n_items)
      throw ConfigError("synthetic: interactions_per_user exceeds n_items");
    if (noise_sd < 0.0) throw ConfigError("synthetic: noise_sd must be >= 0");
    if (group_preference_shift < 0.0)
      throw ConfigError("synthetic: group_preference_shift must be >= 0");
    if (!group_fractions.empty()) {
      double sum = 0.0;
      for (const auto& [label, f] : group_fractions) {
        if (label.empty()) throw ConfigError("synthetic: empty group label");
        if (f < 0.0) throw ConfigError("synthetic: negative group fraction");
        sum += f;
      }
      if (std::fabs(sum - 1.0) > 1e-9)
        throw ConfigError("synthetic: group fractions must sum to 1");
    }
  }
};

namespace detail {

inline std::string padded_id(char prefix, int index, int total) {
  int width = 1;
  for (int t = total - 1; t >= 10; t /= 10) ++width;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%c%0*d", prefix, width, index);
  return buf;
}

}  // namespace detail

/// Deterministic for a fixed spec: all draws flow from one Prng stream in a
/// fixed order (item vectors, then per user: vector, item sample,
/// timestamps, noise). Ids are zero-padded so lexicographic order equals
/// numeric order.
inline Dataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  Prng rng(spec.seed);

  const int d = spec.latent_dim;
  std::vector<std::vector<double>> item_vec(spec.n_items, std::vector<double>(d));
  for (auto& q : item_vec)
    for (double& v : q) v = rng.normal();

  // Group of user index i: cumulative-fraction boundary buckets.
  std::vector<int> group_of(spec.n_users, -1);
  if (!spec.group_fractions.empty()) {
    double cum = 0.0;
    int start = 0;
    for (std::size_t g = 0; g < spec.group_fractions.size(); ++g) {
      cum += spec.group_fractions[g].second;
      int end = (g + 1 == spec.group_fractions.size())
                    ? spec.n_users
                    : static_cast<int>(std::floor(cum * spec.n_users + 0.5));
      for (int i = start; i < end && i < spec.n_users; ++i) group_of[i] = static_cast<int>(g);
      start = end;
    }
  }

  struct Raw {
    int user, item;
    std::int64_t ts;
    double score;
  };
  std::vector<Raw> raws;
  raws.reserve(static_cast<std::size_t>(spec.n_users) * spec.interactions_per_user);

  for (int u = 0; u < spec.n_users; ++u) {
    std::vector<double> p(d);
    for (double& v : p) v = rng.normal();
    if (group_of[u] > 0)
      p[(group_of[u] - 1) % d] += spec.group_preference_shift;

    const auto chosen = rng.sample_indices(static_cast<std::size_t>(spec.n_items),
                                           static_cast<std::size_t>(spec.interactions_per_user));
    std::vector<std::int64_t> ts(chosen.size());
    for (std::size_t i = 0; i < ts.size(); ++i) ts[i] = static_cast<std::int64_t>(i) + 1;
    rng.shuffle(ts);

    for (std::size_t i = 0; i < chosen.size(); ++i) {
      double dot = 0.0;
      const auto& q = item_vec[chosen[i]];
      for (int f = 0; f < d; ++f) dot += p[f] * q[f];
      const double score = dot + spec.noise_sd * rng.normal();
      raws.push_back({u, static_cast<int>(chosen[i]), ts[i], score});
    }
  }

  double lo = raws.front().score, hi = lo;
  for (const auto& r : raws) {
    lo = std::min(lo, r.score);
    hi = std::max(hi, r.score);
  }
  const double span = hi - lo;

  Dataset out;
  out.rating_min = 1.0;
  out.rating_max = 5.0;
  out.interactions.reserve(raws.size());
  for (const auto& r : raws) {
    Interaction x;
    x.user_id = detail::padded_id('u', r.user, spec.n_users);
    x.item_id = detail::padded_id('i', r.item, spec.n_items);
    x.timestamp = r.ts;
    const double scaled = span < 1e-12 ? 3.0 : 1.0 + 4.0 * (r.score - lo) / span;
    x.rating = std::min(5.0, std::max(1.0, scaled));
    if (group_of[r.user] >= 0) {
      x.group = spec.group_fractions[group_of[r.user]].first;
      out.group_map[x.user_id] = x.group;
    }
    out.interactions.push_back(std::move(x));
  }
  return out;
}

}  // namespace minirec
