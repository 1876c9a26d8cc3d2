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
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "minirec/format.hpp"
#include "minirec/model.hpp"
#include "minirec/popularity.hpp"

namespace minirec {

/// Item-based neighborhood model. Similarities are cosine over the item
/// co-rating vectors, or adjusted cosine (ratings mean-centered per user);
/// norms run over each item's full rater set, numerators over co-raters.
/// A prediction is the similarity-weighted mean of the user's ratings on
/// the `neighbors` most similar (positively similar) items they rated,
/// falling back to the popularity score when no such item exists.
class ItemKnnModel : public RecommenderModel {
 public:
  ItemKnnModel(const Dataset& train, const ModelConfig& config, std::uint64_t seed)
      : RecommenderModel(config, seed) {
    config.validate();
    if (train.empty()) throw DataError("item_knn: training set is empty");
    rating_min_ = train.rating_min;
    rating_max_ = train.rating_max;
    fallback_.build(train, config.damping);

    for (const auto& x : train.interactions)
      if (item_index_.emplace(x.item_id, item_ids_.size()).second)
        item_ids_.push_back(x.item_id);

    const bool adjusted = config.similarity == Similarity::adjusted_cosine;
    std::map<std::string, double> user_mean;
    if (adjusted) {
      std::map<std::string, std::pair<double, int>> acc;
      for (const auto& x : train.interactions) {
        auto& a = acc[x.user_id];
        a.first += x.rating;
        a.second += 1;
      }
      for (const auto& [user, a] : acc) user_mean[user] = a.first / a.second;
    }

    std::vector<double> norm_sq(item_ids_.size(), 0.0);
    for (const auto& x : train.interactions) {
      const double r = adjusted ? x.rating - user_mean[x.user_id] : x.rating;
      const std::size_t i = item_index_[x.item_id];
      norm_sq[i] += r * r;
      profiles_[x.user_id].push_back({i, x.rating, r});
    }

    // Co-rating dot products, accumulated per user profile.
    std::unordered_map<std::uint64_t, double> dots;
    for (const auto& [user, profile] : profiles_) {
      (void)user;
      for (std::size_t a = 0; a < profile.size(); ++a)
        for (std::size_t b = a + 1; b < profile.size(); ++b) {
          const auto& pa = profile[a];
          const auto& pb = profile[b];
          if (pa.item == pb.item) continue;
          dots[pair_key(pa.item, pb.item)] += pa.centered * pb.centered;
        }
    }
    sims_.reserve(dots.size());
    for (const auto& [key, dot] : dots) {
      const std::size_t i = static_cast<std::size_t>(key >> 32);
      const std::size_t j = static_cast<std::size_t>(key & 0xffffffffULL);
      const double denom = std::sqrt(norm_sq[i]) * std::sqrt(norm_sq[j]);
      sims_[key] = denom > 0.0 ? dot / denom : 0.0;
    }
    cost_.similarity_ops = sims_.size();
  }

  double predict(const std::string& user_id, const std::string& item_id) const override {
    const auto target = item_index_.find(item_id);
    const auto prof = profiles_.find(user_id);
    if (target == item_index_.end() || prof == profiles_.end())
      return clip(fallback_.score(item_id));

    // (similarity, item index, rating) for positively similar rated items.
    std::vector<std::tuple<double, std::size_t, double>> cands;
    for (const auto& e : prof->second) {
      if (e.item == target->second) continue;
      const auto it = sims_.find(pair_key(e.item, target->second));
      if (it == sims_.end() || it->second <= 0.0) continue;
      cands.emplace_back(it->second, e.item, e.rating);
    }
    if (cands.empty()) return clip(fallback_.score(item_id));

    std::sort(cands.begin(), cands.end(), [&](const auto& a, const auto& b) {
      if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
      return item_ids_[std::get<1>(a)] < item_ids_[std::get<1>(b)];
    });
    if (cands.size() > static_cast<std::size_t>(config_.neighbors))
      cands.resize(static_cast<std::size_t>(config_.neighbors));

    double num = 0.0, den = 0.0;
    for (const auto& [sim, item, rating] : cands) {
      (void)item;
      num += sim * rating;
      den += sim;
    }
    return clip(num / den);
  }

  /// Similarity between two items (0 when never co-rated). Test hook.
  double similarity(const std::string& item_a, const std::string& item_b) const {
    const auto a = item_index_.find(item_a);
    const auto b = item_index_.find(item_b);
    if (a == item_index_.end() || b == item_index_.end() || a->second == b->second) return 0.0;
    const auto it = sims_.find(pair_key(a->second, b->second));
    return it == sims_.end() ? 0.0 : it->second;
  }

  void dump_csv(std::ostream& out) const override {
    out << "param,key,value\n";
    out << "global_mean,," << format_double(fallback_.global_mean) << '\n';
    for (const auto& [item, b] : fallback_.item_bias)
      out << "item_bias," << item << ',' << format_double(b) << '\n';
    std::map<std::pair<std::string, std::string>, double> ordered;
    for (const auto& [key, sim] : sims_) {
      const auto& i = item_ids_[static_cast<std::size_t>(key >> 32)];
      const auto& j = item_ids_[static_cast<std::size_t>(key & 0xffffffffULL)];
      ordered[{std::min(i, j), std::max(i, j)}] = sim;
    }
    for (const auto& [pair, sim] : ordered)
      out << "similarity," << pair.first << ':' << pair.second << ','
          << format_double(sim) << '\n';
  }

 private:
  struct ProfileEntry {
    std::size_t item;
    double rating;    // raw rating (prediction weight target)
    double centered;  // rating, mean-centered for adjusted cosine
  };

  static std::uint64_t pair_key(std::size_t a, std::size_t b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint64_t>(b);
  }

  PopularityTable fallback_;
  std::vector<std::string> item_ids_;
  std::map<std::string, std::size_t> item_index_;
  std::map<std::string, std::vector<ProfileEntry>> profiles_;
  std::unordered_map<std::uint64_t, double> sims_;
};

}  // namespace minirec
