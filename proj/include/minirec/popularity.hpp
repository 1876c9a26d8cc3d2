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

#include <map>
#include <string>

#include "minirec/format.hpp"
#include "minirec/model.hpp"

namespace minirec {

/// Global mean plus damped item bias: score(i) = mu + sum_i(r - mu)/(n_i + beta).
/// Shared between the popularity model and the cold-start fallback of the
/// personalized models.
struct PopularityTable {
  double global_mean = 0.0;
  std::map<std::string, double> item_bias;

  void build(const Dataset& train, double damping) {
    item_bias.clear();
    double sum = 0.0;
    for (const auto& x : train.interactions) sum += x.rating;
    global_mean = sum / static_cast<double>(train.size());

    std::map<std::string, std::pair<double, int>> acc;  // item -> (sum(r - mu), n)
    for (const auto& x : train.interactions) {
      auto& a = acc[x.item_id];
      a.first += x.rating - global_mean;
      a.second += 1;
    }
    for (const auto& [item, a] : acc)
      item_bias[item] = a.first / (static_cast<double>(a.second) + damping);
  }

  double score(const std::string& item_id) const {
    auto it = item_bias.find(item_id);
    return global_mean + (it == item_bias.end() ? 0.0 : it->second);
  }
};

/// The unpersonalized baseline: needs no per-user data at all, so it is the
/// zero point of the data-hunger spectrum the harness compares across.
class PopularityModel : public RecommenderModel {
 public:
  PopularityModel(const Dataset& train, const ModelConfig& config, std::uint64_t seed)
      : RecommenderModel(config, seed) {
    config.validate();
    if (train.empty()) throw DataError("popularity: training set is empty");
    rating_min_ = train.rating_min;
    rating_max_ = train.rating_max;
    table_.build(train, config.damping);
  }

  double predict(const std::string&, const std::string& item_id) const override {
    return clip(table_.score(item_id));
  }

  void dump_csv(std::ostream& out) const override {
    out << "param,key,value\n";
    out << "global_mean,," << format_double(table_.global_mean) << '\n';
    for (const auto& [item, b] : table_.item_bias)
      out << "item_bias," << item << ',' << format_double(b) << '\n';
  }

  const PopularityTable& table() const { return table_; }

 private:
  PopularityTable table_;
};

}  // namespace minirec
