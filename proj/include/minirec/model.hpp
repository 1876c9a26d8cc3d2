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
#include <cstdint>
#include <memory>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "minirec/dataset.hpp"
#include "minirec/errors.hpp"

namespace minirec {

enum class ModelKind { popularity, item_knn, mf_sgd };

enum class Similarity { cosine, adjusted_cosine };

inline std::string model_kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::popularity: return "popularity";
    case ModelKind::item_knn: return "item_knn";
    case ModelKind::mf_sgd: return "mf_sgd";
  }
  return "?";
}

/// Hyperparameters for all three model kinds in one flat struct; only the
/// fields of the selected kind matter. Defaults are desk-scale choices.
struct ModelConfig {
  ModelKind kind = ModelKind::popularity;

  // popularity (also the cold-start fallback inside the other two kinds)
  double damping = 25.0;  // shrinkage beta in bias = sum(r - mu) / (n + beta)

  // item_knn
  int neighbors = 20;
  Similarity similarity = Similarity::cosine;

  // mf_sgd
  int latent_dim = 16;
  double learning_rate = 0.01;
  double regularization = 0.05;
  int epochs = 50;
  double init_scale = 0.1;           // uniform(-s, s) factor initialization
  double factor_learning_rate = -1;  // < 0 means: use learning_rate

  std::string name() const { return model_kind_name(kind); }

  void validate() const {
    if (damping < 0.0) throw ConfigError("model: damping must be >= 0");
    switch (kind) {
      case ModelKind::popularity:
        break;
      case ModelKind::item_knn:
        if (neighbors < 1) throw ConfigError("model: neighbors must be >= 1");
        break;
      case ModelKind::mf_sgd:
        if (latent_dim < 1) throw ConfigError("model: latent_dim must be >= 1");
        if (epochs < 1) throw ConfigError("model: epochs must be >= 1");
        if (learning_rate <= 0.0) throw ConfigError("model: learning_rate must be > 0");
        if (regularization < 0.0) throw ConfigError("model: regularization must be >= 0");
        if (init_scale < 0.0) throw ConfigError("model: init_scale must be >= 0");
        break;
    }
  }
};

/// Deterministic operation counts accumulated during a fit; the raw
/// material of the unlearning cost ledger.
struct FitCost {
  std::uint64_t sgd_updates = 0;     // single-example gradient steps
  std::uint64_t similarity_ops = 0;  // item-pair similarity computations
};

/// Sorts (score desc, item_id asc) and keeps the first k distinct items.
/// The shared tie-break makes every ranking in the library a total order.
inline std::vector<std::string> top_k_by_score(
    const std::vector<std::pair<std::string, double>>& scored, int k) {
  std::vector<std::pair<std::string, double>> s;
  s.reserve(scored.size());
  std::set<std::string> seen;
  for (const auto& p : scored)
    if (seen.insert(p.first).second) s.push_back(p);
  std::sort(s.begin(), s.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (k >= 0 && s.size() > static_cast<std::size_t>(k)) s.resize(static_cast<std::size_t>(k));
  std::vector<std::string> out;
  out.reserve(s.size());
  for (auto& p : s) out.push_back(std::move(p.first));
  return out;
}

/// A fitted scorer. Fitting with identical (train, seed, config) yields
/// bit-identical predict/rank behaviour; predictions are always clipped to
/// the training rating bounds, and cold users/items fall back to the
/// popularity score instead of failing (minimisation creates cold profiles
/// on purpose, and the harness has to measure that, not crash).
class RecommenderModel {
 public:
  virtual ~RecommenderModel() = default;

  virtual double predict(const std::string& user_id, const std::string& item_id) const = 0;

  /// Top-k of `candidates` by predict score, ties by item_id ascending.
  std::vector<std::string> rank(const std::string& user_id,
                                const std::vector<std::string>& candidates, int k) const {
    std::vector<std::pair<std::string, double>> scored;
    scored.reserve(candidates.size());
    for (const auto& item : candidates) scored.emplace_back(item, predict(user_id, item));
    return top_k_by_score(scored, k);
  }

  /// Debug dump of the learned parameters as `param,key,value` CSV rows.
  virtual void dump_csv(std::ostream& out) const = 0;

  const ModelConfig& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }
  const FitCost& fit_cost() const { return cost_; }

 protected:
  RecommenderModel(const ModelConfig& config, std::uint64_t seed)
      : config_(config), seed_(seed) {}

  double clip(double v) const {
    return std::min(rating_max_, std::max(rating_min_, v));
  }

  ModelConfig config_;
  std::uint64_t seed_ = 0;
  FitCost cost_;
  double rating_min_ = 1.0;
  double rating_max_ = 5.0;
};

}  // namespace minirec
