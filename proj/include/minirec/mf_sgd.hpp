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
#include <numeric>
#include <string>
#include <vector>

#include "minirec/format.hpp"
#include "minirec/model.hpp"
#include "minirec/popularity.hpp"
#include "minirec/prng.hpp"

namespace minirec {

/// Per-example loss of the biased matrix-factorization model,
///   L = 1/2 * (e^2 + reg * (b_u^2 + b_i^2 + |p|^2 + |q|^2)),
///   e = r - (mu + b_u + b_i + p.q).
/// The SGD step is exactly theta -= lr * grad(L), so this pair of functions
/// is the analytic side of the finite-difference gradient check.
inline double mf_pointwise_loss(double rating, double mu, double b_u, double b_i,
                                const std::vector<double>& p, const std::vector<double>& q,
                                double reg) {
  double dot = 0.0, pp = 0.0, qq = 0.0;
  for (std::size_t f = 0; f < p.size(); ++f) {
    dot += p[f] * q[f];
    pp += p[f] * p[f];
    qq += q[f] * q[f];
  }
  const double e = rating - (mu + b_u + b_i + dot);
  return 0.5 * (e * e + reg * (b_u * b_u + b_i * b_i + pp + qq));
}

struct MfPointGradient {
  double b_u = 0.0;
  double b_i = 0.0;
  std::vector<double> p;
  std::vector<double> q;
};

inline MfPointGradient mf_pointwise_gradient(double rating, double mu, double b_u, double b_i,
                                             const std::vector<double>& p,
                                             const std::vector<double>& q, double reg) {
  double dot = 0.0;
  for (std::size_t f = 0; f < p.size(); ++f) dot += p[f] * q[f];
  const double e = rating - (mu + b_u + b_i + dot);
  MfPointGradient g;
  g.b_u = -e + reg * b_u;
  g.b_i = -e + reg * b_i;
  g.p.resize(p.size());
  g.q.resize(q.size());
  for (std::size_t f = 0; f < p.size(); ++f) {
    g.p[f] = -e * q[f] + reg * p[f];
    g.q[f] = -e * p[f] + reg * q[f];
  }
  return g;
}

/// Biased matrix factorization trained by single-threaded SGD:
///   minimize sum (r - mu - b_u - b_i - p.q)^2 + reg * (|p|^2 + |q|^2 + b_u^2 + b_i^2).
/// Factors start at uniform(-init_scale, init_scale) drawn from the harness
/// PRNG, biases at zero; each epoch visits the examples in a freshly
/// seeded-shuffled order. All updates evaluate gradients at the pre-update
/// parameter values. The full objective is evaluated after each epoch and a
/// non-finite value aborts with the epoch index.
class MfSgdModel : public RecommenderModel {
 public:
  MfSgdModel(const Dataset& train, const ModelConfig& config, std::uint64_t seed)
      : RecommenderModel(config, seed) {
    config.validate();
    if (train.empty()) throw DataError("mf_sgd: training set is empty");
    rating_min_ = train.rating_min;
    rating_max_ = train.rating_max;
    fallback_.build(train, config.damping);
    mu_ = fallback_.global_mean;

    for (const auto& x : train.interactions) {
      user_index_.emplace(x.user_id, user_index_.size());
      item_index_.emplace(x.item_id, item_index_.size());
    }
    const std::size_t n_users = user_index_.size();
    const std::size_t n_items = item_index_.size();
    const int d = config.latent_dim;

    struct Example {
      std::size_t u, i;
      double r;
    };
    std::vector<Example> examples;
    examples.reserve(train.size());
    for (const auto& x : train.interactions)
      examples.push_back({user_index_[x.user_id], item_index_[x.item_id], x.rating});

    b_u_.assign(n_users, 0.0);
    b_i_.assign(n_items, 0.0);
    p_.assign(n_users * d, 0.0);
    q_.assign(n_items * d, 0.0);

    Prng rng(seed);
    for (double& v : p_) v = rng.uniform(-config.init_scale, config.init_scale);
    for (double& v : q_) v = rng.uniform(-config.init_scale, config.init_scale);

    const double lr = config.learning_rate;
    const double flr =
        config.factor_learning_rate < 0.0 ? config.learning_rate : config.factor_learning_rate;
    const double reg = config.regularization;

    std::vector<std::size_t> order(examples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    epoch_losses_.reserve(static_cast<std::size_t>(config.epochs));

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
      rng.shuffle(order);
      for (std::size_t idx : order) {
        const Example& ex = examples[idx];
        double* p = &p_[ex.u * d];
        double* q = &q_[ex.i * d];
        double dot = 0.0;
        for (int f = 0; f < d; ++f) dot += p[f] * q[f];
        const double e = ex.r - (mu_ + b_u_[ex.u] + b_i_[ex.i] + dot);
        b_u_[ex.u] += lr * (e - reg * b_u_[ex.u]);
        b_i_[ex.i] += lr * (e - reg * b_i_[ex.i]);
        for (int f = 0; f < d; ++f) {
          const double pf = p[f];
          p[f] += flr * (e * q[f] - reg * pf);
          q[f] += flr * (e * pf - reg * q[f]);
        }
      }
      cost_.sgd_updates += examples.size();

      double loss = 0.0;
      for (const Example& ex : examples) {
        const double* p = &p_[ex.u * d];
        const double* q = &q_[ex.i * d];
        double dot = 0.0;
        for (int f = 0; f < d; ++f) dot += p[f] * q[f];
        const double e = ex.r - (mu_ + b_u_[ex.u] + b_i_[ex.i] + dot);
        loss += e * e;
      }
      for (std::size_t u = 0; u < n_users; ++u) loss += reg * b_u_[u] * b_u_[u];
      for (std::size_t i = 0; i < n_items; ++i) loss += reg * b_i_[i] * b_i_[i];
      for (double v : p_) loss += reg * v * v;
      for (double v : q_) loss += reg * v * v;
      if (!std::isfinite(loss))
        throw TrainingError("mf_sgd: non-finite training loss, learning rate too high?", epoch);
      epoch_losses_.push_back(loss);
    }
  }

  double predict(const std::string& user_id, const std::string& item_id) const override {
    const auto u = user_index_.find(user_id);
    const auto i = item_index_.find(item_id);
    if (u == user_index_.end() || i == item_index_.end())
      return clip(fallback_.score(item_id));
    const int d = config_.latent_dim;
    const double* p = &p_[u->second * d];
    const double* q = &q_[i->second * d];
    double dot = 0.0;
    for (int f = 0; f < d; ++f) dot += p[f] * q[f];
    return clip(mu_ + b_u_[u->second] + b_i_[i->second] + dot);
  }

  void dump_csv(std::ostream& out) const override {
    out << "param,key,value\n";
    out << "global_mean,," << format_double(mu_) << '\n';
    for (const auto& [user, u] : user_index_)
      out << "user_bias," << user << ',' << format_double(b_u_[u]) << '\n';
    for (const auto& [item, i] : item_index_)
      out << "item_bias," << item << ',' << format_double(b_i_[i]) << '\n';
    const int d = config_.latent_dim;
    for (const auto& [user, u] : user_index_)
      for (int f = 0; f < d; ++f)
        out << "user_factor," << user << ':' << f << ',' << format_double(p_[u * d + f]) << '\n';
    for (const auto& [item, i] : item_index_)
      for (int f = 0; f < d; ++f)
        out << "item_factor," << item << ':' << f << ',' << format_double(q_[i * d + f]) << '\n';
  }

  // Introspection for tests and debugging.
  double global_mean() const { return mu_; }
  const std::vector<double>& epoch_losses() const { return epoch_losses_; }
  double user_bias(const std::string& user_id) const {
    auto it = user_index_.find(user_id);
    return it == user_index_.end() ? 0.0 : b_u_[it->second];
  }
  double item_bias(const std::string& item_id) const {
    auto it = item_index_.find(item_id);
    return it == item_index_.end() ? 0.0 : b_i_[it->second];
  }
  std::vector<double> user_factors(const std::string& user_id) const {
    auto it = user_index_.find(user_id);
    if (it == user_index_.end()) return {};
    const int d = config_.latent_dim;
    return {p_.begin() + static_cast<std::ptrdiff_t>(it->second * d),
            p_.begin() + static_cast<std::ptrdiff_t>((it->second + 1) * d)};
  }
  std::vector<double> item_factors(const std::string& item_id) const {
    auto it = item_index_.find(item_id);
    if (it == item_index_.end()) return {};
    const int d = config_.latent_dim;
    return {q_.begin() + static_cast<std::ptrdiff_t>(it->second * d),
            q_.begin() + static_cast<std::ptrdiff_t>((it->second + 1) * d)};
  }

 private:
  PopularityTable fallback_;
  double mu_ = 0.0;
  std::map<std::string, std::size_t> user_index_;
  std::map<std::string, std::size_t> item_index_;
  std::vector<double> b_u_, b_i_, p_, q_;
  std::vector<double> epoch_losses_;
};

}  // namespace minirec
