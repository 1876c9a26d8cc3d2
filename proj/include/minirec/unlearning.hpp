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
#include <memory>
#include <ostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "minirec/dataset.hpp"
#include "minirec/errors.hpp"
#include "minirec/format.hpp"
#include "minirec/model.hpp"
#include "minirec/models.hpp"

namespace minirec {

struct WithdrawalRequest {
  std::set<std::string> user_ids;
  std::int64_t timestamp = 0;

  void validate() const {
    if (user_ids.empty()) throw ConfigError("withdrawal: empty user set");
  }
};

/// Weights translating operation counts into the energy proxy. Units are
/// deliberately abstract: the proxy is a deterministic stand-in for
/// retraining cost, not a joule estimate.
struct CostWeights {
  double sgd_updates = 1.0;
  double similarity_ops = 1.0;
  double retrain_wall_events = 1.0;

  void validate() const {
    if (sgd_updates < 0.0 || similarity_ops < 0.0 || retrain_wall_events < 0.0)
      throw ConfigError("cost weights must be >= 0");
  }
};

/// Operation counts attributable to one withdrawal.
struct CostDelta {
  std::int64_t users_removed = 0;
  std::int64_t sgd_updates = 0;
  std::int64_t similarity_ops = 0;
  std::int64_t retrains = 0;
};

inline double energy_proxy(const CostDelta& d, const CostWeights& w) {
  w.validate();
  return w.sgd_updates * static_cast<double>(d.sgd_updates) +
         w.similarity_ops * static_cast<double>(d.similarity_ops) +
         w.retrain_wall_events * static_cast<double>(d.retrains);
}

struct LedgerEvent {
  std::int64_t event_id = 0;
  std::int64_t timestamp = 0;
  CostDelta delta;
};

/// Single-writer append-only log of withdrawal costs. Counters only ever
/// grow; the proxy uses the ledger's configured weights.
class CostLedger {
 public:
  CostLedger() = default;
  explicit CostLedger(const CostWeights& weights) : weights_(weights) { weights_.validate(); }

  const LedgerEvent& append(std::int64_t timestamp, const CostDelta& delta) {
    if (delta.users_removed < 0 || delta.sgd_updates < 0 || delta.similarity_ops < 0 ||
        delta.retrains < 0)
      throw ConfigError("ledger: negative cost delta");
    LedgerEvent ev;
    ev.event_id = static_cast<std::int64_t>(events_.size()) + 1;
    ev.timestamp = timestamp;
    ev.delta = delta;
    events_.push_back(ev);
    totals_.users_removed += delta.users_removed;
    totals_.sgd_updates += delta.sgd_updates;
    totals_.similarity_ops += delta.similarity_ops;
    totals_.retrains += delta.retrains;
    return events_.back();
  }

  const std::vector<LedgerEvent>& events() const { return events_; }
  const CostDelta& totals() const { return totals_; }
  const CostWeights& weights() const { return weights_; }
  double total_energy_proxy() const { return energy_proxy(totals_, weights_); }

  void write_csv(std::ostream& os) const {
    os << "event_id,timestamp,users_removed,sgd_updates,similarity_ops,retrains,energy_proxy\n";
    for (const auto& ev : events_)
      os << ev.event_id << "," << ev.timestamp << "," << ev.delta.users_removed << ","
         << ev.delta.sgd_updates << "," << ev.delta.similarity_ops << "," << ev.delta.retrains
         << "," << format_double(energy_proxy(ev.delta, weights_)) << "\n";
  }

 private:
  CostWeights weights_;
  std::vector<LedgerEvent> events_;
  CostDelta totals_;
};

struct WithdrawalResult {
  std::unique_ptr<RecommenderModel> model;
  Dataset remaining;
  CostDelta delta;
  std::vector<std::string> warnings;
};

/// Consent withdrawal as exact unlearning: refits from scratch on the
/// train set minus the requested users, reusing the recorded config and
/// seed so the result is indistinguishable from never having had the
/// data. Unknown users produce warnings, not errors (withdrawing twice
/// is legal and costs a full retrain both times).
inline WithdrawalResult withdraw(const RecommenderModel& model, const Dataset& train,
                                 const WithdrawalRequest& request) {
  request.validate();
  const auto user_list = train.users();
  const std::set<std::string> present(user_list.begin(), user_list.end());
  WithdrawalResult result;
  std::set<std::string> removing;
  for (const auto& u : request.user_ids) {
    if (present.count(u))
      removing.insert(u);
    else
      result.warnings.push_back("withdraw: user '" + u + "' has no train interactions");
  }
  result.remaining.rating_min = train.rating_min;
  result.remaining.rating_max = train.rating_max;
  result.remaining.group_map = train.group_map;
  for (const auto& u : removing) result.remaining.group_map.erase(u);
  for (const auto& x : train.interactions)
    if (!removing.count(x.user_id)) result.remaining.interactions.push_back(x);
  if (result.remaining.size() == 0)
    throw DataError("withdraw: removal would empty the train set");

  result.model = fit_model(model.config(), result.remaining, model.seed());
  result.delta.users_removed = static_cast<std::int64_t>(removing.size());
  result.delta.sgd_updates = result.model->fit_cost().sgd_updates;
  result.delta.similarity_ops = result.model->fit_cost().similarity_ops;
  result.delta.retrains = 1;
  return result;
}

struct ExactnessReport {
  bool exact = false;
  double max_deviation = 0.0;
  bool vacuous = false;  // empty probe set
};

/// Compares two models prediction-by-prediction over the probe set. With
/// deterministic training an exact unlearning refit must deviate by
/// exactly zero from an independent fresh fit.
inline ExactnessReport verify_exactness(
    const RecommenderModel& after_withdraw, const RecommenderModel& oracle,
    const std::vector<std::pair<std::string, std::string>>& probes) {
  ExactnessReport rep;
  if (probes.empty()) {
    rep.exact = true;
    rep.vacuous = true;
    return rep;
  }
  for (const auto& [user, item] : probes) {
    const double d = std::fabs(after_withdraw.predict(user, item) - oracle.predict(user, item));
    rep.max_deviation = std::max(rep.max_deviation, d);
  }
  rep.exact = rep.max_deviation == 0.0;
  return rep;
}

/// Every (user, item) pair of a dataset, ordered; the default probe set
/// for exactness checks.
inline std::vector<std::pair<std::string, std::string>> probe_grid(const Dataset& d) {
  std::vector<std::pair<std::string, std::string>> probes;
  const auto users = d.users();
  const auto items = d.items();
  probes.reserve(users.size() * items.size());
  for (const auto& u : users)
    for (const auto& i : items) probes.emplace_back(u, i);
  return probes;
}

struct CostReport {
  std::vector<std::pair<std::int64_t, double>> per_event;  // (event_id, proxy)
  double total = 0.0;
};

/// Recomputes the proxy breakdown under caller-supplied weights, one row
/// per withdrawal event.
inline CostReport cost_report(const CostLedger& ledger, const CostWeights& weights) {
  weights.validate();
  CostReport rep;
  for (const auto& ev : ledger.events()) {
    const double proxy = energy_proxy(ev.delta, weights);
    rep.per_event.emplace_back(ev.event_id, proxy);
    rep.total += proxy;
  }
  return rep;
}

}  // namespace minirec
