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
// Config grammar: an INI-style sectioned key-value file.
//   - full-line comments start with '#' or ';'
//   - sections are "[name]"; [model], [plan], and [metric] repeat
//   - entries are "key = value"; lists are comma-separated
// The grammar is documented in the README; unknown keys are errors so a
// typo cannot silently change an experiment.
#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "minirec/analysis.hpp"
#include "minirec/csv.hpp"
#include "minirec/curve.hpp"
#include "minirec/dataset.hpp"
#include "minirec/errors.hpp"
#include "minirec/metrics.hpp"
#include "minirec/minimisation.hpp"
#include "minirec/model.hpp"
#include "minirec/synthetic.hpp"
#include "minirec/unlearning.hpp"

namespace minirec {

namespace detail {

inline std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, ',')) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

}  // namespace detail

/// One parsed [section]: ordered keys plus consumption tracking so
/// validation can reject unknown keys by name.
class ConfigSection {
 public:
  ConfigSection() = default;
  explicit ConfigSection(std::string name) : name_(std::move(name)) {}

  const std::string& name() const { return name_; }

  void add(const std::string& key, const std::string& value, int line) {
    if (entries_.count(key))
      throw ConfigError("config line " + std::to_string(line) + ": duplicate key '" + key +
                        "' in [" + name_ + "]");
    entries_[key] = value;
  }

  bool has(const std::string& key) const { return entries_.count(key) > 0; }

  std::string get_string(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end())
      throw ConfigError("config: [" + name_ + "] is missing required key '" + key + "'");
    consumed_.insert(key);
    return it->second;
  }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    return has(key) ? get_string(key) : fallback;
  }

  std::int64_t get_int(const std::string& key) const { return parse_int(key, get_string(key)); }
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const {
    return has(key) ? get_int(key) : fallback;
  }

  double get_double(const std::string& key) const {
    return parse_num(key, get_string(key));
  }
  double get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
  }

  bool get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string v = get_string(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("config: [" + name_ + "]." + key + ": expected a boolean, got '" + v + "'");
  }

  std::vector<std::string> get_list(const std::string& key) const {
    return detail::split_list(get_string(key));
  }

  std::vector<std::int64_t> get_int_list(const std::string& key) const {
    std::vector<std::int64_t> out;
    for (const auto& tok : get_list(key)) out.push_back(parse_int(key, tok));
    return out;
  }

  std::vector<double> get_double_list(const std::string& key) const {
    std::vector<double> out;
    for (const auto& tok : get_list(key)) out.push_back(parse_num(key, tok));
    return out;
  }

  /// Errors if any key was never consumed by a getter.
  void check_consumed() const {
    for (const auto& [key, value] : entries_)
      if (!consumed_.count(key))
        throw ConfigError("config: unknown key '" + key + "' in [" + name_ + "]");
  }

 private:
  std::int64_t parse_int(const std::string& key, const std::string& v) const {
    try {
      std::size_t pos = 0;
      const std::int64_t out = std::stoll(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return out;
    } catch (const std::exception&) {
      throw ConfigError("config: [" + name_ + "]." + key + ": expected an integer, got '" + v +
                        "'");
    }
  }

  double parse_num(const std::string& key, const std::string& v) const {
    try {
      std::size_t pos = 0;
      const double out = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return out;
    } catch (const std::exception&) {
      throw ConfigError("config: [" + name_ + "]." + key + ": expected a number, got '" + v +
                        "'");
    }
  }

  std::string name_;
  std::map<std::string, std::string> entries_;
  mutable std::set<std::string> consumed_;
};

inline std::vector<ConfigSection> parse_ini(std::istream& in) {
  std::vector<ConfigSection> sections;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw ConfigError("config line " + std::to_string(line_no) + ": unterminated section");
      const std::string name = detail::trim(t.substr(1, t.size() - 2));
      if (name.empty())
        throw ConfigError("config line " + std::to_string(line_no) + ": empty section name");
      sections.emplace_back(name);
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": expected 'key = value' or '[section]'");
    if (sections.empty())
      throw ConfigError("config line " + std::to_string(line_no) + ": key before any section");
    const std::string key = detail::trim(t.substr(0, eq));
    const std::string value = detail::trim(t.substr(eq + 1));
    if (key.empty())
      throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    sections.back().add(key, value, line_no);
  }
  return sections;
}

/// Parses a plan token: "full", "<strategy>:<budget>", "shuffle:<p>".
inline MinimisationPlan parse_plan_token(const std::string& token) {
  MinimisationPlan plan;
  const auto colon = token.find(':');
  const std::string head = detail::trim(colon == std::string::npos ? token : token.substr(0, colon));
  plan.strategy = parse_strategy(head);
  if (colon == std::string::npos) {
    if (plan.strategy != Strategy::full)
      throw ConfigError("plan token '" + token + "': missing ':<budget>'");
    return plan;
  }
  const std::string arg = detail::trim(token.substr(colon + 1));
  try {
    std::size_t pos = 0;
    if (plan.strategy == Strategy::shuffle) {
      plan.fraction = std::stod(arg, &pos);
    } else if (plan.strategy == Strategy::full) {
      throw std::invalid_argument(arg);
    } else {
      plan.budget = static_cast<int>(std::stoll(arg, &pos));
    }
    if (pos != arg.size()) throw std::invalid_argument(arg);
  } catch (const std::exception&) {
    throw ConfigError("plan token '" + token + "': bad argument '" + arg + "'");
  }
  plan.validate();
  return plan;
}

inline Perturbation parse_perturbation_token(const std::string& token) {
  if (token.rfind("drop_users:", 0) == 0) {
    const std::string arg = detail::trim(token.substr(std::string("drop_users:").size()));
    try {
      std::size_t pos = 0;
      const double f = std::stod(arg, &pos);
      if (pos != arg.size()) throw std::invalid_argument(arg);
      return Perturbation::dropping_users(f);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError("perturbation token '" + token + "': bad fraction");
    }
  }
  return Perturbation::with_plan(parse_plan_token(token));
}

/// One [plan] section expanded over its budget (or fraction) grid.
struct PlanSpec {
  std::vector<MinimisationPlan> steps;  // applied left to right; seeds set per cell
  int budget = -1;                      // grid budget; -1 when not applicable

  std::string name() const {
    std::string out;
    for (std::size_t i = 0; i < steps.size(); ++i) {
      if (i) out += "+";
      out += steps[i].name();
    }
    return out;
  }
};

struct DatasetSectionConfig {
  bool synthetic = false;
  std::string path;
  std::optional<double> rating_min;
  std::optional<double> rating_max;
  SyntheticSpec spec;
};

struct CompatConfig {
  std::string purpose_a = "purpose_a";
  std::string purpose_b = "purpose_b";
  std::size_t model_a = 0;
  std::size_t model_b = 0;
  MetricKind metric_a;
  MetricKind metric_b;
  std::string prefix_a;
  std::string prefix_b;
  CompatThresholds thresholds;
  std::vector<Perturbation> schedule;
};

struct DisparityConfig {
  std::size_t model = 0;
  MetricKind metric;
  MinimisationPlan plan;
};

struct CrossUserConfig {
  std::size_t model = 0;
  MetricKind metric;
  std::set<std::string> users;
};

struct CurveConfig {
  Strategy strategy = Strategy::random_k;
  std::vector<int> grid;
  double epsilon = 0.01;
};

struct ExperimentConfig {
  DatasetSectionConfig dataset;
  SplitScheme scheme = SplitScheme::temporal_holdout(0.2);
  std::uint64_t split_seed = 0;
  std::vector<ModelConfig> models;
  std::vector<PlanSpec> plans;
  std::vector<std::pair<MetricKind, Aggregation>> metrics;
  std::vector<std::uint64_t> seeds;
  std::string output_dir = "out";
  int negative_samples = 100;
  CostWeights weights;
  std::optional<CompatConfig> compat;
  std::optional<DisparityConfig> disparity;
  std::optional<CrossUserConfig> cross_user;
  std::optional<CurveConfig> curve;
  std::string raw;  // exact config bytes, reproduced in the manifest

  static ExperimentConfig parse(std::istream& in);
  static ExperimentConfig parse_string(const std::string& text) {
    std::istringstream in(text);
    return parse(in);
  }
  static ExperimentConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    return parse(in);
  }
};

namespace detail {

inline void parse_dataset_section(const ConfigSection& s, DatasetSectionConfig& out) {
  out.synthetic = s.get_bool("synthetic", false);
  if (out.synthetic) {
    out.spec.n_users = static_cast<int>(s.get_int("n_users"));
    out.spec.n_items = static_cast<int>(s.get_int("n_items"));
    out.spec.latent_dim = static_cast<int>(s.get_int("latent_dim", out.spec.latent_dim));
    if (s.has("group_fractions")) {
      // Tokens are "label:fraction" or bare fractions labeled g0, g1, ...
      out.spec.group_fractions.clear();
      const auto toks = s.get_list("group_fractions");
      for (std::size_t i = 0; i < toks.size(); ++i) {
        const auto colon = toks[i].find(':');
        std::string label = "g" + std::to_string(i);
        std::string num = toks[i];
        if (colon != std::string::npos) {
          label = trim(toks[i].substr(0, colon));
          num = trim(toks[i].substr(colon + 1));
        }
        try {
          std::size_t pos = 0;
          const double f = std::stod(num, &pos);
          if (pos != num.size()) throw std::invalid_argument(num);
          out.spec.group_fractions.emplace_back(label, f);
        } catch (const std::exception&) {
          throw ConfigError("config: [dataset].group_fractions: bad token '" + toks[i] + "'");
        }
      }
    }
    out.spec.group_preference_shift =
        s.get_double("group_preference_shift", out.spec.group_preference_shift);
    out.spec.noise_sd = s.get_double("noise_sd", out.spec.noise_sd);
    out.spec.interactions_per_user =
        static_cast<int>(s.get_int("interactions_per_user", out.spec.interactions_per_user));
    out.spec.seed = static_cast<std::uint64_t>(s.get_int("seed", 0));
    out.spec.validate();
  } else {
    out.path = s.get_string("path");
    if (s.has("rating_min")) out.rating_min = s.get_double("rating_min");
    if (s.has("rating_max")) out.rating_max = s.get_double("rating_max");
  }
  s.check_consumed();
}

inline void parse_split_section(const ConfigSection& s, ExperimentConfig& out) {
  const std::string scheme = s.get_string("scheme", "temporal_holdout");
  if (scheme == "temporal_holdout") {
    out.scheme = SplitScheme::temporal_holdout(s.get_double("fraction", 0.2));
  } else if (scheme == "leave_last_k") {
    out.scheme = SplitScheme::leave_last_k(static_cast<int>(s.get_int("k", 1)));
  } else {
    throw ConfigError("config: [split].scheme: unknown scheme '" + scheme + "'");
  }
  out.split_seed = static_cast<std::uint64_t>(s.get_int("seed", 0));
  s.check_consumed();
}

inline ModelConfig parse_model_section(const ConfigSection& s) {
  ModelConfig m;
  const std::string kind = s.get_string("kind");
  if (kind == "popularity") {
    m.kind = ModelKind::popularity;
  } else if (kind == "item_knn") {
    m.kind = ModelKind::item_knn;
  } else if (kind == "mf_sgd") {
    m.kind = ModelKind::mf_sgd;
  } else {
    throw ConfigError("config: [model].kind: unknown kind '" + kind + "'");
  }
  m.damping = s.get_double("damping", m.damping);
  m.neighbors = static_cast<int>(s.get_int("neighbors", m.neighbors));
  const std::string sim = s.get_string("similarity", "cosine");
  if (sim == "cosine") {
    m.similarity = Similarity::cosine;
  } else if (sim == "adjusted_cosine") {
    m.similarity = Similarity::adjusted_cosine;
  } else {
    throw ConfigError("config: [model].similarity: unknown similarity '" + sim + "'");
  }
  m.latent_dim = static_cast<int>(s.get_int("latent_dim", m.latent_dim));
  m.learning_rate = s.get_double("learning_rate", m.learning_rate);
  m.factor_learning_rate = s.get_double("factor_learning_rate", m.factor_learning_rate);
  m.regularization = s.get_double("regularization", m.regularization);
  m.epochs = static_cast<int>(s.get_int("epochs", m.epochs));
  m.init_scale = s.get_double("init_scale", m.init_scale);
  m.validate();
  s.check_consumed();
  return m;
}

inline std::vector<PlanSpec> parse_plan_section(const ConfigSection& s) {
  std::vector<PlanSpec> out;
  if (s.has("steps")) {
    PlanSpec spec;
    for (const auto& tok : s.get_list("steps")) spec.steps.push_back(parse_plan_token(tok));
    if (spec.steps.empty()) throw ConfigError("config: [plan].steps is empty");
    s.check_consumed();
    out.push_back(std::move(spec));
    return out;
  }
  const Strategy strategy = parse_strategy(s.get_string("strategy"));
  if (strategy == Strategy::full) {
    PlanSpec spec;
    spec.steps.push_back(MinimisationPlan{});
    out.push_back(std::move(spec));
  } else if (strategy == Strategy::shuffle) {
    std::vector<double> fractions;
    if (s.has("fractions")) {
      fractions = s.get_double_list("fractions");
    } else {
      fractions.push_back(s.get_double("fraction"));
    }
    if (fractions.empty()) throw ConfigError("config: [plan].fractions is empty");
    for (double f : fractions) {
      MinimisationPlan plan;
      plan.strategy = Strategy::shuffle;
      plan.fraction = f;
      plan.validate();
      PlanSpec spec;
      spec.steps.push_back(plan);
      out.push_back(std::move(spec));
    }
  } else {
    const auto budgets = s.get_int_list("budgets");
    if (budgets.empty()) throw ConfigError("config: [plan].budgets is empty");
    for (std::int64_t b : budgets) {
      MinimisationPlan plan;
      plan.strategy = strategy;
      plan.budget = static_cast<int>(b);
      plan.validate();
      PlanSpec spec;
      spec.steps.push_back(plan);
      spec.budget = plan.budget;
      out.push_back(std::move(spec));
    }
  }
  s.check_consumed();
  return out;
}

inline std::pair<MetricKind, Aggregation> parse_metric_section(const ConfigSection& s) {
  const MetricKind kind = MetricKind::parse(s.get_string("kind"));
  const Aggregation agg = parse_aggregation(s.get_string("aggregation", "global_mean"));
  s.check_consumed();
  return {kind, agg};
}

inline MetricKind resolve_metric(const ExperimentConfig& cfg, const ConfigSection& s,
                                 const std::string& key) {
  if (s.has(key)) return MetricKind::parse(s.get_string(key));
  if (cfg.metrics.empty())
    throw ConfigError("config: [" + s.name() + "]." + key +
                      " omitted and no [metric] section to default to");
  return cfg.metrics.front().first;
}

inline std::size_t resolve_model_index(const ExperimentConfig& cfg, const ConfigSection& s,
                                       const std::string& key) {
  const auto idx = s.get_int(key, 0);
  if (idx < 0 || static_cast<std::size_t>(idx) >= cfg.models.size())
    throw ConfigError("config: [" + s.name() + "]." + key + ": model index " +
                      std::to_string(idx) + " out of range (have " +
                      std::to_string(cfg.models.size()) + " models)");
  return static_cast<std::size_t>(idx);
}

}  // namespace detail

inline ExperimentConfig ExperimentConfig::parse(std::istream& in) {
  std::ostringstream raw;
  raw << in.rdbuf();
  ExperimentConfig cfg;
  cfg.raw = raw.str();
  std::istringstream replay(cfg.raw);
  const auto sections = parse_ini(replay);

  const ConfigSection* dataset = nullptr;
  const ConfigSection* split_section = nullptr;
  const ConfigSection* run = nullptr;
  const ConfigSection* weights = nullptr;
  const ConfigSection* compat = nullptr;
  const ConfigSection* disparity = nullptr;
  const ConfigSection* cross_user = nullptr;
  const ConfigSection* curve = nullptr;
  std::vector<const ConfigSection*> model_sections, plan_sections, metric_sections;

  for (const auto& s : sections) {
    if (s.name() == "dataset") {
      dataset = &s;
    } else if (s.name() == "split") {
      split_section = &s;
    } else if (s.name() == "model") {
      model_sections.push_back(&s);
    } else if (s.name() == "plan") {
      plan_sections.push_back(&s);
    } else if (s.name() == "metric") {
      metric_sections.push_back(&s);
    } else if (s.name() == "run") {
      run = &s;
    } else if (s.name() == "weights") {
      weights = &s;
    } else if (s.name() == "compat") {
      compat = &s;
    } else if (s.name() == "disparity") {
      disparity = &s;
    } else if (s.name() == "crossuser") {
      cross_user = &s;
    } else if (s.name() == "curve") {
      curve = &s;
    } else {
      throw ConfigError("config: unknown section [" + s.name() + "]");
    }
  }

  if (!dataset) throw ConfigError("config: missing [dataset] section");
  detail::parse_dataset_section(*dataset, cfg.dataset);
  if (split_section) detail::parse_split_section(*split_section, cfg);

  if (model_sections.empty()) throw ConfigError("config: missing [model] section");
  for (const auto* s : model_sections) cfg.models.push_back(detail::parse_model_section(*s));

  if (plan_sections.empty()) throw ConfigError("config: missing [plan] section");
  for (const auto* s : plan_sections) {
    auto expanded = detail::parse_plan_section(*s);
    cfg.plans.insert(cfg.plans.end(), expanded.begin(), expanded.end());
  }

  if (metric_sections.empty()) throw ConfigError("config: missing [metric] section");
  for (const auto* s : metric_sections) cfg.metrics.push_back(detail::parse_metric_section(*s));

  if (!run) throw ConfigError("config: missing [run] section");
  for (std::int64_t s : run->get_int_list("seeds"))
    cfg.seeds.push_back(static_cast<std::uint64_t>(s));
  if (cfg.seeds.empty()) throw ConfigError("config: [run].seeds is empty");
  cfg.output_dir = run->get_string("output_dir", cfg.output_dir);
  cfg.negative_samples = static_cast<int>(run->get_int("negative_samples", cfg.negative_samples));
  if (cfg.negative_samples < 1)
    throw ConfigError("config: [run].negative_samples must be >= 1");
  run->check_consumed();

  if (weights) {
    cfg.weights.sgd_updates = weights->get_double("sgd_updates", cfg.weights.sgd_updates);
    cfg.weights.similarity_ops = weights->get_double("similarity_ops", cfg.weights.similarity_ops);
    cfg.weights.retrain_wall_events =
        weights->get_double("retrain_wall_events", cfg.weights.retrain_wall_events);
    cfg.weights.validate();
    weights->check_consumed();
  }

  if (compat) {
    CompatConfig c;
    c.purpose_a = compat->get_string("purpose_a", c.purpose_a);
    c.purpose_b = compat->get_string("purpose_b", c.purpose_b);
    c.model_a = detail::resolve_model_index(cfg, *compat, "model_a");
    c.model_b = detail::resolve_model_index(cfg, *compat, "model_b");
    c.metric_a = detail::resolve_metric(cfg, *compat, "metric_a");
    c.metric_b = detail::resolve_metric(cfg, *compat, "metric_b");
    c.prefix_a = compat->get_string("prefix_a", "");
    c.prefix_b = compat->get_string("prefix_b", "");
    c.thresholds.r_min = compat->get_double("r_min", c.thresholds.r_min);
    c.thresholds.p_max = compat->get_double("p_max", c.thresholds.p_max);
    c.thresholds.permutations =
        static_cast<int>(compat->get_int("permutations", c.thresholds.permutations));
    c.thresholds.validate();
    for (const auto& tok : compat->get_list("perturbations"))
      c.schedule.push_back(parse_perturbation_token(tok));
    if (c.schedule.empty()) throw ConfigError("config: [compat].perturbations is empty");
    compat->check_consumed();
    cfg.compat = std::move(c);
  }

  if (disparity) {
    DisparityConfig d;
    d.model = detail::resolve_model_index(cfg, *disparity, "model");
    d.metric = detail::resolve_metric(cfg, *disparity, "metric");
    d.plan = parse_plan_token(disparity->get_string("plan"));
    disparity->check_consumed();
    cfg.disparity = std::move(d);
  }

  if (cross_user) {
    CrossUserConfig c;
    c.model = detail::resolve_model_index(cfg, *cross_user, "model");
    c.metric = detail::resolve_metric(cfg, *cross_user, "metric");
    for (const auto& u : cross_user->get_list("users")) c.users.insert(u);
    if (c.users.empty()) throw ConfigError("config: [crossuser].users is empty");
    cross_user->check_consumed();
    cfg.cross_user = std::move(c);
  }

  if (curve) {
    CurveConfig c;
    c.strategy = parse_strategy(curve->get_string("strategy", "random"));
    if (!strategy_budgeted(c.strategy))
      throw ConfigError("config: [curve].strategy must be a budgeted strategy");
    for (std::int64_t b : curve->get_int_list("grid")) c.grid.push_back(static_cast<int>(b));
    c.epsilon = curve->get_double("epsilon", c.epsilon);
    if (c.epsilon <= 0.0) throw ConfigError("config: [curve].epsilon must be > 0");
    if (c.grid.size() < 3) throw ConfigError("config: [curve].grid needs >= 3 budgets");
    for (std::size_t i = 1; i < c.grid.size(); ++i)
      if (c.grid[i] <= c.grid[i - 1])
        throw ConfigError("config: [curve].grid must be strictly increasing");
    curve->check_consumed();
    cfg.curve = std::move(c);
  }

  return cfg;
}

/// Materializes the configured dataset (CSV load or synthetic generation).
inline Dataset load_dataset(const ExperimentConfig& cfg) {
  if (cfg.dataset.synthetic) return generate_synthetic(cfg.dataset.spec);
  std::optional<std::pair<double, double>> bounds;
  if (cfg.dataset.rating_min && cfg.dataset.rating_max)
    bounds = std::make_pair(*cfg.dataset.rating_min, *cfg.dataset.rating_max);
  return load_csv(cfg.dataset.path, CsvSchema{}, bounds);
}

}  // namespace minirec
