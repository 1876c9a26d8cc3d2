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

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "minirec/analysis.hpp"
#include "minirec/config.hpp"
#include "minirec/curve.hpp"
#include "minirec/dataset.hpp"
#include "minirec/errors.hpp"
#include "minirec/format.hpp"
#include "minirec/metrics.hpp"
#include "minirec/minimisation.hpp"
#include "minirec/models.hpp"
#include "minirec/parallel.hpp"
#include "minirec/version.hpp"

namespace minirec {

struct CellResult {
  std::string model;
  std::string plan;
  int budget = -1;  // -1 when the plan has no budget grid
  std::uint64_t seed = 0;
  std::string metric;
  std::string aggregation;
  double value = 0.0;
  std::int64_t n_evaluated = 0;
  std::int64_t n_skipped = 0;
  bool ok = false;
  std::string status;  // "ok" or a sanitized error message
};

struct RunResult {
  std::string output_dir;
  std::size_t cells_total = 0;
  std::size_t cells_failed = 0;
};

namespace detail {

inline std::string sanitize_status(std::string s) {
  for (auto& ch : s)
    if (ch == ',' || ch == '\n' || ch == '\r') ch = ';';
  return s;
}

inline std::string model_tag(std::size_t index, const ModelConfig& config) {
  return "m" + std::to_string(index) + "_" + model_kind_name(config.kind);
}

// Seeds every step of a composite plan from one per-cell stream.
inline std::vector<MinimisationPlan> seeded_steps(const PlanSpec& spec, std::uint64_t cell_seed) {
  auto steps = spec.steps;
  const std::uint64_t base = cell_plan_seed(cell_seed);
  for (std::size_t i = 0; i < steps.size(); ++i)
    steps[i].seed = derive_seed(base, "step:" + std::to_string(i));
  return steps;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("run: cannot write '" + path.string() + "'");
  return out;
}

}  // namespace detail

inline void write_cells_csv(std::ostream& os, const std::vector<CellResult>& cells) {
  os << "model,plan,budget,seed,metric,aggregation,value,n_evaluated,n_skipped,status\n";
  for (const auto& c : cells) {
    os << c.model << "," << c.plan << ",";
    if (c.budget >= 0) os << c.budget;
    os << "," << c.seed << "," << c.metric << "," << c.aggregation << ",";
    if (c.ok) os << format_double(c.value);
    os << "," << c.n_evaluated << "," << c.n_skipped << "," << c.status << "\n";
  }
}

/// Executes the (model x plan x seed x metric) grid on one shared split.
/// A failing cell is recorded with its error message and the grid keeps
/// going; robustness comparisons need failures as data, not aborts.
inline std::vector<CellResult> run_grid(const ExperimentConfig& cfg, const Split& split) {
  const std::size_t n_models = cfg.models.size();
  const std::size_t n_plans = cfg.plans.size();
  const std::size_t n_seeds = cfg.seeds.size();
  const std::size_t n_metrics = cfg.metrics.size();
  std::vector<CellResult> cells(n_models * n_plans * n_seeds * n_metrics);

  const std::size_t combos = n_models * n_plans * n_seeds;
  detail::parallel_for(combos, [&](std::size_t combo) {
    const std::size_t mi = combo / (n_plans * n_seeds);
    const std::size_t pi = (combo / n_seeds) % n_plans;
    const std::size_t si = combo % n_seeds;
    const std::uint64_t seed = cfg.seeds[si];
    const PlanSpec& plan = cfg.plans[pi];

    CellResult base;
    base.model = detail::model_tag(mi, cfg.models[mi]);
    base.plan = plan.name();
    base.budget = plan.budget;
    base.seed = seed;

    const std::size_t row0 = combo * n_metrics;
    for (std::size_t k = 0; k < n_metrics; ++k) {
      cells[row0 + k] = base;
      cells[row0 + k].metric = cfg.metrics[k].first.name();
      cells[row0 + k].aggregation = aggregation_name(cfg.metrics[k].second);
    }

    try {
      const Dataset reduced = minirec::apply(detail::seeded_steps(plan, seed), split.train);
      const auto model = fit_model(cfg.models[mi], reduced, detail::cell_fit_seed(seed));
      for (std::size_t k = 0; k < n_metrics; ++k) {
        CellResult& cell = cells[row0 + k];
        try {
          EvalOptions opts;
          opts.negative_samples = cfg.negative_samples;
          opts.seed = detail::cell_eval_seed(seed);
          const EvalReport rep = evaluate(*model, reduced, split.test, cfg.metrics[k].first,
                                          cfg.metrics[k].second, opts);
          cell.value = rep.summary();
          cell.n_evaluated = rep.n_evaluated;
          cell.n_skipped = rep.n_skipped_cold;
          cell.ok = true;
          cell.status = "ok";
        } catch (const Error& e) {
          cell.status = detail::sanitize_status(std::string("error: ") + e.what());
        }
      }
    } catch (const Error& e) {
      const std::string status = detail::sanitize_status(std::string("error: ") + e.what());
      for (std::size_t k = 0; k < n_metrics; ++k) cells[row0 + k].status = status;
    }
  });
  return cells;
}

/// Learning-curve sidecars assembled from already-computed grid cells:
/// one curve per (model, budgeted strategy, metric) covering >= 3 ok
/// budgets. A fit that diverged leaves a header-only fit sidecar.
inline void write_curve_sidecars(const ExperimentConfig& cfg, const std::vector<CellResult>& cells,
                                 const std::filesystem::path& dir) {
  const std::size_t n_plans = cfg.plans.size();
  const std::size_t n_seeds = cfg.seeds.size();
  const std::size_t n_metrics = cfg.metrics.size();

  // strategy -> budget -> plan index (single-step budgeted plans only)
  std::map<std::string, std::map<int, std::size_t>> families;
  for (std::size_t pi = 0; pi < n_plans; ++pi) {
    const PlanSpec& p = cfg.plans[pi];
    if (p.steps.size() == 1 && strategy_budgeted(p.steps[0].strategy) && p.budget >= 0)
      families[strategy_name(p.steps[0].strategy)].emplace(p.budget, pi);
  }

  for (std::size_t mi = 0; mi < cfg.models.size(); ++mi) {
    for (const auto& [family, budgets] : families) {
      for (std::size_t k = 0; k < n_metrics; ++k) {
        LearningCurve curve;
        std::set<int> distinct;
        for (const auto& [budget, pi] : budgets) {
          for (std::size_t si = 0; si < n_seeds; ++si) {
            const std::size_t row = (((mi * n_plans) + pi) * n_seeds + si) * n_metrics + k;
            if (!cells[row].ok) continue;
            curve.points.push_back({budget, cfg.seeds[si], cells[row].value});
            distinct.insert(budget);
          }
        }
        if (distinct.size() < 3) continue;
        curve.fit = fit_power_law(curve.mean_points());
        const std::string stem = "curve_" + detail::model_tag(mi, cfg.models[mi]) + "_" + family +
                                 "_" + cfg.metrics[k].first.file_tag() + "_" +
                                 aggregation_name(cfg.metrics[k].second);
        auto points = detail::open_output(dir / (stem + ".csv"));
        curve.write_points_csv(points);
        auto fit = detail::open_output(dir / (stem + "_fit.csv"));
        curve.write_fit_csv(fit);
      }
    }
  }
}

inline void write_manifest(const ExperimentConfig& cfg, const std::filesystem::path& dir) {
  auto manifest = detail::open_output(dir / "manifest.txt");
  manifest << "version = " << kVersion << "\n";
  manifest << "seeds = ";
  for (std::size_t i = 0; i < cfg.seeds.size(); ++i) manifest << (i ? "," : "") << cfg.seeds[i];
  manifest << "\n";
  manifest << "split_seed = " << cfg.split_seed << "\n";
  manifest << "seed_derivation = per cell: plan=derive_seed(seed,\"plan\") then "
              "\"step:<i>\" per composed step, fit=derive_seed(seed,\"fit\"), "
              "eval=derive_seed(seed,\"eval\"); negatives per user: "
              "derive_seed(eval,\"negatives:<user_id>\")\n";
  manifest << "config = config.ini\n";
  auto config_copy = detail::open_output(dir / "config.ini");
  config_copy << cfg.raw;
}

/// Full experiment: grid, curve sidecars, optional analysis reports, and
/// the provenance manifest. The result directory is a pure function of
/// (config bytes, harness version).
inline RunResult run(const ExperimentConfig& cfg) {
  const Dataset data = load_dataset(cfg);
  for (const auto& [metric, agg] : cfg.metrics)
    if (agg == Aggregation::per_group && !data.has_groups())
      throw DataError("run: metric '" + metric.name() +
                      "' is aggregated per_group but the dataset has no group labels");
  const Split split = minirec::split(data, cfg.scheme, cfg.split_seed);

  const std::filesystem::path dir(cfg.output_dir);
  std::filesystem::create_directories(dir);

  const auto cells = run_grid(cfg, split);
  {
    auto os = detail::open_output(dir / "cells.csv");
    write_cells_csv(os, cells);
  }
  write_curve_sidecars(cfg, cells, dir);

  if (cfg.compat) {
    const CompatConfig& c = *cfg.compat;
    CompatTask a{c.purpose_a, cfg.models[c.model_a], c.metric_a, c.prefix_a};
    CompatTask b{c.purpose_b, cfg.models[c.model_b], c.metric_b, c.prefix_b};
    const CompatibilityReport rep =
        compatibility(split, a, b, c.schedule, cfg.seeds, c.thresholds, cfg.negative_samples);
    auto os = detail::open_output(dir / "compat.csv");
    rep.write_csv(os);
  }
  if (cfg.disparity) {
    const DisparityConfig& d = *cfg.disparity;
    const DisparityReport rep = disparity_under_minimisation(
        split, cfg.models[d.model], d.metric, d.plan, cfg.seeds, cfg.negative_samples);
    auto os = detail::open_output(dir / "disparity.csv");
    rep.write_csv(os);
  }
  if (cfg.cross_user) {
    const CrossUserConfig& c = *cfg.cross_user;
    const CrossUserImpact impact = cross_user_impact(split, cfg.models[c.model], c.metric,
                                                     c.users, cfg.seeds.front(),
                                                     cfg.negative_samples);
    auto os = detail::open_output(dir / "crossuser.csv");
    impact.write_csv(os);
  }

  write_manifest(cfg, dir);

  RunResult result;
  result.output_dir = dir.string();
  result.cells_total = cells.size();
  for (const auto& c : cells)
    if (!c.ok) ++result.cells_failed;
  return result;
}

}  // namespace minirec
