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
// minirec CLI. Exit codes: 0 ok, 2 config error, 3 data error,
// 4 grid completed with failed cells, 1 other runtime error.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "minirec/minirec.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitCellFailures = 4;

struct CommonOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

minirec::ExperimentConfig load_config(const CommonOpts& opts) {
  auto cfg = minirec::ExperimentConfig::load(opts.config_path);
  if (opts.seed) cfg.seeds = {*opts.seed};
  return cfg;
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw minirec::DataError("cannot write '" + p.string() + "'");
  return out;
}

int cmd_run(const CommonOpts& opts, const std::string& out_override) {
  auto cfg = load_config(opts);
  if (!out_override.empty()) {
    cfg.output_dir = out_override;
  } else if (const char* env = std::getenv("MINIREC_OUT"); env && *env) {
    cfg.output_dir = env;
  }
  const minirec::RunResult result = minirec::run(cfg);
  if (!opts.quiet) {
    std::cout << "wrote " << result.output_dir << " (" << result.cells_total << " cells, "
              << result.cells_failed << " failed)\n";
  }
  return result.cells_failed == 0 ? kExitOk : kExitCellFailures;
}

int cmd_curve(const CommonOpts& opts, const std::string& model_kind,
              const std::string& metric_name) {
  auto cfg = load_config(opts);
  if (!cfg.curve)
    throw minirec::ConfigError("config: the curve command needs a [curve] section");
  const minirec::ModelConfig* model = nullptr;
  std::size_t model_index = 0;
  for (std::size_t i = 0; i < cfg.models.size(); ++i) {
    if (minirec::model_kind_name(cfg.models[i].kind) == model_kind) {
      model = &cfg.models[i];
      model_index = i;
      break;
    }
  }
  if (!model)
    throw minirec::ConfigError("config: no [model] section with kind '" + model_kind + "'");

  minirec::CurveRequest req;
  req.model = *model;
  req.metric = minirec::MetricKind::parse(metric_name);
  req.plan_family = cfg.curve->strategy;
  req.grid = cfg.curve->grid;
  req.seeds = cfg.seeds;
  req.negative_samples = cfg.negative_samples;

  const minirec::Dataset data = minirec::load_dataset(cfg);
  const minirec::Split split = minirec::split(data, cfg.scheme, cfg.split_seed);
  const minirec::LearningCurve curve = minirec::build_learning_curve(split, req);

  std::filesystem::create_directories(cfg.output_dir);
  const std::string stem = "curve_m" + std::to_string(model_index) + "_" + model_kind + "_" +
                           minirec::strategy_name(req.plan_family) + "_" + req.metric.file_tag();
  const std::filesystem::path dir(cfg.output_dir);
  {
    auto os = open_out(dir / (stem + ".csv"));
    curve.write_points_csv(os);
  }
  {
    auto os = open_out(dir / (stem + "_fit.csv"));
    curve.write_fit_csv(os);
  }

  if (!curve.fit) {
    if (!opts.quiet) std::cout << "fit: diverged (points written)\n";
    return kExitOk;
  }
  if (!opts.quiet) {
    std::cout << "fit: a=" << minirec::format_double(curve.fit->a)
              << " b=" << minirec::format_double(curve.fit->b)
              << " c=" << minirec::format_double(curve.fit->c)
              << " residual=" << minirec::format_double(curve.fit->residual) << "\n";
    minirec::StoppingRule rule;
    rule.epsilon = cfg.curve->epsilon;
    rule.grid = req.grid;
    const minirec::StopDecision decision = minirec::decide_stop(curve, rule);
    if (decision.stop)
      std::cout << "decision: stop at budget " << decision.budget << "\n";
    else
      std::cout << "decision: continue collecting\n";
  }
  return kExitOk;
}

int cmd_withdraw(const CommonOpts& opts, const std::string& users_csv) {
  auto cfg = load_config(opts);
  minirec::WithdrawalRequest request;
  for (const auto& u : minirec::detail::split_list(users_csv)) request.user_ids.insert(u);
  request.validate();

  const minirec::Dataset data = minirec::load_dataset(cfg);
  const minirec::Split split = minirec::split(data, cfg.scheme, cfg.split_seed);
  const std::uint64_t seed = minirec::detail::cell_fit_seed(cfg.seeds.front());
  const auto model = minirec::fit_model(cfg.models.front(), split.train, seed);

  const minirec::WithdrawalResult result = minirec::withdraw(*model, split.train, request);
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";

  const auto oracle = minirec::fit_model(cfg.models.front(), result.remaining, seed);
  const auto exactness =
      minirec::verify_exactness(*result.model, *oracle, minirec::probe_grid(result.remaining));

  minirec::CostLedger ledger(cfg.weights);
  ledger.append(0, result.delta);
  std::filesystem::create_directories(cfg.output_dir);
  {
    auto os = open_out(std::filesystem::path(cfg.output_dir) / "ledger.csv");
    ledger.write_csv(os);
  }
  if (!opts.quiet) {
    std::cout << "removed " << result.delta.users_removed << " user(s), retrained on "
              << result.remaining.size() << " interactions\n";
    std::cout << "exactness: " << (exactness.exact ? "exact" : "DIVERGED")
              << " (max deviation " << minirec::format_double(exactness.max_deviation) << ")\n";
    const minirec::CostReport report = minirec::cost_report(ledger, cfg.weights);
    for (const auto& [event_id, proxy] : report.per_event)
      std::cout << "event " << event_id << ": sgd_updates=" << result.delta.sgd_updates
                << " similarity_ops=" << result.delta.similarity_ops
                << " retrains=" << result.delta.retrains
                << " energy_proxy=" << minirec::format_double(proxy) << "\n";
    std::cout << "total energy_proxy: " << minirec::format_double(report.total) << "\n";
  }
  return exactness.exact ? kExitOk : kExitRuntime;
}

int cmd_compat(const CommonOpts& opts) {
  auto cfg = load_config(opts);
  if (!cfg.compat)
    throw minirec::ConfigError("config: the compat command needs a [compat] section");
  const minirec::Dataset data = minirec::load_dataset(cfg);
  const minirec::Split split = minirec::split(data, cfg.scheme, cfg.split_seed);
  const minirec::CompatConfig& c = *cfg.compat;
  const minirec::CompatTask a{c.purpose_a, cfg.models[c.model_a], c.metric_a, c.prefix_a};
  const minirec::CompatTask b{c.purpose_b, cfg.models[c.model_b], c.metric_b, c.prefix_b};
  const minirec::CompatibilityReport rep = minirec::compatibility(
      split, a, b, c.schedule, cfg.seeds, c.thresholds, cfg.negative_samples);
  std::filesystem::create_directories(cfg.output_dir);
  {
    auto os = open_out(std::filesystem::path(cfg.output_dir) / "compat.csv");
    rep.write_csv(os);
  }
  if (!opts.quiet) {
    std::cout << "pearson_r=" << minirec::format_double(rep.pearson_r)
              << " permutation_p=" << minirec::format_double(rep.permutation_p)
              << " verdict=" << minirec::verdict_name(rep.verdict) << "\n";
  }
  return kExitOk;
}

int cmd_gen(const std::string& spec_path, const std::string& out_path,
            std::optional<std::uint64_t> seed, bool quiet) {
  std::ifstream in(spec_path);
  if (!in) throw minirec::ConfigError("config: cannot open '" + spec_path + "'");
  const auto sections = minirec::parse_ini(in);
  const minirec::ConfigSection* dataset = nullptr;
  for (const auto& s : sections)
    if (s.name() == "dataset") dataset = &s;
  if (!dataset) throw minirec::ConfigError("config: missing [dataset] section");
  minirec::DatasetSectionConfig ds;
  minirec::detail::parse_dataset_section(*dataset, ds);
  if (!ds.synthetic)
    throw minirec::ConfigError("gen: the [dataset] section must set synthetic = true");
  if (seed) ds.spec.seed = *seed;
  const minirec::Dataset data = minirec::generate_synthetic(ds.spec);
  minirec::write_csv(out_path, data);
  if (!quiet)
    std::cout << "wrote " << data.size() << " interactions to " << out_path << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"data-minimisation benchmarking harness for recommender systems"};
  app.require_subcommand(1);

  CommonOpts run_opts, curve_opts, withdraw_opts, compat_opts;
  std::string run_out;
  std::string curve_model, curve_metric;
  std::string withdraw_users;
  std::string gen_spec, gen_out;
  std::optional<std::uint64_t> gen_seed;
  bool gen_quiet = false;

  auto add_common = [](CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "experiment config file")->required();
    cmd->add_option("--seed", opts.seed, "override: run with this single seed");
    cmd->add_flag("--quiet", opts.quiet, "suppress informational output");
  };

  CLI::App* run_cmd = app.add_subcommand("run", "execute the full experiment grid");
  add_common(run_cmd, run_opts);
  run_cmd->add_option("--out", run_out, "override the output directory");

  CLI::App* curve_cmd = app.add_subcommand("curve", "emit one learning curve and stop decision");
  add_common(curve_cmd, curve_opts);
  curve_cmd->add_option("--model", curve_model, "model kind (popularity|item_knn|mf_sgd)")
      ->required();
  curve_cmd->add_option("--metric", curve_metric, "metric (rmse|mae|ndcg@K|hit_rate@K)")
      ->required();

  CLI::App* withdraw_cmd =
      app.add_subcommand("withdraw", "withdraw users by exact retraining, with cost report");
  add_common(withdraw_cmd, withdraw_opts);
  withdraw_cmd->add_option("--users", withdraw_users, "comma-separated user ids")->required();

  CLI::App* compat_cmd = app.add_subcommand("compat", "run the compatible-use analyzer");
  add_common(compat_cmd, compat_opts);

  CLI::App* gen_cmd = app.add_subcommand("gen", "write a synthetic dataset CSV");
  gen_cmd->add_option("--spec", gen_spec, "config file with a synthetic [dataset] section")
      ->required();
  gen_cmd->add_option("--out", gen_out, "output CSV path")->required();
  gen_cmd->add_option("--seed", gen_seed, "override the generator seed");
  gen_cmd->add_flag("--quiet", gen_quiet, "suppress informational output");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) return cmd_run(run_opts, run_out);
    if (curve_cmd->parsed()) return cmd_curve(curve_opts, curve_model, curve_metric);
    if (withdraw_cmd->parsed()) return cmd_withdraw(withdraw_opts, withdraw_users);
    if (compat_cmd->parsed()) return cmd_compat(compat_opts);
    if (gen_cmd->parsed()) return cmd_gen(gen_spec, gen_out, gen_seed, gen_quiet);
  } catch (const minirec::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const minirec::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
