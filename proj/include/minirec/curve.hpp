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
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "minirec/dataset.hpp"
#include "minirec/errors.hpp"
#include "minirec/format.hpp"
#include "minirec/metrics.hpp"
#include "minirec/minimisation.hpp"
#include "minirec/model.hpp"
#include "minirec/models.hpp"
#include "minirec/parallel.hpp"
#include "minirec/prng.hpp"

namespace minirec {

/// Shifted power law y = a * n^(-b) + c.
struct PowerLawFit {
  double a = 0.0;
  double b = 0.0;  // kept >= 0: error metrics decrease with data
  double c = 0.0;
  double residual = 0.0;  // RMS residual over the fitted mean points
  int iterations = 0;
};

inline double power_law_eval(const PowerLawFit& f, double n) {
  return f.a * std::pow(n, -f.b) + f.c;
}

namespace detail {

// Solves the 3x3 system A x = rhs in place, partial pivoting. Returns
// false if the pivot collapses.
inline bool solve3(std::array<std::array<double, 3>, 3>& a, std::array<double, 3>& rhs,
                   std::array<double, 3>& x) {
  for (int col = 0; col < 3; ++col) {
    int pivot = col;
    for (int r = col + 1; r < 3; ++r)
      if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
    if (std::fabs(a[pivot][col]) < 1e-300) return false;
    std::swap(a[col], a[pivot]);
    std::swap(rhs[col], rhs[pivot]);
    for (int r = col + 1; r < 3; ++r) {
      const double m = a[r][col] / a[col][col];
      for (int c2 = col; c2 < 3; ++c2) a[r][c2] -= m * a[col][c2];
      rhs[r] -= m * rhs[col];
    }
  }
  for (int r = 2; r >= 0; --r) {
    double s = rhs[r];
    for (int c2 = r + 1; c2 < 3; ++c2) s -= a[r][c2] * x[c2];
    x[r] = s / a[r][r];
  }
  return true;
}

inline double power_sse(const std::vector<std::pair<double, double>>& pts, double a, double b,
                        double c) {
  double sse = 0.0;
  for (const auto& [n, y] : pts) {
    const double r = y - (a * std::pow(n, -b) + c);
    sse += r * r;
  }
  return sse;
}

}  // namespace detail

/// Fits y = a * n^(-b) + c by damped Gauss-Newton (Levenberg-Marquardt
/// style). Initializer: c0 = min y, b0 = 0.5, a0 = (y0 - c0) * n0^b0 from
/// the smallest-n point. At most 200 iterations, convergence at parameter
/// step below 1e-10; b is clamped to [0, inf) after every step. Returns
/// nullopt when the iteration produces non-finite values (divergence).
/// Requires >= 3 distinct n values.
inline std::optional<PowerLawFit> fit_power_law(std::vector<std::pair<double, double>> pts) {
  {
    std::set<double> distinct;
    for (const auto& [n, y] : pts) {
      if (n < 1.0) throw ConfigError("curve: budgets must be >= 1");
      distinct.insert(n);
    }
    if (distinct.size() < 3)
      throw ConfigError("curve: need >= 3 distinct budgets to fit, got " +
                        std::to_string(distinct.size()));
  }
  std::sort(pts.begin(), pts.end());

  double ymin = pts.front().second, ymax = pts.front().second, ysum = 0.0;
  for (const auto& [n, y] : pts) {
    ymin = std::min(ymin, y);
    ymax = std::max(ymax, y);
    ysum += y;
  }
  const auto finish = [&](double a, double b, double c, int iters) {
    PowerLawFit f{a, b, c, 0.0, iters};
    f.residual = std::sqrt(detail::power_sse(pts, a, b, c) / static_cast<double>(pts.size()));
    return f;
  };
  // Constant observations carry no slope information; canonicalize to the
  // flat member of the least-squares optimum set.
  if (ymax - ymin < 1e-14)
    return finish(0.0, 0.0, ysum / static_cast<double>(pts.size()), 0);

  double c = ymin;
  double b = 0.5;
  double a = (pts.front().second - c) * std::pow(pts.front().first, b);
  double sse = detail::power_sse(pts, a, b, c);
  double lambda = 1e-3;
  int iter = 0;
  for (; iter < 200; ++iter) {
    std::array<std::array<double, 3>, 3> jtj{};
    std::array<double, 3> jtr{};
    for (const auto& [n, y] : pts) {
      const double nb = std::pow(n, -b);
      const double r = y - (a * nb + c);
      const std::array<double, 3> row = {nb, -a * std::log(n) * nb, 1.0};
      for (int i = 0; i < 3; ++i) {
        jtr[i] += row[i] * r;
        for (int j = 0; j < 3; ++j) jtj[i][j] += row[i] * row[j];
      }
    }
    bool stepped = false;
    double step_norm = 0.0;
    for (int attempt = 0; attempt < 60; ++attempt) {
      auto damped = jtj;
      for (int i = 0; i < 3; ++i) damped[i][i] += lambda;
      auto rhs = jtr;
      std::array<double, 3> delta{};
      if (!detail::solve3(damped, rhs, delta)) {
        lambda *= 4.0;
        continue;
      }
      const double a2 = a + delta[0];
      const double b2 = std::max(0.0, b + delta[1]);
      const double c2 = c + delta[2];
      const double sse2 = detail::power_sse(pts, a2, b2, c2);
      if (!std::isfinite(sse2) || !std::isfinite(a2) || !std::isfinite(c2)) return std::nullopt;
      if (sse2 <= sse) {
        step_norm = std::sqrt((a2 - a) * (a2 - a) + (b2 - b) * (b2 - b) + (c2 - c) * (c2 - c));
        a = a2;
        b = b2;
        c = c2;
        sse = sse2;
        lambda = std::max(lambda * 0.5, 1e-12);
        stepped = true;
        break;
      }
      lambda *= 4.0;
    }
    if (!stepped || step_norm < 1e-10) break;
  }
  if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c)) return std::nullopt;
  return finish(a, b, c, iter);
}

/// One evaluated grid cell.
struct CurvePoint {
  int budget = 0;
  std::uint64_t seed = 0;
  double value = 0.0;
};

struct LearningCurve {
  std::vector<CurvePoint> points;
  std::optional<PowerLawFit> fit;

  /// (budget, mean value over seeds), sorted by budget.
  std::vector<std::pair<double, double>> mean_points() const {
    std::map<int, std::pair<double, int>> acc;
    for (const auto& p : points) {
      auto& [sum, cnt] = acc[p.budget];
      sum += p.value;
      ++cnt;
    }
    std::vector<std::pair<double, double>> out;
    out.reserve(acc.size());
    for (const auto& [budget, sc] : acc)
      out.emplace_back(static_cast<double>(budget), sc.first / static_cast<double>(sc.second));
    return out;
  }

  void fit_now() { fit = fit_power_law(mean_points()); }

  void write_points_csv(std::ostream& os) const {
    os << "budget,seed,metric_value\n";
    for (const auto& p : points)
      os << p.budget << "," << p.seed << "," << format_double(p.value) << "\n";
  }

  /// Header always; the data row only when the fit succeeded, so a
  /// header-only sidecar marks a divergent fit.
  void write_fit_csv(std::ostream& os) const {
    os << "a,b,c,residual\n";
    if (fit)
      os << format_double(fit->a) << "," << format_double(fit->b) << "," << format_double(fit->c)
         << "," << format_double(fit->residual) << "\n";
  }
};

/// Halt data collection once the predicted improvement per budget
/// doubling drops below epsilon.
struct StoppingRule {
  double epsilon = 0.0;
  std::vector<int> grid;

  void validate() const {
    if (!(epsilon > 0.0)) throw ConfigError("stopping rule: epsilon must be > 0");
    if (grid.empty()) throw ConfigError("stopping rule: empty budget grid");
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (grid[i] < 1) throw ConfigError("stopping rule: budgets must be >= 1");
      if (i > 0 && grid[i] <= grid[i - 1])
        throw ConfigError("stopping rule: grid must be strictly increasing");
    }
  }
};

struct StopDecision {
  bool stop = false;
  int budget = 0;  // meaningful only when stop
};

/// Smallest grid budget k whose predicted doubling gain |y(k) - y(2k)|
/// falls below rule.epsilon; continue when none qualifies.
inline StopDecision decide_stop(const LearningCurve& curve, const StoppingRule& rule) {
  rule.validate();
  if (!curve.fit) throw DataError("decide_stop: curve unfit");
  for (int k : rule.grid) {
    const double gain = std::fabs(power_law_eval(*curve.fit, static_cast<double>(k)) -
                                  power_law_eval(*curve.fit, 2.0 * static_cast<double>(k)));
    if (gain < rule.epsilon) return {true, k};
  }
  return {false, 0};
}

struct PredictionError {
  double max_abs = 0.0;
  double mean_abs = 0.0;
};

/// Deviation between the fitted curve and observed values at held-out
/// budgets. Quantifies extrapolation inaccuracy; setting an acceptability
/// threshold is left to the caller.
inline PredictionError prediction_error(const LearningCurve& curve,
                                        const std::vector<std::pair<double, double>>& holdout) {
  if (!curve.fit) throw DataError("prediction_error: curve unfit");
  if (holdout.empty()) throw ConfigError("prediction_error: empty holdout set");
  std::set<double> fitted;
  for (const auto& [n, y] : curve.mean_points()) fitted.insert(n);
  PredictionError err;
  for (const auto& [n, y] : holdout) {
    if (fitted.count(n))
      throw ConfigError("prediction_error: holdout budget " + format_double(n) +
                        " overlaps the fitted budgets");
    const double d = std::fabs(power_law_eval(*curve.fit, n) - y);
    err.max_abs = std::max(err.max_abs, d);
    err.mean_abs += d;
  }
  err.mean_abs /= static_cast<double>(holdout.size());
  return err;
}

namespace detail {

// Per-cell seed streams. One base seed fans out into independent plan,
// fit, and evaluation streams so strategies and models never share draws.
inline std::uint64_t cell_plan_seed(std::uint64_t s) { return derive_seed(s, "plan"); }
inline std::uint64_t cell_fit_seed(std::uint64_t s) { return derive_seed(s, "fit"); }
inline std::uint64_t cell_eval_seed(std::uint64_t s) { return derive_seed(s, "eval"); }

}  // namespace detail

struct CurveRequest {
  ModelConfig model;
  MetricKind metric;
  Aggregation aggregation = Aggregation::global_mean;
  Strategy plan_family = Strategy::random_k;  // must be budgeted
  std::vector<int> grid;
  std::vector<std::uint64_t> seeds;
  int negative_samples = 100;

  void validate() const {
    model.validate();
    if (!strategy_budgeted(plan_family))
      throw ConfigError("curve: plan family must be a budgeted strategy");
    if (grid.size() < 3) throw ConfigError("curve: grid needs >= 3 budgets");
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (grid[i] < 1) throw ConfigError("curve: budgets must be >= 1");
      if (i > 0 && grid[i] <= grid[i - 1])
        throw ConfigError("curve: grid must be strictly increasing");
    }
    if (seeds.empty()) throw ConfigError("curve: need >= 1 seed");
    if (negative_samples < 1) throw ConfigError("curve: negative_samples must be >= 1");
  }
};

/// Evaluates the metric at every (budget, seed) cell of the grid, then
/// fits the power law to the per-budget means. A divergent power-law fit
/// leaves the points intact with the fit marked absent.
inline LearningCurve build_learning_curve(const Split& split, const CurveRequest& req) {
  req.validate();
  LearningCurve curve;
  curve.points.resize(req.grid.size() * req.seeds.size());
  detail::parallel_for(curve.points.size(), [&](std::size_t i) {
    const int budget = req.grid[i / req.seeds.size()];
    const std::uint64_t seed = req.seeds[i % req.seeds.size()];
    MinimisationPlan plan;
    plan.strategy = req.plan_family;
    plan.budget = budget;
    plan.seed = detail::cell_plan_seed(seed);
    const Dataset reduced = apply(plan, split.train);
    const auto model = fit_model(req.model, reduced, detail::cell_fit_seed(seed));
    EvalOptions opts;
    opts.negative_samples = req.negative_samples;
    opts.seed = detail::cell_eval_seed(seed);
    const EvalReport rep =
        evaluate(*model, reduced, split.test, req.metric, req.aggregation, opts);
    curve.points[i] = {budget, seed, rep.summary()};
  });
  curve.fit = fit_power_law(curve.mean_points());
  return curve;
}

}  // namespace minirec
