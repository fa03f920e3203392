#include "imbal/mpc.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "imbal/error.hpp"
#include "imbal/market.hpp"

namespace imbal {

void MpcConfig::validate() const {
  if (horizon_qh < 1) throw ValidationError("mpc: horizon must be >= 1");
  if (!(dt_h > 0.0)) throw ValidationError("mpc: dt must be > 0");
  if (soc_grid_points < 2) throw ValidationError("mpc: need at least 2 SoC grid points");
  if (action_levels < 2) throw ValidationError("mpc: need at least 2 action levels");
}

std::vector<double> action_grid(const BessSpec& spec, const MeritOrderLadder& ladder,
                                std::span<const double> scenario_si, const MpcConfig& cfg) {
  const double p = spec.p_max_mw;
  std::vector<double> grid;
  grid.reserve(cfg.action_levels + 2);
  for (std::size_t k = 0; k < cfg.action_levels; ++k) {
    grid.push_back(-p + 2.0 * p * double(k) / double(cfg.action_levels - 1));
  }
  grid.push_back(0.0);
  grid.front() = -p;
  grid[cfg.action_levels - 1] = p;

  if (cfg.include_breakpoints) {
    auto add = [&](double a) {
      if (a > -p && a < p) grid.push_back(a);
    };
    for (double si : scenario_si) {
      add(si);  // required volume zero
      double cum = 0.0;
      for (const auto* steps : {&ladder.afrr_up, &ladder.mfrr_up}) {
        for (const auto& s : *steps) add(si + (cum += s.volume_mw));
      }
      cum = 0.0;
      for (const auto* steps : {&ladder.afrr_down, &ladder.mfrr_down}) {
        for (const auto& s : *steps) add(si - (cum += s.volume_mw));
      }
    }
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  // -0.0 and 0.0 compare equal; keep a positive zero
  for (auto& a : grid) {
    if (a == 0.0) a = 0.0;
  }
  return grid;
}

double expected_step_profit(const MeritOrderLadder& ladder, const ScenarioSet& scenarios, std::size_t step,
                            double action_mw, double dt_h) {
  double total = 0.0;
  for (std::size_t w = 0; w < scenarios.n_scenarios; ++w) {
    const double price = clear_planning_qh(ladder, scenarios.at(w, step), action_mw);
    total += scenarios.probabilities[w] * price * (-action_mw) * dt_h;
  }
  return total;
}

namespace {

struct StepTable {
  std::vector<double> actions;
  std::vector<double> profit;
};

void check_inputs(const BessSpec& spec, BessState state, std::span<const MeritOrderLadder> ladders,
                  const ScenarioSet& scenarios, const MpcConfig& cfg) {
  spec.validate();
  cfg.validate();
  scenarios.validate();
  if (!(state.soc >= spec.soc_min - kSocTolerance && state.soc <= spec.soc_max + kSocTolerance)) {
    throw ValidationError(fmt::format("mpc: initial SoC {} outside [{}, {}]", state.soc, spec.soc_min, spec.soc_max));
  }
  if (ladders.size() < scenarios.horizon_qh) throw ValidationError("mpc: ladders do not cover the horizon");
  for (const auto& l : ladders) l.validate();
}

std::vector<StepTable> build_steps(const BessSpec& spec, std::span<const MeritOrderLadder> ladders,
                                   const ScenarioSet& scenarios, const MpcConfig& cfg) {
  std::vector<StepTable> steps(scenarios.horizon_qh);
  std::vector<double> column(scenarios.n_scenarios);
  for (std::size_t t = 0; t < steps.size(); ++t) {
    for (std::size_t w = 0; w < scenarios.n_scenarios; ++w) column[w] = scenarios.at(w, t);
    steps[t].actions = action_grid(spec, ladders[t], column, cfg);
    steps[t].profit.reserve(steps[t].actions.size());
    for (double a : steps[t].actions) {
      steps[t].profit.push_back(expected_step_profit(ladders[t], scenarios, t, a, cfg.dt_h));
    }
  }
  return steps;
}

// Prefer higher value; within a relative 1e-9 band prefer smaller |a|, then smaller a.
bool better(double v, double a, double best_v, double best_a) {
  const double tol = 1e-9 * std::max(1.0, std::abs(best_v));
  if (v > best_v + tol) return true;
  if (v < best_v - tol) return false;
  if (std::abs(a) != std::abs(best_a)) return std::abs(a) < std::abs(best_a);
  return a < best_a;
}

void fill_prices(MpcPlan& plan, std::span<const MeritOrderLadder> ladders, const ScenarioSet& scenarios) {
  plan.prices.clear();
  for (std::size_t t = 0; t < plan.actions_mw.size(); ++t) {
    for (std::size_t w = 0; w < scenarios.n_scenarios; ++w) {
      plan.prices.push_back(clear_planning_qh(ladders[t], scenarios.at(w, t), plan.actions_mw[t]));
    }
  }
}

}  // namespace

double evaluate_plan(const BessSpec& spec, BessState state, std::span<const MeritOrderLadder> ladders,
                     const ScenarioSet& scenarios, std::span<const double> actions_mw, double dt_h) {
  if (actions_mw.size() > scenarios.horizon_qh || actions_mw.size() > ladders.size()) {
    throw ValidationError("evaluate_plan: plan longer than the horizon");
  }
  double total = 0.0;
  for (std::size_t t = 0; t < actions_mw.size(); ++t) {
    state = step(spec, state, actions_mw[t], dt_h);
    total += expected_step_profit(ladders[t], scenarios, t, actions_mw[t], dt_h);
  }
  return total;
}

// ---------------------------------------------------------------------------
// Grid recursion

GridPlanner::GridPlanner(const BessSpec& spec, std::vector<MeritOrderLadder> ladders, ScenarioSet scenarios,
                         const MpcConfig& cfg)
    : spec_(spec), cfg_(cfg), ladders_(std::move(ladders)), scenarios_(std::move(scenarios)) {
  check_inputs(spec_, BessState{spec_.soc_min}, ladders_, scenarios_, cfg_);
  auto tables = build_steps(spec_, ladders_, scenarios_, cfg_);
  steps_.reserve(tables.size());
  for (auto& t : tables) steps_.push_back({std::move(t.actions), std::move(t.profit)});

  const std::size_t g = cfg_.soc_grid_points;
  grid_.resize(g);
  for (std::size_t i = 0; i < g; ++i) {
    grid_[i] = spec_.soc_min + (spec_.soc_max - spec_.soc_min) * double(i) / double(g - 1);
  }
  const std::size_t horizon = steps_.size();
  value_.assign(horizon + 1, std::vector<double>(g, 0.0));
  for (std::size_t t = horizon; t-- > 0;) {
    for (std::size_t i = 0; i < g; ++i) {
      double v = 0.0;
      choose(t, grid_[i], &v);
      value_[t][i] = v;
    }
  }
}

double GridPlanner::future_value(std::size_t t, double soc) const {
  if (t >= steps_.size()) return 0.0;
  const auto& v = value_[t];
  const double pos = (soc - spec_.soc_min) / (spec_.soc_max - spec_.soc_min) * double(grid_.size() - 1);
  if (pos <= 0.0) return v.front();
  if (pos >= double(grid_.size() - 1)) return v.back();
  const auto lo = std::size_t(pos);
  const double w = pos - double(lo);
  return (1.0 - w) * v[lo] + w * v[lo + 1];
}

std::size_t GridPlanner::choose(std::size_t t, double soc, double* value) const {
  const auto& step = steps_[t];
  std::size_t best = step.actions.size();
  double best_v = -std::numeric_limits<double>::infinity();
  double max_v = best_v;
  for (std::size_t k = 0; k < step.actions.size(); ++k) {
    const auto next = try_step(spec_, BessState{soc}, step.actions[k], cfg_.dt_h);
    if (!next) continue;
    const double v = step.profit[k] + future_value(t + 1, next->soc);
    max_v = std::max(max_v, v);
    if (best == step.actions.size() || better(v, step.actions[k], best_v, step.actions[best])) {
      best = k;
      best_v = v;
    }
  }
  if (best == step.actions.size()) throw InfeasibleError("mpc: no feasible action");
  if (value != nullptr) *value = max_v;
  return best;
}

MpcPlan GridPlanner::plan(BessState state) const {
  MpcPlan plan;
  plan.soc_path.push_back(state.soc);
  for (std::size_t t = 0; t < steps_.size(); ++t) {
    double v = 0.0;
    const std::size_t k = choose(t, state.soc, &v);
    if (t == 0) plan.objective_eur = v;
    plan.actions_mw.push_back(steps_[t].actions[k]);
    plan.expected_profit_eur += steps_[t].profit[k];
    state = step(spec_, state, steps_[t].actions[k], cfg_.dt_h);
    plan.soc_path.push_back(state.soc);
  }
  fill_prices(plan, ladders_, scenarios_);
  return plan;
}

double GridPlanner::first_action(BessState state) const {
  return steps_[0].actions[choose(0, state.soc, nullptr)];
}

// ---------------------------------------------------------------------------
// Exact reachable-set recursion

namespace {

std::optional<MpcPlan> plan_exact(const BessSpec& spec, BessState state, const std::vector<StepTable>& steps,
                                  const MpcConfig& cfg) {
  const std::size_t horizon = steps.size();
  std::vector<std::vector<double>> nodes(horizon + 1);
  nodes[0] = {state.soc};
  for (std::size_t t = 0; t < horizon; ++t) {
    auto& next = nodes[t + 1];
    next.reserve(std::min(cfg.max_exact_states + 1, nodes[t].size() * steps[t].actions.size()));
    for (double soc : nodes[t]) {
      for (double a : steps[t].actions) {
        if (auto s = try_step(spec, BessState{soc}, a, cfg.dt_h)) next.push_back(s->soc);
      }
      if (next.size() > 4 * cfg.max_exact_states + 64) {
        std::sort(next.begin(), next.end());
        next.erase(std::unique(next.begin(), next.end()), next.end());
        if (next.size() > cfg.max_exact_states) return std::nullopt;
      }
    }
    std::sort(next.begin(), next.end());
    next.erase(std::unique(next.begin(), next.end()), next.end());
    if (next.size() > cfg.max_exact_states) return std::nullopt;
  }

  std::vector<std::vector<double>> value(horizon + 1);
  value[horizon].assign(nodes[horizon].size(), 0.0);
  auto lookup = [&](std::size_t t, double soc) {
    const auto it = std::lower_bound(nodes[t].begin(), nodes[t].end(), soc);
    return value[t][std::size_t(it - nodes[t].begin())];
  };
  auto choose = [&](std::size_t t, double soc, double* max_value) {
    std::size_t best = steps[t].actions.size();
    double best_v = -std::numeric_limits<double>::infinity();
    double max_v = best_v;
    for (std::size_t k = 0; k < steps[t].actions.size(); ++k) {
      const auto next = try_step(spec, BessState{soc}, steps[t].actions[k], cfg.dt_h);
      if (!next) continue;
      const double v = steps[t].profit[k] + lookup(t + 1, next->soc);
      max_v = std::max(max_v, v);
      if (best == steps[t].actions.size() || better(v, steps[t].actions[k], best_v, steps[t].actions[best])) {
        best = k;
        best_v = v;
      }
    }
    if (best == steps[t].actions.size()) throw InfeasibleError("mpc: no feasible action");
    *max_value = max_v;
    return best;
  };
  for (std::size_t t = horizon; t-- > 0;) {
    value[t].resize(nodes[t].size());
    for (std::size_t i = 0; i < nodes[t].size(); ++i) choose(t, nodes[t][i], &value[t][i]);
  }

  MpcPlan plan;
  plan.exact = true;
  plan.soc_path.push_back(state.soc);
  for (std::size_t t = 0; t < horizon; ++t) {
    double v = 0.0;
    const std::size_t k = choose(t, state.soc, &v);
    if (t == 0) plan.objective_eur = v;
    plan.actions_mw.push_back(steps[t].actions[k]);
    plan.expected_profit_eur += steps[t].profit[k];
    state = step(spec, state, steps[t].actions[k], cfg.dt_h);
    plan.soc_path.push_back(state.soc);
  }
  return plan;
}

}  // namespace

MpcPlan plan_dp(const BessSpec& spec, BessState state, std::span<const MeritOrderLadder> ladders,
                const ScenarioSet& scenarios, const MpcConfig& cfg) {
  check_inputs(spec, state, ladders, scenarios, cfg);
  state.soc = std::clamp(state.soc, spec.soc_min, spec.soc_max);
  if (cfg.max_exact_states > 0) {
    const auto steps = build_steps(spec, ladders, scenarios, cfg);
    if (auto plan = plan_exact(spec, state, steps, cfg)) {
      fill_prices(*plan, ladders, scenarios);
      return *std::move(plan);
    }
  }
  GridPlanner planner(spec, std::vector<MeritOrderLadder>(ladders.begin(), ladders.begin() + std::ptrdiff_t(scenarios.horizon_qh)),
                      scenarios, cfg);
  return planner.plan(state);
}

MpcPlan plan_bruteforce(const BessSpec& spec, BessState state, std::span<const MeritOrderLadder> ladders,
                        const ScenarioSet& scenarios, const MpcConfig& cfg) {
  check_inputs(spec, state, ladders, scenarios, cfg);
  state.soc = std::clamp(state.soc, spec.soc_min, spec.soc_max);
  const std::size_t horizon = scenarios.horizon_qh;
  if (horizon > 4) throw ValidationError("plan_bruteforce: horizon above 4 is too large to enumerate");
  const auto steps = build_steps(spec, ladders, scenarios, cfg);
  for (const auto& s : steps) {
    if (s.actions.size() > 7) throw ValidationError("plan_bruteforce: more than 7 actions per step");
  }

  std::vector<std::size_t> idx(horizon, 0), best_idx;
  double best_v = -std::numeric_limits<double>::infinity();
  // Odometer over all index tuples.
  while (true) {
    BessState s = state;
    double v = 0.0;
    bool feasible = true;
    for (std::size_t t = 0; t < horizon && feasible; ++t) {
      const auto next = try_step(spec, s, steps[t].actions[idx[t]], cfg.dt_h);
      if (!next) {
        feasible = false;
        break;
      }
      s = *next;
      v += steps[t].profit[idx[t]];
    }
    if (feasible) {
      bool take = best_idx.empty();
      if (!take) {
        const double tol = 1e-9 * std::max(1.0, std::abs(best_v));
        if (v > best_v + tol) {
          take = true;
        } else if (v >= best_v - tol) {
          // lexicographic preference for smaller |a| from the first step on
          for (std::size_t t = 0; t < horizon; ++t) {
            const double a = steps[t].actions[idx[t]], b = steps[t].actions[best_idx[t]];
            if (a == b) continue;
            take = std::abs(a) != std::abs(b) ? std::abs(a) < std::abs(b) : a < b;
            break;
          }
        }
      }
      if (take) {
        best_v = v;
        best_idx = idx;
      }
    }
    std::size_t t = 0;
    while (t < horizon && ++idx[t] == steps[t].actions.size()) idx[t++] = 0;
    if (t == horizon) break;
  }

  MpcPlan plan;
  plan.exact = true;
  plan.soc_path.push_back(state.soc);
  for (std::size_t t = 0; t < horizon; ++t) {
    const double a = steps[t].actions[best_idx[t]];
    plan.actions_mw.push_back(a);
    plan.expected_profit_eur += steps[t].profit[best_idx[t]];
    state = step(spec, state, a, cfg.dt_h);
    plan.soc_path.push_back(state.soc);
  }
  plan.objective_eur = plan.expected_profit_eur;
  fill_prices(plan, ladders, scenarios);
  return plan;
}

double receding_control(const BessSpec& spec, BessState state, const BalancingDataset& data,
                        const ForecasterConfig& forecaster, const MpcConfig& cfg, std::size_t t0) {
  if (t0 >= data.total_quarter_hours()) throw ValidationError("receding_control: anchor beyond the data");
  const std::size_t horizon = std::min(cfg.horizon_qh, data.total_quarter_hours() - t0);
  auto scenarios = make_scenarios(data, t0, horizon, forecaster);
  std::vector<MeritOrderLadder> ladders;
  ladders.reserve(horizon);
  for (std::size_t j = 0; j < horizon; ++j) ladders.push_back(data.ladder(t0 + j));
  MpcConfig local = cfg;
  local.horizon_qh = horizon;
  return plan_dp(spec, state, ladders, scenarios, local).actions_mw.front();
}

}  // namespace imbal
