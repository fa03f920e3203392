#pragma once

#include <span>
#include <vector>

#include "imbal/battery.hpp"
#include "imbal/data.hpp"
#include "imbal/forecast.hpp"

namespace imbal {

struct MpcConfig {
  std::size_t horizon_qh = 4;
  double dt_h = 0.25;
  std::size_t soc_grid_points = 101;
  std::size_t action_levels = 21;     // uniform levels in [-P, +P]
  bool include_breakpoints = true;    // add actions where the clearing changes ladder step
  // Below this many reachable states per step the planner searches the exact
  // reachable SoC set; above it, a uniform SoC grid with linear interpolation.
  std::size_t max_exact_states = 4096;

  void validate() const;
};

/// A single action sequence shared by every scenario.
struct MpcPlan {
  std::vector<double> actions_mw;
  std::vector<double> soc_path;  // horizon + 1 entries
  double expected_profit_eur = 0.0;  // the action sequence scored against the scenarios
  double objective_eur = 0.0;        // planner's value at the initial state
  std::vector<double> prices;        // [step][scenario] clearing prices of the chosen actions
  bool exact = false;                // searched the exact reachable state set
};

/// Candidate actions for one horizon step: uniform levels plus, optionally,
/// every action at which some scenario's required volume crosses a ladder
/// step boundary. Sorted, de-duplicated, always containing 0 and +-P.
std::vector<double> action_grid(const BessSpec& spec, const MeritOrderLadder& ladder,
                                std::span<const double> scenario_si, const MpcConfig& cfg);

/// Expected profit of an action at one step under the planning clearing.
double expected_step_profit(const MeritOrderLadder& ladder, const ScenarioSet& scenarios, std::size_t step,
                            double action_mw, double dt_h);

/// Scores a fixed action sequence; throws InfeasibleError if it violates SoC bounds.
double evaluate_plan(const BessSpec& spec, BessState state, std::span<const MeritOrderLadder> ladders,
                     const ScenarioSet& scenarios, std::span<const double> actions_mw, double dt_h);

/// Backward pass over a uniform SoC grid. Independent of the initial state,
/// so one table serves every state of charge at the same anchor.
class GridPlanner {
public:
  GridPlanner(const BessSpec& spec, std::vector<MeritOrderLadder> ladders, ScenarioSet scenarios,
              const MpcConfig& cfg);

  MpcPlan plan(BessState state) const;
  double first_action(BessState state) const;

private:
  struct StepTable {
    std::vector<double> actions;
    std::vector<double> profit;  // expected profit per action
  };

  double future_value(std::size_t t, double soc) const;  // value-to-go from step t
  std::size_t choose(std::size_t t, double soc, double* value) const;

  BessSpec spec_;
  MpcConfig cfg_;
  std::vector<MeritOrderLadder> ladders_;
  ScenarioSet scenarios_;
  std::vector<StepTable> steps_;
  std::vector<double> grid_;
  std::vector<std::vector<double>> value_;  // [step][grid point], step in 0..H
};

/// Expected-profit maximizing plan. Uses the exact reachable-set recursion
/// when small enough, otherwise GridPlanner. Throws ValidationError when
/// the initial state or inputs are invalid.
MpcPlan plan_dp(const BessSpec& spec, BessState state, std::span<const MeritOrderLadder> ladders,
                const ScenarioSet& scenarios, const MpcConfig& cfg);

/// Exhaustive search over all action sequences. Limited to horizon <= 4 and
/// at most 7 actions per step.
MpcPlan plan_bruteforce(const BessSpec& spec, BessState state, std::span<const MeritOrderLadder> ladders,
                        const ScenarioSet& scenarios, const MpcConfig& cfg);

/// Plans from quarter hour t0 (horizon truncated at the end of the data) and
/// returns the first action.
double receding_control(const BessSpec& spec, BessState state, const BalancingDataset& data,
                        const ForecasterConfig& forecaster, const MpcConfig& cfg, std::size_t t0);

}  // namespace imbal
