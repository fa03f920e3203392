#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "imbal/battery.hpp"
#include "imbal/data.hpp"
#include "imbal/distsac.hpp"
#include "imbal/environment.hpp"
#include "imbal/forecast.hpp"
#include "imbal/mpc.hpp"

namespace imbal {

struct DataSource {
  std::filesystem::path minutes_csv;  // both empty: generate synthetic data
  std::filesystem::path ladders_csv;
  int synthetic_days = 30;
  std::uint64_t data_seed = 7;
  bool proactive = true;  // synthetic only: false removes proactive mFRR
};

/// Agent defaults for harness runs: midpoint quantile levels and a reward
/// scale resolved to 1 / P_b (0 = automatic).
inline AgentConfig harness_agent_defaults() {
  AgentConfig a;
  a.midpoint_quantiles = true;
  a.reward_scale = 0.0;
  return a;
}

struct RunConfig {
  std::string battery = "1mw";
  AgentVariant variant = AgentVariant::MpcGuided;
  MpcConfig mpc;
  std::string forecaster = "gaussian";
  double sigma0 = 50.0;
  double growth = 0.2;
  std::size_t n_scenarios = 20;
  std::filesystem::path quantile_csv;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::size_t episodes = 2000;
  Split split = Split::Test;
  std::filesystem::path out_dir = "runs";
  DataSource data;
  AgentConfig agent = harness_agent_defaults();
  std::size_t update_every = 1;    // environment minutes between train steps
  std::size_t warmup_steps = 0;    // minutes before the first update (at least one batch)
  std::size_t eval_every = 50;     // episodes between validation runs
  double initial_soc = 0.5;
  std::vector<std::size_t> horizons{1, 2, 4, 8, 16, 40};
  std::vector<std::size_t> scenario_counts{20, 50, 100};
  std::size_t workers = 1;  // parallel seeds

  void validate() const;
  /// Paper-scale training: 50000 episodes, buffer 1e6, batch 16384.
  void use_paper_scale();
};

RunConfig load_run_config(const std::filesystem::path& path);
std::string run_config_json(const RunConfig& cfg);

BalancingDataset load_dataset(const DataSource& src);
BessSpec battery_spec(const RunConfig& cfg);
ForecasterConfig forecaster_config(const RunConfig& cfg, const QuantileForecastTable* table = nullptr);
/// reward_scale resolved against the battery.
AgentConfig agent_config(const RunConfig& cfg);

/// Per-anchor MPC decisions and forecasts. With caching, each anchor's grid
/// backward pass is built once and reused for any state of charge.
class MpcController {
public:
  MpcController(const BalancingDataset& data, BessSpec spec, ForecasterConfig forecaster, MpcConfig cfg,
                bool cached);

  double action(BessState state, std::size_t t0);
  /// Mean SI of the forecast scenarios for the next `horizon` quarter hours
  /// (padded with the last value at the end of the data).
  std::vector<double> forecast_means(std::size_t t0, std::size_t horizon);
  /// Builds every cached anchor of the given days up front (safe to share
  /// read-only afterwards).
  void precompute(const std::vector<std::size_t>& days);

  double planning_seconds() const { return planning_s_; }
  std::size_t plans() const { return plans_; }

private:
  const GridPlanner& planner(std::size_t t0);

  const BalancingDataset* data_;
  BessSpec spec_;
  ForecasterConfig forecaster_;
  MpcConfig cfg_;
  bool cached_;
  std::vector<std::optional<GridPlanner>> planners_;
  double planning_s_ = 0.0;
  std::size_t plans_ = 0;
};

/// Context provider that feeds an environment the MPC action and SI
/// forecast its variant needs at every quarter-hour boundary.
BalancingEnv::ContextProvider make_context_provider(AgentVariant variant, MpcController* mpc,
                                                    std::size_t forecast_horizon);

using Policy = std::function<std::size_t(const Observation&)>;

struct EpisodeLog {
  std::size_t day = 0;
  double profit_eur = 0.0;
  std::vector<double> actions_mw;       // applied, per minute
  std::vector<double> mpc_actions_mw;   // per quarter hour, when available
  std::vector<double> prices;           // settlement price per quarter hour
  double decision_seconds = 0.0;
  std::size_t decisions = 0;
};

EpisodeLog run_episode(BalancingEnv& env, std::size_t day, const Policy& policy, double initial_soc = 0.5);

/// Profit if each quarter hour's mean minute action had been held constant.
double qh_position_profit(const BalancingDataset& data, const EpisodeLog& log);

struct EvalSummary {
  double profit_eur = 0.0;
  double profit_per_mw_qh = 0.0;
  double qh_position_profit_per_mw_qh = 0.0;
  double seconds_per_decision = 0.0;
  std::array<double, kMinutesPerQuarterHour> deviation_mw{};  // mean |a - a_mpc| per minute
  bool has_deviation = false;
  std::size_t quarter_hours = 0;
  std::size_t minutes = 0;
  std::size_t soc_violations = 0;
};

EvalSummary summarize(const BalancingDataset& data, const BessSpec& spec, const std::vector<EpisodeLog>& logs);

EvalSummary evaluate_agent(const BalancingDataset& data, const BessSpec& spec, const DistSacAgent& agent,
                           const std::vector<std::size_t>& days, MpcController* mpc,
                           std::size_t forecast_horizon = 4, double initial_soc = 0.5);

struct TrainOptions {
  std::vector<std::size_t> train_days;
  std::vector<std::size_t> validation_days;
  std::size_t episodes = 2000;
  std::size_t update_every = 1;
  std::size_t warmup_steps = 0;
  std::size_t eval_every = 50;
  double initial_soc = 0.5;
  std::size_t forecast_horizon = 4;
  std::optional<double> stop_at_validation_eur;  // stop once validation profit reaches this
  std::filesystem::path checkpoint_dir;          // empty: keep the best agent in memory only
  /// Called after every episode with the last update's diagnostics.
  std::function<void(std::size_t episode, const TrainDiagnostics&)> on_episode;
};

struct TrainResult {
  DistSacAgent best;
  double best_validation_eur = 0.0;
  std::size_t best_episode = 0;
  std::size_t episodes_run = 0;
  std::vector<std::pair<std::size_t, double>> learning_curve;  // (episode, validation profit EUR)
  std::size_t minutes = 0;
  std::size_t soc_violations = 0;  // training and validation rollouts
  std::size_t updates = 0;
  double seconds = 0.0;
};

TrainResult train_agent(const BalancingDataset& data, const BessSpec& spec, AgentVariant variant,
                        const AgentConfig& agent_cfg, std::uint64_t seed, const TrainOptions& opt,
                        MpcController* mpc);

struct ResultRow {
  std::string method;
  std::string battery;
  std::uint64_t seed = 0;
  std::string metric;
  double value = 0.0;
};

void write_results_csv(const std::filesystem::path& path, const std::vector<ResultRow>& rows);
std::vector<ResultRow> read_results_csv(const std::filesystem::path& path);

struct MpcRunResult {
  EvalSummary summary;
  std::vector<EpisodeLog> logs;
};

/// Receding-horizon control over the split's days, each quarter hour's
/// action settled minute by minute.
MpcRunResult run_mpc(const RunConfig& cfg, const BalancingDataset& data);

/// "mpc_<forecaster>_h<horizon>"
std::string mpc_method(const RunConfig& cfg);
/// Result rows of an MPC run; the seed column carries the data seed.
std::vector<ResultRow> mpc_rows(const RunConfig& cfg, const MpcRunResult& r);

/// Trains every seed; writes checkpoints, learning_curve.csv and results.csv.
std::vector<ResultRow> run_train(const RunConfig& cfg, const BalancingDataset& data);

/// Greedy rollout of a saved agent over the split; writes results.csv and
/// (for MPC-informed variants) deviation.csv.
std::vector<ResultRow> run_eval(const RunConfig& cfg, const BalancingDataset& data,
                                const std::filesystem::path& agent_dir, std::uint64_t seed);

/// Concatenates results.csv of several run directories into one table and a
/// per-method summary; throws naming any missing run.
std::vector<ResultRow> compare(const std::vector<std::filesystem::path>& run_dirs,
                               const std::filesystem::path& out_dir);

struct RuntimeBench {
  std::vector<std::pair<std::size_t, double>> mpc_seconds;  // (scenarios, median planning seconds)
  double agent_seconds_per_action = 0.0;
};

/// MPC timings use the grid planner (median of `repeats`) on the first anchor of the split.
RuntimeBench runtime_bench(const RunConfig& cfg, const BalancingDataset& data, std::size_t repeats = 9);

}  // namespace imbal
