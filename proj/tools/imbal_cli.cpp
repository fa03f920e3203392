// Command-line front end: data generation, MPC runs, agent training and
// evaluation, result consolidation and runtime measurement.
#include <cstdio>
#include <iostream>
#include <sstream>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "imbal/error.hpp"
#include "imbal/harness.hpp"

using namespace imbal;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> battery, variant, forecaster, split;
  std::optional<std::size_t> horizon, scenarios, episodes;
  std::optional<double> sigma0;
  std::optional<std::string> out;
  std::optional<std::string> minutes, ladders;
  std::optional<int> days;
  std::optional<std::uint64_t> data_seed;
  bool paper_scale = false;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "JSON run configuration");
  app->add_option("--seed", c.seed, "single seed (replaces the seed list)");
  app->add_option("--battery", c.battery, "1mw | 10mw | 50mw | 100mw");
  app->add_option("--variant", c.variant, "base | with_frr | with_forecast | mpc_fc | mpc_guided");
  app->add_option("--horizon", c.horizon, "MPC horizon in quarter hours");
  app->add_option("--scenarios", c.scenarios, "forecast scenarios per anchor");
  app->add_option("--sigma0", c.sigma0, "Gaussian forecast noise at the first step (MW)");
  app->add_option("--forecaster", c.forecaster, "perfect | gaussian | quantile");
  app->add_option("--split", c.split, "train | validation | test");
  app->add_option("--episodes", c.episodes, "training episodes");
  app->add_option("--out", c.out, "output directory");
  app->add_option("--minutes", c.minutes, "minute data CSV");
  app->add_option("--ladders", c.ladders, "ladder CSV");
  app->add_option("--days", c.days, "synthetic days when no CSV is given");
  app->add_option("--data-seed", c.data_seed, "synthetic data seed");
  app->add_flag("--paper-scale", c.paper_scale, "50000 episodes, buffer 1e6, batch 16384");
}

RunConfig resolve(const Common& c) {
  RunConfig cfg = c.config.empty() ? RunConfig{} : load_run_config(c.config);
  if (c.seed) cfg.seeds = {*c.seed};
  if (c.battery) cfg.battery = *c.battery;
  if (c.variant) cfg.variant = parse_variant(*c.variant);
  if (c.horizon) cfg.mpc.horizon_qh = *c.horizon;
  if (c.scenarios) cfg.n_scenarios = *c.scenarios;
  if (c.sigma0) cfg.sigma0 = *c.sigma0;
  if (c.forecaster) cfg.forecaster = *c.forecaster;
  if (c.split) cfg.split = parse_split(*c.split);
  if (c.paper_scale) cfg.use_paper_scale();
  if (c.episodes) cfg.episodes = *c.episodes;
  if (c.out) cfg.out_dir = *c.out;
  if (c.minutes) cfg.data.minutes_csv = *c.minutes;
  if (c.ladders) cfg.data.ladders_csv = *c.ladders;
  if (c.days) cfg.data.synthetic_days = *c.days;
  if (c.data_seed) cfg.data.data_seed = *c.data_seed;
  cfg.validate();
  return cfg;
}

void print_summary(const std::string& label, const EvalSummary& s) {
  fmt::print("{}: profit {:.4f} EUR/MW/QH ({:.2f} EUR over {} QH), qh-position {:.4f}, {:.3g} s/decision, "
             "{} SoC violations\n",
             label, s.profit_per_mw_qh, s.profit_eur, s.quarter_hours, s.qh_position_profit_per_mw_qh,
             s.seconds_per_decision, s.soc_violations);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Implicit balancing with MPC and distributional soft actor-critic"};
  app.require_subcommand(1);

  Common gen_c, sim_c, plan_c, train_c, eval_c, bench_c;

  auto* gen = app.add_subcommand("gen-data", "write a synthetic dataset as CSV");
  add_common(gen, gen_c);
  bool toy = false, no_proactive = false;
  gen->add_flag("--toy", toy, "deterministic cyclic-price toy day");
  gen->add_flag("--no-proactive", no_proactive, "synthetic data without proactive mFRR");

  auto* sim = app.add_subcommand("simulate", "receding-horizon MPC over a split");
  add_common(sim, sim_c);
  bool sweep = false;
  sim->add_flag("--sweep", sweep, "repeat for every horizon in the config's horizon list");

  auto* plan = app.add_subcommand("mpc-plan", "print one MPC plan");
  add_common(plan, plan_c);
  std::size_t plan_day = 0;
  int plan_qh = 0;
  double plan_soc = 0.5;
  plan->add_option("--day", plan_day, "day index");
  plan->add_option("--qh", plan_qh, "quarter hour of the day")->check(CLI::Range(0, kQuarterHoursPerDay - 1));
  plan->add_option("--soc", plan_soc, "initial state of charge")->check(CLI::Range(0.0, 1.0));

  auto* train = app.add_subcommand("train", "train agents for every seed");
  add_common(train, train_c);

  auto* eval = app.add_subcommand("evaluate", "greedy rollout of a saved agent");
  add_common(eval, eval_c);
  std::string agent_dir;
  eval->add_option("--agent", agent_dir, "agent checkpoint directory")->required();

  auto* cmp = app.add_subcommand("compare", "consolidate results of several runs");
  std::vector<std::string> run_dirs;
  std::string cmp_out = "compare";
  cmp->add_option("runs", run_dirs, "run directories containing results.csv")->required();
  cmp->add_option("--out", cmp_out, "output directory");

  auto* bench = app.add_subcommand("runtime-bench", "MPC planning and agent inference timing");
  add_common(bench, bench_c);
  std::size_t repeats = 9;
  bench->add_option("--repeats", repeats, "planning calls per scenario count");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      auto cfg = resolve(gen_c);
      if (no_proactive) cfg.data.proactive = false;
      const auto data = toy ? gen_cyclic_toy() : load_dataset(cfg.data);
      std::filesystem::create_directories(cfg.out_dir);
      write_csv(data, cfg.out_dir / "minutes.csv", cfg.out_dir / "ladders.csv");
      fmt::print("wrote {} days to {}\n", data.size(), cfg.out_dir.string());
    } else if (sim->parsed()) {
      auto cfg = resolve(sim_c);
      const auto data = load_dataset(cfg.data);
      std::vector<ResultRow> rows;
      const auto horizons = sweep ? cfg.horizons : std::vector<std::size_t>{cfg.mpc.horizon_qh};
      for (auto h : horizons) {
        cfg.mpc.horizon_qh = h;
        const auto r = run_mpc(cfg, data);
        print_summary(mpc_method(cfg), r.summary);
        auto part = mpc_rows(cfg, r);
        rows.insert(rows.end(), part.begin(), part.end());
      }
      write_results_csv(cfg.out_dir / "results.csv", rows);
    } else if (plan->parsed()) {
      auto cfg = resolve(plan_c);
      const auto data = load_dataset(cfg.data);
      if (plan_day >= data.size()) throw ValidationError("--day beyond the dataset");
      const std::size_t t0 = plan_day * kQuarterHoursPerDay + std::size_t(plan_qh);
      const std::size_t horizon = std::min(cfg.mpc.horizon_qh, data.total_quarter_hours() - t0);
      std::optional<QuantileForecastTable> table;
      if (!cfg.quantile_csv.empty()) table = QuantileForecastTable::load_csv(cfg.quantile_csv);
      const auto scen = make_scenarios(data, t0, horizon, forecaster_config(cfg, table ? &*table : nullptr));
      std::vector<MeritOrderLadder> ladders;
      for (std::size_t j = 0; j < horizon; ++j) ladders.push_back(data.ladder(t0 + j));
      auto m = cfg.mpc;
      m.horizon_qh = horizon;
      const auto p = plan_dp(battery_spec(cfg), BessState{plan_soc}, ladders, scen, m);
      fmt::print("step,action_mw,soc_after\n");
      for (std::size_t j = 0; j < p.actions_mw.size(); ++j) fmt::print("{},{},{}\n", j, p.actions_mw[j], p.soc_path[j + 1]);
      fmt::print("expected_profit_eur {}\nobjective_eur {}\nexact {}\n", p.expected_profit_eur, p.objective_eur,
                 p.exact);
    } else if (train->parsed()) {
      const auto cfg = resolve(train_c);
      const auto data = load_dataset(cfg.data);
      const auto rows = run_train(cfg, data);
      for (const auto& r : rows) fmt::print("{} seed {} {} = {}\n", r.method, r.seed, r.metric, r.value);
    } else if (eval->parsed()) {
      const auto cfg = resolve(eval_c);
      const auto data = load_dataset(cfg.data);
      const auto rows = run_eval(cfg, data, agent_dir, cfg.seeds.front());
      for (const auto& r : rows) fmt::print("{} {} = {}\n", r.method, r.metric, r.value);
    } else if (cmp->parsed()) {
      std::vector<std::filesystem::path> dirs(run_dirs.begin(), run_dirs.end());
      const auto rows = compare(dirs, cmp_out);
      fmt::print("{} rows from {} runs -> {}/results.csv, {}/summary.csv\n", rows.size(), dirs.size(), cmp_out, cmp_out);
    } else if (bench->parsed()) {
      const auto cfg = resolve(bench_c);
      const auto data = load_dataset(cfg.data);
      const auto rb = runtime_bench(cfg, data, repeats);
      std::vector<ResultRow> rows;
      for (auto [n, s] : rb.mpc_seconds) {
        fmt::print("stochastic MPC, {} scenarios: {:.4f} s/QH\n", n, s);
        rows.push_back({fmt::format("mpc_gaussian_s{}", n), cfg.battery, 0, "runtime_s_per_qh", s});
      }
      fmt::print("agent ({}): {:.3g} s/action\n", variant_name(cfg.variant), rb.agent_seconds_per_action);
      rows.push_back({variant_name(cfg.variant), cfg.battery, 0, "runtime_s_per_action", rb.agent_seconds_per_action});
      write_results_csv(cfg.out_dir / "results.csv", rows);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
