#include "imbal/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>
#include <tuple>

#include <fmt/format.h>

#include "imbal/error.hpp"
#include "imbal/market.hpp"

namespace imbal {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

}  // namespace

// ---------------------------------------------------------------- data, battery, forecaster

BalancingDataset load_dataset(const DataSource& src) {
  if (!src.minutes_csv.empty() || !src.ladders_csv.empty()) {
    if (src.minutes_csv.empty() || src.ladders_csv.empty()) {
      throw ValidationError("data source: give both the minutes and the ladders file");
    }
    return load_csv(src.minutes_csv, src.ladders_csv);
  }
  SyntheticProfile profile;
  if (!src.proactive) profile.proactive_fraction = 0.0;
  return gen_synthetic(src.data_seed, src.synthetic_days, profile);
}

BessSpec battery_spec(const RunConfig& cfg) { return BessSpec::preset(cfg.battery); }

ForecasterConfig forecaster_config(const RunConfig& cfg, const QuantileForecastTable* table) {
  ForecasterConfig f;
  f.kind = parse_forecaster(cfg.forecaster);
  f.sigma0 = cfg.sigma0;
  f.growth = cfg.growth;
  f.n_scenarios = cfg.n_scenarios;
  f.seed = cfg.data.data_seed;
  f.quantiles = table;
  if (f.kind == ForecasterKind::Quantile && table == nullptr) {
    throw ValidationError("quantile forecaster needs quantile_csv");
  }
  return f;
}

AgentConfig agent_config(const RunConfig& cfg) {
  AgentConfig a = cfg.agent;
  if (a.reward_scale == 0.0) a.reward_scale = 1.0 / battery_spec(cfg).p_max_mw;
  a.validate();
  return a;
}

// ---------------------------------------------------------------- MPC controller

MpcController::MpcController(const BalancingDataset& data, BessSpec spec, ForecasterConfig forecaster,
                             MpcConfig cfg, bool cached)
    : data_(&data), spec_(spec), forecaster_(forecaster), cfg_(cfg), cached_(cached) {
  spec_.validate();
  cfg_.validate();
  if (cached_) planners_.resize(data.total_quarter_hours());
}

const GridPlanner& MpcController::planner(std::size_t t0) {
  auto& slot = planners_.at(t0);
  if (!slot) {
    const std::size_t horizon = std::min(cfg_.horizon_qh, data_->total_quarter_hours() - t0);
    std::vector<MeritOrderLadder> ladders;
    ladders.reserve(horizon);
    for (std::size_t j = 0; j < horizon; ++j) ladders.push_back(data_->ladder(t0 + j));
    MpcConfig local = cfg_;
    local.horizon_qh = horizon;
    slot.emplace(spec_, std::move(ladders), make_scenarios(*data_, t0, horizon, forecaster_), local);
  }
  return *slot;
}

double MpcController::action(BessState state, std::size_t t0) {
  if (t0 >= data_->total_quarter_hours()) throw ValidationError("mpc: anchor beyond the data");
  const auto start = Clock::now();
  const double a = cached_ ? planner(t0).first_action(state) : receding_control(spec_, state, *data_, forecaster_, cfg_, t0);
  planning_s_ += seconds_since(start);
  ++plans_;
  return a;
}

std::vector<double> MpcController::forecast_means(std::size_t t0, std::size_t horizon) {
  const std::size_t avail = std::min(horizon, data_->total_quarter_hours() - t0);
  auto means = make_scenarios(*data_, t0, avail, forecaster_).step_mean();
  means.resize(horizon, means.back());
  return means;
}

void MpcController::precompute(const std::vector<std::size_t>& days) {
  if (!cached_) return;
  for (auto d : days) {
    for (std::size_t q = 0; q < std::size_t(kQuarterHoursPerDay); ++q) planner(d * kQuarterHoursPerDay + q);
  }
}

BalancingEnv::ContextProvider make_context_provider(AgentVariant variant, MpcController* mpc,
                                                    std::size_t forecast_horizon) {
  if ((needs_mpc(variant) || needs_forecast(variant)) && mpc == nullptr) {
    throw ValidationError(std::string("variant ") + variant_name(variant) + " needs an MPC controller");
  }
  return [variant, mpc, forecast_horizon](const BalancingEnv& env) {
    QhContext ctx;
    if (needs_mpc(variant)) ctx.mpc_action_mw = mpc->action(env.state(), env.global_qh());
    if (needs_forecast(variant)) ctx.si_forecast_mw = mpc->forecast_means(env.global_qh(), forecast_horizon);
    return ctx;
  };
}

// ---------------------------------------------------------------- rollouts

EpisodeLog run_episode(BalancingEnv& env, std::size_t day, const Policy& policy, double initial_soc) {
  EpisodeLog log;
  log.day = day;
  log.actions_mw.reserve(kMinutesPerDay);
  Observation obs = env.reset(day, initial_soc);
  while (true) {
    if (env.minute_in_qh() == 0 && env.context().mpc_action_mw) log.mpc_actions_mw.push_back(*env.context().mpc_action_mw);
    const auto start = Clock::now();
    const std::size_t a = policy(obs);
    log.decision_seconds += seconds_since(start);
    ++log.decisions;
    StepResult r = env.step(a);
    log.actions_mw.push_back(r.applied_action_mw);
    if (r.qh_closed) {
      log.profit_eur += r.reward;
      log.prices.push_back(*r.settlement_price);
    }
    if (r.terminal) break;
    obs = r.next.features.empty() ? env.observe() : std::move(r.next);
  }
  return log;
}

double qh_position_profit(const BalancingDataset& data, const EpisodeLog& log) {
  if (log.actions_mw.size() != std::size_t(kMinutesPerDay)) throw ValidationError("qh position: incomplete episode");
  const auto& dd = data.day(log.day);
  double profit = 0.0;
  std::array<double, kMinutesPerQuarterHour> flat{};
  for (int qh = 0; qh < kQuarterHoursPerDay; ++qh) {
    const auto first = log.actions_mw.begin() + qh * kMinutesPerQuarterHour;
    const double mean = std::accumulate(first, first + kMinutesPerQuarterHour, 0.0) / kMinutesPerQuarterHour;
    flat.fill(mean);
    const auto s = settle_quarter_hour(dd.quarter_hour(qh), flat, dd.ladders[std::size_t(qh)]);
    for (double a : flat) profit -= a * s.imbalance_price * kMinuteHours;
  }
  return profit;
}

EvalSummary summarize(const BalancingDataset& data, const BessSpec& spec, const std::vector<EpisodeLog>& logs) {
  EvalSummary s;
  double qh_profit = 0.0, secs = 0.0;
  std::size_t decisions = 0, dev_n = 0;
  for (const auto& log : logs) {
    s.profit_eur += log.profit_eur;
    qh_profit += qh_position_profit(data, log);
    secs += log.decision_seconds;
    decisions += log.decisions;
    s.quarter_hours += kQuarterHoursPerDay;
    s.minutes += log.actions_mw.size();
    if (log.mpc_actions_mw.size() == std::size_t(kQuarterHoursPerDay)) {
      s.has_deviation = true;
      ++dev_n;
      for (std::size_t t = 0; t < log.actions_mw.size(); ++t) {
        s.deviation_mw[t % kMinutesPerQuarterHour] +=
            std::abs(log.actions_mw[t] - log.mpc_actions_mw[t / kMinutesPerQuarterHour]);
      }
    }
  }
  if (s.quarter_hours > 0) {
    const double norm = spec.p_max_mw * double(s.quarter_hours);
    s.profit_per_mw_qh = s.profit_eur / norm;
    s.qh_position_profit_per_mw_qh = qh_profit / norm;
  }
  if (decisions > 0) s.seconds_per_decision = secs / double(decisions);
  if (dev_n > 0) {
    for (auto& d : s.deviation_mw) d /= double(dev_n * kQuarterHoursPerDay);
  }
  return s;
}

EvalSummary evaluate_agent(const BalancingDataset& data, const BessSpec& spec, const DistSacAgent& agent,
                           const std::vector<std::size_t>& days, MpcController* mpc, std::size_t forecast_horizon,
                           double initial_soc) {
  BalancingEnv env(data, spec, {agent.variant, forecast_horizon});
  env.set_context_provider(make_context_provider(agent.variant, mpc, forecast_horizon));
  std::mt19937_64 unused(0);
  const Policy greedy = [&](const Observation& o) { return act(agent.actor, o.features, ActMode::Greedy, unused); };
  std::vector<EpisodeLog> logs;
  logs.reserve(days.size());
  for (auto d : days) logs.push_back(run_episode(env, d, greedy, initial_soc));
  auto s = summarize(data, spec, logs);
  s.soc_violations = env.soc_violations();
  return s;
}

// ---------------------------------------------------------------- training

TrainResult train_agent(const BalancingDataset& data, const BessSpec& spec, AgentVariant variant,
                        const AgentConfig& agent_cfg, std::uint64_t seed, const TrainOptions& opt,
                        MpcController* mpc) {
  if (opt.train_days.empty()) throw ValidationError("train: no training days");
  if (opt.episodes == 0 || opt.update_every == 0 || opt.eval_every == 0) {
    throw ValidationError("train: episodes, update_every and eval_every must be > 0");
  }
  const auto start = Clock::now();
  const auto layout = observation_layout(variant, opt.forecast_horizon);
  DistSacAgent agent = build_agent(variant, layout, agent_cfg, seed);
  const auto& cfg = agent.cfg;
  const auto& val_days = opt.validation_days.empty() ? opt.train_days : opt.validation_days;

  BalancingEnv env(data, spec, {variant, opt.forecast_horizon});
  env.set_context_provider(make_context_provider(variant, mpc, opt.forecast_horizon));
  ReplayBuffer buffer(cfg.buffer_capacity, layout.size);
  std::mt19937_64 rng_day(seed_stream(seed, 10)), rng_act(seed_stream(seed, 11)), rng_batch(seed_stream(seed, 12));
  std::uniform_int_distribution<std::size_t> pick_day(0, opt.train_days.size() - 1);
  const std::size_t warmup = std::max(cfg.batch_size, opt.warmup_steps);

  struct Pending {
    std::vector<double> obs, next;
    std::size_t action;
    bool terminal;
  };
  std::vector<Pending> pending;
  pending.reserve(kMinutesPerQuarterHour);

  TrainResult res;
  res.best_validation_eur = -std::numeric_limits<double>::infinity();
  std::size_t steps = 0, val_violations = 0;
  TrainDiagnostics last;
  for (std::size_t ep = 1; ep <= opt.episodes; ++ep) {
    Observation obs = env.reset(opt.train_days[pick_day(rng_day)], opt.initial_soc);
    while (true) {
      const std::size_t a = act(agent.actor, obs.features, ActMode::Sample, rng_act);
      StepResult r = env.step(a);
      ++steps;
      if (!r.terminal && r.next.features.empty()) r.next = env.observe();
      pending.push_back({std::move(obs.features), r.next.features, a, r.terminal});
      if (r.qh_closed) {
        // Delayed credit: every minute of the quarter hour is rewarded with the settled price.
        for (std::size_t i = 0; i < pending.size(); ++i) {
          buffer.push(pending[i].obs, pending[i].action, r.minute_rewards[i] * cfg.reward_scale, pending[i].next,
                      pending[i].terminal);
        }
        pending.clear();
      }
      if (buffer.size() >= warmup && steps % opt.update_every == 0) last = train_step(agent, buffer, rng_batch);
      if (r.terminal) break;
      obs = std::move(r.next);
    }
    res.episodes_run = ep;
    if (opt.on_episode) opt.on_episode(ep, last);
    if (ep % opt.eval_every == 0 || ep == opt.episodes) {
      const auto ev = evaluate_agent(data, spec, agent, val_days, mpc, opt.forecast_horizon, opt.initial_soc);
      val_violations += ev.soc_violations;
      res.minutes += ev.minutes;
      res.learning_curve.emplace_back(ep, ev.profit_eur);
      if (ev.profit_eur > res.best_validation_eur) {
        res.best_validation_eur = ev.profit_eur;
        res.best_episode = ep;
        res.best = agent;
        if (!opt.checkpoint_dir.empty()) save_agent(opt.checkpoint_dir, agent, {seed, ep});
      }
      if (opt.stop_at_validation_eur && ev.profit_eur >= *opt.stop_at_validation_eur) break;
    }
  }
  res.minutes += env.minutes_simulated();
  res.soc_violations = env.soc_violations() + val_violations;
  res.updates = agent.updates;
  res.seconds = seconds_since(start);
  return res;
}

// ---------------------------------------------------------------- result files

void write_results_csv(const std::filesystem::path& path, const std::vector<ResultRow>& rows) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    out << "method,battery,seed,metric,value\n";
    for (const auto& r : rows) out << fmt::format("{},{},{},{},{}\n", r.method, r.battery, r.seed, r.metric, r.value);
    if (!out) throw std::runtime_error("cannot write " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

std::vector<ResultRow> read_results_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("missing results file " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "method,battery,seed,metric,value") throw ValidationError(path.string() + ": unexpected header");
  std::vector<ResultRow> rows;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream ss(line);
    for (std::string x; std::getline(ss, x, ',');) f.push_back(x);
    if (f.size() != 5) throw ValidationError(fmt::format("{}: row {}: expected 5 fields", path.string(), row));
    try {
      rows.push_back({f[0], f[1], std::stoull(f[2]), f[3], std::stod(f[4])});
    } catch (const std::exception&) {
      throw ValidationError(fmt::format("{}: row {}: bad number", path.string(), row));
    }
  }
  return rows;
}

namespace {

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    out << text;
    if (!out) throw std::runtime_error("cannot write " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

void append_summary_rows(std::vector<ResultRow>& rows, const std::string& method, const std::string& battery,
                         std::uint64_t seed, const EvalSummary& s) {
  rows.push_back({method, battery, seed, "profit_eur_per_mw_qh", s.profit_per_mw_qh});
  rows.push_back({method, battery, seed, "qh_position_profit_eur_per_mw_qh", s.qh_position_profit_per_mw_qh});
  rows.push_back({method, battery, seed, "profit_eur", s.profit_eur});
  rows.push_back({method, battery, seed, "runtime_s_per_decision", s.seconds_per_decision});
  rows.push_back({method, battery, seed, "soc_violations", double(s.soc_violations)});
}

std::string deviation_csv(const std::string& variant, const EvalSummary& s) {
  std::string out = "variant,minute,mean_abs_deviation_mw\n";
  for (std::size_t m = 0; m < s.deviation_mw.size(); ++m) out += fmt::format("{},{},{}\n", variant, m, s.deviation_mw[m]);
  return out;
}

std::vector<std::size_t> split_days(const BalancingDataset& data, Split s) {
  auto days = data.days_in(s);
  if (days.empty()) throw ValidationError(std::string("dataset has no days in the ") + split_name(s) + " split");
  return days;
}

}  // namespace

// ---------------------------------------------------------------- experiments

MpcRunResult run_mpc(const RunConfig& cfg, const BalancingDataset& data) {
  cfg.validate();
  const auto spec = battery_spec(cfg);
  std::optional<QuantileForecastTable> table;
  if (!cfg.quantile_csv.empty()) table = QuantileForecastTable::load_csv(cfg.quantile_csv);
  const auto fc = forecaster_config(cfg, table ? &*table : nullptr);
  MpcRunResult res;
  for (auto d : split_days(data, cfg.split)) {
    EpisodeLog log;
    log.day = d;
    BessState state{cfg.initial_soc};
    const auto& dd = data.day(d);
    std::array<double, kMinutesPerQuarterHour> applied{};
    for (int qh = 0; qh < kQuarterHoursPerDay; ++qh) {
      const auto start = Clock::now();
      const double a = receding_control(spec, state, data, fc, cfg.mpc, d * kQuarterHoursPerDay + std::size_t(qh));
      log.decision_seconds += seconds_since(start);
      ++log.decisions;
      log.mpc_actions_mw.push_back(a);
      for (auto& x : applied) {
        x = clip_action(spec, state, a, kMinuteHours);
        state = step(spec, state, x, kMinuteHours);
      }
      const auto s = settle_quarter_hour(dd.quarter_hour(qh), applied, dd.ladders[std::size_t(qh)]);
      log.prices.push_back(s.imbalance_price);
      for (double x : applied) log.profit_eur -= x * s.imbalance_price * kMinuteHours;
      log.actions_mw.insert(log.actions_mw.end(), applied.begin(), applied.end());
    }
    res.logs.push_back(std::move(log));
  }
  res.summary = summarize(data, spec, res.logs);
  return res;
}

std::string mpc_method(const RunConfig& cfg) { return fmt::format("mpc_{}_h{}", cfg.forecaster, cfg.mpc.horizon_qh); }

std::vector<ResultRow> mpc_rows(const RunConfig& cfg, const MpcRunResult& r) {
  std::vector<ResultRow> rows;
  append_summary_rows(rows, mpc_method(cfg), cfg.battery, cfg.data.data_seed, r.summary);
  return rows;
}

namespace {

std::unique_ptr<MpcController> controller_for(const RunConfig& cfg, const BalancingDataset& data,
                                              const QuantileForecastTable* table) {
  if (!needs_mpc(cfg.variant) && !needs_forecast(cfg.variant)) return nullptr;
  return std::make_unique<MpcController>(data, battery_spec(cfg), forecaster_config(cfg, table), cfg.mpc, true);
}

}  // namespace

std::vector<ResultRow> run_train(const RunConfig& cfg, const BalancingDataset& data) {
  cfg.validate();
  const auto spec = battery_spec(cfg);
  const auto acfg = agent_config(cfg);
  std::optional<QuantileForecastTable> table;
  if (!cfg.quantile_csv.empty()) table = QuantileForecastTable::load_csv(cfg.quantile_csv);

  TrainOptions opt;
  opt.train_days = split_days(data, Split::Train);
  opt.validation_days = data.days_in(Split::Validation);
  opt.episodes = cfg.episodes;
  opt.update_every = cfg.update_every;
  opt.warmup_steps = cfg.warmup_steps;
  opt.eval_every = cfg.eval_every;
  opt.initial_soc = cfg.initial_soc;
  const auto eval_days = split_days(data, cfg.split);

  const std::string method = variant_name(cfg.variant);
  std::vector<ResultRow> rows;
  std::string curve = "seed,episode,validation_profit\n";
  std::map<std::uint64_t, std::pair<std::vector<ResultRow>, std::string>> per_seed;
  std::mutex mu;

  // Each seed owns its controller so runs stay independent of each other.
  auto run_seed = [&](std::uint64_t seed) {
    auto mpc = controller_for(cfg, data, table ? &*table : nullptr);
    TrainOptions o = opt;
    o.checkpoint_dir = cfg.out_dir / method / fmt::format("seed_{}", seed);
    auto tr = train_agent(data, spec, cfg.variant, acfg, seed, o, mpc.get());
    auto ev = evaluate_agent(data, spec, tr.best, eval_days, mpc.get(), o.forecast_horizon, cfg.initial_soc);
    ev.soc_violations += tr.soc_violations;
    std::vector<ResultRow> r;
    append_summary_rows(r, method, cfg.battery, seed, ev);
    r.push_back({method, cfg.battery, seed, "best_validation_eur", tr.best_validation_eur});
    r.push_back({method, cfg.battery, seed, "train_seconds", tr.seconds});
    std::string c;
    for (auto [ep, v] : tr.learning_curve) c += fmt::format("{},{},{}\n", seed, ep, v);
    if (ev.has_deviation) write_text_atomic(o.checkpoint_dir / "deviation.csv", deviation_csv(method, ev));
    std::lock_guard lock(mu);
    per_seed[seed] = {std::move(r), std::move(c)};
  };

  const std::size_t workers = std::max<std::size_t>(1, std::min(cfg.workers, cfg.seeds.size()));
  if (workers == 1) {
    for (auto s : cfg.seeds) run_seed(s);
  } else {
    std::size_t next = 0;
    std::vector<std::jthread> pool;
    std::exception_ptr failure;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        while (true) {
          std::uint64_t s;
          {
            std::lock_guard lock(mu);
            if (next >= cfg.seeds.size() || failure) return;
            s = cfg.seeds[next++];
          }
          try {
            run_seed(s);
          } catch (...) {
            std::lock_guard lock(mu);
            failure = std::current_exception();
          }
        }
      });
    }
    pool.clear();
    if (failure) std::rethrow_exception(failure);
  }
  for (auto& [seed, rc] : per_seed) {
    rows.insert(rows.end(), rc.first.begin(), rc.first.end());
    curve += rc.second;
  }
  write_text_atomic(cfg.out_dir / "learning_curve.csv", curve);
  write_results_csv(cfg.out_dir / "results.csv", rows);
  write_text_atomic(cfg.out_dir / "config.json", run_config_json(cfg));
  return rows;
}

std::vector<ResultRow> run_eval(const RunConfig& cfg, const BalancingDataset& data,
                                const std::filesystem::path& agent_dir, std::uint64_t seed) {
  cfg.validate();
  const auto spec = battery_spec(cfg);
  const auto agent = load_agent(agent_dir);
  RunConfig local = cfg;
  local.variant = agent.variant;
  std::optional<QuantileForecastTable> table;
  if (!cfg.quantile_csv.empty()) table = QuantileForecastTable::load_csv(cfg.quantile_csv);
  auto mpc = controller_for(local, data, table ? &*table : nullptr);
  const std::size_t horizon =
      agent.variant == AgentVariant::WithForecast ? agent.actor.input_size() - kBaseFeatures - 2 : 4;
  const auto ev = evaluate_agent(data, spec, agent, split_days(data, cfg.split), mpc.get(), horizon, cfg.initial_soc);
  std::vector<ResultRow> rows;
  append_summary_rows(rows, variant_name(agent.variant), cfg.battery, seed, ev);
  write_results_csv(cfg.out_dir / "results.csv", rows);
  if (ev.has_deviation) write_text_atomic(cfg.out_dir / "deviation.csv", deviation_csv(variant_name(agent.variant), ev));
  return rows;
}

std::vector<ResultRow> compare(const std::vector<std::filesystem::path>& run_dirs, const std::filesystem::path& out_dir) {
  if (run_dirs.empty()) throw ValidationError("compare: no runs given");
  std::vector<std::string> missing;
  for (const auto& d : run_dirs) {
    if (!std::filesystem::exists(d / "results.csv")) missing.push_back(d.string());
  }
  if (!missing.empty()) {
    std::string names;
    for (const auto& m : missing) names += (names.empty() ? "" : ", ") + m;
    throw ValidationError("compare: missing runs: " + names);
  }
  std::vector<ResultRow> all;
  std::string deviation = "variant,minute,mean_abs_deviation_mw\n";
  bool any_dev = false;
  for (const auto& d : run_dirs) {
    auto rows = read_results_csv(d / "results.csv");
    all.insert(all.end(), rows.begin(), rows.end());
    std::ifstream dev(d / "deviation.csv");
    std::string line;
    if (dev && std::getline(dev, line)) {
      while (std::getline(dev, line)) {
        if (!line.empty()) deviation += line + "\n", any_dev = true;
      }
    }
  }
  write_results_csv(out_dir / "results.csv", all);
  if (any_dev) write_text_atomic(out_dir / "deviation.csv", deviation);

  std::map<std::tuple<std::string, std::string, std::string>, std::vector<double>> groups;
  for (const auto& r : all) groups[{r.method, r.battery, r.metric}].push_back(r.value);
  std::string summary = "method,battery,metric,n,mean,std,min,max\n";
  for (const auto& [key, v] : groups) {
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    const double sd = v.size() > 1 ? std::sqrt(var / double(v.size() - 1)) : 0.0;
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    summary += fmt::format("{},{},{},{},{},{},{},{}\n", std::get<0>(key), std::get<1>(key), std::get<2>(key), v.size(),
                           mean, sd, *lo, *hi);
  }
  write_text_atomic(out_dir / "summary.csv", summary);
  return all;
}

RuntimeBench runtime_bench(const RunConfig& cfg, const BalancingDataset& data, std::size_t repeats) {
  cfg.validate();
  if (repeats == 0) throw ValidationError("runtime bench: repeats must be > 0");
  const auto spec = battery_spec(cfg);
  const std::size_t t0 = split_days(data, cfg.split).front() * kQuarterHoursPerDay;
  RuntimeBench rb;
  for (auto n : cfg.scenario_counts) {
    RunConfig c = cfg;
    c.forecaster = "gaussian";
    c.n_scenarios = n;
    const auto fc = forecaster_config(c);
    // Data loading and scenario sampling stay outside the timed region.
    const std::size_t horizon = std::min(cfg.mpc.horizon_qh, data.total_quarter_hours() - t0);
    const auto scen = make_scenarios(data, t0, horizon, fc);
    std::vector<MeritOrderLadder> ladders;
    for (std::size_t j = 0; j < horizon; ++j) ladders.push_back(data.ladder(t0 + j));
    MpcConfig m = cfg.mpc;
    m.horizon_qh = horizon;
    // Grid mode throughout: the exact search switches on or off with the
    // scenario count, which would confound the scaling being measured.
    m.max_exact_states = 0;
    std::vector<double> times;
    for (std::size_t r = 0; r < repeats; ++r) {
      const auto start = Clock::now();
      const auto plan = plan_dp(spec, BessState{cfg.initial_soc}, ladders, scen, m);
      times.push_back(seconds_since(start));
      if (plan.actions_mw.empty()) throw std::logic_error("empty plan");
    }
    std::nth_element(times.begin(), times.begin() + long(times.size() / 2), times.end());
    rb.mpc_seconds.emplace_back(n, times[times.size() / 2]);
  }

  // Inference cost of a freshly built agent of the configured variant.
  const auto acfg = agent_config(cfg);
  const auto agent = build_agent(cfg.variant, observation_layout(cfg.variant), acfg, 0);
  auto mpc = controller_for(cfg, data, nullptr);
  BalancingEnv env(data, spec, {cfg.variant, 4});
  env.set_context_provider(make_context_provider(cfg.variant, mpc.get(), 4));
  std::mt19937_64 rng(0);
  const Policy greedy = [&](const Observation& o) { return act(agent.actor, o.features, ActMode::Greedy, rng); };
  const auto log = run_episode(env, split_days(data, cfg.split).front(), greedy, cfg.initial_soc);
  rb.agent_seconds_per_action = log.decision_seconds / double(log.decisions);
  return rb;
}

}  // namespace imbal
