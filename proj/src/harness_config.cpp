#include <fstream>

#include "json.hpp"

#include "imbal/error.hpp"
#include "imbal/harness.hpp"

namespace imbal {

using nlohmann::json;

void RunConfig::validate() const {
  BessSpec::preset(battery);
  mpc.validate();
  parse_forecaster(forecaster);
  if (seeds.empty()) throw ValidationError("run config: seeds must be non-empty");
  if (episodes == 0) throw ValidationError("run config: episodes must be > 0");
  if (update_every == 0 || eval_every == 0) throw ValidationError("run config: update_every and eval_every must be > 0");
  if (!(sigma0 >= 0.0) || !(growth >= 0.0)) throw ValidationError("run config: negative forecast noise");
  if (n_scenarios == 0) throw ValidationError("run config: n_scenarios must be > 0");
  if (!(initial_soc >= 0.0 && initial_soc <= 1.0)) throw ValidationError("run config: initial_soc outside [0, 1]");
  for (const auto& p : {data.minutes_csv, data.ladders_csv, quantile_csv}) {
    if (!p.empty() && !std::filesystem::exists(p)) throw ValidationError("run config: missing file " + p.string());
  }
  if (data.minutes_csv.empty() && data.synthetic_days < 1) throw ValidationError("run config: synthetic_days < 1");
}

void RunConfig::use_paper_scale() {
  episodes = 50000;
  agent.buffer_capacity = 1000000;
  agent.batch_size = 16384;
}

namespace {

template <class T>
void get_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void get_path(const json& j, const char* key, std::filesystem::path& out) {
  if (j.contains(key)) out = j.at(key).get<std::string>();
}

}  // namespace

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError("config " + path.string() + ": " + e.what());
  }
  RunConfig c;
  try {
    get_if(j, "battery", c.battery);
    if (j.contains("variant")) c.variant = parse_variant(j.at("variant").get<std::string>());
    if (j.contains("mpc")) {
      const auto& m = j.at("mpc");
      get_if(m, "horizon_qh", c.mpc.horizon_qh);
      get_if(m, "soc_grid_points", c.mpc.soc_grid_points);
      get_if(m, "action_levels", c.mpc.action_levels);
      get_if(m, "include_breakpoints", c.mpc.include_breakpoints);
      get_if(m, "max_exact_states", c.mpc.max_exact_states);
    }
    get_if(j, "forecaster", c.forecaster);
    get_if(j, "sigma0", c.sigma0);
    get_if(j, "growth", c.growth);
    get_if(j, "n_scenarios", c.n_scenarios);
    get_path(j, "quantile_csv", c.quantile_csv);
    get_if(j, "seeds", c.seeds);
    get_if(j, "episodes", c.episodes);
    if (j.contains("split")) c.split = parse_split(j.at("split").get<std::string>());
    get_path(j, "out_dir", c.out_dir);
    if (j.contains("data")) {
      const auto& d = j.at("data");
      get_path(d, "minutes_csv", c.data.minutes_csv);
      get_path(d, "ladders_csv", c.data.ladders_csv);
      get_if(d, "synthetic_days", c.data.synthetic_days);
      get_if(d, "data_seed", c.data.data_seed);
      get_if(d, "proactive", c.data.proactive);
    }
    if (j.contains("agent")) {
      const auto& a = j.at("agent");
      get_if(a, "gamma", c.agent.gamma);
      get_if(a, "n_quantiles", c.agent.n_quantiles);
      get_if(a, "midpoint_quantiles", c.agent.midpoint_quantiles);
      get_if(a, "mu", c.agent.mu);
      get_if(a, "target_update_every", c.agent.target_update_every);
      get_if(a, "alpha", c.agent.alpha);
      get_if(a, "lr_actor", c.agent.lr_actor);
      get_if(a, "lr_critic", c.agent.lr_critic);
      get_if(a, "batch_size", c.agent.batch_size);
      get_if(a, "buffer_capacity", c.agent.buffer_capacity);
      get_if(a, "reward_scale", c.agent.reward_scale);
      get_if(a, "smoothed_pinball", c.agent.smoothed_pinball);
      get_if(a, "huber_kappa", c.agent.huber_kappa);
      get_if(a, "hidden", c.agent.hidden);
      get_if(a, "embedding", c.agent.embedding);
    }
    get_if(j, "update_every", c.update_every);
    get_if(j, "warmup_steps", c.warmup_steps);
    get_if(j, "eval_every", c.eval_every);
    get_if(j, "initial_soc", c.initial_soc);
    get_if(j, "horizons", c.horizons);
    get_if(j, "scenario_counts", c.scenario_counts);
    get_if(j, "workers", c.workers);
    if (j.value("paper_scale", false)) c.use_paper_scale();
  } catch (const json::exception& e) {
    throw ValidationError("config " + path.string() + ": " + e.what());
  }
  return c;
}

std::string run_config_json(const RunConfig& c) {
  json j = {
      {"battery", c.battery},
      {"variant", variant_name(c.variant)},
      {"mpc", {{"horizon_qh", c.mpc.horizon_qh}, {"soc_grid_points", c.mpc.soc_grid_points},
               {"action_levels", c.mpc.action_levels}, {"include_breakpoints", c.mpc.include_breakpoints},
               {"max_exact_states", c.mpc.max_exact_states}}},
      {"forecaster", c.forecaster},
      {"sigma0", c.sigma0},
      {"growth", c.growth},
      {"n_scenarios", c.n_scenarios},
      {"quantile_csv", c.quantile_csv.string()},
      {"seeds", c.seeds},
      {"episodes", c.episodes},
      {"split", split_name(c.split)},
      {"out_dir", c.out_dir.string()},
      {"data", {{"minutes_csv", c.data.minutes_csv.string()}, {"ladders_csv", c.data.ladders_csv.string()},
                {"synthetic_days", c.data.synthetic_days}, {"data_seed", c.data.data_seed},
                {"proactive", c.data.proactive}}},
      {"agent", {{"gamma", c.agent.gamma}, {"n_quantiles", c.agent.n_quantiles},
                 {"midpoint_quantiles", c.agent.midpoint_quantiles}, {"mu", c.agent.mu},
                 {"target_update_every", c.agent.target_update_every},
                 {"alpha", c.agent.alpha}, {"lr_actor", c.agent.lr_actor}, {"lr_critic", c.agent.lr_critic},
                 {"batch_size", c.agent.batch_size}, {"buffer_capacity", c.agent.buffer_capacity},
                 {"reward_scale", c.agent.reward_scale}, {"smoothed_pinball", c.agent.smoothed_pinball},
                 {"huber_kappa", c.agent.huber_kappa}, {"hidden", c.agent.hidden},
                 {"embedding", c.agent.embedding}}},
      {"update_every", c.update_every},
      {"warmup_steps", c.warmup_steps},
      {"eval_every", c.eval_every},
      {"initial_soc", c.initial_soc},
      {"horizons", c.horizons},
      {"scenario_counts", c.scenario_counts},
      {"workers", c.workers},
  };
  return j.dump(2) + "\n";
}

}  // namespace imbal
