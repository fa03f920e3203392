#include "imbal/environment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "imbal/error.hpp"

namespace imbal {

const char* variant_name(AgentVariant v) {
  switch (v) {
    case AgentVariant::Base: return "base";
    case AgentVariant::WithFrr: return "with_frr";
    case AgentVariant::WithForecast: return "with_forecast";
    case AgentVariant::MpcFc: return "mpc_fc";
    case AgentVariant::MpcGuided: return "mpc_guided";
  }
  return "?";
}

AgentVariant parse_variant(const std::string& name) {
  for (auto v : {AgentVariant::Base, AgentVariant::WithFrr, AgentVariant::WithForecast, AgentVariant::MpcFc,
                 AgentVariant::MpcGuided}) {
    if (name == variant_name(v)) return v;
  }
  throw ValidationError("unknown agent variant '" + name + "'");
}

bool needs_mpc(AgentVariant v) { return v == AgentVariant::MpcFc || v == AgentVariant::MpcGuided; }
bool needs_forecast(AgentVariant v) { return v == AgentVariant::WithForecast; }

ObservationLayout observation_layout(AgentVariant v, std::size_t forecast_horizon) {
  switch (v) {
    case AgentVariant::Base: return {kBaseFeatures, 0};
    case AgentVariant::WithFrr: return {kBaseFeatures + 2, 0};
    case AgentVariant::WithForecast: return {kBaseFeatures + 2 + forecast_horizon, 0};
    case AgentVariant::MpcFc: return {kBaseFeatures + 4, 0};
    case AgentVariant::MpcGuided: return {kBaseFeatures + 4, kBaseFeatures};
  }
  throw ValidationError("unknown agent variant");
}

namespace {

constexpr double kPriceScale = 1.0 / 500.0;

double scaled_price(double p) { return std::clamp(p * kPriceScale, -5.0, 5.0); }

double scaled_volume(double mw, double cap_up, double cap_down) {
  const double cap = mw >= 0.0 ? cap_up : cap_down;
  return cap > 0.0 ? mw / cap : 0.0;
}

}  // namespace

BalancingEnv::BalancingEnv(const BalancingDataset& data, BessSpec spec, EnvConfig cfg)
    : data_(&data), spec_(spec), cfg_(cfg) {
  spec_.validate();
  if (data.size() == 0) throw ValidationError("environment: empty dataset");
}

double BalancingEnv::action_power(std::size_t action_index) const {
  if (action_index >= kNumActions) throw ValidationError("environment: action index out of range");
  return (double(action_index) - 1.0) * spec_.p_max_mw;
}

Observation BalancingEnv::reset(std::size_t day, double initial_soc) {
  if (day >= data_->size()) throw ValidationError("environment: unknown day");
  if (!(initial_soc >= spec_.soc_min && initial_soc <= spec_.soc_max)) {
    throw ValidationError("environment: initial SoC outside bounds");
  }
  day_ = day;
  t_ = 0;
  done_ = false;
  state_ = BessState{initial_soc};
  qh_actions_.fill(0.0);
  enter_quarter_hour();
  if (context_missing()) return {};  // caller supplies the context, then calls observe()
  return observe();
}

bool BalancingEnv::context_missing() const {
  return (needs_mpc(cfg_.variant) && !context_.mpc_action_mw) ||
         (needs_forecast(cfg_.variant) && context_.si_forecast_mw.empty());
}

void BalancingEnv::enter_quarter_hour() {
  context_ = {};
  if (provider_) context_ = provider_(*this);
}

void BalancingEnv::set_qh_context(double mpc_action_mw) {
  if (done_ || minute_in_qh() != 0) throw ValidationError("set_qh_context: only allowed at a quarter-hour boundary");
  context_.mpc_action_mw = mpc_action_mw;
}

void BalancingEnv::set_qh_forecast(std::vector<double> si_forecast_mw) {
  if (done_ || minute_in_qh() != 0) throw ValidationError("set_qh_forecast: only allowed at a quarter-hour boundary");
  context_.si_forecast_mw = std::move(si_forecast_mw);
}

Observation BalancingEnv::observe(AgentVariant v) const {
  if (done_) throw ValidationError("environment: episode finished");
  const auto& dd = data_->day(day_);
  const int qh = this->qh();
  const int m = minute_in_qh();
  const auto minutes = dd.quarter_hour(qh);
  const auto& ladder = dd.ladders[std::size_t(qh)];

  Observation o;
  o.minute = m;
  o.qh = qh;
  o.month = unsigned(dd.date.month());
  o.soc = state_.soc;
  double sum = 0.0;
  for (int i = 0; i < m; ++i) sum += qh_actions_[std::size_t(i)];
  o.mean_action_mw = m > 0 ? sum / m : 0.0;

  std::array<double, kNumActions> candidates{};
  for (std::size_t a = 0; a < kNumActions; ++a) {
    candidates[a] = clip_action(spec_, state_, action_power(a), kMinuteHours);
  }
  const auto prices = indicative_prices(minutes.first(std::size_t(m) + 1),
                                        std::span<const double>(qh_actions_.data(), std::size_t(m)), candidates, ladder);
  std::copy(prices.begin(), prices.end(), o.indicative_prices.begin());

  const auto& now = minutes[std::size_t(m)];
  const auto act = activate_merit_order(ladder, -now.si_mw, now.proactive_mfrr_up_mw, now.proactive_mfrr_down_mw);
  o.afrr_mw = act.afrr_mw;
  o.mfrr_mw = act.mfrr_mw;
  o.mpc_action_mw = context_.mpc_action_mw;
  o.si_forecast_mw = context_.si_forecast_mw;

  constexpr double two_pi = 2.0 * std::numbers::pi;
  auto& f = o.features;
  const double minute_feature = double(m) / (kMinutesPerQuarterHour - 1);
  f = {minute_feature,
       std::sin(two_pi * qh / kQuarterHoursPerDay),
       std::cos(two_pi * qh / kQuarterHoursPerDay),
       std::sin(two_pi * (double(o.month) - 1.0) / 12.0),
       std::cos(two_pi * (double(o.month) - 1.0) / 12.0),
       o.soc,
       o.mean_action_mw / spec_.p_max_mw,
       scaled_price(o.indicative_prices[0]),
       scaled_price(o.indicative_prices[1]),
       scaled_price(o.indicative_prices[2])};

  const double afrr = scaled_volume(o.afrr_mw, ladder.capacity(Product::AfrrUp), ladder.capacity(Product::AfrrDown));
  const double mfrr = scaled_volume(o.mfrr_mw, ladder.capacity(Product::MfrrUp), ladder.capacity(Product::MfrrDown));
  auto mpc_feature = [&] {
    if (!o.mpc_action_mw) {
      throw ValidationError(std::string("environment: variant ") + variant_name(v) + " needs an MPC action");
    }
    return *o.mpc_action_mw / spec_.p_max_mw;
  };
  switch (v) {
    case AgentVariant::Base: break;
    case AgentVariant::WithFrr: f.insert(f.end(), {afrr, mfrr}); break;
    case AgentVariant::WithForecast: {
      if (o.si_forecast_mw.size() != cfg_.forecast_horizon) {
        throw ValidationError("environment: with_forecast needs a forecast of the configured horizon");
      }
      f.insert(f.end(), {afrr, mfrr});
      for (double si : o.si_forecast_mw) f.push_back(scaled_price(si));
      break;
    }
    case AgentVariant::MpcFc: f.insert(f.end(), {afrr, mfrr, minute_feature, mpc_feature()}); break;
    case AgentVariant::MpcGuided: f.insert(f.end(), {mpc_feature(), minute_feature, afrr, mfrr}); break;
  }
  return o;
}

StepResult BalancingEnv::step(std::size_t action_index) {
  if (done_) throw ValidationError("environment: stepping a finished episode");
  StepResult r;
  const double requested = action_power(action_index);
  const double applied = clip_action(spec_, state_, requested, kMinuteHours);
  r.applied_action_mw = applied;
  r.clipped = applied != requested;
  state_ = imbal::step(spec_, state_, applied, kMinuteHours);
  ++minutes_simulated_;
  if (state_.soc < spec_.soc_min || state_.soc > spec_.soc_max) ++soc_violations_;

  const int m = minute_in_qh();
  qh_actions_[std::size_t(m)] = applied;
  if (m == kMinutesPerQuarterHour - 1) {
    const auto& dd = data_->day(day_);
    const auto s = settle_quarter_hour(dd.quarter_hour(qh()), qh_actions_, dd.ladders[std::size_t(qh())]);
    r.qh_closed = true;
    r.settlement_price = s.imbalance_price;
    for (std::size_t i = 0; i < r.minute_rewards.size(); ++i) {
      r.minute_rewards[i] = -qh_actions_[i] * s.imbalance_price * kMinuteHours;
      r.reward += r.minute_rewards[i];
    }
    qh_actions_.fill(0.0);
  }

  ++t_;
  if (t_ == kMinutesPerDay) {
    done_ = true;
    r.terminal = true;
    r.next.features.assign(observation_layout(cfg_.variant, cfg_.forecast_horizon).size, 0.0);
    return r;
  }
  if (minute_in_qh() == 0) {
    enter_quarter_hour();
    if (context_missing()) return r;  // caller supplies the context, then calls observe()
  }
  r.next = observe();
  return r;
}

}  // namespace imbal
