#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "imbal/battery.hpp"
#include "imbal/data.hpp"
#include "imbal/market.hpp"

namespace imbal {

enum class AgentVariant { Base, WithFrr, WithForecast, MpcFc, MpcGuided };

const char* variant_name(AgentVariant v);
AgentVariant parse_variant(const std::string& name);
bool needs_mpc(AgentVariant v);
bool needs_forecast(AgentVariant v);

inline constexpr std::size_t kNumActions = 3;  // discharge, idle, charge
inline constexpr double kMinuteHours = 1.0 / 60.0;

/// Where each feature block sits in the flat observation vector. For the
/// stacked architecture the first `encoder_inputs` entries feed the encoder
/// and the remaining ones go straight to the decision head.
struct ObservationLayout {
  std::size_t size = 0;
  std::size_t encoder_inputs = 0;  // 0 unless the variant is stacked

  friend bool operator==(const ObservationLayout&, const ObservationLayout&) = default;
};

inline constexpr std::size_t kBaseFeatures = 10;

ObservationLayout observation_layout(AgentVariant v, std::size_t forecast_horizon = 4);

struct Observation {
  int minute = 0;  // minute of the quarter hour
  int qh = 0;
  unsigned month = 1;
  double soc = 0.0;
  double mean_action_mw = 0.0;  // average battery action over elapsed minutes of this quarter hour
  std::array<double, kNumActions> indicative_prices{};
  double afrr_mw = 0.0;  // activation this minute without the battery, signed
  double mfrr_mw = 0.0;
  std::optional<double> mpc_action_mw;
  std::vector<double> si_forecast_mw;

  std::vector<double> features;  // featurized for one variant
};

/// Information fixed for a whole quarter hour.
struct QhContext {
  std::optional<double> mpc_action_mw;
  std::vector<double> si_forecast_mw;
};

struct StepResult {
  Observation next;
  double reward = 0.0;  // sum of the settled quarter hour's minute rewards, else 0
  bool terminal = false;
  bool qh_closed = false;
  std::optional<double> settlement_price;
  std::array<double, kMinutesPerQuarterHour> minute_rewards{};  // back-filled on close
  double applied_action_mw = 0.0;
  bool clipped = false;
};

struct EnvConfig {
  AgentVariant variant = AgentVariant::Base;
  std::size_t forecast_horizon = 4;
};

/// Minute-resolution day of implicit balancing for one battery. Minute t's
/// system imbalance is observed before the battery acts in minute t; prices
/// are only settled when the quarter hour closes.
class BalancingEnv {
public:
  using ContextProvider = std::function<QhContext(const BalancingEnv&)>;

  BalancingEnv(const BalancingDataset& data, BessSpec spec, EnvConfig cfg = {});

  /// Invoked at every quarter-hour boundary (including reset) to supply the
  /// MPC action and forecasts for the coming quarter hour.
  void set_context_provider(ContextProvider provider) { provider_ = std::move(provider); }

  /// Returns an empty observation when the variant's quarter-hour context is
  /// still missing; supply it and call observe().
  Observation reset(std::size_t day, double initial_soc = 0.5);
  StepResult step(std::size_t action_index);
  Observation observe(AgentVariant v) const;
  Observation observe() const { return observe(cfg_.variant); }

  void set_qh_context(double mpc_action_mw);
  void set_qh_forecast(std::vector<double> si_forecast_mw);

  double action_power(std::size_t action_index) const;

  const BalancingDataset& data() const { return *data_; }
  const BessSpec& spec() const { return spec_; }
  const EnvConfig& config() const { return cfg_; }
  BessState state() const { return state_; }
  std::size_t day() const { return day_; }
  int minute_of_day() const { return t_; }
  int qh() const { return t_ / kMinutesPerQuarterHour; }
  int minute_in_qh() const { return t_ % kMinutesPerQuarterHour; }
  std::size_t global_qh() const { return day_ * kQuarterHoursPerDay + std::size_t(qh()); }
  bool done() const { return done_; }
  const QhContext& context() const { return context_; }

  // Safety bookkeeping across the instance's lifetime.
  std::size_t minutes_simulated() const { return minutes_simulated_; }
  std::size_t soc_violations() const { return soc_violations_; }

private:
  void enter_quarter_hour();
  bool context_missing() const;

  const BalancingDataset* data_;
  BessSpec spec_;
  EnvConfig cfg_;
  ContextProvider provider_;

  std::size_t day_ = 0;
  int t_ = 0;
  bool done_ = true;
  BessState state_;
  std::array<double, kMinutesPerQuarterHour> qh_actions_{};
  QhContext context_;

  std::size_t minutes_simulated_ = 0;
  std::size_t soc_violations_ = 0;
};

}  // namespace imbal
