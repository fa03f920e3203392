#include "imbal/battery.hpp"

#include <algorithm>
#include <cmath>

#include "imbal/error.hpp"

namespace imbal {

void BessSpec::validate() const {
  if (!(p_max_mw > 0.0) || !(e_mwh > 0.0)) throw ValidationError("battery: power and energy must be > 0");
  if (!(eta_cha > 0.0 && eta_cha <= 1.0) || !(eta_dis > 0.0 && eta_dis <= 1.0)) {
    throw ValidationError("battery: efficiencies must be in (0, 1]");
  }
  if (!(soc_min >= 0.0 && soc_min < soc_max && soc_max <= 1.0)) {
    throw ValidationError("battery: need 0 <= soc_min < soc_max <= 1");
  }
}

BessSpec BessSpec::with_round_trip(double p_max_mw, double e_mwh, double round_trip) {
  BessSpec s;
  s.p_max_mw = p_max_mw;
  s.e_mwh = e_mwh;
  s.eta_cha = std::sqrt(round_trip);
  s.eta_dis = std::sqrt(round_trip);
  s.validate();
  return s;
}

BessSpec BessSpec::preset(const std::string& name) {
  if (name == "1mw") return with_round_trip(1.0, 2.0);
  if (name == "10mw") return with_round_trip(10.0, 20.0);
  if (name == "50mw") return with_round_trip(50.0, 100.0);
  if (name == "100mw") return with_round_trip(100.0, 200.0);
  throw ValidationError("unknown battery preset '" + name + "' (1mw|10mw|50mw|100mw)");
}

BessState step(const BessSpec& spec, BessState state, double power_mw, double dt_h) {
  if (!(std::abs(power_mw) <= spec.p_max_mw * (1.0 + 1e-12))) {
    throw ValidationError("battery step: |power| exceeds p_max");
  }
  auto next = try_step(spec, state, power_mw, dt_h);
  if (!next) throw InfeasibleError("battery step leaves the state-of-charge window");
  return *next;
}

std::optional<BessState> try_step(const BessSpec& spec, BessState state, double power_mw, double dt_h) {
  if (!(std::abs(power_mw) <= spec.p_max_mw * (1.0 + 1e-12))) return std::nullopt;
  const double charge = std::max(power_mw, 0.0);
  const double discharge = std::max(-power_mw, 0.0);
  const double soc = state.soc + (charge * spec.eta_cha - discharge / spec.eta_dis) * dt_h / spec.e_mwh;
  if (soc > spec.soc_max + kSocTolerance || soc < spec.soc_min - kSocTolerance) return std::nullopt;
  return BessState{std::clamp(soc, spec.soc_min, spec.soc_max)};
}

PowerBounds feasible_power(const BessSpec& spec, BessState state, double dt_h) {
  if (!(dt_h > 0.0)) return {spec.p_max_mw, spec.p_max_mw};
  const double headroom = std::max(spec.soc_max - state.soc, 0.0) * spec.e_mwh;
  const double stored = std::max(state.soc - spec.soc_min, 0.0) * spec.e_mwh;
  PowerBounds b;
  b.max_charge_mw = std::min(spec.p_max_mw, headroom / (spec.eta_cha * dt_h));
  b.max_discharge_mw = std::min(spec.p_max_mw, stored * spec.eta_dis / dt_h);
  return b;
}

double clip_action(const BessSpec& spec, BessState state, double requested_mw, double dt_h) {
  const auto b = feasible_power(spec, state, dt_h);
  return std::clamp(requested_mw, -b.max_discharge_mw, b.max_charge_mw);
}

}  // namespace imbal
