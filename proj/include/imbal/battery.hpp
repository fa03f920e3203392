#pragma once

#include <optional>
#include <string>

namespace imbal {

/// Battery energy storage parameters. Power is signed throughout the
/// project: positive charges, negative discharges.
struct BessSpec {
  double p_max_mw = 1.0;
  double e_mwh = 2.0;
  double eta_cha = 0.9486832980505138;  // sqrt(0.9)
  double eta_dis = 0.9486832980505138;
  double soc_min = 0.0;
  double soc_max = 1.0;

  void validate() const;

  /// Symmetric-efficiency battery of the given size and round-trip efficiency.
  static BessSpec with_round_trip(double p_max_mw, double e_mwh, double round_trip = 0.9);
  /// "1mw" | "10mw" | "50mw" | "100mw", each with two hours of storage.
  static BessSpec preset(const std::string& name);
};

struct BessState {
  double soc = 0.5;
};

inline constexpr double kSocTolerance = 1e-9;

/// Advance the state of charge by one interval. Throws InfeasibleError when
/// the result leaves [soc_min, soc_max] (beyond a 1e-9 rounding allowance,
/// which is clamped away) and ValidationError when |power| exceeds p_max.
BessState step(const BessSpec& spec, BessState state, double power_mw, double dt_h);

/// Non-throwing variant of step for search loops: empty when infeasible.
std::optional<BessState> try_step(const BessSpec& spec, BessState state, double power_mw, double dt_h);

struct PowerBounds {
  double max_charge_mw = 0.0;
  double max_discharge_mw = 0.0;  // magnitude
};

PowerBounds feasible_power(const BessSpec& spec, BessState state, double dt_h);

double clip_action(const BessSpec& spec, BessState state, double requested_mw, double dt_h);

}  // namespace imbal
