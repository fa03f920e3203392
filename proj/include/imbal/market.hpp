#pragma once

#include <optional>
#include <span>
#include <vector>

#include "imbal/data.hpp"

namespace imbal {

struct ActivatedStep {
  Product product = Product::AfrrUp;
  std::size_t step = 0;
  double mw = 0.0;
  bool proactive = false;
};

/// Outcome of one merit-order activation. Totals are signed, positive = upward.
struct ActivationRecord {
  std::vector<ActivatedStep> steps;
  double afrr_mw = 0.0;
  double mfrr_mw = 0.0;
  double shortfall_mw = 0.0;  // required volume left uncovered (signed)

  double volume(Product p) const;
  double reactive_mfrr(Product p) const;
  bool empty() const { return steps.empty(); }
};

/// Activate balancing energy for a signed requirement (positive = the system
/// needs upward regulation). Proactive mFRR is placed first, aFRR then covers
/// the residual in merit order, and reactive mFRR only takes over once aFRR
/// in that direction is exhausted. Throws ValidationError on an invalid ladder.
ActivationRecord activate_merit_order(const MeritOrderLadder& ladder, double required_mw,
                                      double proactive_up_mw = 0.0, double proactive_down_mw = 0.0);

/// Cost of an activation for the system operator: upward energy paid at bid
/// price, downward energy received at bid price.
double activation_cost(const MeritOrderLadder& ladder, const ActivationRecord& rec);

enum class SystemDirection { Short, Long, Balanced };

const char* direction_name(SystemDirection d);

struct Settlement {
  std::optional<double> afrr_vwap_up;
  std::optional<double> afrr_vwap_down;
  std::optional<double> mfrr_extreme_up;
  std::optional<double> mfrr_extreme_down;
  bool mfrr_active = false;
  SystemDirection direction = SystemDirection::Balanced;
  double imbalance_price = 0.0;
};

/// Single-price rule: without mFRR the aFRR price of the system direction
/// applies; with mFRR the more extreme of the aFRR and mFRR prices of that
/// direction wins. Balanced periods and directions without any price settle at 0.
double imbalance_price(SystemDirection direction, bool mfrr_active, std::optional<double> afrr_up,
                       std::optional<double> afrr_down, std::optional<double> mfrr_up,
                       std::optional<double> mfrr_down);

/// Minute-resolution settlement over a (possibly partial) quarter-hour window.
/// `actions_mw` are battery set-points, positive = charging. Requires
/// 1 <= minutes.size() == actions_mw.size() <= 15.
Settlement settle_window(std::span<const MinuteRecord> minutes, std::span<const double> actions_mw,
                         const MeritOrderLadder& ladder);

/// Full quarter hour; requires exactly 15 minutes and 15 actions.
Settlement settle_quarter_hour(std::span<const MinuteRecord> minutes, std::span<const double> actions_mw,
                               const MeritOrderLadder& ladder);

/// Price per candidate action at minute t = minutes.size() - 1, given the
/// battery's actions on minutes 0..t-1. The elapsed window is settled as if
/// it were the whole quarter hour.
std::vector<double> indicative_prices(std::span<const MinuteRecord> minutes_through_t,
                                      std::span<const double> past_actions_mw,
                                      std::span<const double> candidate_actions_mw, const MeritOrderLadder& ladder);

/// Quarter-hour planning model: one period, no proactive mFRR, no minute
/// dynamics. `net_action_mw` is charge minus discharge.
Settlement clear_planning(const MeritOrderLadder& ladder, double si_mw, double net_action_mw);
double clear_planning_qh(const MeritOrderLadder& ladder, double si_mw, double net_action_mw);

}  // namespace imbal
