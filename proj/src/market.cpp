#include "imbal/market.hpp"

#include <algorithm>
#include <cmath>

#include "imbal/error.hpp"

namespace imbal {

namespace {

bool is_up(Product p) { return p == Product::AfrrUp || p == Product::MfrrUp; }
bool is_mfrr(Product p) { return p == Product::MfrrUp || p == Product::MfrrDown; }

// Position inside one product's merit order.
struct Cursor {
  std::size_t step = 0;
  double used = 0.0;  // already taken from `step`
};

template <class Visit>
double take(const std::vector<LadderStep>& steps, Product product, double amount, Cursor& cur, bool proactive,
            Visit& visit) {
  double taken = 0.0;
  while (amount > taken && cur.step < steps.size()) {
    const double avail = steps[cur.step].volume_mw - cur.used;
    const double chunk = std::min(avail, amount - taken);
    if (chunk > 0.0) {
      visit(product, cur.step, chunk, proactive);
      taken += chunk;
      cur.used += chunk;
    }
    if (cur.used >= steps[cur.step].volume_mw) {
      ++cur.step;
      cur.used = 0.0;
    }
  }
  return taken;
}

// Walks the activation without allocating; returns the uncovered requirement.
template <class Visit>
double walk_activation(const MeritOrderLadder& l, double required, double pro_up, double pro_down, Visit&& visit) {
  Cursor mup, mdown, aup, adown;
  const double applied_up = pro_up > 0.0 ? take(l.mfrr_up, Product::MfrrUp, pro_up, mup, true, visit) : 0.0;
  const double applied_down = pro_down > 0.0 ? take(l.mfrr_down, Product::MfrrDown, pro_down, mdown, true, visit) : 0.0;
  const double residual = required - applied_up + applied_down;
  if (residual > 0.0) {
    double got = take(l.afrr_up, Product::AfrrUp, residual, aup, false, visit);
    if (got < residual) got += take(l.mfrr_up, Product::MfrrUp, residual - got, mup, false, visit);
    return residual - got;
  }
  if (residual < 0.0) {
    const double need = -residual;
    double got = take(l.afrr_down, Product::AfrrDown, need, adown, false, visit);
    if (got < need) got += take(l.mfrr_down, Product::MfrrDown, need - got, mdown, false, visit);
    return -(need - got);
  }
  return 0.0;
}

// Running aggregates of a settlement window.
struct WindowAccumulator {
  explicit WindowAccumulator(const MeritOrderLadder& l) : ladder(&l) {}

  const MeritOrderLadder* ladder;
  double afrr_up_value = 0.0, afrr_up_mw = 0.0;
  double afrr_down_value = 0.0, afrr_down_mw = 0.0;
  std::optional<double> mfrr_up, mfrr_down;
  bool any = false;

  void operator()(Product p, std::size_t step, double mw, bool) {
    const double price = ladder->steps(p)[step].price_eur_mwh;
    any = true;
    switch (p) {
      case Product::AfrrUp:
        afrr_up_value += price * mw;
        afrr_up_mw += mw;
        break;
      case Product::AfrrDown:
        afrr_down_value += price * mw;
        afrr_down_mw += mw;
        break;
      case Product::MfrrUp:
        mfrr_up = mfrr_up ? std::max(*mfrr_up, price) : price;
        break;
      case Product::MfrrDown:
        mfrr_down = mfrr_down ? std::min(*mfrr_down, price) : price;
        break;
    }
  }

  Settlement finish(double net_position_sum) const {
    Settlement s;
    if (afrr_up_mw > 0.0) s.afrr_vwap_up = afrr_up_value / afrr_up_mw;
    if (afrr_down_mw > 0.0) s.afrr_vwap_down = afrr_down_value / afrr_down_mw;
    s.mfrr_extreme_up = mfrr_up;
    s.mfrr_extreme_down = mfrr_down;
    s.mfrr_active = mfrr_up.has_value() || mfrr_down.has_value();
    if (!any) {
      s.direction = SystemDirection::Balanced;
    } else {
      s.direction = net_position_sum <= 0.0 ? SystemDirection::Short : SystemDirection::Long;
    }
    s.imbalance_price = imbalance_price(s.direction, s.mfrr_active, s.afrr_vwap_up, s.afrr_vwap_down,
                                        s.mfrr_extreme_up, s.mfrr_extreme_down);
    return s;
  }
};

}  // namespace

double ActivationRecord::volume(Product p) const {
  double v = 0.0;
  for (const auto& s : steps) {
    if (s.product == p) v += s.mw;
  }
  return v;
}

double ActivationRecord::reactive_mfrr(Product p) const {
  double v = 0.0;
  for (const auto& s : steps) {
    if (s.product == p && !s.proactive) v += s.mw;
  }
  return v;
}

ActivationRecord activate_merit_order(const MeritOrderLadder& ladder, double required_mw, double proactive_up_mw,
                                      double proactive_down_mw) {
  ladder.validate();
  if (!std::isfinite(required_mw) || proactive_up_mw < 0.0 || proactive_down_mw < 0.0) {
    throw ValidationError("activate_merit_order: invalid required or proactive volume");
  }
  ActivationRecord rec;
  rec.shortfall_mw = walk_activation(ladder, required_mw, proactive_up_mw, proactive_down_mw,
                                     [&](Product p, std::size_t step, double mw, bool proactive) {
                                       rec.steps.push_back({p, step, mw, proactive});
                                       const double signed_mw = is_up(p) ? mw : -mw;
                                       (is_mfrr(p) ? rec.mfrr_mw : rec.afrr_mw) += signed_mw;
                                     });
  return rec;
}

double activation_cost(const MeritOrderLadder& ladder, const ActivationRecord& rec) {
  double cost = 0.0;
  for (const auto& s : rec.steps) {
    const double price = ladder.steps(s.product)[s.step].price_eur_mwh;
    cost += is_up(s.product) ? price * s.mw : -price * s.mw;
  }
  return cost;
}

const char* direction_name(SystemDirection d) {
  switch (d) {
    case SystemDirection::Short: return "short";
    case SystemDirection::Long: return "long";
    case SystemDirection::Balanced: return "balanced";
  }
  return "?";
}

double imbalance_price(SystemDirection direction, bool mfrr_active, std::optional<double> afrr_up,
                       std::optional<double> afrr_down, std::optional<double> mfrr_up,
                       std::optional<double> mfrr_down) {
  if (direction == SystemDirection::Balanced) return 0.0;
  const bool is_short = direction == SystemDirection::Short;
  const auto afrr = is_short ? afrr_up : afrr_down;
  const auto mfrr = is_short ? mfrr_up : mfrr_down;
  if (!mfrr_active || !mfrr) return afrr.value_or(0.0);
  if (!afrr) return *mfrr;
  return is_short ? std::max(*afrr, *mfrr) : std::min(*afrr, *mfrr);
}

Settlement settle_window(std::span<const MinuteRecord> minutes, std::span<const double> actions_mw,
                         const MeritOrderLadder& ladder) {
  if (minutes.empty() || minutes.size() > std::size_t(kMinutesPerQuarterHour) || minutes.size() != actions_mw.size()) {
    throw ValidationError("settle_window: need 1..15 minutes with one action each");
  }
  ladder.validate();
  WindowAccumulator acc(ladder);
  double net = 0.0;
  for (std::size_t i = 0; i < minutes.size(); ++i) {
    const auto& m = minutes[i];
    const double required = actions_mw[i] - m.si_mw;
    walk_activation(ladder, required, m.proactive_mfrr_up_mw, m.proactive_mfrr_down_mw, acc);
    net += m.si_mw - actions_mw[i];
  }
  return acc.finish(net);
}

Settlement settle_quarter_hour(std::span<const MinuteRecord> minutes, std::span<const double> actions_mw,
                               const MeritOrderLadder& ladder) {
  if (minutes.size() != std::size_t(kMinutesPerQuarterHour) || actions_mw.size() != minutes.size()) {
    throw ValidationError("settle_quarter_hour: need exactly 15 minutes and 15 actions");
  }
  return settle_window(minutes, actions_mw, ladder);
}

std::vector<double> indicative_prices(std::span<const MinuteRecord> minutes_through_t,
                                      std::span<const double> past_actions_mw,
                                      std::span<const double> candidate_actions_mw, const MeritOrderLadder& ladder) {
  if (minutes_through_t.empty() || minutes_through_t.size() > std::size_t(kMinutesPerQuarterHour) ||
      past_actions_mw.size() + 1 != minutes_through_t.size()) {
    throw ValidationError("indicative_prices: history must cover minutes 0..t-1 of a window 0..t, t in [0,14]");
  }
  ladder.validate();
  // Elapsed minutes are shared by all candidates; replay them once.
  WindowAccumulator base(ladder);
  double net = 0.0;
  for (std::size_t i = 0; i < past_actions_mw.size(); ++i) {
    const auto& m = minutes_through_t[i];
    walk_activation(ladder, past_actions_mw[i] - m.si_mw, m.proactive_mfrr_up_mw, m.proactive_mfrr_down_mw, base);
    net += m.si_mw - past_actions_mw[i];
  }
  const auto& now = minutes_through_t.back();
  std::vector<double> prices;
  prices.reserve(candidate_actions_mw.size());
  for (double u : candidate_actions_mw) {
    WindowAccumulator acc = base;
    walk_activation(ladder, u - now.si_mw, now.proactive_mfrr_up_mw, now.proactive_mfrr_down_mw, acc);
    prices.push_back(acc.finish(net + (now.si_mw - u)).imbalance_price);
  }
  return prices;
}

Settlement clear_planning(const MeritOrderLadder& ladder, double si_mw, double net_action_mw) {
  WindowAccumulator acc(ladder);
  walk_activation(ladder, net_action_mw - si_mw, 0.0, 0.0, acc);
  return acc.finish(si_mw - net_action_mw);
}

double clear_planning_qh(const MeritOrderLadder& ladder, double si_mw, double net_action_mw) {
  return clear_planning(ladder, si_mw, net_action_mw).imbalance_price;
}

}  // namespace imbal
