#pragma once

// Independent reference computations used by the unit and acceptance tests.
// Nothing here calls into the library's clearing, planning or learning code.

#include <random>
#include <span>
#include <vector>

#include "imbal/battery.hpp"
#include "imbal/data.hpp"

namespace oracle {

/// Random ladder in a normal market: every upward price lies above every
/// downward price, so counter-activation never pays. Products may be empty.
imbal::MeritOrderLadder random_ladder(std::mt19937_64& rng, int max_depth = 3);

/// Cheapest activation cost (upward energy paid, downward energy received)
/// meeting `required_mw` exactly, or the full capacity of one direction when
/// the requirement exceeds it, with mFRR allowed in a direction only once
/// aFRR there is exhausted. Found by enumerating every vertex of the
/// feasible polytope.
double min_activation_cost(const imbal::MeritOrderLadder& ladder, double required_mw);

/// sum(p * v) / sum(v)
double vwap(std::span<const std::pair<double, double>> price_volume);

/// Best profit of a price taker facing known per-period prices, with any
/// state-of-charge move inside the power limit allowed each period. Solved
/// by backward induction over `grid_points` uniform SoC levels; soc0 must
/// be one of them.
double price_taker_optimum(const imbal::BessSpec& spec, double soc0, std::span<const double> prices, double dt_h,
                           std::size_t grid_points = 2001);

/// Day with the same SI on every minute and one ladder for every quarter hour.
imbal::DayData constant_day(imbal::Date date, double si_mw, const imbal::MeritOrderLadder& ladder);

}  // namespace oracle
