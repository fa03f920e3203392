#include <cmath>
#include <random>

#include "doctest.h"
#include "imbal/error.hpp"
#include "imbal/market.hpp"
#include "oracles.hpp"

using namespace imbal;

namespace {

MeritOrderLadder up_ladder() {
  MeritOrderLadder l;
  l.afrr_up = {{50, 100}, {80, 100}};
  l.afrr_down = {{10, 100}, {5, 100}};
  return l;
}

std::vector<MinuteRecord> constant_minutes(double si, int n = 15, double pro_up = 0.0, double pro_down = 0.0) {
  std::vector<MinuteRecord> m;
  for (int i = 0; i < n; ++i) m.push_back({parse_date("2023-01-01"), 0, i, si, pro_up, pro_down});
  return m;
}

const std::vector<double> kIdle(15, 0.0);

}  // namespace

TEST_CASE("merit order fills aFRR steps cheapest first") {
  const auto rec = activate_merit_order(up_ladder(), 150.0);
  REQUIRE(rec.steps.size() == 2);
  CHECK(rec.steps[0].product == Product::AfrrUp);
  CHECK(rec.steps[0].step == 0);
  CHECK(rec.steps[0].mw == 100.0);
  CHECK(rec.steps[1].step == 1);
  CHECK(rec.steps[1].mw == 50.0);
  CHECK(rec.afrr_mw == 150.0);
  CHECK(rec.mfrr_mw == 0.0);
  CHECK(activation_cost(up_ladder(), rec) == doctest::Approx(oracle::min_activation_cost(up_ladder(), 150.0)));
}

TEST_CASE("zero requirement activates nothing") {
  const auto rec = activate_merit_order(up_ladder(), 0.0);
  CHECK(rec.empty());
  CHECK(rec.afrr_mw == 0.0);
  CHECK(rec.mfrr_mw == 0.0);
}

TEST_CASE("reactive mFRR only after aFRR is exhausted") {
  auto l = up_ladder();
  l.mfrr_up = {{200, 500}};
  const auto rec = activate_merit_order(l, 250.0);
  CHECK(rec.afrr_mw == 200.0);
  CHECK(rec.mfrr_mw == 50.0);
  CHECK(rec.volume(Product::MfrrUp) == 50.0);
  CHECK(rec.reactive_mfrr(Product::MfrrUp) == 50.0);
  CHECK(activation_cost(l, rec) == doctest::Approx(oracle::min_activation_cost(l, 250.0)).epsilon(1e-12));
}

TEST_CASE("capacity shortfall is reported and activation capped") {
  auto l = up_ladder();
  l.mfrr_up = {{200, 50}};
  const auto rec = activate_merit_order(l, 400.0);
  CHECK(rec.afrr_mw == 200.0);
  CHECK(rec.mfrr_mw == 50.0);
  CHECK(rec.shortfall_mw == 150.0);
  const auto down = activate_merit_order(l, -500.0);
  CHECK(down.afrr_mw == -200.0);
  CHECK(down.shortfall_mw == -300.0);
}

TEST_CASE("proactive mFRR is applied first and offsets the requirement") {
  auto l = up_ladder();
  l.mfrr_up = {{200, 100}, {250, 100}};
  const auto rec = activate_merit_order(l, 150.0, 120.0, 0.0);
  CHECK(rec.volume(Product::MfrrUp) == 120.0);
  CHECK(rec.reactive_mfrr(Product::MfrrUp) == 0.0);
  CHECK(rec.afrr_mw == 30.0);
  // Proactive volume beyond the need pushes the residual downward.
  const auto over = activate_merit_order(l, 50.0, 120.0, 0.0);
  CHECK(over.afrr_mw == -70.0);
  CHECK_THROWS_AS(activate_merit_order(l, 10.0, -1.0, 0.0), ValidationError);
}

TEST_CASE("invalid ladder is rejected") {
  auto l = up_ladder();
  l.afrr_up = {{80, 100}, {50, 100}};
  CHECK_THROWS_AS(activate_merit_order(l, 10.0), ValidationError);
}

TEST_CASE("cost minimality against vertex enumeration (randomized)") {
  std::mt19937_64 rng(123);
  for (int k = 0; k < 300; ++k) {
    const auto l = oracle::random_ladder(rng);
    const double up = l.capacity(Product::AfrrUp) + l.capacity(Product::MfrrUp);
    const double down = l.capacity(Product::AfrrDown) + l.capacity(Product::MfrrDown);
    std::uniform_real_distribution<double> req(-1.3 * down, 1.3 * up);
    const double r = req(rng);
    const auto rec = activate_merit_order(l, r);
    REQUIRE(activation_cost(l, rec) == doctest::Approx(oracle::min_activation_cost(l, r)).epsilon(1e-12));
    // Priority: reactive mFRR in a direction only with aFRR at its cap.
    if (rec.reactive_mfrr(Product::MfrrUp) > 0.0) REQUIRE(rec.volume(Product::AfrrUp) == l.capacity(Product::AfrrUp));
    if (rec.reactive_mfrr(Product::MfrrDown) > 0.0) {
      REQUIRE(rec.volume(Product::AfrrDown) == l.capacity(Product::AfrrDown));
    }
    // Per-step activation within volume, totals equal parts.
    double afrr = 0.0, mfrr = 0.0;
    for (const auto& s : rec.steps) {
      REQUIRE(s.mw <= l.steps(s.product)[s.step].volume_mw);
      const double sgn = (s.product == Product::AfrrUp || s.product == Product::MfrrUp) ? 1.0 : -1.0;
      ((s.product == Product::AfrrUp || s.product == Product::AfrrDown) ? afrr : mfrr) += sgn * s.mw;
    }
    REQUIRE(afrr == doctest::Approx(rec.afrr_mw));
    REQUIRE(mfrr == doctest::Approx(rec.mfrr_mw));
  }
}

TEST_CASE("settlement: aFRR VWAP only") {
  const auto s = settle_quarter_hour(constant_minutes(-150.0), kIdle, up_ladder());
  const std::pair<double, double> pv[] = {{50, 100}, {80, 50}};
  CHECK(*s.afrr_vwap_up == doctest::Approx(oracle::vwap(pv)));
  CHECK(*s.afrr_vwap_up == doctest::Approx(60.0));
  CHECK_FALSE(s.mfrr_active);
  CHECK(s.direction == SystemDirection::Short);
  CHECK(s.imbalance_price == doctest::Approx(60.0));
}

TEST_CASE("settlement: short with mFRR takes the maximum") {
  auto l = up_ladder();
  l.mfrr_up = {{200, 500}};
  const auto s = settle_quarter_hour(constant_minutes(-250.0), kIdle, l);
  CHECK(*s.afrr_vwap_up == doctest::Approx(65.0));
  CHECK(*s.mfrr_extreme_up == 200.0);
  CHECK(s.mfrr_active);
  CHECK(s.direction == SystemDirection::Short);
  CHECK(s.imbalance_price == 200.0);
}

TEST_CASE("settlement: long with mFRR takes the minimum") {
  auto l = up_ladder();
  l.mfrr_down = {{-100, 500}};
  const auto s = settle_quarter_hour(constant_minutes(260.0), kIdle, l);
  const std::pair<double, double> pv[] = {{10, 100}, {5, 100}};
  CHECK(*s.afrr_vwap_down == doctest::Approx(oracle::vwap(pv)));
  CHECK(*s.mfrr_extreme_down == -100.0);
  CHECK(s.direction == SystemDirection::Long);
  CHECK(s.imbalance_price == -100.0);
}

TEST_CASE("settlement: mFRR less extreme than aFRR keeps the aFRR price") {
  // Proactive mFRR-up priced below the aFRR VWAP: max() keeps aFRR.
  auto l = up_ladder();
  l.mfrr_up = {{55, 10}};
  const auto s = settle_quarter_hour(constant_minutes(-160.0, 15, 10.0, 0.0), kIdle, l);
  CHECK(s.mfrr_active);
  const std::pair<double, double> pv[] = {{50, 100}, {80, 50}};
  CHECK(*s.afrr_vwap_up == doctest::Approx(oracle::vwap(pv)));
  CHECK(s.imbalance_price == doctest::Approx(60.0));
}

TEST_CASE("settlement: balanced quarter hour settles at zero") {
  const auto s = settle_quarter_hour(constant_minutes(0.0), kIdle, up_ladder());
  CHECK(s.direction == SystemDirection::Balanced);
  CHECK(s.imbalance_price == 0.0);
  CHECK_FALSE(s.afrr_vwap_up.has_value());
}

TEST_CASE("settlement: direction uses SI net of the battery") {
  // Battery charges 200 MW into a 150 MW surplus: system turns short.
  std::vector<double> charge(15, 200.0);
  const auto s = settle_quarter_hour(constant_minutes(150.0), charge, up_ladder());
  CHECK(s.direction == SystemDirection::Short);
  CHECK(s.imbalance_price == doctest::Approx(50.0));
}

TEST_CASE("settlement: VWAP weights by MW-minutes across minutes") {
  auto m = constant_minutes(-50.0);
  for (int i = 5; i < 15; ++i) m[i].si_mw = -150.0;
  const auto s = settle_quarter_hour(m, kIdle, up_ladder());
  // 5 minutes of 50 MW at 50, 10 minutes of 100 MW at 50 and 50 MW at 80.
  const std::pair<double, double> pv[] = {{50, 5 * 50}, {50, 10 * 100}, {80, 10 * 50}};
  CHECK(*s.afrr_vwap_up == doctest::Approx(oracle::vwap(pv)));
}

TEST_CASE("settlement input lengths") {
  CHECK_THROWS_AS(settle_quarter_hour(constant_minutes(0.0, 14), std::vector<double>(14, 0.0), up_ladder()),
                  ValidationError);
  CHECK_THROWS_AS(settle_quarter_hour(constant_minutes(0.0), std::vector<double>(14, 0.0), up_ladder()),
                  ValidationError);
}

TEST_CASE("imbalance price branch table") {
  using D = SystemDirection;
  CHECK(imbalance_price(D::Short, false, 60.0, 10.0, std::nullopt, std::nullopt) == 60.0);
  CHECK(imbalance_price(D::Long, false, 60.0, 10.0, std::nullopt, std::nullopt) == 10.0);
  CHECK(imbalance_price(D::Short, true, 60.0, 10.0, 200.0, std::nullopt) == 200.0);
  CHECK(imbalance_price(D::Short, true, 60.0, 10.0, 40.0, std::nullopt) == 60.0);
  CHECK(imbalance_price(D::Long, true, 60.0, 10.0, std::nullopt, -50.0) == -50.0);
  CHECK(imbalance_price(D::Long, true, 60.0, 10.0, std::nullopt, 30.0) == 10.0);
  CHECK(imbalance_price(D::Balanced, true, 60.0, 10.0, 200.0, -50.0) == 0.0);
  // mFRR active only in the other direction: passthrough of the aFRR price.
  CHECK(imbalance_price(D::Short, true, 60.0, 10.0, std::nullopt, -50.0) == 60.0);
  // Only mFRR priced in the direction.
  CHECK(imbalance_price(D::Short, true, std::nullopt, 10.0, 200.0, std::nullopt) == 200.0);
  CHECK(imbalance_price(D::Short, false, std::nullopt, 10.0, std::nullopt, std::nullopt) == 0.0);
}

TEST_CASE("indicative prices") {
  auto l = up_ladder();
  l.mfrr_up = {{200, 500}};
  const auto m = constant_minutes(-150.0);

  SUBCASE("first minute") {
    const double cands[] = {0.0, 100.0};
    const auto p = indicative_prices(std::span(m).first(1), {}, cands, l);
    CHECK(p[0] == doctest::Approx(60.0));
    // Required 250: aFRR 100 at 50 and 100 at 80, mFRR 50 at 200 -> short with mFRR.
    const auto v = oracle::min_activation_cost(l, 250.0);
    CHECK(v == doctest::Approx(100 * 50 + 100 * 80 + 50 * 200));
    CHECK(p[1] == 200.0);
  }
  SUBCASE("last minute equals the settlement") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> a(-120.0, 120.0);
    for (int rep = 0; rep < 50; ++rep) {
      auto mm = m;
      for (auto& r : mm) r.si_mw = a(rng) * 2.0;
      std::vector<double> acts(15);
      for (auto& x : acts) x = a(rng);
      const double realized[] = {acts[14]};
      const auto p = indicative_prices(mm, std::span(acts).first(14), realized, l);
      REQUIRE(p[0] == settle_quarter_hour(mm, acts, l).imbalance_price);
    }
  }
  SUBCASE("history length must match") {
    const double cands[] = {0.0};
    const double past[] = {0.0, 0.0};
    CHECK_THROWS_AS(indicative_prices(std::span(m).first(2), past, cands, l), ValidationError);
  }
}

TEST_CASE("planning clearing") {
  const auto l = up_ladder();
  CHECK(clear_planning_qh(l, -150.0, 0.0) == doctest::Approx(60.0));
  CHECK(clear_planning_qh(l, -150.0, -150.0) == 0.0);
  CHECK(clear_planning_qh(l, 100.0, 0.0) == doctest::Approx(10.0));
  // Consistent with the minute model on constant inputs without mFRR.
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> si(-190.0, 190.0);
  for (int k = 0; k < 100; ++k) {
    const double x = si(rng);
    CHECK(clear_planning_qh(l, x, 0.0) == doctest::Approx(settle_quarter_hour(constant_minutes(x), kIdle, l).imbalance_price));
  }
}

TEST_CASE("price is non-decreasing in upward requirement without mFRR") {
  const auto l = up_ladder();
  double last = -1e300;
  for (double req = 1.0; req <= 200.0; req += 0.5) {
    const double p = clear_planning_qh(l, -req, 0.0);
    REQUIRE(p >= last - 1e-12);
    last = p;
  }
}
