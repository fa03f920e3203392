#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "imbal/data.hpp"

namespace imbal {

/// System-imbalance scenarios over a look-ahead horizon of quarter hours.
struct ScenarioSet {
  std::size_t horizon_qh = 0;
  std::size_t n_scenarios = 0;
  std::vector<double> si_mw;          // row-major [scenario][step]
  std::vector<double> probabilities;  // one per scenario, sums to 1

  double at(std::size_t scenario, std::size_t step) const { return si_mw[scenario * horizon_qh + step]; }
  std::vector<double> step_mean() const;
  void validate() const;
};

ScenarioSet perfect_foresight(const BalancingDataset& data, std::size_t t0, std::size_t horizon);

/// Noise std at step j is sigma0 * (1 + growth)^j, independent across steps.
ScenarioSet gaussian_scenarios(const BalancingDataset& data, std::size_t t0, std::size_t horizon, double sigma0,
                               double growth, std::size_t n, std::uint64_t seed);

/// Monotone quantile grid of one forecast step.
struct QuantileCurve {
  std::vector<double> levels;  // strictly increasing in (0, 1)
  std::vector<double> values;  // non-decreasing

  void validate() const;
  /// Piecewise-linear inverse CDF, flat beyond the outermost levels.
  double sample_at(double u) const;
};

ScenarioSet from_quantiles(const std::vector<QuantileCurve>& curves, std::size_t n, std::uint64_t seed);

/// Quantile forecasts keyed by (date, qh) anchor; one curve per horizon step.
class QuantileForecastTable {
public:
  static QuantileForecastTable load_csv(const std::filesystem::path& path);

  const std::vector<QuantileCurve>& at(const Date& date, int qh) const;
  bool contains(const Date& date, int qh) const;

private:
  std::map<std::pair<long, int>, std::vector<QuantileCurve>> table_;
};

enum class ForecasterKind { PerfectForesight, Gaussian, Quantile };

/// How scenarios are produced when planning at an anchor quarter hour. The
/// Gaussian and quantile samplers derive a per-anchor seed from `seed`, so
/// the forecast issued for a given quarter hour is reproducible.
struct ForecasterConfig {
  ForecasterKind kind = ForecasterKind::PerfectForesight;
  double sigma0 = 50.0;
  double growth = 0.2;
  std::size_t n_scenarios = 20;
  std::uint64_t seed = 0;
  const QuantileForecastTable* quantiles = nullptr;
};

ForecasterKind parse_forecaster(const std::string& name);
std::uint64_t anchor_seed(std::uint64_t seed, std::size_t t0);

ScenarioSet make_scenarios(const BalancingDataset& data, std::size_t t0, std::size_t horizon,
                           const ForecasterConfig& cfg);

}  // namespace imbal
