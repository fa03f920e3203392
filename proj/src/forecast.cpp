#include "imbal/forecast.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "imbal/error.hpp"

namespace imbal {

std::vector<double> ScenarioSet::step_mean() const {
  std::vector<double> mean(horizon_qh, 0.0);
  for (std::size_t s = 0; s < n_scenarios; ++s) {
    for (std::size_t j = 0; j < horizon_qh; ++j) mean[j] += probabilities[s] * at(s, j);
  }
  return mean;
}

void ScenarioSet::validate() const {
  if (horizon_qh == 0 || n_scenarios == 0) throw ValidationError("scenario set is empty");
  if (si_mw.size() != horizon_qh * n_scenarios || probabilities.size() != n_scenarios) {
    throw ValidationError("scenario set shape mismatch");
  }
  double total = 0.0;
  for (double p : probabilities) {
    if (!(p >= 0.0)) throw ValidationError("scenario probabilities must be >= 0");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ValidationError("scenario probabilities must sum to 1");
}

namespace {

ScenarioSet uniform_set(std::size_t horizon, std::size_t n) {
  ScenarioSet s;
  s.horizon_qh = horizon;
  s.n_scenarios = n;
  s.si_mw.assign(horizon * n, 0.0);
  s.probabilities.assign(n, 1.0 / double(n));
  return s;
}

void check_window(const BalancingDataset& data, std::size_t t0, std::size_t horizon) {
  if (horizon == 0) throw ValidationError("forecast horizon must be >= 1");
  if (t0 + horizon > data.total_quarter_hours()) {
    throw ValidationError(fmt::format("forecast window [{}, {}) exceeds the dataset ({} quarter hours)", t0,
                                      t0 + horizon, data.total_quarter_hours()));
  }
}

}  // namespace

ScenarioSet perfect_foresight(const BalancingDataset& data, std::size_t t0, std::size_t horizon) {
  check_window(data, t0, horizon);
  auto s = uniform_set(horizon, 1);
  for (std::size_t j = 0; j < horizon; ++j) s.si_mw[j] = data.mean_si(t0 + j);
  return s;
}

ScenarioSet gaussian_scenarios(const BalancingDataset& data, std::size_t t0, std::size_t horizon, double sigma0,
                               double growth, std::size_t n, std::uint64_t seed) {
  check_window(data, t0, horizon);
  if (n == 0) throw ValidationError("gaussian_scenarios: n must be >= 1");
  if (!(sigma0 >= 0.0) || !(growth > -1.0)) throw ValidationError("gaussian_scenarios: invalid sigma0/growth");
  auto s = uniform_set(horizon, n);
  std::vector<double> realized(horizon), sigma(horizon);
  for (std::size_t j = 0; j < horizon; ++j) {
    realized[j] = data.mean_si(t0 + j);
    sigma[j] = sigma0 * std::pow(1.0 + growth, double(j));
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t j = 0; j < horizon; ++j) {
      const double z = gauss(rng);
      s.si_mw[k * horizon + j] = sigma[j] == 0.0 ? realized[j] : realized[j] + sigma[j] * z;
    }
  }
  return s;
}

void QuantileCurve::validate() const {
  if (levels.empty() || levels.size() != values.size()) throw ValidationError("quantile curve: shape mismatch");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (!(levels[i] > 0.0 && levels[i] < 1.0)) throw ValidationError("quantile levels must lie in (0, 1)");
    if (i > 0 && !(levels[i] > levels[i - 1])) throw ValidationError("quantile levels must be strictly increasing");
    if (i > 0 && !(values[i] >= values[i - 1])) throw ValidationError("quantile values must be non-decreasing");
  }
}

double QuantileCurve::sample_at(double u) const {
  if (u <= levels.front()) return values.front();
  if (u >= levels.back()) return values.back();
  const auto it = std::upper_bound(levels.begin(), levels.end(), u);
  const std::size_t hi = std::size_t(it - levels.begin());
  const std::size_t lo = hi - 1;
  const double w = (u - levels[lo]) / (levels[hi] - levels[lo]);
  return values[lo] + w * (values[hi] - values[lo]);
}

ScenarioSet from_quantiles(const std::vector<QuantileCurve>& curves, std::size_t n, std::uint64_t seed) {
  if (curves.empty()) throw ValidationError("from_quantiles: no curves");
  if (n == 0) throw ValidationError("from_quantiles: n must be >= 1");
  for (const auto& c : curves) c.validate();
  const std::size_t horizon = curves.size();
  auto s = uniform_set(horizon, n);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t j = 0; j < horizon; ++j) s.si_mw[k * horizon + j] = curves[j].sample_at(unif(rng));
  }
  return s;
}

namespace {
long day_key(const Date& d) { return std::chrono::sys_days{d}.time_since_epoch().count(); }
}  // namespace

QuantileForecastTable QuantileForecastTable::load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "date,qh,step,quantile_level,si_mw") {
    throw ValidationError(path.string() + ": row 1: expected header 'date,qh,step,quantile_level,si_mw'");
  }
  // (anchor) -> step -> level -> value
  std::map<std::pair<long, int>, std::map<int, std::map<double, double>>> raw;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string date, qh, step, level, value;
    if (!std::getline(fields, date, ',') || !std::getline(fields, qh, ',') || !std::getline(fields, step, ',') ||
        !std::getline(fields, level, ',') || !std::getline(fields, value)) {
      throw ValidationError(fmt::format("{}: row {}: expected 5 columns", path.string(), row));
    }
    try {
      const auto d = parse_date(date);
      raw[{day_key(d), std::stoi(qh)}][std::stoi(step)][std::stod(level)] = std::stod(value);
    } catch (const std::exception& e) {
      throw ValidationError(fmt::format("{}: row {}: {}", path.string(), row, e.what()));
    }
  }
  QuantileForecastTable t;
  for (auto& [anchor, steps] : raw) {
    std::vector<QuantileCurve> curves;
    int expected = 0;
    for (auto& [step, grid] : steps) {
      if (step != expected++) throw ValidationError(path.string() + ": forecast steps must be contiguous from 0");
      QuantileCurve c;
      for (auto& [lv, v] : grid) {
        c.levels.push_back(lv);
        c.values.push_back(v);
      }
      c.validate();
      curves.push_back(std::move(c));
    }
    t.table_[anchor] = std::move(curves);
  }
  return t;
}

const std::vector<QuantileCurve>& QuantileForecastTable::at(const Date& date, int qh) const {
  const auto it = table_.find({day_key(date), qh});
  if (it == table_.end()) throw ValidationError("no quantile forecast for " + format_date(date) + fmt::format(" qh {}", qh));
  return it->second;
}

bool QuantileForecastTable::contains(const Date& date, int qh) const {
  return table_.count({day_key(date), qh}) > 0;
}

ForecasterKind parse_forecaster(const std::string& name) {
  if (name == "perfect") return ForecasterKind::PerfectForesight;
  if (name == "gaussian") return ForecasterKind::Gaussian;
  if (name == "quantile") return ForecasterKind::Quantile;
  throw ValidationError("unknown forecaster '" + name + "' (perfect|gaussian|quantile)");
}

std::uint64_t anchor_seed(std::uint64_t seed, std::size_t t0) {
  // splitmix64 finalizer over the combined key
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (std::uint64_t(t0) + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

ScenarioSet make_scenarios(const BalancingDataset& data, std::size_t t0, std::size_t horizon,
                           const ForecasterConfig& cfg) {
  switch (cfg.kind) {
    case ForecasterKind::PerfectForesight:
      return perfect_foresight(data, t0, horizon);
    case ForecasterKind::Gaussian:
      return gaussian_scenarios(data, t0, horizon, cfg.sigma0, cfg.growth, cfg.n_scenarios, anchor_seed(cfg.seed, t0));
    case ForecasterKind::Quantile: {
      if (cfg.quantiles == nullptr) throw ValidationError("quantile forecaster needs a forecast table");
      const auto& day = data.day(t0 / kQuarterHoursPerDay);
      const auto& curves = cfg.quantiles->at(day.date, int(t0 % kQuarterHoursPerDay));
      if (curves.size() < horizon) throw ValidationError("quantile forecast shorter than the planning horizon");
      std::vector<QuantileCurve> used(curves.begin(), curves.begin() + std::ptrdiff_t(horizon));
      return from_quantiles(used, cfg.n_scenarios, anchor_seed(cfg.seed, t0));
    }
  }
  throw ValidationError("unknown forecaster");
}

}  // namespace imbal
