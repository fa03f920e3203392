#include "imbal/data.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "imbal/error.hpp"

namespace imbal {

std::string format_date(const Date& d) {
  return fmt::format("{:04d}-{:02d}-{:02d}", int(d.year()), unsigned(d.month()), unsigned(d.day()));
}

Date parse_date(const std::string& text) {
  int y = 0;
  unsigned m = 0, d = 0;
  char dash1 = 0, dash2 = 0;
  std::istringstream in(text);
  in >> y >> dash1 >> m >> dash2 >> d;
  Date date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!in || dash1 != '-' || dash2 != '-' || !in.eof() || !date.ok()) {
    throw ValidationError("invalid date '" + text + "', expected YYYY-MM-DD");
  }
  return date;
}

const char* product_name(Product p) {
  switch (p) {
    case Product::AfrrUp: return "afrr_up";
    case Product::AfrrDown: return "afrr_down";
    case Product::MfrrUp: return "mfrr_up";
    case Product::MfrrDown: return "mfrr_down";
  }
  return "?";
}

Product parse_product(const std::string& name) {
  for (auto p : {Product::AfrrUp, Product::AfrrDown, Product::MfrrUp, Product::MfrrDown}) {
    if (name == product_name(p)) return p;
  }
  throw ValidationError("unknown product '" + name + "'");
}

const std::vector<LadderStep>& MeritOrderLadder::steps(Product p) const {
  switch (p) {
    case Product::AfrrUp: return afrr_up;
    case Product::AfrrDown: return afrr_down;
    case Product::MfrrUp: return mfrr_up;
    case Product::MfrrDown: return mfrr_down;
  }
  return afrr_up;
}

std::vector<LadderStep>& MeritOrderLadder::steps(Product p) {
  return const_cast<std::vector<LadderStep>&>(std::as_const(*this).steps(p));
}

double MeritOrderLadder::capacity(Product p) const {
  double total = 0.0;
  for (const auto& s : steps(p)) total += s.volume_mw;
  return total;
}

void MeritOrderLadder::validate() const {
  for (auto p : {Product::AfrrUp, Product::AfrrDown, Product::MfrrUp, Product::MfrrDown}) {
    const auto& s = steps(p);
    const bool ascending = (p == Product::AfrrUp || p == Product::MfrrUp);
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (!(s[i].volume_mw > 0.0) || !std::isfinite(s[i].volume_mw) || !std::isfinite(s[i].price_eur_mwh)) {
        throw ValidationError(fmt::format("{} step {} has non-positive or non-finite volume/price",
                                          product_name(p), i));
      }
      if (i > 0) {
        const bool ok = ascending ? s[i].price_eur_mwh > s[i - 1].price_eur_mwh
                                  : s[i].price_eur_mwh < s[i - 1].price_eur_mwh;
        if (!ok) {
          throw ValidationError(fmt::format("{} prices must be strictly {} (step {})", product_name(p),
                                            ascending ? "ascending" : "descending", i));
        }
      }
    }
  }
}

const char* split_name(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Validation: return "validation";
    case Split::Test: return "test";
  }
  return "?";
}

Split parse_split(const std::string& name) {
  for (auto s : {Split::Train, Split::Validation, Split::Test}) {
    if (name == split_name(s)) return s;
  }
  throw ValidationError("unknown split '" + name + "'");
}

Split split_for(const Date& d) {
  const unsigned dom = unsigned(d.day());
  if (dom <= 20) return Split::Train;
  if (dom <= 25) return Split::Validation;
  return Split::Test;
}

std::span<const MinuteRecord> DayData::quarter_hour(int qh) const {
  return std::span<const MinuteRecord>(minutes).subspan(std::size_t(qh) * kMinutesPerQuarterHour,
                                                        kMinutesPerQuarterHour);
}

double DayData::mean_si(int qh) const {
  double sum = 0.0;
  for (const auto& r : quarter_hour(qh)) sum += r.si_mw;
  return sum / kMinutesPerQuarterHour;
}

BalancingDataset::BalancingDataset(std::vector<DayData> days) : days_(std::move(days)) {
  for (const auto& d : days_) {
    if (d.minutes.size() != std::size_t(kMinutesPerDay) || d.ladders.size() != std::size_t(kQuarterHoursPerDay)) {
      throw ValidationError("day " + format_date(d.date) + " is incomplete");
    }
  }
}

const MeritOrderLadder& BalancingDataset::ladder(std::size_t global_qh) const {
  return days_.at(global_qh / kQuarterHoursPerDay).ladders[global_qh % kQuarterHoursPerDay];
}

std::span<const MinuteRecord> BalancingDataset::quarter_hour(std::size_t global_qh) const {
  return days_.at(global_qh / kQuarterHoursPerDay).quarter_hour(int(global_qh % kQuarterHoursPerDay));
}

double BalancingDataset::mean_si(std::size_t global_qh) const {
  return days_.at(global_qh / kQuarterHoursPerDay).mean_si(int(global_qh % kQuarterHoursPerDay));
}

std::vector<std::size_t> BalancingDataset::days_in(Split s) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < days_.size(); ++i) {
    if (days_[i].split == s) out.push_back(i);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic data

void SyntheticProfile::validate() const {
  auto fail = [](const std::string& what) { throw ValidationError("synthetic profile: " + what); };
  if (!(si_std_mw >= 0.0)) fail("si_std_mw must be >= 0");
  if (!(si_ar_coeff >= 0.0 && si_ar_coeff < 1.0)) fail("si_ar_coeff must be in [0, 1)");
  if (ladder_depth < 1) fail("ladder_depth must be >= 1");
  if (!(afrr_step_volume_mw > 0.0) || !(mfrr_step_volume_mw > 0.0)) fail("step volumes must be > 0");
  if (!(step_price_increment > 0.0)) fail("step_price_increment must be > 0");
  if (!(proactive_fraction >= 0.0 && proactive_fraction <= 1.0)) fail("proactive_fraction must be in [0, 1]");
  if (!(proactive_volume_mw >= 0.0)) fail("proactive_volume_mw must be >= 0");
  if (!(price_noise >= 0.0)) fail("price_noise must be >= 0");
  if (!Date{std::chrono::year{start_year}, std::chrono::month{start_month}, std::chrono::day{start_day}}.ok()) {
    fail("invalid start date");
  }
}

namespace {

MeritOrderLadder synth_ladder(const SyntheticProfile& p, double cycle, std::mt19937_64& rng) {
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> jitter(0.8, 1.2);
  const double up0 = p.up_price_base + p.price_daily_amplitude * cycle + p.price_noise * noise(rng);
  const double down0 = p.down_price_base + p.price_daily_amplitude * cycle + p.price_noise * noise(rng);
  // Keep every downward bid below every upward bid.
  const double down_top = std::min(down0, up0 - p.step_price_increment);

  MeritOrderLadder l;
  for (int k = 0; k < p.ladder_depth; ++k) {
    l.afrr_up.push_back({up0 + k * p.step_price_increment, p.afrr_step_volume_mw * jitter(rng)});
    l.afrr_down.push_back({down_top - k * p.step_price_increment, p.afrr_step_volume_mw * jitter(rng)});
  }
  const double mfrr_up0 = l.afrr_up.back().price_eur_mwh + p.mfrr_premium;
  const double mfrr_down0 = l.afrr_down.back().price_eur_mwh - p.mfrr_premium;
  for (int k = 0; k < p.ladder_depth; ++k) {
    l.mfrr_up.push_back({mfrr_up0 + 2 * k * p.step_price_increment, p.mfrr_step_volume_mw * jitter(rng)});
    l.mfrr_down.push_back({mfrr_down0 - 2 * k * p.step_price_increment, p.mfrr_step_volume_mw * jitter(rng)});
  }
  return l;
}

}  // namespace

BalancingDataset gen_synthetic(std::uint64_t seed, int n_days, const SyntheticProfile& profile) {
  profile.validate();
  if (n_days < 1) throw ValidationError("gen_synthetic: n_days must be >= 1");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double innovation = profile.si_std_mw * std::sqrt(1.0 - profile.si_ar_coeff * profile.si_ar_coeff);
  constexpr double two_pi = 2.0 * std::numbers::pi;

  const std::chrono::sys_days start{Date{std::chrono::year{profile.start_year},
                                         std::chrono::month{profile.start_month},
                                         std::chrono::day{profile.start_day}}};
  double ar = profile.si_std_mw * gauss(rng);

  std::vector<DayData> days;
  days.reserve(std::size_t(n_days));
  for (int d = 0; d < n_days; ++d) {
    DayData day;
    day.date = Date{start + std::chrono::days{d}};
    day.split = split_for(day.date);
    day.minutes.reserve(kMinutesPerDay);
    day.ladders.reserve(kQuarterHoursPerDay);
    for (int qh = 0; qh < kQuarterHoursPerDay; ++qh) {
      const double phase = two_pi * qh / kQuarterHoursPerDay;
      day.ladders.push_back(synth_ladder(profile, std::sin(phase - 0.5 * std::numbers::pi), rng));

      double pro_up = 0.0, pro_down = 0.0;
      if (unif(rng) < profile.proactive_fraction) {
        // Proactive activation anticipates the current imbalance sign.
        (ar + profile.si_mean_mw <= 0.0 ? pro_up : pro_down) = profile.proactive_volume_mw;
      }
      for (int m = 0; m < kMinutesPerQuarterHour; ++m) {
        const double t = double(qh * kMinutesPerQuarterHour + m) / kMinutesPerDay;
        ar = profile.si_ar_coeff * ar + innovation * gauss(rng);
        MinuteRecord r;
        r.date = day.date;
        r.qh = qh;
        r.minute = m;
        r.si_mw = profile.si_mean_mw + profile.si_daily_amplitude_mw * std::sin(two_pi * t) + ar;
        r.proactive_mfrr_up_mw = pro_up;
        r.proactive_mfrr_down_mw = pro_down;
        day.minutes.push_back(r);
      }
    }
    days.push_back(std::move(day));
  }
  return BalancingDataset(std::move(days));
}

void CyclicToyProfile::validate() const {
  if (period_qh < 2 || period_qh % 2 != 0) throw ValidationError("cyclic toy: period must be an even number >= 2");
  if (!(low_price < high_price)) throw ValidationError("cyclic toy: low price must be below high price");
  if (!(si_mw > 0.0) || !(ladder_volume_mw > si_mw)) {
    throw ValidationError("cyclic toy: need 0 < si < ladder volume");
  }
}

BalancingDataset gen_cyclic_toy(const CyclicToyProfile& p) {
  p.validate();
  DayData day;
  day.date = Date{std::chrono::year{p.year}, std::chrono::month{p.month}, std::chrono::day{p.day}};
  if (!day.date.ok()) throw ValidationError("cyclic toy: invalid date");
  day.split = split_for(day.date);
  MeritOrderLadder ladder;
  ladder.afrr_up = {{p.high_price, p.ladder_volume_mw}};
  ladder.afrr_down = {{p.low_price, p.ladder_volume_mw}};
  day.ladders.assign(kQuarterHoursPerDay, ladder);
  for (int qh = 0; qh < kQuarterHoursPerDay; ++qh) {
    const bool low = (qh % p.period_qh) < p.period_qh / 2;
    for (int m = 0; m < kMinutesPerQuarterHour; ++m) {
      day.minutes.push_back(MinuteRecord{day.date, qh, m, low ? p.si_mw : -p.si_mw, 0.0, 0.0});
    }
  }
  return BalancingDataset({std::move(day)});
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

double parse_double(const std::string& s, std::size_t row, const char* column) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size() || !std::isfinite(v)) {
    throw ValidationError(fmt::format("row {}: column {} is not a number: '{}'", row, column, s));
  }
  return v;
}

int parse_int(const std::string& s, std::size_t row, const char* column) {
  const double v = parse_double(s, row, column);
  if (v != std::floor(v)) throw ValidationError(fmt::format("row {}: column {} must be an integer", row, column));
  return int(v);
}

void expect_header(std::istream& in, const std::string& expected, const std::filesystem::path& path) {
  std::string header;
  if (!std::getline(in, header)) throw ValidationError(path.string() + ": no days (empty file)");
  header = strip_cr(header);
  if (header.size() >= 3 && header.compare(0, 3, "\xEF\xBB\xBF") == 0) header.erase(0, 3);
  if (header != expected) {
    throw ValidationError(path.string() + ": row 1: expected header '" + expected + "'");
  }
}

struct PendingDay {
  std::vector<MinuteRecord> minutes = std::vector<MinuteRecord>(kMinutesPerDay);
  std::vector<bool> seen = std::vector<bool>(kMinutesPerDay, false);
  std::vector<MeritOrderLadder> ladders = std::vector<MeritOrderLadder>(kQuarterHoursPerDay);
  std::vector<std::map<std::pair<int, int>, LadderStep>> steps =
      std::vector<std::map<std::pair<int, int>, LadderStep>>(kQuarterHoursPerDay);
};

struct DateLess {
  bool operator()(const Date& a, const Date& b) const {
    return std::chrono::sys_days{a} < std::chrono::sys_days{b};
  }
};

}  // namespace

BalancingDataset load_csv(const std::filesystem::path& minutes_path, const std::filesystem::path& ladders_path) {
  std::map<Date, PendingDay, DateLess> pending;

  {
    std::ifstream in(minutes_path);
    if (!in) throw ValidationError("cannot open " + minutes_path.string());
    expect_header(in, "date,qh,minute,si_mw,proactive_mfrr_up_mw,proactive_mfrr_down_mw", minutes_path);
    std::string line;
    std::size_t row = 1;
    while (std::getline(in, line)) {
      ++row;
      line = strip_cr(line);
      if (line.empty()) continue;
      const auto f = split_fields(line);
      if (f.size() != 6) throw ValidationError(fmt::format("{}: row {}: expected 6 columns", minutes_path.string(), row));
      MinuteRecord r;
      try {
        r.date = parse_date(f[0]);
      } catch (const ValidationError& e) {
        throw ValidationError(fmt::format("{}: row {}: {}", minutes_path.string(), row, e.what()));
      }
      r.qh = parse_int(f[1], row, "qh");
      r.minute = parse_int(f[2], row, "minute");
      r.si_mw = parse_double(f[3], row, "si_mw");
      r.proactive_mfrr_up_mw = parse_double(f[4], row, "proactive_mfrr_up_mw");
      r.proactive_mfrr_down_mw = parse_double(f[5], row, "proactive_mfrr_down_mw");
      if (r.qh < 0 || r.qh >= kQuarterHoursPerDay || r.minute < 0 || r.minute >= kMinutesPerQuarterHour) {
        throw ValidationError(fmt::format("{}: row {}: qh/minute out of range", minutes_path.string(), row));
      }
      if (r.proactive_mfrr_up_mw < 0.0 || r.proactive_mfrr_down_mw < 0.0) {
        throw ValidationError(fmt::format("{}: row {}: negative proactive volume", minutes_path.string(), row));
      }
      if (r.proactive_mfrr_up_mw > 0.0 && r.proactive_mfrr_down_mw > 0.0) {
        throw ValidationError(
            fmt::format("{}: row {}: proactive mFRR in both directions", minutes_path.string(), row));
      }
      auto& day = pending[r.date];
      const int idx = r.qh * kMinutesPerQuarterHour + r.minute;
      if (day.seen[idx]) throw ValidationError(fmt::format("{}: row {}: duplicate minute", minutes_path.string(), row));
      day.seen[idx] = true;
      day.minutes[idx] = r;
    }
  }
  if (pending.empty()) throw ValidationError(minutes_path.string() + ": no days");

  {
    std::ifstream in(ladders_path);
    if (!in) throw ValidationError("cannot open " + ladders_path.string());
    expect_header(in, "date,qh,product,step_index,price_eur_mwh,volume_mw", ladders_path);
    std::string line;
    std::size_t row = 1;
    while (std::getline(in, line)) {
      ++row;
      line = strip_cr(line);
      if (line.empty()) continue;
      const auto f = split_fields(line);
      if (f.size() != 6) throw ValidationError(fmt::format("{}: row {}: expected 6 columns", ladders_path.string(), row));
      Date date;
      Product product;
      try {
        date = parse_date(f[0]);
        product = parse_product(f[2]);
      } catch (const ValidationError& e) {
        throw ValidationError(fmt::format("{}: row {}: {}", ladders_path.string(), row, e.what()));
      }
      const int qh = parse_int(f[1], row, "qh");
      const int step = parse_int(f[3], row, "step_index");
      const LadderStep s{parse_double(f[4], row, "price_eur_mwh"), parse_double(f[5], row, "volume_mw")};
      if (qh < 0 || qh >= kQuarterHoursPerDay || step < 0) {
        throw ValidationError(fmt::format("{}: row {}: qh/step_index out of range", ladders_path.string(), row));
      }
      auto it = pending.find(date);
      if (it == pending.end()) {
        throw ValidationError(fmt::format("{}: row {}: date {} has no minute data", ladders_path.string(), row, f[0]));
      }
      if (!it->second.steps[qh].emplace(std::pair{int(product), step}, s).second) {
        throw ValidationError(fmt::format("{}: row {}: duplicate ladder step", ladders_path.string(), row));
      }
    }
  }

  std::vector<DayData> days;
  for (auto& [date, p] : pending) {
    for (int i = 0; i < kMinutesPerDay; ++i) {
      if (!p.seen[i]) {
        throw ValidationError(fmt::format("{}: day {} is missing minutes (first gap at qh {}, minute {})",
                                          minutes_path.string(), format_date(date), i / kMinutesPerQuarterHour,
                                          i % kMinutesPerQuarterHour));
      }
    }
    for (int qh = 0; qh < kQuarterHoursPerDay; ++qh) {
      const auto& steps = p.steps[qh];
      if (steps.empty()) {
        throw ValidationError(fmt::format("{}: day {} has no ladder for qh {}", ladders_path.string(),
                                          format_date(date), qh));
      }
      for (const auto& [key, s] : steps) {
        auto& vec = p.ladders[qh].steps(Product(key.first));
        if (std::size_t(key.second) != vec.size()) {
          throw ValidationError(fmt::format("{}: day {} qh {}: {} step indices are not contiguous from 0",
                                            ladders_path.string(), format_date(date), qh,
                                            product_name(Product(key.first))));
        }
        vec.push_back(s);
      }
      try {
        p.ladders[qh].validate();
      } catch (const ValidationError& e) {
        throw ValidationError(fmt::format("{}: day {} qh {}: {}", ladders_path.string(), format_date(date), qh, e.what()));
      }
    }
    DayData day;
    day.date = date;
    day.split = split_for(date);
    day.minutes = std::move(p.minutes);
    day.ladders = std::move(p.ladders);
    days.push_back(std::move(day));
  }
  return BalancingDataset(std::move(days));
}

void write_csv(const BalancingDataset& data, const std::filesystem::path& minutes_path,
               const std::filesystem::path& ladders_path) {
  std::ofstream mout(minutes_path);
  std::ofstream lout(ladders_path);
  if (!mout || !lout) throw ValidationError("cannot open output CSV files for writing");
  mout << "date,qh,minute,si_mw,proactive_mfrr_up_mw,proactive_mfrr_down_mw\n";
  lout << "date,qh,product,step_index,price_eur_mwh,volume_mw\n";
  for (const auto& day : data.days()) {
    const std::string date = format_date(day.date);
    for (const auto& r : day.minutes) {
      mout << fmt::format("{},{},{},{},{},{}\n", date, r.qh, r.minute, r.si_mw, r.proactive_mfrr_up_mw,
                          r.proactive_mfrr_down_mw);
    }
    for (int qh = 0; qh < kQuarterHoursPerDay; ++qh) {
      for (auto p : {Product::AfrrUp, Product::AfrrDown, Product::MfrrUp, Product::MfrrDown}) {
        const auto& steps = day.ladders[qh].steps(p);
        for (std::size_t i = 0; i < steps.size(); ++i) {
          lout << fmt::format("{},{},{},{},{},{}\n", date, qh, product_name(p), i, steps[i].price_eur_mwh,
                              steps[i].volume_mw);
        }
      }
    }
  }
}

}  // namespace imbal
