#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace imbal {

using Date = std::chrono::year_month_day;

inline constexpr int kQuarterHoursPerDay = 96;
inline constexpr int kMinutesPerQuarterHour = 15;
inline constexpr int kMinutesPerDay = kQuarterHoursPerDay * kMinutesPerQuarterHour;

std::string format_date(const Date& d);
Date parse_date(const std::string& text);  // YYYY-MM-DD, throws ValidationError

/// One published minute of balancing data. `si_mw` is the system imbalance,
/// positive when the system is long (surplus). Proactive mFRR volumes are
/// scheduled for the whole quarter hour and repeated on each of its minutes.
struct MinuteRecord {
  Date date{};
  int qh = 0;
  int minute = 0;
  double si_mw = 0.0;
  double proactive_mfrr_up_mw = 0.0;
  double proactive_mfrr_down_mw = 0.0;

  friend bool operator==(const MinuteRecord&, const MinuteRecord&) = default;
};

struct LadderStep {
  double price_eur_mwh = 0.0;
  double volume_mw = 0.0;

  friend bool operator==(const LadderStep&, const LadderStep&) = default;
};

enum class Product { AfrrUp, AfrrDown, MfrrUp, MfrrDown };

const char* product_name(Product p);
Product parse_product(const std::string& name);

/// Bid ladders of one quarter hour, each already in merit order: upward
/// products by ascending price, downward products by descending price.
struct MeritOrderLadder {
  std::vector<LadderStep> afrr_up;
  std::vector<LadderStep> afrr_down;
  std::vector<LadderStep> mfrr_up;
  std::vector<LadderStep> mfrr_down;

  const std::vector<LadderStep>& steps(Product p) const;
  std::vector<LadderStep>& steps(Product p);
  double capacity(Product p) const;

  /// Throws ValidationError when a product is not strictly monotone in price
  /// in its merit direction or holds a non-positive volume.
  void validate() const;

  friend bool operator==(const MeritOrderLadder&, const MeritOrderLadder&) = default;
};

enum class Split { Train, Validation, Test };

const char* split_name(Split s);
Split parse_split(const std::string& name);

/// Monthly split rule: days 1-20 train, 21-25 validation, the rest test.
Split split_for(const Date& d);

struct DayData {
  Date date{};
  Split split = Split::Train;
  std::vector<MinuteRecord> minutes;     // 1440, ordered by (qh, minute)
  std::vector<MeritOrderLadder> ladders;  // 96

  std::span<const MinuteRecord> quarter_hour(int qh) const;
  double mean_si(int qh) const;

  friend bool operator==(const DayData&, const DayData&) = default;
};

/// Immutable once built. Quarter hours are addressable globally as
/// day_index * 96 + qh.
class BalancingDataset {
public:
  BalancingDataset() = default;
  explicit BalancingDataset(std::vector<DayData> days);

  const std::vector<DayData>& days() const { return days_; }
  std::size_t size() const { return days_.size(); }
  const DayData& day(std::size_t i) const { return days_.at(i); }

  std::size_t total_quarter_hours() const { return days_.size() * kQuarterHoursPerDay; }
  const MeritOrderLadder& ladder(std::size_t global_qh) const;
  std::span<const MinuteRecord> quarter_hour(std::size_t global_qh) const;
  double mean_si(std::size_t global_qh) const;

  std::vector<std::size_t> days_in(Split s) const;

  friend bool operator==(const BalancingDataset&, const BalancingDataset&) = default;

private:
  std::vector<DayData> days_;
};

/// Knobs of the synthetic generator. SI is an order-1 autoregressive
/// process around a daily sinusoid; ladder prices follow their own daily
/// cycle with per-quarter-hour noise.
struct SyntheticProfile {
  int start_year = 2023;
  unsigned start_month = 1;
  unsigned start_day = 1;

  double si_mean_mw = 0.0;
  double si_std_mw = 150.0;           // stationary std of the AR(1) part
  double si_ar_coeff = 0.97;          // minute-to-minute autocorrelation
  double si_daily_amplitude_mw = 80.0;

  double up_price_base = 110.0;
  double down_price_base = 40.0;
  double price_daily_amplitude = 30.0;
  double price_noise = 10.0;
  double step_price_increment = 25.0;  // between consecutive ladder steps
  double mfrr_premium = 120.0;         // mFRR-up over last aFRR-up step
  int ladder_depth = 3;                // steps per product
  double afrr_step_volume_mw = 100.0;
  double mfrr_step_volume_mw = 150.0;

  double proactive_fraction = 0.05;  // fraction of quarter hours with proactive mFRR
  double proactive_volume_mw = 100.0;

  void validate() const;
};

BalancingDataset gen_synthetic(std::uint64_t seed, int n_days, const SyntheticProfile& profile = {});

/// Deterministic price-taker day: the system alternates between long and
/// short half-cycles, and single deep aFRR steps fix the price at
/// low_price (long) or high_price (short) whatever a small battery does.
struct CyclicToyProfile {
  int year = 2024;
  unsigned month = 1;
  unsigned day = 1;
  int period_qh = 32;  // one low half followed by one high half
  double low_price = -20.0;
  double high_price = 80.0;
  double si_mw = 100.0;
  double ladder_volume_mw = 1000.0;

  void validate() const;
};

BalancingDataset gen_cyclic_toy(const CyclicToyProfile& profile = {});

BalancingDataset load_csv(const std::filesystem::path& minutes_path,
                          const std::filesystem::path& ladders_path);
void write_csv(const BalancingDataset& data, const std::filesystem::path& minutes_path,
               const std::filesystem::path& ladders_path);

}  // namespace imbal
