#pragma once

#include <array>
#include <chrono>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace spotvol {

using Date = std::chrono::sys_days;

/// Parses an ISO-8601 calendar date (YYYY-MM-DD).
std::optional<Date> parse_date(std::string_view text);
std::string format_date(Date date);
/// 0 = Monday ... 6 = Sunday.
int weekday_index(Date date);

enum class Zone { Zone1, Zone2 };

std::string_view to_string(Zone zone);
Zone zone_from_string(std::string_view text);

struct HourlyRecord {
    Date date;
    int hour = 0;
    double value = 0.0;

    friend bool operator==(const HourlyRecord&, const HourlyRecord&) = default;
};

/// Raw (date, hour, value) records; (date, hour) pairs are unique and values finite.
/// Records are kept sorted by (date, hour).
class HourlyTable {
public:
    HourlyTable() = default;
    explicit HourlyTable(std::vector<HourlyRecord> records);

    const std::vector<HourlyRecord>& records() const { return records_; }
    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }
    Date first_date() const;
    Date last_date() const;
    std::optional<double> find(Date date, int hour) const;

    friend bool operator==(const HourlyTable&, const HourlyTable&) = default;

private:
    std::vector<HourlyRecord> records_;
};

/// A gap-free daily series of one market hour. Also used for the matching
/// temperature series, in which case the zone is informational only.
class PriceSeries {
public:
    PriceSeries(Date first, std::vector<double> values, int hour, Zone zone = Zone::Zone1);

    Date first_date() const { return first_; }
    Date last_date() const { return first_ + std::chrono::days(static_cast<int>(values_.size()) - 1); }
    Date date_at(std::size_t i) const { return first_ + std::chrono::days(static_cast<int>(i)); }
    std::vector<Date> dates() const;
    const std::vector<double>& values() const { return values_; }
    std::size_t size() const { return values_.size(); }
    int hour() const { return hour_; }
    Zone zone() const { return zone_; }

    /// Sub-series of days [begin, begin + count).
    PriceSeries slice(std::size_t begin, std::size_t count) const;

private:
    Date first_;
    std::vector<double> values_;
    int hour_;
    Zone zone_;
};

using TemperatureSeries = PriceSeries;

/// Design columns of the exogenous model, in the order used everywhere.
enum class Regressor { LagPrice = 0, TempLag = 1, TempLagSq = 2, TempLagCu = 3, Weekday = 4 };
inline constexpr std::size_t kRegressorCount = 5;
inline constexpr std::array<std::string_view, kRegressorCount> kRegressorNames = {
    "lag_price", "temp_lag", "temp_lag_sq", "temp_lag_cu", "weekday"};

/// Per-day regressors aligned on dates: y_{t-1}, X_{t-1}, X_{t-1}^2, X_{t-1}^3, D_t.
class ExogenousFrame {
public:
    /// Joins prices and temperatures on their common dates. The first common
    /// day is dropped because its lagged values do not exist.
    static ExogenousFrame from_series(const PriceSeries& prices, const TemperatureSeries& temps);

    /// Builds a frame from explicit lagged columns. temp powers and weekdays are derived.
    static ExogenousFrame from_columns(Date first, std::vector<double> lag_price, std::vector<double> temp_lag);

    Date first_date() const { return first_; }
    Date last_date() const { return first_ + std::chrono::days(static_cast<int>(size()) - 1); }
    Date date_at(std::size_t i) const { return first_ + std::chrono::days(static_cast<int>(i)); }
    std::size_t size() const { return lag_price_.size(); }

    const std::vector<double>& lag_price() const { return lag_price_; }
    const std::vector<double>& temp_lag() const { return temp_lag_; }
    const std::vector<double>& temp_lag_sq() const { return temp_lag_sq_; }
    const std::vector<double>& temp_lag_cu() const { return temp_lag_cu_; }
    const std::vector<int>& weekday() const { return weekday_; }

    /// Raw design row in Regressor order.
    std::array<double, kRegressorCount> row(std::size_t i) const;
    ExogenousFrame slice(std::size_t begin, std::size_t count) const;

private:
    ExogenousFrame() = default;

    Date first_{};
    std::vector<double> lag_price_;
    std::vector<double> temp_lag_;
    std::vector<double> temp_lag_sq_;
    std::vector<double> temp_lag_cu_;
    std::vector<int> weekday_;
};

/// Sets the temperature columns of a design row consistently.
void set_temperature(std::array<double, kRegressorCount>& row, double temp);

struct Fold {
    // Day offsets from the plan origin, inclusive bounds.
    int train_start = 0;
    int train_end = 0;
    int test_start = 0;
    int test_end = 0;
};

struct FoldPlan {
    std::vector<Fold> folds;
    int total_days = 0;
    int train_days = 0;
    int test_days = 0;
};

/// Sliding windows advancing by test_days; fold count floor((total - train) / test).
FoldPlan build_folds(int total_days, int train_days, int test_days);

/// Daily series of the given market hour. Any day in the table's span that
/// lacks the hour is an error.
PriceSeries select_hour(const HourlyTable& raw, int hour, Zone zone = Zone::Zone1);

/// Mean value per hour of day over the whole table.
std::array<double, 24> hourly_profile(const HourlyTable& raw);

}  // namespace spotvol
