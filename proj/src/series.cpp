#include "spotvol/series.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>

#include "spotvol/error.hpp"

namespace spotvol {

using std::chrono::days;

std::optional<Date> parse_date(std::string_view text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
    int y = 0;
    unsigned m = 0;
    unsigned d = 0;
    auto parse = [&](std::size_t pos, std::size_t len, auto& out) {
        auto first = text.data() + pos;
        auto [ptr, ec] = std::from_chars(first, first + len, out);
        return ec == std::errc() && ptr == first + len;
    };
    if (!parse(0, 4, y) || !parse(5, 2, m) || !parse(8, 2, d)) return std::nullopt;
    std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!ymd.ok()) return std::nullopt;
    return Date{ymd};
}

std::string format_date(Date date) {
    std::chrono::year_month_day ymd{date};
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

int weekday_index(Date date) {
    // iso_encoding: Monday = 1 ... Sunday = 7
    return static_cast<int>(std::chrono::weekday{date}.iso_encoding()) - 1;
}

std::string_view to_string(Zone zone) { return zone == Zone::Zone1 ? "Zone1" : "Zone2"; }

Zone zone_from_string(std::string_view text) {
    if (text == "Zone1" || text == "1") return Zone::Zone1;
    if (text == "Zone2" || text == "2") return Zone::Zone2;
    throw Error(ErrorKind::InvalidConfig, "unknown zone '" + std::string(text) + "'");
}

HourlyTable::HourlyTable(std::vector<HourlyRecord> records) : records_(std::move(records)) {
    std::sort(records_.begin(), records_.end(), [](const auto& a, const auto& b) {
        return a.date != b.date ? a.date < b.date : a.hour < b.hour;
    });
    for (std::size_t i = 0; i < records_.size(); ++i) {
        const auto& r = records_[i];
        if (r.hour < 0 || r.hour > 23) {
            throw Error(ErrorKind::HourOutOfRange,
                        format_date(r.date) + " hour " + std::to_string(r.hour));
        }
        if (!std::isfinite(r.value)) {
            throw Error(ErrorKind::NonFinite, format_date(r.date) + " hour " + std::to_string(r.hour));
        }
        if (i > 0 && records_[i - 1].date == r.date && records_[i - 1].hour == r.hour) {
            throw Error(ErrorKind::DuplicateRecord,
                        format_date(r.date) + "," + std::to_string(r.hour));
        }
    }
}

Date HourlyTable::first_date() const {
    if (records_.empty()) throw Error(ErrorKind::EmptyTable, "table has no records");
    return records_.front().date;
}

Date HourlyTable::last_date() const {
    if (records_.empty()) throw Error(ErrorKind::EmptyTable, "table has no records");
    return records_.back().date;
}

std::optional<double> HourlyTable::find(Date date, int hour) const {
    auto it = std::lower_bound(records_.begin(), records_.end(), std::pair{date, hour},
                               [](const HourlyRecord& r, const std::pair<Date, int>& key) {
                                   return r.date != key.first ? r.date < key.first : r.hour < key.second;
                               });
    if (it == records_.end() || it->date != date || it->hour != hour) return std::nullopt;
    return it->value;
}

PriceSeries::PriceSeries(Date first, std::vector<double> values, int hour, Zone zone)
    : first_(first), values_(std::move(values)), hour_(hour), zone_(zone) {
    if (hour_ < 0 || hour_ > 23) throw Error(ErrorKind::HourOutOfRange, std::to_string(hour_));
    if (values_.empty()) throw Error(ErrorKind::InvalidSeries, "series is empty");
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!std::isfinite(values_[i])) {
            throw Error(ErrorKind::NonFinite, "value at " + format_date(date_at(i)));
        }
    }
}

std::vector<Date> PriceSeries::dates() const {
    std::vector<Date> out(values_.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = date_at(i);
    return out;
}

PriceSeries PriceSeries::slice(std::size_t begin, std::size_t count) const {
    if (count == 0 || begin + count > values_.size()) {
        throw Error(ErrorKind::InsufficientData, "slice out of range");
    }
    return PriceSeries(date_at(begin),
                       std::vector<double>(values_.begin() + static_cast<std::ptrdiff_t>(begin),
                                           values_.begin() + static_cast<std::ptrdiff_t>(begin + count)),
                       hour_, zone_);
}

ExogenousFrame ExogenousFrame::from_series(const PriceSeries& prices, const TemperatureSeries& temps) {
    const Date start = std::max(prices.first_date(), temps.first_date());
    const Date end = std::min(prices.last_date(), temps.last_date());
    if (end <= start) {
        throw Error(ErrorKind::MisalignedFrames, "prices and temperatures share fewer than two days");
    }
    const auto n = static_cast<std::size_t>((end - start).count());
    const auto p0 = static_cast<std::size_t>((start - prices.first_date()).count());
    const auto t0 = static_cast<std::size_t>((start - temps.first_date()).count());
    std::vector<double> lag_price(n);
    std::vector<double> temp_lag(n);
    for (std::size_t i = 0; i < n; ++i) {
        lag_price[i] = prices.values()[p0 + i];
        temp_lag[i] = temps.values()[t0 + i];
    }
    return from_columns(start + days(1), std::move(lag_price), std::move(temp_lag));
}

ExogenousFrame ExogenousFrame::from_columns(Date first, std::vector<double> lag_price,
                                            std::vector<double> temp_lag) {
    if (lag_price.size() != temp_lag.size()) {
        throw Error(ErrorKind::MisalignedFrames, "column lengths differ");
    }
    if (lag_price.empty()) throw Error(ErrorKind::InsufficientData, "empty frame");
    ExogenousFrame f;
    f.first_ = first;
    f.lag_price_ = std::move(lag_price);
    f.temp_lag_ = std::move(temp_lag);
    const std::size_t n = f.lag_price_.size();
    f.temp_lag_sq_.resize(n);
    f.temp_lag_cu_.resize(n);
    f.weekday_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(f.lag_price_[i]) || !std::isfinite(f.temp_lag_[i])) {
            throw Error(ErrorKind::NonFinite, "regressor at " + format_date(f.date_at(i)));
        }
        const double x = f.temp_lag_[i];
        f.temp_lag_sq_[i] = x * x;
        f.temp_lag_cu_[i] = x * x * x;
        f.weekday_[i] = weekday_index(f.date_at(i));
    }
    return f;
}

std::array<double, kRegressorCount> ExogenousFrame::row(std::size_t i) const {
    return {lag_price_[i], temp_lag_[i], temp_lag_sq_[i], temp_lag_cu_[i], static_cast<double>(weekday_[i])};
}

ExogenousFrame ExogenousFrame::slice(std::size_t begin, std::size_t count) const {
    if (count == 0 || begin + count > size()) throw Error(ErrorKind::InsufficientData, "slice out of range");
    auto cut = [&](const std::vector<double>& v) {
        return std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(begin),
                                   v.begin() + static_cast<std::ptrdiff_t>(begin + count));
    };
    return from_columns(date_at(begin), cut(lag_price_), cut(temp_lag_));
}

void set_temperature(std::array<double, kRegressorCount>& row, double temp) {
    row[static_cast<std::size_t>(Regressor::TempLag)] = temp;
    row[static_cast<std::size_t>(Regressor::TempLagSq)] = temp * temp;
    row[static_cast<std::size_t>(Regressor::TempLagCu)] = temp * temp * temp;
}

FoldPlan build_folds(int total_days, int train_days, int test_days) {
    if (total_days <= 0 || train_days <= 0 || test_days <= 0) {
        throw Error(ErrorKind::InsufficientData, "fold sizes must be positive");
    }
    if (total_days < train_days + test_days) {
        throw Error(ErrorKind::InsufficientData,
                    std::to_string(total_days) + " days cannot hold " + std::to_string(train_days) +
                        " train + " + std::to_string(test_days) + " test days");
    }
    FoldPlan plan;
    plan.total_days = total_days;
    plan.train_days = train_days;
    plan.test_days = test_days;
    const int count = (total_days - train_days) / test_days;
    plan.folds.reserve(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
        Fold f;
        f.train_start = k * test_days;
        f.train_end = f.train_start + train_days - 1;
        f.test_start = f.train_end + 1;
        f.test_end = f.test_start + test_days - 1;
        plan.folds.push_back(f);
    }
    return plan;
}

PriceSeries select_hour(const HourlyTable& raw, int hour, Zone zone) {
    if (hour < 0 || hour > 23) throw Error(ErrorKind::HourOutOfRange, std::to_string(hour));
    if (raw.empty()) throw Error(ErrorKind::EmptyTable, "table has no records");
    const Date first = raw.first_date();
    const Date last = raw.last_date();
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>((last - first).count() + 1));
    for (Date d = first; d <= last; d += days(1)) {
        auto v = raw.find(d, hour);
        if (!v) throw Error(ErrorKind::MissingDay, format_date(d) + " lacks hour " + std::to_string(hour));
        values.push_back(*v);
    }
    return PriceSeries(first, std::move(values), hour, zone);
}

std::array<double, 24> hourly_profile(const HourlyTable& raw) {
    if (raw.empty()) throw Error(ErrorKind::EmptyTable, "table has no records");
    std::array<double, 24> sum{};
    std::array<std::size_t, 24> count{};
    for (const auto& r : raw.records()) {
        sum[static_cast<std::size_t>(r.hour)] += r.value;
        ++count[static_cast<std::size_t>(r.hour)];
    }
    std::array<double, 24> out{};
    for (std::size_t h = 0; h < 24; ++h) {
        out[h] = count[h] ? sum[h] / static_cast<double>(count[h]) : std::nan("");
    }
    return out;
}

}  // namespace spotvol
