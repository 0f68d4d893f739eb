#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "spotvol/error.hpp"
#include "spotvol/ingest.hpp"
#include "spotvol/series.hpp"

using namespace spotvol;
using std::chrono::days;

namespace {

Date day(int y, unsigned m, unsigned d) { return Date{std::chrono::year{y} / m / d}; }

HourlyTable table_from(Date first, int n_days, auto value) {
    std::vector<HourlyRecord> recs;
    for (int d = 0; d < n_days; ++d) {
        for (int h = 0; h < 24; ++h) recs.push_back({first + days(d), h, value(d, h)});
    }
    return HourlyTable(std::move(recs));
}

ErrorKind kind_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no error raised";
    return ErrorKind::InvalidConfig;
}

}  // namespace

TEST(Dates, ParseFormatRoundTrip) {
    const auto d = parse_date("2016-02-29");
    ASSERT_TRUE(d);
    EXPECT_EQ(format_date(*d), "2016-02-29");
    EXPECT_FALSE(parse_date("2015-02-29"));
    EXPECT_FALSE(parse_date("2015-1-02"));
    EXPECT_FALSE(parse_date("2015-01-0x"));
}

TEST(Dates, WeekdayIsZeroOnMonday) {
    EXPECT_EQ(weekday_index(day(2014, 6, 23)), 0);
    EXPECT_EQ(weekday_index(day(2014, 6, 29)), 6);
    EXPECT_EQ(weekday_index(day(2024, 1, 1)), 0);
}

TEST(SelectHour, ExtractsOneColumn) {
    const auto raw = table_from(day(2020, 1, 1), 3, [](int d, int h) { return 100.0 * d + h; });
    const PriceSeries s = select_hour(raw, 14);
    ASSERT_EQ(s.size(), 3u);
    EXPECT_EQ(s.values(), (std::vector<double>{14.0, 114.0, 214.0}));
    EXPECT_EQ(s.hour(), 14);
    EXPECT_EQ(s.first_date(), day(2020, 1, 1));
    EXPECT_EQ(s.last_date(), day(2020, 1, 3));
}

TEST(SelectHour, MissingHourIsAnError) {
    auto recs = table_from(day(2020, 1, 1), 3, [](int, int) { return 1.0; }).records();
    std::erase_if(recs, [](const HourlyRecord& r) { return r.date == day(2020, 1, 2) && r.hour == 14; });
    const HourlyTable raw(recs);
    EXPECT_EQ(kind_of([&] { select_hour(raw, 14); }), ErrorKind::MissingDay);
    EXPECT_NO_THROW(select_hour(raw, 13));
}

TEST(SelectHour, HourOutOfRange) {
    const auto raw = table_from(day(2020, 1, 1), 2, [](int, int) { return 1.0; });
    EXPECT_EQ(kind_of([&] { select_hour(raw, 24); }), ErrorKind::HourOutOfRange);
    EXPECT_EQ(kind_of([&] { select_hour(raw, -1); }), ErrorKind::HourOutOfRange);
}

TEST(SelectHour, ConstantTable) {
    const auto raw = table_from(day(2020, 1, 1), 5, [](int, int) { return 1000.0; });
    for (int h : {0, 7, 23}) {
        const auto series = select_hour(raw, h);
        for (double v : series.values()) EXPECT_EQ(v, 1000.0);
    }
}

TEST(SelectHour, RoundTripFromSeries) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(1000, 50);
    std::vector<double> values(40);
    for (auto& v : values) v = n(rng);
    const PriceSeries s(day(2019, 3, 1), values, 9, Zone::Zone2);
    std::vector<HourlyRecord> recs;
    for (std::size_t i = 0; i < s.size(); ++i) {
        for (int h = 0; h < 24; ++h) recs.push_back({s.date_at(i), h, h == 9 ? values[i] : -1.0});
    }
    const PriceSeries back = select_hour(HourlyTable(recs), 9, Zone::Zone2);
    EXPECT_EQ(back.values(), s.values());
    EXPECT_EQ(back.first_date(), s.first_date());
    EXPECT_EQ(back.zone(), Zone::Zone2);
}

TEST(HourlyProfile, MeanPerHour) {
    const auto raw = table_from(day(2020, 1, 1), 2, [](int d, int h) { return h == 0 ? (d == 0 ? 100.0 : 300.0) : 5.0; });
    const auto p = hourly_profile(raw);
    EXPECT_EQ(p[0], 200.0);
    EXPECT_EQ(p[5], 5.0);
}

TEST(HourlyProfile, ConstantTable) {
    const auto p = hourly_profile(table_from(day(2020, 1, 1), 4, [](int, int) { return 1000.0; }));
    for (double v : p) EXPECT_EQ(v, 1000.0);
}

TEST(HourlyProfile, RecoversSinusoidalGenerator) {
    SynthSpec spec;
    spec.mu = -80.0;  // noise scale exp(-40)
    spec.sigma = 1e-6;
    spec.phi = 0.0;
    spec.n_days = 60;
    spec.profile_amplitude = 0.3;
    const auto p = hourly_profile(synthesize(spec).prices);
    for (int h = 0; h < 24; ++h) {
        const double expected = spec.mean_price * (1.0 + 0.3 * std::sin(2.0 * std::numbers::pi * h / 24.0));
        EXPECT_NEAR(p[static_cast<std::size_t>(h)], expected, 1e-12 * spec.mean_price) << "hour " << h;
    }
}

TEST(HourlyProfile, EmptyTable) {
    EXPECT_EQ(kind_of([] { hourly_profile(HourlyTable{}); }), ErrorKind::EmptyTable);
}

TEST(HourlyTable, RejectsDuplicatesAndBadValues) {
    const Date d = day(2020, 1, 1);
    EXPECT_EQ(kind_of([&] { HourlyTable({{d, 1, 1.0}, {d, 1, 2.0}}); }), ErrorKind::DuplicateRecord);
    EXPECT_EQ(kind_of([&] { HourlyTable({{d, 24, 1.0}}); }), ErrorKind::HourOutOfRange);
    EXPECT_EQ(kind_of([&] { HourlyTable({{d, 1, std::nan("")}}); }), ErrorKind::NonFinite);
}

TEST(PriceSeriesTest, RejectsNonFinite) {
    EXPECT_EQ(kind_of([] { PriceSeries(day(2020, 1, 1), {1.0, INFINITY}, 3); }), ErrorKind::NonFinite);
    EXPECT_EQ(kind_of([] { PriceSeries(day(2020, 1, 1), {1.0}, 24); }), ErrorKind::HourOutOfRange);
}

TEST(ExogenousFrameTest, DropsFirstDayAndDerivesColumns) {
    const PriceSeries prices(day(2014, 6, 23), {10, 20, 30, 40}, 11);
    const PriceSeries temps(day(2014, 6, 22), {-1, 2, -3, 4, 5}, 11);
    const auto f = ExogenousFrame::from_series(prices, temps);
    ASSERT_EQ(f.size(), 3u);
    EXPECT_EQ(f.first_date(), day(2014, 6, 24));
    EXPECT_EQ(f.lag_price(), (std::vector<double>{10, 20, 30}));
    EXPECT_EQ(f.temp_lag(), (std::vector<double>{2, -3, 4}));
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double x = f.temp_lag()[i];
        EXPECT_EQ(f.temp_lag_sq()[i], x * x);
        EXPECT_EQ(f.temp_lag_cu()[i], x * x * x);
        EXPECT_EQ(f.weekday()[i], weekday_index(f.date_at(i)));
        // lag_price[t] is the price one day earlier
        EXPECT_EQ(f.lag_price()[i], prices.values()[i]);
    }
    EXPECT_EQ(f.weekday()[0], 1);
    const auto g = ExogenousFrame::from_series(prices, temps);
    EXPECT_EQ(g.row(2), f.row(2));
}

TEST(ExogenousFrameTest, SetTemperatureKeepsPowersConsistent) {
    std::array<double, kRegressorCount> row{};
    set_temperature(row, -2.5);
    EXPECT_EQ(row[1], -2.5);
    EXPECT_EQ(row[2], 6.25);
    EXPECT_EQ(row[3], -15.625);
}

TEST(Folds, DefaultPlanHas36Folds) {
    const FoldPlan plan = build_folds(3600, 360, 90);
    EXPECT_EQ(plan.folds.size(), 36u);
}

TEST(Folds, SingleWindow) { EXPECT_EQ(build_folds(450, 360, 90).folds.size(), 1u); }

TEST(Folds, WindowsMatchIndependentEnumeration) {
    const FoldPlan plan = build_folds(3600, 360, 90);
    std::vector<std::array<int, 4>> expected;
    for (int start = 0; start + 360 + 90 <= 3600; start += 90) {
        expected.push_back({start, start + 359, start + 360, start + 449});
    }
    ASSERT_EQ(plan.folds.size(), expected.size());
    for (std::size_t k = 0; k < expected.size(); ++k) {
        const Fold& f = plan.folds[k];
        EXPECT_EQ((std::array<int, 4>{f.train_start, f.train_end, f.test_start, f.test_end}), expected[k]);
        EXPECT_EQ(f.train_start, static_cast<int>(90 * k));
    }
}

TEST(Folds, InvariantsOverRandomTriples) {
    std::mt19937 rng(17);
    for (int trial = 0; trial < 500; ++trial) {
        const int train = std::uniform_int_distribution<int>(1, 400)(rng);
        const int test = std::uniform_int_distribution<int>(1, 120)(rng);
        const int total = train + test + std::uniform_int_distribution<int>(0, 2000)(rng);
        const FoldPlan plan = build_folds(total, train, test);
        ASSERT_EQ(plan.folds.size(), static_cast<std::size_t>((total - train) / test));
        for (std::size_t k = 0; k < plan.folds.size(); ++k) {
            const Fold& f = plan.folds[k];
            EXPECT_EQ(f.test_start, f.train_end + 1);
            EXPECT_EQ(f.train_end - f.train_start + 1, train);
            EXPECT_EQ(f.test_end - f.test_start + 1, test);
            EXPECT_LT(f.test_end, total);
            if (k > 0) EXPECT_EQ(f.train_start - plan.folds[k - 1].train_start, test);
        }
    }
}

TEST(Folds, InsufficientData) {
    EXPECT_EQ(kind_of([] { build_folds(400, 360, 90); }), ErrorKind::InsufficientData);
    EXPECT_EQ(kind_of([] { build_folds(400, 0, 90); }), ErrorKind::InsufficientData);
}
