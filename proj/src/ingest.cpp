#include "spotvol/ingest.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "spotvol/error.hpp"
#include "spotvol/random.hpp"

namespace spotvol {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(',', start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

}  // namespace

HourlyTable read_hourly_csv(std::istream& in, const CsvSchema& schema) {
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw Error(ErrorKind::ParseError, "line 1: missing header");
    ++line_no;
    {
        std::string_view header = trim(line);
        if (header.size() >= 3 && static_cast<unsigned char>(header[0]) == 0xEF) header.remove_prefix(3);  // BOM
        auto cols = split_fields(header);
        if (cols.size() != 3 || trim(cols[0]) != schema.date_column || trim(cols[1]) != schema.hour_column ||
            trim(cols[2]) != schema.value_column) {
            throw Error(ErrorKind::ParseError, "line 1: expected header '" + schema.date_column + "," +
                                                   schema.hour_column + "," + schema.value_column + "'");
        }
    }
    std::vector<HourlyRecord> records;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view row = trim(line);
        if (row.empty()) continue;
        auto fields = split_fields(row);
        const std::string where = "line " + std::to_string(line_no);
        if (fields.size() != 3) throw Error(ErrorKind::ParseError, where + ": expected 3 fields");
        HourlyRecord rec;
        auto date = parse_date(trim(fields[0]));
        if (!date) throw Error(ErrorKind::ParseError, where + ": bad date '" + std::string(fields[0]) + "'");
        rec.date = *date;
        auto hour_text = trim(fields[1]);
        auto [hp, hec] = std::from_chars(hour_text.data(), hour_text.data() + hour_text.size(), rec.hour);
        if (hec != std::errc() || hp != hour_text.data() + hour_text.size()) {
            throw Error(ErrorKind::ParseError, where + ": bad hour '" + std::string(hour_text) + "'");
        }
        if (rec.hour < 0 || rec.hour > 23) throw Error(ErrorKind::ParseError, where + ": hour out of range");
        auto value_text = trim(fields[2]);
        auto [vp, vec] = std::from_chars(value_text.data(), value_text.data() + value_text.size(), rec.value);
        if (vec != std::errc() || vp != value_text.data() + value_text.size()) {
            throw Error(ErrorKind::ParseError, where + ": bad value '" + std::string(value_text) + "'");
        }
        if (!std::isfinite(rec.value)) throw Error(ErrorKind::NonFinite, where);
        records.push_back(rec);
    }
    return HourlyTable(std::move(records));
}

HourlyTable load_hourly_csv(const std::filesystem::path& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
    return read_hourly_csv(in, schema);
}

void write_hourly_csv(std::ostream& out, const HourlyTable& table, const CsvSchema& schema) {
    out << schema.date_column << ',' << schema.hour_column << ',' << schema.value_column << '\n';
    char buf[64];
    for (const auto& r : table.records()) {
        auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), r.value);
        out << format_date(r.date) << ',' << r.hour << ',' << std::string_view(buf, static_cast<std::size_t>(ptr - buf))
            << '\n';
    }
}

void export_csv(const std::filesystem::path& path, const HourlyTable& table, const CsvSchema& schema) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
    write_hourly_csv(out, table, schema);
}

void validate(const SynthSpec& spec) {
    if (!(std::abs(spec.phi) < 1.0)) throw Error(ErrorKind::InvalidSpec, "|phi| must be < 1");
    if (!(spec.sigma > 0.0)) throw Error(ErrorKind::InvalidSpec, "sigma must be > 0");
    if (spec.n_days < 2) throw Error(ErrorKind::InvalidSpec, "n_days must be >= 2");
    if (!std::isfinite(spec.mu) || !std::isfinite(spec.mean_price)) {
        throw Error(ErrorKind::InvalidSpec, "mu and mean_price must be finite");
    }
    if (!(std::abs(spec.temperature.noise_phi) < 1.0) || spec.temperature.noise_sd < 0.0) {
        throw Error(ErrorKind::InvalidSpec, "temperature noise must satisfy |phi| < 1 and sd >= 0");
    }
}

SynthResult synthesize(const SynthSpec& spec) {
    validate(spec);
    using std::numbers::pi;
    const auto n = static_cast<std::size_t>(spec.n_days);
    const auto& ts = spec.temperature;

    // Temperature path on the hourly grid; its own stream so that the price
    // draws do not depend on whether exogenous terms are enabled.
    std::vector<double> temp(n * 24);
    {
        auto rng = make_rng(spec.seed, {0x7e3d});
        const double stationary_sd = ts.noise_sd / std::sqrt(1.0 - ts.noise_phi * ts.noise_phi);
        double noise = stationary_sd * std_normal(rng);
        for (std::size_t d = 0; d < n; ++d) {
            const Date date = spec.start_date + std::chrono::days(static_cast<int>(d));
            const auto ymd = std::chrono::year_month_day{date};
            const double doy = static_cast<double>((date - Date{ymd.year() / 1 / 1}).count());
            // Coldest around mid-January.
            const double annual = -ts.annual_amplitude * std::cos(2.0 * pi * (doy - 15.0) / 365.25);
            for (int h = 0; h < 24; ++h) {
                const double diurnal = -ts.diurnal_amplitude * std::cos(2.0 * pi * (h - 3) / 24.0);
                if (d > 0 || h > 0) noise = ts.noise_phi * noise + ts.noise_sd * std_normal(rng);
                temp[d * 24 + static_cast<std::size_t>(h)] = ts.mean_c + annual + diurnal + noise;
            }
        }
    }

    SynthResult result;
    result.spec = spec;
    std::vector<HourlyRecord> prices;
    std::vector<HourlyRecord> temps;
    prices.reserve(n * 24);
    temps.reserve(n * 24);
    for (std::size_t d = 0; d < n; ++d) {
        const Date date = spec.start_date + std::chrono::days(static_cast<int>(d));
        for (int h = 0; h < 24; ++h) {
            temps.push_back({date, h, temp[d * 24 + static_cast<std::size_t>(h)]});
        }
    }

    std::vector<std::vector<double>> y(24, std::vector<double>(n));
    for (int hour = 0; hour < 24; ++hour) {
        auto rng = make_rng(spec.seed, {static_cast<std::uint64_t>(hour) + 1});
        auto& h = result.h[static_cast<std::size_t>(hour)];
        h.resize(n);
        const double level =
            spec.mean_price * (1.0 + spec.profile_amplitude * std::sin(2.0 * pi * hour / 24.0));
        for (std::size_t t = 0; t < n; ++t) {
            const double delta = std_normal(rng);
            const double eps = std_normal(rng);
            if (t == 0) {
                h[t] = spec.mu + spec.sigma / std::sqrt(1.0 - spec.phi * spec.phi) * delta;
            } else {
                h[t] = spec.mu + spec.phi * (h[t - 1] - spec.mu) + spec.sigma * delta;
            }
            double mean = level;
            if (spec.svx) {
                const auto& c = *spec.svx;
                // Day 0 has no history; it reuses its own values as the lag.
                const std::size_t lag = t == 0 ? 0 : t - 1;
                const double y_lag = t == 0 ? level : y[static_cast<std::size_t>(hour)][lag];
                const double x = temp[lag * 24 + static_cast<std::size_t>(hour)];
                const Date date = spec.start_date + std::chrono::days(static_cast<int>(t));
                mean += c.alpha * y_lag + c.beta1 * x + c.beta2 * x * x + c.beta3 * x * x * x +
                        c.gamma * weekday_index(date) + c.xi;
            }
            y[static_cast<std::size_t>(hour)][t] = mean + std::exp(h[t] / 2.0) * eps;
        }
    }
    for (std::size_t d = 0; d < n; ++d) {
        const Date date = spec.start_date + std::chrono::days(static_cast<int>(d));
        for (int hour = 0; hour < 24; ++hour) {
            prices.push_back({date, hour, y[static_cast<std::size_t>(hour)][d]});
        }
    }
    result.prices = HourlyTable(std::move(prices));
    result.temps = HourlyTable(std::move(temps));
    return result;
}

}  // namespace spotvol
