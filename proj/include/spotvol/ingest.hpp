#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "spotvol/series.hpp"

namespace spotvol {

/// Canonical CSV layout: header `date,<hour_column>,<value_column>`.
struct CsvSchema {
    std::string date_column = "date";
    std::string hour_column = "hour";
    std::string value_column;

    static CsvSchema prices() { return {"date", "hour", "price"}; }
    static CsvSchema weather() { return {"date", "hour", "temp_c"}; }
};

HourlyTable read_hourly_csv(std::istream& in, const CsvSchema& schema);
HourlyTable load_hourly_csv(const std::filesystem::path& path, const CsvSchema& schema);

inline HourlyTable load_prices(const std::filesystem::path& path, const CsvSchema& schema = CsvSchema::prices()) {
    return load_hourly_csv(path, schema);
}

inline HourlyTable load_weather(const std::filesystem::path& path, const CsvSchema& schema = CsvSchema::weather()) {
    return load_hourly_csv(path, schema);
}

/// Writes values with 17 significant digits so a reload is bit-identical.
void write_hourly_csv(std::ostream& out, const HourlyTable& table, const CsvSchema& schema);
void export_csv(const std::filesystem::path& path, const HourlyTable& table, const CsvSchema& schema);

struct SvxCoefficients {
    double alpha = 0.0;
    double beta1 = 0.0;
    double beta2 = 0.0;
    double beta3 = 0.0;
    double gamma = 0.0;
    double xi = 0.0;
};

/// Temperature generator: annual sinusoid + diurnal sinusoid + AR(1) noise on the hourly grid.
struct TemperatureSpec {
    double mean_c = 5.0;
    double annual_amplitude = 15.0;
    double diurnal_amplitude = 4.0;
    double noise_phi = 0.95;
    double noise_sd = 1.0;
};

struct SynthSpec {
    double mu = -1.0;
    double phi = 0.95;
    double sigma = 0.25;
    int n_days = 1000;
    double mean_price = 1000.0;
    std::uint64_t seed = 1;
    Date start_date = Date{std::chrono::year{2014} / 6 / 23};
    /// Relative amplitude of a sinusoidal daily price profile (0 = flat).
    double profile_amplitude = 0.0;
    std::optional<SvxCoefficients> svx;
    TemperatureSpec temperature;
};

void validate(const SynthSpec& spec);

struct SynthResult {
    HourlyTable prices;
    HourlyTable temps;
    /// True latent log volatility, h[hour][day].
    std::array<std::vector<double>, 24> h;
    SynthSpec spec;
};

/// Forward-simulates every hour of the day independently:
/// h_1 ~ N(mu, sigma / sqrt(1 - phi^2)), h_t = mu + phi (h_{t-1} - mu) + sigma delta_t,
/// y_t = m_t + exp(h_t / 2) eps_t with m_t = mean_price plus the exogenous
/// terms when svx coefficients are present.
SynthResult synthesize(const SynthSpec& spec);

}  // namespace spotvol
