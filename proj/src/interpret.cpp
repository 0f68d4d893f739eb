#include "spotvol/interpret.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>

#include <boost/math/distributions/normal.hpp>

#include "spotvol/error.hpp"
#include "spotvol/predictive.hpp"
#include "parallel.hpp"

namespace spotvol {

namespace {

std::string number(double v) {
    if (!std::isfinite(v)) return "nan";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

std::vector<double> feature_grid(const ExogenousFrame& data, PdFeature feature, int grid_size) {
    if (feature == PdFeature::Weekday) return {0, 1, 2, 3, 4, 5, 6};
    if (grid_size < 2) throw Error(ErrorKind::InvalidConfig, "PD grid needs at least 2 points");
    const auto [lo, hi] = std::minmax_element(data.temp_lag().begin(), data.temp_lag().end());
    std::vector<double> grid(static_cast<std::size_t>(grid_size));
    const double step = (*hi - *lo) / (grid_size - 1);
    for (std::size_t g = 0; g < grid.size(); ++g) grid[g] = *lo + step * static_cast<double>(g);
    grid.back() = *hi;
    return grid;
}

}  // namespace

std::string_view to_string(PdFeature feature) {
    return feature == PdFeature::Temperature ? "temperature" : "weekday";
}

PdFeature pd_feature_from_string(std::string_view text) {
    if (text == "temperature") return PdFeature::Temperature;
    if (text == "weekday") return PdFeature::Weekday;
    throw Error(ErrorKind::InvalidConfig, "unknown PD feature '" + std::string(text) + "'");
}

PdCurve pd_ice(const PosteriorFit& fit, const ExogenousFrame& data, PdFeature feature, int grid_size, int workers) {
    if (fit.train.family != "svx") {
        throw Error(ErrorKind::FeatureNotInModel, std::string(to_string(feature)) + " is not a regressor of a baseline fit");
    }
    const MeanModel mean_model = mean_model_of(fit);
    const Coefficients coef = posterior_mean_coefficients(fit);

    PdCurve curve;
    curve.feature = feature;
    curve.grid = feature_grid(data, feature, grid_size);
    const std::size_t n = data.size();
    const std::size_t g_count = curve.grid.size();
    curve.ice.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(g_count));
    detail::parallel_for(g_count, workers, [&](std::size_t g) {
        for (std::size_t i = 0; i < n; ++i) {
            auto row = data.row(i);
            if (feature == PdFeature::Temperature) {
                set_temperature(row, curve.grid[g]);
            } else {
                row[static_cast<std::size_t>(Regressor::Weekday)] = curve.grid[g];
            }
            curve.ice(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(g)) = mean_model.mean(coef, row);
        }
    });
    curve.pd.resize(g_count);
    for (std::size_t g = 0; g < g_count; ++g) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += curve.ice(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(g));
        curve.pd[g] = s / static_cast<double>(n);
    }

    std::vector<double> weekday(data.weekday().begin(), data.weekday().end());
    curve.feature_correlation = pearson(data.temp_lag(), weekday);
    curve.correlation_warning = std::abs(curve.feature_correlation.r) > 0.3;
    return curve;
}

ResidualReport residual_report(std::span<const double> actual, std::span<const double> predicted_mean) {
    if (actual.size() != predicted_mean.size()) {
        throw Error(ErrorKind::LengthMismatch, "actual and predicted differ in length");
    }
    if (actual.empty()) throw Error(ErrorKind::LengthMismatch, "residual report needs data");
    const std::size_t n = actual.size();
    ResidualReport r;
    r.residuals.resize(n);
    for (std::size_t i = 0; i < n; ++i) r.residuals[i] = actual[i] - predicted_mean[i];
    r.ordered_residuals = r.residuals;
    std::sort(r.ordered_residuals.begin(), r.ordered_residuals.end());
    const boost::math::normal_distribution<double> normal;
    r.theoretical_quantiles.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double p = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
        r.theoretical_quantiles[i] = boost::math::quantile(normal, p);
    }
    r.quantile_correlation = pearson(r.theoretical_quantiles, r.ordered_residuals);
    r.residual_vs_predicted = pearson(r.residuals, predicted_mean);
    r.predicted_vs_actual = pearson(predicted_mean, actual);
    return r;
}

void write_pd_csv(std::ostream& out, const PdCurve& curve) {
    out << "grid,pd\n";
    for (std::size_t g = 0; g < curve.grid.size(); ++g) out << number(curve.grid[g]) << ',' << number(curve.pd[g]) << '\n';
}

void write_ice_csv(std::ostream& out, const PdCurve& curve) {
    out << "observation,grid,prediction\n";
    for (Eigen::Index i = 0; i < curve.ice.rows(); ++i) {
        for (Eigen::Index g = 0; g < curve.ice.cols(); ++g) {
            out << i << ',' << number(curve.grid[static_cast<std::size_t>(g)]) << ',' << number(curve.ice(i, g)) << '\n';
        }
    }
}

void write_residual_csv(std::ostream& out, const ResidualReport& report, std::span<const double> predicted_mean) {
    out << "index,predicted,residual,theoretical_quantile,ordered_residual\n";
    for (std::size_t i = 0; i < report.residuals.size(); ++i) {
        out << i << ',' << number(predicted_mean[i]) << ',' << number(report.residuals[i]) << ','
            << number(report.theoretical_quantiles[i]) << ',' << number(report.ordered_residuals[i]) << '\n';
    }
}

}  // namespace spotvol
