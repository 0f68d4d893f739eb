#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "spotvol/sampler.hpp"
#include "spotvol/series.hpp"
#include "spotvol/sv_models.hpp"

namespace spotvol {

/// FullPosterior: every predictive draw uses its own posterior draw.
/// PointEstimate: all draws use the posterior means (the Dirac-delta shortcut).
enum class PpdMode { FullPosterior, PointEstimate };
/// Out-of-sample volatility: Hold keeps h at its last learned value, Propagate
/// runs the AR(1) recursion forward with fresh shocks.
enum class VolMode { Hold, Propagate };

std::string_view to_string(PpdMode mode);
std::string_view to_string(VolMode mode);
PpdMode ppd_mode_from_string(std::string_view text);
VolMode vol_mode_from_string(std::string_view text);

struct ForecastSet {
    std::optional<Date> first_date;
    Eigen::MatrixXd draws;    // n_draws x horizon
    Eigen::MatrixXd h_draws;  // latent log volatility used for each draw
    std::vector<double> mean;
    std::vector<double> ci_low;
    std::vector<double> ci_high;
    std::vector<double> vol_mean;
    std::vector<double> vol_low;
    std::vector<double> vol_high;
    PpdMode mode = PpdMode::PointEstimate;
    VolMode vol_mode = VolMode::Propagate;

    std::size_t horizon() const { return mean.size(); }
    /// Recomputes means and 95% percentile bounds from draws and h_draws.
    void summarize();
};

struct PredictOptions {
    int n_draws = 1000;
    PpdMode mode = PpdMode::PointEstimate;
    VolMode vol_mode = VolMode::Propagate;
    std::uint64_t seed = 1;
};

/// In-sample posterior predictive draws y_t ~ N(m_t(theta), exp(h_t / 2)) over the training window.
ForecastSet ppd_insample(const PosteriorFit& fit, const SvModelBase& model, const PredictOptions& options);

/// Draws `horizon` days past the end of training. SV X fits need exog_future
/// with at least `horizon` rows (observed lagged regressors).
ForecastSet forecast(const PosteriorFit& fit, const ExogenousFrame* exog_future, int horizon,
                     const PredictOptions& options);

/// Observation mean function of a fit (standardizer attached for SV X fits).
MeanModel mean_model_of(const PosteriorFit& fit);

/// Posterior-mean standardized coefficients; zeros for a baseline fit.
Coefficients posterior_mean_coefficients(const PosteriorFit& fit);

struct VolatilityPath {
    std::vector<double> mean;
    std::vector<double> ci_low;
    std::vector<double> ci_high;
};

/// exp(h_t / 2) summarized over posterior draws with 2.5 / 97.5 percentiles.
VolatilityPath volatility_path(const PosteriorFit& fit);

/// Columns: date,mean,ci_low,ci_high,vol_mean,vol_low,vol_high[,actual]
void write_forecast_csv(std::ostream& out, const ForecastSet& set, const std::vector<double>* actual = nullptr);
void write_forecast_json(std::ostream& out, const ForecastSet& set, const std::vector<double>* actual = nullptr);

/// Percentile with linear interpolation between order statistics.
double percentile(std::vector<double> values, double prob);

}  // namespace spotvol
