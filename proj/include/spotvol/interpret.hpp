#pragma once

#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "spotvol/sampler.hpp"
#include "spotvol/series.hpp"
#include "spotvol/stats.hpp"
#include "spotvol/sv_models.hpp"

namespace spotvol {

enum class PdFeature { Temperature, Weekday };

std::string_view to_string(PdFeature feature);
PdFeature pd_feature_from_string(std::string_view text);

struct PdCurve {
    PdFeature feature = PdFeature::Temperature;
    std::vector<double> grid;
    /// observations x grid: predicted mean with the feature set to each grid value.
    Eigen::MatrixXd ice;
    /// Column means of ice.
    std::vector<double> pd;
    /// Pearson r between the temperature and weekday columns of the data.
    Correlation feature_correlation;
    /// Set when |feature_correlation.r| > 0.3, which weakens the PD reading.
    bool correlation_warning = false;
};

/// Partial dependence and ICE curves of an SV X fit, using posterior-mean
/// coefficients. Temperature: grid_size evenly spaced points over the observed
/// range (all three temperature powers move together). Weekday: 0..6.
/// Throws FeatureNotInModel for a baseline fit.
PdCurve pd_ice(const PosteriorFit& fit, const ExogenousFrame& data, PdFeature feature, int grid_size = 25,
               int workers = 0);
inline PdCurve pd_ice(const PosteriorFit& fit, const SvxModel& model, PdFeature feature, int grid_size = 25) {
    return pd_ice(fit, model.frame(), feature, grid_size);
}

struct ResidualReport {
    /// actual - predicted.
    std::vector<double> residuals;
    /// Standard normal quantiles at plotting positions (i - 0.5) / n.
    std::vector<double> theoretical_quantiles;
    /// Residuals in ascending order, paired with theoretical_quantiles.
    std::vector<double> ordered_residuals;
    /// Probability-plot correlation.
    Correlation quantile_correlation;
    Correlation residual_vs_predicted;
    Correlation predicted_vs_actual;
};

ResidualReport residual_report(std::span<const double> actual, std::span<const double> predicted_mean);

/// Columns: grid,pd
void write_pd_csv(std::ostream& out, const PdCurve& curve);
/// Long format. Columns: observation,grid,prediction
void write_ice_csv(std::ostream& out, const PdCurve& curve);
/// Columns: index,predicted,residual,theoretical_quantile,ordered_residual
void write_residual_csv(std::ostream& out, const ResidualReport& report, std::span<const double> predicted_mean);

}  // namespace spotvol
