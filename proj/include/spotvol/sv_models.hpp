#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spotvol/sampler.hpp"
#include "spotvol/series.hpp"

namespace spotvol {

enum class ModelFamily { Baseline, Svx };

std::string_view to_string(ModelFamily family);
ModelFamily family_from_string(std::string_view text);

/// Per-column centering and scaling of the exogenous design.
struct Standardizer {
    std::array<double, kRegressorCount> mean{};
    std::array<double, kRegressorCount> sd{1.0, 1.0, 1.0, 1.0, 1.0};

    static Standardizer identity() { return {}; }
    /// Sample mean and sd of each column. Throws ConstantColumn for a
    /// zero-variance column unless allow_constant, in which case its sd is set to 1.
    static Standardizer fit(const ExogenousFrame& frame, bool allow_constant = false);

    double apply(std::size_t column, double raw) const { return (raw - mean[column]) / sd[column]; }
};

/// Exogenous block coefficients: five design coefficients (Regressor order) then the intercept xi.
inline constexpr std::size_t kCoefCount = kRegressorCount + 1;
using Coefficients = std::array<double, kCoefCount>;
inline constexpr std::array<std::string_view, kCoefCount> kCoefParamNames = {
    "coef_lag_price", "coef_temp_lag", "coef_temp_lag_sq", "coef_temp_lag_cu", "coef_weekday", "xi"};

/// Observation mean of either family: ybar for the baseline, and
/// ybar + sum_j b_j * z_j + xi for SV X with z the standardized design row.
struct MeanModel {
    double ybar = 0.0;
    std::optional<Standardizer> standardizer;

    double mean(const Coefficients& coef_std, const std::array<double, kRegressorCount>& raw_row) const;
};

struct SvPriors {
    double mu_scale = 10.0;     // mu ~ Cauchy(0, mu_scale)
    double sigma_scale = 5.0;   // sigma ~ half-Cauchy(0, sigma_scale)
    /// Standardized coefficients and xi ~ N(0, coef_scale * sd(y_train)).
    double coef_scale = 10.0;
};

/// Shared by both models: priors, non-centered volatility path and the
/// Gaussian observation term. Unconstrained layout begins with
/// (mu, atanh(phi), log(sigma)) and ends with the T standardized innovations.
class SvModelBase : public LogDensityModel {
public:
    const std::vector<double>& y() const { return y_; }
    double ybar() const { return ybar_; }
    double y_sd() const { return y_sd_; }
    std::size_t n_obs() const { return y_.size(); }
    const SvPriors& priors() const { return priors_; }
    virtual ModelFamily family() const = 0;
    virtual MeanModel mean_model() const = 0;
    /// Raw design row for observation t (zeros for the baseline).
    virtual std::array<double, kRegressorCount> design_row(std::size_t t) const = 0;

    /// Reconstructs the latent path h from (mu, phi, sigma, innovations).
    static void latent_path(double mu, double phi, double sigma, std::span<const double> h_std, std::span<double> h);

protected:
    SvModelBase(std::vector<double> y, SvPriors priors);

    /// Log density of the volatility block given observation residuals y - m.
    /// Writes d/d(vol params) into grad_vol[0..2], d/d(innovations) into grad_hstd
    /// and d/d(m_t) into grad_mean when the spans are non-empty.
    double volatility_log_density(std::span<const double> vol, std::span<const double> h_std,
                                  std::span<const double> resid, std::span<double> grad_vol,
                                  std::span<double> grad_hstd, std::span<double> grad_mean) const;

    std::vector<double> y_;
    double ybar_ = 0.0;
    double y_sd_ = 0.0;
    SvPriors priors_;
};

/// y_t ~ N(ybar, exp(h_t / 2)).
class SvBaselineModel final : public SvModelBase {
public:
    explicit SvBaselineModel(std::vector<double> y, SvPriors priors = {});

    std::size_t dim() const override { return 3 + y_.size(); }
    double log_density(std::span<const double> theta, std::span<double> grad) const override;
    std::vector<std::string> param_names() const override;
    void constrain(std::span<const double> theta, std::span<double> out) const override;
    std::vector<double> initial_point(Rng& rng, double init_sd) const override;

    ModelFamily family() const override { return ModelFamily::Baseline; }
    MeanModel mean_model() const override { return {ybar_, std::nullopt}; }
    std::array<double, kRegressorCount> design_row(std::size_t) const override { return {}; }
};

struct SvxOptions {
    SvPriors priors;
    /// Coefficients held fixed (standardized scale), indexed like kCoefParamNames.
    std::array<std::optional<double>, kCoefCount> pinned{};
    /// Pin the coefficient of a constant design column to 0 instead of failing.
    bool pin_constant_columns = false;
};

/// y_t ~ N(ybar + alpha y_{t-1} + beta1 X_{t-1} + beta2 X_{t-1}^2 + beta3 X_{t-1}^3 + gamma D_t + xi, exp(h_t / 2)),
/// fitted on standardized design columns. Free coefficients are sampled as
/// b_j = b_ols_j + se_ols_j * w_j, an affine map centred on the least-squares fit.
class SvxModel final : public SvModelBase {
public:
    SvxModel(const PriceSeries& y, const ExogenousFrame& frame, SvxOptions options = {});
    SvxModel(std::vector<double> y, const ExogenousFrame& frame, SvxOptions options = {});

    std::size_t dim() const override { return 3 + free_.size() + y_.size(); }
    double log_density(std::span<const double> theta, std::span<double> grad) const override;
    std::vector<std::string> param_names() const override;
    void constrain(std::span<const double> theta, std::span<double> out) const override;
    std::vector<double> initial_point(Rng& rng, double init_sd) const override;

    ModelFamily family() const override { return ModelFamily::Svx; }
    MeanModel mean_model() const override { return {ybar_, standardizer_}; }
    std::array<double, kRegressorCount> design_row(std::size_t t) const override { return frame_.row(t); }

    const Standardizer& standardizer() const { return standardizer_; }
    const ExogenousFrame& frame() const { return frame_; }
    const std::array<std::optional<double>, kCoefCount>& pinned() const { return pinned_; }
    std::size_t free_coefficients() const { return free_.size(); }

private:
    void prepare();
    void coefficients(std::span<const double> theta, Coefficients& coef) const;

    ExogenousFrame frame_;
    Standardizer standardizer_;
    std::array<std::optional<double>, kCoefCount> pinned_;
    std::vector<std::size_t> free_;          // indices into Coefficients
    std::vector<double> center_;             // per free coefficient
    std::vector<double> scale_;              // per free coefficient
    std::vector<std::array<double, kCoefCount>> z_;  // standardized design, intercept column = 1
    double mu_center_ = 0.0;
};

/// Writes the data constants of a model into fit.train.
void record_training(PosteriorFit& fit, const SvModelBase& model, const PriceSeries* series = nullptr);

struct CoefficientSummary {
    std::string name;  // alpha, beta1, beta2, beta3, gamma, xi
    ParamSummary summary;
};

/// Converts standardized SV X coefficients back to raw units
/// (RUB/MWh per unit of raw regressor). Uses every draw when present.
std::vector<CoefficientSummary> raw_coefficients(const PosteriorFit& fit, const std::optional<Standardizer>& standardizer);

/// Raw-scale (alpha, beta1, beta2, beta3, gamma, xi) from standardized coefficients.
Coefficients to_raw(const Coefficients& coef_std, const Standardizer& standardizer);

/// Standardizer stored in a fit, if the fit is an SV X fit.
std::optional<Standardizer> standardizer_of(const PosteriorFit& fit);

}  // namespace spotvol
