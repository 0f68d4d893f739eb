#include "spotvol/predictive.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>

#include <json.hpp>

#include "spotvol/error.hpp"
#include "spotvol/random.hpp"

namespace spotvol {

std::string_view to_string(PpdMode mode) { return mode == PpdMode::FullPosterior ? "full" : "point"; }
std::string_view to_string(VolMode mode) { return mode == VolMode::Hold ? "hold" : "propagate"; }

PpdMode ppd_mode_from_string(std::string_view text) {
    if (text == "full" || text == "full_posterior") return PpdMode::FullPosterior;
    if (text == "point" || text == "point_estimate") return PpdMode::PointEstimate;
    throw Error(ErrorKind::InvalidConfig, "unknown predictive mode '" + std::string(text) + "'");
}

VolMode vol_mode_from_string(std::string_view text) {
    if (text == "hold") return VolMode::Hold;
    if (text == "propagate") return VolMode::Propagate;
    throw Error(ErrorKind::InvalidConfig, "unknown volatility mode '" + std::string(text) + "'");
}

double percentile(std::vector<double> values, double prob) {
    if (values.empty()) return std::nan("");
    std::sort(values.begin(), values.end());
    const double pos = prob * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

void ForecastSet::summarize() {
    const auto rows = static_cast<std::size_t>(draws.rows());
    const auto cols = static_cast<std::size_t>(draws.cols());
    mean.assign(cols, 0.0);
    ci_low.assign(cols, 0.0);
    ci_high.assign(cols, 0.0);
    vol_mean.assign(cols, 0.0);
    vol_low.assign(cols, 0.0);
    vol_high.assign(cols, 0.0);
    std::vector<double> column(rows);
    std::vector<double> vol(rows);
    for (std::size_t k = 0; k < cols; ++k) {
        double sum = 0.0;
        double vol_sum = 0.0;
        for (std::size_t r = 0; r < rows; ++r) {
            const auto ri = static_cast<Eigen::Index>(r);
            const auto ki = static_cast<Eigen::Index>(k);
            column[r] = draws(ri, ki);
            vol[r] = std::exp(h_draws(ri, ki) / 2.0);
            sum += column[r];
            vol_sum += vol[r];
        }
        mean[k] = sum / static_cast<double>(rows);
        vol_mean[k] = vol_sum / static_cast<double>(rows);
        ci_low[k] = percentile(column, 0.025);
        ci_high[k] = percentile(column, 0.975);
        vol_low[k] = percentile(vol, 0.025);
        vol_high[k] = percentile(vol, 0.975);
    }
}

namespace {

struct DrawParams {
    double mu = 0.0;
    double phi = 0.0;
    double sigma = 0.0;
    Coefficients coef{};
};

class ParamSource {
public:
    ParamSource(const PosteriorFit& fit, PpdMode mode, int n_draws) : fit_(fit), mode_(mode), n_draws_(n_draws) {
        if (n_draws < 1) throw Error(ErrorKind::InvalidConfig, "n_draws must be positive");
        if (mode == PpdMode::FullPosterior && !fit.has_draws()) {
            throw Error(ErrorKind::ModeUnsupported, "full-posterior prediction needs the posterior draws");
        }
        mu_ = fit.index_of("mu");
        phi_ = fit.index_of("phi");
        sigma_ = fit.index_of("sigma");
        svx_ = fit.train.family == "svx";
        if (svx_) {
            for (std::size_t j = 0; j < kCoefCount; ++j) coef_[j] = fit.index_of(std::string(kCoefParamNames[j]));
        }
    }

    // Posterior row used by predictive draw d (FullPosterior only).
    Eigen::Index row(int d) const {
        return static_cast<Eigen::Index>((static_cast<long long>(d) * fit_.draws.rows()) / n_draws_);
    }

    double value(int d, std::size_t col) const {
        if (mode_ == PpdMode::PointEstimate) return fit_.summary[col].mean;
        return fit_.draws(row(d), static_cast<Eigen::Index>(col));
    }

    DrawParams params(int d) const {
        DrawParams p;
        p.mu = value(d, mu_);
        p.phi = value(d, phi_);
        p.sigma = value(d, sigma_);
        if (svx_) {
            for (std::size_t j = 0; j < kCoefCount; ++j) p.coef[j] = value(d, coef_[j]);
        }
        return p;
    }

    bool svx() const { return svx_; }

private:
    const PosteriorFit& fit_;
    PpdMode mode_;
    int n_draws_;
    std::size_t mu_ = 0;
    std::size_t phi_ = 0;
    std::size_t sigma_ = 0;
    std::array<std::size_t, kCoefCount> coef_{};
    bool svx_ = false;
};

}  // namespace

MeanModel mean_model_of(const PosteriorFit& fit) {
    MeanModel m;
    m.ybar = fit.train.ybar;
    if (fit.train.family == "svx") {
        m.standardizer = standardizer_of(fit);
        if (!m.standardizer) throw Error(ErrorKind::MissingStandardizer, "SV X fit lacks standardization constants");
    }
    return m;
}

Coefficients posterior_mean_coefficients(const PosteriorFit& fit) {
    Coefficients coef{};
    if (fit.train.family != "svx") return coef;
    for (std::size_t j = 0; j < kCoefCount; ++j) coef[j] = fit.mean_of(std::string(kCoefParamNames[j]));
    return coef;
}

ForecastSet ppd_insample(const PosteriorFit& fit, const SvModelBase& model, const PredictOptions& options) {
    if (options.n_draws < 100) throw Error(ErrorKind::InvalidConfig, "in-sample predictive needs at least 100 draws");
    const ParamSource source(fit, options.mode, options.n_draws);
    if ((model.family() == ModelFamily::Svx) != source.svx()) {
        throw Error(ErrorKind::IncompatibleFit, "fit family does not match the model");
    }
    const std::size_t n = model.n_obs();
    std::vector<std::size_t> h_cols(n);
    for (std::size_t t = 0; t < n; ++t) h_cols[t] = fit.index_of("h[" + std::to_string(t + 1) + "]");
    const MeanModel mean_model = mean_model_of(fit);

    ForecastSet set;
    set.mode = options.mode;
    set.vol_mode = options.vol_mode;
    if (!fit.train.first_date.empty()) set.first_date = parse_date(fit.train.first_date);
    set.draws.resize(options.n_draws, static_cast<Eigen::Index>(n));
    set.h_draws.resize(options.n_draws, static_cast<Eigen::Index>(n));
    for (int d = 0; d < options.n_draws; ++d) {
        auto rng = make_rng(options.seed, {static_cast<std::uint64_t>(d)});
        const DrawParams p = source.params(d);
        for (std::size_t t = 0; t < n; ++t) {
            const double h = source.value(d, h_cols[t]);
            const double m = mean_model.mean(p.coef, model.design_row(t));
            const auto ti = static_cast<Eigen::Index>(t);
            set.h_draws(d, ti) = h;
            set.draws(d, ti) = m + std::exp(h / 2.0) * std_normal(rng);
        }
    }
    set.summarize();
    return set;
}

ForecastSet forecast(const PosteriorFit& fit, const ExogenousFrame* exog_future, int horizon,
                     const PredictOptions& options) {
    if (horizon <= 0) throw Error(ErrorKind::HorizonZero, "forecast horizon must be positive");
    const ParamSource source(fit, options.mode, options.n_draws);
    const MeanModel mean_model = mean_model_of(fit);
    if (source.svx()) {
        if (!exog_future) throw Error(ErrorKind::MissingExogenous, "SV X forecasts need future regressors");
        if (exog_future->size() < static_cast<std::size_t>(horizon)) {
            throw Error(ErrorKind::MissingExogenous, "future regressors cover " + std::to_string(exog_future->size()) +
                                                         " of " + std::to_string(horizon) + " days");
        }
    }
    const std::size_t h_last = fit.index_of("h[" + std::to_string(fit.train.n_obs) + "]");

    ForecastSet set;
    set.mode = options.mode;
    set.vol_mode = options.vol_mode;
    if (source.svx()) {
        set.first_date = exog_future->first_date();
    } else if (!fit.train.last_date.empty()) {
        if (auto last = parse_date(fit.train.last_date)) set.first_date = *last + std::chrono::days(1);
    }
    set.draws.resize(options.n_draws, horizon);
    set.h_draws.resize(options.n_draws, horizon);
    for (int d = 0; d < options.n_draws; ++d) {
        auto rng = make_rng(options.seed, {static_cast<std::uint64_t>(d)});
        const DrawParams p = source.params(d);
        double h = source.value(d, h_last);
        for (int k = 0; k < horizon; ++k) {
            if (options.vol_mode == VolMode::Propagate) {
                h = p.mu + p.phi * (h - p.mu) + p.sigma * std_normal(rng);
            }
            const auto row = source.svx() ? exog_future->row(static_cast<std::size_t>(k))
                                          : std::array<double, kRegressorCount>{};
            const double m = mean_model.mean(p.coef, row);
            set.h_draws(d, k) = h;
            set.draws(d, k) = m + std::exp(h / 2.0) * std_normal(rng);
        }
    }
    set.summarize();
    return set;
}

VolatilityPath volatility_path(const PosteriorFit& fit) {
    if (!fit.has_draws()) throw Error(ErrorKind::InvalidFit, "volatility path needs posterior draws");
    VolatilityPath path;
    const auto rows = static_cast<std::size_t>(fit.draws.rows());
    std::vector<double> vol(rows);
    for (std::size_t t = 1;; ++t) {
        const std::string name = "h[" + std::to_string(t) + "]";
        if (std::find(fit.param_names.begin(), fit.param_names.end(), name) == fit.param_names.end()) break;
        const auto col = static_cast<Eigen::Index>(fit.index_of(name));
        double sum = 0.0;
        for (std::size_t r = 0; r < rows; ++r) {
            vol[r] = std::exp(fit.draws(static_cast<Eigen::Index>(r), col) / 2.0);
            sum += vol[r];
        }
        path.mean.push_back(sum / static_cast<double>(rows));
        path.ci_low.push_back(percentile(vol, 0.025));
        path.ci_high.push_back(percentile(vol, 0.975));
    }
    if (path.mean.empty()) throw Error(ErrorKind::InvalidFit, "fit contains no latent volatility draws");
    return path;
}

namespace {

std::string number(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

std::string date_label(const ForecastSet& set, std::size_t k) {
    if (!set.first_date) return std::to_string(k + 1);
    return format_date(*set.first_date + std::chrono::days(static_cast<int>(k)));
}

}  // namespace

void write_forecast_csv(std::ostream& out, const ForecastSet& set, const std::vector<double>* actual) {
    out << "date,mean,ci_low,ci_high,vol_mean,vol_low,vol_high";
    if (actual) out << ",actual";
    out << '\n';
    for (std::size_t k = 0; k < set.horizon(); ++k) {
        out << date_label(set, k) << ',' << number(set.mean[k]) << ',' << number(set.ci_low[k]) << ','
            << number(set.ci_high[k]) << ',' << number(set.vol_mean[k]) << ',' << number(set.vol_low[k]) << ','
            << number(set.vol_high[k]);
        if (actual) out << ',' << (k < actual->size() ? number((*actual)[k]) : std::string());
        out << '\n';
    }
}

void write_forecast_json(std::ostream& out, const ForecastSet& set, const std::vector<double>* actual) {
    nlohmann::json j;
    j["mode"] = to_string(set.mode);
    j["vol_mode"] = to_string(set.vol_mode);
    j["n_draws"] = set.draws.rows();
    std::vector<std::string> dates;
    for (std::size_t k = 0; k < set.horizon(); ++k) dates.push_back(date_label(set, k));
    j["date"] = dates;
    j["mean"] = set.mean;
    j["ci_low"] = set.ci_low;
    j["ci_high"] = set.ci_high;
    j["vol_mean"] = set.vol_mean;
    j["vol_low"] = set.vol_low;
    j["vol_high"] = set.vol_high;
    if (actual) j["actual"] = *actual;
    out << j.dump(2) << '\n';
}

}  // namespace spotvol
