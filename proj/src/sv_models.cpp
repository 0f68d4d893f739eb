#include "spotvol/sv_models.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/QR>

#include "spotvol/error.hpp"

namespace spotvol {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;

double log_cauchy(double x, double scale) {
    const double z = x / scale;
    return -std::log(std::numbers::pi * scale) - std::log1p(z * z);
}

double log_normal(double x, double sd) { return -kHalfLog2Pi - std::log(sd) - 0.5 * (x / sd) * (x / sd); }

// 1 - tanh(u)^2 without cancellation.
double sech2(double u) {
    const double c = std::cosh(u);
    return 1.0 / (c * c);
}

double sample_mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sample_sd(const std::vector<double>& v, double mean) {
    double s = 0.0;
    for (double x : v) s += (x - mean) * (x - mean);
    return v.size() > 1 ? std::sqrt(s / static_cast<double>(v.size() - 1)) : 0.0;
}

}  // namespace

std::string_view to_string(ModelFamily family) { return family == ModelFamily::Baseline ? "baseline" : "svx"; }

ModelFamily family_from_string(std::string_view text) {
    if (text == "baseline" || text == "sv") return ModelFamily::Baseline;
    if (text == "svx" || text == "sv_x") return ModelFamily::Svx;
    throw Error(ErrorKind::InvalidConfig, "unknown model family '" + std::string(text) + "'");
}

Standardizer Standardizer::fit(const ExogenousFrame& frame, bool allow_constant) {
    Standardizer s;
    const std::size_t n = frame.size();
    for (std::size_t j = 0; j < kRegressorCount; ++j) {
        std::vector<double> col(n);
        for (std::size_t t = 0; t < n; ++t) col[t] = frame.row(t)[j];
        s.mean[j] = sample_mean(col);
        s.sd[j] = sample_sd(col, s.mean[j]);
        if (!(s.sd[j] > 1e-12 * (1.0 + std::abs(s.mean[j])))) {
            if (!allow_constant) {
                throw Error(ErrorKind::ConstantColumn, std::string(kRegressorNames[j]) + " has zero variance");
            }
            s.sd[j] = 1.0;
        }
    }
    return s;
}

double MeanModel::mean(const Coefficients& coef_std, const std::array<double, kRegressorCount>& raw_row) const {
    if (!standardizer) return ybar;
    double m = ybar;
    for (std::size_t j = 0; j < kRegressorCount; ++j) m += coef_std[j] * standardizer->apply(j, raw_row[j]);
    return m + coef_std[kRegressorCount];
}

SvModelBase::SvModelBase(std::vector<double> y, SvPriors priors) : y_(std::move(y)), priors_(priors) {
    if (y_.size() < 10) throw Error(ErrorKind::InsufficientData, "SV models need at least 10 observations");
    for (double v : y_) {
        if (!std::isfinite(v)) throw Error(ErrorKind::NonFinite, "non-finite observation");
    }
    ybar_ = sample_mean(y_);
    y_sd_ = sample_sd(y_, ybar_);
}

void SvModelBase::latent_path(double mu, double phi, double sigma, std::span<const double> h_std, std::span<double> h) {
    const std::size_t n = h_std.size();
    if (n == 0) return;
    h[0] = mu + sigma / std::sqrt(1.0 - phi * phi) * h_std[0];
    for (std::size_t t = 1; t < n; ++t) h[t] = mu + phi * (h[t - 1] - mu) + sigma * h_std[t];
}

double SvModelBase::volatility_log_density(std::span<const double> vol, std::span<const double> h_std,
                                           std::span<const double> resid, std::span<double> grad_vol,
                                           std::span<double> grad_hstd, std::span<double> grad_mean) const {
    const std::size_t n = h_std.size();
    const double mu = vol[0];
    const double phi = std::tanh(vol[1]);
    const double one_m_phi2 = sech2(vol[1]);
    const double sigma = std::exp(vol[2]);
    const double root = std::sqrt(one_m_phi2);
    if (!(one_m_phi2 > 0.0) || !(sigma > 0.0) || !std::isfinite(sigma)) {
        return -std::numeric_limits<double>::infinity();
    }

    double lp = log_cauchy(mu, priors_.mu_scale);
    lp += std::log(2.0) + log_cauchy(sigma, priors_.sigma_scale);  // half-Cauchy
    lp += -std::log(2.0);                                          // phi ~ Uniform(-1, 1)
    lp += std::log(one_m_phi2) + vol[2];                           // Jacobians of tanh and exp

    thread_local std::vector<double> h;
    thread_local std::vector<double> adj;
    h.resize(n);
    latent_path(mu, phi, sigma, h_std, h);

    const bool want_grad = !grad_vol.empty();
    if (want_grad) adj.resize(n);
    for (std::size_t t = 0; t < n; ++t) {
        const double inv_var = std::exp(-h[t]);
        const double r = resid[t];
        lp += -kHalfLog2Pi - 0.5 * h_std[t] * h_std[t];
        lp += -kHalfLog2Pi - 0.5 * h[t] - 0.5 * r * r * inv_var;
        if (want_grad) {
            adj[t] = -0.5 + 0.5 * r * r * inv_var;
            grad_mean[t] = r * inv_var;
        }
    }
    if (!want_grad) return lp;

    // Backward pass: adj[t] becomes the total derivative with respect to h_t.
    for (std::size_t t = n - 1; t-- > 0;) adj[t] += phi * adj[t + 1];

    double d_mu = adj[0];
    double d_phi = adj[0] * sigma * h_std[0] * phi / (one_m_phi2 * root);
    double d_sigma = adj[0] * h_std[0] / root;
    grad_hstd[0] = -h_std[0] + adj[0] * sigma / root;
    for (std::size_t t = 1; t < n; ++t) {
        d_mu += adj[t] * (1.0 - phi);
        d_phi += adj[t] * (h[t - 1] - mu);
        d_sigma += adj[t] * h_std[t];
        grad_hstd[t] = -h_std[t] + adj[t] * sigma;
    }
    const double mu_s = priors_.mu_scale;
    const double sig_s = priors_.sigma_scale;
    grad_vol[0] = d_mu - 2.0 * mu / (mu_s * mu_s + mu * mu);
    grad_vol[1] = d_phi * one_m_phi2 - 2.0 * phi;
    grad_vol[2] = (d_sigma - 2.0 * sigma / (sig_s * sig_s + sigma * sigma)) * sigma + 1.0;
    return lp;
}

// ---------------------------------------------------------------------------

SvBaselineModel::SvBaselineModel(std::vector<double> y, SvPriors priors) : SvModelBase(std::move(y), priors) {}

double SvBaselineModel::log_density(std::span<const double> theta, std::span<double> grad) const {
    const std::size_t n = y_.size();
    thread_local std::vector<double> resid;
    thread_local std::vector<double> grad_mean;
    resid.resize(n);
    grad_mean.resize(n);
    for (std::size_t t = 0; t < n; ++t) resid[t] = y_[t] - ybar_;
    if (grad.empty()) {
        return volatility_log_density(theta.first(3), theta.subspan(3), resid, {}, {}, {});
    }
    return volatility_log_density(theta.first(3), theta.subspan(3), resid, grad.first(3), grad.subspan(3), grad_mean);
}

std::vector<std::string> SvBaselineModel::param_names() const {
    std::vector<std::string> names = {"mu", "phi", "sigma"};
    for (std::size_t t = 0; t < y_.size(); ++t) names.push_back("h[" + std::to_string(t + 1) + "]");
    return names;
}

void SvBaselineModel::constrain(std::span<const double> theta, std::span<double> out) const {
    out[0] = theta[0];
    out[1] = std::tanh(theta[1]);
    out[2] = std::exp(theta[2]);
    latent_path(out[0], out[1], out[2], theta.subspan(3), out.subspan(3));
}

std::vector<double> SvBaselineModel::initial_point(Rng& rng, double init_sd) const {
    std::vector<double> theta(dim(), 0.0);
    double var = 0.0;
    for (double v : y_) var += (v - ybar_) * (v - ybar_);
    var /= static_cast<double>(y_.size());
    // mu starts at the log of the residual variance; innovations start at 0.
    theta[0] = std::log(std::max(var, 1e-300)) + init_sd * std_normal(rng);
    theta[1] = init_sd * std_normal(rng);
    theta[2] = init_sd * std_normal(rng);
    return theta;
}

// ---------------------------------------------------------------------------

SvxModel::SvxModel(const PriceSeries& y, const ExogenousFrame& frame, SvxOptions options)
    : SvModelBase(y.values(), options.priors), frame_(frame), pinned_(options.pinned) {
    if (y.first_date() != frame.first_date() || y.size() != frame.size()) {
        throw Error(ErrorKind::MisalignedFrames, "price series " + format_date(y.first_date()) + ".." +
                                                     format_date(y.last_date()) + " vs frame " +
                                                     format_date(frame.first_date()) + ".." +
                                                     format_date(frame.last_date()));
    }
    standardizer_ = Standardizer::fit(frame_, options.pin_constant_columns);
    prepare();
}

SvxModel::SvxModel(std::vector<double> y, const ExogenousFrame& frame, SvxOptions options)
    : SvModelBase(std::move(y), options.priors), frame_(frame), pinned_(options.pinned) {
    if (y_.size() != frame.size()) throw Error(ErrorKind::MisalignedFrames, "series and frame lengths differ");
    standardizer_ = Standardizer::fit(frame_, options.pin_constant_columns);
    prepare();
}

void SvxModel::prepare() {
    const std::size_t n = y_.size();
    // Constant columns (allowed only when pinning them) keep sd == 1 after fit();
    // detect them directly.
    for (std::size_t j = 0; j < kRegressorCount; ++j) {
        double lo = frame_.row(0)[j];
        double hi = lo;
        for (std::size_t t = 1; t < n; ++t) {
            lo = std::min(lo, frame_.row(t)[j]);
            hi = std::max(hi, frame_.row(t)[j]);
        }
        if (hi == lo && !pinned_[j]) pinned_[j] = 0.0;
    }
    z_.resize(n);
    for (std::size_t t = 0; t < n; ++t) {
        const auto raw = frame_.row(t);
        for (std::size_t j = 0; j < kRegressorCount; ++j) z_[t][j] = standardizer_.apply(j, raw[j]);
        z_[t][kRegressorCount] = 1.0;
    }
    free_.clear();
    for (std::size_t j = 0; j < kCoefCount; ++j) {
        if (!pinned_[j]) free_.push_back(j);
    }

    // Least-squares fit of the free coefficients centres and scales the sampler coordinates.
    Eigen::VectorXd target(static_cast<Eigen::Index>(n));
    for (std::size_t t = 0; t < n; ++t) {
        double m = ybar_;
        for (std::size_t j = 0; j < kCoefCount; ++j) {
            if (pinned_[j]) m += *pinned_[j] * z_[t][j];
        }
        target(static_cast<Eigen::Index>(t)) = y_[t] - m;
    }
    center_.assign(free_.size(), 0.0);
    scale_.assign(free_.size(), 1.0);
    double resid_var = target.squaredNorm() / static_cast<double>(n);
    if (!free_.empty()) {
        Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(free_.size()));
        for (std::size_t t = 0; t < n; ++t) {
            for (std::size_t k = 0; k < free_.size(); ++k) {
                x(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(k)) = z_[t][free_[k]];
            }
        }
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
        if (qr.rank() < static_cast<Eigen::Index>(free_.size())) {
            throw Error(ErrorKind::ConstantColumn, "exogenous design is rank deficient");
        }
        const Eigen::VectorXd beta = qr.solve(target);
        const Eigen::VectorXd res = target - x * beta;
        const double dof = std::max<double>(1.0, static_cast<double>(n) - static_cast<double>(free_.size()));
        resid_var = res.squaredNorm() / static_cast<double>(n);
        const double s2 = res.squaredNorm() / dof;
        const Eigen::MatrixXd xtx_inv = (x.transpose() * x).inverse();
        for (std::size_t k = 0; k < free_.size(); ++k) {
            const auto kk = static_cast<Eigen::Index>(k);
            center_[k] = beta(kk);
            const double se = std::sqrt(std::max(0.0, s2 * xtx_inv(kk, kk)));
            scale_[k] = std::max(se, 1e-12 * (1.0 + std::abs(beta(kk))));
        }
    }
    mu_center_ = std::log(std::max(resid_var, 1e-300));
}

void SvxModel::coefficients(std::span<const double> theta, Coefficients& coef) const {
    for (std::size_t j = 0; j < kCoefCount; ++j) coef[j] = pinned_[j] ? *pinned_[j] : 0.0;
    for (std::size_t k = 0; k < free_.size(); ++k) coef[free_[k]] = center_[k] + scale_[k] * theta[3 + k];
}

double SvxModel::log_density(std::span<const double> theta, std::span<double> grad) const {
    const std::size_t n = y_.size();
    const std::size_t nf = free_.size();
    Coefficients coef;
    coefficients(theta, coef);
    thread_local std::vector<double> resid;
    thread_local std::vector<double> grad_mean;
    resid.resize(n);
    grad_mean.resize(n);
    for (std::size_t t = 0; t < n; ++t) {
        double m = ybar_;
        for (std::size_t j = 0; j < kCoefCount; ++j) m += coef[j] * z_[t][j];
        resid[t] = y_[t] - m;
    }
    const double tau = priors_.coef_scale * (y_sd_ > 0.0 ? y_sd_ : 1.0);
    double lp = 0.0;
    for (std::size_t k = 0; k < nf; ++k) lp += log_normal(coef[free_[k]], tau);
    if (grad.empty()) {
        return lp + volatility_log_density(theta.first(3), theta.subspan(3 + nf), resid, {}, {}, {});
    }
    lp += volatility_log_density(theta.first(3), theta.subspan(3 + nf), resid, grad.first(3), grad.subspan(3 + nf),
                                 grad_mean);
    for (std::size_t k = 0; k < nf; ++k) {
        const std::size_t j = free_[k];
        double d = 0.0;
        for (std::size_t t = 0; t < n; ++t) d += grad_mean[t] * z_[t][j];
        grad[3 + k] = scale_[k] * (d - coef[j] / (tau * tau));
    }
    return lp;
}

std::vector<std::string> SvxModel::param_names() const {
    std::vector<std::string> names = {"mu", "phi", "sigma"};
    for (auto name : kCoefParamNames) names.emplace_back(name);
    for (std::size_t t = 0; t < y_.size(); ++t) names.push_back("h[" + std::to_string(t + 1) + "]");
    return names;
}

void SvxModel::constrain(std::span<const double> theta, std::span<double> out) const {
    const std::size_t nf = free_.size();
    out[0] = theta[0];
    out[1] = std::tanh(theta[1]);
    out[2] = std::exp(theta[2]);
    Coefficients coef;
    coefficients(theta, coef);
    for (std::size_t j = 0; j < kCoefCount; ++j) out[3 + j] = coef[j];
    latent_path(out[0], out[1], out[2], theta.subspan(3 + nf), out.subspan(3 + kCoefCount));
}

std::vector<double> SvxModel::initial_point(Rng& rng, double init_sd) const {
    std::vector<double> theta(dim(), 0.0);
    theta[0] = mu_center_ + init_sd * std_normal(rng);
    for (std::size_t k = 1; k < 3 + free_.size(); ++k) theta[k] = init_sd * std_normal(rng);
    return theta;
}

// ---------------------------------------------------------------------------

void record_training(PosteriorFit& fit, const SvModelBase& model, const PriceSeries* series) {
    auto& tr = fit.train;
    tr.family = std::string(to_string(model.family()));
    tr.ybar = model.ybar();
    tr.y_sd = model.y_sd();
    tr.n_obs = model.n_obs();
    if (series) {
        tr.first_date = format_date(series->first_date());
        tr.last_date = format_date(series->last_date());
        tr.hour = series->hour();
        tr.zone = std::string(to_string(series->zone()));
    }
    tr.std_columns.clear();
    tr.std_mean.clear();
    tr.std_sd.clear();
    tr.pinned.clear();
    if (const auto* svx = dynamic_cast<const SvxModel*>(&model)) {
        for (std::size_t j = 0; j < kRegressorCount; ++j) {
            tr.std_columns.emplace_back(kRegressorNames[j]);
            tr.std_mean.push_back(svx->standardizer().mean[j]);
            tr.std_sd.push_back(svx->standardizer().sd[j]);
        }
        for (std::size_t j = 0; j < kCoefCount; ++j) {
            if (svx->pinned()[j]) tr.pinned[std::string(kCoefParamNames[j])] = *svx->pinned()[j];
        }
    }
    tr.last_h.clear();
    if (fit.has_draws()) {
        const auto col = fit.index_of("h[" + std::to_string(model.n_obs()) + "]");
        for (Eigen::Index r = 0; r < fit.draws.rows(); ++r) {
            tr.last_h.push_back(fit.draws(r, static_cast<Eigen::Index>(col)));
        }
    }
}

std::optional<Standardizer> standardizer_of(const PosteriorFit& fit) {
    if (fit.train.std_mean.size() != kRegressorCount || fit.train.std_sd.size() != kRegressorCount) {
        return std::nullopt;
    }
    Standardizer s;
    for (std::size_t j = 0; j < kRegressorCount; ++j) {
        s.mean[j] = fit.train.std_mean[j];
        s.sd[j] = fit.train.std_sd[j];
    }
    return s;
}

Coefficients to_raw(const Coefficients& coef_std, const Standardizer& standardizer) {
    Coefficients raw{};
    double intercept = coef_std[kRegressorCount];
    for (std::size_t j = 0; j < kRegressorCount; ++j) {
        raw[j] = coef_std[j] / standardizer.sd[j];
        intercept -= coef_std[j] * standardizer.mean[j] / standardizer.sd[j];
    }
    raw[kRegressorCount] = intercept;
    return raw;
}

std::vector<CoefficientSummary> raw_coefficients(const PosteriorFit& fit, const std::optional<Standardizer>& standardizer) {
    if (!standardizer) throw Error(ErrorKind::MissingStandardizer, "raw coefficients need the training standardizer");
    static constexpr std::array<std::string_view, kCoefCount> raw_names = {"alpha", "beta1", "beta2",
                                                                           "beta3", "gamma", "xi"};
    std::array<std::size_t, kCoefCount> cols{};
    for (std::size_t j = 0; j < kCoefCount; ++j) {
        try {
            cols[j] = fit.index_of(std::string(kCoefParamNames[j]));
        } catch (const Error&) {
            throw Error(ErrorKind::IncompatibleFit, "fit does not contain SV X coefficients");
        }
    }
    std::vector<CoefficientSummary> out(kCoefCount);
    for (std::size_t j = 0; j < kCoefCount; ++j) out[j].name = std::string(raw_names[j]);
    if (fit.has_draws()) {
        const auto rows = static_cast<std::size_t>(fit.draws.rows());
        std::array<std::vector<double>, kCoefCount> values;
        for (auto& v : values) v.resize(rows);
        for (std::size_t r = 0; r < rows; ++r) {
            Coefficients c{};
            for (std::size_t j = 0; j < kCoefCount; ++j) {
                c[j] = fit.draws(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(cols[j]));
            }
            const auto raw = to_raw(c, *standardizer);
            for (std::size_t j = 0; j < kCoefCount; ++j) values[j][r] = raw[j];
        }
        for (std::size_t j = 0; j < kCoefCount; ++j) out[j].summary = summarize(values[j]);
    } else {
        // The map is affine, so posterior means transform exactly; spreads are unavailable.
        Coefficients c{};
        for (std::size_t j = 0; j < kCoefCount; ++j) c[j] = fit.summary[cols[j]].mean;
        const auto raw = to_raw(c, *standardizer);
        for (std::size_t j = 0; j < kCoefCount; ++j) {
            out[j].summary = {raw[j], std::nan(""), std::nan(""), std::nan(""), std::nan("")};
        }
    }
    return out;
}

}  // namespace spotvol
