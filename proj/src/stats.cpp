#include "spotvol/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>

#include "spotvol/error.hpp"
#include "spotvol/random.hpp"

namespace spotvol {

namespace {

struct OlsFit {
    Eigen::VectorXd beta;
    Eigen::VectorXd resid;
    double ssr = 0.0;
    Eigen::VectorXd se;
};

OlsFit ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    if (qr.rank() < x.cols()) throw Error(ErrorKind::SingularRegression, "design matrix is rank deficient");
    OlsFit fit;
    fit.beta = qr.solve(y);
    fit.resid = y - x * fit.beta;
    fit.ssr = fit.resid.squaredNorm();
    const double dof = static_cast<double>(x.rows() - x.cols());
    const double s2 = dof > 0 ? fit.ssr / dof : std::numeric_limits<double>::quiet_NaN();
    const Eigen::MatrixXd xtx_inv = (x.transpose() * x).inverse();
    fit.se = (s2 * xtx_inv.diagonal().array()).sqrt();
    return fit;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

// Rows of the ADF regression on the last n_obs differences, with `lags` lagged differences.
// Columns: constant, y_{t-1}, dy_{t-1}, ..., dy_{t-lags}.
void adf_design(std::span<const double> y, int lags, std::size_t n_obs, Eigen::MatrixXd& x, Eigen::VectorXd& dy) {
    const std::size_t n_diff = y.size() - 1;
    x.resize(static_cast<Eigen::Index>(n_obs), lags + 2);
    dy.resize(static_cast<Eigen::Index>(n_obs));
    for (std::size_t r = 0; r < n_obs; ++r) {
        const std::size_t t = n_diff - n_obs + r;  // index into differences; dy[t] = y[t+1] - y[t]
        const auto ri = static_cast<Eigen::Index>(r);
        dy(ri) = y[t + 1] - y[t];
        x(ri, 0) = 1.0;
        x(ri, 1) = y[t];
        for (int i = 1; i <= lags; ++i) x(ri, i + 1) = y[t + 1 - static_cast<std::size_t>(i)] - y[t - static_cast<std::size_t>(i)];
    }
}

}  // namespace

int adf_default_max_lags(std::size_t n) {
    int lags = static_cast<int>(std::floor(12.0 * std::pow(static_cast<double>(n) / 100.0, 0.25)));
    const int cap = static_cast<int>(n) / 2 - 2;  // n/2 - ntrend - 1
    return std::max(0, std::min(lags, cap));
}

double mackinnon_p_value(double statistic) {
    // MacKinnon (1994), constant-only tau, one I(1) series.
    constexpr double tau_max = 2.74;
    constexpr double tau_min = -18.83;
    constexpr double tau_star = -1.61;
    constexpr std::array<double, 3> small_p = {2.1659, 1.4412, 0.038269};
    constexpr std::array<double, 4> large_p = {1.7339, 0.93202, -0.12745, -0.010368};
    if (statistic > tau_max) return 1.0;
    if (statistic < tau_min) return 0.0;
    double z = 0.0;
    if (statistic <= tau_star) {
        for (auto it = small_p.rbegin(); it != small_p.rend(); ++it) z = z * statistic + *it;
    } else {
        for (auto it = large_p.rbegin(); it != large_p.rend(); ++it) z = z * statistic + *it;
    }
    return normal_cdf(z);
}

std::array<double, 3> mackinnon_critical_values(std::size_t n_obs) {
    // MacKinnon (2010) response surfaces, constant-only: tau + b1/T + b2/T^2 + b3/T^3.
    constexpr std::array<std::array<double, 4>, 3> coef = {{{-3.43035, -6.5393, -16.786, -79.433},
                                                            {-2.86154, -2.8903, -4.234, -40.040},
                                                            {-2.56677, -1.5384, -2.809, 0.0}}};
    const double inv = 1.0 / static_cast<double>(n_obs);
    std::array<double, 3> out{};
    for (std::size_t i = 0; i < 3; ++i) {
        out[i] = coef[i][0] + coef[i][1] * inv + coef[i][2] * inv * inv + coef[i][3] * inv * inv * inv;
    }
    return out;
}

AdfResult adf_test(std::span<const double> y, std::optional<int> max_lags, double alpha, AdfRegression) {
    if (y.size() < 20) throw Error(ErrorKind::SeriesTooShort, "ADF needs at least 20 observations");
    for (double v : y) {
        if (!std::isfinite(v)) throw Error(ErrorKind::NonFinite, "ADF input contains non-finite values");
    }
    const int cap = static_cast<int>(y.size()) / 2 - 2;
    const int max_lag = max_lags ? *max_lags : adf_default_max_lags(y.size());
    if (max_lag < 0 || max_lag > cap) {
        throw Error(ErrorKind::LagTooLarge, "max_lags must lie in [0, " + std::to_string(cap) + "]");
    }
    const std::size_t n_diff = y.size() - 1;

    // Lag selection on a common sample so the information criteria are comparable.
    int best_lag = 0;
    {
        const std::size_t n_obs = n_diff - static_cast<std::size_t>(max_lag);
        Eigen::MatrixXd x;
        Eigen::VectorXd dy;
        adf_design(y, max_lag, n_obs, x, dy);
        double best_aic = std::numeric_limits<double>::infinity();
        for (int lag = 0; lag <= max_lag; ++lag) {
            const auto k = lag + 2;
            const OlsFit f = ols(x.leftCols(k), dy);
            const double n = static_cast<double>(n_obs);
            const double llf = -n / 2.0 * (std::log(2.0 * std::numbers::pi) + std::log(f.ssr / n) + 1.0);
            const double aic = -2.0 * llf + 2.0 * k;
            if (aic < best_aic) {
                best_aic = aic;
                best_lag = lag;
            }
        }
    }

    const std::size_t n_obs = n_diff - static_cast<std::size_t>(best_lag);
    Eigen::MatrixXd x;
    Eigen::VectorXd dy;
    adf_design(y, best_lag, n_obs, x, dy);
    const OlsFit f = ols(x, dy);

    AdfResult result;
    result.statistic = f.beta(1) / f.se(1);
    if (!std::isfinite(result.statistic)) throw Error(ErrorKind::SingularRegression, "ADF statistic is not finite");
    result.p_value = mackinnon_p_value(result.statistic);
    result.n_lags_used = best_lag;
    result.n_obs = n_obs;
    result.critical_values = mackinnon_critical_values(n_obs);
    result.alpha = alpha;
    result.conclusion = result.p_value < alpha ? Stationarity::Stationary : Stationarity::NonStationary;
    return result;
}

// ---------------------------------------------------------------------------

Correlation pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw Error(ErrorKind::LengthMismatch, "pearson inputs differ in length");
    if (x.empty()) throw Error(ErrorKind::EmptySample, "pearson needs data");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (!(sxx > 0.0) || !(syy > 0.0)) return {0.0, true};
    return {std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0), false};
}

std::vector<double> acf(std::span<const double> y, int max_lag) {
    const std::size_t n = y.size();
    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    double c0 = 0.0;
    for (double v : y) c0 += (v - mean) * (v - mean);
    std::vector<double> out(static_cast<std::size_t>(max_lag) + 1, 0.0);
    for (int k = 0; k <= max_lag; ++k) {
        double c = 0.0;
        for (std::size_t t = static_cast<std::size_t>(k); t < n; ++t) c += (y[t] - mean) * (y[t - static_cast<std::size_t>(k)] - mean);
        out[static_cast<std::size_t>(k)] = c / c0;
    }
    return out;
}

std::vector<double> pacf(std::span<const double> y, int max_lag) {
    if (max_lag < 1 || static_cast<double>(max_lag) >= static_cast<double>(y.size()) / 4.0) {
        throw Error(ErrorKind::LagTooLarge, "max_lag must be >= 1 and < n/4");
    }
    std::vector<double> out(static_cast<std::size_t>(max_lag) + 1, 0.0);
    out[0] = 1.0;
    const std::size_t n = y.size();
    for (int k = 1; k <= max_lag; ++k) {
        const auto ku = static_cast<std::size_t>(k);
        const auto rows = static_cast<Eigen::Index>(n - ku);
        // Intermediate lags 1..k-1 plus a constant.
        Eigen::MatrixXd x(rows, k);
        Eigen::VectorXd target(rows);
        Eigen::VectorXd lagged(rows);
        for (std::size_t t = ku; t < n; ++t) {
            const auto r = static_cast<Eigen::Index>(t - ku);
            x(r, 0) = 1.0;
            for (std::size_t i = 1; i < ku; ++i) x(r, static_cast<Eigen::Index>(i)) = y[t - i];
            target(r) = y[t];
            lagged(r) = y[t - ku];
        }
        const Eigen::VectorXd e = ols(x, target).resid;
        const Eigen::VectorXd f = ols(x, lagged).resid;
        const double denom = std::sqrt(e.squaredNorm() * f.squaredNorm());
        out[ku] = denom > 0.0 ? e.dot(f) / denom : 0.0;
    }
    return out;
}

std::vector<double> pacf_durbin_levinson(std::span<const double> y, int max_lag) {
    if (max_lag < 1 || static_cast<std::size_t>(max_lag) >= y.size()) {
        throw Error(ErrorKind::LagTooLarge, "max_lag must lie in [1, n)");
    }
    const auto rho = acf(y, max_lag);
    std::vector<double> out(static_cast<std::size_t>(max_lag) + 1, 0.0);
    out[0] = 1.0;
    std::vector<double> phi_prev;
    std::vector<double> phi;
    double v = 1.0;
    for (std::size_t k = 1; k <= static_cast<std::size_t>(max_lag); ++k) {
        double num = rho[k];
        for (std::size_t j = 1; j < k; ++j) num -= phi_prev[j - 1] * rho[k - j];
        const double a = num / v;
        phi.assign(k, 0.0);
        for (std::size_t j = 1; j < k; ++j) phi[j - 1] = phi_prev[j - 1] - a * phi_prev[k - j - 1];
        phi[k - 1] = a;
        v *= (1.0 - a * a);
        out[k] = a;
        phi_prev = phi;
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

struct RankInfo {
    std::vector<double> ranks;  // midranks of the pooled sample, a first then b
    double tie_term = 0.0;      // sum over tie groups of (t^3 - t)
};

RankInfo pooled_ranks(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = a.size() + b.size();
    std::vector<std::pair<double, std::size_t>> pooled;
    pooled.reserve(n);
    for (std::size_t i = 0; i < a.size(); ++i) pooled.emplace_back(a[i], i);
    for (std::size_t i = 0; i < b.size(); ++i) pooled.emplace_back(b[i], a.size() + i);
    std::sort(pooled.begin(), pooled.end());
    RankInfo info;
    info.ranks.resize(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && pooled[j + 1].first == pooled[i].first) ++j;
        const double mid = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) info.ranks[pooled[k].second] = mid;
        const double t = static_cast<double>(j - i + 1);
        info.tie_term += t * t * t - t;
        i = j + 1;
    }
    return info;
}

void check_samples(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw Error(ErrorKind::EmptySample, "both samples must be non-empty");
    for (double v : a) {
        if (!std::isfinite(v)) throw Error(ErrorKind::NonFinite, "sample contains non-finite values");
    }
    for (double v : b) {
        if (!std::isfinite(v)) throw Error(ErrorKind::NonFinite, "sample contains non-finite values");
    }
}

double u_from_ranks(const RankInfo& info, std::size_t n1) {
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < n1; ++i) rank_sum += info.ranks[i];
    const double n1d = static_cast<double>(n1);
    return rank_sum - n1d * (n1d + 1.0) / 2.0;
}

void fill_null_moments(MwuResult& r, std::size_t n1, std::size_t n2, double tie_term) {
    const double a = static_cast<double>(n1);
    const double b = static_cast<double>(n2);
    const double n = a + b;
    r.null_mean = a * b / 2.0;
    const double correction = n > 1.0 ? tie_term / (n * (n - 1.0)) : 0.0;
    r.null_sd = std::sqrt(a * b / 12.0 * ((n + 1.0) - correction));
}

}  // namespace

MwuResult mwu_normal_approx(std::span<const double> a, std::span<const double> b) {
    check_samples(a, b);
    const RankInfo info = pooled_ranks(a, b);
    MwuResult r;
    r.method = MwuMethod::NormalApprox;
    r.u_statistic = u_from_ranks(info, a.size());
    fill_null_moments(r, a.size(), b.size(), info.tie_term);
    if (!(r.null_sd > 0.0)) {
        r.p_value = 1.0;
        return r;
    }
    const double z = (r.u_statistic - r.null_mean - 0.5) / r.null_sd;
    r.p_value = std::clamp(1.0 - normal_cdf(z), 0.0, 1.0);
    return r;
}

MwuResult mwu_test(std::span<const double> a, std::span<const double> b, const MwuOptions& options) {
    check_samples(a, b);
    const std::size_t n1 = a.size();
    const std::size_t n2 = b.size();
    if (std::min(n1, n2) > static_cast<std::size_t>(options.exact_threshold)) {
        if (options.monte_carlo_permutations <= 0) return mwu_normal_approx(a, b);
        const RankInfo info = pooled_ranks(a, b);
        MwuResult r;
        r.method = MwuMethod::MonteCarloPermutation;
        r.u_statistic = u_from_ranks(info, n1);
        fill_null_moments(r, n1, n2, info.tie_term);
        std::vector<double> ranks = info.ranks;
        auto rng = make_rng(options.seed, {0x4d5755});
        std::size_t at_least = 0;
        for (int p = 0; p < options.monte_carlo_permutations; ++p) {
            // Partial Fisher-Yates: the first n1 slots form a random subset.
            for (std::size_t i = 0; i < n1; ++i) {
                const auto j = i + static_cast<std::size_t>(uniform01(rng) * static_cast<double>(ranks.size() - i));
                std::swap(ranks[i], ranks[std::min(j, ranks.size() - 1)]);
            }
            RankInfo perm{ranks, 0.0};
            if (u_from_ranks(perm, n1) >= r.u_statistic - 1e-9) ++at_least;
        }
        r.p_value = (static_cast<double>(at_least) + 1.0) / (options.monte_carlo_permutations + 1.0);
        return r;
    }

    // Exact permutation distribution of the rank sum of `a`, counted by dynamic
    // programming over doubled midranks (integers even with ties).
    const RankInfo info = pooled_ranks(a, b);
    MwuResult r;
    r.method = MwuMethod::ExactPermutation;
    r.u_statistic = u_from_ranks(info, n1);
    fill_null_moments(r, n1, n2, info.tie_term);
    const std::size_t n = n1 + n2;
    std::vector<long> doubled(n);
    long total = 0;
    for (std::size_t i = 0; i < n; ++i) {
        doubled[i] = std::lround(2.0 * info.ranks[i]);
        total += doubled[i];
    }
    const long observed = std::accumulate(doubled.begin(), doubled.begin() + static_cast<std::ptrdiff_t>(n1), 0L);
    const auto width = static_cast<std::size_t>(total + 1);
    // ways[k][s]: number of k-subsets with doubled rank sum s.
    std::vector<std::vector<double>> ways(n1 + 1, std::vector<double>(width, 0.0));
    ways[0][0] = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto w = static_cast<std::size_t>(doubled[i]);
        for (std::size_t k = std::min(i + 1, n1); k >= 1; --k) {
            auto& cur = ways[k];
            const auto& prev = ways[k - 1];
            for (std::size_t s = width; s-- > w;) cur[s] += prev[s - w];
        }
    }
    double at_least = 0.0;
    double all = 0.0;
    for (std::size_t s = 0; s < width; ++s) {
        all += ways[n1][s];
        if (static_cast<long>(s) >= observed) at_least += ways[n1][s];
    }
    r.p_value = at_least / all;
    return r;
}

// ---------------------------------------------------------------------------

KMeansResult kmeans2(std::span<const Point2> points, std::uint64_t seed, int restarts, bool standardize) {
    const std::size_t n = points.size();
    if (n < 4) throw Error(ErrorKind::DegenerateData, "k-means needs at least 4 points");
    std::array<double, 2> center{0.0, 0.0};
    std::array<double, 2> scale{1.0, 1.0};
    for (const auto& p : points) {
        if (!std::isfinite(p[0]) || !std::isfinite(p[1])) throw Error(ErrorKind::NonFinite, "k-means input");
    }
    {
        bool distinct = false;
        for (const auto& p : points) distinct = distinct || p != points[0];
        if (!distinct) throw Error(ErrorKind::DegenerateData, "all points are identical");
    }
    if (standardize) {
        for (std::size_t c = 0; c < 2; ++c) {
            double m = 0.0;
            for (const auto& p : points) m += p[c];
            m /= static_cast<double>(n);
            double v = 0.0;
            for (const auto& p : points) v += (p[c] - m) * (p[c] - m);
            const double sd = std::sqrt(v / static_cast<double>(n));
            center[c] = m;
            scale[c] = sd > 0.0 ? sd : 1.0;
        }
    }
    std::vector<Point2> z(n);
    for (std::size_t i = 0; i < n; ++i) {
        z[i] = {(points[i][0] - center[0]) / scale[0], (points[i][1] - center[1]) / scale[1]};
    }
    auto dist2 = [](const Point2& p, const Point2& q) {
        return (p[0] - q[0]) * (p[0] - q[0]) + (p[1] - q[1]) * (p[1] - q[1]);
    };

    auto rng = make_rng(seed, {0x6b6d});
    KMeansResult best;
    best.inertia = std::numeric_limits<double>::infinity();
    std::vector<int> labels(n);
    for (int run = 0; run < std::max(1, restarts); ++run) {
        // k-means++ seeding.
        std::array<Point2, 2> cent{};
        cent[0] = z[static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)) % n];
        std::vector<double> d2(n);
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = dist2(z[i], cent[0]);
            total += d2[i];
        }
        double target = uniform01(rng) * total;
        std::size_t pick = n - 1;
        for (std::size_t i = 0; i < n; ++i) {
            target -= d2[i];
            if (target < 0.0 && d2[i] > 0.0) {
                pick = i;
                break;
            }
        }
        if (d2[pick] == 0.0) {
            pick = static_cast<std::size_t>(std::max_element(d2.begin(), d2.end()) - d2.begin());
        }
        cent[1] = z[pick];

        for (int iter = 0; iter < 300; ++iter) {
            bool changed = false;
            for (std::size_t i = 0; i < n; ++i) {
                const int l = dist2(z[i], cent[1]) < dist2(z[i], cent[0]) ? 1 : 0;
                if (iter == 0 || l != labels[i]) changed = true;
                labels[i] = l;
            }
            std::array<Point2, 2> sum{};
            std::array<std::size_t, 2> count{};
            for (std::size_t i = 0; i < n; ++i) {
                const auto l = static_cast<std::size_t>(labels[i]);
                sum[l][0] += z[i][0];
                sum[l][1] += z[i][1];
                ++count[l];
            }
            for (std::size_t c = 0; c < 2; ++c) {
                if (count[c] > 0) cent[c] = {sum[c][0] / static_cast<double>(count[c]), sum[c][1] / static_cast<double>(count[c])};
            }
            if (!changed) break;
        }
        double inertia = 0.0;
        for (std::size_t i = 0; i < n; ++i) inertia += dist2(z[i], cent[static_cast<std::size_t>(labels[i])]);
        if (inertia < best.inertia) {
            best.inertia = inertia;
            best.labels = labels;
            for (std::size_t c = 0; c < 2; ++c) {
                best.centroids[c] = {cent[c][0] * scale[0] + center[0], cent[c][1] * scale[1] + center[1]};
            }
        }
    }
    for (std::size_t c = 0; c < 2; ++c) {
        std::vector<double> xs;
        std::vector<double> ys;
        for (std::size_t i = 0; i < n; ++i) {
            if (static_cast<std::size_t>(best.labels[i]) == c) {
                xs.push_back(points[i][0]);
                ys.push_back(points[i][1]);
            }
        }
        best.sizes[c] = xs.size();
        best.correlation[c] = xs.size() >= 2 ? pearson(xs, ys) : Correlation{0.0, true};
    }
    return best;
}

std::array<double, 4> polyfit_cubic(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw Error(ErrorKind::LengthMismatch, "polyfit inputs differ in length");
    std::vector<double> distinct(x.begin(), x.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < 4) throw Error(ErrorKind::RankDeficient, "cubic fit needs at least 4 distinct x values");
    const auto n = static_cast<Eigen::Index>(x.size());
    Eigen::MatrixXd v(n, 4);
    Eigen::VectorXd rhs(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double xi = x[static_cast<std::size_t>(i)];
        v(i, 0) = 1.0;
        v(i, 1) = xi;
        v(i, 2) = xi * xi;
        v(i, 3) = xi * xi * xi;
        rhs(i) = y[static_cast<std::size_t>(i)];
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(v);
    if (qr.rank() < 4) throw Error(ErrorKind::RankDeficient, "Vandermonde matrix is rank deficient");
    const Eigen::VectorXd c = qr.solve(rhs);
    return {c(0), c(1), c(2), c(3)};
}

}  // namespace spotvol
