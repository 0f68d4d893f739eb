#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace spotvol {

// ---- Augmented Dickey-Fuller ------------------------------------------------

enum class AdfRegression { ConstantOnly };
enum class Stationarity { NonStationary, Stationary };

struct AdfResult {
    double statistic = 0.0;
    double p_value = 1.0;
    int n_lags_used = 0;
    std::size_t n_obs = 0;
    /// MacKinnon (2010) critical values at 1%, 5%, 10% for n_obs.
    std::array<double, 3> critical_values{};
    double alpha = 0.05;
    Stationarity conclusion = Stationarity::NonStationary;
};

/// Default lag ceiling floor(12 * (n / 100)^(1/4)), capped so the regression stays estimable.
int adf_default_max_lags(std::size_t n);

/// OLS of dy_t = c + rho y_{t-1} + sum_i phi_i dy_{t-i} + e, lag count chosen by
/// AIC up to max_lags (fixed sample), statistic = t(rho). H0: unit root.
AdfResult adf_test(std::span<const double> y, std::optional<int> max_lags = std::nullopt, double alpha = 0.05,
                   AdfRegression regression = AdfRegression::ConstantOnly);

/// MacKinnon (1994) response-surface p-value for the constant-only tau statistic.
double mackinnon_p_value(double statistic);
std::array<double, 3> mackinnon_critical_values(std::size_t n_obs);

// ---- Autocorrelation ---------------------------------------------------------

/// Partial autocorrelation by regression: lag k is the correlation between the
/// residuals of y_t and of y_{t-k} after regressing each on a constant and
/// y_{t-1..t-k+1} (t = k..n-1). Element 0 is 1. Requires max_lag < n / 4.
std::vector<double> pacf(std::span<const double> y, int max_lag);

/// Partial autocorrelation from the Durbin-Levinson recursion on the sample ACF.
std::vector<double> pacf_durbin_levinson(std::span<const double> y, int max_lag);

/// Sample autocorrelation (full-sample mean and variance).
std::vector<double> acf(std::span<const double> y, int max_lag);

struct Correlation {
    double r = 0.0;
    /// Set when either input has zero variance; r is then reported as 0.
    bool zero_variance = false;
};

Correlation pearson(std::span<const double> x, std::span<const double> y);

// ---- Mann-Whitney U ------------------------------------------------------------

enum class MwuMethod { ExactPermutation, MonteCarloPermutation, NormalApprox };

struct MwuResult {
    /// Pairs (a_i, b_j) with a_i > b_j, ties counted 1/2.
    double u_statistic = 0.0;
    double p_value = 1.0;
    MwuMethod method = MwuMethod::NormalApprox;
    double null_mean = 0.0;
    /// Tie-corrected; equals sqrt(n1 n2 (n1 + n2 + 1) / 12) without ties.
    double null_sd = 0.0;
};

struct MwuOptions {
    /// Exact permutation distribution when min(n1, n2) <= exact_threshold.
    int exact_threshold = 12;
    /// Above the threshold: Monte-Carlo permutations when > 0, otherwise the normal approximation.
    int monte_carlo_permutations = 0;
    std::uint64_t seed = 1;
};

/// One-tailed test of H1: a is shifted to the right of b.
MwuResult mwu_test(std::span<const double> a, std::span<const double> b, const MwuOptions& options = {});

/// Normal approximation with tie and continuity corrections, regardless of sample size.
MwuResult mwu_normal_approx(std::span<const double> a, std::span<const double> b);

// ---- K-means and polynomial fit --------------------------------------------------

using Point2 = std::array<double, 2>;

struct KMeansResult {
    std::vector<int> labels;
    std::array<Point2, 2> centroids{};
    std::array<Correlation, 2> correlation{};
    std::array<std::size_t, 2> sizes{};
    double inertia = 0.0;
};

/// Two-cluster k-means with k-means++ seeding and restarts; the lowest inertia wins.
/// Columns are z-scored before clustering when standardize is set; centroids
/// are reported in raw units. Per-cluster Pearson r between the two columns.
KMeansResult kmeans2(std::span<const Point2> points, std::uint64_t seed, int restarts = 10, bool standardize = true);

/// Least-squares cubic via Householder QR on the Vandermonde matrix.
/// Coefficients are ordered constant, linear, quadratic, cubic.
std::array<double, 4> polyfit_cubic(std::span<const double> x, std::span<const double> y);

}  // namespace spotvol
