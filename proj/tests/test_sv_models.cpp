#include <gtest/gtest.h>

#include <cmath>

#include <boost/math/distributions/cauchy.hpp>
#include <boost/math/distributions/normal.hpp>

#include "spotvol/error.hpp"
#include "spotvol/sv_models.hpp"
#include "test_support.hpp"

using namespace spotvol;

namespace {

Dataset svx_data(std::size_t n_days, std::uint64_t seed) {
    SynthSpec spec;
    spec.n_days = static_cast<int>(n_days);
    spec.seed = seed;
    spec.svx = SvxCoefficients{0.5, 2.0, 0.1, 0.01, -5.0, 10.0};
    return test::synth_dataset(spec, 11);
}

std::vector<double> random_point(const LogDensityModel& model, Rng& rng) {
    auto theta = model.initial_point(rng, 0.3);
    for (auto& v : theta) v += 0.5 * std_normal(rng);
    return theta;
}

// Largest |analytic - central difference| / max(1, |analytic|) over all coordinates.
double max_gradient_error(const LogDensityModel& model, std::vector<double> theta) {
    std::vector<double> grad(model.dim());
    model.log_density(theta, grad);
    double worst = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const double x = theta[i];
        const double h = 1e-6 * std::max(1.0, std::abs(x));
        theta[i] = x + h;
        const double up = model.log_density(theta, {});
        theta[i] = x - h;
        const double down = model.log_density(theta, {});
        theta[i] = x;
        const double fd = (up - down) / (2.0 * h);
        worst = std::max(worst, std::abs(grad[i] - fd) / std::max(1.0, std::abs(grad[i])));
    }
    return worst;
}

}  // namespace

TEST(Baseline, FiniteAtInitOnConstantSeries) {
    const SvBaselineModel model(std::vector<double>(10, 1000.0));
    Rng rng = make_rng(1);
    const auto theta = model.initial_point(rng, 0.1);
    std::vector<double> grad(model.dim());
    EXPECT_TRUE(std::isfinite(model.log_density(theta, grad)));
    for (double g : grad) EXPECT_TRUE(std::isfinite(g));
}

TEST(Baseline, TooShort) { EXPECT_THROW(SvBaselineModel(std::vector<double>(9, 1.0)), Error); }

TEST(Baseline, GradientMatchesFiniteDifferences) {
    const Dataset data = svx_data(60, 3);
    const SvBaselineModel model(data.prices.values());
    Rng rng = make_rng(10);
    for (int k = 0; k < 10; ++k) EXPECT_LT(max_gradient_error(model, random_point(model, rng)), 1e-4) << "point " << k;
}

TEST(Baseline, NaiveSumAtZeroPersistence) {
    const Dataset data = svx_data(40, 4);
    const SvPriors priors;
    const SvBaselineModel model(data.prices.values(), priors);
    const auto& y = model.y();
    Rng rng = make_rng(2);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<double> theta(model.dim());
        const double mu = 3.0 + std_normal(rng);
        const double log_sigma = -1.0 + 0.3 * std_normal(rng);
        const double sigma = std::exp(log_sigma);
        theta[0] = mu;
        theta[1] = 0.0;  // phi = tanh(0) = 0
        theta[2] = log_sigma;
        for (std::size_t t = 0; t < y.size(); ++t) theta[3 + t] = std_normal(rng);

        const boost::math::cauchy_distribution<double> mu_prior(0.0, priors.mu_scale);
        const boost::math::cauchy_distribution<double> sigma_prior(0.0, priors.sigma_scale);
        const boost::math::normal_distribution<double> std_norm(0.0, 1.0);
        double expected = std::log(boost::math::pdf(mu_prior, mu));
        expected += std::log(2.0 * boost::math::pdf(sigma_prior, sigma));
        expected += std::log(0.5);  // phi ~ U(-1, 1)
        expected += log_sigma;      // d sigma / d log sigma; the tanh Jacobian is 1 at phi = 0
        for (std::size_t t = 0; t < y.size(); ++t) {
            const double s = theta[3 + t];
            const double h = mu + sigma * s;
            const boost::math::normal_distribution<double> obs(model.ybar(), std::exp(h / 2.0));
            expected += std::log(boost::math::pdf(std_norm, s));
            expected += std::log(boost::math::pdf(obs, y[t]));
        }
        EXPECT_NEAR(model.log_density(theta, {}), expected, 1e-10 * std::max(1.0, std::abs(expected)));
    }
}

TEST(Baseline, LatentPathRecursion) {
    const std::vector<double> s{0.5, -1.0, 2.0};
    std::vector<double> h(3);
    SvModelBase::latent_path(-1.0, 0.6, 0.2, s, h);
    EXPECT_DOUBLE_EQ(h[0], -1.0 + 0.2 / std::sqrt(1 - 0.36) * 0.5);
    EXPECT_DOUBLE_EQ(h[1], -1.0 + 0.6 * (h[0] + 1.0) + 0.2 * -1.0);
    EXPECT_DOUBLE_EQ(h[2], -1.0 + 0.6 * (h[1] + 1.0) + 0.2 * 2.0);
}

TEST(Svx, GradientMatchesFiniteDifferences) {
    const Dataset data = svx_data(60, 5);
    const SvxModel model(data.prices, data.frame);
    Rng rng = make_rng(11);
    for (int k = 0; k < 10; ++k) EXPECT_LT(max_gradient_error(model, random_point(model, rng)), 1e-4) << "point " << k;
}

TEST(Svx, GradientWithPinnedCoefficients) {
    const Dataset data = svx_data(50, 6);
    SvxOptions opts;
    opts.pinned[1] = 0.5;
    opts.pinned[4] = 0.0;
    const SvxModel model(data.prices, data.frame, opts);
    EXPECT_EQ(model.free_coefficients(), 4u);
    Rng rng = make_rng(12);
    for (int k = 0; k < 5; ++k) EXPECT_LT(max_gradient_error(model, random_point(model, rng)), 1e-4);
}

TEST(Svx, AllPinnedToZeroReducesToBaseline) {
    const Dataset data = svx_data(80, 7);
    SvxOptions opts;
    for (auto& p : opts.pinned) p = 0.0;
    const SvxModel svx(data.prices, data.frame, opts);
    const SvBaselineModel base(data.prices.values());
    ASSERT_EQ(svx.dim(), base.dim());
    Rng rng = make_rng(13);
    for (int k = 0; k < 10; ++k) {
        const auto theta = random_point(base, rng);
        std::vector<double> g1(base.dim()), g2(svx.dim());
        const double a = base.log_density(theta, g1);
        const double b = svx.log_density(theta, g2);
        EXPECT_NEAR(a, b, 1e-12 * std::max(1.0, std::abs(a)));
        for (std::size_t i = 0; i < g1.size(); ++i) EXPECT_NEAR(g1[i], g2[i], 1e-12 * std::max(1.0, std::abs(g1[i])));
    }
}

TEST(Svx, MisalignedFrames) {
    const Dataset data = svx_data(40, 8);
    EXPECT_THROW(SvxModel(data.prices.slice(1, 30), data.frame.slice(0, 30)), Error);
    try {
        SvxModel(data.prices.slice(1, 30), data.frame.slice(0, 30));
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::MisalignedFrames);
    }
}

TEST(Svx, ConstantColumnRejectedUnlessPinned) {
    const Dataset data = svx_data(40, 9);
    const auto frame = ExogenousFrame::from_columns(data.frame.first_date(), data.frame.lag_price(),
                                                    std::vector<double>(data.size(), 4.0));
    try {
        SvxModel(data.prices, frame);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::ConstantColumn);
    }
    SvxOptions opts;
    opts.pin_constant_columns = true;
    const SvxModel model(data.prices, frame, opts);
    EXPECT_EQ(model.free_coefficients(), 3u);  // lag price, weekday, xi
    EXPECT_EQ(model.pinned()[1], 0.0);
}

TEST(Standardization, MeanInvariance) {
    const Dataset data = svx_data(50, 10);
    const Standardizer s = Standardizer::fit(data.frame);
    Rng rng = make_rng(14);
    const double ybar = 1234.5;
    const MeanModel std_model{ybar, s};
    for (int k = 0; k < 20; ++k) {
        Coefficients c;
        for (auto& v : c) v = 10.0 * std_normal(rng);
        const Coefficients raw = to_raw(c, s);
        for (std::size_t t = 0; t < data.size(); ++t) {
            const auto row = data.frame.row(t);
            double direct = ybar + raw[kRegressorCount];
            for (std::size_t j = 0; j < kRegressorCount; ++j) direct += raw[j] * row[j];
            const double m = std_model.mean(c, row);
            EXPECT_NEAR(m, direct, 1e-10 * std::abs(direct));
        }
    }
}

TEST(Standardization, IdentityLeavesCoefficients) {
    const Coefficients c{1, -2, 3, -4, 5, 6};
    EXPECT_EQ(to_raw(c, Standardizer::identity()), c);
    const Coefficients zero{};
    Standardizer s;
    s.mean = {1, 2, 3, 4, 5};
    s.sd = {2, 3, 4, 5, 6};
    EXPECT_EQ(to_raw(zero, s), zero);
}

TEST(Standardization, ScaledRegressor) {
    Standardizer s = Standardizer::identity();
    s.sd[1] = 10.0;
    const Coefficients c{0, 7, 0, 0, 0, 0};
    const Coefficients raw = to_raw(c, s);
    EXPECT_DOUBLE_EQ(raw[1], 0.7);
    const MeanModel m{0.0, s};
    std::array<double, kRegressorCount> row{0, 3.3, 0, 0, 0};
    EXPECT_NEAR(m.mean(c, row), raw[1] * 3.3, 1e-10);
}

TEST(RawCoefficients, NeedsStandardizer) {
    PosteriorFit fit;
    try {
        raw_coefficients(fit, std::nullopt);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::MissingStandardizer);
    }
}

TEST(Family, Names) {
    EXPECT_EQ(to_string(ModelFamily::Svx), "svx");
    EXPECT_EQ(family_from_string("baseline"), ModelFamily::Baseline);
    EXPECT_THROW(family_from_string("garch"), Error);
}
