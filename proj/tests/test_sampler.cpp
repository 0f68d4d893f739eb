#include <gtest/gtest.h>

#include <cmath>
#include <algorithm>
#include <limits>

#include <boost/math/distributions/normal.hpp>

#include "spotvol/error.hpp"
#include "spotvol/sampler.hpp"
#include "test_support.hpp"

using namespace spotvol;

namespace {

// Independent normals with distinct locations and scales.
class GaussianTarget final : public LogDensityModel {
public:
    GaussianTarget(std::vector<double> mean, std::vector<double> sd) : mean_(std::move(mean)), sd_(std::move(sd)) {}
    std::size_t dim() const override { return mean_.size(); }
    double log_density(std::span<const double> theta, std::span<double> grad) const override {
        double lp = 0;
        for (std::size_t i = 0; i < dim(); ++i) {
            const double z = (theta[i] - mean_[i]) / sd_[i];
            lp -= 0.5 * z * z;
            if (!grad.empty()) grad[i] = -z / sd_[i];
        }
        return lp;
    }
    std::vector<std::string> param_names() const override {
        std::vector<std::string> names;
        for (std::size_t i = 0; i < dim(); ++i) names.push_back("x" + std::to_string(i));
        return names;
    }
    void constrain(std::span<const double> theta, std::span<double> out) const override {
        std::copy(theta.begin(), theta.end(), out.begin());
    }

private:
    std::vector<double> mean_;
    std::vector<double> sd_;
};

// Zero-mean bivariate normal with unit variances and correlation rho.
class CorrelatedPair final : public LogDensityModel {
public:
    explicit CorrelatedPair(double rho) : rho_(rho) {}
    std::size_t dim() const override { return 2; }
    double log_density(std::span<const double> t, std::span<double> g) const override {
        const double k = 1.0 / (1.0 - rho_ * rho_);
        if (!g.empty()) {
            g[0] = -k * (t[0] - rho_ * t[1]);
            g[1] = -k * (t[1] - rho_ * t[0]);
        }
        return -0.5 * k * (t[0] * t[0] - 2.0 * rho_ * t[0] * t[1] + t[1] * t[1]);
    }
    std::vector<std::string> param_names() const override { return {"a", "b"}; }
    void constrain(std::span<const double> t, std::span<double> o) const override { std::copy(t.begin(), t.end(), o.begin()); }

private:
    double rho_;
};

class NowhereFinite final : public LogDensityModel {
public:
    std::size_t dim() const override { return 1; }
    double log_density(std::span<const double>, std::span<double>) const override {
        return -std::numeric_limits<double>::infinity();
    }
    std::vector<std::string> param_names() const override { return {"x"}; }
    void constrain(std::span<const double> t, std::span<double> o) const override { o[0] = t[0]; }
};

// Standard normal truncated to |x| < 1 without telling the sampler: trajectories
// leaving the support hit -inf and count as divergent.
class HardWall final : public LogDensityModel {
public:
    std::size_t dim() const override { return 1; }
    double log_density(std::span<const double> t, std::span<double> g) const override {
        if (!g.empty()) g[0] = -t[0];
        return std::abs(t[0]) < 1.0 ? -0.5 * t[0] * t[0] : -std::numeric_limits<double>::infinity();
    }
    std::vector<std::string> param_names() const override { return {"x"}; }
    void constrain(std::span<const double> t, std::span<double> o) const override { o[0] = t[0]; }
};

SamplerConfig small_config() {
    SamplerConfig cfg;
    cfg.chains = 4;
    cfg.warmup = 300;
    cfg.draws = 1000;
    cfg.workers = 1;
    return cfg;
}

}  // namespace

TEST(Sampler, RecoversGaussianMoments) {
    const GaussianTarget model({1.0, -3.0, 50.0}, {0.5, 2.0, 10.0});
    const PosteriorFit fit = sample(model, small_config(), 123);
    ASSERT_EQ(fit.draws.rows(), 4000);
    const std::vector<double> mean{1.0, -3.0, 50.0};
    const std::vector<double> sd{0.5, 2.0, 10.0};
    for (std::size_t i = 0; i < 3; ++i) {
        const double ess = fit.diagnostics.ess[i];
        EXPECT_GT(ess, 400.0);
        EXPECT_NEAR(fit.summary[i].mean, mean[i], 4.0 * sd[i] / std::sqrt(ess)) << fit.param_names[i];
        EXPECT_NEAR(fit.summary[i].sd, sd[i], 0.1 * sd[i]) << fit.param_names[i];
        EXPECT_LT(fit.diagnostics.rhat[i], 1.05);
        EXPECT_NEAR(fit.summary[i].q025, mean[i] - 1.96 * sd[i], 0.25 * sd[i]);
    }
    for (const auto& c : fit.diagnostics.chains) {
        EXPECT_GT(c.mean_accept, 0.5);
        EXPECT_EQ(c.divergences, 0u);
    }
}

TEST(Sampler, StandardNormalDistribution) {
    const GaussianTarget model({0.0}, {1.0});
    SamplerConfig cfg;
    cfg.workers = 1;
    const PosteriorFit fit = sample(model, cfg, 31);
    std::vector<double> x(static_cast<std::size_t>(fit.draws.rows()));
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = fit.draws(static_cast<Eigen::Index>(i), 0);
    EXPECT_NEAR(fit.summary[0].mean, 0.0, 0.1);
    EXPECT_NEAR(fit.summary[0].sd, 1.0, 0.1);
    std::sort(x.begin(), x.end());
    const boost::math::normal_distribution<double> normal;
    double ks = 0.0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double f = boost::math::cdf(normal, x[i]);
        ks = std::max({ks, std::abs(f - static_cast<double>(i) / n), std::abs(static_cast<double>(i + 1) / n - f)});
    }
    EXPECT_LT(ks, 0.05);
}

TEST(Sampler, CorrelatedPairCovariance) {
    const CorrelatedPair model(0.8);
    SamplerConfig cfg;
    cfg.workers = 1;
    const PosteriorFit fit = sample(model, cfg, 32);
    const Eigen::MatrixXd centered = fit.draws.rowwise() - fit.draws.colwise().mean();
    const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(fit.draws.rows() - 1);
    EXPECT_NEAR(cov(0, 0), 1.0, 0.1);
    EXPECT_NEAR(cov(1, 1), 1.0, 0.1);
    EXPECT_NEAR(cov(0, 1), 0.8, 0.08);
    for (double r : fit.diagnostics.rhat) EXPECT_LT(r, 1.05);
}

TEST(Sampler, SameSeedSameDraws) {
    const GaussianTarget model({0.0, 1.0}, {1.0, 3.0});
    SamplerConfig cfg = small_config();
    cfg.chains = 2;
    cfg.draws = 500;
    cfg.warmup = 200;
    const PosteriorFit a = sample(model, cfg, 77);
    const PosteriorFit b = sample(model, cfg, 77);
    EXPECT_TRUE(a.draws == b.draws);
    cfg.workers = 2;
    const PosteriorFit c = sample(model, cfg, 77);
    EXPECT_TRUE(a.draws == c.draws) << "result depends on the worker count";
    const PosteriorFit d = sample(model, cfg, 78);
    EXPECT_FALSE(a.draws == d.draws);
}

TEST(Sampler, ConfigValidation) {
    SamplerConfig cfg;
    cfg.chains = 1;
    EXPECT_THROW(validate(cfg), Error);
    cfg = {};
    cfg.warmup = 199;
    EXPECT_THROW(validate(cfg), Error);
    cfg = {};
    cfg.draws = 499;
    EXPECT_THROW(validate(cfg), Error);
    EXPECT_NO_THROW(validate(SamplerConfig{}));
}

TEST(Sampler, NonFiniteEverywhere) {
    try {
        sample(NowhereFinite{}, small_config(), 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NonFiniteLogp);
    }
}

TEST(Sampler, ManyDivergencesAreFatal) {
    SamplerConfig cfg = small_config();
    cfg.max_divergent_fraction = 0.01;
    try {
        sample(HardWall{}, cfg, 3);
        FAIL() << "expected DivergentChains";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::DivergentChains);
    }
}

TEST(Rhat, MatchesReferenceValue) {
    auto a = test::lcg_noise(1, 20);
    auto b = test::lcg_noise(2, 20);
    for (double& v : b) v += 0.3;
    // Split R-hat from the textbook formula evaluated independently.
    EXPECT_NEAR(rhat({a, b}).value, 1.1548607622007896, 1e-12);
}

TEST(Rhat, IdenticalIidChainsNearOne) {
    Rng rng = make_rng(5);
    std::vector<std::vector<double>> chains(4, std::vector<double>(2000));
    for (auto& c : chains) {
        for (auto& v : c) v = std_normal(rng);
    }
    const auto r = rhat(chains);
    EXPECT_LT(r.value, 1.01);
    EXPECT_FALSE(r.zero_variance);
    const double ess = effective_sample_size(chains);
    EXPECT_GT(ess, 6000.0);
    EXPECT_LE(ess, 8000.0 * 1.2);
}

TEST(Rhat, SeparatedChainsFlagged) {
    Rng rng = make_rng(6);
    std::vector<std::vector<double>> chains(2, std::vector<double>(500));
    for (std::size_t c = 0; c < 2; ++c) {
        for (auto& v : chains[c]) v = std_normal(rng) + 3.0 * static_cast<double>(c);
    }
    EXPECT_GT(rhat(chains).value, 1.5);
}

TEST(Rhat, ConstantChains) {
    const auto r = rhat({std::vector<double>(10, 2.0), std::vector<double>(10, 2.0)});
    EXPECT_TRUE(r.zero_variance);
    EXPECT_EQ(r.value, 1.0);
}

TEST(Rhat, TooFewDraws) {
    EXPECT_THROW(rhat({{1, 2, 3, 4}}), Error);
    EXPECT_THROW(rhat({{1, 2, 3}, {1, 2, 3}}), Error);
}

TEST(Ess, AutocorrelatedChainHasFewerEffectiveDraws) {
    Rng rng = make_rng(7);
    std::vector<std::vector<double>> chains(2, std::vector<double>(4000));
    for (auto& c : chains) {
        double x = 0;
        for (auto& v : c) v = x = 0.9 * x + std_normal(rng);
    }
    // AR(1) with phi = 0.9: n (1 - phi) / (1 + phi) ~ 8000 / 19.
    const double ess = effective_sample_size(chains);
    EXPECT_GT(ess, 8000.0 / 19.0 * 0.6);
    EXPECT_LT(ess, 8000.0 / 19.0 * 1.6);
}

TEST(Summarize, QuantilesAndMoments) {
    std::vector<double> v;
    for (int i = 1; i <= 101; ++i) v.push_back(i);
    const ParamSummary s = summarize(v);
    EXPECT_DOUBLE_EQ(s.mean, 51.0);
    EXPECT_DOUBLE_EQ(s.q50, 51.0);
    EXPECT_DOUBLE_EQ(s.q025, 3.5);
    EXPECT_DOUBLE_EQ(s.q975, 98.5);
    EXPECT_NEAR(s.sd, std::sqrt(101.0 * 102.0 / 12.0), 1e-9);
}
