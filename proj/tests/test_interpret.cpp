#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "spotvol/error.hpp"
#include "spotvol/interpret.hpp"
#include "test_support.hpp"

using namespace spotvol;

namespace {

Dataset dataset(std::uint64_t seed = 1, int n_days = 120) {
    SynthSpec spec;
    spec.n_days = n_days;
    spec.seed = seed;
    spec.svx = SvxCoefficients{0.3, -4.0, 0.05, 0.001, 5.0, 0.0};
    return test::synth_dataset(spec, 11);
}

// Summary-only SV X fit with the given standardized coefficients.
PosteriorFit svx_fit(const ExogenousFrame& frame, const Coefficients& coef, double ybar = 900.0) {
    PosteriorFit fit;
    fit.param_names = {"mu", "phi", "sigma"};
    for (auto name : kCoefParamNames) fit.param_names.emplace_back(name);
    fit.summary.resize(fit.param_names.size());
    fit.summary[1].mean = 0.9;
    fit.summary[2].mean = 0.2;
    for (std::size_t j = 0; j < kCoefCount; ++j) fit.summary[3 + j].mean = coef[j];
    const Standardizer s = Standardizer::fit(frame);
    fit.train.family = "svx";
    fit.train.ybar = ybar;
    for (std::size_t j = 0; j < kRegressorCount; ++j) {
        fit.train.std_columns.emplace_back(kRegressorNames[j]);
        fit.train.std_mean.push_back(s.mean[j]);
        fit.train.std_sd.push_back(s.sd[j]);
    }
    return fit;
}

// Straight evaluation of the mean function on raw inputs.
double naive_prediction(const PosteriorFit& fit, const Coefficients& coef, double lag_price, double temp,
                        double weekday) {
    const double raw[kRegressorCount] = {lag_price, temp, temp * temp, temp * temp * temp, weekday};
    double m = fit.train.ybar + coef[kRegressorCount];
    for (std::size_t j = 0; j < kRegressorCount; ++j) {
        m += coef[j] * (raw[j] - fit.train.std_mean[j]) / fit.train.std_sd[j];
    }
    return m;
}

}  // namespace

TEST(PdIce, MatchesNaiveDoubleLoop) {
    const Dataset d = dataset();
    const Coefficients coef{40.0, -120.0, 15.0, 3.0, 25.0, 2.0};
    const PosteriorFit fit = svx_fit(d.frame, coef);
    for (PdFeature feature : {PdFeature::Temperature, PdFeature::Weekday}) {
        const PdCurve curve = pd_ice(fit, d.frame, feature, 25, 2);
        ASSERT_EQ(static_cast<std::size_t>(curve.ice.rows()), d.size());
        for (std::size_t g = 0; g < curve.grid.size(); ++g) {
            double sum = 0.0;
            for (std::size_t i = 0; i < d.size(); ++i) {
                const bool temp = feature == PdFeature::Temperature;
                const double v = naive_prediction(fit, coef, d.frame.lag_price()[i],
                                                  temp ? curve.grid[g] : d.frame.temp_lag()[i],
                                                  temp ? static_cast<double>(d.frame.weekday()[i]) : curve.grid[g]);
                EXPECT_NEAR(curve.ice(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(g)), v, 1e-10 * std::abs(v));
                sum += v;
            }
            const double pd = sum / static_cast<double>(d.size());
            EXPECT_NEAR(curve.pd[g], pd, 1e-10 * std::abs(pd));
            double col_sum = 0.0;
            for (Eigen::Index i = 0; i < curve.ice.rows(); ++i) col_sum += curve.ice(i, static_cast<Eigen::Index>(g));
            EXPECT_EQ(curve.pd[g], col_sum / static_cast<double>(curve.ice.rows()));
        }
    }
}

TEST(PdIce, Grids) {
    const Dataset d = dataset(2);
    const PosteriorFit fit = svx_fit(d.frame, Coefficients{1, 1, 1, 1, 1, 1});
    const PdCurve t = pd_ice(fit, d.frame, PdFeature::Temperature);
    ASSERT_EQ(t.grid.size(), 25u);
    const auto [lo, hi] = std::minmax_element(d.frame.temp_lag().begin(), d.frame.temp_lag().end());
    EXPECT_EQ(t.grid.front(), *lo);
    EXPECT_EQ(t.grid.back(), *hi);
    for (std::size_t g = 1; g < t.grid.size(); ++g) EXPECT_GT(t.grid[g], t.grid[g - 1]);
    const PdCurve w = pd_ice(fit, d.frame, PdFeature::Weekday);
    EXPECT_EQ(w.grid, (std::vector<double>{0, 1, 2, 3, 4, 5, 6}));
    EXPECT_LT(std::abs(t.feature_correlation.r), 0.3);
    EXPECT_FALSE(t.correlation_warning);
}

TEST(PdIce, DeadWeekdayFeatureIsFlat) {
    const Dataset d = dataset(3);
    const PosteriorFit fit = svx_fit(d.frame, Coefficients{40.0, -120.0, 15.0, 3.0, 0.0, 2.0});
    const PdCurve curve = pd_ice(fit, d.frame, PdFeature::Weekday);
    for (double v : curve.pd) EXPECT_EQ(v, curve.pd.front());
}

TEST(PdIce, PureCubicTemperatureEffect) {
    const Dataset d = dataset(4);
    const Standardizer s = Standardizer::fit(d.frame);
    const double c = 0.02;  // raw coefficient on temp^3
    Coefficients coef{};
    coef[static_cast<std::size_t>(Regressor::TempLagCu)] = c * s.sd[static_cast<std::size_t>(Regressor::TempLagCu)];
    const PosteriorFit fit = svx_fit(d.frame, coef);
    const PdCurve curve = pd_ice(fit, d.frame, PdFeature::Temperature);
    const auto poly = polyfit_cubic(curve.grid, curve.pd);
    double ss_res = 0.0;
    double ss_tot = 0.0;
    double mean = 0.0;
    for (double v : curve.pd) mean += v;
    mean /= static_cast<double>(curve.pd.size());
    for (std::size_t g = 0; g < curve.grid.size(); ++g) {
        const double x = curve.grid[g];
        const double fitted = poly[0] + poly[1] * x + poly[2] * x * x + poly[3] * x * x * x;
        ss_res += (curve.pd[g] - fitted) * (curve.pd[g] - fitted);
        ss_tot += (curve.pd[g] - mean) * (curve.pd[g] - mean);
    }
    EXPECT_GT(1.0 - ss_res / ss_tot, 0.999);
    EXPECT_NEAR(poly[3], c, 1e-8);
    EXPECT_NEAR(poly[1], 0.0, 1e-6);
}

TEST(PdIce, IcePassesThroughObservedPrediction) {
    const Dataset d = dataset(5);
    const Coefficients coef{40.0, -120.0, 15.0, 3.0, 25.0, 2.0};
    const PosteriorFit fit = svx_fit(d.frame, coef);
    const MeanModel m = mean_model_of(fit);
    const PdCurve t = pd_ice(fit, d.frame, PdFeature::Temperature);
    const auto& temps = d.frame.temp_lag();
    for (std::size_t i = 0; i < d.size(); ++i) {
        for (std::size_t g : {std::size_t{0}, t.grid.size() - 1}) {
            if (temps[i] == t.grid[g]) {
                EXPECT_EQ(t.ice(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(g)), m.mean(coef, d.frame.row(i)));
            }
        }
    }
    const PdCurve w = pd_ice(fit, d.frame, PdFeature::Weekday);
    for (std::size_t i = 0; i < d.size(); ++i) {
        const auto g = static_cast<Eigen::Index>(d.frame.weekday()[i]);
        EXPECT_EQ(w.ice(static_cast<Eigen::Index>(i), g), m.mean(coef, d.frame.row(i)));
    }
}

TEST(PdIce, CorrelatedFeaturesWarn) {
    const Dataset d = dataset(6, 60);
    std::vector<double> temps(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) temps[i] = 3.0 * d.frame.weekday()[i] + 0.1 * static_cast<double>(i % 2);
    const auto frame = ExogenousFrame::from_columns(d.frame.first_date(), d.frame.lag_price(), temps);
    const PdCurve curve = pd_ice(svx_fit(frame, Coefficients{1, 1, 1, 1, 1, 1}), frame, PdFeature::Temperature);
    EXPECT_GT(curve.feature_correlation.r, 0.9);
    EXPECT_TRUE(curve.correlation_warning);
}

TEST(PdIce, BaselineFitHasNoFeatures) {
    const Dataset d = dataset(7);
    PosteriorFit fit = svx_fit(d.frame, Coefficients{});
    fit.train.family = "baseline";
    try {
        pd_ice(fit, d.frame, PdFeature::Temperature);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::FeatureNotInModel);
    }
}

TEST(PdIce, CsvExports) {
    const Dataset d = dataset(8, 30);
    const PdCurve curve = pd_ice(svx_fit(d.frame, Coefficients{1, 2, 3, 4, 5, 6}), d.frame, PdFeature::Weekday);
    std::ostringstream pd, ice;
    write_pd_csv(pd, curve);
    write_ice_csv(ice, curve);
    const std::string pd_text = pd.str();
    const std::string ice_text = ice.str();
    EXPECT_EQ(pd_text.rfind("grid,pd\n", 0), 0u);
    EXPECT_EQ(std::count(pd_text.begin(), pd_text.end(), '\n'), 8);
    EXPECT_EQ(std::count(ice_text.begin(), ice_text.end(), '\n'), static_cast<long>(1 + 7 * d.size()));
}

TEST(Residuals, PerfectPrediction) {
    const std::vector<double> y{1, 2, 3, 4, 5};
    const ResidualReport r = residual_report(y, y);
    for (double e : r.residuals) EXPECT_EQ(e, 0.0);
    EXPECT_TRUE(r.residual_vs_predicted.zero_variance);
    EXPECT_EQ(r.residual_vs_predicted.r, 0.0);
    EXPECT_DOUBLE_EQ(r.predicted_vs_actual.r, 1.0);
}

TEST(Residuals, GaussianProbabilityPlot) {
    Rng rng = make_rng(9);
    std::vector<double> actual(1000), predicted(1000);
    for (std::size_t i = 0; i < actual.size(); ++i) {
        predicted[i] = 1000.0 + 50.0 * std_normal(rng);
        actual[i] = predicted[i] + std_normal(rng);
    }
    const ResidualReport r = residual_report(actual, predicted);
    EXPECT_GT(r.quantile_correlation.r, 0.99);
    EXPECT_NEAR(r.theoretical_quantiles[499], -r.theoretical_quantiles[500], 1e-12);
    EXPECT_NEAR(r.theoretical_quantiles[0], -3.2905267314918945, 1e-9);  // Phi^-1(0.0005)
    for (std::size_t i = 1; i < r.ordered_residuals.size(); ++i) {
        EXPECT_LE(r.ordered_residuals[i - 1], r.ordered_residuals[i]);
    }
}

TEST(Residuals, AntiCorrelated) {
    const std::vector<double> predicted{1, 2, 3, 4, 5, 6};
    std::vector<double> actual(predicted.size(), 0.0);  // residual = -predicted
    const ResidualReport r = residual_report(actual, predicted);
    EXPECT_NEAR(r.residual_vs_predicted.r, -1.0, 1e-15);
    std::ostringstream out;
    write_residual_csv(out, r, predicted);
    EXPECT_EQ(out.str().rfind("index,predicted,residual,theoretical_quantile,ordered_residual\n", 0), 0u);
}

TEST(Residuals, LengthMismatch) {
    const std::vector<double> a{1, 2};
    const std::vector<double> b{1};
    try {
        residual_report(a, b);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::LengthMismatch);
    }
}
