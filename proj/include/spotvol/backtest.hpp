#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "spotvol/predictive.hpp"
#include "spotvol/sampler.hpp"
#include "spotvol/series.hpp"
#include "spotvol/stats.hpp"
#include "spotvol/sv_models.hpp"

namespace spotvol {

/// Mean absolute error.
double mae(std::span<const double> actual, std::span<const double> predicted_mean);
/// Root mean squared error.
double rmse(std::span<const double> actual, std::span<const double> predicted_mean);

struct MetricReport {
    double mae = 0.0;
    double rmse = 0.0;
    std::size_t n = 0;
    std::string model_id;
    int hour = 0;
    Zone zone = Zone::Zone1;
    int fold_id = 0;
    bool failed = false;
    std::string error;
};

/// One market hour of one zone: prices aligned row for row with the exogenous
/// frame (prices[i] is the target on frame.date_at(i)).
struct Dataset {
    PriceSeries prices;
    ExogenousFrame frame;

    static Dataset make(const PriceSeries& prices, const TemperatureSeries& temps);
    std::size_t size() const { return prices.size(); }
    std::string id() const;
    Dataset slice(std::size_t begin, std::size_t count) const;
};

struct BacktestConfig {
    SamplerConfig sampler;
    PredictOptions predict;
    SvxOptions svx{.priors = {}, .pinned = {}, .pin_constant_columns = true};
    std::vector<ModelFamily> families{ModelFamily::Baseline, ModelFamily::Svx};
    /// Worker threads for folds and combinations; 0 = hardware concurrency.
    int workers = 0;
    std::uint64_t seed = 1;
    MwuOptions mwu;
};

std::string model_id(ModelFamily family, const Dataset& data);

struct FitForecast {
    PosteriorFit fit;
    ForecastSet forecast;
};

/// Fits `family` on days [train_begin, train_begin + train_days) of data and
/// forecasts the next `horizon` days with teacher-forced regressors.
/// The sampler and the predictive draws share `seed`.
FitForecast fit_and_forecast(const Dataset& data, ModelFamily family, std::size_t train_begin,
                             std::size_t train_days, int horizon, const BacktestConfig& cfg, std::uint64_t seed);

struct CombinationResult {
    std::string model_id;
    ModelFamily family = ModelFamily::Baseline;
    Zone zone = Zone::Zone1;
    int hour = 0;
    /// One report per fold, failed folds included.
    std::vector<MetricReport> folds;
    std::size_t succeeded = 0;
    std::size_t failed = 0;
    /// Means over successful folds (NaN when none succeeded).
    double mean_mae = 0.0;
    double mean_rmse = 0.0;
};

struct FamilyComparison {
    /// Pooled successful fold metrics of each family.
    std::vector<double> baseline;
    std::vector<double> svx;
    double baseline_mean = 0.0;
    double svx_mean = 0.0;
    /// One-tailed test that the baseline values are shifted right (worse).
    std::optional<MwuResult> test;
};

struct CvSummary {
    FoldPlan plan;
    std::vector<CombinationResult> combinations;
    FamilyComparison mae;
    FamilyComparison rmse;
    std::size_t failed_folds = 0;
};

/// Sliding-window cross-validation of every dataset x family combination.
/// Fold offsets are relative to each dataset's first day. Failed fits are
/// recorded in their fold report and the run continues.
CvSummary cross_validate(std::span<const Dataset> data, const FoldPlan& plan, const BacktestConfig& cfg);

/// Throws InvalidConfig when a fold's train window reaches into its test window.
void check_no_leakage(const FoldPlan& plan);

struct RollingStep {
    std::size_t train_begin = 0;
    std::size_t train_end = 0;  // inclusive
    std::size_t target = 0;
    std::uint64_t seed = 0;
};

struct RollingResult {
    std::string model_id;
    ForecastSet forecast;  // horizon_days columns, one per step
    std::vector<double> actual;
    std::vector<RollingStep> steps;
    MetricReport report;
};

/// Day-ahead rolling forecast: fit on [train_begin, train_begin + train_days),
/// predict the next day, then advance the window by one day, horizon_days times.
/// Step k uses seed derive_seed(cfg.seed, {k}).
RollingResult rolling_forecast(const Dataset& data, ModelFamily family, std::size_t train_begin,
                               std::size_t train_days, int horizon_days, const BacktestConfig& cfg);

void write_cv_csv(std::ostream& out, const CvSummary& summary);
nlohmann::json cv_to_json(const CvSummary& summary);
nlohmann::json rolling_to_json(const RollingResult& result);

}  // namespace spotvol
