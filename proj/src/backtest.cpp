#include "spotvol/backtest.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>

#include "spotvol/error.hpp"
#include "spotvol/random.hpp"
#include "parallel.hpp"

namespace spotvol {

namespace {

void check_lengths(std::span<const double> actual, std::span<const double> predicted) {
    if (actual.size() != predicted.size()) {
        throw Error(ErrorKind::LengthMismatch, "actual has " + std::to_string(actual.size()) + " values, predicted " +
                                                   std::to_string(predicted.size()));
    }
    if (actual.empty()) throw Error(ErrorKind::LengthMismatch, "metrics need at least one value");
}

std::string number(double v) {
    if (!std::isfinite(v)) return "nan";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

FamilyComparison compare(std::vector<double> baseline, std::vector<double> svx, const MwuOptions& mwu) {
    FamilyComparison c;
    c.baseline_mean = mean_of(baseline);
    c.svx_mean = mean_of(svx);
    if (!baseline.empty() && !svx.empty()) c.test = mwu_test(baseline, svx, mwu);
    c.baseline = std::move(baseline);
    c.svx = std::move(svx);
    return c;
}

nlohmann::json comparison_json(const FamilyComparison& c) {
    nlohmann::json j;
    j["baseline"] = c.baseline;
    j["svx"] = c.svx;
    j["baseline_mean"] = c.baseline_mean;
    j["svx_mean"] = c.svx_mean;
    if (c.test) {
        j["mwu"] = {{"u", c.test->u_statistic},
                    {"p_value", c.test->p_value},
                    {"null_mean", c.test->null_mean},
                    {"null_sd", c.test->null_sd},
                    {"method", c.test->method == MwuMethod::ExactPermutation        ? "exact"
                               : c.test->method == MwuMethod::MonteCarloPermutation ? "monte_carlo"
                                                                                    : "normal"}};
    } else {
        j["mwu"] = nullptr;
    }
    return j;
}

nlohmann::json report_json(const MetricReport& r) {
    return {{"fold_id", r.fold_id}, {"model_id", r.model_id}, {"zone", std::string(to_string(r.zone))},
            {"hour", r.hour},       {"n", r.n},               {"mae", r.mae},
            {"rmse", r.rmse},       {"failed", r.failed},     {"error", r.error}};
}

}  // namespace

double mae(std::span<const double> actual, std::span<const double> predicted_mean) {
    check_lengths(actual, predicted_mean);
    double s = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) s += std::abs(actual[i] - predicted_mean[i]);
    return s / static_cast<double>(actual.size());
}

double rmse(std::span<const double> actual, std::span<const double> predicted_mean) {
    check_lengths(actual, predicted_mean);
    double s = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        const double e = actual[i] - predicted_mean[i];
        s += e * e;
    }
    return std::sqrt(s / static_cast<double>(actual.size()));
}

Dataset Dataset::make(const PriceSeries& prices, const TemperatureSeries& temps) {
    ExogenousFrame frame = ExogenousFrame::from_series(prices, temps);
    const auto offset = static_cast<std::size_t>((frame.first_date() - prices.first_date()).count());
    return {prices.slice(offset, frame.size()), std::move(frame)};
}

std::string Dataset::id() const {
    return std::string(to_string(prices.zone())) + "-h" + std::to_string(prices.hour());
}

Dataset Dataset::slice(std::size_t begin, std::size_t count) const {
    return {prices.slice(begin, count), frame.slice(begin, count)};
}

std::string model_id(ModelFamily family, const Dataset& data) {
    return std::string(to_string(family)) + "-" + data.id();
}

FitForecast fit_and_forecast(const Dataset& data, ModelFamily family, std::size_t train_begin,
                             std::size_t train_days, int horizon, const BacktestConfig& cfg, std::uint64_t seed) {
    if (horizon <= 0) throw Error(ErrorKind::HorizonZero, "forecast horizon must be positive");
    const std::size_t test_begin = train_begin + train_days;
    if (test_begin + static_cast<std::size_t>(horizon) > data.size()) {
        throw Error(ErrorKind::InsufficientFutureData, "data ends before day " +
                                                           std::to_string(test_begin + static_cast<std::size_t>(horizon)));
    }
    const Dataset train = data.slice(train_begin, train_days);
    const ExogenousFrame future = data.frame.slice(test_begin, static_cast<std::size_t>(horizon));

    FitForecast out;
    if (family == ModelFamily::Baseline) {
        const SvBaselineModel model(train.prices.values(), cfg.svx.priors);
        out.fit = sample(model, cfg.sampler, seed);
        record_training(out.fit, model, &train.prices);
    } else {
        const SvxModel model(train.prices, train.frame, cfg.svx);
        out.fit = sample(model, cfg.sampler, seed);
        record_training(out.fit, model, &train.prices);
    }
    PredictOptions predict = cfg.predict;
    predict.seed = seed;
    out.forecast = forecast(out.fit, &future, horizon, predict);
    return out;
}

void check_no_leakage(const FoldPlan& plan) {
    for (std::size_t k = 0; k < plan.folds.size(); ++k) {
        const Fold& f = plan.folds[k];
        if (f.train_end >= f.test_start || f.train_start > f.train_end || f.test_start > f.test_end) {
            throw Error(ErrorKind::InvalidConfig, "fold " + std::to_string(k) + " train window overlaps its test window");
        }
    }
}

CvSummary cross_validate(std::span<const Dataset> data, const FoldPlan& plan, const BacktestConfig& cfg) {
    check_no_leakage(plan);
    validate(cfg.sampler);
    for (const auto& d : data) {
        if (d.size() < static_cast<std::size_t>(plan.total_days)) {
            throw Error(ErrorKind::InsufficientData, d.id() + " has " + std::to_string(d.size()) + " days, plan needs " +
                                                         std::to_string(plan.total_days));
        }
    }

    const std::size_t n_folds = plan.folds.size();
    const std::size_t n_families = cfg.families.size();
    const std::size_t n_tasks = data.size() * n_families * n_folds;
    std::vector<MetricReport> reports(n_tasks);

    BacktestConfig inner = cfg;
    if (detail::resolve_workers(cfg.workers) > 1) inner.sampler.workers = 1;

    detail::parallel_for(n_tasks, cfg.workers, [&](std::size_t task) {
        const std::size_t k = task % n_folds;
        const std::size_t f = (task / n_folds) % n_families;
        const std::size_t d = task / (n_folds * n_families);
        const Dataset& ds = data[d];
        const ModelFamily family = cfg.families[f];
        const Fold& fold = plan.folds[k];
        MetricReport& r = reports[task];
        r.model_id = model_id(family, ds);
        r.hour = ds.prices.hour();
        r.zone = ds.prices.zone();
        r.fold_id = static_cast<int>(k);
        const auto train_begin = static_cast<std::size_t>(fold.train_start);
        const auto train_days = static_cast<std::size_t>(fold.train_end - fold.train_start + 1);
        const int horizon = fold.test_end - fold.test_start + 1;
        const std::uint64_t seed = derive_seed(cfg.seed, {d, static_cast<std::uint64_t>(family), k});
        try {
            const FitForecast ff = fit_and_forecast(ds, family, train_begin, train_days, horizon, inner, seed);
            const auto& y = ds.prices.values();
            const std::span<const double> actual(y.data() + fold.test_start, static_cast<std::size_t>(horizon));
            r.mae = mae(actual, ff.forecast.mean);
            r.rmse = rmse(actual, ff.forecast.mean);
            r.n = static_cast<std::size_t>(horizon);
        } catch (const Error& e) {
            r.failed = true;
            r.error = e.what();
            r.mae = r.rmse = std::numeric_limits<double>::quiet_NaN();
        }
    });

    CvSummary summary;
    summary.plan = plan;
    std::vector<double> mae_base, mae_svx, rmse_base, rmse_svx;
    for (std::size_t d = 0; d < data.size(); ++d) {
        for (std::size_t f = 0; f < n_families; ++f) {
            CombinationResult c;
            c.family = cfg.families[f];
            c.model_id = model_id(c.family, data[d]);
            c.zone = data[d].prices.zone();
            c.hour = data[d].prices.hour();
            std::vector<double> maes, rmses;
            for (std::size_t k = 0; k < n_folds; ++k) {
                const MetricReport& r = reports[(d * n_families + f) * n_folds + k];
                c.folds.push_back(r);
                if (r.failed) {
                    ++c.failed;
                    continue;
                }
                ++c.succeeded;
                maes.push_back(r.mae);
                rmses.push_back(r.rmse);
            }
            c.mean_mae = mean_of(maes);
            c.mean_rmse = mean_of(rmses);
            auto& pool_mae = c.family == ModelFamily::Baseline ? mae_base : mae_svx;
            auto& pool_rmse = c.family == ModelFamily::Baseline ? rmse_base : rmse_svx;
            pool_mae.insert(pool_mae.end(), maes.begin(), maes.end());
            pool_rmse.insert(pool_rmse.end(), rmses.begin(), rmses.end());
            summary.failed_folds += c.failed;
            summary.combinations.push_back(std::move(c));
        }
    }
    summary.mae = compare(std::move(mae_base), std::move(mae_svx), cfg.mwu);
    summary.rmse = compare(std::move(rmse_base), std::move(rmse_svx), cfg.mwu);
    return summary;
}

RollingResult rolling_forecast(const Dataset& data, ModelFamily family, std::size_t train_begin,
                               std::size_t train_days, int horizon_days, const BacktestConfig& cfg) {
    if (horizon_days <= 0) throw Error(ErrorKind::HorizonZero, "rolling horizon must be positive");
    const std::size_t end = train_begin + train_days + static_cast<std::size_t>(horizon_days);
    if (end > data.size()) {
        throw Error(ErrorKind::InsufficientFutureData,
                    "rolling forecast needs " + std::to_string(end) + " days, data has " + std::to_string(data.size()));
    }
    validate(cfg.sampler);
    const auto steps = static_cast<std::size_t>(horizon_days);
    RollingResult result;
    result.model_id = model_id(family, data);
    result.steps.resize(steps);
    std::vector<ForecastSet> sets(steps);

    BacktestConfig inner = cfg;
    if (detail::resolve_workers(cfg.workers) > 1) inner.sampler.workers = 1;

    detail::parallel_for(steps, cfg.workers, [&](std::size_t k) {
        RollingStep& s = result.steps[k];
        s.train_begin = train_begin + k;
        s.train_end = s.train_begin + train_days - 1;
        s.target = s.train_end + 1;
        s.seed = derive_seed(cfg.seed, {k});
        sets[k] = fit_and_forecast(data, family, s.train_begin, train_days, 1, inner, s.seed).forecast;
    });

    ForecastSet& out = result.forecast;
    const Eigen::Index n_draws = sets.front().draws.rows();
    out.draws.resize(n_draws, horizon_days);
    out.h_draws.resize(n_draws, horizon_days);
    for (std::size_t k = 0; k < steps; ++k) {
        out.draws.col(static_cast<Eigen::Index>(k)) = sets[k].draws.col(0);
        out.h_draws.col(static_cast<Eigen::Index>(k)) = sets[k].h_draws.col(0);
    }
    out.first_date = data.prices.date_at(result.steps.front().target);
    out.mode = cfg.predict.mode;
    out.vol_mode = cfg.predict.vol_mode;
    out.summarize();

    for (const auto& s : result.steps) result.actual.push_back(data.prices.values()[s.target]);
    MetricReport& r = result.report;
    r.model_id = result.model_id;
    r.hour = data.prices.hour();
    r.zone = data.prices.zone();
    r.n = steps;
    r.mae = mae(result.actual, out.mean);
    r.rmse = rmse(result.actual, out.mean);
    return result;
}

void write_cv_csv(std::ostream& out, const CvSummary& summary) {
    out << "model_id,family,zone,hour,fold_id,train_start,train_end,test_start,test_end,n,mae,rmse,status\n";
    for (const auto& c : summary.combinations) {
        for (const auto& r : c.folds) {
            const Fold& f = summary.plan.folds[static_cast<std::size_t>(r.fold_id)];
            out << c.model_id << ',' << to_string(c.family) << ',' << to_string(c.zone) << ',' << c.hour << ','
                << r.fold_id << ',' << f.train_start << ',' << f.train_end << ',' << f.test_start << ',' << f.test_end
                << ',' << r.n << ',' << number(r.mae) << ',' << number(r.rmse) << ',' << (r.failed ? "failed" : "ok")
                << '\n';
        }
    }
}

nlohmann::json cv_to_json(const CvSummary& summary) {
    nlohmann::json j;
    j["plan"] = {{"total_days", summary.plan.total_days},
                 {"train_days", summary.plan.train_days},
                 {"test_days", summary.plan.test_days},
                 {"folds", summary.plan.folds.size()}};
    auto& combos = j["combinations"] = nlohmann::json::array();
    for (const auto& c : summary.combinations) {
        nlohmann::json cj;
        cj["model_id"] = c.model_id;
        cj["family"] = std::string(to_string(c.family));
        cj["zone"] = std::string(to_string(c.zone));
        cj["hour"] = c.hour;
        cj["succeeded"] = c.succeeded;
        cj["failed"] = c.failed;
        cj["mean_mae"] = c.mean_mae;
        cj["mean_rmse"] = c.mean_rmse;
        auto& folds = cj["folds"] = nlohmann::json::array();
        for (const auto& r : c.folds) folds.push_back(report_json(r));
        combos.push_back(std::move(cj));
    }
    j["failed_folds"] = summary.failed_folds;
    j["mae"] = comparison_json(summary.mae);
    j["rmse"] = comparison_json(summary.rmse);
    return j;
}

nlohmann::json rolling_to_json(const RollingResult& result) {
    nlohmann::json j;
    j["model_id"] = result.model_id;
    j["report"] = report_json(result.report);
    j["actual"] = result.actual;
    j["mean"] = result.forecast.mean;
    j["ci_low"] = result.forecast.ci_low;
    j["ci_high"] = result.forecast.ci_high;
    auto& steps = j["steps"] = nlohmann::json::array();
    for (const auto& s : result.steps) {
        steps.push_back({{"train_begin", s.train_begin}, {"train_end", s.train_end}, {"target", s.target}, {"seed", s.seed}});
    }
    return j;
}

}  // namespace spotvol
