#include "commands.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/core.h>
#include <spdlog/spdlog.h>

#include "spotvol/backtest.hpp"
#include "spotvol/error.hpp"
#include "spotvol/fit_io.hpp"
#include "spotvol/ingest.hpp"
#include "spotvol/interpret.hpp"
#include "spotvol/predictive.hpp"
#include "spotvol/stats.hpp"

namespace spotvol::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class Outputs {
public:
    explicit Outputs(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

    void write(const std::string& name, const std::string& content) {
        const fs::path path = dir_ / name;
        std::ofstream out(path, std::ios::binary);
        if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
        out << content;
        if (!out) throw Error(ErrorKind::IoError, "write failed for " + path.string());
        hashes_[name] = hex64(fnv1a(content));
        spdlog::debug("wrote {}", path.string());
    }

    const fs::path& dir() const { return dir_; }
    const std::map<std::string, std::string>& hashes() const { return hashes_; }

private:
    fs::path dir_;
    std::map<std::string, std::string> hashes_;
};

const DatasetConfig& primary_dataset(const RunConfig& cfg) {
    if (cfg.datasets.empty()) throw Error(ErrorKind::InvalidConfig, "missing key 'datasets'");
    return cfg.datasets.front();
}

void require_weather(const DatasetConfig& dc, std::size_t index) {
    if (!dc.weather) {
        throw Error(ErrorKind::InvalidConfig, "missing key 'datasets[" + std::to_string(index) + "].weather'");
    }
}

/// Prices of one hour joined with the temperatures of the same hour. Without a
/// weather file the temperature columns are zero (baseline runs only).
Dataset load_dataset(const DatasetConfig& dc, int hour) {
    spdlog::info("loading {} hour {} from {}", to_string(dc.zone), hour, dc.prices.string());
    const PriceSeries prices = select_hour(load_prices(dc.prices), hour, dc.zone);
    if (dc.weather) {
        const PriceSeries temps = select_hour(load_weather(*dc.weather), hour, dc.zone);
        return Dataset::make(prices, temps);
    }
    const PriceSeries zeros(prices.first_date(), std::vector<double>(prices.size(), 0.0), hour, dc.zone);
    return Dataset::make(prices, zeros);
}

std::size_t offset_of(const Dataset& data, Date date) {
    const auto diff = (date - data.prices.first_date()).count();
    if (diff < 0 || static_cast<std::size_t>(diff) >= data.size()) {
        throw Error(ErrorKind::InsufficientData, format_date(date) + " is outside the data range " +
                                                     format_date(data.prices.first_date()) + " .. " +
                                                     format_date(data.prices.last_date()));
    }
    return static_cast<std::size_t>(diff);
}

std::string csv_number(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

bool is_latent(const std::string& name) { return name.rfind("h[", 0) == 0; }

json fit_report(const PosteriorFit& fit) {
    json params = json::array();
    for (std::size_t i = 0; i < fit.param_names.size(); ++i) {
        if (is_latent(fit.param_names[i])) continue;
        const auto& s = fit.summary[i];
        json p = {{"name", fit.param_names[i]}, {"mean", s.mean}, {"sd", s.sd},
                  {"q025", s.q025},           {"q50", s.q50},   {"q975", s.q975}};
        if (i < fit.diagnostics.rhat.size()) p["rhat"] = fit.diagnostics.rhat[i];
        if (i < fit.diagnostics.ess.size()) p["ess"] = fit.diagnostics.ess[i];
        params.push_back(std::move(p));
    }
    json report = {{"family", fit.train.family},
                   {"zone", fit.train.zone},
                   {"hour", fit.train.hour},
                   {"first_date", fit.train.first_date},
                   {"last_date", fit.train.last_date},
                   {"n_obs", fit.train.n_obs},
                   {"parameters", params},
                   {"warnings", fit.diagnostics.warnings}};
    if (fit.train.family == "svx") {
        json raw = json::array();
        for (const auto& c : raw_coefficients(fit, standardizer_of(fit))) {
            raw.push_back({{"name", c.name}, {"mean", c.summary.mean}, {"sd", c.summary.sd},
                           {"q025", c.summary.q025}, {"q975", c.summary.q975}});
        }
        report["raw_coefficients"] = std::move(raw);
    }
    double worst = 1.0;
    for (double r : fit.diagnostics.rhat) {
        if (std::isfinite(r)) worst = std::max(worst, r);
    }
    report["max_rhat"] = worst;
    return report;
}

void print_fit_summary(const json& report) {
    fmt::print("{} fit, {} hour {}, {} .. {} ({} days)\n", report["family"].get<std::string>(),
               report["zone"].get<std::string>(), report["hour"].get<int>(),
               report["first_date"].get<std::string>(), report["last_date"].get<std::string>(),
               report["n_obs"].get<std::size_t>());
    fmt::print("{:<18} {:>12} {:>12} {:>8}\n", "parameter", "mean", "sd", "rhat");
    for (const auto& p : report["parameters"]) {
        fmt::print("{:<18} {:>12.5g} {:>12.5g} {:>8.4f}\n", p["name"].get<std::string>(), p["mean"].get<double>(),
                   p["sd"].get<double>(), p.value("rhat", 1.0));
    }
    if (report.contains("raw_coefficients")) {
        fmt::print("raw-scale coefficients:\n");
        for (const auto& c : report["raw_coefficients"]) {
            fmt::print("{:<18} {:>12.5g} {:>12.5g}\n", c["name"].get<std::string>(), c["mean"].get<double>(),
                       c["sd"].get<double>());
        }
    }
    fmt::print("max R-hat {:.4f}\n", report["max_rhat"].get<double>());
    for (const auto& w : report["warnings"]) fmt::print("warning: {}\n", w.get<std::string>());
}

BacktestConfig backtest_config(const RunConfig& cfg) {
    BacktestConfig bt;
    bt.sampler = cfg.sampler;
    bt.sampler.workers = cfg.workers;
    bt.predict.n_draws = cfg.forecast.n_draws;
    bt.predict.mode = cfg.forecast.mode;
    bt.predict.vol_mode = cfg.forecast.vol_mode;
    bt.svx.priors = cfg.priors;
    bt.families = cfg.families;
    bt.workers = cfg.workers;
    bt.seed = cfg.seed;
    return bt;
}

// ---------------------------------------------------------------------------

int cmd_fit(const Invocation& inv, Outputs& out) {
    const RunConfig& cfg = inv.config;
    const DatasetConfig& dc = primary_dataset(cfg);
    if (cfg.model == ModelFamily::Svx) require_weather(dc, 0);
    const Dataset data = load_dataset(dc, dc.hours.front());
    const std::size_t begin = cfg.fit.first_date ? offset_of(data, *cfg.fit.first_date) : 0;
    const std::size_t days = cfg.fit.train_days ? static_cast<std::size_t>(*cfg.fit.train_days) : data.size() - begin;
    if (begin + days > data.size()) {
        throw Error(ErrorKind::InsufficientData, "fit window runs past the end of the data");
    }
    const Dataset train = data.slice(begin, days);
    SamplerConfig sampler = cfg.sampler;
    sampler.workers = cfg.workers;
    spdlog::info("fitting {} on {} days ({} chains, {} warmup, {} draws)", to_string(cfg.model), days, sampler.chains,
                 sampler.warmup, sampler.draws);

    PosteriorFit fit;
    if (cfg.model == ModelFamily::Baseline) {
        const SvBaselineModel model(train.prices.values(), cfg.priors);
        fit = sample(model, sampler, cfg.seed);
        record_training(fit, model, &train.prices);
    } else {
        SvxOptions opts;
        opts.priors = cfg.priors;
        opts.pin_constant_columns = true;
        const SvxModel model(train.prices, train.frame, opts);
        fit = sample(model, sampler, cfg.seed);
        record_training(fit, model, &train.prices);
    }
    out.write("fit.json", fit_to_json(fit).dump() + "\n");
    const json report = fit_report(fit);
    out.write("fit_summary.json", report.dump(2) + "\n");
    print_fit_summary(report);
    return fit.diagnostics.rhat_warning ? kWarnings : kOk;
}

int cmd_forecast(const Invocation& inv, Outputs& out) {
    const RunConfig& cfg = inv.config;
    if (!inv.fit_path) throw Error(ErrorKind::InvalidConfig, "forecast needs --fit");
    const PosteriorFit fit = load_fit(*inv.fit_path);
    if (fit.train.family != to_string(cfg.model)) {
        throw Error(ErrorKind::IncompatibleFit, "fit is " + fit.train.family + ", config requests " +
                                                    std::string(to_string(cfg.model)));
    }
    const DatasetConfig& dc = primary_dataset(cfg);
    if (cfg.model == ModelFamily::Svx) require_weather(dc, 0);
    if (fit.train.hour != dc.hours.front() || fit.train.zone != to_string(dc.zone)) {
        throw Error(ErrorKind::IncompatibleFit, "fit was trained on " + fit.train.zone + " hour " +
                                                    std::to_string(fit.train.hour));
    }
    const Dataset data = load_dataset(dc, dc.hours.front());
    const auto last = parse_date(fit.train.last_date);
    if (!last) throw Error(ErrorKind::InvalidFit, "fit has no training end date");
    const Date start = *last + std::chrono::days(1);
    const auto begin_diff = (start - data.prices.first_date()).count();
    const int horizon = cfg.forecast.horizon;

    std::optional<ExogenousFrame> future;
    std::vector<double> actual;
    if (begin_diff >= 0 && static_cast<std::size_t>(begin_diff) < data.size()) {
        const auto begin = static_cast<std::size_t>(begin_diff);
        const std::size_t available = std::min(data.size() - begin, static_cast<std::size_t>(horizon));
        future = data.frame.slice(begin, available);
        if (available == static_cast<std::size_t>(horizon)) {
            actual.assign(data.prices.values().begin() + static_cast<std::ptrdiff_t>(begin),
                          data.prices.values().begin() + static_cast<std::ptrdiff_t>(begin + available));
        }
    }
    PredictOptions opts;
    opts.n_draws = cfg.forecast.n_draws;
    opts.mode = cfg.forecast.mode;
    opts.vol_mode = cfg.forecast.vol_mode;
    opts.seed = cfg.seed;
    spdlog::info("forecasting {} days from {} ({} draws, {} mode)", horizon, format_date(start), opts.n_draws,
                 to_string(opts.mode));
    const ForecastSet set = forecast(fit, future ? &*future : nullptr, horizon, opts);
    const std::vector<double>* act = actual.empty() ? nullptr : &actual;
    std::ostringstream csv;
    write_forecast_csv(csv, set, act);
    out.write("forecast.csv", csv.str());
    std::ostringstream js;
    write_forecast_json(js, set, act);
    out.write("forecast.json", js.str());

    fmt::print("{:<12} {:>12} {:>12} {:>12}\n", "date", "mean", "ci_low", "ci_high");
    for (std::size_t k = 0; k < set.horizon(); ++k) {
        fmt::print("{:<12} {:>12.2f} {:>12.2f} {:>12.2f}\n", format_date(start + std::chrono::days(k)), set.mean[k],
                   set.ci_low[k], set.ci_high[k]);
    }
    if (act) fmt::print("MAE {:.4f}  RMSE {:.4f}\n", mae(actual, set.mean), rmse(actual, set.mean));
    return kOk;
}

int cmd_cv(const Invocation& inv, Outputs& out) {
    const RunConfig& cfg = inv.config;
    if (cfg.datasets.empty()) throw Error(ErrorKind::InvalidConfig, "missing key 'datasets'");
    const bool needs_weather =
        std::find(cfg.families.begin(), cfg.families.end(), ModelFamily::Svx) != cfg.families.end();
    for (std::size_t i = 0; i < cfg.datasets.size(); ++i) {
        if (needs_weather) require_weather(cfg.datasets[i], i);
    }
    const FoldPlan plan = build_folds(cfg.folds.total_days, cfg.folds.train_days, cfg.folds.test_days);
    std::vector<Dataset> data;
    for (const auto& dc : cfg.datasets) {
        for (int hour : dc.hours) data.push_back(load_dataset(dc, hour));
    }
    spdlog::info("cross-validating {} dataset(s) x {} famil(ies) x {} fold(s)", data.size(), cfg.families.size(),
                 plan.folds.size());
    const CvSummary summary = cross_validate(data, plan, backtest_config(cfg));
    out.write("cv_summary.json", cv_to_json(summary).dump(2) + "\n");
    std::ostringstream csv;
    write_cv_csv(csv, summary);
    out.write("cv_folds.csv", csv.str());

    fmt::print("{:<22} {:>6} {:>6} {:>12} {:>12}\n", "model", "ok", "failed", "mean MAE", "mean RMSE");
    for (const auto& c : summary.combinations) {
        fmt::print("{:<22} {:>6} {:>6} {:>12.4f} {:>12.4f}\n", c.model_id, c.succeeded, c.failed, c.mean_mae,
                   c.mean_rmse);
    }
    for (const auto& [name, cmp] : {std::pair{"MAE", &summary.mae}, std::pair{"RMSE", &summary.rmse}}) {
        if (cmp->test) {
            fmt::print("{}: baseline {:.4f} vs svx {:.4f}, U = {:.1f}, one-tailed p = {:.4g}\n", name,
                       cmp->baseline_mean, cmp->svx_mean, cmp->test->u_statistic, cmp->test->p_value);
        }
    }
    if (summary.failed_folds > 0) fmt::print("warning: {} fold(s) failed\n", summary.failed_folds);
    return summary.failed_folds == 0 ? kOk : kWarnings;
}

int cmd_diagnose(const Invocation& inv, Outputs& out) {
    const RunConfig& cfg = inv.config;
    const DatasetConfig& dc = primary_dataset(cfg);
    const Dataset data = load_dataset(dc, dc.hours.front());
    const auto& y = data.prices.values();
    const auto& dg = cfg.diagnose;
    int status = kOk;
    json report;
    report["zone"] = std::string(to_string(dc.zone));
    report["hour"] = dc.hours.front();
    report["n_days"] = data.size();

    const AdfResult adf = adf_test(y, std::nullopt, dg.adf_alpha);
    report["adf"] = {{"statistic", adf.statistic},
                     {"p_value", adf.p_value},
                     {"lags", adf.n_lags_used},
                     {"n_obs", adf.n_obs},
                     {"critical_values", {{"1%", adf.critical_values[0]}, {"5%", adf.critical_values[1]},
                                          {"10%", adf.critical_values[2]}}},
                     {"conclusion", adf.conclusion == Stationarity::Stationary ? "Stationary" : "NonStationary"}};
    fmt::print("ADF statistic {:.4f}, p = {:.4g}, {} lag(s): {}\n", adf.statistic, adf.p_value, adf.n_lags_used,
               report["adf"]["conclusion"].get<std::string>());

    const int max_lag = std::min(dg.pacf_lags, static_cast<int>((y.size() - 1) / 4));
    const auto pa = pacf(y, max_lag);
    const auto dl = pacf_durbin_levinson(y, max_lag);
    std::ostringstream pcsv;
    pcsv << "lag,pacf,pacf_durbin_levinson\n";
    for (int k = 0; k <= max_lag; ++k) {
        pcsv << k << ',' << csv_number(pa[static_cast<std::size_t>(k)]) << ','
             << csv_number(dl[static_cast<std::size_t>(k)]) << '\n';
    }
    out.write("pacf.csv", pcsv.str());
    report["pacf"] = pa;
    fmt::print("PACF lag 1 = {:.4f}, lag 2 = {:.4f}\n", pa[1], max_lag >= 2 ? pa[2] : 0.0);

    if (dc.weather) {
        std::vector<Point2> points(data.size());
        for (std::size_t i = 0; i < data.size(); ++i) points[i] = {data.frame.temp_lag()[i], y[i]};
        const KMeansResult km = kmeans2(points, derive_seed(cfg.seed, {0x6b}), dg.kmeans_restarts);
        const auto cubic = polyfit_cubic(data.frame.temp_lag(), y);
        report["kmeans"] = {{"centroids", km.centroids},
                            {"sizes", km.sizes},
                            {"correlation", {km.correlation[0].r, km.correlation[1].r}},
                            {"inertia", km.inertia}};
        report["temperature_cubic"] = cubic;
        std::ostringstream kcsv;
        kcsv << "temp_lag,price,cluster\n";
        for (std::size_t i = 0; i < points.size(); ++i) {
            kcsv << csv_number(points[i][0]) << ',' << csv_number(points[i][1]) << ',' << km.labels[i] << '\n';
        }
        out.write("kmeans.csv", kcsv.str());
        fmt::print("k-means clusters: sizes {} / {}, r = {:.3f} / {:.3f}\n", km.sizes[0], km.sizes[1],
                   km.correlation[0].r, km.correlation[1].r);
    }

    if (inv.fit_path) {
        const PosteriorFit fit = load_fit(*inv.fit_path);
        const auto first = parse_date(fit.train.first_date);
        if (!first) throw Error(ErrorKind::InvalidFit, "fit has no training start date");
        const std::size_t begin = offset_of(data, *first);
        if (begin + fit.train.n_obs > data.size()) {
            throw Error(ErrorKind::IncompatibleFit, "fit window is not covered by the data");
        }
        const Dataset train = data.slice(begin, fit.train.n_obs);
        const MeanModel mm = mean_model_of(fit);
        const Coefficients coef = posterior_mean_coefficients(fit);
        std::vector<double> predicted(train.size());
        for (std::size_t t = 0; t < train.size(); ++t) predicted[t] = mm.mean(coef, train.frame.row(t));
        const ResidualReport rr = residual_report(train.prices.values(), predicted);
        std::ostringstream rcsv;
        write_residual_csv(rcsv, rr, predicted);
        out.write("residuals.csv", rcsv.str());
        report["residuals"] = {{"quantile_correlation", rr.quantile_correlation.r},
                               {"residual_vs_predicted", rr.residual_vs_predicted.r},
                               {"residual_vs_predicted_zero_variance", rr.residual_vs_predicted.zero_variance},
                               {"predicted_vs_actual", rr.predicted_vs_actual.r}};
        fmt::print("residuals: probability-plot r = {:.4f}, r(resid, pred) = {:.4f}, r(pred, actual) = {:.4f}\n",
                   rr.quantile_correlation.r, rr.residual_vs_predicted.r, rr.predicted_vs_actual.r);
        if (fit.train.family == "svx") {
            for (PdFeature feature : {PdFeature::Temperature, PdFeature::Weekday}) {
                const PdCurve curve = pd_ice(fit, train.frame, feature, dg.pd_grid, cfg.workers);
                const std::string name(to_string(feature));
                std::ostringstream pd;
                write_pd_csv(pd, curve);
                out.write("pd_" + name + ".csv", pd.str());
                std::ostringstream ice;
                write_ice_csv(ice, curve);
                out.write("ice_" + name + ".csv", ice.str());
                report["pd"][name] = {{"grid", curve.grid}, {"pd", curve.pd}};
                report["feature_correlation"] = curve.feature_correlation.r;
                if (curve.correlation_warning) status = kWarnings;
            }
            fmt::print("temperature / weekday correlation r = {:.4f}\n", report["feature_correlation"].get<double>());
            if (status == kWarnings) fmt::print("warning: features are correlated, PD curves may mislead\n");
        }
    }
    out.write("diagnose.json", report.dump(2) + "\n");
    return status;
}

int cmd_synth(const Invocation& inv, Outputs& out) {
    const RunConfig& cfg = inv.config;
    if (!cfg.synth) throw Error(ErrorKind::InvalidConfig, "missing key 'synth'");
    spdlog::info("synthesizing {} days", cfg.synth->n_days);
    const SynthResult res = synthesize(*cfg.synth);
    std::ostringstream prices;
    write_hourly_csv(prices, res.prices, CsvSchema::prices());
    out.write("prices.csv", prices.str());
    std::ostringstream weather;
    write_hourly_csv(weather, res.temps, CsvSchema::weather());
    out.write("weather.csv", weather.str());
    std::vector<HourlyRecord> latent;
    for (int hour = 0; hour < 24; ++hour) {
        const auto& h = res.h[static_cast<std::size_t>(hour)];
        for (std::size_t d = 0; d < h.size(); ++d) {
            latent.push_back({cfg.synth->start_date + std::chrono::days(d), hour, h[d]});
        }
    }
    std::ostringstream hcsv;
    write_hourly_csv(hcsv, HourlyTable(std::move(latent)), {"date", "hour", "h"});
    out.write("latent_h.csv", hcsv.str());
    fmt::print("wrote {} days x 24 hours to {}\n", cfg.synth->n_days, out.dir().string());
    return kOk;
}

int cmd_report(const Invocation& inv, Outputs& out) {
    if (!inv.fit_path) throw Error(ErrorKind::InvalidConfig, "report needs --fit");
    const PosteriorFit fit = load_fit(*inv.fit_path);
    const json report = fit_report(fit);
    out.write("report.json", report.dump(2) + "\n");
    std::ostringstream csv;
    csv << "name,mean,sd,q025,q50,q975,rhat,ess\n";
    for (const auto& p : report["parameters"]) {
        csv << p["name"].get<std::string>() << ',' << csv_number(p["mean"].get<double>()) << ','
            << csv_number(p["sd"].get<double>()) << ',' << csv_number(p["q025"].get<double>()) << ','
            << csv_number(p["q50"].get<double>()) << ',' << csv_number(p["q975"].get<double>()) << ','
            << csv_number(p.value("rhat", std::nan(""))) << ',' << csv_number(p.value("ess", std::nan(""))) << '\n';
    }
    out.write("report.csv", csv.str());
    print_fit_summary(report);
    return fit.diagnostics.rhat_warning ? kWarnings : kOk;
}

}  // namespace

int run(const Invocation& inv) {
    Outputs out(inv.out_dir);
    int status = kOk;
    if (inv.command == "fit") {
        status = cmd_fit(inv, out);
    } else if (inv.command == "forecast") {
        status = cmd_forecast(inv, out);
    } else if (inv.command == "cv") {
        status = cmd_cv(inv, out);
    } else if (inv.command == "diagnose") {
        status = cmd_diagnose(inv, out);
    } else if (inv.command == "synth") {
        status = cmd_synth(inv, out);
    } else if (inv.command == "report") {
        status = cmd_report(inv, out);
    } else {
        throw Error(ErrorKind::InvalidConfig, "unknown command '" + inv.command + "'");
    }
    const std::string config_text = inv.config.document.dump();
    json manifest = {{"tool", "spotvol"},
                     {"version", SPOTVOL_VERSION},
                     {"command", inv.command},
                     {"seed", inv.config.seed},
                     {"config_hash", hex64(fnv1a(config_text))},
                     {"config", inv.config.document},
                     {"fit", inv.fit_path ? json(fs::absolute(*inv.fit_path).lexically_normal().string()) : json()},
                     {"outputs", out.hashes()},
                     {"exit_code", status}};
    out.write("manifest.json", manifest.dump(2) + "\n");
    return status;
}

Invocation from_manifest(const fs::path& manifest, const std::optional<fs::path>& out_dir) {
    std::ifstream in(manifest);
    if (!in) throw Error(ErrorKind::IoError, "cannot open manifest " + manifest.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::InvalidConfig, manifest.string() + ": " + e.what());
    }
    if (!doc.contains("command") || !doc.contains("config")) {
        throw Error(ErrorKind::InvalidConfig, "manifest lacks command or config");
    }
    Invocation inv;
    inv.command = doc.at("command").get<std::string>();
    inv.config = parse_config(doc.at("config"));
    if (hex64(fnv1a(inv.config.document.dump())) != doc.value("config_hash", "")) {
        throw Error(ErrorKind::InvalidConfig, "manifest config does not match its hash");
    }
    inv.out_dir = out_dir ? *out_dir : inv.config.output_dir;
    if (doc.contains("fit") && doc.at("fit").is_string()) inv.fit_path = doc.at("fit").get<std::string>();
    return inv;
}

}  // namespace spotvol::cli
