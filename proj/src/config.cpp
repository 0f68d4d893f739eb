#include "spotvol/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>

#include "spotvol/error.hpp"

namespace spotvol {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

[[noreturn]] void invalid(const std::string& key, const std::string& what) {
    throw Error(ErrorKind::InvalidConfig, "'" + key + "': " + what);
}

void check_keys(const json& obj, const std::string& where, std::initializer_list<std::string_view> allowed) {
    if (!obj.is_object()) invalid(where.empty() ? "<root>" : where, "expected an object");
    const std::set<std::string_view> keys(allowed);
    for (const auto& [key, value] : obj.items()) {
        if (!keys.contains(key)) invalid(where.empty() ? key : where + "." + key, "unknown key");
    }
}

std::string path_of(const std::string& where, const std::string& key) { return where.empty() ? key : where + "." + key; }

const json& require(const json& obj, const std::string& where, const std::string& key) {
    if (!obj.contains(key)) throw Error(ErrorKind::InvalidConfig, "missing key '" + path_of(where, key) + "'");
    return obj.at(key);
}

template <class T>
T get(const json& obj, const std::string& where, const std::string& key, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        invalid(path_of(where, key), "wrong type");
    }
}

double get_number(const json& obj, const std::string& where, const std::string& key, double fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj.at(key).is_number()) invalid(path_of(where, key), "expected a number");
    return obj.at(key).get<double>();
}

int get_int(const json& obj, const std::string& where, const std::string& key, int fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj.at(key).is_number_integer()) invalid(path_of(where, key), "expected an integer");
    return obj.at(key).get<int>();
}

fs::path resolve(const fs::path& base, const std::string& text) {
    fs::path p(text);
    if (p.is_relative() && !base.empty()) p = base / p;
    return p.lexically_normal();
}

fs::path existing_file(const fs::path& base, const json& value, const std::string& key) {
    if (!value.is_string()) invalid(key, "expected a path string");
    fs::path p = resolve(base, value.get<std::string>());
    if (!fs::is_regular_file(p)) invalid(key, "file not found: " + p.string());
    return fs::absolute(p).lexically_normal();
}

Date get_date(const json& obj, const std::string& where, const std::string& key) {
    const json& v = obj.at(key);
    std::optional<Date> d = v.is_string() ? parse_date(v.get<std::string>()) : std::nullopt;
    if (!d) invalid(path_of(where, key), "expected a YYYY-MM-DD date");
    return *d;
}

SamplerConfig parse_sampler(const json& obj) {
    check_keys(obj, "sampler", {"chains", "warmup", "draws", "leapfrog_steps", "target_accept", "step_jitter",
                                "init_sd", "max_divergent_fraction", "rhat_threshold"});
    SamplerConfig s;
    s.chains = get_int(obj, "sampler", "chains", s.chains);
    s.warmup = get_int(obj, "sampler", "warmup", s.warmup);
    s.draws = get_int(obj, "sampler", "draws", s.draws);
    s.leapfrog_steps = get_int(obj, "sampler", "leapfrog_steps", s.leapfrog_steps);
    s.target_accept = get_number(obj, "sampler", "target_accept", s.target_accept);
    s.step_jitter = get_number(obj, "sampler", "step_jitter", s.step_jitter);
    s.init_sd = get_number(obj, "sampler", "init_sd", s.init_sd);
    s.max_divergent_fraction = get_number(obj, "sampler", "max_divergent_fraction", s.max_divergent_fraction);
    s.rhat_threshold = get_number(obj, "sampler", "rhat_threshold", s.rhat_threshold);
    try {
        validate(s);
    } catch (const Error& e) {
        invalid("sampler", e.what());
    }
    if (s.leapfrog_steps < 1) invalid("sampler.leapfrog_steps", "must be >= 1");
    if (!(s.target_accept > 0.0 && s.target_accept < 1.0)) invalid("sampler.target_accept", "must lie in (0, 1)");
    return s;
}

SynthSpec parse_synth(const json& obj, std::uint64_t seed) {
    check_keys(obj, "synth", {"mu", "phi", "sigma", "n_days", "mean_price", "start_date", "profile_amplitude", "svx",
                              "temperature"});
    SynthSpec s;
    s.seed = seed;
    s.mu = get_number(obj, "synth", "mu", s.mu);
    s.phi = get_number(obj, "synth", "phi", s.phi);
    s.sigma = get_number(obj, "synth", "sigma", s.sigma);
    s.n_days = get_int(obj, "synth", "n_days", s.n_days);
    s.mean_price = get_number(obj, "synth", "mean_price", s.mean_price);
    s.profile_amplitude = get_number(obj, "synth", "profile_amplitude", s.profile_amplitude);
    if (obj.contains("start_date")) s.start_date = get_date(obj, "synth", "start_date");
    if (obj.contains("svx")) {
        const json& x = obj.at("svx");
        check_keys(x, "synth.svx", {"alpha", "beta1", "beta2", "beta3", "gamma", "xi"});
        SvxCoefficients c;
        c.alpha = get_number(x, "synth.svx", "alpha", 0.0);
        c.beta1 = get_number(x, "synth.svx", "beta1", 0.0);
        c.beta2 = get_number(x, "synth.svx", "beta2", 0.0);
        c.beta3 = get_number(x, "synth.svx", "beta3", 0.0);
        c.gamma = get_number(x, "synth.svx", "gamma", 0.0);
        c.xi = get_number(x, "synth.svx", "xi", 0.0);
        s.svx = c;
    }
    if (obj.contains("temperature")) {
        const json& t = obj.at("temperature");
        const std::string w = "synth.temperature";
        check_keys(t, w, {"mean_c", "annual_amplitude", "diurnal_amplitude", "noise_phi", "noise_sd"});
        auto& ts = s.temperature;
        ts.mean_c = get_number(t, w, "mean_c", ts.mean_c);
        ts.annual_amplitude = get_number(t, w, "annual_amplitude", ts.annual_amplitude);
        ts.diurnal_amplitude = get_number(t, w, "diurnal_amplitude", ts.diurnal_amplitude);
        ts.noise_phi = get_number(t, w, "noise_phi", ts.noise_phi);
        ts.noise_sd = get_number(t, w, "noise_sd", ts.noise_sd);
    }
    try {
        validate(s);
    } catch (const Error& e) {
        invalid("synth", e.what());
    }
    return s;
}

ModelFamily parse_family(const json& v, const std::string& key) {
    if (!v.is_string()) invalid(key, "expected \"baseline\" or \"svx\"");
    try {
        return family_from_string(v.get<std::string>());
    } catch (const Error&) {
        invalid(key, "expected \"baseline\" or \"svx\"");
    }
}

}  // namespace

RunConfig parse_config(const json& doc, const fs::path& base_dir) {
    check_keys(doc, "", {"seed", "output_dir", "datasets", "model", "families", "sampler", "priors", "fit", "folds",
                         "forecast", "diagnose", "synth", "workers"});
    RunConfig cfg;
    json resolved = doc;

    const json& seed = require(doc, "", "seed");
    if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long long>() >= 0)) {
        invalid("seed", "expected a non-negative integer");
    }
    cfg.seed = seed.get<std::uint64_t>();

    cfg.output_dir = resolve(base_dir, get<std::string>(doc, "", "output_dir", "out"));
    resolved["output_dir"] = fs::absolute(cfg.output_dir).lexically_normal().string();
    cfg.workers = get_int(doc, "", "workers", 0);
    if (cfg.workers < 0) invalid("workers", "must be >= 0");

    if (doc.contains("datasets")) {
        const json& list = doc.at("datasets");
        if (!list.is_array() || list.empty()) invalid("datasets", "expected a non-empty array");
        for (std::size_t i = 0; i < list.size(); ++i) {
            const std::string where = "datasets[" + std::to_string(i) + "]";
            const json& d = list[i];
            check_keys(d, where, {"zone", "prices", "weather", "hours"});
            DatasetConfig dc;
            try {
                dc.zone = zone_from_string(get<std::string>(d, where, "zone", "Zone1"));
            } catch (const Error&) {
                invalid(where + ".zone", "expected \"Zone1\" or \"Zone2\"");
            }
            dc.prices = existing_file(base_dir, require(d, where, "prices"), where + ".prices");
            resolved["datasets"][i]["prices"] = dc.prices.string();
            if (d.contains("weather")) {
                dc.weather = existing_file(base_dir, d.at("weather"), where + ".weather");
                resolved["datasets"][i]["weather"] = dc.weather->string();
            }
            const json& hours = require(d, where, "hours");
            if (!hours.is_array() || hours.empty()) invalid(where + ".hours", "expected a non-empty array");
            for (const auto& h : hours) {
                if (!h.is_number_integer() || h.get<int>() < 0 || h.get<int>() > 23) {
                    invalid(where + ".hours", "hours must be integers in [0, 23]");
                }
                dc.hours.push_back(h.get<int>());
            }
            cfg.datasets.push_back(std::move(dc));
        }
    }

    if (doc.contains("model")) cfg.model = parse_family(doc.at("model"), "model");
    if (doc.contains("families")) {
        const json& f = doc.at("families");
        if (!f.is_array() || f.empty()) invalid("families", "expected a non-empty array");
        cfg.families.clear();
        for (const auto& v : f) cfg.families.push_back(parse_family(v, "families"));
    }
    if (doc.contains("sampler")) cfg.sampler = parse_sampler(doc.at("sampler"));
    if (doc.contains("priors")) {
        const json& p = doc.at("priors");
        check_keys(p, "priors", {"mu_scale", "sigma_scale", "coef_scale"});
        cfg.priors.mu_scale = get_number(p, "priors", "mu_scale", cfg.priors.mu_scale);
        cfg.priors.sigma_scale = get_number(p, "priors", "sigma_scale", cfg.priors.sigma_scale);
        cfg.priors.coef_scale = get_number(p, "priors", "coef_scale", cfg.priors.coef_scale);
        if (!(cfg.priors.mu_scale > 0 && cfg.priors.sigma_scale > 0 && cfg.priors.coef_scale > 0)) {
            invalid("priors", "scales must be positive");
        }
    }
    if (doc.contains("fit")) {
        const json& f = doc.at("fit");
        check_keys(f, "fit", {"first_date", "train_days"});
        if (f.contains("first_date")) cfg.fit.first_date = get_date(f, "fit", "first_date");
        if (f.contains("train_days")) {
            cfg.fit.train_days = get_int(f, "fit", "train_days", 0);
            if (*cfg.fit.train_days < 10) invalid("fit.train_days", "must be >= 10");
        }
    }
    if (doc.contains("folds")) {
        const json& f = doc.at("folds");
        check_keys(f, "folds", {"total_days", "train_days", "test_days"});
        cfg.folds.total_days = get_int(f, "folds", "total_days", cfg.folds.total_days);
        cfg.folds.train_days = get_int(f, "folds", "train_days", cfg.folds.train_days);
        cfg.folds.test_days = get_int(f, "folds", "test_days", cfg.folds.test_days);
        if (cfg.folds.total_days <= 0 || cfg.folds.train_days <= 0 || cfg.folds.test_days <= 0) {
            invalid("folds", "sizes must be positive");
        }
    }
    if (doc.contains("forecast")) {
        const json& f = doc.at("forecast");
        check_keys(f, "forecast", {"horizon", "n_draws", "mode", "vol_mode"});
        auto& fc = cfg.forecast;
        fc.horizon = get_int(f, "forecast", "horizon", fc.horizon);
        fc.n_draws = get_int(f, "forecast", "n_draws", fc.n_draws);
        if (fc.horizon < 1) invalid("forecast.horizon", "must be >= 1");
        if (fc.n_draws < 1) invalid("forecast.n_draws", "must be >= 1");
        try {
            if (f.contains("mode")) fc.mode = ppd_mode_from_string(get<std::string>(f, "forecast", "mode", ""));
            if (f.contains("vol_mode")) fc.vol_mode = vol_mode_from_string(get<std::string>(f, "forecast", "vol_mode", ""));
        } catch (const Error&) {
            invalid("forecast", "mode must be \"full\" or \"point\"; vol_mode \"hold\" or \"propagate\"");
        }
    }
    if (doc.contains("diagnose")) {
        const json& d = doc.at("diagnose");
        check_keys(d, "diagnose", {"pacf_lags", "adf_alpha", "pd_grid", "kmeans_restarts"});
        auto& dc = cfg.diagnose;
        dc.pacf_lags = get_int(d, "diagnose", "pacf_lags", dc.pacf_lags);
        dc.adf_alpha = get_number(d, "diagnose", "adf_alpha", dc.adf_alpha);
        dc.pd_grid = get_int(d, "diagnose", "pd_grid", dc.pd_grid);
        dc.kmeans_restarts = get_int(d, "diagnose", "kmeans_restarts", dc.kmeans_restarts);
        if (dc.pacf_lags < 1 || dc.pd_grid < 2 || dc.kmeans_restarts < 1) invalid("diagnose", "values out of range");
        if (!(dc.adf_alpha > 0.0 && dc.adf_alpha < 1.0)) invalid("diagnose.adf_alpha", "must lie in (0, 1)");
    }
    if (doc.contains("synth")) cfg.synth = parse_synth(doc.at("synth"), cfg.seed);

    cfg.document = std::move(resolved);
    return cfg;
}

RunConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoError, "cannot open config " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::InvalidConfig, path.string() + ": " + e.what());
    }
    return parse_config(doc, fs::absolute(path).parent_path());
}

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t value) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
    return buf;
}

}  // namespace spotvol
