#include "spotvol/fit_io.hpp"

#include <fstream>

#include "spotvol/error.hpp"

namespace spotvol {

using nlohmann::json;

json fit_to_json(const PosteriorFit& fit, bool include_draws) {
    json j;
    j["format"] = "spotvol.posterior_fit";
    j["version"] = 1;
    j["param_names"] = fit.param_names;
    j["n_chains"] = fit.n_chains;
    j["draws_per_chain"] = fit.draws_per_chain;
    if (include_draws && fit.has_draws()) {
        json rows = json::array();
        for (Eigen::Index r = 0; r < fit.draws.rows(); ++r) {
            json row = json::array();
            for (Eigen::Index c = 0; c < fit.draws.cols(); ++c) row.push_back(fit.draws(r, c));
            rows.push_back(std::move(row));
        }
        j["draws"] = std::move(rows);
    }
    json summary;
    for (const auto* key : {"mean", "sd", "q025", "q50", "q975"}) summary[key] = json::array();
    for (const auto& s : fit.summary) {
        summary["mean"].push_back(s.mean);
        summary["sd"].push_back(s.sd);
        summary["q025"].push_back(s.q025);
        summary["q50"].push_back(s.q50);
        summary["q975"].push_back(s.q975);
    }
    j["summary"] = std::move(summary);

    const auto& d = fit.diagnostics;
    json diag;
    diag["rhat"] = d.rhat;
    diag["ess"] = d.ess;
    diag["zero_variance"] = d.zero_variance;
    diag["chains"] = json::array();
    for (const auto& c : d.chains) {
        diag["chains"].push_back({{"step_size", c.step_size}, {"mean_accept", c.mean_accept}, {"divergences", c.divergences}});
    }
    diag["warnings"] = d.warnings;
    diag["rhat_warning"] = d.rhat_warning;
    j["diagnostics"] = std::move(diag);

    const auto& t = fit.train;
    j["train"] = {{"family", t.family},
                  {"ybar", t.ybar},
                  {"y_sd", t.y_sd},
                  {"n_obs", t.n_obs},
                  {"first_date", t.first_date},
                  {"last_date", t.last_date},
                  {"hour", t.hour},
                  {"zone", t.zone},
                  {"standardizer", {{"columns", t.std_columns}, {"mean", t.std_mean}, {"sd", t.std_sd}}},
                  {"pinned", t.pinned},
                  {"last_h", t.last_h}};
    return j;
}

PosteriorFit fit_from_json(const json& j) {
    try {
        if (j.value("format", "") != "spotvol.posterior_fit") {
            throw Error(ErrorKind::InvalidFit, "not a posterior fit document");
        }
        PosteriorFit fit;
        fit.param_names = j.at("param_names").get<std::vector<std::string>>();
        fit.n_chains = j.at("n_chains").get<int>();
        fit.draws_per_chain = j.at("draws_per_chain").get<int>();
        const auto width = static_cast<Eigen::Index>(fit.param_names.size());
        if (j.contains("draws")) {
            const auto& rows = j.at("draws");
            fit.draws.resize(static_cast<Eigen::Index>(rows.size()), width);
            for (std::size_t r = 0; r < rows.size(); ++r) {
                if (rows[r].size() != fit.param_names.size()) throw Error(ErrorKind::InvalidFit, "draw row width mismatch");
                for (std::size_t c = 0; c < rows[r].size(); ++c) {
                    fit.draws(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c].get<double>();
                }
            }
            if (fit.draws.rows() != static_cast<Eigen::Index>(fit.n_chains) * fit.draws_per_chain) {
                throw Error(ErrorKind::InvalidFit, "draw count does not equal n_chains * draws_per_chain");
            }
        }
        const auto& s = j.at("summary");
        const auto mean = s.at("mean").get<std::vector<double>>();
        const auto sd = s.at("sd").get<std::vector<double>>();
        const auto q025 = s.at("q025").get<std::vector<double>>();
        const auto q50 = s.at("q50").get<std::vector<double>>();
        const auto q975 = s.at("q975").get<std::vector<double>>();
        if (mean.size() != fit.param_names.size()) throw Error(ErrorKind::InvalidFit, "summary width mismatch");
        for (std::size_t i = 0; i < mean.size(); ++i) fit.summary.push_back({mean[i], sd[i], q025[i], q50[i], q975[i]});

        const auto& d = j.at("diagnostics");
        fit.diagnostics.rhat = d.at("rhat").get<std::vector<double>>();
        fit.diagnostics.ess = d.at("ess").get<std::vector<double>>();
        fit.diagnostics.zero_variance = d.at("zero_variance").get<std::vector<bool>>();
        for (const auto& c : d.at("chains")) {
            fit.diagnostics.chains.push_back(
                {c.at("step_size").get<double>(), c.at("mean_accept").get<double>(), c.at("divergences").get<std::size_t>()});
        }
        fit.diagnostics.warnings = d.at("warnings").get<std::vector<std::string>>();
        fit.diagnostics.rhat_warning = d.at("rhat_warning").get<bool>();

        const auto& t = j.at("train");
        auto& tr = fit.train;
        tr.family = t.at("family").get<std::string>();
        tr.ybar = t.at("ybar").get<double>();
        tr.y_sd = t.at("y_sd").get<double>();
        tr.n_obs = t.at("n_obs").get<std::size_t>();
        tr.first_date = t.at("first_date").get<std::string>();
        tr.last_date = t.at("last_date").get<std::string>();
        tr.hour = t.at("hour").get<int>();
        tr.zone = t.at("zone").get<std::string>();
        tr.std_columns = t.at("standardizer").at("columns").get<std::vector<std::string>>();
        tr.std_mean = t.at("standardizer").at("mean").get<std::vector<double>>();
        tr.std_sd = t.at("standardizer").at("sd").get<std::vector<double>>();
        tr.pinned = t.at("pinned").get<std::map<std::string, double>>();
        tr.last_h = t.at("last_h").get<std::vector<double>>();
        return fit;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::InvalidFit, e.what());
    }
}

void save_fit(const std::filesystem::path& path, const PosteriorFit& fit, bool include_draws) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
    out << fit_to_json(fit, include_draws).dump() << '\n';
}

PosteriorFit load_fit(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::InvalidFit, path.string() + ": " + e.what());
    }
    return fit_from_json(j);
}

}  // namespace spotvol
