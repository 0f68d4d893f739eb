#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "commands.hpp"
#include "spotvol/error.hpp"

namespace {

namespace fs = std::filesystem;
using spotvol::cli::Invocation;

spotvol::RunConfig read_config(const fs::path& path, const std::uint64_t* seed) {
    std::ifstream in(path);
    if (!in) throw spotvol::Error(spotvol::ErrorKind::IoError, "cannot open config " + path.string());
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw spotvol::Error(spotvol::ErrorKind::InvalidConfig, path.string() + ": " + e.what());
    }
    if (seed && doc.is_object()) doc["seed"] = *seed;
    return spotvol::parse_config(doc, fs::absolute(path).parent_path());
}

}  // namespace

int main(int argc, char** argv) {
    auto logger = spdlog::stderr_logger_st("spotvol");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%l] %v");

    CLI::App app{"Stochastic volatility models for day-ahead electricity prices"};
    app.set_version_flag("--version", SPOTVOL_VERSION);
    app.require_subcommand(1);

    std::string config_path;
    std::string fit_path;
    std::string out_dir;
    std::string manifest_path;
    std::uint64_t seed = 0;
    int verbosity = 0;

    auto add_common = [&](CLI::App* sub, bool needs_config) {
        auto* opt = sub->add_option("--config,-c", config_path, "Run configuration (JSON)")->check(CLI::ExistingFile);
        if (needs_config) opt->required();
        sub->add_option("--seed", seed, "Override the configured master seed");
        sub->add_option("--out,-o", out_dir, "Output directory (default: output_dir from the config)");
        sub->add_flag("-v,--verbose", verbosity, "More log output (repeatable)");
    };

    auto* fit = app.add_subcommand("fit", "Fit a model and write its posterior");
    auto* fc = app.add_subcommand("forecast", "Forecast past the end of a fitted window");
    auto* cv = app.add_subcommand("cv", "Sliding-window cross-validation of every model combination");
    auto* diag = app.add_subcommand("diagnose", "ADF, PACF, clustering, residual and partial-dependence reports");
    auto* synth = app.add_subcommand("synth", "Generate a synthetic price and weather archive");
    auto* report = app.add_subcommand("report", "Summarize a fit file");
    auto* rerun = app.add_subcommand("rerun", "Repeat a run from its manifest");
    for (auto* sub : {fit, fc, cv, diag, synth}) add_common(sub, true);
    add_common(report, false);
    fc->add_option("--fit", fit_path, "Fit file")->required()->check(CLI::ExistingFile);
    diag->add_option("--fit", fit_path, "Fit file for residual and partial-dependence reports")
        ->check(CLI::ExistingFile);
    report->add_option("--fit", fit_path, "Fit file")->required()->check(CLI::ExistingFile);
    rerun->add_option("manifest", manifest_path, "manifest.json of an earlier run")->required()->check(CLI::ExistingFile);
    rerun->add_option("--out,-o", out_dir, "Output directory (default: the recorded one)");
    rerun->add_flag("-v,--verbose", verbosity, "More log output (repeatable)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? spotvol::cli::kOk : spotvol::cli::kError;
    }
    spdlog::set_level(verbosity >= 2 ? spdlog::level::debug : verbosity == 1 ? spdlog::level::info : spdlog::level::warn);

    try {
        Invocation inv;
        if (rerun->parsed()) {
            inv = spotvol::cli::from_manifest(manifest_path, out_dir.empty() ? std::nullopt : std::optional<fs::path>(out_dir));
        } else {
            auto* sub = app.get_subcommands().front();
            inv.command = sub->get_name();
            const std::uint64_t* seed_override = sub->count("--seed") > 0 ? &seed : nullptr;
            if (!config_path.empty()) {
                inv.config = read_config(config_path, seed_override);
            } else {
                nlohmann::json doc = {{"seed", seed}};
                inv.config = spotvol::parse_config(doc, fs::current_path());
            }
            inv.out_dir = out_dir.empty() ? inv.config.output_dir : fs::path(out_dir);
            if (!fit_path.empty()) inv.fit_path = fs::absolute(fit_path);
        }
        spdlog::info("{} -> {}", inv.command, inv.out_dir.string());
        return spotvol::cli::run(inv);
    } catch (const spotvol::Error& e) {
        spdlog::error("kind={} message=\"{}\"", spotvol::to_string(e.kind()), e.what());
        return spotvol::cli::kError;
    } catch (const std::exception& e) {
        spdlog::error("kind=Internal message=\"{}\"", e.what());
        return spotvol::cli::kError;
    }
}
