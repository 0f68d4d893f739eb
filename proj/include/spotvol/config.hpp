#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "spotvol/ingest.hpp"
#include "spotvol/predictive.hpp"
#include "spotvol/sampler.hpp"
#include "spotvol/series.hpp"
#include "spotvol/sv_models.hpp"

namespace spotvol {

struct DatasetConfig {
    Zone zone = Zone::Zone1;
    std::filesystem::path prices;
    std::optional<std::filesystem::path> weather;
    std::vector<int> hours;
};

struct FitWindow {
    std::optional<Date> first_date;
    std::optional<int> train_days;
};

struct FoldConfig {
    int total_days = 3600;
    int train_days = 360;
    int test_days = 90;
};

struct ForecastConfig {
    int horizon = 7;
    int n_draws = 1000;
    PpdMode mode = PpdMode::PointEstimate;
    VolMode vol_mode = VolMode::Propagate;
};

struct DiagnoseConfig {
    int pacf_lags = 30;
    double adf_alpha = 0.05;
    int pd_grid = 25;
    int kmeans_restarts = 10;
};

/// Declarative run description. Data paths are resolved against the directory
/// of the config file, so the parsed form is location independent.
struct RunConfig {
    std::uint64_t seed = 0;
    std::filesystem::path output_dir;
    std::vector<DatasetConfig> datasets;
    ModelFamily model = ModelFamily::Svx;
    std::vector<ModelFamily> families{ModelFamily::Baseline, ModelFamily::Svx};
    SamplerConfig sampler;
    SvPriors priors;
    FitWindow fit;
    FoldConfig folds;
    ForecastConfig forecast;
    DiagnoseConfig diagnose;
    std::optional<SynthSpec> synth;
    int workers = 0;
    /// The resolved document, as recorded in run manifests.
    nlohmann::json document;
};

/// Parses and validates a config document. Throws InvalidConfig naming the
/// offending key; input paths are checked for existence.
RunConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

/// 64-bit FNV-1a of a byte string, printed as 16 hex digits by the manifest.
std::uint64_t fnv1a(std::string_view bytes);
std::string hex64(std::uint64_t value);

}  // namespace spotvol
