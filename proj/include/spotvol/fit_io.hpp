#pragma once

#include <filesystem>

#include <json.hpp>

#include "spotvol/sampler.hpp"

namespace spotvol {

/// JSON document layout ("format": "spotvol.posterior_fit", "version": 1):
///   param_names, n_chains, draws_per_chain,
///   draws        row-major array of arrays (omitted for summary-only fits),
///   summary      {mean, sd, q025, q50, q975} arrays aligned with param_names,
///   diagnostics  {rhat, ess, zero_variance, chains[{step_size, mean_accept, divergences}], warnings, rhat_warning},
///   train        {family, ybar, y_sd, n_obs, first_date, last_date, hour, zone,
///                 standardizer{columns, mean, sd}, pinned{name: value}, last_h}
nlohmann::json fit_to_json(const PosteriorFit& fit, bool include_draws = true);
PosteriorFit fit_from_json(const nlohmann::json& doc);

void save_fit(const std::filesystem::path& path, const PosteriorFit& fit, bool include_draws = true);
PosteriorFit load_fit(const std::filesystem::path& path);

}  // namespace spotvol
