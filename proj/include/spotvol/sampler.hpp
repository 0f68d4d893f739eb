#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spotvol/random.hpp"

namespace spotvol {

/// A differentiable log posterior on an unconstrained parameter space.
/// Implementations must be safe to call concurrently (chains share one model).
class LogDensityModel {
public:
    virtual ~LogDensityModel() = default;

    /// Number of unconstrained parameters.
    virtual std::size_t dim() const = 0;

    /// Log density up to a constant; fills grad (size dim) when it is non-empty.
    virtual double log_density(std::span<const double> theta, std::span<double> grad) const = 0;

    /// Names of the constrained quantities written by constrain().
    virtual std::vector<std::string> param_names() const = 0;

    /// Maps an unconstrained point to the constrained quantities.
    virtual void constrain(std::span<const double> theta, std::span<double> out) const = 0;

    /// Starting point for a chain. Default: every coordinate ~ N(0, init_sd).
    virtual std::vector<double> initial_point(Rng& rng, double init_sd) const;
};

struct SamplerConfig {
    int chains = 4;
    int warmup = 1000;
    int draws = 1000;
    int leapfrog_steps = 32;
    double target_accept = 0.8;
    /// Step size is jittered uniformly within +/- this fraction each iteration.
    double step_jitter = 0.1;
    double init_sd = 0.1;
    double max_divergent_fraction = 0.1;
    double rhat_threshold = 1.05;
    /// Worker threads for chains; 0 = hardware concurrency.
    int workers = 0;
};

/// Throws InvalidConfig unless chains >= 2, warmup >= 200 and draws >= 500.
void validate(const SamplerConfig& cfg);

struct ParamSummary {
    double mean = 0.0;
    double sd = 0.0;
    double q025 = 0.0;
    double q50 = 0.0;
    double q975 = 0.0;
};

struct ChainStats {
    double step_size = 0.0;
    double mean_accept = 0.0;
    std::size_t divergences = 0;
};

struct FitDiagnostics {
    std::vector<double> rhat;
    std::vector<double> ess;
    std::vector<bool> zero_variance;
    std::vector<ChainStats> chains;
    std::vector<std::string> warnings;
    bool rhat_warning = false;
};

/// Data constants captured from the training window. Filled by the models.
struct TrainSummary {
    std::string family;
    double ybar = 0.0;
    double y_sd = 0.0;
    std::size_t n_obs = 0;
    std::string first_date;
    std::string last_date;
    int hour = 0;
    std::string zone = "Zone1";
    std::vector<std::string> std_columns;
    std::vector<double> std_mean;
    std::vector<double> std_sd;
    std::map<std::string, double> pinned;
    /// Draws of the final latent log volatility.
    std::vector<double> last_h;
};

struct PosteriorFit {
    std::vector<std::string> param_names;
    int n_chains = 0;
    int draws_per_chain = 0;
    /// (n_chains * draws_per_chain) x param_names.size(); chains stacked in order.
    /// Empty for summary-only fits.
    Eigen::MatrixXd draws;
    std::vector<ParamSummary> summary;
    FitDiagnostics diagnostics;
    TrainSummary train;

    bool has_draws() const { return draws.rows() > 0; }
    /// Column index of a named parameter; throws InvalidFit when absent.
    std::size_t index_of(const std::string& name) const;
    double mean_of(const std::string& name) const { return summary[index_of(name)].mean; }
};

/// Runs HMC with a fixed number of leapfrog steps per transition, dual-averaging
/// step size adaptation and windowed diagonal metric adaptation during warmup.
/// Chains are seeded from (seed, chain index) and run on a worker pool.
PosteriorFit sample(const LogDensityModel& model, const SamplerConfig& cfg, std::uint64_t seed);

struct RhatResult {
    double value = 1.0;
    bool zero_variance = false;
};

/// Split R-hat for one parameter; chains is one vector per chain.
RhatResult rhat(const std::vector<std::vector<double>>& chains);

/// Effective sample size over all chains (Geyer initial monotone sequence).
double effective_sample_size(const std::vector<std::vector<double>>& chains);

ParamSummary summarize(std::span<const double> values);

/// Fills summary and diagnostics from draws (used after sampling and after loading).
void compute_diagnostics(PosteriorFit& fit, double rhat_threshold = 1.05);

}  // namespace spotvol
