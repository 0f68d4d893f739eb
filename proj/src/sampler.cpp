#include "spotvol/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "spotvol/error.hpp"
#include "parallel.hpp"

namespace spotvol {

std::vector<double> LogDensityModel::initial_point(Rng& rng, double init_sd) const {
    std::vector<double> theta(dim());
    for (auto& v : theta) v = init_sd * std_normal(rng);
    return theta;
}

void validate(const SamplerConfig& cfg) {
    if (cfg.chains < 2) throw Error(ErrorKind::InvalidConfig, "sampler needs at least 2 chains");
    if (cfg.warmup < 200) throw Error(ErrorKind::InvalidConfig, "sampler warmup must be >= 200");
    if (cfg.draws < 500) throw Error(ErrorKind::InvalidConfig, "sampler draws must be >= 500");
    if (cfg.leapfrog_steps < 1) throw Error(ErrorKind::InvalidConfig, "leapfrog_steps must be >= 1");
    if (!(cfg.target_accept > 0.0 && cfg.target_accept < 1.0)) {
        throw Error(ErrorKind::InvalidConfig, "target_accept must lie in (0, 1)");
    }
    if (!(cfg.step_jitter >= 0.0 && cfg.step_jitter < 1.0)) {
        throw Error(ErrorKind::InvalidConfig, "step_jitter must lie in [0, 1)");
    }
}

std::size_t PosteriorFit::index_of(const std::string& name) const {
    auto it = std::find(param_names.begin(), param_names.end(), name);
    if (it == param_names.end()) throw Error(ErrorKind::InvalidFit, "fit has no parameter '" + name + "'");
    return static_cast<std::size_t>(it - param_names.begin());
}

namespace {

// Nesterov dual averaging of log step size.
class DualAveraging {
public:
    DualAveraging(double target, double step) : target_(target) { restart(step); }

    void restart(double step) {
        mu_ = std::log(10.0 * step);
        counter_ = 0;
        s_bar_ = 0.0;
        x_bar_ = 0.0;
    }

    double update(double accept) {
        ++counter_;
        accept = std::min(1.0, accept);
        const double eta = 1.0 / (counter_ + kT0);
        s_bar_ = (1.0 - eta) * s_bar_ + eta * (target_ - accept);
        const double x = mu_ - s_bar_ * std::sqrt(static_cast<double>(counter_)) / kGamma;
        const double x_eta = std::pow(static_cast<double>(counter_), -kKappa);
        x_bar_ = (1.0 - x_eta) * x_bar_ + x_eta * x;
        return std::exp(x);
    }

    double final_step() const { return std::exp(x_bar_); }

private:
    static constexpr double kGamma = 0.05;
    static constexpr double kT0 = 10.0;
    static constexpr double kKappa = 0.75;
    double target_;
    double mu_ = 0.0;
    long counter_ = 0;
    double s_bar_ = 0.0;
    double x_bar_ = 0.0;
};

// Slow metric-adaptation windows: contiguous from `start`, each ending
// (exclusive) at the listed iteration.
struct AdaptSchedule {
    int start = 0;
    std::vector<int> ends;
};

AdaptSchedule metric_windows(int warmup) {
    int init_buffer = 75;
    int term_buffer = 50;
    int base = 25;
    if (init_buffer + base + term_buffer > warmup) {
        init_buffer = static_cast<int>(0.15 * warmup);
        term_buffer = static_cast<int>(0.1 * warmup);
        base = warmup - init_buffer - term_buffer;
    }
    AdaptSchedule schedule;
    schedule.start = init_buffer;
    auto& ends = schedule.ends;
    int start = init_buffer;
    int size = base;
    const int last = warmup - term_buffer;
    while (true) {
        int end = start + size;
        if (end + 2 * size > last) {
            ends.push_back(last);
            break;
        }
        ends.push_back(end);
        start = end;
        size *= 2;
    }
    return schedule;
}

struct ChainOutput {
    Eigen::MatrixXd draws;
    ChainStats stats;
};

class Chain {
public:
    Chain(const LogDensityModel& model, const SamplerConfig& cfg, Rng rng)
        : model_(model), cfg_(cfg), rng_(std::move(rng)), n_(model.dim()), theta_(n_), grad_(n_),
          inv_metric_(n_, 1.0), q_(n_), p_(n_), g_(n_) {}

    ChainOutput run() {
        initialize();
        const std::size_t width = model_.param_names().size();
        ChainOutput out;
        out.draws.resize(cfg_.draws, static_cast<Eigen::Index>(width));
        std::vector<double> row(width);

        double step = find_reasonable_step(1.0);
        DualAveraging adapt(cfg_.target_accept, step);
        const auto schedule = metric_windows(cfg_.warmup);
        const auto& windows = schedule.ends;
        std::size_t window = 0;
        std::vector<double> mean(n_, 0.0);
        std::vector<double> m2(n_, 0.0);
        long welford_n = 0;

        double accept_sum = 0.0;
        for (int it = 0; it < cfg_.warmup + cfg_.draws; ++it) {
            const bool warming = it < cfg_.warmup;
            const double jitter = 1.0 + cfg_.step_jitter * (2.0 * uniform01(rng_) - 1.0);
            bool divergent = false;
            const double accept = transition(step * jitter, divergent);
            if (warming) {
                step = adapt.update(accept);
                if (window < windows.size() && it >= schedule.start) {
                    ++welford_n;
                    for (std::size_t i = 0; i < n_; ++i) {
                        const double delta = theta_[i] - mean[i];
                        mean[i] += delta / static_cast<double>(welford_n);
                        m2[i] += delta * (theta_[i] - mean[i]);
                    }
                    if (it + 1 == windows[window]) {
                        const double n = static_cast<double>(welford_n);
                        for (std::size_t i = 0; i < n_; ++i) {
                            const double var = welford_n > 1 ? m2[i] / (n - 1.0) : 1.0;
                            inv_metric_[i] = (n / (n + 5.0)) * var + 1e-3 * (5.0 / (n + 5.0));
                        }
                        std::fill(mean.begin(), mean.end(), 0.0);
                        std::fill(m2.begin(), m2.end(), 0.0);
                        welford_n = 0;
                        ++window;
                        step = find_reasonable_step(step);
                        adapt.restart(step);
                    }
                }
                if (it + 1 == cfg_.warmup) step = adapt.final_step();
            } else {
                accept_sum += accept;
                if (divergent) ++out.stats.divergences;
                model_.constrain(theta_, row);
                for (std::size_t j = 0; j < width; ++j) out.draws(it - cfg_.warmup, static_cast<Eigen::Index>(j)) = row[j];
            }
        }
        out.stats.step_size = step;
        out.stats.mean_accept = accept_sum / cfg_.draws;
        return out;
    }

private:
    void initialize() {
        for (int attempt = 0; attempt < 100; ++attempt) {
            theta_ = model_.initial_point(rng_, cfg_.init_sd);
            lp_ = model_.log_density(theta_, grad_);
            if (std::isfinite(lp_) && std::all_of(grad_.begin(), grad_.end(), [](double g) { return std::isfinite(g); })) {
                return;
            }
        }
        throw Error(ErrorKind::NonFiniteLogp, "no finite initial point after 100 attempts");
    }

    double kinetic(const std::vector<double>& p) const {
        double k = 0.0;
        for (std::size_t i = 0; i < n_; ++i) k += inv_metric_[i] * p[i] * p[i];
        return 0.5 * k;
    }

    void draw_momentum() {
        for (std::size_t i = 0; i < n_; ++i) p_[i] = std_normal(rng_) / std::sqrt(inv_metric_[i]);
    }

    // Integrates from the current state; leaves the proposal in q_, p_, g_ and returns its log density.
    double leapfrog(double step, int steps) {
        q_ = theta_;
        g_ = grad_;
        double lp = lp_;
        for (int s = 0; s < steps; ++s) {
            for (std::size_t i = 0; i < n_; ++i) p_[i] += 0.5 * step * g_[i];
            for (std::size_t i = 0; i < n_; ++i) q_[i] += step * inv_metric_[i] * p_[i];
            lp = model_.log_density(q_, g_);
            if (!std::isfinite(lp)) return -std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < n_; ++i) p_[i] += 0.5 * step * g_[i];
        }
        return lp;
    }

    double transition(double step, bool& divergent) {
        draw_momentum();
        const double h0 = -lp_ + kinetic(p_);
        const double lp = leapfrog(step, cfg_.leapfrog_steps);
        const double h1 = -lp + kinetic(p_);
        divergent = !std::isfinite(h1) || h1 - h0 > 1000.0;
        const double accept = divergent ? 0.0 : std::min(1.0, std::exp(h0 - h1));
        if (!divergent && uniform01(rng_) < accept) {
            theta_.swap(q_);
            grad_.swap(g_);
            lp_ = lp;
        }
        return accept;
    }

    // Doubles or halves the step until one leapfrog step crosses acceptance 0.8.
    double find_reasonable_step(double step) {
        draw_momentum();
        const double h0 = -lp_ + kinetic(p_);
        double lp = leapfrog(step, 1);
        double delta = h0 - (-lp + kinetic(p_));
        const int direction = (std::isfinite(delta) && delta > std::log(0.8)) ? 1 : -1;
        for (int i = 0; i < 60; ++i) {
            draw_momentum();
            const double h = -lp_ + kinetic(p_);
            lp = leapfrog(step, 1);
            delta = h - (-lp + kinetic(p_));
            if (!std::isfinite(delta)) delta = -std::numeric_limits<double>::infinity();
            if (direction == 1 && !(delta > std::log(0.8))) break;
            if (direction == -1 && delta > std::log(0.8)) break;
            step = direction == 1 ? step * 2.0 : step * 0.5;
            if (step > 1e7 || step < 1e-12) break;
        }
        return step;
    }

    const LogDensityModel& model_;
    const SamplerConfig& cfg_;
    Rng rng_;
    std::size_t n_;
    std::vector<double> theta_;
    std::vector<double> grad_;
    double lp_ = 0.0;
    std::vector<double> inv_metric_;
    std::vector<double> q_;
    std::vector<double> p_;
    std::vector<double> g_;
};

double quantile_sorted(const std::vector<double>& sorted, double prob) {
    // Linear interpolation between order statistics.
    const double pos = prob * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

ParamSummary summarize(std::span<const double> values) {
    ParamSummary s;
    if (values.empty()) return s;
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.sd = values.size() > 1 ? std::sqrt(ss / static_cast<double>(values.size() - 1)) : 0.0;
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    s.q025 = quantile_sorted(sorted, 0.025);
    s.q50 = quantile_sorted(sorted, 0.5);
    s.q975 = quantile_sorted(sorted, 0.975);
    return s;
}

RhatResult rhat(const std::vector<std::vector<double>>& chains) {
    if (chains.size() < 2) throw Error(ErrorKind::TooFewDraws, "R-hat needs at least 2 chains");
    std::size_t n = chains.front().size();
    for (const auto& c : chains) n = std::min(n, c.size());
    if (n < 4) throw Error(ErrorKind::TooFewDraws, "R-hat needs at least 4 draws per chain");
    const std::size_t half = n / 2;
    // Each chain contributes its first and last `half` draws as two split chains.
    std::vector<double> means;
    std::vector<double> vars;
    for (const auto& c : chains) {
        for (std::size_t part = 0; part < 2; ++part) {
            const std::size_t begin = part == 0 ? 0 : n - half;
            double m = 0.0;
            for (std::size_t i = 0; i < half; ++i) m += c[begin + i];
            m /= static_cast<double>(half);
            double v = 0.0;
            for (std::size_t i = 0; i < half; ++i) v += (c[begin + i] - m) * (c[begin + i] - m);
            means.push_back(m);
            vars.push_back(v / static_cast<double>(half - 1));
        }
    }
    const double m_count = static_cast<double>(means.size());
    const double nh = static_cast<double>(half);
    const double grand = std::accumulate(means.begin(), means.end(), 0.0) / m_count;
    double between = 0.0;
    for (double m : means) between += (m - grand) * (m - grand);
    between *= nh / (m_count - 1.0);
    const double within = std::accumulate(vars.begin(), vars.end(), 0.0) / m_count;
    if (!(within > 0.0)) {
        return {1.0, true};
    }
    const double var_plus = (nh - 1.0) / nh * within + between / nh;
    return {std::sqrt(var_plus / within), false};
}

double effective_sample_size(const std::vector<std::vector<double>>& chains) {
    const std::size_t m = chains.size();
    if (m == 0) return 0.0;
    std::size_t n = chains.front().size();
    for (const auto& c : chains) n = std::min(n, c.size());
    if (n < 4) return static_cast<double>(m * n);
    std::vector<double> means(m);
    std::vector<double> vars(m);
    for (std::size_t c = 0; c < m; ++c) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += chains[c][i];
        means[c] = s / static_cast<double>(n);
        double v = 0.0;
        for (std::size_t i = 0; i < n; ++i) v += (chains[c][i] - means[c]) * (chains[c][i] - means[c]);
        vars[c] = v / static_cast<double>(n - 1);
    }
    const double within = std::accumulate(vars.begin(), vars.end(), 0.0) / static_cast<double>(m);
    if (!(within > 0.0)) return static_cast<double>(m * n);
    double var_plus = within * (static_cast<double>(n) - 1.0) / static_cast<double>(n);
    if (m > 1) {
        const double grand = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(m);
        double b = 0.0;
        for (double mu : means) b += (mu - grand) * (mu - grand);
        var_plus += b / static_cast<double>(m - 1);
    }
    auto autocov = [&](std::size_t c, std::size_t lag) {
        double s = 0.0;
        for (std::size_t i = 0; i + lag < n; ++i) {
            s += (chains[c][i] - means[c]) * (chains[c][i + lag] - means[c]);
        }
        return s / static_cast<double>(n);
    };
    auto rho = [&](std::size_t lag) {
        double mean_acov = 0.0;
        for (std::size_t c = 0; c < m; ++c) mean_acov += autocov(c, lag);
        mean_acov /= static_cast<double>(m);
        return 1.0 - (within - mean_acov) / var_plus;
    };
    // Geyer's initial positive and monotone sequence over pairs of lags.
    double tau = -1.0;
    double prev_pair = std::numeric_limits<double>::infinity();
    for (std::size_t lag = 0; lag + 1 < n; lag += 2) {
        double pair = rho(lag) + rho(lag + 1);
        if (pair <= 0.0) break;
        pair = std::min(pair, prev_pair);
        tau += 2.0 * pair;
        prev_pair = pair;
    }
    tau = std::max(tau, 1.0 / std::log10(static_cast<double>(m * n)));
    return static_cast<double>(m * n) / tau;
}

void compute_diagnostics(PosteriorFit& fit, double rhat_threshold) {
    const auto width = fit.param_names.size();
    fit.summary.assign(width, {});
    fit.diagnostics.rhat.assign(width, 1.0);
    fit.diagnostics.ess.assign(width, 0.0);
    fit.diagnostics.zero_variance.assign(width, false);
    fit.diagnostics.rhat_warning = false;
    if (!fit.has_draws()) return;
    const auto per_chain = static_cast<std::size_t>(fit.draws_per_chain);
    std::vector<double> column(static_cast<std::size_t>(fit.draws.rows()));
    std::vector<std::vector<double>> chains(static_cast<std::size_t>(fit.n_chains), std::vector<double>(per_chain));
    std::size_t worst = 0;
    for (std::size_t j = 0; j < width; ++j) {
        for (std::size_t r = 0; r < column.size(); ++r) {
            column[r] = fit.draws(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j));
        }
        fit.summary[j] = summarize(column);
        for (std::size_t c = 0; c < chains.size(); ++c) {
            std::copy_n(column.begin() + static_cast<std::ptrdiff_t>(c * per_chain), per_chain, chains[c].begin());
        }
        if (chains.size() >= 2 && per_chain >= 4) {
            const auto r = rhat(chains);
            fit.diagnostics.rhat[j] = r.value;
            fit.diagnostics.zero_variance[j] = r.zero_variance;
            if (r.value > rhat_threshold) {
                fit.diagnostics.rhat_warning = true;
                ++worst;
            }
        }
        fit.diagnostics.ess[j] = effective_sample_size(chains);
    }
    if (worst > 0) {
        std::ostringstream msg;
        msg << worst << " parameter(s) with R-hat above " << rhat_threshold;
        fit.diagnostics.warnings.push_back(msg.str());
    }
}

PosteriorFit sample(const LogDensityModel& model, const SamplerConfig& cfg, std::uint64_t seed) {
    validate(cfg);
    const auto n_chains = static_cast<std::size_t>(cfg.chains);
    std::vector<ChainOutput> outputs(n_chains);
    detail::parallel_for(n_chains, cfg.workers, [&](std::size_t c) {
        Chain chain(model, cfg, make_rng(seed, {c}));
        outputs[c] = chain.run();
    });

    PosteriorFit fit;
    fit.param_names = model.param_names();
    fit.n_chains = cfg.chains;
    fit.draws_per_chain = cfg.draws;
    const auto width = static_cast<Eigen::Index>(fit.param_names.size());
    fit.draws.resize(static_cast<Eigen::Index>(n_chains) * cfg.draws, width);
    std::size_t divergences = 0;
    for (std::size_t c = 0; c < n_chains; ++c) {
        fit.draws.middleRows(static_cast<Eigen::Index>(c) * cfg.draws, cfg.draws) = outputs[c].draws;
        fit.diagnostics.chains.push_back(outputs[c].stats);
        divergences += outputs[c].stats.divergences;
    }
    const double total = static_cast<double>(n_chains) * cfg.draws;
    if (static_cast<double>(divergences) >= cfg.max_divergent_fraction * total) {
        throw Error(ErrorKind::DivergentChains,
                    std::to_string(divergences) + " of " + std::to_string(static_cast<long>(total)) +
                        " transitions diverged");
    }
    if (divergences > 0) {
        fit.diagnostics.warnings.push_back(std::to_string(divergences) + " divergent transition(s)");
    }
    compute_diagnostics(fit, cfg.rhat_threshold);
    return fit;
}

}  // namespace spotvol
