#include "tvbo/bo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>

#include "format.hpp"
#include "parallel.hpp"
#include "tvbo/errors.hpp"

namespace tvbo {

namespace {

// Offsets the observation-noise stream from the objective stream.
constexpr std::uint64_t kNoiseStreamSalt = 0x9E3779B97F4A7C15ULL;

void require_config(bool ok, const char* field, const std::string& what) {
    require(ok, ErrorKind::InvalidConfig, std::string(field) + ": " + what);
}

std::string point_string(const std::vector<double>& x) {
    std::string s;
    for (std::size_t k = 0; k < x.size(); ++k) {
        if (k) s += ' ';
        s += detail::format_double(x[k]);
    }
    return s;
}

}  // namespace

void TVBOConfig::validate() const {
    require_config(std::isfinite(dt) && dt > 0.0, "dt", "must be positive");
    require_config(horizon >= 1, "horizon", "must be >= 1");
    require_config(delta > 0.0 && delta < 1.0, "delta", "must lie in (0, 1)");
    require_config(std::isfinite(lipschitz) && lipschitz > 0.0, "lipschitz", "must be positive");
    require_config(grid_resolution >= 2, "grid_resolution", "must be >= 2");
    require_config(std::isfinite(noise_variance) && noise_variance >= 0.0, "noise_variance",
                   "must be nonnegative");
    double points = 1.0;
    for (std::size_t k = 0; k < spatial.dimension(); ++k) points *= static_cast<double>(grid_resolution);
    require_config(points * static_cast<double>(horizon) <= static_cast<double>(sample_cap), "sample_cap",
                   "grid size times horizon exceeds the prior sampling cap");
}

std::vector<std::vector<double>> uniform_grid(std::size_t dimension, std::size_t resolution) {
    require(dimension >= 1 && resolution >= 2, ErrorKind::InvalidArgument, "grid needs d >= 1 and m >= 2");
    std::size_t total = 1;
    for (std::size_t k = 0; k < dimension; ++k) total *= resolution;
    std::vector<std::vector<double>> grid(total, std::vector<double>(dimension));
    const double h = 1.0 / static_cast<double>(resolution - 1);
    for (std::size_t p = 0; p < total; ++p) {
        std::size_t rem = p;
        for (std::size_t k = dimension; k-- > 0;) {
            grid[p][k] = static_cast<double>(rem % resolution) * h;
            rem /= resolution;
        }
    }
    return grid;
}

double RegretTrace::cumulative() const noexcept {
    double s = 0.0;
    for (const auto& r : records) s += r.regret;
    return s;
}

std::vector<double> RegretTrace::cumulative_series() const {
    std::vector<double> out;
    out.reserve(records.size());
    double s = 0.0;
    for (const auto& r : records) out.push_back(s += r.regret);
    return out;
}

void RegretTrace::write_csv(std::ostream& os) const {
    os << "iteration,t,x_chosen,x_star,r,R_cumulative\n";
    double s = 0.0;
    for (const auto& r : records) {
        s += r.regret;
        os << r.iteration << ',' << detail::format_double(r.t) << ',' << point_string(grid[r.chosen]) << ','
           << point_string(grid[r.best]) << ',' << detail::format_double(r.regret) << ','
           << detail::format_double(s) << '\n';
    }
}

double beta_schedule(std::size_t i, double delta, std::size_t dimension, double lipschitz) {
    require(i >= 1, ErrorKind::InvalidArgument, "beta schedule index starts at 1");
    require(delta > 0.0 && delta < 1.0, ErrorKind::InvalidArgument, "delta must lie in (0, 1)");
    require(dimension >= 1 && lipschitz > 0.0, ErrorKind::InvalidArgument, "d and L must be positive");
    const double n = static_cast<double>(i);
    const double d = static_cast<double>(dimension);
    return 2.0 * d * std::log(lipschitz * d * n * n / (6.0 * delta)) + 4.0 * std::log(std::numbers::pi * n);
}

std::size_t ucb_select(const GPPosterior& posterior, double t, double beta,
                       std::span<const std::vector<double>> grid) {
    require(!grid.empty(), ErrorKind::InvalidArgument, "empty spatial grid");
    const double root = std::sqrt(std::max(beta, 0.0));
    const auto m = posterior.marginals(grid, t);
    std::size_t best = 0;
    double best_value = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const auto idx = static_cast<Eigen::Index>(k);
        const double v = m.mean(idx) + root * std::sqrt(m.variance(idx));
        if (v > best_value) {
            best_value = v;
            best = k;
        }
    }
    return best;
}

TVBORun run_tvbo_full(const TVBOConfig& config) {
    config.validate();
    const std::size_t d = config.spatial.dimension();
    TVBORun run;
    run.trace.grid = uniform_grid(d, config.grid_resolution);
    const auto& grid = run.trace.grid;
    const TimeGrid times(config.horizon, config.dt);
    run.objective = sample_prior_path(config.spatial, config.temporal, grid, times, config.seed,
                                      {.cap = config.sample_cap});
    run.data = Dataset(d, config.noise_variance);

    std::mt19937_64 noise_rng(config.seed ^ kNoiseStreamSalt);
    std::normal_distribution<double> noise(0.0, 1.0);
    const double noise_sd = std::sqrt(config.noise_variance);

    GPPosterior post(config.spatial, config.temporal, config.noise_variance);
    run.trace.records.reserve(config.horizon);
    for (std::size_t i = 1; i <= config.horizon; ++i) {
        const auto col = static_cast<Eigen::Index>(i - 1);
        const double t = times.time(i - 1);
        RegretRecord rec;
        rec.iteration = i;
        rec.t = t;
        rec.beta = beta_schedule(i, config.delta, d, config.lipschitz);
        rec.chosen = ucb_select(post, t, rec.beta, grid);
        rec.posterior_sd = std::sqrt(post.variance(grid[rec.chosen], t));

        Eigen::Index best = 0;
        run.objective.col(col).maxCoeff(&best);
        rec.best = static_cast<std::size_t>(best);
        rec.f_best = run.objective(best, col);
        rec.f_chosen = run.objective(static_cast<Eigen::Index>(rec.chosen), col);
        rec.regret = rec.f_best - rec.f_chosen;
        rec.y = rec.f_chosen + noise_sd * noise(noise_rng);

        Observation obs{grid[rec.chosen], t, rec.y};
        post = post.condition(obs);
        run.data.append(std::move(obs));
        run.trace.records.push_back(rec);
    }
    return run;
}

RegretTrace run_tvbo(const TVBOConfig& config) { return run_tvbo_full(config).trace; }

std::vector<TVBORun> run_replications(const TVBOConfig& config, std::span<const std::uint64_t> seeds,
                                      std::size_t jobs) {
    config.validate();
    std::vector<TVBORun> out(seeds.size());
    detail::parallel_for(seeds.size(), jobs, [&](std::size_t k) {
        TVBOConfig c = config;
        c.seed = seeds[k];
        out[k] = run_tvbo_full(c);
    });
    return out;
}

}  // namespace tvbo
