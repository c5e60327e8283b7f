#pragma once

// GP-UCB on a fixed uniform spatial grid, sampling once per time step, against
// an objective drawn once from the prior.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "tvbo/gp.hpp"
#include "tvbo/kernels.hpp"

namespace tvbo {

struct TVBOConfig {
    SpatialKernel spatial = SpatialKernel::rbf(0.2, 1);
    TemporalKernel temporal = TemporalKernel::rbf(1.0);
    double dt = 0.1;
    std::size_t horizon = 200;
    double delta = 0.1;
    double lipschitz = 10.0;
    /// Points per dimension of the spatial grid.
    std::size_t grid_resolution = 25;
    double noise_variance = 0.01;
    std::uint64_t seed = 0;
    std::size_t sample_cap = PriorSampleOptions{}.cap;

    /// Throws InvalidConfig naming the offending field.
    void validate() const;
};

/// Uniform grid {0, 1/(m-1), ..., 1}^d in lexicographic order.
std::vector<std::vector<double>> uniform_grid(std::size_t dimension, std::size_t resolution);

struct RegretRecord {
    std::size_t iteration = 0;  ///< 1-based
    double t = 0.0;
    std::size_t chosen = 0;  ///< grid index of x_i
    std::size_t best = 0;    ///< grid index of the grid optimum at t_i
    double f_chosen = 0.0;
    double f_best = 0.0;
    double regret = 0.0;
    double beta = 0.0;
    /// Posterior standard deviation at the chosen point before observing it.
    double posterior_sd = 1.0;
    double y = 0.0;
};

struct RegretTrace {
    std::vector<RegretRecord> records;
    std::vector<std::vector<double>> grid;

    [[nodiscard]] double cumulative() const noexcept;
    /// R_1, ..., R_n.
    [[nodiscard]] std::vector<double> cumulative_series() const;
    /// Columns iteration,t,x_chosen,x_star,r,R_cumulative. Multi-dimensional
    /// points are written as space-separated coordinates.
    void write_csv(std::ostream& os) const;
};

/// 2 d log(L d i^2 / (6 delta)) + 4 log(pi i); may be negative for small i.
double beta_schedule(std::size_t i, double delta, std::size_t dimension, double lipschitz);

/// argmax over the grid of mu + sqrt(max(beta, 0)) sigma at time t; ties go to
/// the lowest grid index.
std::size_t ucb_select(const GPPosterior& posterior, double t, double beta,
                       std::span<const std::vector<double>> grid);

struct TVBORun {
    RegretTrace trace;
    /// Noiseless objective on grid x time, rows indexed like trace.grid.
    Eigen::MatrixXd objective;
    Dataset data{1, 0.0};
};

/// Full run including the sampled objective and the observed dataset.
TVBORun run_tvbo_full(const TVBOConfig& config);

RegretTrace run_tvbo(const TVBOConfig& config);

/// Independent runs for each seed on up to `jobs` threads (0 = hardware
/// concurrency); results are returned in seed order.
std::vector<TVBORun> run_replications(const TVBOConfig& config, std::span<const std::uint64_t> seeds,
                                      std::size_t jobs = 0);

}  // namespace tvbo
