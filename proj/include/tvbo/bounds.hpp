#pragma once

// Information quantities, the GP-UCB regret upper bound, the algorithm-free
// lower bound built from truncated Gaussian moments, and the interval-count /
// information-rate scaling diagnostic.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "tvbo/bo.hpp"
#include "tvbo/spectral.hpp"

namespace tvbo {

/// 1/2 sum log(1 + lambda_i / sigma^2) over the eigenvalues of K (negatives
/// clipped). Requires sigma^2 > 0.
double mutual_info_exact(const SymMatrix& k, double noise_variance);

/// Mutual information of every leading block K_{1:m}, m = 1..n, from one
/// Cholesky factorization of K + sigma^2 I.
std::vector<double> mutual_info_prefix(const SymMatrix& k, double noise_variance);

/// 1/2 sum_{i<=n} log(1 + n lambda_i / sigma^2) for an operator-scale
/// spectrum. Throws ScaleMismatch for matrix-scale input.
double mutual_info_spectral(const Spectrum& operator_spectrum, std::size_t n, double noise_variance);

/// sigma^-2 / log(1 + sigma^-2).
double c1_constant(double noise_variance);

/// sqrt(8 C1 beta sigma^2 n I) + pi^2 / 6.
double upper_bound(std::size_t n, double beta, double noise_variance, double info, double c1);

/// E[max(0, X)] for X ~ N(mu, s^2); max(0, mu) at s = 0.
double truncated_gaussian_mean(double mu, double s);

struct LowerBoundStep {
    std::size_t iteration = 0;
    double mu_hat = 0.0;
    double sigma_hat = 0.0;
    /// Unclipped covariance-dropped variance estimate.
    double sigma2_raw = 2.0;
    /// Variance estimate of f(a) - f(b) including the -2 Cov term (diagnostic).
    double sigma2_with_covariance = 2.0;
    double term = 0.0;
    bool clipped = false;
};

struct LowerBoundResult {
    std::vector<LowerBoundStep> steps;
    double total = 0.0;
    std::size_t clipped_steps = 0;
};

/// One step from the eigenpairs of the noiseless kernel matrix of the
/// observed prefix: a = (x*, t), b = (x chosen, t). An empty prefix is the
/// prior (mu = 0, sigma^2 = 2). Throws MissingEigenvectors.
LowerBoundStep lower_bound_step(const Spectrum& prefix_spectrum, const SpatialKernel& spatial,
                                const TemporalKernel& temporal, std::span<const SpaceTimePoint> prefix,
                                const Eigen::VectorXd& prefix_objective, const SpaceTimePoint& a,
                                const SpaceTimePoint& b);

struct TrajectoryStep {
    std::vector<double> x_star;
    std::vector<double> x_chosen;
    double t = 0.0;
    /// Noiseless objective at the chosen point.
    double f_chosen = 0.0;
};

/// Sum over steps of truncated_gaussian_mean(mu_hat, sigma_hat).
LowerBoundResult lower_bound(const SpatialKernel& spatial, const TemporalKernel& temporal,
                             std::span<const TrajectoryStep> trajectory);

std::vector<TrajectoryStep> trajectory_of(const TVBORun& run);

struct BoundReport {
    std::size_t n = 0;
    double info_exact = 0.0;
    double info_spectral = 0.0;
    double beta = 0.0;
    double c1 = 0.0;
    double upper = 0.0;
    double regret = 0.0;
    /// Upper bound and cumulative regret at every prefix length 1..n.
    std::vector<double> upper_series;
    std::vector<double> regret_series;
    /// Fraction of steps whose pre-observation posterior sd exceeded sigma0.
    double c1_violation_fraction = 0.0;
    LowerBoundResult lower;

    [[nodiscard]] bool upper_holds_everywhere() const;
};

BoundReport bound_report(const TVBOConfig& config, const TVBORun& run);

nlohmann::json to_json(const BoundReport& report);

struct ScalingRow {
    std::size_t n = 0;
    double count_mean = 0.0;
    double count_stderr = 0.0;
    double info_rate_mean = 0.0;  ///< I / n
    double info_rate_stderr = 0.0;
    double n0_proxy = 0.0;  ///< mean distinct spatial indices among positive product eigenvalues
    std::vector<std::size_t> counts;  ///< per seed
    std::vector<double> info_rates;   ///< per seed
};

struct ScalingSetup {
    SpatialKernel spatial;
    TemporalKernel temporal;
    double dt = 0.2;
    double noise_variance = 0.01;
    double a = 1.0;
    double b = 2.0;
};

/// For each n (ascending) and seed: spatial points drawn uniformly (nested in
/// n for a fixed seed), times t_i = i dt, eigenvalues of K^(n) counted in
/// [a, b] and mutual_info_exact / n.
std::vector<ScalingRow> scaling_diagnostic(const ScalingSetup& setup, std::span<const std::size_t> ns,
                                           std::span<const std::uint64_t> seeds, std::size_t jobs = 0);

/// Columns kernel,n,count,I_over_n,stderr (stderr of I/n) plus count_stderr
/// and n0_proxy.
void write_scaling_csv(std::ostream& os, const std::string& kernel_name, std::span<const ScalingRow> rows,
                       bool header = true);

}  // namespace tvbo
