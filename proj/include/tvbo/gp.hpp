#pragma once

// Exact GP regression with a product spatio-temporal prior, exact prior
// sampling on space x time grids, and the eigenpair (Mercer) approximation of
// the posterior.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "tvbo/kernels.hpp"
#include "tvbo/spectral.hpp"

namespace tvbo {

/// Noise variance substituted for an exactly noiseless likelihood.
inline constexpr double kNoiselessJitter = 1e-8;

struct Observation {
    std::vector<double> x;
    double t = 0.0;
    double y = 0.0;
};

/// Observations in time order with a constant time step, points in [0,1]^d.
class Dataset {
public:
    Dataset(std::size_t dimension, double noise_variance);

    /// Throws InvalidArgument (time order, step, unit cube) or DimensionMismatch.
    void append(Observation obs);

    [[nodiscard]] std::size_t size() const noexcept { return records_.size(); }
    [[nodiscard]] bool empty() const noexcept { return records_.empty(); }
    [[nodiscard]] std::size_t dimension() const noexcept { return dimension_; }
    [[nodiscard]] double noise_variance() const noexcept { return noise_; }
    [[nodiscard]] const std::vector<Observation>& records() const noexcept { return records_; }
    [[nodiscard]] std::optional<double> step() const noexcept { return step_; }
    [[nodiscard]] std::vector<SpaceTimePoint> points() const;
    [[nodiscard]] Eigen::VectorXd targets() const;

    /// Columns x_1..x_d,t,y with a header row.
    void write_csv(std::ostream& os) const;
    static Dataset read_csv(std::istream& is, double noise_variance);

private:
    std::size_t dimension_;
    double noise_;
    std::optional<double> step_;
    std::vector<Observation> records_;
};

struct Prediction {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
};

/// Posterior of GP(0, k_S k_T) given noisy observations. Immutable: `condition`
/// returns a new posterior extended by one observation through a rank-one
/// update of the Cholesky factor of K + sigma^2 I.
class GPPosterior {
public:
    GPPosterior(SpatialKernel spatial, TemporalKernel temporal, double noise_variance);

    /// Throws SingularSystem if the regularized Gram matrix is not positive definite.
    static GPPosterior from_dataset(const SpatialKernel& spatial, const TemporalKernel& temporal,
                                    const Dataset& data);

    [[nodiscard]] GPPosterior condition(const Observation& obs) const;

    [[nodiscard]] std::size_t size() const noexcept { return points_.size(); }
    [[nodiscard]] double noise_variance() const noexcept { return noise_; }
    [[nodiscard]] const SpatialKernel& spatial() const noexcept { return spatial_; }
    [[nodiscard]] const TemporalKernel& temporal() const noexcept { return temporal_; }

    [[nodiscard]] double mean(std::span<const double> x, double t) const;
    /// Clipped to [0, k(z, z)].
    [[nodiscard]] double variance(std::span<const double> x, double t) const;
    [[nodiscard]] Prediction predict(std::span<const SpaceTimePoint> queries) const;

    struct Marginals {
        Eigen::VectorXd mean;
        Eigen::VectorXd variance;
    };
    /// Pointwise means and clipped variances at (x_k, t) for every x_k.
    [[nodiscard]] Marginals marginals(std::span<const std::vector<double>> xs, double t) const;

private:
    [[nodiscard]] Eigen::VectorXd cross(std::span<const double> x, double t) const;

    SpatialKernel spatial_;
    TemporalKernel temporal_;
    double noise_;
    std::vector<SpaceTimePoint> points_;
    Eigen::VectorXd y_;
    Eigen::MatrixXd chol_;   // lower factor of K + noise I
    Eigen::VectorXd alpha_;  // (K + noise I)^{-1} y
};

/// Means and covariance matrix at the queries.
Prediction posterior(const SpatialKernel& spatial, const TemporalKernel& temporal, const Dataset& data,
                     std::span<const SpaceTimePoint> queries);

struct PriorSampleOptions {
    std::size_t cap = 1'000'000;  ///< maximum |spatial grid| * n
    double jitter = 1e-10;
};

/// One draw of f on the grid (rows: spatial points, columns: times) from
/// N(0, K_S (x) K_T + jitter I), using the Kronecker eigendecomposition.
/// Throws CapExceeded.
Eigen::MatrixXd sample_prior_path(const SpatialKernel& spatial, const TemporalKernel& temporal,
                                  std::span<const std::vector<double>> spatial_grid, const TimeGrid& times,
                                  std::uint64_t seed, const PriorSampleOptions& options = {});

/// Header x_1..x_d followed by one column per time.
void write_prior_path_csv(std::ostream& os, const Eigen::MatrixXd& path,
                          std::span<const std::vector<double>> spatial_grid, const TimeGrid& times);

struct MercerEstimate {
    double mean = 0.0;
    double variance = 1.0;
};

/// Posterior approximation from the eigenpairs of the noiseless kernel matrix
/// of `data` (matrix scale, eigenvectors required). Eigenfunctions are
/// evaluated by the Nystrom extension; eigenpairs below kPositiveThreshold
/// relative are dropped. Throws MissingEigenvectors or DimensionMismatch.
MercerEstimate mercer_posterior(const Spectrum& spectrum, const SpatialKernel& spatial,
                                const TemporalKernel& temporal, const Dataset& data,
                                const SpaceTimePoint& query);

}  // namespace tvbo
