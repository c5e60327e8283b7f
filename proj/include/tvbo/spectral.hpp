#pragma once

// Kernel matrices on uniform time grids and scattered space-time points,
// dense symmetric eigendecomposition, and the spectrum approximations built
// from spectral densities, line spectra and spatial x temporal products.

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tvbo/kernels.hpp"

namespace tvbo {

/// Relative threshold separating numerically positive eigenvalues from zero.
inline constexpr double kPositiveThreshold = 1e-8;

/// Dense symmetric matrix. Construction checks symmetry (1e-12 relative to the
/// largest entry) and finiteness.
class SymMatrix {
public:
    explicit SymMatrix(Eigen::MatrixXd m);

    [[nodiscard]] std::size_t order() const noexcept { return static_cast<std::size_t>(m_.rows()); }
    [[nodiscard]] double operator()(std::size_t i, std::size_t j) const {
        return m_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    [[nodiscard]] const Eigen::MatrixXd& matrix() const noexcept { return m_; }

    /// Leading principal submatrix of the given order.
    [[nodiscard]] SymMatrix leading(std::size_t order) const;

private:
    Eigen::MatrixXd m_;
};

enum class SpectrumScale { Matrix, Operator };

/// Nonincreasing eigenvalues with optional orthonormal eigenvector columns.
/// Operator scale means matrix eigenvalues divided by n.
struct Spectrum {
    std::vector<double> values;
    std::optional<Eigen::MatrixXd> vectors;
    SpectrumScale scale = SpectrumScale::Matrix;

    [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
    [[nodiscard]] bool has_vectors() const noexcept { return vectors.has_value(); }
    [[nodiscard]] double max() const noexcept { return values.empty() ? 0.0 : values.front(); }

    /// Matrix-scale spectrum divided by n (vectors kept). Throws ScaleMismatch
    /// if already operator-scaled.
    [[nodiscard]] Spectrum to_operator_scale(std::size_t n) const;
};

/// Uniform sampling times t_i = i * dt, i = 1..n.
struct TimeGrid {
    std::size_t n = 1;
    double dt = 1.0;

    TimeGrid(std::size_t count, double step);

    [[nodiscard]] double time(std::size_t index) const noexcept {
        return static_cast<double>(index + 1) * dt;
    }
    [[nodiscard]] std::vector<double> times() const;
};

struct SpaceTimePoint {
    std::vector<double> x;
    double t = 0.0;
};

SymMatrix build_temporal_matrix(const TemporalKernel& kernel, const TimeGrid& grid);

/// Gram matrix of scattered spatial points under a spatial kernel.
SymMatrix build_spatial_matrix(const SpatialKernel& kernel, std::span<const std::vector<double>> points);

/// Entrywise product k_S(x_i, x_j) k_T(t_i - t_j). Throws DimensionMismatch.
SymMatrix build_spatiotemporal_matrix(const SpatialKernel& spatial, const TemporalKernel& temporal,
                                      std::span<const SpaceTimePoint> points);

/// Descending eigenvalues (and eigenvectors as columns when requested) via
/// Householder tridiagonalization and implicit symmetric QR.
Spectrum eig_sym(const SymMatrix& m, bool want_vectors = false);

/// First row of the palindromic circulant completion of the Toeplitz matrix.
std::vector<double> circulant_embedding(const TemporalKernel& kernel, const TimeGrid& grid);

/// Eigenvalues of the circulant matrix with the given first row, descending.
std::vector<double> circulant_eigenvalues(std::span<const double> first_row);

struct TemporalSpectrumApprox {
    Spectrum sorted;
    /// S_T(w_i) / dt in index order i = 1..n.
    std::vector<double> unsorted;
    /// w_i = (i - n/2) / (n dt).
    std::vector<double> frequencies;
};

/// Density-sampling approximation of the Toeplitz spectrum. Throws WrongClass
/// for discrete-support kernels.
TemporalSpectrumApprox approx_temporal_spectrum(const TemporalKernel& kernel, const TimeGrid& grid);

/// [n c0, (n/2) c_1, (n/2) c_1, ...] padded with zeros to n and sorted.
Spectrum approx_lowrank_spectrum(const LowRankKernel& kernel, std::size_t n);

struct ProductSpectrum {
    Spectrum spectrum;
    /// 1-based (spatial index, temporal index) of each product.
    std::vector<std::pair<std::size_t, std::size_t>> provenance;
    std::vector<std::string> warnings;

    /// Number of distinct spatial indices used.
    [[nodiscard]] std::size_t distinct_spatial() const;
};

/// The n largest (1/n) lambda_i(K_S) lambda_j(K_T), generated lazily from a
/// max-heap over the index lattice. Negative inputs are clipped to 0.
ProductSpectrum approx_product_spectrum(const Spectrum& spatial, const Spectrum& temporal, std::size_t n);

/// Number of eigenvalues in [a, b].
std::size_t count_in_interval(const Spectrum& s, double a, double b);

/// Number of eigenvalues above rel * lambda_max.
std::size_t count_positive(const Spectrum& s, double rel = kPositiveThreshold);

/// Copy with negative values set to 0; `warning` receives a message when the
/// most negative value is below -1e-6 lambda_max.
Spectrum clip_negative(const Spectrum& s, std::string* warning = nullptr);

/// CSV columns: index,eigenvalue,provenance_i,provenance_j (provenance empty
/// when not available).
void write_spectrum_csv(std::ostream& os, const Spectrum& s,
                        std::span<const std::pair<std::size_t, std::size_t>> provenance = {});

}  // namespace tvbo
