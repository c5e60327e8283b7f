#pragma once

// Stationary correlation functions on the spatial and temporal domains,
// their spectral densities under S(w) = \int k(t) exp(-2 pi i t w) dt, and the
// four-class taxonomy by support of the temporal spectral density.

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace tvbo {

enum class TemporalFamily {
    RBF,
    Matern,
    RationalQuadratic,
    Sinc,
    SincSquared,
    Periodic,
    CosineSum,
};

enum class MaternNu { Half, ThreeHalves, FiveHalves };

double nu_value(MaternNu nu) noexcept;

/// One spectral line (w, weight) of a discrete spectral density.
struct SpectralLine {
    double frequency = 0.0;
    double weight = 0.0;

    friend bool operator==(const SpectralLine&, const SpectralLine&) = default;
};

/// A cosine term c * cos(2 pi w u) of a trigonometric-polynomial kernel.
struct CosineTerm {
    double frequency = 0.0;
    double coefficient = 0.0;

    friend bool operator==(const CosineTerm&, const CosineTerm&) = default;
};

enum class KernelClassTag { Broadband, BandLimited, AlmostPeriodic, LowRank };

std::string to_string(KernelClassTag tag);

struct KernelClass {
    KernelClassTag tag = KernelClassTag::Broadband;
    bool support_bounded = false;
    bool support_discrete = false;

    friend bool operator==(const KernelClass&, const KernelClass&) = default;
};

/// Maps (bounded, discrete) support flags to the class tag.
KernelClass kernel_class_from_support(bool bounded, bool discrete) noexcept;

/// Immutable temporal correlation function with k(0) = 1. Construct through
/// the named factories, which validate parameters.
class TemporalKernel {
public:
    static TemporalKernel rbf(double lengthscale);
    static TemporalKernel matern(MaternNu nu, double lengthscale);
    static TemporalKernel rational_quadratic(double lengthscale, double alpha = 1.0);
    /// k(u) = sin(2 pi tau u) / (2 pi tau u); spectral support [-tau, tau].
    static TemporalKernel sinc(double bandlimit);
    /// k(u) = sinc^2(pi tau u); triangular spectral density on [-tau, tau].
    static TemporalKernel sinc_squared(double bandlimit);
    /// Exponential-sine-squared kernel exp(-2 sin^2(pi u / r) / l^2).
    static TemporalKernel periodic(double period, double lengthscale);
    /// k(u) = c0 + sum_j c_j cos(2 pi w_j u); c0 + sum c_j must equal 1.
    static TemporalKernel cosine_sum(double constant, std::vector<CosineTerm> terms);

    [[nodiscard]] TemporalFamily family() const noexcept { return family_; }
    [[nodiscard]] double lengthscale() const noexcept { return lengthscale_; }
    [[nodiscard]] double bandlimit() const noexcept { return bandlimit_; }
    [[nodiscard]] double period() const noexcept { return period_; }
    [[nodiscard]] double rq_alpha() const noexcept { return alpha_; }
    [[nodiscard]] MaternNu nu() const noexcept { return nu_; }
    [[nodiscard]] double constant() const noexcept { return constant_; }
    [[nodiscard]] const std::vector<CosineTerm>& terms() const noexcept { return terms_; }

    [[nodiscard]] double operator()(double lag) const noexcept;

    /// Short human-readable name, e.g. "rbf(l=1)".
    [[nodiscard]] std::string describe() const;

private:
    TemporalKernel() = default;

    TemporalFamily family_ = TemporalFamily::RBF;
    double lengthscale_ = 1.0;
    double bandlimit_ = 1.0;
    double period_ = 1.0;
    double alpha_ = 1.0;
    MaternNu nu_ = MaternNu::FiveHalves;
    double constant_ = 1.0;
    std::vector<CosineTerm> terms_;
};

enum class SpatialFamily { RBF, Matern };

/// Product-form stationary correlation on [0,1]^d with one lengthscale per
/// dimension (a scalar lengthscale is broadcast).
class SpatialKernel {
public:
    static SpatialKernel rbf(std::vector<double> lengthscales);
    static SpatialKernel rbf(double lengthscale, std::size_t dimension);
    static SpatialKernel matern(MaternNu nu, std::vector<double> lengthscales);
    static SpatialKernel matern(MaternNu nu, double lengthscale, std::size_t dimension);

    [[nodiscard]] SpatialFamily family() const noexcept { return family_; }
    [[nodiscard]] MaternNu nu() const noexcept { return nu_; }
    [[nodiscard]] std::size_t dimension() const noexcept { return lengthscales_.size(); }
    [[nodiscard]] const std::vector<double>& lengthscales() const noexcept { return lengthscales_; }

    /// Throws DimensionMismatch if either point is not d-dimensional.
    [[nodiscard]] double operator()(std::span<const double> x, std::span<const double> y) const;

    [[nodiscard]] std::string describe() const;

private:
    SpatialKernel() = default;

    SpatialFamily family_ = SpatialFamily::RBF;
    MaternNu nu_ = MaternNu::FiveHalves;
    std::vector<double> lengthscales_;
};

/// k((x,t),(x',t')) = k_S(x,x') k_T(|t-t'|).
struct SpatioTemporalKernel {
    SpatialKernel spatial;
    TemporalKernel temporal;

    [[nodiscard]] double operator()(std::span<const double> x, double t, std::span<const double> y,
                                    double s) const {
        return spatial(x, y) * temporal(t - s);
    }
};

double eval_temporal(const TemporalKernel& kernel, double lag) noexcept;

KernelClass classify(const TemporalKernel& kernel) noexcept;

/// S_T(w) for continuous-support kernels. Throws WrongClass for discrete ones.
double spectral_density(const TemporalKernel& kernel, double frequency);

/// Full line list {(w_p, alpha_p)} for discrete-support kernels, both signs of
/// each nonzero frequency listed. Periodic lines are truncated once the
/// remaining mass drops below 1e-16. Throws WrongClass for continuous kernels.
std::vector<SpectralLine> spectral_lines(const TemporalKernel& kernel);

using SpectralDescription = std::variant<double, std::vector<SpectralLine>>;

/// Density value for continuous classes, line list for discrete ones.
SpectralDescription describe_spectrum(const TemporalKernel& kernel, double frequency);

/// Trigonometric polynomial c0 + sum_j c_j cos(2 pi w_j u).
struct LowRankKernel {
    double constant = 0.0;
    std::vector<CosineTerm> terms;

    [[nodiscard]] double operator()(double lag) const noexcept;
    /// c0 + sum c_j.
    [[nodiscard]] double total_weight() const noexcept;
    [[nodiscard]] std::size_t cosine_count() const noexcept { return terms.size(); }
    /// Nonnegative coefficients summing to 1 within tol.
    [[nodiscard]] bool is_valid(double tol = 1e-9) const noexcept;
    [[nodiscard]] TemporalKernel to_temporal() const;
};

struct LowRankApproximation {
    LowRankKernel kernel;
    /// max_j |k(j dt) - k~(j dt)| over j in [0, n-1].
    double grid_residual = 0.0;
    /// Coefficients available before truncation (n for the DCT path).
    std::size_t candidate_count = 0;
};

/// Low-rank approximation of an almost-periodic kernel sampled on {j dt}:
/// DCT-I of the samples, then the largest prefix of smallest-magnitude
/// coefficients is dropped while the grid residual stays <= tol. CosineSum
/// input is returned unchanged. Throws WrongClass for continuous kernels and
/// ToleranceUnreachable when the untruncated reconstruction misses tol.
LowRankApproximation low_rank_approx(const TemporalKernel& kernel, double dt, std::size_t n,
                                     double tol);

// JSON: {"family": "...", ...}; field names are listed in docs/schemas.md.
nlohmann::json to_json(const TemporalKernel& kernel);
nlohmann::json to_json(const SpatialKernel& kernel);
TemporalKernel temporal_kernel_from_json(const nlohmann::json& j);
SpatialKernel spatial_kernel_from_json(const nlohmann::json& j, std::size_t default_dimension = 1);

}  // namespace tvbo
