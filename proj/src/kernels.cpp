#include "tvbo/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tvbo/errors.hpp"

namespace tvbo {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kWeightTol = 1e-9;

void require_positive(double v, const char* name) {
    require(std::isfinite(v) && v > 0.0, ErrorKind::InvalidArgument,
            std::string(name) + " must be a positive finite number");
}

double matern_correlation(MaternNu nu, double r) noexcept {
    switch (nu) {
        case MaternNu::Half: return std::exp(-r);
        case MaternNu::ThreeHalves: {
            const double a = std::sqrt(3.0) * r;
            return (1.0 + a) * std::exp(-a);
        }
        case MaternNu::FiveHalves: {
            const double a = std::sqrt(5.0) * r;
            return (1.0 + a + a * a / 3.0) * std::exp(-a);
        }
    }
    return 0.0;
}

std::string format_number(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

}  // namespace

double nu_value(MaternNu nu) noexcept {
    switch (nu) {
        case MaternNu::Half: return 0.5;
        case MaternNu::ThreeHalves: return 1.5;
        case MaternNu::FiveHalves: return 2.5;
    }
    return 0.0;
}

std::string to_string(KernelClassTag tag) {
    switch (tag) {
        case KernelClassTag::Broadband: return "broadband";
        case KernelClassTag::BandLimited: return "band-limited";
        case KernelClassTag::AlmostPeriodic: return "almost-periodic";
        case KernelClassTag::LowRank: return "low-rank";
    }
    return "unknown";
}

KernelClass kernel_class_from_support(bool bounded, bool discrete) noexcept {
    KernelClassTag tag = KernelClassTag::Broadband;
    if (bounded && !discrete) tag = KernelClassTag::BandLimited;
    if (!bounded && discrete) tag = KernelClassTag::AlmostPeriodic;
    if (bounded && discrete) tag = KernelClassTag::LowRank;
    return {tag, bounded, discrete};
}

// ---------------------------------------------------------------------------
// TemporalKernel

TemporalKernel TemporalKernel::rbf(double lengthscale) {
    require_positive(lengthscale, "lengthscale");
    TemporalKernel k;
    k.family_ = TemporalFamily::RBF;
    k.lengthscale_ = lengthscale;
    return k;
}

TemporalKernel TemporalKernel::matern(MaternNu nu, double lengthscale) {
    require_positive(lengthscale, "lengthscale");
    TemporalKernel k;
    k.family_ = TemporalFamily::Matern;
    k.nu_ = nu;
    k.lengthscale_ = lengthscale;
    return k;
}

TemporalKernel TemporalKernel::rational_quadratic(double lengthscale, double alpha) {
    require_positive(lengthscale, "lengthscale");
    require_positive(alpha, "alpha");
    TemporalKernel k;
    k.family_ = TemporalFamily::RationalQuadratic;
    k.lengthscale_ = lengthscale;
    k.alpha_ = alpha;
    return k;
}

TemporalKernel TemporalKernel::sinc(double bandlimit) {
    require_positive(bandlimit, "bandlimit");
    TemporalKernel k;
    k.family_ = TemporalFamily::Sinc;
    k.bandlimit_ = bandlimit;
    return k;
}

TemporalKernel TemporalKernel::sinc_squared(double bandlimit) {
    require_positive(bandlimit, "bandlimit");
    TemporalKernel k;
    k.family_ = TemporalFamily::SincSquared;
    k.bandlimit_ = bandlimit;
    return k;
}

TemporalKernel TemporalKernel::periodic(double period, double lengthscale) {
    require_positive(period, "period");
    require_positive(lengthscale, "lengthscale");
    TemporalKernel k;
    k.family_ = TemporalFamily::Periodic;
    k.period_ = period;
    k.lengthscale_ = lengthscale;
    return k;
}

TemporalKernel TemporalKernel::cosine_sum(double constant, std::vector<CosineTerm> terms) {
    require(std::isfinite(constant) && constant >= 0.0, ErrorKind::InvalidArgument,
            "cosine_sum constant weight must be nonnegative");
    double total = constant;
    for (const auto& t : terms) {
        require(std::isfinite(t.frequency) && t.frequency >= 0.0, ErrorKind::InvalidArgument,
                "cosine_sum frequencies must be nonnegative");
        require(std::isfinite(t.coefficient) && t.coefficient >= 0.0 && t.coefficient <= 1.0,
                ErrorKind::InvalidArgument, "cosine_sum coefficients must lie in [0, 1]");
        total += t.coefficient;
    }
    require(std::abs(total - 1.0) <= kWeightTol, ErrorKind::InvalidArgument,
            "cosine_sum weights must sum to 1 (got " + format_number(total) + ")");
    TemporalKernel k;
    k.family_ = TemporalFamily::CosineSum;
    k.constant_ = constant;
    k.terms_ = std::move(terms);
    return k;
}

double TemporalKernel::operator()(double lag) const noexcept {
    const double u = std::abs(lag);
    switch (family_) {
        case TemporalFamily::RBF: {
            const double r = u / lengthscale_;
            return std::exp(-0.5 * r * r);
        }
        case TemporalFamily::Matern: return matern_correlation(nu_, u / lengthscale_);
        case TemporalFamily::RationalQuadratic:
            return std::pow(1.0 + u * u / (2.0 * alpha_ * lengthscale_ * lengthscale_), -alpha_);
        case TemporalFamily::Sinc: {
            if (u == 0.0) return 1.0;
            const double x = 2.0 * kPi * bandlimit_ * u;
            return std::sin(x) / x;
        }
        case TemporalFamily::SincSquared: {
            if (u == 0.0) return 1.0;
            const double x = kPi * bandlimit_ * u;
            const double s = std::sin(x) / x;
            return s * s;
        }
        case TemporalFamily::Periodic: {
            const double s = std::sin(kPi * u / period_);
            return std::exp(-2.0 * s * s / (lengthscale_ * lengthscale_));
        }
        case TemporalFamily::CosineSum: {
            double v = constant_;
            for (const auto& t : terms_) v += t.coefficient * std::cos(2.0 * kPi * t.frequency * u);
            return v;
        }
    }
    return 0.0;
}

std::string TemporalKernel::describe() const {
    switch (family_) {
        case TemporalFamily::RBF: return "rbf(l=" + format_number(lengthscale_) + ")";
        case TemporalFamily::Matern:
            return "matern(nu=" + format_number(nu_value(nu_)) + ",l=" + format_number(lengthscale_) + ")";
        case TemporalFamily::RationalQuadratic:
            return "rq(l=" + format_number(lengthscale_) + ",alpha=" + format_number(alpha_) + ")";
        case TemporalFamily::Sinc: return "sinc(tau=" + format_number(bandlimit_) + ")";
        case TemporalFamily::SincSquared: return "sinc2(tau=" + format_number(bandlimit_) + ")";
        case TemporalFamily::Periodic:
            return "periodic(r=" + format_number(period_) + ",l=" + format_number(lengthscale_) + ")";
        case TemporalFamily::CosineSum:
            return "cosine_sum(c0=" + format_number(constant_) + ",L=" + std::to_string(terms_.size()) + ")";
    }
    return "unknown";
}

double eval_temporal(const TemporalKernel& kernel, double lag) noexcept { return kernel(lag); }

KernelClass classify(const TemporalKernel& kernel) noexcept {
    switch (kernel.family()) {
        case TemporalFamily::RBF:
        case TemporalFamily::Matern:
        case TemporalFamily::RationalQuadratic: return kernel_class_from_support(false, false);
        case TemporalFamily::Sinc:
        case TemporalFamily::SincSquared: return kernel_class_from_support(true, false);
        case TemporalFamily::Periodic: return kernel_class_from_support(false, true);
        case TemporalFamily::CosineSum: return kernel_class_from_support(true, true);
    }
    return kernel_class_from_support(false, false);
}

double spectral_density(const TemporalKernel& kernel, double frequency) {
    const double w = std::abs(frequency);
    const double l = kernel.lengthscale();
    switch (kernel.family()) {
        case TemporalFamily::RBF:
            return l * std::sqrt(2.0 * kPi) * std::exp(-2.0 * kPi * kPi * l * l * w * w);
        case TemporalFamily::Matern: {
            const double nu = nu_value(kernel.nu());
            const double scale = 2.0 * std::sqrt(kPi) * std::tgamma(nu + 0.5) * std::pow(2.0 * nu, nu) /
                                 (std::tgamma(nu) * std::pow(l, 2.0 * nu));
            return scale * std::pow(2.0 * nu / (l * l) + 4.0 * kPi * kPi * w * w, -(nu + 0.5));
        }
        case TemporalFamily::RationalQuadratic: {
            // (1 + u^2/c^2)^-a with c^2 = 2 a l^2; Fourier pair via modified Bessel K.
            const double a = kernel.rq_alpha();
            const double c = l * std::sqrt(2.0 * a);
            const double order = a - 0.5;
            if (w == 0.0) {
                if (order <= 0.0) return std::numeric_limits<double>::infinity();
                return c * std::sqrt(kPi) * std::tgamma(order) / std::tgamma(a);
            }
            const double z = 2.0 * kPi * c * w;
            if (z > 700.0) return 0.0;
            return std::pow(c, 2.0 * a) * (2.0 * std::sqrt(kPi) / std::tgamma(a)) *
                   std::pow(kPi * w / c, order) * std::cyl_bessel_k(std::abs(order), z);
        }
        case TemporalFamily::Sinc: {
            const double tau = kernel.bandlimit();
            // The jump at the band edge takes the midpoint value.
            if (w == tau) return 1.0 / (4.0 * tau);
            return w < tau ? 1.0 / (2.0 * tau) : 0.0;
        }
        case TemporalFamily::SincSquared: {
            const double tau = kernel.bandlimit();
            return w <= tau ? (1.0 - w / tau) / tau : 0.0;
        }
        case TemporalFamily::Periodic:
        case TemporalFamily::CosineSum:
            fail(ErrorKind::WrongClass, "spectral density of " + kernel.describe() +
                                            " is a line spectrum; use spectral_lines");
    }
    return 0.0;
}

std::vector<SpectralLine> spectral_lines(const TemporalKernel& kernel) {
    std::vector<SpectralLine> lines;
    if (kernel.family() == TemporalFamily::CosineSum) {
        lines.push_back({0.0, kernel.constant()});
        for (const auto& t : kernel.terms()) {
            if (t.frequency == 0.0) {
                lines.front().weight += t.coefficient;
                continue;
            }
            lines.push_back({t.frequency, 0.5 * t.coefficient});
            lines.push_back({-t.frequency, 0.5 * t.coefficient});
        }
        return lines;
    }
    if (kernel.family() == TemporalFamily::Periodic) {
        // exp(z cos(theta) - z) = e^-z sum_p I_p(z) e^{i p theta}, theta = 2 pi u / r.
        const double z = 1.0 / (kernel.lengthscale() * kernel.lengthscale());
        require(z <= 650.0, ErrorKind::InvalidArgument,
                "periodic lengthscale too small for a stable line expansion");
        const double r = kernel.period();
        double mass = std::exp(-z) * std::cyl_bessel_i(0.0, z);
        lines.push_back({0.0, mass});
        for (int p = 1; p < 100000; ++p) {
            const double a = std::exp(-z) * std::cyl_bessel_i(static_cast<double>(p), z);
            if (a <= 0.0) break;
            lines.push_back({p / r, a});
            lines.push_back({-p / r, a});
            mass += 2.0 * a;
            if (1.0 - mass < 1e-16 || a < 1e-300) break;
        }
        return lines;
    }
    fail(ErrorKind::WrongClass, kernel.describe() + " has a continuous spectral density");
}

SpectralDescription describe_spectrum(const TemporalKernel& kernel, double frequency) {
    if (classify(kernel).support_discrete) return spectral_lines(kernel);
    return spectral_density(kernel, frequency);
}

// ---------------------------------------------------------------------------
// SpatialKernel

SpatialKernel SpatialKernel::rbf(std::vector<double> lengthscales) {
    require(!lengthscales.empty(), ErrorKind::InvalidArgument, "spatial dimension must be >= 1");
    for (double l : lengthscales) require_positive(l, "lengthscale");
    SpatialKernel k;
    k.family_ = SpatialFamily::RBF;
    k.lengthscales_ = std::move(lengthscales);
    return k;
}

SpatialKernel SpatialKernel::rbf(double lengthscale, std::size_t dimension) {
    return rbf(std::vector<double>(dimension, lengthscale));
}

SpatialKernel SpatialKernel::matern(MaternNu nu, std::vector<double> lengthscales) {
    SpatialKernel k = rbf(std::move(lengthscales));
    k.family_ = SpatialFamily::Matern;
    k.nu_ = nu;
    return k;
}

SpatialKernel SpatialKernel::matern(MaternNu nu, double lengthscale, std::size_t dimension) {
    return matern(nu, std::vector<double>(dimension, lengthscale));
}

double SpatialKernel::operator()(std::span<const double> x, std::span<const double> y) const {
    const std::size_t d = lengthscales_.size();
    require(x.size() == d && y.size() == d, ErrorKind::DimensionMismatch,
            "spatial point dimension does not match kernel dimension " + std::to_string(d));
    double r2 = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        const double z = (x[i] - y[i]) / lengthscales_[i];
        r2 += z * z;
    }
    if (family_ == SpatialFamily::RBF) return std::exp(-0.5 * r2);
    return matern_correlation(nu_, std::sqrt(r2));
}

std::string SpatialKernel::describe() const {
    std::string s = family_ == SpatialFamily::RBF ? "rbf" : "matern(nu=" + format_number(nu_value(nu_)) + ")";
    s += "(d=" + std::to_string(dimension()) + ",l=" + format_number(lengthscales_.front());
    return s + ")";
}

// ---------------------------------------------------------------------------
// Low-rank kernels

double LowRankKernel::operator()(double lag) const noexcept {
    const double u = std::abs(lag);
    double v = constant;
    for (const auto& t : terms) v += t.coefficient * std::cos(2.0 * kPi * t.frequency * u);
    return v;
}

double LowRankKernel::total_weight() const noexcept {
    return std::accumulate(terms.begin(), terms.end(), constant,
                           [](double acc, const CosineTerm& t) { return acc + t.coefficient; });
}

bool LowRankKernel::is_valid(double tol) const noexcept {
    if (constant < 0.0) return false;
    for (const auto& t : terms)
        if (t.coefficient < 0.0 || t.frequency <= 0.0) return false;
    return std::abs(total_weight() - 1.0) <= tol;
}

TemporalKernel LowRankKernel::to_temporal() const {
    // The TemporalKernel factory insists on weights summing to 1; truncated
    // approximations are renormalized on conversion.
    const double total = total_weight();
    require(total > 0.0, ErrorKind::InvalidArgument, "low-rank kernel has no positive weight");
    std::vector<CosineTerm> scaled = terms;
    for (auto& t : scaled) t.coefficient = std::max(0.0, t.coefficient) / total;
    return TemporalKernel::cosine_sum(std::max(0.0, constant) / total, std::move(scaled));
}

LowRankApproximation low_rank_approx(const TemporalKernel& kernel, double dt, std::size_t n, double tol) {
    require_positive(dt, "time step");
    require(n >= 2, ErrorKind::InvalidArgument, "low_rank_approx needs n >= 2");
    require_positive(tol, "tolerance");
    const KernelClass cls = classify(kernel);

    if (cls.tag == KernelClassTag::LowRank) {
        LowRankApproximation out;
        out.kernel.constant = kernel.constant();
        out.kernel.terms = kernel.terms();
        out.candidate_count = kernel.terms().size() + 1;
        return out;
    }
    require(cls.tag == KernelClassTag::AlmostPeriodic, ErrorKind::WrongClass,
            "low_rank_approx expects an almost-periodic kernel, got " + kernel.describe());

    // DCT-I of s_j = k(j dt) on the even extension of period 2N, N = n - 1:
    // s_j = c_0 + sum_{m=1}^{N} c_m cos(pi m j / N), so w_m = m / (2 N dt).
    const std::size_t big_n = n - 1;
    std::vector<double> samples(n);
    for (std::size_t j = 0; j < n; ++j) samples[j] = kernel(static_cast<double>(j) * dt);

    std::vector<std::vector<double>> basis(n, std::vector<double>(n));
    for (std::size_t m = 0; m < n; ++m)
        for (std::size_t j = 0; j < n; ++j)
            basis[m][j] = std::cos(kPi * static_cast<double>((m * j) % (2 * big_n)) / static_cast<double>(big_n));

    std::vector<double> coef(n, 0.0);
    for (std::size_t m = 0; m < n; ++m) {
        double x = samples[0] + basis[m][big_n] * samples[big_n];
        for (std::size_t j = 1; j < big_n; ++j) x += 2.0 * samples[j] * basis[m][j];
        const bool edge = (m == 0 || m == big_n);
        coef[m] = x / (edge ? 2.0 * static_cast<double>(big_n) : static_cast<double>(big_n));
    }

    // residual_j = s_j - reconstruction_j, updated as terms are dropped.
    std::vector<double> residual(samples);
    for (std::size_t m = 0; m < n; ++m)
        for (std::size_t j = 0; j < n; ++j) residual[j] -= coef[m] * basis[m][j];
    auto sup = [](const std::vector<double>& r) {
        double s = 0.0;
        for (double v : r) s = std::max(s, std::abs(v));
        return s;
    };
    const double full_residual = sup(residual);
    require(full_residual <= tol, ErrorKind::ToleranceUnreachable,
            "DCT reconstruction residual " + format_number(full_residual) + " exceeds tolerance");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return std::abs(coef[a]) < std::abs(coef[b]); });

    std::size_t best_drop = 0;
    double best_residual = full_residual;
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t m = order[k];
        for (std::size_t j = 0; j < n; ++j) residual[j] += coef[m] * basis[m][j];
        const double r = sup(residual);
        if (r <= tol) {
            best_drop = k + 1;
            best_residual = r;
        }
    }

    std::vector<bool> kept(n, true);
    for (std::size_t k = 0; k < best_drop; ++k) kept[order[k]] = false;

    LowRankApproximation out;
    out.candidate_count = n;
    out.grid_residual = best_residual;
    out.kernel.constant = kept[0] ? coef[0] : 0.0;
    for (std::size_t m = 1; m < n; ++m) {
        if (!kept[m]) continue;
        out.kernel.terms.push_back(
            {static_cast<double>(m) / (2.0 * static_cast<double>(big_n) * dt), coef[m]});
    }
    return out;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

std::string nu_string(MaternNu nu) {
    switch (nu) {
        case MaternNu::Half: return "1/2";
        case MaternNu::ThreeHalves: return "3/2";
        case MaternNu::FiveHalves: return "5/2";
    }
    return "5/2";
}

MaternNu parse_nu(const nlohmann::json& j) {
    if (j.is_number()) {
        const double v = j.get<double>();
        if (v == 0.5) return MaternNu::Half;
        if (v == 1.5) return MaternNu::ThreeHalves;
        if (v == 2.5) return MaternNu::FiveHalves;
    } else if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "1/2") return MaternNu::Half;
        if (s == "3/2") return MaternNu::ThreeHalves;
        if (s == "5/2") return MaternNu::FiveHalves;
    }
    fail(ErrorKind::ParseError, "field 'nu' must be one of 1/2, 3/2, 5/2");
}

double number_field(const nlohmann::json& j, const char* key) {
    require(j.contains(key), ErrorKind::ParseError, std::string("missing field '") + key + "'");
    require(j.at(key).is_number(), ErrorKind::ParseError, std::string("field '") + key + "' must be a number");
    return j.at(key).get<double>();
}

double number_field_or(const nlohmann::json& j, const char* key, double fallback) {
    return j.contains(key) ? number_field(j, key) : fallback;
}

std::string family_field(const nlohmann::json& j) {
    require(j.is_object(), ErrorKind::ParseError, "kernel must be a JSON object");
    require(j.contains("family") && j.at("family").is_string(), ErrorKind::ParseError,
            "missing field 'family'");
    return j.at("family").get<std::string>();
}

}  // namespace

nlohmann::json to_json(const TemporalKernel& k) {
    using nlohmann::json;
    switch (k.family()) {
        case TemporalFamily::RBF: return json{{"family", "rbf"}, {"lengthscale", k.lengthscale()}};
        case TemporalFamily::Matern:
            return json{{"family", "matern"}, {"nu", nu_string(k.nu())}, {"lengthscale", k.lengthscale()}};
        case TemporalFamily::RationalQuadratic:
            return json{{"family", "rational_quadratic"}, {"lengthscale", k.lengthscale()}, {"alpha", k.rq_alpha()}};
        case TemporalFamily::Sinc: return json{{"family", "sinc"}, {"bandlimit", k.bandlimit()}};
        case TemporalFamily::SincSquared: return json{{"family", "sinc_squared"}, {"bandlimit", k.bandlimit()}};
        case TemporalFamily::Periodic:
            return json{{"family", "periodic"}, {"period", k.period()}, {"lengthscale", k.lengthscale()}};
        case TemporalFamily::CosineSum: {
            json terms = json::array();
            for (const auto& t : k.terms()) terms.push_back({{"frequency", t.frequency}, {"coefficient", t.coefficient}});
            return json{{"family", "cosine_sum"}, {"constant", k.constant()}, {"terms", terms}};
        }
    }
    return json{};
}

nlohmann::json to_json(const SpatialKernel& k) {
    nlohmann::json j{{"family", k.family() == SpatialFamily::RBF ? "rbf" : "matern"},
                     {"lengthscale", k.lengthscales()},
                     {"dimension", k.dimension()}};
    if (k.family() == SpatialFamily::Matern) j["nu"] = nu_string(k.nu());
    return j;
}

TemporalKernel temporal_kernel_from_json(const nlohmann::json& j) {
    const std::string family = family_field(j);
    if (family == "rbf") return TemporalKernel::rbf(number_field(j, "lengthscale"));
    if (family == "matern") {
        require(j.contains("nu"), ErrorKind::ParseError, "missing field 'nu'");
        return TemporalKernel::matern(parse_nu(j.at("nu")), number_field(j, "lengthscale"));
    }
    if (family == "rational_quadratic")
        return TemporalKernel::rational_quadratic(number_field(j, "lengthscale"), number_field_or(j, "alpha", 1.0));
    if (family == "sinc") return TemporalKernel::sinc(number_field(j, "bandlimit"));
    if (family == "sinc_squared") return TemporalKernel::sinc_squared(number_field(j, "bandlimit"));
    if (family == "periodic")
        return TemporalKernel::periodic(number_field(j, "period"), number_field(j, "lengthscale"));
    if (family == "cosine_sum") {
        std::vector<CosineTerm> terms;
        if (j.contains("terms")) {
            require(j.at("terms").is_array(), ErrorKind::ParseError, "field 'terms' must be an array");
            for (const auto& t : j.at("terms")) terms.push_back({number_field(t, "frequency"), number_field(t, "coefficient")});
        }
        return TemporalKernel::cosine_sum(number_field(j, "constant"), std::move(terms));
    }
    fail(ErrorKind::ParseError, "unknown temporal kernel family '" + family + "'");
}

SpatialKernel spatial_kernel_from_json(const nlohmann::json& j, std::size_t default_dimension) {
    const std::string family = family_field(j);
    require(j.contains("lengthscale"), ErrorKind::ParseError, "missing field 'lengthscale'");
    std::vector<double> ls;
    const auto& l = j.at("lengthscale");
    if (l.is_array()) {
        for (const auto& v : l) {
            require(v.is_number(), ErrorKind::ParseError, "field 'lengthscale' must hold numbers");
            ls.push_back(v.get<double>());
        }
        if (j.contains("dimension"))
            require(j.at("dimension").get<std::size_t>() == ls.size(), ErrorKind::ParseError,
                    "field 'dimension' disagrees with the lengthscale array");
    } else {
        require(l.is_number(), ErrorKind::ParseError, "field 'lengthscale' must be a number or array");
        const std::size_t d = j.contains("dimension") ? j.at("dimension").get<std::size_t>() : default_dimension;
        ls.assign(d, l.get<double>());
    }
    if (family == "rbf") return SpatialKernel::rbf(std::move(ls));
    if (family == "matern") {
        require(j.contains("nu"), ErrorKind::ParseError, "missing field 'nu'");
        return SpatialKernel::matern(parse_nu(j.at("nu")), std::move(ls));
    }
    fail(ErrorKind::ParseError, "unknown spatial kernel family '" + family + "'");
}

}  // namespace tvbo
