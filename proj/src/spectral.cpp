#include "tvbo/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <queue>
#include <set>
#include <tuple>

#include "format.hpp"
#include "tvbo/errors.hpp"

namespace tvbo {

namespace {

constexpr double kPi = std::numbers::pi;

Spectrum descending(std::vector<double> values, SpectrumScale scale) {
    std::sort(values.begin(), values.end(), std::greater<>());
    Spectrum s;
    s.values = std::move(values);
    s.scale = scale;
    return s;
}

}  // namespace

SymMatrix::SymMatrix(Eigen::MatrixXd m) : m_(std::move(m)) {
    require(m_.rows() == m_.cols(), ErrorKind::DimensionMismatch, "matrix is not square");
    require(m_.allFinite(), ErrorKind::InvalidArgument, "matrix has non-finite entries");
    const double scale = std::max(1.0, m_.cwiseAbs().maxCoeff());
    const double asym = m_.rows() == 0 ? 0.0 : (m_ - m_.transpose()).cwiseAbs().maxCoeff();
    require(asym <= 1e-12 * scale, ErrorKind::InvalidArgument, "matrix is not symmetric");
}

SymMatrix SymMatrix::leading(std::size_t order) const {
    require(order <= this->order(), ErrorKind::DimensionMismatch, "leading block larger than matrix");
    const auto k = static_cast<Eigen::Index>(order);
    return SymMatrix(m_.topLeftCorner(k, k));
}

Spectrum Spectrum::to_operator_scale(std::size_t n) const {
    require(scale == SpectrumScale::Matrix, ErrorKind::ScaleMismatch, "spectrum is already operator-scaled");
    require(n > 0, ErrorKind::InvalidArgument, "n must be positive");
    Spectrum out = *this;
    for (auto& v : out.values) v /= static_cast<double>(n);
    out.scale = SpectrumScale::Operator;
    return out;
}

TimeGrid::TimeGrid(std::size_t count, double step) : n(count), dt(step) {
    require(count >= 1, ErrorKind::InvalidArgument, "time grid needs n >= 1");
    require(std::isfinite(step) && step > 0.0, ErrorKind::InvalidArgument, "time step must be positive");
}

std::vector<double> TimeGrid::times() const {
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = time(i);
    return t;
}

SymMatrix build_temporal_matrix(const TemporalKernel& kernel, const TimeGrid& grid) {
    const auto n = static_cast<Eigen::Index>(grid.n);
    std::vector<double> row(grid.n);
    for (std::size_t j = 0; j < grid.n; ++j) row[j] = kernel(grid.dt * static_cast<double>(j));
    Eigen::MatrixXd m(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) m(i, j) = row[static_cast<std::size_t>(std::abs(i - j))];
    return SymMatrix(std::move(m));
}

SymMatrix build_spatial_matrix(const SpatialKernel& kernel, std::span<const std::vector<double>> points) {
    const auto n = static_cast<Eigen::Index>(points.size());
    Eigen::MatrixXd m(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        m(i, i) = kernel(points[i], points[i]);
        for (Eigen::Index j = 0; j < i; ++j) m(i, j) = m(j, i) = kernel(points[i], points[j]);
    }
    return SymMatrix(std::move(m));
}

SymMatrix build_spatiotemporal_matrix(const SpatialKernel& spatial, const TemporalKernel& temporal,
                                      std::span<const SpaceTimePoint> points) {
    const auto n = static_cast<Eigen::Index>(points.size());
    Eigen::MatrixXd m(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& p = points[i];
        m(i, i) = spatial(p.x, p.x) * temporal(0.0);
        for (Eigen::Index j = 0; j < i; ++j) {
            const auto& q = points[j];
            m(i, j) = m(j, i) = spatial(p.x, q.x) * temporal(p.t - q.t);
        }
    }
    return SymMatrix(std::move(m));
}

Spectrum eig_sym(const SymMatrix& m, bool want_vectors) {
    const Eigen::Index n = m.matrix().rows();
    Spectrum s;
    if (n == 0) {
        if (want_vectors) s.vectors = Eigen::MatrixXd(0, 0);
        return s;
    }
    const int options = want_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.matrix(), options);
    double shift = 0.0;
    if (es.info() != Eigen::Success) {
        // Large clusters of eigenvalues at rounding level can stall deflation;
        // moving the spectrum away from zero restores it.
        shift = m.matrix().cwiseAbs().rowwise().sum().maxCoeff();
        Eigen::MatrixXd shifted = m.matrix();
        shifted.diagonal().array() += shift;
        es.compute(shifted, options);
    }
    require(es.info() == Eigen::Success, ErrorKind::ConvergenceFailure,
            "symmetric QR iteration did not converge");
    s.values.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i)
        s.values[static_cast<std::size_t>(i)] = es.eigenvalues()(n - 1 - i) - shift;
    if (want_vectors) s.vectors = es.eigenvectors().rowwise().reverse();
    return s;
}

std::vector<double> circulant_embedding(const TemporalKernel& kernel, const TimeGrid& grid) {
    require(grid.n >= 2, ErrorKind::InvalidArgument, "circulant embedding needs n >= 2");
    const std::size_t n = grid.n;
    std::vector<double> c(n);
    c[0] = kernel(0.0);
    for (std::size_t j = 1; j < n; ++j)
        c[j] = kernel(grid.dt * static_cast<double>(j)) + kernel(grid.dt * static_cast<double>(n - j));
    return c;
}

std::vector<double> circulant_eigenvalues(std::span<const double> first_row) {
    const std::size_t n = first_row.size();
    std::vector<double> ev(n, 0.0);
    for (std::size_t m = 0; m < n; ++m) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            s += first_row[j] * std::cos(2.0 * kPi * static_cast<double>((j * m) % n) / static_cast<double>(n));
        ev[m] = s;
    }
    std::sort(ev.begin(), ev.end(), std::greater<>());
    return ev;
}

TemporalSpectrumApprox approx_temporal_spectrum(const TemporalKernel& kernel, const TimeGrid& grid) {
    require(!classify(kernel).support_discrete, ErrorKind::WrongClass,
            "density sampling needs a continuous spectral density, got " + kernel.describe());
    const double n = static_cast<double>(grid.n);
    TemporalSpectrumApprox out;
    out.unsorted.resize(grid.n);
    out.frequencies.resize(grid.n);
    for (std::size_t i = 1; i <= grid.n; ++i) {
        const double w = (static_cast<double>(i) - n / 2.0) / (n * grid.dt);
        out.frequencies[i - 1] = w;
        out.unsorted[i - 1] = spectral_density(kernel, w) / grid.dt;
    }
    out.sorted = descending(out.unsorted, SpectrumScale::Matrix);
    return out;
}

Spectrum approx_lowrank_spectrum(const LowRankKernel& kernel, std::size_t n) {
    std::vector<double> v;
    v.reserve(std::max(n, 2 * kernel.terms.size() + 1));
    const double dn = static_cast<double>(n);
    if (kernel.constant > 0.0) v.push_back(dn * kernel.constant);
    for (const auto& t : kernel.terms) {
        v.push_back(0.5 * dn * t.coefficient);
        v.push_back(0.5 * dn * t.coefficient);
    }
    std::sort(v.begin(), v.end(), std::greater<>());
    v.resize(n, 0.0);
    return descending(std::move(v), SpectrumScale::Matrix);
}

std::size_t ProductSpectrum::distinct_spatial() const {
    std::set<std::size_t> seen;
    for (const auto& p : provenance) seen.insert(p.first);
    return seen.size();
}

Spectrum clip_negative(const Spectrum& s, std::string* warning) {
    Spectrum out = s;
    double most_negative = 0.0;
    for (auto& v : out.values) {
        most_negative = std::min(most_negative, v);
        v = std::max(v, 0.0);
    }
    if (warning && most_negative < -1e-6 * std::max(s.max(), 0.0)) {
        *warning = "clipped negative eigenvalue " + detail::format_double(most_negative) +
                   " (lambda_max " + detail::format_double(s.max()) + ")";
    }
    return out;
}

ProductSpectrum approx_product_spectrum(const Spectrum& spatial, const Spectrum& temporal, std::size_t n) {
    ProductSpectrum out;
    std::string w;
    const Spectrum a = clip_negative(spatial, &w);
    if (!w.empty()) out.warnings.push_back("spatial: " + w);
    w.clear();
    const Spectrum b = clip_negative(temporal, &w);
    if (!w.empty()) out.warnings.push_back("temporal: " + w);
    require(std::is_sorted(a.values.begin(), a.values.end(), std::greater<>()) &&
                std::is_sorted(b.values.begin(), b.values.end(), std::greater<>()),
            ErrorKind::InvalidArgument, "product spectrum inputs must be descending");

    out.spectrum.scale = SpectrumScale::Matrix;
    if (a.values.empty() || b.values.empty() || n == 0) return out;

    const double dn = static_cast<double>(n);
    auto product = [&](std::size_t i, std::size_t j) { return a.values[i] * b.values[j] / dn; };
    using Node = std::tuple<double, std::size_t, std::size_t>;
    // Larger product first; ties resolved towards the smaller index pair.
    auto cmp = [](const Node& x, const Node& y) {
        if (std::get<0>(x) != std::get<0>(y)) return std::get<0>(x) < std::get<0>(y);
        return std::tie(std::get<1>(x), std::get<2>(x)) > std::tie(std::get<1>(y), std::get<2>(y));
    };
    std::priority_queue<Node, std::vector<Node>, decltype(cmp)> heap(cmp);
    heap.emplace(product(0, 0), 0, 0);
    // (i, j) enters from (i, j-1), or from (i-1, 0) when j == 0: every lattice
    // point has exactly one parent, which dominates it.
    while (!heap.empty() && out.spectrum.values.size() < n) {
        const auto [v, i, j] = heap.top();
        heap.pop();
        out.spectrum.values.push_back(v);
        out.provenance.emplace_back(i + 1, j + 1);
        if (j + 1 < b.values.size()) heap.emplace(product(i, j + 1), i, j + 1);
        if (j == 0 && i + 1 < a.values.size()) heap.emplace(product(i + 1, 0), i + 1, 0);
    }
    return out;
}

std::size_t count_in_interval(const Spectrum& s, double a, double b) {
    require(a <= b, ErrorKind::InvalidArgument, "interval must satisfy a <= b");
    return static_cast<std::size_t>(
        std::count_if(s.values.begin(), s.values.end(), [&](double v) { return a <= v && v <= b; }));
}

std::size_t count_positive(const Spectrum& s, double rel) {
    if (s.values.empty() || s.max() <= 0.0) return 0;
    const double cut = rel * s.max();
    return static_cast<std::size_t>(
        std::count_if(s.values.begin(), s.values.end(), [&](double v) { return v > cut; }));
}

void write_spectrum_csv(std::ostream& os, const Spectrum& s,
                        std::span<const std::pair<std::size_t, std::size_t>> provenance) {
    require(provenance.empty() || provenance.size() == s.size(), ErrorKind::DimensionMismatch,
            "provenance length differs from spectrum length");
    os << "index,eigenvalue,provenance_i,provenance_j\n";
    for (std::size_t i = 0; i < s.size(); ++i) {
        os << (i + 1) << ',' << detail::format_double(s.values[i]) << ',';
        if (!provenance.empty()) os << provenance[i].first << ',' << provenance[i].second;
        else os << ',';
        os << '\n';
    }
}

}  // namespace tvbo
