#include "tvbo/gp.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

#include "format.hpp"
#include "tvbo/errors.hpp"

namespace tvbo {

namespace {

constexpr double kStepTol = 1e-9;

double effective_noise(double noise) { return noise > 0.0 ? noise : kNoiselessJitter; }

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_cell(const std::string& cell, std::size_t line) {
    double v = 0.0;
    const auto* end = cell.data() + cell.size();
    const auto res = std::from_chars(cell.data(), end, v);
    require(res.ec == std::errc() && res.ptr == end, ErrorKind::ParseError,
            "line " + std::to_string(line) + ": '" + cell + "' is not a number");
    return v;
}

}  // namespace

// ---------------------------------------------------------------------------
// Dataset

Dataset::Dataset(std::size_t dimension, double noise_variance) : dimension_(dimension), noise_(noise_variance) {
    require(dimension >= 1, ErrorKind::InvalidArgument, "dataset dimension must be >= 1");
    require(std::isfinite(noise_variance) && noise_variance >= 0.0, ErrorKind::InvalidArgument,
            "noise variance must be nonnegative");
}

void Dataset::append(Observation obs) {
    require(obs.x.size() == dimension_, ErrorKind::DimensionMismatch,
            "observation has dimension " + std::to_string(obs.x.size()) + ", expected " +
                std::to_string(dimension_));
    for (double v : obs.x)
        require(v >= 0.0 && v <= 1.0, ErrorKind::InvalidArgument, "observation point outside [0,1]^d");
    require(std::isfinite(obs.t) && std::isfinite(obs.y), ErrorKind::InvalidArgument,
            "observation time and value must be finite");
    if (!records_.empty()) {
        const double gap = obs.t - records_.back().t;
        require(gap > 0.0, ErrorKind::InvalidArgument, "observation times must be strictly increasing");
        if (step_) {
            require(std::abs(gap - *step_) <= kStepTol * std::max(1.0, std::abs(*step_)),
                    ErrorKind::InvalidArgument, "observation times must have a constant step");
        } else {
            step_ = gap;
        }
    }
    records_.push_back(std::move(obs));
}

std::vector<SpaceTimePoint> Dataset::points() const {
    std::vector<SpaceTimePoint> p;
    p.reserve(records_.size());
    for (const auto& r : records_) p.push_back({r.x, r.t});
    return p;
}

Eigen::VectorXd Dataset::targets() const {
    Eigen::VectorXd y(static_cast<Eigen::Index>(records_.size()));
    for (std::size_t i = 0; i < records_.size(); ++i) y(static_cast<Eigen::Index>(i)) = records_[i].y;
    return y;
}

void Dataset::write_csv(std::ostream& os) const {
    for (std::size_t k = 0; k < dimension_; ++k) os << "x_" << (k + 1) << ',';
    os << "t,y\n";
    for (const auto& r : records_) {
        for (double v : r.x) os << detail::format_double(v) << ',';
        os << detail::format_double(r.t) << ',' << detail::format_double(r.y) << '\n';
    }
}

Dataset Dataset::read_csv(std::istream& is, double noise_variance) {
    std::string line;
    require(static_cast<bool>(std::getline(is, line)), ErrorKind::ParseError, "empty dataset CSV");
    const auto header = split_csv(line);
    require(header.size() >= 3 && header[header.size() - 2] == "t" && header.back() == "y",
            ErrorKind::ParseError, "dataset header must be x_1..x_d,t,y");
    const std::size_t d = header.size() - 2;
    for (std::size_t k = 0; k < d; ++k)
        require(header[k] == "x_" + std::to_string(k + 1), ErrorKind::ParseError,
                "dataset header column " + std::to_string(k + 1) + " must be x_" + std::to_string(k + 1));
    Dataset data(d, noise_variance);
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto cells = split_csv(line);
        require(cells.size() == d + 2, ErrorKind::ParseError,
                "line " + std::to_string(lineno) + ": expected " + std::to_string(d + 2) + " columns");
        Observation obs;
        for (std::size_t k = 0; k < d; ++k) obs.x.push_back(parse_cell(cells[k], lineno));
        obs.t = parse_cell(cells[d], lineno);
        obs.y = parse_cell(cells[d + 1], lineno);
        data.append(std::move(obs));
    }
    return data;
}

// ---------------------------------------------------------------------------
// GPPosterior

GPPosterior::GPPosterior(SpatialKernel spatial, TemporalKernel temporal, double noise_variance)
    : spatial_(std::move(spatial)), temporal_(std::move(temporal)), noise_(effective_noise(noise_variance)) {
    require(std::isfinite(noise_variance) && noise_variance >= 0.0, ErrorKind::InvalidArgument,
            "noise variance must be nonnegative");
}

GPPosterior GPPosterior::from_dataset(const SpatialKernel& spatial, const TemporalKernel& temporal,
                                      const Dataset& data) {
    require(data.dimension() == spatial.dimension(), ErrorKind::DimensionMismatch,
            "dataset dimension differs from spatial kernel dimension");
    GPPosterior post(spatial, temporal, data.noise_variance());
    if (data.empty()) return post;
    const auto pts = data.points();
    Eigen::MatrixXd k = build_spatiotemporal_matrix(spatial, temporal, pts).matrix();
    k.diagonal().array() += post.noise_;
    Eigen::LLT<Eigen::MatrixXd> llt(k);
    require(llt.info() == Eigen::Success, ErrorKind::SingularSystem,
            "regularized Gram matrix is not positive definite");
    post.points_ = pts;
    post.y_ = data.targets();
    post.chol_ = llt.matrixL();
    post.alpha_ = llt.solve(post.y_);
    return post;
}

Eigen::VectorXd GPPosterior::cross(std::span<const double> x, double t) const {
    Eigen::VectorXd k(static_cast<Eigen::Index>(points_.size()));
    for (std::size_t j = 0; j < points_.size(); ++j)
        k(static_cast<Eigen::Index>(j)) = spatial_(x, points_[j].x) * temporal_(t - points_[j].t);
    return k;
}

GPPosterior GPPosterior::condition(const Observation& obs) const {
    require(obs.x.size() == spatial_.dimension(), ErrorKind::DimensionMismatch,
            "observation dimension differs from spatial kernel dimension");
    GPPosterior next = *this;
    const auto n = static_cast<Eigen::Index>(points_.size());
    const Eigen::VectorXd k = cross(obs.x, obs.t);
    Eigen::VectorXd row = k;
    if (n > 0) chol_.triangularView<Eigen::Lower>().solveInPlace(row);
    const double diag2 = spatial_(obs.x, obs.x) * temporal_(0.0) + noise_ - row.squaredNorm();
    require(diag2 > 0.0 && std::isfinite(diag2), ErrorKind::SingularSystem,
            "Cholesky update lost positive definiteness");
    next.chol_.conservativeResize(n + 1, n + 1);
    next.chol_.row(n).head(n) = row.transpose();
    next.chol_.col(n).head(n).setZero();
    next.chol_(n, n) = std::sqrt(diag2);
    next.points_.push_back({obs.x, obs.t});
    next.y_.conservativeResize(n + 1);
    next.y_(n) = obs.y;
    next.alpha_ = next.chol_.triangularView<Eigen::Lower>().solve(next.y_);
    next.chol_.triangularView<Eigen::Lower>().transpose().solveInPlace(next.alpha_);
    return next;
}

double GPPosterior::mean(std::span<const double> x, double t) const {
    if (points_.empty()) return 0.0;
    return cross(x, t).dot(alpha_);
}

double GPPosterior::variance(std::span<const double> x, double t) const {
    const double prior = spatial_(x, x) * temporal_(0.0);
    if (points_.empty()) return prior;
    Eigen::VectorXd v = cross(x, t);
    chol_.triangularView<Eigen::Lower>().solveInPlace(v);
    return std::clamp(prior - v.squaredNorm(), 0.0, prior);
}

Prediction GPPosterior::predict(std::span<const SpaceTimePoint> queries) const {
    const auto q = static_cast<Eigen::Index>(queries.size());
    const auto n = static_cast<Eigen::Index>(points_.size());
    Prediction out;
    out.mean = Eigen::VectorXd::Zero(q);
    out.covariance = build_spatiotemporal_matrix(spatial_, temporal_, queries).matrix();
    if (n == 0) return out;
    Eigen::MatrixXd kq(n, q);
    for (Eigen::Index c = 0; c < q; ++c) kq.col(c) = cross(queries[c].x, queries[c].t);
    out.mean = kq.transpose() * alpha_;
    chol_.triangularView<Eigen::Lower>().solveInPlace(kq);
    out.covariance -= kq.transpose() * kq;
    out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
    return out;
}

GPPosterior::Marginals GPPosterior::marginals(std::span<const std::vector<double>> xs, double t) const {
    const auto q = static_cast<Eigen::Index>(xs.size());
    const auto n = static_cast<Eigen::Index>(points_.size());
    Marginals out;
    out.mean = Eigen::VectorXd::Zero(q);
    out.variance.resize(q);
    for (Eigen::Index c = 0; c < q; ++c) out.variance(c) = spatial_(xs[c], xs[c]) * temporal_(0.0);
    if (n == 0) return out;
    Eigen::MatrixXd kq(n, q);
    for (Eigen::Index c = 0; c < q; ++c) kq.col(c) = cross(xs[c], t);
    out.mean = kq.transpose() * alpha_;
    chol_.triangularView<Eigen::Lower>().solveInPlace(kq);
    for (Eigen::Index c = 0; c < q; ++c)
        out.variance(c) = std::clamp(out.variance(c) - kq.col(c).squaredNorm(), 0.0, out.variance(c));
    return out;
}

Prediction posterior(const SpatialKernel& spatial, const TemporalKernel& temporal, const Dataset& data,
                     std::span<const SpaceTimePoint> queries) {
    for (const auto& p : queries)
        require(p.x.size() == spatial.dimension(), ErrorKind::DimensionMismatch,
                "query dimension differs from spatial kernel dimension");
    return GPPosterior::from_dataset(spatial, temporal, data).predict(queries);
}

// ---------------------------------------------------------------------------
// Prior sampling

Eigen::MatrixXd sample_prior_path(const SpatialKernel& spatial, const TemporalKernel& temporal,
                                  std::span<const std::vector<double>> spatial_grid, const TimeGrid& times,
                                  std::uint64_t seed, const PriorSampleOptions& options) {
    const std::size_t m = spatial_grid.size();
    require(m >= 1, ErrorKind::InvalidArgument, "spatial grid is empty");
    require(m * times.n <= options.cap, ErrorKind::CapExceeded,
            "grid of " + std::to_string(m) + " x " + std::to_string(times.n) + " points exceeds cap " +
                std::to_string(options.cap));
    const Spectrum ss = eig_sym(build_spatial_matrix(spatial, spatial_grid), true);
    const Spectrum st = eig_sym(build_temporal_matrix(temporal, times), true);

    const auto rows = static_cast<Eigen::Index>(m);
    const auto cols = static_cast<Eigen::Index>(times.n);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd z(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) {
            const double lam = std::max(0.0, ss.values[static_cast<std::size_t>(i)]) *
                               std::max(0.0, st.values[static_cast<std::size_t>(j)]);
            z(i, j) = std::sqrt(lam + options.jitter) * normal(rng);
        }
    return (*ss.vectors) * z * st.vectors->transpose();
}

void write_prior_path_csv(std::ostream& os, const Eigen::MatrixXd& path,
                          std::span<const std::vector<double>> spatial_grid, const TimeGrid& times) {
    require(static_cast<std::size_t>(path.rows()) == spatial_grid.size() &&
                static_cast<std::size_t>(path.cols()) == times.n,
            ErrorKind::DimensionMismatch, "path shape differs from grid shape");
    const std::size_t d = spatial_grid.empty() ? 0 : spatial_grid.front().size();
    for (std::size_t k = 0; k < d; ++k) os << "x_" << (k + 1) << ',';
    for (std::size_t j = 0; j < times.n; ++j) os << "t=" << detail::format_double(times.time(j)) << (j + 1 < times.n ? "," : "\n");
    for (std::size_t i = 0; i < spatial_grid.size(); ++i) {
        for (double v : spatial_grid[i]) os << detail::format_double(v) << ',';
        for (std::size_t j = 0; j < times.n; ++j)
            os << detail::format_double(path(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)))
               << (j + 1 < times.n ? "," : "\n");
    }
}

// ---------------------------------------------------------------------------
// Mercer approximation

MercerEstimate mercer_posterior(const Spectrum& spectrum, const SpatialKernel& spatial,
                                const TemporalKernel& temporal, const Dataset& data,
                                const SpaceTimePoint& query) {
    MercerEstimate out;
    if (data.empty()) return out;
    require(spectrum.has_vectors(), ErrorKind::MissingEigenvectors, "Mercer posterior needs eigenvectors");
    require(spectrum.scale == SpectrumScale::Matrix, ErrorKind::ScaleMismatch,
            "Mercer posterior expects matrix-scale eigenvalues");
    const Eigen::MatrixXd& phi = *spectrum.vectors;
    const auto n = static_cast<Eigen::Index>(data.size());
    require(phi.rows() == n, ErrorKind::DimensionMismatch, "eigenvectors do not match the dataset size");
    require(query.x.size() == spatial.dimension(), ErrorKind::DimensionMismatch,
            "query dimension differs from spatial kernel dimension");

    const auto& recs = data.records();
    Eigen::VectorXd kz(n);
    for (Eigen::Index j = 0; j < n; ++j)
        kz(j) = spatial(query.x, recs[static_cast<std::size_t>(j)].x) *
                temporal(query.t - recs[static_cast<std::size_t>(j)].t);
    const Eigen::VectorXd y = data.targets();

    // With phi_i(z_j) = sqrt(n) Phi_ij and the Nystrom extension
    // phi_i(z) = sqrt(n)/Lambda_i * Phi_i^T k_z, both Mercer sums reduce to
    // projections onto the eigenvectors.
    const double cut = kPositiveThreshold * spectrum.max();
    double mean = 0.0;
    double explained = 0.0;
    for (Eigen::Index i = 0; i < phi.cols(); ++i) {
        const double lam = spectrum.values[static_cast<std::size_t>(i)];
        if (!(lam > cut)) continue;
        const double proj = phi.col(i).dot(kz);
        mean += proj * phi.col(i).dot(y) / lam;
        explained += proj * proj / lam;
    }
    out.mean = mean;
    out.variance = std::clamp(1.0 - explained, 0.0, 1.0);
    return out;
}

}  // namespace tvbo
