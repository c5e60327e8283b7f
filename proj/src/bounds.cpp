#include "tvbo/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "format.hpp"
#include "parallel.hpp"
#include "tvbo/errors.hpp"

namespace tvbo {

namespace {

constexpr double kPi = std::numbers::pi;

void require_noise(double noise) {
    require(std::isfinite(noise) && noise > 0.0, ErrorKind::InvalidArgument, "noise variance must be positive");
}

struct MeanStderr {
    double mean = 0.0;
    double stderr_ = 0.0;
};

template <class T>
MeanStderr summarize(const std::vector<T>& v) {
    MeanStderr out;
    if (v.empty()) return out;
    for (const auto& x : v) out.mean += static_cast<double>(x);
    out.mean /= static_cast<double>(v.size());
    if (v.size() < 2) return out;
    double ss = 0.0;
    for (const auto& x : v) ss += (static_cast<double>(x) - out.mean) * (static_cast<double>(x) - out.mean);
    out.stderr_ = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
    return out;
}

}  // namespace

double mutual_info_exact(const SymMatrix& k, double noise_variance) {
    require_noise(noise_variance);
    const Spectrum s = clip_negative(eig_sym(k));
    double info = 0.0;
    for (double v : s.values) info += std::log1p(v / noise_variance);
    return 0.5 * info;
}

std::vector<double> mutual_info_prefix(const SymMatrix& k, double noise_variance) {
    require_noise(noise_variance);
    const auto n = static_cast<Eigen::Index>(k.order());
    // det(I + K / s) = det(K / s + I); the Cholesky factor of K / s + I has
    // leading blocks that factor every leading principal submatrix.
    Eigen::MatrixXd scaled = k.matrix() / noise_variance;
    scaled.diagonal().array() += 1.0;
    Eigen::LLT<Eigen::MatrixXd> llt(scaled);
    require(llt.info() == Eigen::Success, ErrorKind::SingularSystem, "I + K / sigma^2 is not positive definite");
    const Eigen::MatrixXd l = llt.matrixL();
    std::vector<double> out(static_cast<std::size_t>(n));
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        acc += std::log(l(i, i));
        out[static_cast<std::size_t>(i)] = acc;
    }
    return out;
}

double mutual_info_spectral(const Spectrum& operator_spectrum, std::size_t n, double noise_variance) {
    require(operator_spectrum.scale == SpectrumScale::Operator, ErrorKind::ScaleMismatch,
            "spectral mutual information needs operator-scale eigenvalues");
    require_noise(noise_variance);
    const std::size_t m = std::min(n, operator_spectrum.size());
    double info = 0.0;
    for (std::size_t i = 0; i < m; ++i)
        info += std::log1p(static_cast<double>(n) * std::max(0.0, operator_spectrum.values[i]) / noise_variance);
    return 0.5 * info;
}

double c1_constant(double noise_variance) {
    require_noise(noise_variance);
    return (1.0 / noise_variance) / std::log1p(1.0 / noise_variance);
}

double upper_bound(std::size_t n, double beta, double noise_variance, double info, double c1) {
    require(beta >= 0.0 && noise_variance >= 0.0 && info >= 0.0 && c1 >= 0.0, ErrorKind::InvalidArgument,
            "upper bound inputs must be nonnegative");
    return std::sqrt(8.0 * c1 * beta * noise_variance * static_cast<double>(n) * info) + kPi * kPi / 6.0;
}

double truncated_gaussian_mean(double mu, double s) {
    require(s >= 0.0, ErrorKind::InvalidArgument, "standard deviation must be nonnegative");
    if (s == 0.0) return std::max(0.0, mu);
    const double z = mu / s;
    const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
    const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * kPi);
    return mu * cdf + s * pdf;
}

LowerBoundStep lower_bound_step(const Spectrum& prefix_spectrum, const SpatialKernel& spatial,
                                const TemporalKernel& temporal, std::span<const SpaceTimePoint> prefix,
                                const Eigen::VectorXd& prefix_objective, const SpaceTimePoint& a,
                                const SpaceTimePoint& b) {
    LowerBoundStep step;
    step.iteration = prefix.size() + 1;
    if (prefix.empty()) {
        step.sigma_hat = std::numbers::sqrt2;
        step.sigma2_with_covariance = 2.0 - 2.0 * spatial(a.x, b.x) * temporal(a.t - b.t);
        step.term = truncated_gaussian_mean(0.0, step.sigma_hat);
        return step;
    }
    require(prefix_spectrum.has_vectors(), ErrorKind::MissingEigenvectors, "lower bound needs eigenvectors");
    const Eigen::MatrixXd& phi = *prefix_spectrum.vectors;
    const auto n = static_cast<Eigen::Index>(prefix.size());
    require(phi.rows() == n && prefix_objective.size() == n, ErrorKind::DimensionMismatch,
            "prefix, eigenvectors and objective values differ in length");

    Eigen::VectorXd ka(n), kb(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const auto& p = prefix[static_cast<std::size_t>(j)];
        ka(j) = spatial(a.x, p.x) * temporal(a.t - p.t);
        kb(j) = spatial(b.x, p.x) * temporal(b.t - p.t);
    }
    // Nystrom eigenfunctions: lambda_bar phi(z)^2 = (Phi_i^T k_z)^2 / Lambda_i and
    // (1/n) phi(z) sum_j phi(z_j) f(z_j) = (Phi_i^T k_z)(Phi_i^T f) / Lambda_i.
    const double cut = kPositiveThreshold * prefix_spectrum.max();
    double mu = 0.0, explained = 0.0, cross = 0.0;
    for (Eigen::Index i = 0; i < phi.cols(); ++i) {
        const double lam = prefix_spectrum.values[static_cast<std::size_t>(i)];
        if (!(lam > cut)) continue;
        const double pa = phi.col(i).dot(ka);
        const double pb = phi.col(i).dot(kb);
        mu += (pa - pb) * phi.col(i).dot(prefix_objective) / lam;
        explained += (pa * pa + pb * pb) / lam;
        cross += pa * pb / lam;
    }
    step.mu_hat = mu;
    step.sigma2_raw = 2.0 - explained;
    const double cov = spatial(a.x, b.x) * temporal(a.t - b.t) - cross;
    step.sigma2_with_covariance = step.sigma2_raw - 2.0 * cov;
    const double clipped = std::clamp(step.sigma2_raw, 0.0, 2.0);
    step.clipped = clipped != step.sigma2_raw;
    step.sigma_hat = std::sqrt(clipped);
    step.term = truncated_gaussian_mean(step.mu_hat, step.sigma_hat);
    return step;
}

LowerBoundResult lower_bound(const SpatialKernel& spatial, const TemporalKernel& temporal,
                             std::span<const TrajectoryStep> trajectory) {
    LowerBoundResult out;
    std::vector<SpaceTimePoint> prefix;
    prefix.reserve(trajectory.size());
    Eigen::VectorXd objective(0);
    for (const auto& s : trajectory) {
        Spectrum spec;
        if (!prefix.empty()) spec = eig_sym(build_spatiotemporal_matrix(spatial, temporal, prefix), true);
        const SpaceTimePoint a{s.x_star, s.t};
        const SpaceTimePoint b{s.x_chosen, s.t};
        const auto step = lower_bound_step(spec, spatial, temporal, prefix, objective, a, b);
        out.total += step.term;
        out.clipped_steps += step.clipped ? 1 : 0;
        out.steps.push_back(step);

        prefix.push_back(b);
        objective.conservativeResize(objective.size() + 1);
        objective(objective.size() - 1) = s.f_chosen;
    }
    return out;
}

std::vector<TrajectoryStep> trajectory_of(const TVBORun& run) {
    std::vector<TrajectoryStep> out;
    out.reserve(run.trace.records.size());
    for (const auto& r : run.trace.records)
        out.push_back({run.trace.grid[r.best], run.trace.grid[r.chosen], r.t, r.f_chosen});
    return out;
}

bool BoundReport::upper_holds_everywhere() const {
    for (std::size_t i = 0; i < regret_series.size(); ++i)
        if (regret_series[i] > upper_series[i]) return false;
    return true;
}

BoundReport bound_report(const TVBOConfig& config, const TVBORun& run) {
    require_noise(config.noise_variance);
    BoundReport rep;
    rep.n = run.data.size();
    require(rep.n >= 1, ErrorKind::InsufficientData, "bound report needs at least one step");
    const std::size_t d = config.spatial.dimension();
    const auto k = build_spatiotemporal_matrix(config.spatial, config.temporal, run.data.points());
    const auto prefix_info = mutual_info_prefix(k, config.noise_variance);
    rep.c1 = c1_constant(config.noise_variance);
    rep.regret_series = run.trace.cumulative_series();
    rep.upper_series.resize(rep.n);
    for (std::size_t m = 1; m <= rep.n; ++m) {
        const double beta = std::max(0.0, beta_schedule(m, config.delta, d, config.lipschitz));
        rep.upper_series[m - 1] = upper_bound(m, beta, config.noise_variance, prefix_info[m - 1], rep.c1);
    }
    rep.info_exact = mutual_info_exact(k, config.noise_variance);
    std::vector<std::vector<double>> xs;
    xs.reserve(rep.n);
    for (const auto& p : run.data.points()) xs.push_back(p.x);
    const auto product = approx_product_spectrum(eig_sym(build_spatial_matrix(config.spatial, xs)),
                                                 eig_sym(build_temporal_matrix(config.temporal, TimeGrid(rep.n, config.dt))),
                                                 rep.n);
    rep.info_spectral = mutual_info_spectral(product.spectrum.to_operator_scale(rep.n), rep.n, config.noise_variance);
    rep.beta = beta_schedule(rep.n, config.delta, d, config.lipschitz);
    rep.upper = upper_bound(rep.n, std::max(0.0, rep.beta), config.noise_variance, rep.info_exact, rep.c1);
    rep.regret = run.trace.cumulative();

    const double sd0 = std::sqrt(config.noise_variance);
    std::size_t violations = 0;
    for (const auto& r : run.trace.records) violations += r.posterior_sd > sd0 ? 1 : 0;
    rep.c1_violation_fraction = static_cast<double>(violations) / static_cast<double>(rep.n);

    const auto traj = trajectory_of(run);
    rep.lower = lower_bound(config.spatial, config.temporal, traj);
    return rep;
}

nlohmann::json to_json(const BoundReport& r) {
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& s : r.lower.steps)
        steps.push_back({{"iteration", s.iteration},
                         {"mu_hat", s.mu_hat},
                         {"sigma_hat", s.sigma_hat},
                         {"sigma2_raw", s.sigma2_raw},
                         {"sigma2_with_covariance", s.sigma2_with_covariance},
                         {"term", s.term},
                         {"clipped", s.clipped}});
    return {{"n", r.n},
            {"mutual_information_exact", r.info_exact},
            {"mutual_information_spectral", r.info_spectral},
            {"beta_n", r.beta},
            {"c1", r.c1},
            {"upper_bound", r.upper},
            {"cumulative_regret", r.regret},
            {"upper_bound_holds_at_every_n", r.upper_holds_everywhere()},
            {"c1_condition_violation_fraction", r.c1_violation_fraction},
            {"lower_bound_total", r.lower.total},
            {"lower_bound_clipped_steps", r.lower.clipped_steps},
            {"lower_bound_steps", steps}};
}

std::vector<ScalingRow> scaling_diagnostic(const ScalingSetup& setup, std::span<const std::size_t> ns,
                                           std::span<const std::uint64_t> seeds, std::size_t jobs) {
    require(std::is_sorted(ns.begin(), ns.end()) && !ns.empty() && ns.front() >= 1, ErrorKind::InvalidArgument,
            "n list must be ascending and positive");
    require(!seeds.empty(), ErrorKind::InvalidArgument, "at least one seed is required");
    require_noise(setup.noise_variance);
    require(setup.a <= setup.b, ErrorKind::InvalidArgument, "interval must satisfy a <= b");
    const std::size_t d = setup.spatial.dimension();
    const std::size_t n_max = ns.back();

    struct Cell {
        std::size_t count = 0;
        double rate = 0.0;
        std::size_t n0 = 0;
    };
    std::vector<std::vector<Cell>> cells(seeds.size(), std::vector<Cell>(ns.size()));
    detail::parallel_for(seeds.size(), jobs, [&](std::size_t s) {
        std::mt19937_64 rng(seeds[s]);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        std::vector<SpaceTimePoint> pts(n_max);
        for (std::size_t i = 0; i < n_max; ++i) {
            pts[i].x.resize(d);
            for (auto& v : pts[i].x) v = u(rng);
            pts[i].t = setup.dt * static_cast<double>(i + 1);
        }
        for (std::size_t c = 0; c < ns.size(); ++c) {
            const std::span<const SpaceTimePoint> head(pts.data(), ns[c]);
            const auto k = build_spatiotemporal_matrix(setup.spatial, setup.temporal, head);
            const Spectrum spec = eig_sym(k);
            double info = 0.0;
            for (double v : spec.values) info += std::log1p(std::max(0.0, v) / setup.noise_variance);
            cells[s][c].count = count_in_interval(spec, setup.a, setup.b);
            cells[s][c].rate = 0.5 * info / static_cast<double>(ns[c]);

            std::vector<std::vector<double>> xs;
            xs.reserve(ns[c]);
            for (const auto& p : head) xs.push_back(p.x);
            const auto ks = eig_sym(build_spatial_matrix(setup.spatial, xs));
            const auto kt = eig_sym(build_temporal_matrix(setup.temporal, TimeGrid(ns[c], setup.dt)));
            const auto prod = approx_product_spectrum(ks, kt, ns[c]);
            const double cut = kPositiveThreshold * prod.spectrum.max();
            std::set<std::size_t> used;
            for (std::size_t l = 0; l < prod.provenance.size(); ++l)
                if (prod.spectrum.values[l] > cut) used.insert(prod.provenance[l].first);
            cells[s][c].n0 = used.size();
        }
    });

    std::vector<ScalingRow> rows(ns.size());
    for (std::size_t c = 0; c < ns.size(); ++c) {
        auto& row = rows[c];
        row.n = ns[c];
        std::vector<double> n0s;
        for (std::size_t s = 0; s < seeds.size(); ++s) {
            row.counts.push_back(cells[s][c].count);
            row.info_rates.push_back(cells[s][c].rate);
            n0s.push_back(static_cast<double>(cells[s][c].n0));
        }
        const auto cs = summarize(row.counts);
        const auto is = summarize(row.info_rates);
        row.count_mean = cs.mean;
        row.count_stderr = cs.stderr_;
        row.info_rate_mean = is.mean;
        row.info_rate_stderr = is.stderr_;
        row.n0_proxy = summarize(n0s).mean;
    }
    return rows;
}

void write_scaling_csv(std::ostream& os, const std::string& kernel_name, std::span<const ScalingRow> rows,
                       bool header) {
    using detail::format_double;
    if (header) os << "kernel,n,count,I_over_n,stderr,count_stderr,n0_proxy\n";
    for (const auto& r : rows)
        os << kernel_name << ',' << r.n << ',' << format_double(r.count_mean) << ','
           << format_double(r.info_rate_mean) << ',' << format_double(r.info_rate_stderr) << ','
           << format_double(r.count_stderr) << ',' << format_double(r.n0_proxy) << '\n';
}

}  // namespace tvbo
