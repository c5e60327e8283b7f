#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tvbo/bounds.hpp"
#include "tvbo/errors.hpp"

#include "oracles.hpp"

using namespace tvbo;

namespace {

double oracle_info(const SymMatrix& k, double noise) {
    const std::size_t n = k.order();
    std::vector<std::vector<double>> a(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) a[i][j] = (i == j ? 1.0 : 0.0) + k(i, j) / noise;
    return 0.5 * oracle::logdet_lu(std::move(a));
}

std::vector<SpaceTimePoint> random_points(std::size_t n, double dt, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<SpaceTimePoint> pts(n);
    for (std::size_t i = 0; i < n; ++i) pts[i] = {{u(rng)}, dt * static_cast<double>(i + 1)};
    return pts;
}

double spectral_gap(const SpatialKernel& ks, const TemporalKernel& kt, std::size_t n, double dt, double noise) {
    const auto pts = random_points(n, dt, 11);
    std::vector<std::vector<double>> xs;
    for (const auto& p : pts) xs.push_back(p.x);
    const auto prod = approx_product_spectrum(eig_sym(build_spatial_matrix(ks, xs)),
                                              eig_sym(build_temporal_matrix(kt, TimeGrid(n, dt))), n);
    const double approx = mutual_info_spectral(prod.spectrum.to_operator_scale(n), n, noise);
    const double exact = mutual_info_exact(build_spatiotemporal_matrix(ks, kt, pts), noise);
    return std::abs(approx - exact) / exact;
}

}  // namespace

TEST_CASE("exact mutual information") {
    CHECK(mutual_info_exact(SymMatrix(Eigen::MatrixXd::Ones(1, 1)), 1.0) == doctest::Approx(0.5 * std::log(2.0)));
    CHECK(mutual_info_exact(SymMatrix(Eigen::MatrixXd::Zero(4, 4)), 0.3) == 0.0);
    CHECK_THROWS_AS(mutual_info_exact(SymMatrix(Eigen::MatrixXd::Ones(1, 1)), 0.0), Error);

    const auto k = build_spatiotemporal_matrix(SpatialKernel::rbf(0.3, 1), TemporalKernel::rbf(1.0),
                                               random_points(20, 0.1, 4));
    for (double noise : {0.01, 0.5}) {
        const double oracle = oracle_info(k, noise);
        CHECK(std::abs(mutual_info_exact(k, noise) - oracle) <= 1e-8 * std::max(1.0, oracle));
        const auto prefix = mutual_info_prefix(k, noise);
        CHECK(prefix.back() == doctest::Approx(oracle).epsilon(1e-10));
        CHECK(prefix[4] == doctest::Approx(oracle_info(SymMatrix(k.leading(5)), noise)).epsilon(1e-10));
    }
}

TEST_CASE("mutual information grows with nested data") {
    std::mt19937_64 rng(99);
    const auto ks = SpatialKernel::matern(MaternNu::ThreeHalves, 0.3, 1);
    const auto kt = TemporalKernel::periodic(1.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 5 + rng() % 25;
        const std::size_t m = 1 + rng() % (n - 1);
        const auto k = build_spatiotemporal_matrix(ks, kt, random_points(n, 0.15, rng()));
        CHECK(mutual_info_exact(SymMatrix(k.leading(m)), 0.05) <= mutual_info_exact(k, 0.05) + 1e-12);
    }
}

TEST_CASE("spectral mutual information") {
    Spectrum one;
    one.values = {1.0};
    one.scale = SpectrumScale::Operator;
    CHECK(mutual_info_spectral(one, 1, 1.0) == doctest::Approx(0.5 * std::log(2.0)));
    Spectrum zeros;
    zeros.values = std::vector<double>(5, 0.0);
    zeros.scale = SpectrumScale::Operator;
    CHECK(mutual_info_spectral(zeros, 5, 0.1) == 0.0);
    one.scale = SpectrumScale::Matrix;
    CHECK_THROWS_AS(mutual_info_spectral(one, 1, 1.0), Error);

    const auto ks = SpatialKernel::rbf(0.2, 1);
    const auto kt = TemporalKernel::periodic(1.0, 1.0);
    CHECK(spectral_gap(ks, kt, 150, 0.2, 0.01) < spectral_gap(ks, kt, 50, 0.2, 0.01));
}

TEST_CASE("upper bound") {
    const double c1 = c1_constant(0.01);
    CHECK(c1 == doctest::Approx(100.0 / std::log(101.0)));
    CHECK(upper_bound(10, 3.0, 0.01, 0.0, c1) == doctest::Approx(std::numbers::pi * std::numbers::pi / 6.0));
    const double floor = std::numbers::pi * std::numbers::pi / 6.0;
    const double r1 = upper_bound(50, 3.0, 0.01, 2.0, c1) - floor;
    const double r2 = upper_bound(50, 3.0, 0.01, 4.0, c1) - floor;
    CHECK(r2 / r1 == doctest::Approx(std::numbers::sqrt2).epsilon(1e-12));
    CHECK_THROWS_AS(upper_bound(1, -1.0, 0.01, 1.0, c1), Error);
}

TEST_CASE("truncated Gaussian mean") {
    CHECK(truncated_gaussian_mean(0.0, 1.0) == doctest::Approx(1.0 / std::sqrt(2.0 * std::numbers::pi)));
    CHECK(truncated_gaussian_mean(3.0, 0.0) == 3.0);
    CHECK(truncated_gaussian_mean(-3.0, 0.0) == 0.0);

    const auto mc = oracle::positive_part(1.0, 2.0, 1'000'000, 2024);
    CHECK(std::abs(truncated_gaussian_mean(1.0, 2.0) - mc.mean) <= 3.0 * mc.stderr_);

    for (double mu : {-4.0, -1.0, 0.0, 0.5, 3.0}) {
        double previous = truncated_gaussian_mean(mu, 0.0);
        for (double sd = 0.1; sd < 5.0; sd += 0.1) {
            const double v = truncated_gaussian_mean(mu, sd);
            CHECK(v >= std::max(0.0, mu));
            if (std::abs(mu) / sd < 6.0) CHECK(v > previous);
            CHECK(v >= previous);
            previous = v;
        }
    }
}

TEST_CASE("lower bound steps") {
    const auto ks = SpatialKernel::rbf(0.2, 1);
    const auto kt = TemporalKernel::rbf(1.0);
    const auto first = lower_bound_step({}, ks, kt, {}, Eigen::VectorXd(0), {{0.1}, 0.1}, {{0.7}, 0.1});
    CHECK(first.term == doctest::Approx(0.56419).epsilon(1e-5));
    CHECK(first.mu_hat == 0.0);

    // The optimum is always the point chosen: every mean estimate cancels.
    std::vector<TrajectoryStep> traj;
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 1; i <= 15; ++i) {
        const std::vector<double> x{u(rng)};
        traj.push_back({x, x, 0.1 * i, u(rng)});
    }
    const auto res = lower_bound(ks, kt, traj);
    REQUIRE(res.steps.size() == 15);
    double expected = 0.0;
    for (const auto& s : res.steps) {
        CHECK(s.mu_hat == 0.0);
        CHECK(s.sigma_hat >= 0.0);
        expected += s.sigma_hat / std::sqrt(2.0 * std::numbers::pi);
    }
    CHECK(res.total == doctest::Approx(expected));

    Spectrum no_vectors;
    no_vectors.values = {1.0};
    const std::vector<SpaceTimePoint> prefix{{{0.5}, 0.1}};
    CHECK_THROWS_AS(lower_bound_step(no_vectors, ks, kt, prefix, Eigen::VectorXd::Zero(1), {{0.1}, 0.2},
                                     {{0.5}, 0.2}),
                    Error);
}

TEST_CASE("bound report on a short run") {
    TVBOConfig cfg;
    cfg.horizon = 60;
    cfg.seed = 8;
    const auto run = run_tvbo_full(cfg);
    const auto rep = bound_report(cfg, run);
    CHECK(rep.n == 60);
    CHECK(rep.info_exact >= 0.0);
    CHECK(rep.upper_series.size() == 60);
    CHECK(rep.upper_series.back() == doctest::Approx(rep.upper));
    CHECK(rep.regret == doctest::Approx(run.trace.cumulative()));
    CHECK(rep.lower.total >= 0.0);
    CHECK(rep.c1_violation_fraction >= 0.0);
    CHECK(rep.c1_violation_fraction <= 1.0);
    for (std::size_t i = 1; i < rep.upper_series.size(); ++i) CHECK(rep.upper_series[i] >= rep.upper_series[i - 1]);
    const auto j = to_json(rep);
    CHECK(j.at("lower_bound_steps").size() == 60);
    CHECK(j.at("n") == 60);
}

TEST_CASE("scaling diagnostic") {
    ScalingSetup setup{SpatialKernel::rbf(4.0, 1), TemporalKernel::cosine_sum(0.5, {{1.3, 0.5}})};
    const std::vector<std::size_t> ns{50, 100, 150};
    const std::vector<std::uint64_t> seeds{1, 2};
    const auto low = scaling_diagnostic(setup, ns, seeds, 2);
    REQUIRE(low.size() == 3);
    CHECK(low[0].count_mean == low[1].count_mean);
    CHECK(low[1].count_mean == low[2].count_mean);
    CHECK(low[2].info_rate_mean < low[0].info_rate_mean);

    setup.temporal = TemporalKernel::rbf(0.5);
    const std::vector<std::size_t> ns2{100, 200};
    const auto broad = scaling_diagnostic(setup, ns2, seeds, 2);
    CHECK(broad[1].count_mean >= 1.5 * broad[0].count_mean);
    CHECK(broad[0].count_mean > 0.0);

    setup.a = 1e6;
    setup.b = 2e6;
    for (const auto& r : scaling_diagnostic(setup, ns2, seeds, 1)) CHECK(r.count_mean == 0.0);

    std::ostringstream os;
    write_scaling_csv(os, "rbf", broad);
    CHECK(os.str().rfind("kernel,n,count,I_over_n,stderr,count_stderr,n0_proxy\nrbf,100,", 0) == 0);

    const std::vector<std::size_t> bad{100, 50};
    CHECK_THROWS_AS(scaling_diagnostic(setup, bad, seeds), Error);
}
