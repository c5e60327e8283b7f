#pragma once

// Independent reference computations shared by the unit tests and the
// acceptance run. Plain loops over std::vector; no library linear algebra.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <utility>
#include <vector>

#include "tvbo/gp.hpp"
#include "tvbo/kernels.hpp"

namespace oracle {

using Matrix = std::vector<std::vector<double>>;

// Gaussian elimination with partial pivoting; solves a X = b column by column.
inline Matrix gauss_solve(Matrix a, Matrix b) {
    const std::size_t n = a.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
        std::swap(a[c], a[piv]);
        std::swap(b[c], b[piv]);
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = a[r][c] / a[c][c];
            for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
            for (std::size_t k = 0; k < b[r].size(); ++k) b[r][k] -= f * b[c][k];
        }
    }
    for (std::size_t c = n; c-- > 0;) {
        for (std::size_t k = 0; k < b[c].size(); ++k) {
            double s = b[c][k];
            for (std::size_t j = c + 1; j < n; ++j) s -= a[c][j] * b[j][k];
            b[c][k] = s / a[c][c];
        }
    }
    return b;
}

// log |det a| by LU with partial pivoting.
inline double logdet_lu(Matrix a) {
    const std::size_t n = a.size();
    double acc = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
        std::swap(a[c], a[piv]);
        acc += std::log(std::abs(a[c][c]));
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = a[r][c] / a[c][c];
            for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
        }
    }
    return acc;
}

// 1/2 log det(I + K / noise) for a kernel matrix given entrywise.
inline double mutual_information(const Matrix& k, double noise) {
    Matrix a = k;
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (auto& v : a[i]) v /= noise;
        a[i][i] += 1.0;
    }
    return 0.5 * logdet_lu(std::move(a));
}

struct DensePosterior {
    std::vector<double> mean;
    Matrix covariance;
};

// Posterior mean and covariance at the queries by solving (K + noise I) X = [y, k_q].
inline DensePosterior posterior(const tvbo::SpatialKernel& ks, const tvbo::TemporalKernel& kt,
                                const std::vector<tvbo::Observation>& data, double noise,
                                const std::vector<tvbo::SpaceTimePoint>& queries) {
    const std::size_t n = data.size(), m = queries.size();
    Matrix a(n, std::vector<double>(n));
    Matrix rhs(n, std::vector<double>(m + 1));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) a[i][j] = ks(data[i].x, data[j].x) * kt(data[i].t - data[j].t);
        a[i][i] += noise;
        rhs[i][0] = data[i].y;
        for (std::size_t c = 0; c < m; ++c) rhs[i][c + 1] = ks(data[i].x, queries[c].x) * kt(data[i].t - queries[c].t);
    }
    const auto sol = gauss_solve(a, rhs);
    DensePosterior out{std::vector<double>(m, 0.0), Matrix(m, std::vector<double>(m))};
    for (std::size_t c = 0; c < m; ++c) {
        for (std::size_t i = 0; i < n; ++i) out.mean[c] += rhs[i][c + 1] * sol[i][0];
        for (std::size_t e = 0; e < m; ++e) {
            double cov = ks(queries[c].x, queries[e].x) * kt(queries[c].t - queries[e].t);
            for (std::size_t i = 0; i < n; ++i) cov -= rhs[i][c + 1] * sol[i][e + 1];
            out.covariance[c][e] = cov;
        }
    }
    return out;
}

// The n largest a_i b_j / n over the full lattice, descending.
inline std::vector<double> top_products(const std::vector<double>& a, const std::vector<double>& b, std::size_t n) {
    std::vector<double> all;
    for (double x : a)
        for (double y : b) all.push_back(x * y / static_cast<double>(n));
    std::sort(all.begin(), all.end(), std::greater<>());
    all.resize(std::min(all.size(), n));
    return all;
}

struct MonteCarlo {
    double mean = 0.0;
    double stderr_ = 0.0;
};

// E[max(0, X)], X ~ N(mu, sd^2), by sampling.
inline MonteCarlo positive_part(double mu, double sd, int samples, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> x(mu, sd);
    double s = 0.0, s2 = 0.0;
    for (int k = 0; k < samples; ++k) {
        const double v = std::max(0.0, x(rng));
        s += v;
        s2 += v * v;
    }
    const double mean = s / samples;
    return {mean, std::sqrt((s2 / samples - mean * mean) / samples)};
}

}  // namespace oracle
