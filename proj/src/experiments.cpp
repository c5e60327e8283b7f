#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <openssl/evp.h>

#include <nlohmann/json.hpp>

#include "format.hpp"
#include "parallel.hpp"
#include "svg.hpp"
#include "tvbo/bounds.hpp"
#include "tvbo/errors.hpp"
#include "tvbo/expcli.hpp"
#include "tvbo/spectral.hpp"

namespace tvbo {

namespace {

namespace fs = std::filesystem;
using detail::format_double;
using detail::curve;
using detail::kPalette;
using detail::markers;
using detail::Panel;
using detail::Series;
using json = nlohmann::json;

constexpr const char* kManifestName = "manifest.json";

double cube(std::size_t n) {
    const auto x = static_cast<double>(n);
    return x * x * x;
}

std::vector<std::uint64_t> replication_seeds(std::uint64_t seed, std::size_t count) {
    std::vector<std::uint64_t> out(count);
    for (std::size_t k = 0; k < count; ++k) out[k] = seed + k;
    return out;
}

std::vector<double> indices(std::size_t n) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<double>(i + 1);
    return out;
}

Series band(Series s, std::vector<double> low, std::vector<double> high) {
    s.band_low = std::move(low);
    s.band_high = std::move(high);
    return s;
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double stderr_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

/// Collects every artifact in memory order and writes it from one thread.
class ArtifactWriter {
public:
    explicit ArtifactWriter(fs::path dir) : dir_(std::move(dir)) {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        require(!ec && fs::is_directory(dir_), ErrorKind::IoFailure, "cannot create output directory " + dir_.string());
    }

    void write(const std::string& name, const std::string& content) {
        const fs::path p = dir_ / name;
        std::ofstream out(p, std::ios::binary | std::ios::trunc);
        out << content;
        out.close();
        require(static_cast<bool>(out), ErrorKind::IoFailure, "cannot write " + p.string());
    }

    [[nodiscard]] const fs::path& dir() const { return dir_; }

private:
    fs::path dir_;
};

std::string svg(const std::string& title, const std::vector<Panel>& panels) { return detail::render_svg(title, panels); }

// ---------------------------------------------------------------------------

void run_fig1(const ExperimentConfig& cfg, const Fig1Params& p, ArtifactWriter& out) {
    const std::size_t d = p.spatial.dimension();
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<SpaceTimePoint> pts(p.n);
    std::vector<std::vector<double>> xs(p.n);
    for (std::size_t i = 0; i < p.n; ++i) {
        xs[i].resize(d);
        for (auto& v : xs[i]) v = u(rng);
        pts[i] = {xs[i], p.dt * static_cast<double>(i + 1)};
    }
    const auto ks = eig_sym(build_spatial_matrix(p.spatial, xs));
    const auto kt = eig_sym(build_temporal_matrix(p.temporal, TimeGrid(p.n, p.dt)));
    const auto exact = eig_sym(build_spatiotemporal_matrix(p.spatial, p.temporal, pts));
    const auto approx = approx_product_spectrum(ks, kt, p.n);

    std::vector<bool> used_s(p.n, false), used_t(p.n, false);
    for (const auto& [i, j] : approx.provenance) {
        used_s[i - 1] = true;
        used_t[j - 1] = true;
    }
    const double inv_n = 1.0 / static_cast<double>(p.n);
    std::ostringstream s_csv, t_csv, k_csv;
    s_csv << "index,eigenvalue,used\n";
    t_csv << "index,eigenvalue,used\n";
    for (std::size_t i = 0; i < p.n; ++i) {
        s_csv << i + 1 << ',' << format_double(ks.values[i] * inv_n) << ',' << (used_s[i] ? 1 : 0) << '\n';
        t_csv << i + 1 << ',' << format_double(kt.values[i]) << ',' << (used_t[i] ? 1 : 0) << '\n';
    }
    k_csv << "index,exact,approx,provenance_i,provenance_j\n";
    for (std::size_t i = 0; i < p.n; ++i)
        k_csv << i + 1 << ',' << format_double(exact.values[i]) << ',' << format_double(approx.spectrum.values[i]) << ','
              << approx.provenance[i].first << ',' << approx.provenance[i].second << '\n';
    out.write("fig1_spatial.csv", s_csv.str());
    out.write("fig1_temporal.csv", t_csv.str());
    out.write("fig1_spectrum.csv", k_csv.str());

    auto used_series = [&](const std::vector<double>& values, const std::vector<bool>& used) {
        Series s = markers("used", {}, {}, kPalette[3]);
        for (std::size_t i = 0; i < values.size(); ++i)
            if (used[i]) {
                s.x.push_back(static_cast<double>(i + 1));
                s.y.push_back(values[i]);
            }
        return s;
    };
    std::vector<double> ks_scaled(ks.values);
    for (auto& v : ks_scaled) v *= inv_n;
    const auto idx = indices(p.n);
    std::vector<Panel> panels{
        {"K_S / n", "index", "eigenvalue", true,
         {markers("eigenvalues", idx, ks_scaled, kPalette[0]), used_series(ks_scaled, used_s)}},
        {"K_T", "index", "eigenvalue", true,
         {markers("eigenvalues", idx, kt.values, kPalette[0]), used_series(kt.values, used_t)}},
        {"K", "index", "eigenvalue", true,
         {markers("exact", idx, exact.values, kPalette[0]),
          markers("product approximation", idx, approx.spectrum.values, kPalette[1])}}};
    out.write("fig1.svg", svg("Spatial, temporal and spatio-temporal spectra (n = " + std::to_string(p.n) + ")", panels));
}

void run_temporal_panels(const std::string& stem, const TemporalSpectrumParams& p, ArtifactWriter& out) {
    const auto cls = classify(p.temporal);
    std::ostringstream csv, counts;
    csv << "panel,n,dt,index,exact,approx_sorted,frequency,approx_unsorted\n";
    counts << "panel,n,dt,positive_exact,positive_approx,time_bandwidth\n";
    std::vector<Panel> panels;
    for (std::size_t k = 0; k < p.panels.size(); ++k) {
        const auto& panel = p.panels[k];
        const TimeGrid grid(panel.n, panel.dt);
        const auto exact = eig_sym(build_temporal_matrix(p.temporal, grid));
        const auto approx = approx_temporal_spectrum(p.temporal, grid);
        for (std::size_t i = 0; i < panel.n; ++i)
            csv << k + 1 << ',' << panel.n << ',' << format_double(panel.dt) << ',' << i + 1 << ','
                << format_double(exact.values[i]) << ',' << format_double(approx.sorted.values[i]) << ','
                << format_double(approx.frequencies[i]) << ',' << format_double(approx.unsorted[i]) << '\n';
        const double fraction =
            cls.support_bounded ? std::min(1.0, 2.0 * p.temporal.bandlimit() * panel.dt) : 1.0;
        counts << k + 1 << ',' << panel.n << ',' << format_double(panel.dt) << ',' << count_positive(exact) << ','
               << count_positive(approx.sorted) << ','
               << format_double(std::floor(static_cast<double>(panel.n) * fraction + 1e-9)) << '\n';
        const auto idx = indices(panel.n);
        panels.push_back({"n = " + std::to_string(panel.n) + ", dt = " + format_double(panel.dt), "index", "eigenvalue",
                          false,
                          {markers("exact", idx, exact.values, kPalette[0]),
                           curve("approx (sorted)", idx, approx.sorted.values, kPalette[2]),
                           markers("approx (unsorted)", idx, approx.unsorted, kPalette[1])}});
    }
    out.write(stem + ".csv", csv.str());
    out.write(stem + "_counts.csv", counts.str());
    out.write(stem + ".svg", svg("Temporal spectrum of " + p.temporal.describe(), panels));
}

void run_fig4(const Fig4Params& p, ArtifactWriter& out) {
    std::ostringstream csv, counts;
    csv << "divisor,dt,n,index,eigenvalue\n";
    counts << "divisor,dt,n,positive\n";
    std::vector<Panel> panels;
    for (std::size_t k : p.divisors) {
        const double dt = p.temporal.period() / static_cast<double>(k);
        Panel panel{"dt = period / " + std::to_string(k), "index", "eigenvalue", true, {}};
        for (std::size_t c = 0; c < p.ns.size(); ++c) {
            const std::size_t n = p.ns[c];
            const auto s = eig_sym(build_temporal_matrix(p.temporal, TimeGrid(n, dt)));
            for (std::size_t i = 0; i < n; ++i)
                csv << k << ',' << format_double(dt) << ',' << n << ',' << i + 1 << ',' << format_double(s.values[i])
                    << '\n';
            counts << k << ',' << format_double(dt) << ',' << n << ',' << count_positive(s) << '\n';
            panel.series.push_back(markers("n = " + std::to_string(n), indices(n), s.values,
                                           kPalette[c % std::size(kPalette)]));
        }
        panels.push_back(std::move(panel));
    }
    out.write("fig4.csv", csv.str());
    out.write("fig4_counts.csv", counts.str());
    out.write("fig4.svg", svg("Periodic kernel with commensurate sampling", panels));
}

std::vector<std::vector<ScalingRow>> scaling_rows(const ExperimentConfig& cfg, const ScalingParams& p) {
    const auto seeds = replication_seeds(cfg.seed, p.replications);
    std::vector<std::vector<ScalingRow>> rows;
    for (const auto& k : p.kernels) {
        const ScalingSetup setup{p.spatial, k.kernel, p.dt, p.noise_variance, p.a, p.b};
        rows.push_back(scaling_diagnostic(setup, p.ns, seeds, cfg.jobs));
    }
    return rows;
}

void run_fig5(const ExperimentConfig& cfg, const ScalingParams& p, ArtifactWriter& out) {
    const auto rows = scaling_rows(cfg, p);
    std::ostringstream csv;
    Panel counts{"eigenvalues in [" + format_double(p.a) + ", " + format_double(p.b) + "]", "n", "count", false, {}};
    Panel info{"I / n", "n", "mutual information / n", false, {}};
    for (std::size_t k = 0; k < p.kernels.size(); ++k) {
        write_scaling_csv(csv, p.kernels[k].name, rows[k], k == 0);
        Series sc = curve(p.kernels[k].name, {}, {}, kPalette[k % std::size(kPalette)]);
        sc.markers = true;
        Series si = sc;
        for (const auto& r : rows[k]) {
            const auto n = static_cast<double>(r.n);
            sc.x.push_back(n);
            sc.y.push_back(r.count_mean);
            sc.band_low.push_back(r.count_mean - r.count_stderr);
            sc.band_high.push_back(r.count_mean + r.count_stderr);
            si.x.push_back(n);
            si.y.push_back(r.info_rate_mean);
            si.band_low.push_back(r.info_rate_mean - r.info_rate_stderr);
            si.band_high.push_back(r.info_rate_mean + r.info_rate_stderr);
        }
        counts.series.push_back(std::move(sc));
        info.series.push_back(std::move(si));
    }
    out.write("fig5.csv", csv.str());
    out.write("fig5.svg", svg("Scaling with n (" + std::to_string(p.replications) + " replications, mean +- stderr)",
                              {counts, info}));
}

void run_table1(const ExperimentConfig& cfg, const ScalingParams& p, ArtifactWriter& out) {
    const auto rows = scaling_rows(cfg, p);
    std::ostringstream csv;
    csv << "kernel,family,class,support_bounded,support_discrete,predicted_count,predicted_regret,n_first,n_last,"
           "count_first,count_last,count_ratio,I_over_n_first,I_over_n_last\n";
    std::vector<std::vector<std::string>> table{{"kernel", "class", "bounded", "discrete", "count law", "regret",
                                                 "n", "count", "I/n"}};
    for (std::size_t k = 0; k < p.kernels.size(); ++k) {
        const auto cls = classify(p.kernels[k].kernel);
        const auto& first = rows[k].front();
        const auto& last = rows[k].back();
        const std::string law = cls.support_discrete ? "O(1)" : "O(n)";
        const std::string regret = cls.support_discrete ? "no-regret" : "linear";
        // Undefined (empty field) when the first count is zero.
        const std::string ratio =
            first.count_mean > 0.0 ? format_double(last.count_mean / first.count_mean) : std::string();
        const auto family = to_json(p.kernels[k].kernel).at("family").get<std::string>();
        csv << p.kernels[k].name << ',' << family << ',' << to_string(cls.tag) << ','
            << (cls.support_bounded ? 1 : 0) << ',' << (cls.support_discrete ? 1 : 0) << ',' << law << ',' << regret
            << ',' << first.n << ',' << last.n << ',' << format_double(first.count_mean) << ','
            << format_double(last.count_mean) << ',' << ratio << ','
            << format_double(first.info_rate_mean) << ',' << format_double(last.info_rate_mean) << '\n';
        auto pair = [](const std::string& a, const std::string& b) { return a + " -> " + b; };
        table.push_back({p.kernels[k].name, to_string(cls.tag), cls.support_bounded ? "yes" : "no",
                         cls.support_discrete ? "yes" : "no", law, regret,
                         pair(std::to_string(first.n), std::to_string(last.n)),
                         pair(format_double(first.count_mean), format_double(last.count_mean)),
                         pair(detail::format_double(std::round(first.info_rate_mean * 1e4) / 1e4),
                              detail::format_double(std::round(last.info_rate_mean * 1e4) / 1e4))});
    }
    out.write("table1.csv", csv.str());
    out.write("table1.svg", detail::render_table_svg("Temporal kernel classes and measured scaling", table));
}

void run_regret(const ExperimentConfig& cfg, const RegretParams& p, ArtifactWriter& out) {
    const auto seeds = replication_seeds(cfg.seed, p.replications);
    const auto runs = run_replications(p.tvbo, seeds, cfg.jobs);
    std::vector<BoundReport> reports(runs.size());
    detail::parallel_for(runs.size(), cfg.jobs, [&](std::size_t k) {
        TVBOConfig c = p.tvbo;
        c.seed = seeds[k];
        reports[k] = bound_report(c, runs[k]);
    });

    for (std::size_t k = 0; k < runs.size(); ++k) {
        std::ostringstream trace;
        runs[k].trace.write_csv(trace);
        out.write("regret_seed_" + std::to_string(seeds[k]) + ".csv", trace.str());
    }

    const std::size_t horizon = p.tvbo.horizon;
    std::vector<double> x(horizon), r_mean(horizon), r_lo(horizon), r_hi(horizon), up(horizon), low(horizon);
    std::ostringstream summary;
    summary << "iteration,R_mean,R_stderr,upper_mean,lower_mean\n";
    for (std::size_t i = 0; i < horizon; ++i) {
        std::vector<double> r, u, l;
        for (std::size_t k = 0; k < runs.size(); ++k) {
            r.push_back(reports[k].regret_series[i]);
            u.push_back(reports[k].upper_series[i]);
            double acc = 0.0;
            for (std::size_t s = 0; s <= i; ++s) acc += reports[k].lower.steps[s].term;
            l.push_back(acc);
        }
        const double se = stderr_of(r);
        x[i] = static_cast<double>(i + 1);
        r_mean[i] = mean_of(r);
        r_lo[i] = r_mean[i] - se;
        r_hi[i] = r_mean[i] + se;
        up[i] = mean_of(u);
        low[i] = mean_of(l);
        summary << i + 1 << ',' << format_double(r_mean[i]) << ',' << format_double(se) << ',' << format_double(up[i])
                << ',' << format_double(low[i]) << '\n';
    }
    out.write("regret_summary.csv", summary.str());

    std::size_t holds = 0;
    std::vector<double> finals, lowers;
    json per_run = json::array();
    for (std::size_t k = 0; k < runs.size(); ++k) {
        holds += reports[k].upper_holds_everywhere() ? 1 : 0;
        finals.push_back(reports[k].regret);
        lowers.push_back(reports[k].lower.total);
        per_run.push_back({{"seed", seeds[k]}, {"report", to_json(reports[k])}});
    }
    const json bounds{{"runs", per_run},
                      {"summary",
                       {{"replications", runs.size()},
                        {"runs_with_upper_bound_everywhere", holds},
                        {"mean_cumulative_regret", mean_of(finals)},
                        {"cumulative_regret_stderr", stderr_of(finals)},
                        {"mean_lower_bound_total", mean_of(lowers)}}}};
    out.write("bounds.json", bounds.dump(2) + "\n");

    std::vector<Panel> panels{
        {"cumulative regret", "n", "R_n", false,
         {band(curve("mean R_n", x, r_mean, kPalette[0]), r_lo, r_hi),
          curve("lower bound", x, low, kPalette[2])}},
        {"upper bound", "n", "value", true,
         {curve("mean R_n", x, r_mean, kPalette[0]),
          curve("upper bound", x, up, kPalette[3]),
          curve("lower bound", x, low, kPalette[2])}}};
    out.write("regret.svg", svg("GP-UCB with " + p.tvbo.temporal.describe() + " (" + std::to_string(runs.size()) +
                                    " replications)",
                                panels));
}

// ---------------------------------------------------------------------------

Manifest write_manifest(const ExperimentConfig& cfg, const fs::path& dir) {
    Manifest m;
    m.directory = dir;
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file() && e.path().lexically_relative(dir) != kManifestName) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files)
        m.files.push_back({f.lexically_relative(dir).generic_string(), fs::file_size(f), sha256_file(f)});
    m.files.push_back({kManifestName, 0, ""});

    json list = json::array();
    for (const auto& f : m.files) {
        if (f.path == kManifestName)
            list.push_back({{"path", f.path}, {"bytes", nullptr}, {"sha256", nullptr}});
        else
            list.push_back({{"path", f.path}, {"bytes", f.bytes}, {"sha256", f.sha256}});
    }
    const json doc{{"experiment", to_string(cfg.id)}, {"seed", cfg.seed}, {"config", to_json(cfg)}, {"files", list}};
    ArtifactWriter(dir).write(kManifestName, doc.dump(2) + "\n");
    m.files.back().bytes = fs::file_size(dir / kManifestName);
    return m;
}

}  // namespace

std::string to_string(CostClass c) {
    switch (c) {
        case CostClass::Small: return "small";
        case CostClass::Medium: return "medium";
        case CostClass::Large: return "large";
    }
    return "?";
}

Diagnostics diagnose(const ExperimentConfig& cfg) {
    Diagnostics d;
    double seconds = 0.0;
    auto eig = [&](std::size_t n, double times, bool vectors = false) {
        d.largest_matrix = std::max(d.largest_matrix, n);
        seconds += times * (vectors ? kEigenvectorsCost : kEigenvaluesCost) * cube(n);
    };
    std::visit(
        [&](const auto& p) {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, Fig1Params>) {
                eig(p.n, 3.0);
            } else if constexpr (std::is_same_v<P, TemporalSpectrumParams>) {
                for (const auto& panel : p.panels) eig(panel.n, 1.0);
            } else if constexpr (std::is_same_v<P, Fig4Params>) {
                for (std::size_t n : p.ns) eig(n, static_cast<double>(p.divisors.size()));
            } else if constexpr (std::is_same_v<P, ScalingParams>) {
                // K, K_S and K_T per kernel, replication and n.
                const auto reps = static_cast<double>(p.replications * p.kernels.size());
                for (std::size_t n : p.ns) eig(n, 3.0 * reps);
            } else {
                const auto& t = p.tvbo;
                std::size_t grid = 1;
                for (std::size_t k = 0; k < t.spatial.dimension(); ++k) grid *= t.grid_resolution;
                const auto reps = static_cast<double>(p.replications);
                eig(grid, reps, true);
                eig(t.horizon, 2.0 * reps, true);
                // One eigendecomposition per lower-bound step: sum of k^3 ~ n^4 / 4.
                const auto h = static_cast<double>(t.horizon);
                seconds += reps * kEigenvectorsCost * h * h * h * h / 4.0;
            }
        },
        cfg.params);
    d.estimated_seconds = seconds;
    d.cost = seconds < 10.0 ? CostClass::Small : seconds < kDeskBudgetSeconds ? CostClass::Medium : CostClass::Large;
    if (seconds > kDeskBudgetSeconds)
        d.warnings.push_back("dense eigendecomposition cost estimate of " + format_double(std::round(seconds)) +
                             " s (largest matrix " + std::to_string(d.largest_matrix) +
                             ") exceeds the desk-scale budget of " + format_double(kDeskBudgetSeconds) + " s");
    return d;
}

Manifest run_experiment(const ExperimentConfig& cfg) {
    ArtifactWriter out(cfg.output);
    std::visit(
        [&](const auto& p) {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, Fig1Params>) {
                run_fig1(cfg, p, out);
            } else if constexpr (std::is_same_v<P, TemporalSpectrumParams>) {
                run_temporal_panels(to_string(cfg.id), p, out);
            } else if constexpr (std::is_same_v<P, Fig4Params>) {
                run_fig4(p, out);
            } else if constexpr (std::is_same_v<P, ScalingParams>) {
                if (cfg.id == ExperimentId::Table1)
                    run_table1(cfg, p, out);
                else
                    run_fig5(cfg, p, out);
            } else {
                run_regret(cfg, p, out);
            }
        },
        cfg.params);
    return write_manifest(cfg, out.dir());
}

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorKind::IoFailure, "cannot read " + path.string());
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    require(ctx != nullptr, ErrorKind::IoFailure, "cannot allocate digest context");
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    char buf[1 << 16];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xF];
    }
    return out;
}

}  // namespace tvbo
