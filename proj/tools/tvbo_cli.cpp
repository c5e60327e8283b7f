#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "tvbo/errors.hpp"
#include "tvbo/expcli.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct Options {
    std::string config;
    std::string experiment;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::size_t> jobs;
};

void add_common(CLI::App* cmd, Options& o) {
    cmd->add_option("--seed", o.seed, "override the configured seed");
    cmd->add_option("--out", o.out, "override the output directory");
    cmd->add_option("--jobs", o.jobs, "worker threads for replications (0 = all cores)");
}

tvbo::ExperimentConfig resolve(const Options& o) {
    tvbo::ExperimentConfig cfg = o.config.empty()
                                     ? tvbo::ExperimentConfig::defaults(tvbo::experiment_from_string(o.experiment))
                                     : tvbo::load_config(o.config);
    if (o.seed) cfg.seed = *o.seed;
    if (o.out) cfg.output = *o.out;
    if (o.jobs) cfg.jobs = *o.jobs;
    return cfg;
}

void print_diagnostics(const tvbo::ExperimentConfig& cfg, const tvbo::Diagnostics& d) {
    std::printf("%s: largest matrix %zu, estimated %.3g s single-threaded (%s)\n", tvbo::to_string(cfg.id).c_str(),
                d.largest_matrix, d.estimated_seconds, tvbo::to_string(d.cost).c_str());
    for (const auto& w : d.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spectral analysis and regret experiments for time-varying Bayesian optimization"};
    app.require_subcommand(1);
    Options opts;

    auto* run = app.add_subcommand("run", "run an experiment and write its artifacts");
    auto* source = run->add_option_group("source");
    source->add_option("--config", opts.config, "TOML or JSON experiment configuration")->check(CLI::ExistingFile);
    source->add_option("--experiment", opts.experiment, "run an experiment with its default configuration");
    source->require_option(1);
    add_common(run, opts);

    auto* validate = app.add_subcommand("validate", "check a configuration and estimate its cost");
    validate->add_option("--config", opts.config, "TOML or JSON experiment configuration")
        ->required()
        ->check(CLI::ExistingFile);
    add_common(validate, opts);

    app.add_subcommand("list", "list the available experiments");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (app.got_subcommand("list")) {
            for (const auto& info : tvbo::list_experiments())
                std::printf("%-8s %s\n", tvbo::to_string(info.id).c_str(), info.description.c_str());
            return kExitOk;
        }
        const auto cfg = resolve(opts);
        const auto diag = tvbo::diagnose(cfg);
        print_diagnostics(cfg, diag);
        if (app.got_subcommand("validate")) {
            std::printf("OK\n");
            return kExitOk;
        }
        const auto manifest = tvbo::run_experiment(cfg);
        for (const auto& f : manifest.files)
            std::printf("%s  %s\n", f.sha256.empty() ? std::string(64, '-').c_str() : f.sha256.c_str(),
                        (manifest.directory / f.path).string().c_str());
        return kExitOk;
    } catch (const tvbo::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        const bool config = e.kind() == tvbo::ErrorKind::ParseError || e.kind() == tvbo::ErrorKind::InvalidConfig;
        return config ? kExitConfig : kExitRuntime;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitRuntime;
    }
}
