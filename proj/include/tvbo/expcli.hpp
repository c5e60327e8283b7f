#pragma once

// Configuration-driven experiment runs that write CSV tables, SVG plots and a
// checksummed manifest for each figure and for the scaling table.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "tvbo/bo.hpp"
#include "tvbo/kernels.hpp"

namespace tvbo {

enum class ExperimentId { Fig1, Fig2, Fig3, Fig4, Fig5, Table1, Regret };

std::string to_string(ExperimentId id);
/// Throws ParseError for unknown names.
ExperimentId experiment_from_string(std::string_view name);

struct ExperimentInfo {
    ExperimentId id;
    std::string description;
};
std::vector<ExperimentInfo> list_experiments();

struct SpectrumPanel {
    std::size_t n = 100;
    double dt = 0.1;
};

/// Spatial, temporal and product spectra of one spatio-temporal matrix.
struct Fig1Params {
    std::size_t n = 100;
    SpatialKernel spatial = SpatialKernel::rbf(0.2, 1);
    TemporalKernel temporal = TemporalKernel::rbf(1.0);
    double dt = 0.1;
};

/// Temporal spectrum against its density-sampling approximation per panel
/// (used for both the broadband and the band-limited figure).
struct TemporalSpectrumParams {
    TemporalKernel temporal = TemporalKernel::rbf(1.0);
    std::vector<SpectrumPanel> panels;
};

/// Periodic kernel sampled at dt = period / k for each k in `divisors`.
struct Fig4Params {
    TemporalKernel temporal = TemporalKernel::periodic(1.0, 1.0);
    std::vector<std::size_t> divisors{3, 6};
    std::vector<std::size_t> ns{60, 120};
};

struct NamedKernel {
    std::string name;
    TemporalKernel kernel;
};

/// Interval counts and I/n against n for several temporal kernels (also the
/// source of the scaling table).
struct ScalingParams {
    SpatialKernel spatial = SpatialKernel::rbf(4.0, 1);
    std::vector<NamedKernel> kernels;
    std::vector<std::size_t> ns{50, 100, 150, 200};
    std::size_t replications = 10;
    double dt = 0.2;
    double noise_variance = 0.01;
    double a = 1.0;
    double b = 2.0;
};

struct RegretParams {
    /// `seed` in here is ignored; replication k uses ExperimentConfig::seed + k.
    TVBOConfig tvbo;
    std::size_t replications = 10;
};

using ExperimentParams = std::variant<Fig1Params, TemporalSpectrumParams, Fig4Params, ScalingParams, RegretParams>;

struct ExperimentConfig {
    ExperimentId id = ExperimentId::Fig1;
    std::uint64_t seed = 0;
    std::filesystem::path output;
    /// Worker threads for replications; 0 = hardware concurrency.
    std::size_t jobs = 0;
    ExperimentParams params;

    /// Defaults for the experiment, as documented in docs/schemas.md.
    static ExperimentConfig defaults(ExperimentId id);
};

enum class ConfigFormat { Toml, Json };

/// Parses a TOML or JSON document. Every error is ParseError and names the
/// source, the field and, where known, the line.
ExperimentConfig parse_config(std::string_view text, ConfigFormat format, const std::string& source = "<config>");

/// Format chosen by extension (.toml / .json). Throws IoFailure if unreadable.
ExperimentConfig load_config(const std::filesystem::path& path);

/// Fully resolved configuration, defaults included.
nlohmann::json to_json(const ExperimentConfig& config);

enum class CostClass { Small, Medium, Large };
std::string to_string(CostClass c);

struct Diagnostics {
    std::size_t largest_matrix = 0;
    double estimated_seconds = 0.0;
    CostClass cost = CostClass::Small;
    std::vector<std::string> warnings;
};

/// Seconds per n^3 for a dense symmetric eigendecomposition without and with
/// eigenvectors, measured on one core.
inline constexpr double kEigenvaluesCost = 3e-10;
inline constexpr double kEigenvectorsCost = 8e-10;
/// Estimated runtimes above this many seconds draw a warning.
inline constexpr double kDeskBudgetSeconds = 120.0;

/// Matrix sizes and an n^3 runtime estimate; no side effects.
Diagnostics diagnose(const ExperimentConfig& config);

struct ManifestEntry {
    std::string path;  ///< relative to the output directory
    std::uintmax_t bytes = 0;
    /// Hex SHA-256; empty for the manifest itself.
    std::string sha256;
};

struct Manifest {
    std::filesystem::path directory;
    std::vector<ManifestEntry> files;
};

/// Runs the experiment and writes its CSV and SVG files plus manifest.json
/// into config.output (created if needed). Throws IoFailure.
Manifest run_experiment(const ExperimentConfig& config);

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace tvbo
