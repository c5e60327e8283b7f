#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tvbo/errors.hpp"
#include "tvbo/expcli.hpp"

using namespace tvbo;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("tvbo_expcli_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(slurp(p));
    for (std::string line; std::getline(in, line);) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        rows.push_back(cells);
    }
    return rows;
}

std::string parse_error(std::string_view text, ConfigFormat f = ConfigFormat::Toml) {
    try {
        (void)parse_config(text, f, "cfg");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::ParseError);
        return e.what();
    }
    FAIL("expected a parse error");
    return {};
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(TVBO_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("minimal configuration takes every default") {
    const auto cfg = parse_config("experiment = \"fig1\"\n", ConfigFormat::Toml);
    CHECK(cfg.id == ExperimentId::Fig1);
    CHECK(cfg.seed == 0);
    CHECK(cfg.output == fs::path("out") / "fig1");
    const auto& p = std::get<Fig1Params>(cfg.params);
    CHECK(p.n == 100);
    const auto d = diagnose(cfg);
    CHECK(d.cost == CostClass::Small);
    CHECK(d.largest_matrix == 100);
    CHECK(d.warnings.empty());
}

TEST_CASE("TOML and JSON describe the same configuration") {
    const auto toml = parse_config(R"(experiment = "fig5"
seed = 4
ns = [40, 80]
replications = 3
interval = [0.5, 2.5]

[spatial]
family = "matern"
nu = "3/2"
lengthscale = 2.0

[[kernels]]
name = "broad"
family = "rbf"
lengthscale = 0.5

[[kernels]]
name = "lines"
family = "cosine_sum"
constant = 0.5
terms = [{frequency = 1.3, coefficient = 0.5}]
)",
                                   ConfigFormat::Toml);
    const auto json = parse_config(R"({"experiment": "fig5", "seed": 4, "ns": [40, 80], "replications": 3,
        "interval": [0.5, 2.5], "spatial": {"family": "matern", "nu": "3/2", "lengthscale": 2.0},
        "kernels": [{"name": "broad", "family": "rbf", "lengthscale": 0.5},
                    {"name": "lines", "family": "cosine_sum", "constant": 0.5,
                     "terms": [{"frequency": 1.3, "coefficient": 0.5}]}]})",
                                   ConfigFormat::Json);
    CHECK(to_json(toml) == to_json(json));
    const auto& p = std::get<ScalingParams>(toml.params);
    CHECK(p.kernels.size() == 2);
    CHECK(p.a == 0.5);
    CHECK(p.b == 2.5);
    // Resolved configuration parses back to itself.
    CHECK(to_json(parse_config(to_json(toml).dump(), ConfigFormat::Json)) == to_json(toml));
}

TEST_CASE("parse errors name the field and line") {
    auto msg = parse_error("experiment = \"fig1\"\n[temporal]\nfamily = \"rbf\"\n");
    CHECK(msg.find("temporal") != std::string::npos);
    CHECK(msg.find("lengthscale") != std::string::npos);
    CHECK(msg.find("cfg:2") != std::string::npos);

    msg = parse_error("experiment = \"fig1\"\n[temporal]\nlengthscale = 1.0\n");
    CHECK(msg.find("temporal.family") != std::string::npos);

    msg = parse_error("experiment = \"fig1\"\nn = 100\nlengthscal = 3\n");
    CHECK(msg.find("'lengthscal'") != std::string::npos);
    CHECK(msg.find("cfg:3") != std::string::npos);

    msg = parse_error("experiment = \"fig1\"\n[temporal]\nfamily = \"rbf\"\nlengthscale = -1\n");
    CHECK(msg.find("cfg:4") != std::string::npos);

    msg = parse_error("experiment = \"fig1\"\n[temporal]\nfamily = \"rbf\"\nlengthscale = 1\nbandlimit = 2\n");
    CHECK(msg.find("temporal.bandlimit") != std::string::npos);

    msg = parse_error("experiment = \"fig1\"\nn = [1,\n");
    CHECK(msg.find("cfg:2") != std::string::npos);

    msg = parse_error("experiment = \"fig9\"\n");
    CHECK(msg.find("fig9") != std::string::npos);

    msg = parse_error("seed = 3\n");
    CHECK(msg.find("'experiment'") != std::string::npos);

    msg = parse_error("experiment = \"regret\"\ndelta = 1.5\n");
    CHECK(msg.find("'delta'") != std::string::npos);
    CHECK(msg.find("cfg:2") != std::string::npos);

    msg = parse_error("experiment = \"fig4\"\n[temporal]\nfamily = \"rbf\"\nlengthscale = 1\n");
    CHECK(msg.find("periodic") != std::string::npos);

    msg = parse_error("experiment = \"fig5\"\nns = [100, 50]\n");
    CHECK(msg.find("'ns'") != std::string::npos);

    msg = parse_error("{\"experiment\": \"fig1\",\n \"n\": }", ConfigFormat::Json);
    CHECK(msg.find("cfg:2") != std::string::npos);

    msg = parse_error(R"({"experiment": "fig2", "panels": [{"n": 100, "dt": 0}]})", ConfigFormat::Json);
    CHECK(msg.find("panels[0].dt") != std::string::npos);
}

TEST_CASE("cost model warns for large scaling runs") {
    auto cfg = parse_config("experiment = \"fig5\"\nns = [500, 1000, 2000]\n", ConfigFormat::Toml);
    auto d = diagnose(cfg);
    CHECK(d.largest_matrix == 2000);
    CHECK(d.cost == CostClass::Large);
    REQUIRE(d.warnings.size() == 1);
    CHECK(d.warnings[0].find("budget") != std::string::npos);
    CHECK(d.estimated_seconds > kDeskBudgetSeconds);

    cfg = ExperimentConfig::defaults(ExperimentId::Fig5);
    CHECK(diagnose(cfg).warnings.empty());
}

TEST_CASE("SHA-256 of known inputs") {
    TempDir dir;
    std::ofstream(dir.path / "abc") << "abc";
    CHECK(sha256_file(dir.path / "abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    std::ofstream(dir.path / "empty").close();
    CHECK(sha256_file(dir.path / "empty") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("periodic experiment reports 3 and 6 positive eigenvalues") {
    TempDir dir;
    auto cfg = ExperimentConfig::defaults(ExperimentId::Fig4);
    cfg.output = dir.path;
    run_experiment(cfg);
    const auto rows = read_csv(dir.path / "fig4_counts.csv");
    REQUIRE(rows.size() == 5);
    CHECK(rows[0] == std::vector<std::string>{"divisor", "dt", "n", "positive"});
    for (std::size_t r = 1; r < rows.size(); ++r) CHECK(rows[r][3] == (rows[r][0] == "3" ? "3" : "6"));
}

TEST_CASE("sampling above the Nyquist rate leaves a trailing zero block") {
    TempDir dir;
    const auto cfg = parse_config("experiment = \"fig3\"\noutput = \"" + dir.path.generic_string() +
                                      "\"\n[[panels]]\nn = 100\ndt = 0.25\n",
                                  ConfigFormat::Toml);
    run_experiment(cfg);
    const auto rows = read_csv(dir.path / "fig3.csv");
    REQUIRE(rows.size() == 101);
    const std::size_t col = 5;  // approx_sorted
    CHECK(rows[0][col] == "approx_sorted");
    std::size_t first_zero = 0;
    for (std::size_t r = 1; r < rows.size(); ++r)
        if (std::stod(rows[r][col]) == 0.0) {
            first_zero = r;
            break;
        }
    REQUIRE(first_zero > 0);
    for (std::size_t r = first_zero; r < rows.size(); ++r) CHECK(std::stod(rows[r][col]) == 0.0);
    CHECK(rows.size() - first_zero >= 45);
    // The exact spectrum's tail is numerically zero too.
    CHECK(std::stod(rows.back()[4]) < 1e-8 * std::stod(rows[1][4]));
}

TEST_CASE("scaling experiment has mean and stderr for every kernel") {
    TempDir dir;
    auto cfg = parse_config("experiment = \"fig5\"\nns = [30, 60]\n", ConfigFormat::Toml);
    cfg.output = dir.path;
    cfg.jobs = 2;
    run_experiment(cfg);
    const auto rows = read_csv(dir.path / "fig5.csv");
    REQUIRE(rows.size() == 9);
    CHECK(rows[0] == std::vector<std::string>{"kernel", "n", "count", "I_over_n", "stderr", "count_stderr", "n0_proxy"});
    std::set<std::string> kernels;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        kernels.insert(rows[r][0]);
        CHECK(std::stod(rows[r][4]) > 0.0);  // ten replications differ
    }
    CHECK(kernels == std::set<std::string>{"rbf", "sinc_squared", "periodic", "cosine_sum"});
}

TEST_CASE("reruns are byte-identical and the manifest is complete") {
    TempDir a, b;
    for (auto id : {ExperimentId::Fig1, ExperimentId::Table1}) {
        auto cfg = ExperimentConfig::defaults(id);
        cfg.seed = 7;
        cfg.output = a.path / to_string(id);
        const auto ma = run_experiment(cfg);
        cfg.output = b.path / to_string(id);
        cfg.jobs = 1;
        const auto mb = run_experiment(cfg);
        REQUIRE(ma.files.size() == mb.files.size());
        for (std::size_t i = 0; i < ma.files.size(); ++i) {
            CHECK(ma.files[i].path == mb.files[i].path);
            if (ma.files[i].path != "manifest.json") CHECK(ma.files[i].sha256 == mb.files[i].sha256);
        }

        std::set<std::string> listed;
        for (const auto& f : ma.files) listed.insert(f.path);
        for (const auto& e : fs::directory_iterator(ma.directory)) CHECK(listed.contains(e.path().filename().string()));
        const auto manifest = nlohmann::json::parse(slurp(ma.directory / "manifest.json"));
        CHECK(manifest.at("files").size() == ma.files.size());
        for (const auto& f : manifest.at("files"))
            if (!f.at("sha256").is_null())
                CHECK(f.at("sha256").get<std::string>() == sha256_file(ma.directory / f.at("path").get<std::string>()));
    }
    CHECK(slurp(a.path / "fig1" / "fig1_spectrum.csv") == slurp(b.path / "fig1" / "fig1_spectrum.csv"));
}

TEST_CASE("regret experiment writes traces and bounds") {
    TempDir dir;
    auto cfg = parse_config("experiment = \"regret\"\nhorizon = 25\nreplications = 3\ngrid_resolution = 11\n",
                            ConfigFormat::Toml);
    cfg.output = dir.path;
    cfg.seed = 11;
    const auto m = run_experiment(cfg);
    for (const char* f : {"regret_seed_11.csv", "regret_seed_12.csv", "regret_seed_13.csv", "regret_summary.csv",
                          "bounds.json", "regret.svg", "manifest.json"})
        CHECK(fs::exists(dir.path / f));
    const auto bounds = nlohmann::json::parse(slurp(dir.path / "bounds.json"));
    CHECK(bounds.at("runs").size() == 3);
    CHECK(bounds.at("summary").at("replications") == 3);
    const auto summary = read_csv(dir.path / "regret_summary.csv");
    CHECK(summary.size() == 26);
}

TEST_CASE("unwritable output is an I/O failure") {
    TempDir dir;
    std::ofstream(dir.path / "file") << "x";
    auto cfg = ExperimentConfig::defaults(ExperimentId::Fig4);
    cfg.output = dir.path / "file" / "sub";
    try {
        run_experiment(cfg);
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::IoFailure);
    }
}

TEST_CASE("command line exit codes") {
    TempDir dir;
    CHECK(run_cli("list") == 0);
    std::ofstream(dir.path / "good.toml") << "experiment = \"fig4\"\nns = [20, 40]\n";
    std::ofstream(dir.path / "bad.toml") << "experiment = \"fig4\"\n[temporal]\nfamily = \"periodic\"\n";
    std::ofstream(dir.path / "good.json") << R"({"experiment": "fig1", "n": 30})";
    const auto good = (dir.path / "good.toml").string();
    CHECK(run_cli("validate --config " + good) == 0);
    CHECK(run_cli("validate --config " + (dir.path / "bad.toml").string()) == 2);
    CHECK(run_cli("validate --config " + (dir.path / "missing.toml").string()) == 2);
    CHECK(run_cli("frobnicate") == 2);
    CHECK(run_cli("run --config " + good + " --out " + (dir.path / "out").string() + " --seed 3 --jobs 1") == 0);
    CHECK(fs::exists(dir.path / "out" / "fig4_counts.csv"));
    CHECK(run_cli("run --config " + (dir.path / "good.json").string() + " --out " + (dir.path / "j").string()) == 0);
    CHECK(fs::exists(dir.path / "j" / "fig1_spectrum.csv"));
    std::ofstream(dir.path / "blocker") << "x";
    CHECK(run_cli("run --experiment fig4 --out " + (dir.path / "blocker" / "x").string()) == 3);
}
