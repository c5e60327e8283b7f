#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>
#include <toml.hpp>

#include "tvbo/errors.hpp"
#include "tvbo/expcli.hpp"

namespace tvbo {

namespace {

using json = nlohmann::json;
using LineMap = std::map<std::string, std::size_t>;

constexpr ExperimentId kAllExperiments[] = {ExperimentId::Fig1, ExperimentId::Fig2,   ExperimentId::Fig3,
                                            ExperimentId::Fig4, ExperimentId::Fig5,   ExperimentId::Table1,
                                            ExperimentId::Regret};

json toml_to_json(const toml::node& node, const std::string& path, LineMap& lines) {
    if (!path.empty() && node.source().begin.line > 0) lines[path] = node.source().begin.line;
    if (const auto* t = node.as_table()) {
        json out = json::object();
        for (const auto& [k, v] : *t) {
            const std::string key(k.str());
            out[key] = toml_to_json(v, path.empty() ? key : path + "." + key, lines);
        }
        return out;
    }
    if (const auto* a = node.as_array()) {
        json out = json::array();
        for (std::size_t i = 0; i < a->size(); ++i)
            out.push_back(toml_to_json(*a->get(i), path + "[" + std::to_string(i) + "]", lines));
        return out;
    }
    if (const auto* v = node.as_string()) return v->get();
    if (const auto* v = node.as_integer()) return v->get();
    if (const auto* v = node.as_floating_point()) return v->get();
    if (const auto* v = node.as_boolean()) return v->get();
    std::ostringstream os;
    node.visit([&](const auto& v) { os << v; });
    return os.str();
}

struct Source {
    json doc;
    LineMap lines;
    std::string name;

    [[noreturn]] void fail_at(const std::string& field, const std::string& what) const {
        std::string where = name;
        // Missing fields fall back to the nearest enclosing table that has a line.
        for (std::string f = field; !f.empty();) {
            if (const auto it = lines.find(f); it != lines.end()) {
                where += ":" + std::to_string(it->second);
                break;
            }
            const auto cut = f.find_last_of(".[");
            f = cut == std::string::npos ? std::string() : f.substr(0, cut);
        }
        fail(ErrorKind::ParseError, where + ": field '" + field + "': " + what);
    }
};

const std::map<std::string, std::set<std::string>>& temporal_keys() {
    static const std::map<std::string, std::set<std::string>> keys{
        {"rbf", {"lengthscale"}},
        {"matern", {"nu", "lengthscale"}},
        {"rational_quadratic", {"lengthscale", "alpha"}},
        {"sinc", {"bandlimit"}},
        {"sinc_squared", {"bandlimit"}},
        {"periodic", {"period", "lengthscale"}},
        {"cosine_sum", {"constant", "terms"}},
    };
    return keys;
}

class Reader {
public:
    Reader(const Source& src, const json& obj, std::string prefix) : src_(src), obj_(obj), prefix_(std::move(prefix)) {
        if (!obj_.is_object()) src_.fail_at(prefix_, "must be a table");
    }

    [[nodiscard]] std::string path(const std::string& key) const {
        return prefix_.empty() ? key : prefix_ + "." + key;
    }

    const json* raw(const std::string& key) {
        used_.insert(key);
        const auto it = obj_.find(key);
        return it == obj_.end() ? nullptr : &*it;
    }

    double number(const std::string& key, double fallback, bool positive = false) {
        const json* v = raw(key);
        if (!v) return fallback;
        if (!v->is_number()) src_.fail_at(path(key), "must be a number");
        const double x = v->get<double>();
        if (!std::isfinite(x)) src_.fail_at(path(key), "must be finite");
        if (positive && !(x > 0.0)) src_.fail_at(path(key), "must be positive");
        return x;
    }

    std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback, std::uint64_t min = 0) {
        const json* v = raw(key);
        if (!v) return fallback;
        return as_unsigned(*v, path(key), min);
    }

    std::vector<std::size_t> unsigned_list(const std::string& key, std::vector<std::size_t> fallback,
                                           std::uint64_t min) {
        const json* v = raw(key);
        if (!v) return fallback;
        if (!v->is_array() || v->empty()) src_.fail_at(path(key), "must be a nonempty array of integers");
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < v->size(); ++i)
            out.push_back(as_unsigned((*v)[i], path(key) + "[" + std::to_string(i) + "]", min));
        return out;
    }

    std::string string(const std::string& key, std::string fallback) {
        const json* v = raw(key);
        if (!v) return fallback;
        if (!v->is_string()) src_.fail_at(path(key), "must be a string");
        return v->get<std::string>();
    }

    TemporalKernel temporal(const std::string& key, TemporalKernel fallback) {
        const json* v = raw(key);
        return v ? temporal_from(*v, path(key)) : fallback;
    }

    TemporalKernel temporal_from(const json& v, const std::string& where, const std::set<std::string>& extra = {}) {
        if (!v.is_object()) src_.fail_at(where, "must be a table");
        if (!v.contains("family") || !v.at("family").is_string()) src_.fail_at(where + ".family", "missing");
        const auto family = v.at("family").get<std::string>();
        const auto allowed = temporal_keys().find(family);
        if (allowed == temporal_keys().end()) src_.fail_at(where + ".family", "unknown temporal family '" + family + "'");
        for (const auto& [k, _] : v.items())
            if (k != "family" && !allowed->second.contains(k) && !extra.contains(k))
                src_.fail_at(where + "." + k, "not a parameter of the " + family + " kernel");
        return convert(where, v, [&] { return temporal_kernel_from_json(v); });
    }

    SpatialKernel spatial(const std::string& key, SpatialKernel fallback) {
        const json* v = raw(key);
        if (!v) return fallback;
        if (!v->is_object()) src_.fail_at(path(key), "must be a table");
        for (const auto& [k, _] : v->items())
            if (k != "family" && k != "lengthscale" && k != "dimension" && k != "nu")
                src_.fail_at(path(key) + "." + k, "not a spatial kernel parameter");
        if (v->contains("dimension")) as_unsigned(v->at("dimension"), path(key) + ".dimension", 1);
        return convert(path(key), *v, [&] { return spatial_kernel_from_json(*v); });
    }

    /// Array of tables under `key`; empty when absent.
    std::vector<std::pair<const json*, std::string>> tables(const std::string& key) {
        std::vector<std::pair<const json*, std::string>> out;
        const json* v = raw(key);
        if (!v) return out;
        if (!v->is_array() || v->empty()) src_.fail_at(path(key), "must be a nonempty array of tables");
        for (std::size_t i = 0; i < v->size(); ++i) out.emplace_back(&(*v)[i], path(key) + "[" + std::to_string(i) + "]");
        return out;
    }

    void finish() const {
        for (const auto& [k, _] : obj_.items())
            if (!used_.contains(k)) src_.fail_at(path(k), "unknown field");
    }

    [[nodiscard]] const Source& source() const { return src_; }

private:
    std::uint64_t as_unsigned(const json& v, const std::string& where, std::uint64_t min) const {
        if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0))
            src_.fail_at(where, "must be a nonnegative integer");
        const auto x = v.get<std::uint64_t>();
        if (x < min) src_.fail_at(where, "must be >= " + std::to_string(min));
        return x;
    }

    // Kernel factories report parameter names in their messages; point the
    // error at that key when the table has it.
    template <class F>
    auto convert(const std::string& where, const json& table, F&& f) const -> decltype(f()) {
        auto locate = [&](const std::string& msg) {
            for (const auto& [k, _] : table.items())
                if (k != "family" && msg.find(k) != std::string::npos) return where + "." + k;
            return where;
        };
        try {
            return f();
        } catch (const Error& e) {
            src_.fail_at(locate(e.detail()), e.detail());
        } catch (const json::exception& e) {
            src_.fail_at(locate(e.what()), e.what());
        }
    }

    const Source& src_;
    const json& obj_;
    std::string prefix_;
    std::set<std::string> used_;
};

std::vector<NamedKernel> default_scaling_kernels() {
    return {{"rbf", TemporalKernel::rbf(0.5)},
            {"sinc_squared", TemporalKernel::sinc_squared(1.0)},
            {"periodic", TemporalKernel::periodic(1.0, 1.0)},
            {"cosine_sum", TemporalKernel::cosine_sum(0.5, {{1.3, 0.5}})}};
}

void require_ascending(const Reader& r, const std::string& field, const std::vector<std::size_t>& v) {
    if (!std::is_sorted(v.begin(), v.end()) || std::adjacent_find(v.begin(), v.end()) != v.end())
        r.source().fail_at(field, "must be strictly ascending");
}

void read_panels(Reader& r, TemporalSpectrumParams& p) {
    p.temporal = r.temporal("temporal", p.temporal);
    if (classify(p.temporal).support_discrete)
        r.source().fail_at(r.path("temporal"), "density-sampling spectra need a continuous-support kernel");
    auto panels = r.tables("panels");
    if (panels.empty()) return;
    p.panels.clear();
    for (const auto& [obj, where] : panels) {
        Reader pr(r.source(), *obj, where);
        SpectrumPanel panel;
        panel.n = pr.unsigned_integer("n", panel.n, 2);
        panel.dt = pr.number("dt", panel.dt, true);
        pr.finish();
        p.panels.push_back(panel);
    }
}

void read_scaling(Reader& r, ScalingParams& p) {
    p.spatial = r.spatial("spatial", p.spatial);
    p.ns = r.unsigned_list("ns", p.ns, 1);
    require_ascending(r, r.path("ns"), p.ns);
    p.replications = r.unsigned_integer("replications", p.replications, 1);
    p.dt = r.number("dt", p.dt, true);
    p.noise_variance = r.number("noise_variance", p.noise_variance, true);
    if (const json* iv = r.raw("interval")) {
        if (!iv->is_array() || iv->size() != 2 || !(*iv)[0].is_number() || !(*iv)[1].is_number())
            r.source().fail_at(r.path("interval"), "must be [a, b]");
        p.a = (*iv)[0].get<double>();
        p.b = (*iv)[1].get<double>();
        if (!(p.a <= p.b)) r.source().fail_at(r.path("interval"), "needs a <= b");
    }
    auto kernels = r.tables("kernels");
    if (kernels.empty()) return;
    p.kernels.clear();
    std::set<std::string> names;
    for (const auto& [obj, where] : kernels) {
        if (!obj->is_object()) r.source().fail_at(where, "must be a table");
        if (!obj->contains("name") || !obj->at("name").is_string()) r.source().fail_at(where + ".name", "missing");
        const auto name = obj->at("name").get<std::string>();
        if (name.empty() || name.find_first_of(",\"\n") != std::string::npos)
            r.source().fail_at(where + ".name", "must be nonempty without commas or quotes");
        if (!names.insert(name).second) r.source().fail_at(where + ".name", "duplicate kernel name '" + name + "'");
        p.kernels.push_back({name, r.temporal_from(*obj, where, {"name"})});
    }
}

void read_regret(Reader& r, RegretParams& p) {
    auto& c = p.tvbo;
    c.spatial = r.spatial("spatial", c.spatial);
    c.temporal = r.temporal("temporal", c.temporal);
    c.dt = r.number("dt", c.dt, true);
    c.horizon = r.unsigned_integer("horizon", c.horizon, 1);
    c.delta = r.number("delta", c.delta);
    c.lipschitz = r.number("lipschitz", c.lipschitz, true);
    c.grid_resolution = r.unsigned_integer("grid_resolution", c.grid_resolution, 2);
    c.noise_variance = r.number("noise_variance", c.noise_variance, true);
    c.sample_cap = r.unsigned_integer("sample_cap", c.sample_cap, 1);
    p.replications = r.unsigned_integer("replications", p.replications, 1);
    try {
        c.validate();
    } catch (const Error& e) {
        const auto& d = e.detail();
        const auto colon = d.find(':');
        r.source().fail_at(r.path(d.substr(0, colon)), colon == std::string::npos ? d : d.substr(colon + 2));
    }
}

ExperimentConfig from_source(const Source& src) {
    Reader top(src, src.doc, "");
    const json* id_node = top.raw("experiment");
    if (!id_node) src.fail_at("experiment", "missing");
    if (!id_node->is_string()) src.fail_at("experiment", "must be a string");
    ExperimentId id{};
    try {
        id = experiment_from_string(id_node->get<std::string>());
    } catch (const Error& e) {
        src.fail_at("experiment", e.detail());
    }
    ExperimentConfig cfg = ExperimentConfig::defaults(id);
    cfg.seed = top.unsigned_integer("seed", cfg.seed);
    cfg.output = top.string("output", cfg.output.string());
    if (cfg.output.empty()) src.fail_at("output", "must not be empty");
    cfg.jobs = top.unsigned_integer("jobs", cfg.jobs);

    std::visit(
        [&](auto& p) {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, Fig1Params>) {
                p.n = top.unsigned_integer("n", p.n, 2);
                p.dt = top.number("dt", p.dt, true);
                p.spatial = top.spatial("spatial", p.spatial);
                p.temporal = top.temporal("temporal", p.temporal);
            } else if constexpr (std::is_same_v<P, TemporalSpectrumParams>) {
                read_panels(top, p);
            } else if constexpr (std::is_same_v<P, Fig4Params>) {
                p.temporal = top.temporal("temporal", p.temporal);
                if (p.temporal.family() != TemporalFamily::Periodic)
                    src.fail_at("temporal.family", "this experiment needs a periodic kernel");
                p.divisors = top.unsigned_list("divisors", p.divisors, 1);
                p.ns = top.unsigned_list("ns", p.ns, 2);
                require_ascending(top, "ns", p.ns);
            } else if constexpr (std::is_same_v<P, ScalingParams>) {
                read_scaling(top, p);
            } else {
                read_regret(top, p);
            }
        },
        cfg.params);
    top.finish();
    return cfg;
}

std::size_t line_of_offset(std::string_view text, std::size_t offset) {
    offset = std::min(offset, text.size());
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

}  // namespace

std::string to_string(ExperimentId id) {
    switch (id) {
        case ExperimentId::Fig1: return "fig1";
        case ExperimentId::Fig2: return "fig2";
        case ExperimentId::Fig3: return "fig3";
        case ExperimentId::Fig4: return "fig4";
        case ExperimentId::Fig5: return "fig5";
        case ExperimentId::Table1: return "table1";
        case ExperimentId::Regret: return "regret";
    }
    return "?";
}

ExperimentId experiment_from_string(std::string_view name) {
    for (auto id : kAllExperiments)
        if (to_string(id) == name) return id;
    fail(ErrorKind::ParseError, "unknown experiment '" + std::string(name) + "'");
}

std::vector<ExperimentInfo> list_experiments() {
    return {
        {ExperimentId::Fig1, "spatial, temporal and product spectra of an RBF x RBF kernel matrix"},
        {ExperimentId::Fig2, "RBF temporal spectrum versus density sampling for several n and dt"},
        {ExperimentId::Fig3, "sinc^2 temporal spectrum with zero eigenvalues above the Nyquist rate"},
        {ExperimentId::Fig4, "periodic kernel with commensurate sampling: 3 and 6 positive eigenvalues"},
        {ExperimentId::Fig5, "eigenvalue counts in [a, b] and I/n against n for four temporal kernels"},
        {ExperimentId::Table1, "kernel taxonomy with measured count and information scaling"},
        {ExperimentId::Regret, "GP-UCB cumulative regret with upper and lower bounds over replications"},
    };
}

ExperimentConfig ExperimentConfig::defaults(ExperimentId id) {
    ExperimentConfig c;
    c.id = id;
    c.output = std::filesystem::path("out") / to_string(id);
    switch (id) {
        case ExperimentId::Fig1: c.params = Fig1Params{}; break;
        case ExperimentId::Fig2:
            c.params = TemporalSpectrumParams{TemporalKernel::rbf(1.0), {{100, 0.1}, {100, 0.05}, {200, 0.1}}};
            break;
        case ExperimentId::Fig3:
            c.params = TemporalSpectrumParams{TemporalKernel::sinc_squared(1.0), {{100, 0.5}, {100, 0.25}, {200, 0.25}}};
            break;
        case ExperimentId::Fig4: c.params = Fig4Params{}; break;
        case ExperimentId::Fig5: {
            ScalingParams p;
            p.kernels = default_scaling_kernels();
            c.params = p;
            break;
        }
        case ExperimentId::Table1: {
            ScalingParams p;
            p.kernels = default_scaling_kernels();
            p.ns = {100, 200};
            c.params = p;
            break;
        }
        case ExperimentId::Regret: c.params = RegretParams{}; break;
    }
    return c;
}

ExperimentConfig parse_config(std::string_view text, ConfigFormat format, const std::string& source) {
    Source src;
    src.name = source;
    if (format == ConfigFormat::Toml) {
        try {
            const toml::table table = toml::parse(text, source);
            src.doc = toml_to_json(table, "", src.lines);
        } catch (const toml::parse_error& e) {
            fail(ErrorKind::ParseError, source + ":" + std::to_string(e.source().begin.line) + ":" +
                                            std::to_string(e.source().begin.column) + ": " +
                                            std::string(e.description()));
        }
    } else {
        try {
            src.doc = json::parse(text);
        } catch (const json::parse_error& e) {
            fail(ErrorKind::ParseError, source + ":" + std::to_string(line_of_offset(text, e.byte)) + ": " + e.what());
        }
        if (!src.doc.is_object()) fail(ErrorKind::ParseError, source + ": top level must be an object");
    }
    return from_source(src);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorKind::IoFailure, "cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    const auto ext = path.extension().string();
    ConfigFormat format = ConfigFormat::Toml;
    if (ext == ".json") {
        format = ConfigFormat::Json;
    } else if (ext != ".toml") {
        const auto text = buf.str();
        const auto first = text.find_first_not_of(" \t\r\n");
        if (first != std::string::npos && text[first] == '{') format = ConfigFormat::Json;
    }
    return parse_config(buf.str(), format, path.string());
}

nlohmann::json to_json(const ExperimentConfig& c) {
    json j{{"experiment", to_string(c.id)}, {"seed", c.seed}, {"output", c.output.generic_string()}, {"jobs", c.jobs}};
    std::visit(
        [&](const auto& p) {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, Fig1Params>) {
                j["n"] = p.n;
                j["dt"] = p.dt;
                j["spatial"] = to_json(p.spatial);
                j["temporal"] = to_json(p.temporal);
            } else if constexpr (std::is_same_v<P, TemporalSpectrumParams>) {
                j["temporal"] = to_json(p.temporal);
                j["panels"] = json::array();
                for (const auto& panel : p.panels) j["panels"].push_back({{"n", panel.n}, {"dt", panel.dt}});
            } else if constexpr (std::is_same_v<P, Fig4Params>) {
                j["temporal"] = to_json(p.temporal);
                j["divisors"] = p.divisors;
                j["ns"] = p.ns;
            } else if constexpr (std::is_same_v<P, ScalingParams>) {
                j["spatial"] = to_json(p.spatial);
                j["ns"] = p.ns;
                j["replications"] = p.replications;
                j["dt"] = p.dt;
                j["noise_variance"] = p.noise_variance;
                j["interval"] = {p.a, p.b};
                j["kernels"] = json::array();
                for (const auto& k : p.kernels) {
                    auto kj = to_json(k.kernel);
                    kj["name"] = k.name;
                    j["kernels"].push_back(kj);
                }
            } else {
                const auto& t = p.tvbo;
                j["spatial"] = to_json(t.spatial);
                j["temporal"] = to_json(t.temporal);
                j["dt"] = t.dt;
                j["horizon"] = t.horizon;
                j["delta"] = t.delta;
                j["lipschitz"] = t.lipschitz;
                j["grid_resolution"] = t.grid_resolution;
                j["noise_variance"] = t.noise_variance;
                j["sample_cap"] = t.sample_cap;
                j["replications"] = p.replications;
            }
        },
        c.params);
    return j;
}

}  // namespace tvbo
