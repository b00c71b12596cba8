#pragma once

#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include <json.hpp>

#include "hdch/diagnostics.hpp"

namespace hdch {

/// Fully resolved run configuration. Parsed from a flat-section key-value
/// file (a TOML-compatible subset) or from the run.json echo.
struct RunConfig {
    // [grid]
    int nx = 64, ny = 64;
    double lx = 1.0, ly = 1.0;
    // [potential]
    double theta = 1.0, theta0 = 2.0;
    std::string potential_mode = "log"; // log | eps | polynomial
    double epsilon = 1e-3;              // used by the eps mode
    // [viscosity]
    double nu1 = 1.0, nu2 = 1.0;
    // [scenario]
    std::string scenario = "spinodal";
    double mean = 0.0;
    double amplitude = 0.2;
    uint64_t seed = 1;
    double prepare_k = 0.0; // > 0 runs prepare_initial_data first
    // [time]
    double dt = 1e-4;
    double t_end = 0.1;
    int record_every = 1;
    bool pure_ch = false;
    // [solver]
    double pcg_tol = 1e-10;
    double newton_tol = 1e-11;
    double clamp = 1.0 - 1e-12;
    // [output]
    std::string out_dir = "out";
    bool snapshots = false;

    bool operator==(const RunConfig&) const = default;

    Grid grid() const { return Grid(nx, ny, lx, ly); }

    Potential potential() const {
        if (potential_mode == "log") return Potential::logarithmic(theta, theta0);
        if (potential_mode == "eps") return Potential::regularized(theta, theta0, epsilon);
        if (potential_mode == "polynomial") return Potential::polynomial();
        throw ConfigError("unknown potential mode: " + potential_mode);
    }

    ViscositySpec viscosity() const {
        ViscositySpec v{nu1, nu2};
        v.validate();
        return v;
    }

    StepConfig step_config() const {
        StepConfig c;
        c.dt = dt;
        c.pure_ch = pure_ch;
        c.newton.tol = newton_tol;
        c.newton.clamp = clamp;
        c.pcg.rel_tol = pcg_tol;
        c.validate();
        return c;
    }

    ScenarioParams scenario_params() const {
        return {scenario_from_name(scenario), mean, amplitude, seed};
    }

    int steps() const { return static_cast<int>(std::llround(t_end / dt)); }
};

namespace detail {

struct FlatConfig {
    std::map<std::string, std::string> kv; // "section.key" -> raw value

    bool has(const std::string& k) const { return kv.count(k) > 0; }
    std::string take(const std::string& k) {
        auto it = kv.find(k);
        std::string v = it->second;
        kv.erase(it);
        return v;
    }
};

inline std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline FlatConfig parse_flat_config(std::istream& is) {
    FlatConfig out;
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        // strip comments outside quotes
        bool quoted = false;
        for (size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') quoted = !quoted;
            if (line[i] == '#' && !quoted) {
                line = line.substr(0, i);
                break;
            }
        }
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config line " + std::to_string(lineno) + ": malformed section");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty())
                throw ConfigError("config line " + std::to_string(lineno) + ": empty section name");
            continue;
        }
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError("config line " + std::to_string(lineno) + ": empty key or value");
        const std::string full = section.empty() ? key : section + "." + key;
        if (out.kv.count(full)) throw ConfigError("duplicate config key: " + full);
        out.kv[full] = value;
    }
    return out;
}

inline std::string unquote(const std::string& v, const std::string& key) {
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return v.substr(1, v.size() - 2);
    for (char c : v)
        if (std::isspace(static_cast<unsigned char>(c)))
            throw ConfigError("config value for " + key + " must be quoted");
    return v;
}

inline double to_double(const std::string& v, const std::string& key) {
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0') throw ConfigError("config value for " + key + " is not a number");
    return x;
}

inline int to_int(const std::string& v, const std::string& key) {
    const double x = to_double(v, key);
    const int i = static_cast<int>(std::llround(x));
    if (x != static_cast<double>(i)) throw ConfigError("config value for " + key + " is not an integer");
    return i;
}

inline uint64_t to_u64(const std::string& v, const std::string& key) {
    char* end = nullptr;
    const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0')
        throw ConfigError("config value for " + key + " is not an unsigned integer");
    return static_cast<uint64_t>(x);
}

inline bool to_bool(const std::string& v, const std::string& key) {
    if (v == "true") return true;
    if (v == "false") return false;
    throw ConfigError("config value for " + key + " must be true or false");
}

} // namespace detail

inline RunConfig config_from_flat(detail::FlatConfig flat) {
    RunConfig c;
    auto num = [&](const char* k, double& slot) { if (flat.has(k)) slot = detail::to_double(flat.take(k), k); };
    auto igr = [&](const char* k, int& slot) { if (flat.has(k)) slot = detail::to_int(flat.take(k), k); };
    auto str = [&](const char* k, std::string& slot) { if (flat.has(k)) slot = detail::unquote(flat.take(k), k); };
    auto bol = [&](const char* k, bool& slot) { if (flat.has(k)) slot = detail::to_bool(flat.take(k), k); };

    igr("grid.nx", c.nx);
    igr("grid.ny", c.ny);
    num("grid.lx", c.lx);
    num("grid.ly", c.ly);
    num("potential.theta", c.theta);
    num("potential.theta0", c.theta0);
    str("potential.mode", c.potential_mode);
    num("potential.epsilon", c.epsilon);
    num("viscosity.nu1", c.nu1);
    num("viscosity.nu2", c.nu2);
    str("scenario.name", c.scenario);
    num("scenario.mean", c.mean);
    num("scenario.amplitude", c.amplitude);
    if (flat.has("scenario.seed")) c.seed = detail::to_u64(flat.take("scenario.seed"), "scenario.seed");
    num("scenario.prepare_k", c.prepare_k);
    num("time.dt", c.dt);
    num("time.t_end", c.t_end);
    igr("time.record_every", c.record_every);
    bol("time.pure_ch", c.pure_ch);
    num("solver.pcg_tol", c.pcg_tol);
    num("solver.newton_tol", c.newton_tol);
    num("solver.clamp", c.clamp);
    str("output.dir", c.out_dir);
    bol("output.snapshots", c.snapshots);

    if (!flat.kv.empty()) throw ConfigError("unknown config key: " + flat.kv.begin()->first);
    return c;
}

inline nlohmann::json config_to_json(const RunConfig& c) {
    nlohmann::json j;
    j["grid"] = {{"nx", c.nx}, {"ny", c.ny}, {"lx", c.lx}, {"ly", c.ly}};
    j["potential"] = {{"theta", c.theta}, {"theta0", c.theta0}, {"mode", c.potential_mode}, {"epsilon", c.epsilon}};
    j["viscosity"] = {{"nu1", c.nu1}, {"nu2", c.nu2}};
    j["scenario"] = {{"name", c.scenario}, {"mean", c.mean}, {"amplitude", c.amplitude},
                     {"seed", c.seed},     {"prepare_k", c.prepare_k}};
    j["time"] = {{"dt", c.dt}, {"t_end", c.t_end}, {"record_every", c.record_every}, {"pure_ch", c.pure_ch}};
    j["solver"] = {{"pcg_tol", c.pcg_tol}, {"newton_tol", c.newton_tol}, {"clamp", c.clamp}};
    j["output"] = {{"dir", c.out_dir}, {"snapshots", c.snapshots}};
    return j;
}

inline RunConfig config_from_json(const nlohmann::json& j) {
    try {
        RunConfig c;
        c.nx = j.at("grid").at("nx").get<int>();
        c.ny = j.at("grid").at("ny").get<int>();
        c.lx = j.at("grid").at("lx").get<double>();
        c.ly = j.at("grid").at("ly").get<double>();
        c.theta = j.at("potential").at("theta").get<double>();
        c.theta0 = j.at("potential").at("theta0").get<double>();
        c.potential_mode = j.at("potential").at("mode").get<std::string>();
        c.epsilon = j.at("potential").at("epsilon").get<double>();
        c.nu1 = j.at("viscosity").at("nu1").get<double>();
        c.nu2 = j.at("viscosity").at("nu2").get<double>();
        c.scenario = j.at("scenario").at("name").get<std::string>();
        c.mean = j.at("scenario").at("mean").get<double>();
        c.amplitude = j.at("scenario").at("amplitude").get<double>();
        c.seed = j.at("scenario").at("seed").get<uint64_t>();
        c.prepare_k = j.at("scenario").at("prepare_k").get<double>();
        c.dt = j.at("time").at("dt").get<double>();
        c.t_end = j.at("time").at("t_end").get<double>();
        c.record_every = j.at("time").at("record_every").get<int>();
        c.pure_ch = j.at("time").at("pure_ch").get<bool>();
        c.pcg_tol = j.at("solver").at("pcg_tol").get<double>();
        c.newton_tol = j.at("solver").at("newton_tol").get<double>();
        c.clamp = j.at("solver").at("clamp").get<double>();
        c.out_dir = j.at("output").at("dir").get<std::string>();
        c.snapshots = j.at("output").at("snapshots").get<bool>();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config json: ") + e.what());
    }
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file: " + path);
    if (path.size() > 5 && path.substr(path.size() - 5) == ".json") {
        nlohmann::json j;
        try {
            is >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("config json: ") + e.what());
        }
        return config_from_json(j);
    }
    return config_from_flat(detail::parse_flat_config(is));
}

// --- run orchestration -------------------------------------------------------

struct RunOutput {
    RunConfig config;
    std::vector<DiagRecord> records;
    SimState final_state;
};

/// Executes one configured run in memory (scenario, optional initial-data
/// preparation, step loop with per-record diagnostics).
inline RunOutput execute_run(const RunConfig& cfg) {
    Grid g = cfg.grid();
    SpectralWorkspace ws(g);
    Potential pot = cfg.potential();
    ViscositySpec visc = cfg.viscosity();
    StepConfig scfg = cfg.step_config();

    Field phi0 = make_scenario(g, cfg.scenario_params(), pot);
    if (cfg.prepare_k > 0.0) {
        if (pot.mode() != PotentialMode::log)
            throw ConfigError("scenario.prepare_k requires the logarithmic potential");
        phi0 = prepare_initial_data(ws, phi0, cfg.prepare_k, pot.spec(), scfg.newton, scfg.pcg)
                   .result_phi0;
    }

    RunOutput out;
    out.config = cfg;
    RunResult run = run_trajectory(ws, phi0, cfg.steps(), scfg, pot, visc, cfg.record_every);
    out.records = std::move(run.records);
    out.final_state = std::move(run.final_state);
    return out;
}

/// Executes a run and writes diag.csv, run.json and optional phi_<step>.hdch
/// snapshots under out_dir.
inline RunOutput execute_run_to_dir(const RunConfig& cfg, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    RunConfig resolved = cfg;
    resolved.out_dir = out_dir;
    {
        std::ofstream os(out_dir + "/run.json");
        os << config_to_json(resolved).dump(2) << "\n";
        if (!os) throw IoError("cannot write " + out_dir + "/run.json");
    }

    Grid g = cfg.grid();
    SpectralWorkspace ws(g);
    Potential pot = cfg.potential();
    ViscositySpec visc = cfg.viscosity();
    StepConfig scfg = cfg.step_config();

    Field phi0 = make_scenario(g, cfg.scenario_params(), pot);
    if (cfg.prepare_k > 0.0) {
        if (pot.mode() != PotentialMode::log)
            throw ConfigError("scenario.prepare_k requires the logarithmic potential");
        phi0 = prepare_initial_data(ws, phi0, cfg.prepare_k, pot.spec(), scfg.newton, scfg.pcg)
                   .result_phi0;
    }

    std::ofstream csv(out_dir + "/diag.csv");
    csv << diag_csv_header() << "\n";

    RunOutput out;
    out.config = resolved;
    SimState s;
    s.phi = std::move(phi0);
    refresh_state(ws, s, pot, visc, scfg);
    auto record = [&](const SimState& state, int step_index) {
        DiagRecord r = diagnose(ws, state, pot, visc);
        csv << diag_csv_row(r) << "\n";
        out.records.push_back(r);
        if (cfg.snapshots) save_field(state.phi, out_dir + "/phi_" + std::to_string(step_index) + ".hdch");
    };
    record(s, 0);
    const int steps = cfg.steps();
    for (int it = 1; it <= steps; ++it) {
        s = step(ws, s, scfg, pot, visc);
        if (it % cfg.record_every == 0 || it == steps) record(s, it);
    }
    if (!csv) throw IoError("write failure on " + out_dir + "/diag.csv");
    out.final_state = std::move(s);
    return out;
}

} // namespace hdch
