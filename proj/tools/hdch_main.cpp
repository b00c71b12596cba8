// hdch: driver for simulation runs, property verification, continuous
// dependence experiments, parameter sweeps and static plots.
//
// Exit codes: 0 ok, 1 property failure, 2 usage/config error, 3 solver
// failure.

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "hdch/plot.hpp"
#include "hdch/runner.hpp"
#include "hdch/verify.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPropertyFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitSolverFailure = 3;

std::string output_dir_for(const hdch::RunConfig& cfg) {
    if (const char* env = std::getenv("HDCH_OUT")) return env;
    return cfg.out_dir;
}

std::vector<double> parse_amplitudes(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        char* end = nullptr;
        const double v = std::strtod(cell.c_str(), &end);
        if (end == cell.c_str() || *end != '\0')
            throw hdch::ConfigError("--amps: not a number: " + cell);
        out.push_back(v);
    }
    if (out.empty()) throw hdch::ConfigError("--amps: empty list");
    return out;
}

/// Runs fn(i) for i in [0, count) on up to jobs threads; exceptions from
/// workers are rethrown on the caller.
void parallel_for(int count, int jobs, const std::function<void(int)>& fn) {
    jobs = std::max(1, std::min(jobs, count));
    if (jobs == 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t)
        pool.emplace_back([&] {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                    return;
                }
            }
        });
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

int cmd_run(const std::string& config_path) {
    hdch::RunConfig cfg = hdch::load_config(config_path);
    const std::string out_dir = output_dir_for(cfg);
    hdch::RunOutput out = hdch::execute_run_to_dir(cfg, out_dir);
    std::printf("run: %zu records -> %s/diag.csv (final t=%.17g, mass=%.17g)\n", out.records.size(),
                out_dir.c_str(), out.records.back().t, out.records.back().mass);
    return kExitOk;
}

int cmd_verify(const std::string& suite) {
    std::vector<hdch::PropertyResult> results = hdch::verify_suite(suite);
    size_t failed = 0;
    for (const auto& r : results) {
        std::printf("%-38s %s%s%s\n", r.name.c_str(), r.pass ? "PASS" : "FAIL",
                    r.detail.empty() ? "" : "  ", r.detail.c_str());
        if (!r.pass) ++failed;
    }
    std::printf("%s: %zu/%zu properties passed\n", suite.c_str(), results.size() - failed,
                results.size());
    if (failed > 0) {
        std::fprintf(stderr, "failing properties:");
        for (const auto& r : results)
            if (!r.pass) std::fprintf(stderr, " %s", r.name.c_str());
        std::fprintf(stderr, "\n");
        return kExitPropertyFailure;
    }
    return kExitOk;
}

int cmd_compare(const std::string& config_path, const std::string& amps_csv, int jobs) {
    hdch::RunConfig cfg = hdch::load_config(config_path);
    const std::vector<double> amps = parse_amplitudes(amps_csv);
    const std::string out_dir = output_dir_for(cfg);
    std::filesystem::create_directories(out_dir);

    hdch::Grid g = cfg.grid();
    hdch::Potential pot = cfg.potential();
    hdch::Field base;
    {
        hdch::SpectralWorkspace ws(g);
        base = hdch::make_scenario(g, cfg.scenario_params(), pot);
    }
    // mean-free perturbation derived from the scenario seed
    hdch::Field pert = hdch::verify_detail::random_band_field(g, cfg.seed + 1, 4);
    pert *= 1.0 / hdch::linf_norm(pert);

    std::vector<hdch::DependenceRow> rows(amps.size());
    parallel_for(static_cast<int>(amps.size()), jobs, [&](int i) {
        hdch::SpectralWorkspace ws(g);
        auto r = hdch::continuous_dependence_experiment(ws, base, pert, {amps[static_cast<size_t>(i)]},
                                                        cfg.t_end, cfg.step_config(), pot,
                                                        cfg.viscosity());
        rows[static_cast<size_t>(i)] = r.front();
    });

    const std::string csv_path = out_dir + "/dependence.csv";
    std::ofstream csv(csv_path);
    csv << "a,R_v0dual,R_l2\n";
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", r.amplitude, r.r_v0_dual, r.r_l2);
        csv << buf;
    }
    if (!csv) throw hdch::IoError("cannot write " + csv_path);
    std::printf("compare: %zu amplitudes -> %s\n", rows.size(), csv_path.c_str());
    return kExitOk;
}

int cmd_sweep(const std::string& config_path, const std::string& param_spec, int jobs) {
    const size_t eq = param_spec.find('=');
    if (eq == std::string::npos)
        throw hdch::ConfigError("--param: expected key=v1,v2,...");
    const std::string key = param_spec.substr(0, eq);
    const size_t dot = key.find('.');
    if (dot == std::string::npos)
        throw hdch::ConfigError("--param: key must be section.field, e.g. viscosity.nu2");
    const std::string section = key.substr(0, dot), field = key.substr(dot + 1);

    std::vector<std::string> values;
    {
        std::stringstream ss(param_spec.substr(eq + 1));
        std::string cell;
        while (std::getline(ss, cell, ',')) values.push_back(cell);
    }
    if (values.empty()) throw hdch::ConfigError("--param: empty value list");

    hdch::RunConfig base = hdch::load_config(config_path);
    const std::string out_root = output_dir_for(base);

    // patch through the json form so every config field is sweepable
    std::vector<hdch::RunConfig> configs;
    for (const std::string& v : values) {
        nlohmann::json j = hdch::config_to_json(base);
        if (!j.contains(section) || !j[section].contains(field))
            throw hdch::ConfigError("--param: unknown config key " + key);
        nlohmann::json& slot = j[section][field];
        if (slot.is_string())
            slot = v;
        else if (slot.is_boolean())
            slot = (v == "true");
        else {
            char* end = nullptr;
            const double num = std::strtod(v.c_str(), &end);
            if (end == v.c_str() || *end != '\0')
                throw hdch::ConfigError("--param: not a number: " + v);
            if (slot.is_number_integer() || slot.is_number_unsigned())
                slot = static_cast<int64_t>(std::llround(num));
            else
                slot = num;
        }
        configs.push_back(hdch::config_from_json(j));
    }

    parallel_for(static_cast<int>(configs.size()), jobs, [&](int i) {
        const std::string dir = out_root + "/" + key + "=" + values[static_cast<size_t>(i)];
        hdch::execute_run_to_dir(configs[static_cast<size_t>(i)], dir);
    });
    std::printf("sweep: %zu runs of %s -> %s\n", configs.size(), key.c_str(), out_root.c_str());
    return kExitOk;
}

int cmd_plot(const std::string& input, std::string out_dir) {
    namespace fs = std::filesystem;
    if (out_dir.empty()) {
        out_dir = fs::path(input).parent_path().string();
        if (out_dir.empty()) out_dir = ".";
    }
    fs::create_directories(out_dir);
    const std::string stem = fs::path(input).stem().string();
    if (input.size() > 5 && input.substr(input.size() - 5) == ".hdch") {
        const std::string out = out_dir + "/" + stem + ".ppm";
        hdch::plot_snapshot_ppm(input, out);
        std::printf("plot: %s -> %s\n", input.c_str(), out.c_str());
    } else {
        const std::string out = out_dir + "/" + stem + "_energy.svg";
        hdch::plot_diag_csv(input, out);
        std::printf("plot: %s -> %s\n", input.c_str(), out.c_str());
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"hdch: 2D Hele-Shaw / Cahn-Hilliard solver and verification harness"};
    app.require_subcommand(1);
    int jobs = 1;
    app.add_option("--jobs", jobs, "parallel runs for sweep/compare")->check(CLI::PositiveNumber);

    std::string run_cfg;
    auto* run = app.add_subcommand("run", "execute one configured simulation");
    run->add_option("config", run_cfg, "config file (flat sections or run.json)")->required();

    std::string verify_name;
    auto* verify = app.add_subcommand("verify", "run a property suite");
    verify->add_option("suite", verify_name, "operators|potential|elliptic|darcy|scheme|theorems")
        ->required();

    std::string cmp_cfg, cmp_amps;
    auto* compare = app.add_subcommand("compare", "continuous-dependence experiment");
    compare->add_option("config", cmp_cfg, "base run config")->required();
    compare->add_option("--amps", cmp_amps, "comma-separated perturbation amplitudes")->required();

    std::string sweep_cfg, sweep_param;
    auto* sweep = app.add_subcommand("sweep", "one run per parameter value");
    sweep->add_option("config", sweep_cfg, "base run config")->required();
    sweep->add_option("--param", sweep_param, "key=v1,v2,... (e.g. viscosity.nu2=1,2,4)")->required();

    std::string plot_input, plot_out;
    auto* plot = app.add_subcommand("plot", "render diag.csv (SVG) or a snapshot (PPM)");
    plot->add_option("input", plot_input, "diag.csv or phi_<n>.hdch")->required();
    plot->add_option("-o,--out", plot_out, "output directory (default: alongside input)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*run) return cmd_run(run_cfg);
        if (*verify) return cmd_verify(verify_name);
        if (*compare) return cmd_compare(cmp_cfg, cmp_amps, jobs);
        if (*sweep) return cmd_sweep(sweep_cfg, sweep_param, jobs);
        if (*plot) return cmd_plot(plot_input, plot_out);
    } catch (const hdch::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitUsage;
    } catch (const hdch::InvalidParams& e) {
        std::fprintf(stderr, "invalid parameters: %s\n", e.what());
        return kExitUsage;
    } catch (const hdch::NoConvergence& e) {
        std::fprintf(stderr, "solver failure: %s (residual %.3e after %d iterations)\n", e.what(),
                     e.final_residual, e.iterations);
        return kExitSolverFailure;
    } catch (const hdch::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitSolverFailure;
    }
    return kExitUsage;
}
