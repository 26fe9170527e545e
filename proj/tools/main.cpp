#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "floq/log.hpp"
#include "floq/scenario.hpp"
#include "floq/version.hpp"

namespace fs = std::filesystem;
using namespace floq;

namespace {

struct CommonOpts {
    std::string out;
    std::string format;  // empty = keep the config's choice
    int jobs = 1;
    long seed = 0;
    double tol = 0.0;  // 0 = keep default
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--out", opts.out, "Output file (or directory for sweeps); default stdout");
    cmd->add_option("--format", opts.format, "Output format: csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
    cmd->add_option("--jobs", opts.jobs, "Parallel workers for sweep points")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--seed", opts.seed, "Seed echoed into logs (the pipeline is deterministic)");
    cmd->add_option("--tol", opts.tol, "Propagator refinement tolerance (default 1e-10)");
}

void apply_common(ScenarioConfig& sc, const CommonOpts& opts) {
    if (!opts.format.empty())
        sc.format = opts.format == "json" ? OutputFormat::json : OutputFormat::csv;
    if (!opts.out.empty()) sc.out_path = opts.out;
    if (opts.tol != 0.0) {
        if (!(opts.tol > 0.0)) throw ConfigError("--tol must be positive");
        sc.propagate.tol = opts.tol;
    }
}

std::string sanitize_token(const std::string& text) {
    std::string out;
    for (const char c : text)
        out += (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '+')
                   ? c
                   : '_';
    return out;
}

void write_to(const std::string& path, const std::string& payload) {
    if (path.empty()) {
        std::cout << payload;
        std::cout.flush();
        return;
    }
    if (const fs::path parent = fs::path(path).parent_path(); !parent.empty())
        fs::create_directories(parent);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigError("cannot open output file '" + path + "'");
    os << payload;
}

std::string render_report(const ScenarioConfig& sc, const RunReport& report) {
    std::ostringstream os;
    if (sc.format == OutputFormat::json)
        write_json(sc, report, os);
    else
        write_csv(report, os);
    return os.str();
}

void print_failures(const RunReport& report) {
    for (const auto& ms : report.series)
        if (ms.failed)
            std::fprintf(stderr, "error: method %s failed: %s\n", method_name(ms.method),
                         ms.error.c_str());
}

int run_config(const ConfigFile& cfg, const CommonOpts& common) {
    ScenarioConfig base = scenario_from_config(cfg);
    apply_common(base, common);
    const auto sweep = sweep_from_config(cfg);

    if (!sweep) {
        const RunReport report = run_scenario(base);
        write_to(base.out_path, render_report(base, report));
        print_failures(report);
        return report.any_failed() ? 2 : 0;
    }

    // Sweep: one run per value, files named after the swept parameter.
    const std::size_t n = sweep->values.size();
    std::vector<ScenarioConfig> configs;
    configs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        ScenarioConfig sc = base;
        apply_parameter(sc, sweep->parameter, sweep->values[i]);
        const std::string ext = sc.format == OutputFormat::json ? ".json" : ".csv";
        const fs::path dir = base.out_path.empty() ? fs::path(".") : fs::path(base.out_path);
        sc.out_path = (dir / (base.name + "_" + sweep->parameter +
                              sanitize_token(sweep->value_texts[i]) + ext))
                          .string();
        configs.push_back(std::move(sc));
    }

    std::vector<std::optional<RunReport>> reports(n);
    std::vector<std::exception_ptr> errors(n);
    const int jobs = std::max(1, std::min<int>(common.jobs, int(n)));
    if (jobs == 1) {
        for (std::size_t i = 0; i < n; ++i) {
            try {
                reports[i] = run_scenario(configs[i]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(std::size_t(jobs));
        for (int w = 0; w < jobs; ++w)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) {
                    try {
                        reports[i] = run_scenario(configs[i]);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        for (auto& t : pool) t.join();
    }

    // Serialize results in sweep order so outputs are deterministic.
    bool partial = false;
    for (std::size_t i = 0; i < n; ++i) {
        if (errors[i]) std::rethrow_exception(errors[i]);
        write_to(configs[i].out_path, render_report(configs[i], *reports[i]));
        print_failures(*reports[i]);
        partial = partial || reports[i]->any_failed();
        std::fprintf(stderr, "wrote %s\n", configs[i].out_path.c_str());
    }
    return partial ? 2 : 0;
}

std::vector<double> parse_double_list(const std::string& text, const std::string& where) {
    std::vector<double> out;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) out.push_back(ConfigFile::parse_double(item, where));
    if (out.empty()) throw ConfigError(where + ": empty list");
    return out;
}

std::vector<int> parse_int_list(const std::string& text, const std::string& where) {
    std::vector<int> out;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) out.push_back(ConfigFile::parse_int(item, where));
    if (out.empty()) throw ConfigError(where + ": empty list");
    return out;
}

std::string executable_dir(const char* argv0) {
    std::error_code ec;
    fs::path p = fs::canonical(fs::path(argv0), ec);
    if (ec) return {};
    return p.parent_path().string();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Time-periodic Lindblad dynamics: effective generators, micromotion, and "
                 "reference trajectories"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    CommonOpts common;

    auto* cmd_run = app.add_subcommand("run", "Run a scenario config");
    std::string config_path;
    cmd_run->add_option("config", config_path, "Scenario config file")->required();
    add_common(cmd_run, common);

    auto* cmd_preset = app.add_subcommand("preset", "Run a bundled preset scenario");
    std::string preset_name;
    std::string presets_dir;
    cmd_preset->add_option("name", preset_name, "Preset name (fig1|fig2|fig3|fig4)")->required();
    cmd_preset->add_option("--presets-dir", presets_dir, "Directory to search first");
    add_common(cmd_preset, common);

    auto* cmd_scaling = app.add_subcommand(
        "scaling", "Micromotion amplitude vs drive frequency with a log-log slope fit");
    std::string scaling_config;
    std::string omegas_text = "4,8,16,32";
    int samples = 64;
    cmd_scaling->add_option("--config", scaling_config,
                            "Scenario config supplying the model parameters");
    cmd_scaling->add_option("--omegas", omegas_text, "Comma-separated frequencies");
    cmd_scaling->add_option("--samples", samples, "In-period sample count")
        ->check(CLI::PositiveNumber);
    add_common(cmd_scaling, common);

    auto* cmd_converge = app.add_subcommand(
        "converge", "Truncation sweep: residual and pairwise-difference table");
    std::string converge_config;
    std::string truncations_text = "1,2,4,6,8";
    cmd_converge->add_option("--config", converge_config,
                             "Scenario config supplying the model parameters");
    cmd_converge->add_option("--truncations", truncations_text,
                             "Comma-separated ascending truncation levels");
    add_common(cmd_converge, common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (common.seed != 0 && log::info_enabled())
            log::info("seed " + std::to_string(common.seed) + " (echo only)");

        if (cmd_run->parsed()) return run_config(ConfigFile::parse_file(config_path), common);

        if (cmd_preset->parsed()) {
            const std::string path =
                find_preset_file(preset_name, presets_dir, executable_dir(argv[0]));
            if (log::info_enabled()) log::info("preset resolved to " + path);
            return run_config(ConfigFile::parse_file(path), common);
        }

        if (cmd_scaling->parsed()) {
            ScenarioConfig base;
            if (!scaling_config.empty())
                base = scenario_from_config(ConfigFile::parse_file(scaling_config));
            apply_common(base, common);
            const auto omegas = parse_double_list(omegas_text, "--omegas");
            const ScalingStudy study = scaling_study(base, omegas, samples);
            std::ostringstream os;
            if (base.format == OutputFormat::json)
                write_scaling_json(study, os);
            else
                write_scaling_csv(study, os);
            write_to(common.out, os.str());
            return 0;
        }

        if (cmd_converge->parsed()) {
            ScenarioConfig base;
            if (!converge_config.empty())
                base = scenario_from_config(ConfigFile::parse_file(converge_config));
            apply_common(base, common);
            const auto levels = parse_int_list(truncations_text, "--truncations");
            const ConvergenceStudy study = convergence_study(base, levels);
            std::ostringstream os;
            if (base.format == OutputFormat::json)
                write_convergence_json(study, os);
            else
                write_convergence_csv(study, os);
            write_to(common.out, os.str());
            return 0;
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const NumericsError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
