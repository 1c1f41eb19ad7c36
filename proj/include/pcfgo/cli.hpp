// Command-line front end: run, sweep, validate-config, dump-measurements.
#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pcfgo/error.hpp"
#include "pcfgo/evaluation/pipeline.hpp"
#include "pcfgo/evaluation/sweep.hpp"
#include "pcfgo/io/config.hpp"
#include "pcfgo/io/output.hpp"

namespace pcfgo::cli {

enum ExitCode : int { kOk = 0, kRuntimeFailure = 1, kInvalid = 2 };

inline constexpr const char* kEpochFile = "epochs.csv";
inline constexpr const char* kSummaryFile = "summary.json";
inline constexpr const char* kSweepFile = "sweep.csv";
inline constexpr const char* kMeasurementFile = "measurements.jsonl";

struct Invocation {
    std::string subcommand;
    std::string config_path;
    std::optional<std::string> mode;
    std::optional<double> interruption_rate;
    std::optional<std::uint64_t> seed;
    std::string output_dir = "out";
    int jobs = 1;
};

namespace detail {

/// Config file with command-line overrides applied.
inline io::ExperimentConfig resolve(const Invocation& inv) {
    auto cfg = io::load_config(inv.config_path);
    if (inv.mode) cfg.mode = io::detail::parse_mode_at(*inv.mode, "--mode");
    if (inv.interruption_rate) cfg.scenario.interruption_rate = *inv.interruption_rate;
    if (inv.seed) cfg.scenario.seed = *inv.seed;
    cfg.scenario.validate();
    return cfg;
}

/// Opens `name` inside the output directory; names never contain separators.
inline std::ofstream open_output(const std::filesystem::path& dir, const char* name) {
    std::filesystem::create_directories(dir);
    std::ofstream os(dir / name, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + (dir / name).string());
    return os;
}

inline int execute(const Invocation& inv, std::ostream& out) {
    const auto cfg = resolve(inv);
    const std::filesystem::path dir(inv.output_dir);

    if (inv.subcommand == "validate-config") {
        out << "ok: " << inv.config_path << '\n';
        return kOk;
    }
    if (inv.subcommand == "run") {
        const auto report = eval::run_scenario(cfg.scenario, cfg.mode);
        {
            auto os = open_output(dir, kEpochFile);
            io::write_epoch_csv(os, report);
        }
        {
            auto os = open_output(dir, kSummaryFile);
            io::write_summary_json(os, report);
        }
        out << eval::to_string(report.mode) << ": h_rmse " << io::fmt(report.summary.h_rmse, 3) << " m, v_rmse "
            << io::fmt(report.summary.v_rmse, 3) << " m, cep95 " << io::fmt(report.summary.cep95, 3) << " m\n";
        return kOk;
    }
    if (inv.subcommand == "sweep") {
        if (!cfg.sweep) throw Error(ErrorCode::Config, inv.config_path + ": sweep section is required");
        const auto result = eval::interruption_sweep(cfg.scenario, cfg.sweep->rates, cfg.sweep->modes,
                                                     cfg.sweep->n_seeds, inv.jobs);
        auto os = open_output(dir, kSweepFile);
        io::write_sweep_csv(os, result);
        out << result.runs.size() << " runs, " << result.aggregates.size() << " median rows\n";
        return kOk;
    }
    if (inv.subcommand == "dump-measurements") {
        const sim::Simulator simulator(cfg.scenario);
        auto os = open_output(dir, kMeasurementFile);
        io::write_measurements(os, simulator);
        return kOk;
    }
    throw Error(ErrorCode::InvalidArgument, "unknown subcommand '" + inv.subcommand + "'");
}

}  // namespace detail

/// Parses argv and runs the selected subcommand. Returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Plane-constrained cooperative positioning experiments"};
    app.require_subcommand(1);
    Invocation inv;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", inv.config_path, "Experiment configuration (JSON)")->required();
        sub->add_option("--mode", inv.mode, "non-cp | mci | pc-aided | pc-aided-no-ir | pc-aided-no-fe");
        sub->add_option("--interruption-rate", inv.interruption_rate, "Range drop probability in [0, 1]");
        sub->add_option("--seed", inv.seed, "Replaces the configured seed");
        sub->add_option("--output", inv.output_dir, "Output directory")->capture_default_str();
        sub->add_option("--jobs", inv.jobs, "Parallel scenario runs for sweep")->check(CLI::PositiveNumber);
    };
    for (const char* name : {"run", "sweep", "validate-config", "dump-measurements"}) {
        auto* sub = app.add_subcommand(name);
        add_common(sub);
        sub->callback([&inv, name] { inv.subcommand = name; });
    }
    app.get_subcommand("run")->description("Run one scenario and write per-epoch and summary files");
    app.get_subcommand("sweep")->description("Run the configured interruption-rate sweep");
    app.get_subcommand("validate-config")->description("Parse and validate a configuration file");
    app.get_subcommand("dump-measurements")->description("Write the simulated measurement stream");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kInvalid;
    }

    try {
        return detail::execute(inv, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return e.code() == ErrorCode::Config || e.code() == ErrorCode::InvalidArgument ? kInvalid : kRuntimeFailure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kRuntimeFailure;
    }
}

}  // namespace pcfgo::cli
