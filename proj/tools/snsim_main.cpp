// Command-line front end: calibrate, verify, local, global-sweep,
// oscillating-sweep. Exit codes: 0 success, 2 validation or audit failure,
// 3 property-suite failure.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "snsim/experiment.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> paths;
    std::optional<std::string> out;
    std::optional<int> workers;
    bool inject_partition_fault = false;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool config_required) {
    auto* opt = cmd->add_option("--config", flags.config_path,
                                "experiment configuration (JSON)");
    if (config_required) opt->required();
    cmd->add_option("--seed", flags.seed, "override master_seed");
    cmd->add_option("--paths", flags.paths, "override n_paths");
    cmd->add_option("--out", flags.out, "override output_dir");
    cmd->add_option("--workers", flags.workers, "override worker count");
}

snsim::ExperimentConfig load_config(const CommonFlags& flags,
                                    snsim::ExperimentConfig::Kind kind) {
    snsim::ExperimentConfig cfg;
    if (!flags.config_path.empty())
        cfg = snsim::ExperimentConfig::from_file(flags.config_path);
    if (cfg.kind != kind && !flags.config_path.empty())
        throw snsim::ValidationError(
            std::string("config experiment kind '") + to_string(cfg.kind) +
            "' does not match the subcommand");
    cfg.kind = kind;
    if (flags.seed) cfg.master_seed = *flags.seed;
    if (flags.paths) cfg.n_paths = *flags.paths;
    if (flags.out) cfg.output_dir = *flags.out;
    if (flags.workers) cfg.workers = *flags.workers;
    return cfg;
}

snsim::CalibrationManifest load_manifest(const snsim::ExperimentConfig& cfg) {
    if (cfg.manifest_path.empty())
        throw snsim::ValidationError(
            "this experiment needs a calibration manifest: set the 'manifest' "
            "config key (run `snsim calibrate` first)");
    return snsim::CalibrationManifest::from_file(cfg.manifest_path);
}

int run_verify_command(const CommonFlags& flags) {
    snsim::ExperimentConfig cfg =
        load_config(flags, snsim::ExperimentConfig::Kind::verify);
    snsim::VerifyOptions opts;
    opts.corrupt_partition = flags.inject_partition_fault;
    const auto results = snsim::run_verify(cfg, opts);

    nlohmann::json suites = nlohmann::json::array();
    bool all_passed = true;
    for (const auto& r : results) {
        std::cout << (r.passed ? "[PASS] " : "[FAIL] ") << r.name;
        if (!r.details.empty()) std::cout << "  (" << r.details << ")";
        std::cout << "\n";
        all_passed = all_passed && r.passed;
        suites.push_back({{"name", r.name},
                          {"property", r.property},
                          {"passed", r.passed},
                          {"details", r.details}});
    }
    nlohmann::json verdict{{"passed", all_passed}, {"suites", suites}};
    std::filesystem::create_directories(cfg.output_dir);
    std::ofstream out(cfg.output_dir + "/verify.json");
    out << verdict.dump(2) << "\n";
    std::cout << (all_passed ? "verify: all suites passed"
                             : "verify: FAILURES present")
              << "\n";
    return all_passed ? 0 : 3;
}

void print_curve(const snsim::ExperimentReport& report) {
    for (const auto& row : report.curve)
        std::cout << "  " << report.curve_label << "=" << row.x
                  << "  survival=" << row.survival << "  [" << row.ci_low
                  << ", " << row.ci_high << "]  n=" << row.n_paths << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Pseudospectral simulation and property checks for the stochastic "
        "incompressible Navier-Stokes system with multiplicative noise"};
    app.require_subcommand(1);

    CommonFlags calibrate_flags, verify_flags, local_flags, global_flags,
        osc_flags;

    auto* calibrate =
        app.add_subcommand("calibrate",
                           "measure estimate constants, derive R/M/T-hat, "
                           "write the run manifest");
    add_common(calibrate, calibrate_flags, /*config_required=*/true);

    auto* verify = app.add_subcommand(
        "verify", "run every module property suite and write a verdict");
    add_common(verify, verify_flags, /*config_required=*/false);
    verify
        ->add_flag("--inject-partition-fault",
                   verify_flags.inject_partition_fault,
                   "negative control: corrupt the filter bank first")
        ->group("");  // hidden

    auto* local = app.add_subcommand(
        "local", "short-horizon survival ladder (local existence proxy)");
    add_common(local, local_flags, /*config_required=*/true);

    auto* global = app.add_subcommand(
        "global-sweep", "survival probability versus initial-data size");
    add_common(global, global_flags, /*config_required=*/true);

    auto* osc = app.add_subcommand(
        "oscillating-sweep",
        "norms and survival for the oscillating data family");
    add_common(osc, osc_flags, /*config_required=*/true);

    CLI11_PARSE(app, argc, argv);

    try {
        if (calibrate->parsed()) {
            auto cfg = load_config(calibrate_flags,
                                   snsim::ExperimentConfig::Kind::calibrate);
            const auto manifest = snsim::run_calibration(cfg);
            std::cout << "calibration written to " << cfg.output_dir
                      << "/manifest.json\n"
                      << "  C* = " << manifest.c_star
                      << "  R = " << manifest.constants.R
                      << "  M = " << manifest.constants.M
                      << "  T_hat = " << manifest.constants.T_hat << "\n"
                      << "  hash = " << manifest.hash << "\n";
            return 0;
        }
        if (verify->parsed()) return run_verify_command(verify_flags);
        if (local->parsed()) {
            auto cfg =
                load_config(local_flags, snsim::ExperimentConfig::Kind::local);
            const auto report = snsim::run_local(cfg, load_manifest(cfg));
            std::cout << "local survival ladder (" << cfg.output_dir << "):\n";
            print_curve(report);
            return 0;
        }
        if (global->parsed()) {
            auto cfg = load_config(global_flags,
                                   snsim::ExperimentConfig::Kind::global_sweep);
            const auto report = snsim::run_global_sweep(cfg, load_manifest(cfg));
            std::cout << "global sweep (" << cfg.output_dir << "):\n";
            print_curve(report);
            return 0;
        }
        if (osc->parsed()) {
            auto cfg = load_config(
                osc_flags, snsim::ExperimentConfig::Kind::oscillating_sweep);
            const auto report =
                snsim::run_oscillating_sweep(cfg, load_manifest(cfg));
            std::cout << "oscillating sweep (" << cfg.output_dir << "):\n";
            print_curve(report);
            return 0;
        }
    } catch (const snsim::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
