#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "snsim/field_ops.hpp"
#include "snsim/solver.hpp"

namespace snsim {

/// Configuration or audit problems that should surface as exit code 2.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CalibrationSettings {
    int ensemble_size = 8;   // heat / bilinear estimate ensembles
    int conv_paths = 128;    // stochastic smoothing ratio paths
    int u0_samples = 64;     // sample mean of ||u0||^r
    int decay_samples = 4;   // per-shell decay fit ensemble
};

struct ExperimentConfig {
    enum class Kind { calibrate, verify, local, global_sweep, oscillating_sweep };

    Kind kind = Kind::verify;
    GridSpec grid;
    SolverConfig solver;
    NoiseModel noise;
    InitialDataSpec initial;
    int n_paths = 100;
    std::vector<double> delta_values;   // global sweep, decreasing
    bool delta_in_units_of_R = true;    // interpret deltas as multiples of R^r
    std::vector<double> horizon_ladder; // local experiment; empty -> T/2^k
    std::vector<double> epsilon_ladder; // oscillating sweep
    std::uint64_t master_seed = 1;
    std::string output_dir = "out";
    int workers = 1;
    std::string manifest_path;  // required for everything but calibrate/verify
    int audit_samples = 100;
    CalibrationSettings calibration;

    void validate() const;
    nlohmann::json to_json() const;
    /// Strict parse: unknown keys anywhere in the document are rejected.
    static ExperimentConfig from_json(const nlohmann::json& j);
    static ExperimentConfig from_file(const std::string& path);
};

const char* to_string(ExperimentConfig::Kind k);

struct EnsembleStat {
    int size = 0;
    std::uint64_t seed = 0;
    double c_hat = 0.0;
    double drift = 0.0;  // ratio change under step refinement
};

struct CalibrationManifest {
    GridSpec grid;
    BesovParams besov;
    EnsembleStat heat;
    EnsembleStat bilinear;
    EnsembleStat convolution;
    double safety_factor = 1.5;
    double c_star = 0.0;
    double mean_u0_norm_pow_r = 0.0;
    SolverConstants constants;
    NoiseModel noise;  // audited, envelopes frozen
    std::uint64_t master_seed = 0;
    std::string hash;

    nlohmann::json to_json() const;
    static CalibrationManifest from_json(const nlohmann::json& j);
    static CalibrationManifest from_file(const std::string& path);
};

/// Measures the estimate constants on seeded ensembles, gates their drift
/// under step refinement (factor 2), computes C*, R, M, T_hat, audits the
/// noise model, and writes manifest.json plus decay_fits.csv to output_dir.
CalibrationManifest run_calibration(const ExperimentConfig& config);

struct CurveRow {
    double x = 0.0;
    double survival = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    int n_paths = 0;
};

struct ExperimentReport {
    nlohmann::json summary;
    std::vector<nlohmann::json> path_records;
    std::vector<CurveRow> curve;
    std::string curve_label = "delta";
};

/// Short-horizon survival ladder: fraction of paths with no stopping-time hit
/// before each t0, evaluated as prefixes of one simulation per path.
ExperimentReport run_local(const ExperimentConfig& config,
                           const CalibrationManifest& manifest);

/// Survival probability versus initial-data size: for each delta the data are
/// rescaled so the sample mean of ||u0||^r equals delta, and survival counts
/// paths whose running L^r norm never reaches R (the binding stopping time).
ExperimentReport run_global_sweep(const ExperimentConfig& config,
                                  const CalibrationManifest& manifest);

/// Norm measurements and survival for the oscillating family over an epsilon
/// ladder; unresolvable epsilons are skipped with a record.
ExperimentReport run_oscillating_sweep(const ExperimentConfig& config,
                                       const CalibrationManifest& manifest);

struct SuiteResult {
    std::string name;
    std::string property;  // the mathematical statement being checked
    bool passed = false;
    std::string details;
};

struct VerifyOptions {
    bool corrupt_partition = false;  // negative-control hook
};

/// Runs every module property suite; failures are data, not exceptions.
std::vector<SuiteResult> run_verify(const ExperimentConfig& config,
                                    const VerifyOptions& opts = {});

/// Writes report.json, paths.jsonl and curve.csv under dir. The curve and
/// path files carry no timing data, so byte-identical reruns stay identical.
void write_report(const ExperimentReport& report, const std::string& dir);

/// Wilson 95% score interval for a binomial proportion.
std::pair<double, double> wilson_interval(int successes, int trials);

/// 64-bit FNV-1a fingerprint of a string, hex-encoded.
std::string fingerprint(const std::string& payload);

}  // namespace snsim
