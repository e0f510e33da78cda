#include "snsim/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include "snsim/rng.hpp"

namespace snsim {
namespace {

using nlohmann::json;

void require_keys(const json& j, std::initializer_list<const char*> allowed,
                  const std::string& where) {
    if (!j.is_object())
        throw ValidationError("config: expected an object at " + where);
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) {
                ok = true;
                break;
            }
        if (!ok)
            throw ValidationError("config: unknown key '" + key + "' in " + where);
    }
}

template <class T>
void read_into(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

/// Distributes path indices over a small thread pool; results must be stored
/// into index-addressed slots by the body so aggregation order is fixed.
void parallel_paths(int n, int workers, const std::function<void(int)>& body) {
    workers = std::max(1, std::min(workers, n));
    if (workers == 1) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                    return;
                }
            }
        });
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

json optional_time(const std::optional<double>& t) {
    if (t) return *t;
    return nullptr;
}

double elapsed_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
}

}  // namespace

const char* to_string(ExperimentConfig::Kind k) {
    switch (k) {
        case ExperimentConfig::Kind::calibrate: return "calibrate";
        case ExperimentConfig::Kind::verify: return "verify";
        case ExperimentConfig::Kind::local: return "local";
        case ExperimentConfig::Kind::global_sweep: return "global_sweep";
        case ExperimentConfig::Kind::oscillating_sweep: return "oscillating_sweep";
    }
    return "unknown";
}

void ExperimentConfig::validate() const {
    grid.validate();
    solver.besov.validate(grid.dimension, /*critical_mode=*/true);
    solver.tg.validate();
    noise.validate();
    if (n_paths < 1) throw ValidationError("config: n_paths must be >= 1");
    if (workers < 1) throw ValidationError("config: workers must be >= 1");
    if (kind == Kind::global_sweep) {
        if (delta_values.empty())
            throw ValidationError("config: global sweep needs delta_values");
        for (std::size_t i = 0; i + 1 < delta_values.size(); ++i)
            if (!(delta_values[i] > delta_values[i + 1]))
                throw ValidationError(
                    "config: delta_values must be strictly decreasing");
        if (delta_values.back() < 0.0)
            throw ValidationError("config: delta_values must be >= 0");
    }
    if (kind == Kind::oscillating_sweep && grid.dimension != 3)
        throw ValidationError("config: oscillating sweep requires dimension 3");
}

json ExperimentConfig::to_json() const {
    json solver_json{{"p", solver.besov.p},
                     {"r", solver.besov.r},
                     {"n_cutoff", solver.N_cutoff},
                     {"picard_tol", solver.picard_tol},
                     {"picard_max_iter", solver.picard_max_iter},
                     {"t_end", solver.tg.t_end},
                     {"n_steps", solver.tg.n_steps}};
    if (solver.C_star > 0.0) solver_json["c_star"] = solver.C_star;
    if (solver.R > 0.0) solver_json["R"] = solver.R;
    const char* kind_names[] = {"gaussian_divfree", "oscillating", "file"};
    return json{
        {"experiment", to_string(kind)},
        {"grid",
         {{"dimension", grid.dimension},
          {"points_per_axis", grid.points_per_axis},
          {"box_length", grid.box_length}}},
        {"solver", solver_json},
        {"noise", noise.to_json()},
        {"initial",
         {{"kind", kind_names[static_cast<int>(initial.kind)]},
          {"amplitude", initial.amplitude},
          {"epsilon", initial.epsilon},
          {"p_exponent", initial.p_exponent},
          {"profile_width", initial.profile_width},
          {"seed", initial.seed},
          {"path", initial.path}}},
        {"n_paths", n_paths},
        {"delta_values", delta_values},
        {"delta_in_units_of_R", delta_in_units_of_R},
        {"horizon_ladder", horizon_ladder},
        {"epsilon_ladder", epsilon_ladder},
        {"master_seed", master_seed},
        {"output_dir", output_dir},
        {"workers", workers},
        {"manifest", manifest_path},
        {"audit_samples", audit_samples},
        {"calibration",
         {{"ensemble_size", calibration.ensemble_size},
          {"conv_paths", calibration.conv_paths},
          {"u0_samples", calibration.u0_samples},
          {"decay_samples", calibration.decay_samples}}}};
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    require_keys(j,
                 {"experiment", "grid", "solver", "noise", "initial", "n_paths",
                  "delta_values", "delta_in_units_of_R", "horizon_ladder",
                  "epsilon_ladder", "master_seed", "output_dir", "workers",
                  "manifest", "audit_samples", "calibration"},
                 "top level");
    ExperimentConfig cfg;

    const auto kind_str = j.at("experiment").get<std::string>();
    if (kind_str == "calibrate") cfg.kind = Kind::calibrate;
    else if (kind_str == "verify") cfg.kind = Kind::verify;
    else if (kind_str == "local") cfg.kind = Kind::local;
    else if (kind_str == "global_sweep") cfg.kind = Kind::global_sweep;
    else if (kind_str == "oscillating_sweep") cfg.kind = Kind::oscillating_sweep;
    else throw ValidationError("config: unknown experiment '" + kind_str + "'");

    const auto& g = j.at("grid");
    require_keys(g, {"dimension", "points_per_axis", "box_length"}, "grid");
    read_into(g, "dimension", cfg.grid.dimension);
    read_into(g, "points_per_axis", cfg.grid.points_per_axis);
    read_into(g, "box_length", cfg.grid.box_length);

    if (j.contains("solver")) {
        const auto& s = j.at("solver");
        require_keys(s,
                     {"p", "r", "n_cutoff", "c_star", "R", "picard_tol",
                      "picard_max_iter", "t_end", "n_steps"},
                     "solver");
        read_into(s, "p", cfg.solver.besov.p);
        read_into(s, "r", cfg.solver.besov.r);
        read_into(s, "n_cutoff", cfg.solver.N_cutoff);
        read_into(s, "c_star", cfg.solver.C_star);
        read_into(s, "R", cfg.solver.R);
        read_into(s, "picard_tol", cfg.solver.picard_tol);
        read_into(s, "picard_max_iter", cfg.solver.picard_max_iter);
        read_into(s, "t_end", cfg.solver.tg.t_end);
        read_into(s, "n_steps", cfg.solver.tg.n_steps);
    }
    cfg.solver.besov.s = cfg.grid.dimension / cfg.solver.besov.p - 1.0;

    if (j.contains("noise")) {
        require_keys(j.at("noise"),
                     {"mode_count", "structure", "couplings", "mode_shapes",
                      "eta_bound", "beta1_const", "beta2_bound", "gamma_bound",
                      "audit"},
                     "noise");
        cfg.noise = NoiseModel::from_json(j.at("noise"));
    }

    if (j.contains("initial")) {
        const auto& init = j.at("initial");
        require_keys(init,
                     {"kind", "amplitude", "epsilon", "p_exponent",
                      "profile_width", "seed", "path"},
                     "initial");
        if (init.contains("kind")) {
            const auto k = init.at("kind").get<std::string>();
            if (k == "gaussian_divfree")
                cfg.initial.kind = InitialDataSpec::Kind::gaussian_divfree;
            else if (k == "oscillating")
                cfg.initial.kind = InitialDataSpec::Kind::oscillating;
            else if (k == "file")
                cfg.initial.kind = InitialDataSpec::Kind::file;
            else
                throw ValidationError("config: unknown initial kind '" + k + "'");
        }
        read_into(init, "amplitude", cfg.initial.amplitude);
        read_into(init, "epsilon", cfg.initial.epsilon);
        read_into(init, "p_exponent", cfg.initial.p_exponent);
        read_into(init, "profile_width", cfg.initial.profile_width);
        read_into(init, "seed", cfg.initial.seed);
        read_into(init, "path", cfg.initial.path);
    }

    read_into(j, "n_paths", cfg.n_paths);
    read_into(j, "delta_values", cfg.delta_values);
    read_into(j, "delta_in_units_of_R", cfg.delta_in_units_of_R);
    read_into(j, "horizon_ladder", cfg.horizon_ladder);
    read_into(j, "epsilon_ladder", cfg.epsilon_ladder);
    read_into(j, "master_seed", cfg.master_seed);
    read_into(j, "output_dir", cfg.output_dir);
    read_into(j, "workers", cfg.workers);
    read_into(j, "manifest", cfg.manifest_path);
    read_into(j, "audit_samples", cfg.audit_samples);
    if (j.contains("calibration")) {
        const auto& c = j.at("calibration");
        require_keys(c, {"ensemble_size", "conv_paths", "u0_samples",
                         "decay_samples"},
                     "calibration");
        read_into(c, "ensemble_size", cfg.calibration.ensemble_size);
        read_into(c, "conv_paths", cfg.calibration.conv_paths);
        read_into(c, "u0_samples", cfg.calibration.u0_samples);
        read_into(c, "decay_samples", cfg.calibration.decay_samples);
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("config: cannot open " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("config: parse error: ") + e.what());
    }
    return from_json(j);
}

json CalibrationManifest::to_json() const {
    auto stat = [](const EnsembleStat& e) {
        return json{{"size", e.size},
                    {"seed", e.seed},
                    {"c_hat", e.c_hat},
                    {"drift", e.drift}};
    };
    json j{{"grid",
            {{"dimension", grid.dimension},
             {"points_per_axis", grid.points_per_axis},
             {"box_length", grid.box_length}}},
           {"besov", {{"s", besov.s}, {"p", besov.p}, {"r", besov.r}}},
           {"ensembles",
            {{"heat", stat(heat)},
             {"bilinear", stat(bilinear)},
             {"convolution", stat(convolution)}}},
           {"safety_factor", safety_factor},
           {"c_star", c_star},
           {"mean_u0_norm_pow_r", mean_u0_norm_pow_r},
           {"R", constants.R},
           {"M", constants.M},
           {"T_hat", constants.T_hat},
           {"noise", noise.to_json()},
           {"master_seed", master_seed}};
    j["hash"] = hash.empty() ? fingerprint(j.dump()) : hash;
    return j;
}

CalibrationManifest CalibrationManifest::from_json(const json& j) {
    CalibrationManifest m;
    const auto& g = j.at("grid");
    m.grid = GridSpec{g.at("dimension").get<int>(),
                      g.at("points_per_axis").get<int>(),
                      g.at("box_length").get<double>()};
    m.besov.s = j.at("besov").at("s").get<double>();
    m.besov.p = j.at("besov").at("p").get<double>();
    m.besov.r = j.at("besov").at("r").get<double>();
    auto stat = [](const json& e) {
        EnsembleStat s;
        s.size = e.at("size").get<int>();
        s.seed = e.at("seed").get<std::uint64_t>();
        s.c_hat = e.at("c_hat").get<double>();
        s.drift = e.at("drift").get<double>();
        return s;
    };
    m.heat = stat(j.at("ensembles").at("heat"));
    m.bilinear = stat(j.at("ensembles").at("bilinear"));
    m.convolution = stat(j.at("ensembles").at("convolution"));
    m.safety_factor = j.at("safety_factor").get<double>();
    m.c_star = j.at("c_star").get<double>();
    m.mean_u0_norm_pow_r = j.at("mean_u0_norm_pow_r").get<double>();
    m.constants.R = j.at("R").get<double>();
    m.constants.M = j.at("M").get<double>();
    m.constants.T_hat = j.at("T_hat").get<double>();
    m.noise = NoiseModel::from_json(j.at("noise"));
    m.master_seed = j.at("master_seed").get<std::uint64_t>();
    m.hash = j.at("hash").get<std::string>();
    return m;
}

CalibrationManifest CalibrationManifest::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("manifest: cannot open " + path);
    return from_json(json::parse(in));
}

std::pair<double, double> wilson_interval(int successes, int trials) {
    if (trials <= 0) return {0.0, 1.0};
    const double z = 1.959963984540054;
    const double n = trials;
    const double phat = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (phat + z2 / (2.0 * n)) / denom;
    const double half =
        z * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n)) / denom;
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

std::string fingerprint(const std::string& payload) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(payload)));
    return buf;
}

namespace {

// Random forcing trajectory for the smoothing-estimate ensembles: two fixed
// random divergence-free fields under slow trigonometric modulation.
Trajectory modulated_trajectory(const GridSpec& grid, const TimeGrid& tg,
                                std::uint64_t seed) {
    CounterRng rng(seed, "modulation");
    const double omega1 = 8.0 * rng.uniform();
    const double omega2 = 8.0 * rng.uniform();
    const double kc = grid.freq_unit() *
                      std::pow(2.0, 1.0 + 2.0 * rng.uniform());
    SpectralField g1 =
        random_divfree_field(grid, derive_seed(seed, "mod-a", 0), 1.0, kc);
    SpectralField g2 =
        random_divfree_field(grid, derive_seed(seed, "mod-b", 0), 1.0, kc);
    Trajectory out;
    out.tg = tg;
    out.nodes.reserve(static_cast<std::size_t>(tg.node_count()));
    for (int m = 0; m <= tg.n_steps; ++m) {
        SpectralField f = g1;
        f *= std::cos(omega1 * tg.time(m));
        f.add_scaled(g2, std::sin(omega2 * tg.time(m)));
        out.nodes.push_back(std::move(f));
    }
    return out;
}

double drift_factor(double a, double b) {
    if (a <= 0.0 || b <= 0.0) return std::numeric_limits<double>::infinity();
    return std::max(a / b, b / a);
}

struct HeatEnsembleResult {
    double c_hat = 0.0;
};

// Max smoothing ratio S(u)^r / (||u0||^r + ||f||^r) for the heat response.
double heat_smoothing_ratio(const GridSpec& grid, const DyadicPartition& P,
                            const BesovParams& besov, const TimeGrid& tg,
                            int ensemble, std::uint64_t seed) {
    const double r = besov.r;
    const BesovParams forcing_params =
        besov.with_s(besov.s - 2.0 + 2.0 / r).with_q(r);
    double worst = 0.0;
    for (int i = 0; i < ensemble; ++i) {
        const std::uint64_t member =
            derive_seed(seed, "heat-ens", static_cast<std::uint64_t>(i));
        CounterRng rng(member, "heat-mix");
        const double kc =
            grid.freq_unit() * std::pow(2.0, 1.0 + 2.0 * rng.uniform());
        SpectralField u0 =
            random_divfree_field(grid, derive_seed(member, "u0", 0), 1.0, kc);
        Trajectory f = modulated_trajectory(grid, tg, derive_seed(member, "f", 0));
        const double f_scale = std::pow(10.0, 2.0 * rng.uniform() - 1.0);
        for (auto& node : f.nodes) node *= f_scale;
        Trajectory u = duhamel_solve_nodes(u0, f.span(), tg);
        const double numer = s_norm_pow_r(u, besov, P);
        const double denom =
            std::pow(besov_norm(u0, besov, P), r) +
            std::pow(chemin_lerner_norm(f.span(), tg.dt(), forcing_params, P), r);
        if (denom > 0.0) worst = std::max(worst, numer / denom);
    }
    return worst;
}

// Max S(B(a,b))^r over trajectory pairs normalized in the L^r higher norm.
double bilinear_ratio(const GridSpec& grid, const DyadicPartition& P,
                      const BesovParams& besov, const TimeGrid& tg,
                      int ensemble, std::uint64_t seed) {
    const double r = besov.r;
    const BesovParams higher = besov.with_s(besov.s + 2.0 / r).with_q(r);
    double worst = 0.0;
    for (int i = 0; i < ensemble; ++i) {
        const std::uint64_t member =
            derive_seed(seed, "bilinear-ens", static_cast<std::uint64_t>(i));
        Trajectory a = modulated_trajectory(grid, tg, derive_seed(member, "a", 0));
        Trajectory b = modulated_trajectory(grid, tg, derive_seed(member, "b", 0));
        for (Trajectory* traj : {&a, &b}) {
            const double norm =
                chemin_lerner_norm(traj->span(), tg.dt(), higher, P);
            if (norm <= 0.0) continue;
            for (auto& node : traj->nodes) node *= 1.0 / norm;
        }
        Trajectory Bab = bilinear_B(a, b);
        worst = std::max(worst, s_norm_pow_r(Bab, besov, P));
    }
    return worst;
}

}  // namespace

CalibrationManifest run_calibration(const ExperimentConfig& config) {
    config.validate();
    const GridSpec& grid = config.grid;
    const DyadicPartition P = build_partition(grid);
    const BesovParams besov = config.solver.besov;
    const std::uint64_t master = config.master_seed;

    CalibrationManifest man;
    man.grid = grid;
    man.besov = besov;
    man.master_seed = master;
    man.noise = config.noise;
    man.noise.prepare(grid);
    const auto audit = audit_noise_model(man.noise, grid, P, besov,
                                         config.audit_samples,
                                         derive_seed(master, "audit", 0));
    if (!audit.passed)
        throw ValidationError(
            "calibration: noise model failed its growth-condition audit");

    // Estimate ensembles at a coarse step count, re-measured refined; a ratio
    // drifting by more than a factor 2 fails calibration.
    const int base_steps = std::min(config.solver.tg.n_steps, 32);
    const TimeGrid coarse{config.solver.tg.t_end, base_steps};
    const TimeGrid fine{config.solver.tg.t_end, 2 * base_steps};
    const int ens = config.calibration.ensemble_size;

    man.heat.size = ens;
    man.heat.seed = derive_seed(master, "calib-heat", 0);
    {
        const double c1 =
            heat_smoothing_ratio(grid, P, besov, coarse, ens, man.heat.seed);
        const double c2 =
            heat_smoothing_ratio(grid, P, besov, fine, ens, man.heat.seed);
        man.heat.c_hat = std::max(c1, c2);
        man.heat.drift = drift_factor(c1, c2);
    }

    man.bilinear.size = ens;
    man.bilinear.seed = derive_seed(master, "calib-bilinear", 0);
    {
        const double c1 =
            bilinear_ratio(grid, P, besov, coarse, ens, man.bilinear.seed);
        const double c2 =
            bilinear_ratio(grid, P, besov, fine, ens, man.bilinear.seed);
        man.bilinear.c_hat = std::max(c1, c2);
        man.bilinear.drift = drift_factor(c1, c2);
    }

    man.convolution.size = config.calibration.conv_paths;
    man.convolution.seed = derive_seed(master, "calib-conv", 0);
    {
        SpectralField base = random_divfree_field(
            grid, derive_seed(master, "calib-conv-u", 0), 1.0,
            4.0 * grid.freq_unit());
        auto frozen = [&](const TimeGrid& tg) {
            Trajectory u;
            u.tg = tg;
            u.nodes.reserve(static_cast<std::size_t>(tg.node_count()));
            for (int m = 0; m <= tg.n_steps; ++m)
                u.nodes.push_back(heat_semigroup(base, tg.time(m)));
            return u;
        };
        const BesovParams shifted = besov.with_s(besov.s + 2.0 / besov.r);
        const auto r1 = conv_regularity_ratio(
            man.noise, frozen(coarse), config.calibration.conv_paths,
            man.convolution.seed, P, shifted);
        const auto r2 = conv_regularity_ratio(
            man.noise, frozen(fine), config.calibration.conv_paths,
            man.convolution.seed, P, shifted);
        man.convolution.c_hat = std::max(r1.ratio, r2.ratio);
        man.convolution.drift = drift_factor(r1.ratio, r2.ratio);
    }

    for (const auto* stat : {&man.heat, &man.bilinear, &man.convolution})
        if (!(stat->drift <= 2.0)) {
            std::ostringstream msg;
            msg << "calibration: estimate ratio unstable under refinement "
                << "(heat " << man.heat.drift << ", bilinear "
                << man.bilinear.drift << ", convolution "
                << man.convolution.drift << ")";
            throw ValidationError(msg.str());
        }

    man.c_star = man.safety_factor * std::max({man.heat.c_hat,
                                               man.bilinear.c_hat,
                                               man.convolution.c_hat});

    // Sample mean of ||u0||^r for the configured initial data.
    double mean = 0.0;
    for (int i = 0; i < config.calibration.u0_samples; ++i) {
        InitialDataSpec spec = config.initial;
        spec.seed = derive_seed(master, "u0-mean", static_cast<std::uint64_t>(i));
        const SpectralField u0 = make_initial_data(spec, grid);
        mean += std::pow(besov_norm(u0, besov, P), besov.r);
    }
    mean /= config.calibration.u0_samples;
    man.mean_u0_norm_pow_r = mean;

    SolverConfig solved = config.solver;
    solved.C_star = man.c_star;
    man.constants = solver_constants(solved, mean, man.noise);
    man.hash = fingerprint(man.to_json().dump());

    std::filesystem::create_directories(config.output_dir);
    {
        std::ofstream out(config.output_dir + "/manifest.json");
        out << man.to_json().dump(2) << "\n";
    }
    {
        // Per-shell heat-decay fits for the middle shells.
        std::ofstream out(config.output_dir + "/decay_fits.csv");
        out << "shell,fitted_C,fitted_c,ensemble_size,seed\n";
        const int j_lo = P.j_min + 2;
        for (int j = j_lo; j < j_lo + 3 && j <= P.j_max; ++j) {
            const auto fit =
                annulus_decay_check(j, P, 2.0, config.calibration.decay_samples,
                                    derive_seed(master, "decay", 0));
            out << fit.shell << ',' << format_double(fit.envelope_constant)
                << ',' << format_double(fit.rate) << ',' << fit.sample_count
                << ',' << fit.seed << "\n";
        }
    }
    return man;
}

namespace {

SolverConfig build_solver(const ExperimentConfig& config,
                          const CalibrationManifest& manifest) {
    SolverConfig solver = config.solver;
    if (solver.C_star <= 0.0) solver.C_star = manifest.c_star;
    solver.validate(config.grid.dimension, manifest.noise);
    return solver;
}

json path_record(int id, std::uint64_t seed, double delta_or_nan,
                 const StoppingRecord& rec, const PathTrajectory& traj,
                 int picard_iters, std::optional<double> max_ratio) {
    json rec_json{
        {"path_id", id},
        {"seed", seed},
        {"status", to_string(rec.status)},
        {"sigma_hit", optional_time(rec.sigma_hit)},
        {"rho_N_hit", optional_time(rec.rho_N_hit)},
        {"tau_N", optional_time(rec.tau_N)},
        {"final_norms",
         {{"critical", traj.series.norm_critical.empty()
                           ? 0.0
                           : traj.series.norm_critical.back()},
          {"higher", traj.series.norm_higher.empty()
                         ? 0.0
                         : traj.series.norm_higher.back()},
          {"l2", traj.final_field.empty() ? 0.0 : traj.final_field.l2_norm()}}},
        {"picard_iters", picard_iters},
        {"max_ratio", max_ratio ? json(*max_ratio) : json(nullptr)}};
    if (!std::isnan(delta_or_nan)) rec_json["delta"] = delta_or_nan;
    return rec_json;
}

}  // namespace

ExperimentReport run_local(const ExperimentConfig& config,
                           const CalibrationManifest& manifest) {
    const auto t_start = std::chrono::steady_clock::now();
    config.validate();
    const GridSpec& grid = config.grid;
    const DyadicPartition P = build_partition(grid);
    SolverConfig solver = build_solver(config, manifest);
    NoiseModel noise = manifest.noise;
    noise.prepare(grid);
    noise.require_audited();

    std::vector<double> ladder = config.horizon_ladder;
    if (ladder.empty()) {
        double t0 = solver.tg.t_end;
        for (int i = 0; i < 4; ++i, t0 *= 0.5) ladder.push_back(t0);
    }

    const int n = config.n_paths;
    std::vector<StoppingRecord> records(static_cast<std::size_t>(n));
    std::vector<json> lines(static_cast<std::size_t>(n));
    parallel_paths(n, config.workers, [&](int i) {
        InitialDataSpec spec = config.initial;
        spec.seed = derive_seed(config.master_seed, "init",
                                static_cast<std::uint64_t>(i));
        const SpectralField u0 = make_initial_data(spec, grid);
        const std::uint64_t wseed = derive_seed(config.master_seed, "wiener",
                                                static_cast<std::uint64_t>(i));
        const WienerPath path = sample_wiener(wseed, solver.tg, noise.mode_count);
        auto [traj, rec] = time_step_path(u0, noise, path, solver, P);
        records[static_cast<std::size_t>(i)] = rec;
        lines[static_cast<std::size_t>(i)] = path_record(
            i, wseed, std::numeric_limits<double>::quiet_NaN(), rec, traj, 0,
            std::nullopt);
    });

    ExperimentReport report;
    report.curve_label = "t0";
    for (double t0 : ladder) {
        int alive = 0;
        for (const auto& rec : records) {
            const bool dead = rec.status == PathStatus::numerical_blowup ||
                              (rec.tau_N && *rec.tau_N < t0 * (1.0 - 1e-12));
            if (!dead) ++alive;
        }
        const auto [lo, hi] = wilson_interval(alive, n);
        report.curve.push_back(
            {t0, static_cast<double>(alive) / n, lo, hi, n});
    }
    report.path_records = std::move(lines);
    report.summary = json{{"experiment", "local"},
                          {"n_paths", n},
                          {"horizon_ladder", ladder},
                          {"manifest_hash", manifest.hash},
                          {"master_seed", config.master_seed},
                          {"elapsed_seconds", elapsed_since(t_start)}};
    write_report(report, config.output_dir);
    return report;
}

ExperimentReport run_global_sweep(const ExperimentConfig& config,
                                  const CalibrationManifest& manifest) {
    const auto t_start = std::chrono::steady_clock::now();
    config.validate();
    const GridSpec& grid = config.grid;
    const DyadicPartition P = build_partition(grid);
    SolverConfig solver = build_solver(config, manifest);
    NoiseModel noise = manifest.noise;
    noise.prepare(grid);
    noise.require_audited();

    if (!noise.beta1_power_law())
        throw ValidationError(
            "global sweep requires a noise model whose growth envelope has "
            "the power-law form beta1(t, x) = eta(t) x^r; the configured "
            "model does not declare that structure");
    const double eta_l1 = noise.eta_bound * solver.tg.t_end;
    if (!(eta_l1 < 1.0 / solver.C_star))
        throw ValidationError(
            "global sweep requires eta small: the audited eta * horizon must "
            "stay below 1/C*");

    const double r = solver.besov.r;
    const double R = solver.effective_R();
    ExperimentReport report;
    report.curve_label = "delta";

    int batch_index = 0;
    for (double delta_raw : config.delta_values) {
        const double delta =
            config.delta_in_units_of_R ? delta_raw * std::pow(R, r) : delta_raw;
        const int n = config.n_paths;
        const int base = batch_index * n;

        // Batch norms first, then the scale targeting the sample mean.
        std::vector<double> norm_pow_r(static_cast<std::size_t>(n));
        parallel_paths(n, config.workers, [&](int i) {
            InitialDataSpec spec = config.initial;
            spec.seed = derive_seed(config.master_seed, "u0",
                                    static_cast<std::uint64_t>(base + i));
            const SpectralField u0 = make_initial_data(spec, grid);
            norm_pow_r[static_cast<std::size_t>(i)] =
                std::pow(besov_norm(u0, solver.besov, P), r);
        });
        double mean = 0.0;
        for (double v : norm_pow_r) mean += v;
        mean /= n;
        const double scale =
            (delta <= 0.0 || mean <= 0.0) ? 0.0 : std::pow(delta / mean, 1.0 / r);

        std::vector<StoppingRecord> records(static_cast<std::size_t>(n));
        std::vector<json> lines(static_cast<std::size_t>(n));
        parallel_paths(n, config.workers, [&](int i) {
            InitialDataSpec spec = config.initial;
            spec.seed = derive_seed(config.master_seed, "u0",
                                    static_cast<std::uint64_t>(base + i));
            SpectralField u0 = make_initial_data(spec, grid);
            u0 *= scale;
            const std::uint64_t wseed =
                derive_seed(config.master_seed, "wiener",
                            static_cast<std::uint64_t>(base + i));
            const WienerPath path =
                sample_wiener(wseed, solver.tg, noise.mode_count);
            auto [traj, rec] = time_step_path(u0, noise, path, solver, P);
            records[static_cast<std::size_t>(i)] = rec;
            lines[static_cast<std::size_t>(i)] =
                path_record(base + i, wseed, delta, rec, traj, 0, std::nullopt);
        });

        // Lemma-5.1 direction: the running-norm threshold is the binding
        // stopping time, so survival counts paths with no sigma hit.
        int alive = 0;
        for (const auto& rec : records)
            if (!rec.sigma_hit && rec.status != PathStatus::numerical_blowup)
                ++alive;
        const auto [lo, hi] = wilson_interval(alive, n);
        report.curve.push_back({delta, static_cast<double>(alive) / n, lo, hi, n});
        for (auto& line : lines) report.path_records.push_back(std::move(line));
        ++batch_index;
    }

    report.summary = json{{"experiment", "global_sweep"},
                          {"n_paths", config.n_paths},
                          {"R", R},
                          {"manifest_hash", manifest.hash},
                          {"master_seed", config.master_seed},
                          {"elapsed_seconds", elapsed_since(t_start)}};
    write_report(report, config.output_dir);
    return report;
}

ExperimentReport run_oscillating_sweep(const ExperimentConfig& config,
                                       const CalibrationManifest& manifest) {
    const auto t_start = std::chrono::steady_clock::now();
    config.validate();
    if (config.grid.dimension != 3)
        throw ValidationError("oscillating sweep requires dimension 3");
    const GridSpec& grid = config.grid;
    const DyadicPartition P = build_partition(grid);
    SolverConfig solver = build_solver(config, manifest);
    NoiseModel noise = manifest.noise;
    noise.prepare(grid);
    noise.require_audited();

    std::vector<double> ladder = config.epsilon_ladder;
    if (ladder.empty()) ladder = {0.25, 0.125, 0.0625};

    ExperimentReport report;
    report.curve_label = "epsilon";
    json norm_table = json::array();
    int batch_index = 0;
    for (double eps : ladder) {
        InitialDataSpec spec = config.initial;
        spec.kind = InitialDataSpec::Kind::oscillating;
        spec.epsilon = eps;
        InitialDataInfo info;
        SpectralField u0(grid, 3);
        try {
            u0 = make_initial_data(spec, grid, &info);
        } catch (const std::invalid_argument& e) {
            norm_table.push_back(
                {{"epsilon", eps}, {"skipped", true}, {"reason", e.what()}});
            ++batch_index;
            continue;
        }
        const double crit = besov_norm(u0, solver.besov, P);
        const double linf = u0.linf_norm();
        const double l2 = u0.l2_norm();
        const double div_rel =
            divergence(u0).l2_norm() / std::max(1e-300, u0.l2_norm());
        norm_table.push_back({{"epsilon", eps},
                              {"epsilon_effective", info.epsilon_effective},
                              {"oscillation_mode", info.oscillation_mode},
                              {"critical_besov", crit},
                              {"linf", linf},
                              {"l2", l2},
                              {"divergence_rel", div_rel},
                              {"skipped", false}});

        const int n = config.n_paths;
        const int base = batch_index * n;
        std::vector<StoppingRecord> records(static_cast<std::size_t>(n));
        std::vector<json> lines(static_cast<std::size_t>(n));
        parallel_paths(n, config.workers, [&](int i) {
            const std::uint64_t wseed =
                derive_seed(config.master_seed, "wiener",
                            static_cast<std::uint64_t>(base + i));
            const WienerPath path =
                sample_wiener(wseed, solver.tg, noise.mode_count);
            auto [traj, rec] = time_step_path(u0, noise, path, solver, P);
            records[static_cast<std::size_t>(i)] = rec;
            lines[static_cast<std::size_t>(i)] =
                path_record(base + i, wseed, eps, rec, traj, 0, std::nullopt);
        });
        int alive = 0;
        for (const auto& rec : records)
            if (!rec.tau_N && rec.status != PathStatus::numerical_blowup)
                ++alive;
        const auto [lo, hi] = wilson_interval(alive, n);
        report.curve.push_back({eps, static_cast<double>(alive) / n, lo, hi, n});
        for (auto& line : lines) report.path_records.push_back(std::move(line));
        ++batch_index;
    }

    report.summary = json{{"experiment", "oscillating_sweep"},
                          {"norms", norm_table},
                          {"manifest_hash", manifest.hash},
                          {"master_seed", config.master_seed},
                          {"elapsed_seconds", elapsed_since(t_start)}};
    write_report(report, config.output_dir);
    return report;
}

void write_report(const ExperimentReport& report, const std::string& dir) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir + "/report.json");
        out << report.summary.dump(2) << "\n";
    }
    {
        std::ofstream out(dir + "/paths.jsonl");
        for (const auto& line : report.path_records) out << line.dump() << "\n";
    }
    {
        std::ofstream out(dir + "/curve.csv");
        out << report.curve_label << ",survival,ci_low,ci_high,n_paths\n";
        for (const auto& row : report.curve)
            out << format_double(row.x) << ',' << format_double(row.survival)
                << ',' << format_double(row.ci_low) << ','
                << format_double(row.ci_high) << ',' << row.n_paths << "\n";
    }
}

}  // namespace snsim
