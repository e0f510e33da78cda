#include "snsim/solver.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "snsim/field_ops.hpp"

namespace snsim {

double theta1(double x, double R) {
    if (x < 0.0) throw std::invalid_argument("theta1: x must be >= 0");
    if (!(R > 0.0)) throw std::invalid_argument("theta1: R must be > 0");
    if (x < R) return 1.0;
    if (x <= 2.0 * R) return 2.0 - x / R;
    return 0.0;
}

double theta2(double x, double N) {
    if (x < 0.0) throw std::invalid_argument("theta2: x must be >= 0");
    if (!(N > 0.0)) throw std::invalid_argument("theta2: N must be > 0");
    if (x < N) return 1.0;
    if (x <= N + 1.0) return N + 1.0 - x;
    return 0.0;
}

double SolverConfig::effective_R() const {
    if (R > 0.0) return R;
    return std::min(1.0, std::pow(4.0 * C_star, -1.0 / besov.r));
}

void SolverConfig::validate(int dimension, const NoiseModel& model) const {
    besov.validate(dimension, /*critical_mode=*/true);
    const double s_crit = dimension / besov.p - 1.0;
    if (std::abs(besov.s - s_crit) > 1e-12)
        throw std::invalid_argument("SolverConfig: s must equal d/p - 1");
    if (!(C_star > 0.0))
        throw std::invalid_argument("SolverConfig: C_star must be positive");
    if (!(N_cutoff > 0.0))
        throw std::invalid_argument("SolverConfig: N_cutoff must be positive");
    if (!(picard_tol > 0.0) || picard_max_iter < 1)
        throw std::invalid_argument("SolverConfig: bad Picard parameters");
    tg.validate();
    if (C_star * model.gamma_bound >= 0.25)
        throw std::invalid_argument(
            "SolverConfig: smallness gate violated, need C* * |gamma| < 1/4");
}

SolverConstants solver_constants(const SolverConfig& config,
                                 double mean_u0_norm_pow_r,
                                 const NoiseModel& model) {
    const double r = config.besov.r;
    SolverConstants out;
    out.R = std::min(1.0, std::pow(4.0 * config.C_star, -1.0 / r));
    out.M = 3.0 * config.C_star * mean_u0_norm_pow_r + 1.0;
    const double N = config.N_cutoff;
    const double beta1_sup = model.beta1(0.0, N + 1.0, r);
    const double beta2_sup = model.beta2(0.0, 2.0 * N + 2.0);
    const double denom =
        3.0 * config.C_star *
        ((std::pow(out.R, -r) + 1.0) * beta1_sup + beta2_sup);
    if (!(denom > 0.0))
        throw std::invalid_argument("solver_constants: zero denominator");
    out.T_hat = 1.0 / denom;
    return out;
}

CutoffSeries compute_cutoffs(const Trajectory& u, const SolverConfig& config,
                             const DyadicPartition& P) {
    const double r = config.besov.r;
    const double R = config.effective_R();
    const double dt = u.tg.dt();
    const BesovParams higher = config.besov.with_s(config.besov.s + 2.0 / r);
    const std::size_t nodes = u.nodes.size();

    CutoffSeries s;
    s.norm_critical.resize(nodes);
    s.norm_higher.resize(nodes);
    s.acc.resize(nodes);
    s.chi1.resize(nodes);
    s.chi2.resize(nodes);
    double acc = 0.0;
    for (std::size_t m = 0; m < nodes; ++m) {
        s.norm_critical[m] = besov_norm(u.nodes[m], config.besov, P);
        s.norm_higher[m] = besov_norm(u.nodes[m], higher, P);
        s.acc[m] = acc;
        s.chi1[m] = theta1(std::pow(acc, 1.0 / r), R);
        s.chi2[m] = theta2(s.norm_critical[m], config.N_cutoff);
        acc += std::pow(s.norm_higher[m], r) * dt;  // left rectangle
    }
    return s;
}

const char* to_string(PathStatus s) {
    switch (s) {
        case PathStatus::survived_horizon: return "survived_horizon";
        case PathStatus::stopped_sigma: return "stopped_sigma";
        case PathStatus::stopped_rho: return "stopped_rho";
        case PathStatus::numerical_blowup: return "numerical_blowup";
    }
    return "unknown";
}

const char* to_string(ContractionReport::Status s) {
    switch (s) {
        case ContractionReport::Status::converged: return "converged";
        case ContractionReport::Status::max_iter: return "max_iter";
        case ContractionReport::Status::no_contraction: return "no-contraction";
    }
    return "unknown";
}

Trajectory fixed_point_map_K(const Trajectory& u, const SpectralField& u0,
                             const NoiseModel& model, const WienerPath& path,
                             const SolverConfig& config,
                             const DyadicPartition& P) {
    const TimeGrid& tg = config.tg;
    if (!(u.tg == tg) || u.nodes.size() != static_cast<std::size_t>(tg.node_count()))
        throw std::invalid_argument("fixed_point_map_K: trajectory grid mismatch");
    if (!(u0.grid() == P.grid))
        throw std::invalid_argument("fixed_point_map_K: grid mismatch");
    model.require_audited();
    model.require_prepared(u0.grid());

    const CutoffSeries cut = compute_cutoffs(u, config, P);

    // B(chi1 u, u): chi1 is scalar in time, so it rides on the first factor.
    Trajectory chi_u;
    chi_u.tg = tg;
    chi_u.nodes.reserve(u.nodes.size());
    for (std::size_t m = 0; m < u.nodes.size(); ++m) {
        SpectralField f = u.nodes[m];
        f *= cut.chi1[m];
        chi_u.nodes.push_back(std::move(f));
    }
    Trajectory result = bilinear_B(chi_u, u);

    std::vector<double> weights(static_cast<std::size_t>(tg.n_steps));
    for (int m = 0; m < tg.n_steps; ++m)
        weights[static_cast<std::size_t>(m)] =
            cut.chi1[static_cast<std::size_t>(m)] *
            cut.chi2[static_cast<std::size_t>(m)];
    ConvolutionOptions conv;
    conv.weights = weights;
    Trajectory noise_part = stochastic_convolution(model, u, path, conv);

    const double dt = tg.dt();
    SpectralField heat = u0;
    result.nodes[0] += heat;
    for (int m = 1; m <= tg.n_steps; ++m) {
        apply_heat_step(heat, dt);
        result.nodes[static_cast<std::size_t>(m)] += heat;
        result.nodes[static_cast<std::size_t>(m)] +=
            noise_part.nodes[static_cast<std::size_t>(m)];
    }
    return result;
}

double s_norm_pow_r(const Trajectory& u, const BesovParams& critical,
                    const DyadicPartition& P) {
    const double r = critical.r;
    const BesovParams sup_params =
        critical.with_q(std::numeric_limits<double>::infinity());
    const BesovParams higher = critical.with_s(critical.s + 2.0 / r);
    const double sup_part =
        chemin_lerner_norm(u.span(), u.tg.dt(), sup_params, P);
    const double lr_part =
        time_lq_besov_norm(u.span(), u.tg.dt(), r, higher, P);
    return std::pow(sup_part, r) + std::pow(lr_part, r);
}

double s_norm(const Trajectory& u, const BesovParams& critical,
              const DyadicPartition& P) {
    return std::pow(s_norm_pow_r(u, critical, P), 1.0 / critical.r);
}

std::pair<Trajectory, ContractionReport> picard_solve(
    const SpectralField& u0, const NoiseModel& model, const WienerPath& path,
    const SolverConfig& config, const DyadicPartition& P) {
    const TimeGrid& tg = config.tg;
    Trajectory current;
    current.tg = tg;
    current.nodes.reserve(static_cast<std::size_t>(tg.node_count()));
    SpectralField heat = u0;
    current.nodes.push_back(heat);
    const double dt = tg.dt();
    for (int m = 1; m <= tg.n_steps; ++m) {
        apply_heat_step(heat, dt);
        current.nodes.push_back(heat);
    }

    ContractionReport report;
    report.status = ContractionReport::Status::max_iter;
    int consecutive_expanding = 0;
    double prev_dist = -1.0;
    for (int it = 1; it <= config.picard_max_iter; ++it) {
        Trajectory next = fixed_point_map_K(current, u0, model, path, config, P);
        Trajectory diff;
        diff.tg = tg;
        diff.nodes.reserve(next.nodes.size());
        for (std::size_t m = 0; m < next.nodes.size(); ++m)
            diff.nodes.push_back(next.nodes[m] - current.nodes[m]);
        const double dist = s_norm(diff, config.besov, P);
        report.iterations = it;
        report.distances.push_back(dist);
        if (prev_dist > 0.0) {
            const double ratio = dist / prev_dist;
            report.ratios.push_back(ratio);
            report.max_ratio = std::max(report.max_ratio, ratio);
            consecutive_expanding = ratio >= 1.0 ? consecutive_expanding + 1 : 0;
            if (consecutive_expanding >= 3) {
                report.status = ContractionReport::Status::no_contraction;
                current = std::move(next);
                break;
            }
        }
        current = std::move(next);
        if (dist < config.picard_tol) {
            report.status = ContractionReport::Status::converged;
            break;
        }
        prev_dist = dist;
    }
    return {std::move(current), std::move(report)};
}

std::pair<PathTrajectory, StoppingRecord> time_step_path(
    const SpectralField& u0, const NoiseModel& model, const WienerPath& path,
    const SolverConfig& config, const DyadicPartition& P,
    const StepOptions& opts) {
    const TimeGrid& tg = config.tg;
    tg.validate();
    if (path.n_steps != tg.n_steps || path.modes != model.mode_count)
        throw std::invalid_argument("time_step_path: path/grid mismatch");
    model.require_audited();
    model.require_prepared(u0.grid());

    const double r = config.besov.r;
    const double R = config.effective_R();
    const double R_pow_r = std::pow(R, r);
    const double dt = tg.dt();
    const BesovParams higher = config.besov.with_s(config.besov.s + 2.0 / r);

    PathTrajectory traj;
    traj.tg = tg;
    auto& s = traj.series;
    if (opts.store_fields) traj.fields = Trajectory{tg, {}};

    StoppingRecord record;
    SpectralField u = u0;
    double acc = 0.0;
    for (int m = 0; m <= tg.n_steps; ++m) {
        const double norm_crit = besov_norm(u, config.besov, P);
        const double norm_high = besov_norm(u, higher, P);
        if (!std::isfinite(norm_crit) || !std::isfinite(norm_high)) {
            record.status = PathStatus::numerical_blowup;
            record.blowup_step = m;
            break;
        }
        const double chi1 = theta1(std::pow(acc, 1.0 / r), R);
        const double chi2 = theta2(norm_crit, config.N_cutoff);
        s.norm_critical.push_back(norm_crit);
        s.norm_higher.push_back(norm_high);
        s.acc.push_back(acc);
        s.chi1.push_back(chi1);
        s.chi2.push_back(chi2);
        if (opts.store_fields) traj.fields->nodes.push_back(u);

        const double t_now = tg.time(m);
        if (!record.sigma_hit && acc >= R_pow_r) record.sigma_hit = t_now;
        if (!record.rho_N_hit && norm_crit >= config.N_cutoff)
            record.rho_N_hit = t_now;

        if (m == tg.n_steps) break;

        // One exponential-Euler step of the truncated system.
        SpectralField incr = u;
        if (chi1 > 0.0 && !opts.disable_nonlinearity)
            incr.add_scaled(nonlinear_term(u, u), -chi1 * dt);
        const double noise_weight = chi1 * chi2;
        if (noise_weight > 0.0) {
            auto modes = noise_eval_all(model, t_now, u);
            SpectralField sum(u.grid(), u.components());
            for (int k = 0; k < model.mode_count; ++k)
                sum.add_scaled(modes[static_cast<std::size_t>(k)],
                               path.inc(m, k));
            incr.add_scaled(leray_project(std::move(sum)), noise_weight);
        }
        apply_heat_step(incr, dt);
        u = std::move(incr);
        acc += std::pow(norm_high, r) * dt;
    }

    traj.final_field = std::move(u);
    if (record.status != PathStatus::numerical_blowup) {
        if (record.sigma_hit || record.rho_N_hit) {
            const double sig = record.sigma_hit.value_or(
                std::numeric_limits<double>::infinity());
            const double rho = record.rho_N_hit.value_or(
                std::numeric_limits<double>::infinity());
            record.tau_N = std::min(sig, rho);
            record.status = sig <= rho ? PathStatus::stopped_sigma
                                       : PathStatus::stopped_rho;
        } else {
            record.status = PathStatus::survived_horizon;
        }
    }
    return {std::move(traj), record};
}

}  // namespace snsim
