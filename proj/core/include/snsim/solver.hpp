#pragma once

#include <optional>
#include <utility>

#include "snsim/noise.hpp"

namespace snsim {

/// theta1: 1 below R, linear 2 - x/R on [R, 2R], 0 beyond. Throws for x < 0.
double theta1(double x, double R);

/// theta2: 1 below N, linear N + 1 - x on [N, N+1], 0 beyond.
double theta2(double x, double N);

struct SolverConfig {
    BesovParams besov;  // s must equal d/p - 1 (checked in validate)
    double C_star = 1.0;
    double R = 0.0;  // <= 0 selects the formula min{1, (4 C*)^{-1/r}}
    double N_cutoff = 2.0;
    double picard_tol = 1e-7;
    int picard_max_iter = 12;
    TimeGrid tg;

    double effective_R() const;
    void validate(int dimension, const NoiseModel& model) const;
};

struct SolverConstants {
    double R = 0.0;
    double M = 0.0;
    double T_hat = 0.0;
};

/// The closed-form solver constants: R = min{1, (4C*)^{-1/r}},
/// M = 3 C* E||u0||^r + 1, and the guaranteed contraction horizon
/// T_hat = 1 / (3 C* ((1/R^r + 1) sup_t beta1(t, N+1) + sup_t beta2(t, 2N+2))).
SolverConstants solver_constants(const SolverConfig& config,
                                 double mean_u0_norm_pow_r,
                                 const NoiseModel& model);

/// Cut-off data along a trajectory, computed causally: acc[m] is the
/// left-rectangle quadrature of ||u||^r in the higher norm over [0, t_m),
/// chi1[m] = theta1(acc[m]^{1/r}, R), chi2[m] = theta2(||u(t_m)||_crit, N).
struct CutoffSeries {
    std::vector<double> norm_critical;  // per node
    std::vector<double> norm_higher;    // s + 2/r
    std::vector<double> acc;            // running integral of norm_higher^r
    std::vector<double> chi1;
    std::vector<double> chi2;
};

CutoffSeries compute_cutoffs(const Trajectory& u, const SolverConfig& config,
                             const DyadicPartition& P);

enum class PathStatus {
    survived_horizon,
    stopped_sigma,
    stopped_rho,
    numerical_blowup,
};

const char* to_string(PathStatus s);

struct StoppingRecord {
    std::optional<double> sigma_hit;  // first t with running L^r norm >= R
    std::optional<double> rho_N_hit;  // first t with critical norm >= N
    std::optional<double> tau_N;      // min of the two
    PathStatus status = PathStatus::survived_horizon;
    int blowup_step = -1;
};

/// Scalar record of one simulated path (fields optional).
struct PathTrajectory {
    TimeGrid tg;
    CutoffSeries series;
    std::optional<Trajectory> fields;
    SpectralField final_field;
};

/// The mild-form map K(u) = e^{t Delta} u0 + B(chi1 u, u) + F_{chi1 chi2 f}(u)
/// with the cut-offs evaluated from u's own running norms and the Wiener path
/// held fixed. Requires an audited noise model and matching grids.
Trajectory fixed_point_map_K(const Trajectory& u, const SpectralField& u0,
                             const NoiseModel& model, const WienerPath& path,
                             const SolverConfig& config,
                             const DyadicPartition& P);

struct ContractionReport {
    enum class Status { converged, max_iter, no_contraction };
    Status status = Status::converged;
    int iterations = 0;
    std::vector<double> distances;  // S-norm of successive differences
    std::vector<double> ratios;
    double max_ratio = 0.0;
};

const char* to_string(ContractionReport::Status s);

/// Picard iteration of K from the heat trajectory of u0. Non-contraction and
/// iteration exhaustion are reported as statuses, not exceptions.
std::pair<Trajectory, ContractionReport> picard_solve(
    const SpectralField& u0, const NoiseModel& model, const WienerPath& path,
    const SolverConfig& config, const DyadicPartition& P);

struct StepOptions {
    bool disable_nonlinearity = false;  // test hook
    bool store_fields = false;
};

/// Sequential exponential-Euler discretization of the truncated system:
/// diffusion exact, nonlinear term explicit under chi1, noise left-point
/// under chi1 chi2. Stopping-time hits are recorded and the path continues
/// (the cut-offs freeze the dynamics). Numerical blowup becomes a status.
std::pair<PathTrajectory, StoppingRecord> time_step_path(
    const SpectralField& u0, const NoiseModel& model, const WienerPath& path,
    const SolverConfig& config, const DyadicPartition& P,
    const StepOptions& opts = {});

/// Path-wise solution-space norm: (blockwise sup-in-time at the critical
/// index)^r + (L^r-in-time at the s + 2/r index)^r, as the r-th root.
double s_norm(const Trajectory& u, const BesovParams& critical,
              const DyadicPartition& P);
double s_norm_pow_r(const Trajectory& u, const BesovParams& critical,
                    const DyadicPartition& P);

}  // namespace snsim
