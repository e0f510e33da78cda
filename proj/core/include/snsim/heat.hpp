#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "snsim/dyadic.hpp"
#include "snsim/field.hpp"

namespace snsim {

struct TimeGrid {
    double t_end = 1.0;
    int n_steps = 1;

    void validate() const {
        if (!(t_end > 0.0) || n_steps < 1)
            throw std::invalid_argument("TimeGrid: need t_end > 0, n_steps >= 1");
    }
    double dt() const { return t_end / n_steps; }
    double time(int m) const { return m * dt(); }
    int node_count() const { return n_steps + 1; }
    bool operator==(const TimeGrid&) const = default;
};

/// Uniformly sampled field trajectory; nodes[m] lives at time tg.time(m).
struct Trajectory {
    TimeGrid tg;
    std::vector<SpectralField> nodes;

    std::span<const SpectralField> span() const { return nodes; }
};

/// Applies e^{t Delta}: multiplies each coefficient by exp(-t |xi|^2).
/// Exact in space; throws for t < 0.
SpectralField heat_semigroup(SpectralField u, double t);

/// In-place e^{dt Delta} using the shared multiplier-table cache; the cheap
/// form for repeated fixed-dt stepping.
void apply_heat_step(SpectralField& u, double dt);

/// Mild solution of d_t u - Delta u = f by per-mode integrating factor with
/// the forcing taken linear between samples (exponential trapezoid). Exact
/// for constant-in-time forcing per mode.
Trajectory duhamel_solve(const SpectralField& u0,
                         const std::function<SpectralField(double)>& forcing,
                         const TimeGrid& tg);
Trajectory duhamel_solve_nodes(const SpectralField& u0,
                               std::span<const SpectralField> forcing_nodes,
                               const TimeGrid& tg);

/// B(u,v): zero-data heat response to -P div(u (x) v) along the pair of
/// trajectories. The sign makes the fixed-point composition solve the
/// momentum equation (the tensor divergence enters the left-hand side).
Trajectory bilinear_B(const Trajectory& u, const Trajectory& v);

struct ShellDecayFit {
    int shell = 0;
    double envelope_constant = 0.0;  // smallest C with data <= C e^{-c t 4^j}
    double rate = 0.0;               // fitted c, normalized by 4^j
    int sample_count = 0;
    std::uint64_t seed = 0;
};

/// Fits ||e^{t Delta} u||_{L^p} ~ C e^{-c t 4^j} over random fields supported
/// in shell j, t log-spaced in [0.01, 1] * 4^{-j}. Throws if the shell holds
/// no grid modes.
ShellDecayFit annulus_decay_check(int j, const DyadicPartition& P, double p_exp,
                                  int samples, std::uint64_t seed);

}  // namespace snsim
