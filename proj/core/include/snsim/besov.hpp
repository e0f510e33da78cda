#pragma once

#include <limits>
#include <span>

#include "snsim/dyadic.hpp"
#include "snsim/field.hpp"

namespace snsim {

/// Index triple (s, p, r) of a Besov-type norm plus the optional time
/// exponent q for the time-blockwise (Chemin-Lerner style) variant.
struct BesovParams {
    double s = 0.0;
    double p = 2.0;
    double r = 2.0;
    double q = std::numeric_limits<double>::infinity();

    /// Basic range checks; when critical_mode is set, also enforces the
    /// admissibility constraint tying r to p and the dimension:
    /// 2 <= r < inf for p <= d, 2 <= r < 2p/(p-d) for p > d.
    void validate(int dimension, bool critical_mode = false) const;

    BesovParams with_s(double new_s) const {
        BesovParams out = *this;
        out.s = new_s;
        return out;
    }
    BesovParams with_q(double new_q) const {
        BesovParams out = *this;
        out.q = new_q;
        return out;
    }
};

/// L^p norm of the shell-j piece of u. Uses the exact Parseval route for
/// p = 2 and physical quadrature otherwise.
double shell_lp_norm(const SpectralField& u, int j, const DyadicPartition& P,
                     double p);

/// Homogeneous Besov norm: ell^r over shells of 2^{js} ||Delta_j u||_{L^p},
/// summed over the resolvable shell range.
double besov_norm(const SpectralField& u, const BesovParams& params,
                  const DyadicPartition& P);

/// Time-blockwise norm of a uniformly sampled trajectory: per shell first the
/// L^q norm in time (sup over samples for q = inf, trapezoid quadrature
/// otherwise), then the weighted ell^r sum over shells. Throws on an empty
/// trajectory.
double chemin_lerner_norm(std::span<const SpectralField> nodes, double dt,
                          const BesovParams& params, const DyadicPartition& P);

/// Plain L^q-in-time norm of t -> besov_norm(u(t)): trapezoid in time.
double time_lq_besov_norm(std::span<const SpectralField> nodes, double dt,
                          double q, const BesovParams& params,
                          const DyadicPartition& P);

/// Besov norm of an H-valued field represented by one SpectralField per
/// noise mode: the pointwise magnitude is Frobenius over (mode, component).
double besov_norm_hvalued(std::span<const SpectralField> modes,
                          const BesovParams& params, const DyadicPartition& P);

}  // namespace snsim
