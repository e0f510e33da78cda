#include "snsim/besov.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace snsim {

void BesovParams::validate(int dimension, bool critical_mode) const {
    if (!(p >= 2.0) || !std::isfinite(p))
        throw std::invalid_argument("BesovParams: p must lie in [2, inf)");
    if (!(r >= 2.0) || !std::isfinite(r))
        throw std::invalid_argument("BesovParams: r must lie in [2, inf)");
    if (!(q >= 1.0))
        throw std::invalid_argument("BesovParams: q must lie in [1, inf]");
    if (critical_mode && p > dimension) {
        const double r_limit = 2.0 * p / (p - dimension);
        if (!(r < r_limit))
            throw std::invalid_argument(
                "BesovParams: admissibility requires r < 2p/(p-d) for p > d");
    }
}

double shell_lp_norm(const SpectralField& u, int j, const DyadicPartition& P,
                     double p) {
    if (p == 2.0) {
        const auto& w = P.filter(j);
        double sum = 0.0;
        for (int c = 0; c < u.components(); ++c) {
            const auto* a = u.data(c);
            for (std::size_t i = 0; i < w.size(); ++i)
                if (w[i] != 0.0) sum += w[i] * w[i] * std::norm(a[i]);
        }
        return std::sqrt(sum *
                         std::pow(u.grid().box_length, u.grid().dimension));
    }
    return dyadic_block(u, j, P).lp_norm(p);
}

double besov_norm(const SpectralField& u, const BesovParams& params,
                  const DyadicPartition& P) {
    params.validate(u.grid().dimension);
    double sum = 0.0;
    for (int j = P.j_min; j <= P.j_max; ++j) {
        const double a =
            std::pow(2.0, j * params.s) * shell_lp_norm(u, j, P, params.p);
        if (a > 0.0) sum += std::pow(a, params.r);
    }
    return std::pow(sum, 1.0 / params.r);
}

namespace {

// Trapezoid weights over node samples; a single node has measure zero.
double time_lq(const std::vector<double>& samples, double dt, double q) {
    if (std::isinf(q)) {
        double best = 0.0;
        for (double v : samples) best = std::max(best, v);
        return best;
    }
    if (samples.size() < 2) return 0.0;
    double sum = 0.0;
    for (std::size_t m = 0; m < samples.size(); ++m) {
        const double w =
            (m == 0 || m + 1 == samples.size()) ? 0.5 * dt : dt;
        sum += w * std::pow(samples[m], q);
    }
    return std::pow(sum, 1.0 / q);
}

}  // namespace

double chemin_lerner_norm(std::span<const SpectralField> nodes, double dt,
                          const BesovParams& params, const DyadicPartition& P) {
    if (nodes.empty())
        throw std::invalid_argument("chemin_lerner_norm: empty trajectory");
    params.validate(nodes[0].grid().dimension);
    double sum = 0.0;
    std::vector<double> samples(nodes.size());
    for (int j = P.j_min; j <= P.j_max; ++j) {
        for (std::size_t m = 0; m < nodes.size(); ++m)
            samples[m] = shell_lp_norm(nodes[m], j, P, params.p);
        const double a =
            std::pow(2.0, j * params.s) * time_lq(samples, dt, params.q);
        if (a > 0.0) sum += std::pow(a, params.r);
    }
    return std::pow(sum, 1.0 / params.r);
}

double time_lq_besov_norm(std::span<const SpectralField> nodes, double dt,
                          double q, const BesovParams& params,
                          const DyadicPartition& P) {
    if (nodes.empty())
        throw std::invalid_argument("time_lq_besov_norm: empty trajectory");
    std::vector<double> samples(nodes.size());
    for (std::size_t m = 0; m < nodes.size(); ++m)
        samples[m] = besov_norm(nodes[m], params, P);
    return time_lq(samples, dt, q);
}

double besov_norm_hvalued(std::span<const SpectralField> modes,
                          const BesovParams& params, const DyadicPartition& P) {
    if (modes.empty()) return 0.0;
    params.validate(modes[0].grid().dimension);
    const GridSpec& grid = modes[0].grid();
    double sum = 0.0;
    for (int j = P.j_min; j <= P.j_max; ++j) {
        double shell;
        if (params.p == 2.0) {
            // Frobenius over (mode, component) commutes with Parseval.
            double s2 = 0.0;
            for (const auto& g : modes) {
                const double a = shell_lp_norm(g, j, P, 2.0);
                s2 += a * a;
            }
            shell = std::sqrt(s2);
        } else {
            std::vector<std::vector<double>> phys;
            for (const auto& g : modes) {
                SpectralField block = dyadic_block(g, j, P);
                for (int c = 0; c < block.components(); ++c)
                    phys.push_back(block.to_physical(c));
            }
            double acc = 0.0;
            for (std::size_t i = 0; i < grid.node_count(); ++i) {
                double mag2 = 0.0;
                for (const auto& comp : phys) mag2 += comp[i] * comp[i];
                acc += std::pow(mag2, 0.5 * params.p);
            }
            shell = std::pow(acc * grid.cell_volume(), 1.0 / params.p);
        }
        const double a = std::pow(2.0, j * params.s) * shell;
        if (a > 0.0) sum += std::pow(a, params.r);
    }
    return std::pow(sum, 1.0 / params.r);
}

}  // namespace snsim
