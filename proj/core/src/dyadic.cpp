#include "snsim/dyadic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace snsim {
namespace {

// Smooth 0->1 ramp on [0,1] built from the standard exp(-1/x) transition.
double smooth_step(double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double a = std::exp(-1.0 / x);
    const double b = std::exp(-1.0 / (1.0 - x));
    return a / (a + b);
}

// Unnormalized radial bump: 1 on [1,2], supported in [3/4, 8/3].
double bump(double rho) {
    if (rho <= DyadicPartition::ring_inner || rho >= DyadicPartition::ring_outer)
        return 0.0;
    if (rho < 1.0) return smooth_step((rho - 0.75) / 0.25);
    if (rho <= 2.0) return 1.0;
    return smooth_step((8.0 / 3.0 - rho) / (2.0 / 3.0));
}

// Sum of bump(2^-j rho) over all integers j. At most two terms are nonzero
// (the support ratio 32/9 is below 4) and one of them is always 1, so the
// sum is >= 1 for every rho > 0 and normalization is stable.
double bump_total(double rho) {
    const int lo = static_cast<int>(
        std::floor(std::log2(rho / DyadicPartition::ring_outer)));
    double total = 0.0;
    for (int j = lo; j <= lo + 3; ++j) total += bump(std::ldexp(rho, -j));
    return total;
}

}  // namespace

DyadicPartition build_partition(const GridSpec& grid) {
    grid.validate();

    DyadicPartition P;
    P.grid = grid;

    const double k_min = grid.freq_unit();
    const double k_nyq = grid.nyquist();
    // Shells whose annulus reaches the smallest nonzero frequency up to
    // shells whose inner radius is still inside the axis Nyquist ball.
    P.j_min = static_cast<int>(
        std::ceil(std::log2(k_min / DyadicPartition::ring_outer)));
    P.j_max = static_cast<int>(
        std::floor(std::log2(k_nyq / DyadicPartition::ring_inner)));
    if (P.shell_count() < 3)
        throw std::invalid_argument(
            "insufficient resolution: grid hosts fewer than 3 dyadic shells");

    const std::size_t total = grid.node_count();
    P.filter_values.assign(static_cast<std::size_t>(P.shell_count()),
                           std::vector<double>(total, 0.0));
    const double ku = grid.freq_unit();
    for_each_mode(grid, [&](std::size_t idx, std::array<int, 3> m) {
        const double rho = ku * std::sqrt(static_cast<double>(m[0]) * m[0] +
                                          static_cast<double>(m[1]) * m[1] +
                                          static_cast<double>(m[2]) * m[2]);
        if (rho == 0.0) return;
        const double denom = bump_total(rho);
        for (int j = P.j_min; j <= P.j_max; ++j) {
            const double v = bump(std::ldexp(rho, -j));
            if (v != 0.0)
                P.filter_values[static_cast<std::size_t>(j - P.j_min)][idx] =
                    v / denom;
        }
    });
    return P;
}

double DyadicPartition::partition_residual() const {
    const double lo = band_lo(), hi = band_hi();
    const double ku = grid.freq_unit();
    double worst = 0.0;
    for_each_mode(grid, [&](std::size_t idx, std::array<int, 3> m) {
        const double rho = ku * std::sqrt(static_cast<double>(m[0]) * m[0] +
                                          static_cast<double>(m[1]) * m[1] +
                                          static_cast<double>(m[2]) * m[2]);
        if (rho < lo || rho > hi) return;
        double sum = 0.0;
        for (const auto& f : filter_values) sum += f[idx];
        worst = std::max(worst, std::abs(sum - 1.0));
    });
    return worst;
}

std::string DyadicPartition::diagnostics_json() const {
    nlohmann::json shells = nlohmann::json::array();
    for (int j = j_min; j <= j_max; ++j) {
        const auto& f = filter(j);
        std::size_t support = 0;
        double peak = 0.0;
        for (double v : f) {
            if (v != 0.0) ++support;
            peak = std::max(peak, v);
        }
        shells.push_back({{"j", j},
                          {"annulus_lo", ring_inner * std::ldexp(1.0, j)},
                          {"annulus_hi", ring_outer * std::ldexp(1.0, j)},
                          {"support_modes", support},
                          {"peak", peak}});
    }
    nlohmann::json out{{"j_min", j_min},
                       {"j_max", j_max},
                       {"band_lo", band_lo()},
                       {"band_hi", band_hi()},
                       {"partition_residual", partition_residual()},
                       {"shells", shells}};
    return out.dump(2);
}

SpectralField dyadic_block(const SpectralField& u, int j,
                           const DyadicPartition& P) {
    if (!P.has_shell(j))
        throw std::out_of_range("dyadic_block: shell index out of range");
    if (!(u.grid() == P.grid))
        throw std::invalid_argument("dyadic_block: grid mismatch");
    SpectralField out = u;
    const auto& w = P.filter(j);
    for (int c = 0; c < out.components(); ++c) out.apply_weights(c, w);
    return out;
}

SpectralField low_freq_sum(const SpectralField& u, int j,
                           const DyadicPartition& P) {
    SpectralField out(u.grid(), u.components());
    const int hi = std::min(j - 1, P.j_max);
    for (int i = P.j_min; i <= hi; ++i) out += dyadic_block(u, i, P);
    return out;
}

}  // namespace snsim
