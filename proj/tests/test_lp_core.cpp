#include <cmath>
#include <complex>
#include <numbers>

#include "doctest.h"
#include "snsim/besov.hpp"
#include "snsim/dyadic.hpp"
#include "snsim/field_ops.hpp"
#include "snsim/rng.hpp"

using namespace snsim;

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

GridSpec grid64{2, 64, two_pi};

// Field with coefficients only at +-(1,1): u(x) = 2 cos(x0 + x1) in the
// first component. |xi| = sqrt(2) sits where the shell-0 filter is exactly 1.
SpectralField mode11_field(const GridSpec& g) {
    SpectralField u(g, 2);
    const int n = g.points_per_axis;
    u.at(0, static_cast<std::size_t>(1) * n + 1) = 1.0;
    u.at(0, static_cast<std::size_t>(n - 1) * n + (n - 1)) = 1.0;
    return u;
}

SpectralField band_limited_field(const GridSpec& g, const DyadicPartition& P,
                                 std::uint64_t seed) {
    SpectralField u = random_divfree_field(g, seed, 1.0, 4.0 * g.freq_unit());
    // Keep only frequencies strictly inside the exact partition band.
    const double lo = P.band_lo(), hi = P.band_hi();
    const double ku = g.freq_unit();
    for (int c = 0; c < u.components(); ++c) {
        auto* a = u.data(c);
        for_each_mode(g, [&](std::size_t idx, std::array<int, 3> m) {
            const double rho = ku * std::sqrt(static_cast<double>(m[0]) * m[0] +
                                              static_cast<double>(m[1]) * m[1] +
                                              static_cast<double>(m[2]) * m[2]);
            if (rho < lo || rho > hi) a[idx] = 0.0;
        });
    }
    return u;
}

double rel_diff(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST_CASE("partition of unity holds exactly on the resolvable band") {
    const DyadicPartition P = build_partition(grid64);
    CHECK(P.j_max - P.j_min >= 3);

    // Direct summation oracle at every grid frequency in the band.
    const double ku = grid64.freq_unit();
    double worst = 0.0;
    for_each_mode(grid64, [&](std::size_t idx, std::array<int, 3> m) {
        const double rho = ku * std::hypot(m[0], m[1]);
        if (rho < P.band_lo() || rho > P.band_hi()) return;
        double sum = 0.0;
        for (int j = P.j_min; j <= P.j_max; ++j) sum += P.filter(j)[idx];
        worst = std::max(worst, std::abs(sum - 1.0));
    });
    CHECK(worst <= 1e-10);
    CHECK(P.partition_residual() <= 1e-10);
}

TEST_CASE("filters two shells apart have disjoint support") {
    for (const GridSpec& g :
         {grid64, GridSpec{3, 32, two_pi}, GridSpec{2, 32, 1.7}}) {
        const DyadicPartition P = build_partition(g);
        for (int i = P.j_min; i <= P.j_max; ++i)
            for (int j = i + 2; j <= P.j_max; ++j) {
                const auto& fi = P.filter(i);
                const auto& fj = P.filter(j);
                for (std::size_t idx = 0; idx < fi.size(); ++idx)
                    REQUIRE(fi[idx] * fj[idx] == 0.0);
            }
    }
}

TEST_CASE("filters are nonnegative and live in their annuli") {
    const DyadicPartition P = build_partition(grid64);
    const double ku = grid64.freq_unit();
    for (int j = P.j_min; j <= P.j_max; ++j) {
        const double lo = DyadicPartition::ring_inner * std::ldexp(1.0, j);
        const double hi = DyadicPartition::ring_outer * std::ldexp(1.0, j);
        const auto& f = P.filter(j);
        for_each_mode(grid64, [&](std::size_t idx, std::array<int, 3> m) {
            REQUIRE(f[idx] >= 0.0);
            if (f[idx] > 0.0) {
                const double rho = ku * std::hypot(m[0], m[1]);
                REQUIRE(rho >= lo);
                REQUIRE(rho <= hi);
            }
        });
    }
}

TEST_CASE("too-coarse grids are rejected") {
    CHECK_THROWS_WITH_AS(build_partition(GridSpec{2, 8, two_pi}),
                         doctest::Contains("insufficient resolution"),
                         std::invalid_argument);
}

TEST_CASE("dyadic blocks act as identity / zero on a single-shell field") {
    const DyadicPartition P = build_partition(grid64);
    const SpectralField u = mode11_field(grid64);

    const SpectralField b0 = dyadic_block(u, 0, P);
    const SpectralField b2 = dyadic_block(u, 2, P);
    CHECK((b0 - u).l2_norm() == 0.0);
    CHECK(b2.l2_norm() == 0.0);
    CHECK_THROWS_AS((void)dyadic_block(u, P.j_max + 1, P), std::out_of_range);
}

TEST_CASE("blocks reconstruct band-limited fields and telescope") {
    const DyadicPartition P = build_partition(grid64);
    const SpectralField u = band_limited_field(grid64, P, 42);

    SpectralField sum(grid64, 2);
    for (int j = P.j_min; j <= P.j_max; ++j) sum += dyadic_block(u, j, P);
    CHECK((sum - u).l2_norm() <= 1e-10 * u.l2_norm());

    CHECK((low_freq_sum(u, P.j_max + 1, P) - u).l2_norm() <=
          1e-10 * u.l2_norm());
    CHECK(low_freq_sum(u, P.j_min, P).l2_norm() == 0.0);

    for (int j : {P.j_min + 1, P.j_min + 3}) {
        const SpectralField tele =
            low_freq_sum(u, j + 1, P) - low_freq_sum(u, j, P);
        const SpectralField blk = dyadic_block(u, j, P);
        CHECK((tele - blk).l2_norm() <= 1e-13 * u.l2_norm());
    }
}

TEST_CASE("blocks are linear multipliers") {
    const DyadicPartition P = build_partition(grid64);
    const SpectralField u = random_divfree_field(grid64, 7, 1.0, 4.0);
    const SpectralField v = random_divfree_field(grid64, 8, 1.0, 6.0);
    const double a = 0.5, b = -2.0;
    SpectralField combo = a * SpectralField(u);
    combo.add_scaled(v, b);
    SpectralField lhs = dyadic_block(combo, 1, P);
    SpectralField rhs = a * dyadic_block(u, 1, P);
    rhs.add_scaled(dyadic_block(v, 1, P), b);
    CHECK((lhs - rhs).l2_norm() <= 1e-14 * rhs.l2_norm());
}

TEST_CASE("besov norm of a single-shell field reduces to its L^p norm") {
    const DyadicPartition P = build_partition(grid64);
    const SpectralField u = mode11_field(grid64);

    // Closed form: ||2 cos(x0+x1)||_{L^2([0,2pi]^2)} = 2 pi sqrt(2).
    const double l2_exact = two_pi * std::sqrt(2.0);
    CHECK(rel_diff(u.l2_norm(), l2_exact) <= 1e-12);

    for (double p : {2.0, 4.0}) {
        for (double s : {0.0, -0.5, 1.0}) {
            const BesovParams params{s, p, 2.0};
            const double expected = u.lp_norm(p);  // j = 0 shell: 2^{js} = 1
            CHECK(rel_diff(besov_norm(u, params, P), expected) <= 0.02);
        }
    }
    CHECK(besov_norm(SpectralField(grid64, 2), BesovParams{}, P) == 0.0);
}

TEST_CASE("besov norm is homogeneous, subadditive, and r-monotone") {
    const DyadicPartition P = build_partition(grid64);
    const SpectralField u = random_divfree_field(grid64, 3, 1.3, 4.0);
    const SpectralField v = random_divfree_field(grid64, 4, 0.8, 7.0);
    const BesovParams params{-0.3, 2.0, 2.0};

    const double nu = besov_norm(u, params, P);
    CHECK(rel_diff(besov_norm(-2.25 * SpectralField(u), params, P), 2.25 * nu) <=
          1e-12);
    CHECK(besov_norm(u + v, params, P) <=
          nu + besov_norm(v, params, P) + 1e-10);

    double prev = std::numeric_limits<double>::infinity();
    for (double r : {2.0, 2.5, 4.0, 16.0}) {
        BesovParams pr = params;
        pr.r = r;
        const double cur = besov_norm(u, pr, P);
        CHECK(cur <= prev * (1.0 + 1e-12));
        prev = cur;
    }
}

TEST_CASE("critical norm is invariant under the scaling u -> l u(l x)") {
    // Exercises the physical-quadrature branch (p = 4) as well as p = 2.
    const GridSpec g{2, 64, two_pi};
    const DyadicPartition P = build_partition(g);
    const int n = g.points_per_axis;
    const double m0 = (n / 16) * g.freq_unit();
    const double w = g.box_length / 12.0;

    auto profile = [&](double lambda) {
        std::vector<double> vals(g.node_count());
        const double h = g.box_length / n;
        const double c = 0.5 * g.box_length;
        std::size_t idx = 0;
        for (int k0 = 0; k0 < n; ++k0)
            for (int k1 = 0; k1 < n; ++k1, ++idx) {
                const double x0 = k0 * h, x1 = k1 * h;
                const double r2 = (lambda * x0 - c) * (lambda * x0 - c) +
                                  (lambda * x1 - c) * (lambda * x1 - c);
                vals[idx] = lambda * std::sin(m0 * lambda * x0) *
                            std::exp(-r2 / (2.0 * w * w));
            }
        std::vector<std::vector<double>> comps{vals,
                                               std::vector<double>(vals.size())};
        return SpectralField::from_physical(g, comps);
    };

    for (double p : {2.0, 4.0}) {
        const BesovParams crit{2.0 / p - 1.0, p, 2.0};
        const double n1 = besov_norm(profile(1.0), crit, P);
        const double n2 = besov_norm(profile(2.0), crit, P);
        CHECK(std::abs(n2 / n1 - 1.0) <= 0.02);
    }
}

TEST_CASE("admissibility constraint is enforced only in critical mode") {
    BesovParams ok{0.0, 2.0, 2.0};
    ok.validate(2, true);
    BesovParams bad{-0.5, 6.0, 4.0};  // d = 3: r must stay below 2p/(p-d) = 4
    bad.validate(3, false);
    CHECK_THROWS_AS(bad.validate(3, true), std::invalid_argument);
    BesovParams edge{-0.5, 6.0, 3.9};
    edge.validate(3, true);
}

TEST_CASE("time-blockwise norm: constant trajectories and single samples") {
    const DyadicPartition P = build_partition(grid64);
    const SpectralField u = random_divfree_field(grid64, 11, 1.0, 4.0);
    const BesovParams params{0.25, 2.0, 2.0};

    std::vector<SpectralField> constant(9, u);
    const double dt = 0.125;
    CHECK(rel_diff(chemin_lerner_norm(constant, dt, params, P),
                   besov_norm(u, params, P)) <= 1e-12);

    std::vector<SpectralField> single{u};
    CHECK(rel_diff(chemin_lerner_norm(single, dt, params, P),
                   besov_norm(u, params, P)) <= 1e-12);

    CHECK_THROWS_AS(
        (void)chemin_lerner_norm(std::span<const SpectralField>{}, dt, params, P),
        std::invalid_argument);
}

TEST_CASE("time-blockwise norm: one shell at q = r matches direct quadrature") {
    const DyadicPartition P = build_partition(grid64);
    const SpectralField base = mode11_field(grid64);
    const double r = 2.0, s = 0.4;
    const int steps = 16;
    const double dt = 0.05;

    std::vector<SpectralField> nodes;
    std::vector<double> amps;
    for (int m = 0; m <= steps; ++m) {
        const double a = 1.0 + 0.5 * std::sin(0.9 * m);
        amps.push_back(a);
        nodes.push_back(a * SpectralField(base));
    }
    BesovParams params{s, 2.0, r, r};
    const double got = chemin_lerner_norm(nodes, dt, params, P);

    // Direct route: 2^{js} (int ||Delta_j u(t)||^r dt)^{1/r} with the same
    // trapezoid weights; the field sits in shell 0 only.
    const double block_norm = shell_lp_norm(base, 0, P, 2.0);
    double integral = 0.0;
    for (int m = 0; m <= steps; ++m) {
        const double wgt = (m == 0 || m == steps) ? 0.5 * dt : dt;
        integral += wgt * std::pow(amps[static_cast<std::size_t>(m)] * block_norm, r);
    }
    const double expected = std::pow(2.0, 0 * s) * std::pow(integral, 1.0 / r);
    CHECK(rel_diff(got, expected) <= 1e-12);
}

TEST_CASE("time-blockwise norm scales as 2^{-1/r} under time halving") {
    const DyadicPartition P = build_partition(grid64);
    const SpectralField g1 = random_divfree_field(grid64, 21, 1.0, 3.0);
    const SpectralField g2 = random_divfree_field(grid64, 22, 1.0, 6.0);
    const double T = 0.8;
    const int steps = 32;
    const double r = 2.0;

    auto sample = [&](double time_scale, double t_max, int n_steps) {
        std::vector<SpectralField> nodes;
        const double dt = t_max / n_steps;
        for (int m = 0; m <= n_steps; ++m) {
            const double t = time_scale * m * dt;
            SpectralField f = std::cos(3.0 * t) * SpectralField(g1);
            f.add_scaled(g2, std::sin(2.0 * t));
            nodes.push_back(std::move(f));
        }
        return nodes;
    };

    const BesovParams params{0.1, 2.0, r, r};
    const double full = chemin_lerner_norm(sample(1.0, T, steps), T / steps,
                                           params, P);
    const double squeezed = chemin_lerner_norm(
        sample(2.0, T / 2, steps), T / (2 * steps), params, P);
    CHECK(std::abs(squeezed / full - std::pow(2.0, -1.0 / r)) <= 0.01);
}
