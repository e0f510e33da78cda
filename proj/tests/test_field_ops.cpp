#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <map>
#include <numbers>

#include "doctest.h"
#include "snsim/besov.hpp"
#include "snsim/field_ops.hpp"
#include "snsim/rng.hpp"

using namespace snsim;

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;
const GridSpec grid64{2, 64, two_pi};

SpectralField gradient_of_random_scalar(const GridSpec& g, std::uint64_t seed) {
    std::vector<std::vector<double>> one(1, std::vector<double>(g.node_count()));
    CounterRng rng(seed, "test-scalar");
    for (auto& x : one[0]) x = rng.gaussian();
    SpectralField psi = SpectralField::from_physical(g, one);
    psi.apply_isotropic_multiplier([](double k2) { return std::exp(-0.4 * k2); });
    psi.dealias();
    SpectralField grad(g, g.dimension);
    const double ku = g.freq_unit();
    for (int c = 0; c < g.dimension; ++c) {
        auto* dst = grad.data(c);
        const auto* src = psi.data(0);
        for_each_mode(g, [&](std::size_t idx, std::array<int, 3> m) {
            dst[idx] = std::complex<double>(0.0, ku * m[c]) * src[idx];
        });
    }
    return grad;
}

// Taylor-Green vortex: divergence-free, and its tensor divergence is a pure
// gradient, so the projected nonlinear term vanishes identically.
SpectralField taylor_green(const GridSpec& g) {
    const int n = g.points_per_axis;
    const double h = g.box_length / n;
    std::vector<std::vector<double>> comps(2, std::vector<double>(g.node_count()));
    std::size_t idx = 0;
    for (int k0 = 0; k0 < n; ++k0)
        for (int k1 = 0; k1 < n; ++k1, ++idx) {
            comps[0][idx] = std::sin(k0 * h) * std::cos(k1 * h);
            comps[1][idx] = -std::cos(k0 * h) * std::sin(k1 * h);
        }
    return SpectralField::from_physical(g, comps);
}

// Sparse-spectrum oracle for P div(u (x) v): direct convolution over the
// nonzero modes, fully independent of the FFT pipeline.
using ModeKey = std::pair<int, int>;
using Spectrum = std::map<ModeKey, std::complex<double>>;

Spectrum sparse_spectrum(const SpectralField& f, int comp, double tol) {
    Spectrum out;
    for_each_mode(f.grid(), [&](std::size_t idx, std::array<int, 3> m) {
        const auto z = f.at(comp, idx);
        if (std::abs(z) > tol) out[{m[0], m[1]}] = z;
    });
    return out;
}

Spectrum convolve(const Spectrum& a, const Spectrum& b) {
    Spectrum out;
    for (const auto& [ma, za] : a)
        for (const auto& [mb, zb] : b)
            out[{ma.first + mb.first, ma.second + mb.second}] += za * zb;
    return out;
}

SpectralField oracle_nonlinear(const SpectralField& u, const SpectralField& v) {
    const GridSpec& g = u.grid();
    std::vector<Spectrum> su(2), sv(2);
    for (int c = 0; c < 2; ++c) {
        su[static_cast<std::size_t>(c)] = sparse_spectrum(u, c, 1e-14);
        sv[static_cast<std::size_t>(c)] = sparse_spectrum(v, c, 1e-14);
    }
    // div_i = sum_c i xi_c (u_c * v_i), collected per mode for BOTH
    // components before projecting (the projection mixes them).
    std::map<ModeKey, std::array<std::complex<double>, 2>> div;
    for (int i = 0; i < 2; ++i)
        for (int c = 0; c < 2; ++c)
            for (const auto& [m, z] :
                 convolve(su[static_cast<std::size_t>(c)],
                          sv[static_cast<std::size_t>(i)])) {
                const double xi_c = g.freq_unit() * (c == 0 ? m.first : m.second);
                div[m][static_cast<std::size_t>(i)] +=
                    std::complex<double>(0.0, xi_c) * z;
            }
    SpectralField out(g, 2);
    const int n = g.points_per_axis;
    auto bin = [n](int m) { return (m % n + n) % n; };
    for (const auto& [m, d] : div) {
        if (std::abs(m.first) > n / 2 - 1 || std::abs(m.second) > n / 2 - 1)
            continue;  // outside the grid; the pipeline dealiases anyway
        const double m2 = static_cast<double>(m.first) * m.first +
                          static_cast<double>(m.second) * m.second;
        if (m2 == 0.0) continue;
        const std::complex<double> dot =
            (static_cast<double>(m.first) * d[0] +
             static_cast<double>(m.second) * d[1]) /
            m2;
        const std::size_t idx =
            static_cast<std::size_t>(bin(m.first)) * n + bin(m.second);
        out.at(0, idx) = d[0] - static_cast<double>(m.first) * dot;
        out.at(1, idx) = d[1] - static_cast<double>(m.second) * dot;
    }
    return out;
}

}  // namespace

TEST_CASE("Leray projection: gradients die, divergence-free fields survive") {
    const SpectralField g = gradient_of_random_scalar(grid64, 5);
    CHECK(leray_project(g).l2_norm() <= 1e-10 * g.l2_norm());

    const SpectralField u = random_divfree_field(grid64, 6, 1.0, 4.0);
    const SpectralField pu = leray_project(u);
    CHECK((pu - u).l2_norm() <= 1e-12 * u.l2_norm());
    CHECK((leray_project(pu) - pu).l2_norm() <= 1e-12 * pu.l2_norm());
    CHECK(pu.l2_norm() <= u.l2_norm() * (1.0 + 1e-12));
}

TEST_CASE("divergence: exact spectral derivatives") {
    const int n = grid64.points_per_axis;
    const double h = grid64.box_length / n;

    std::vector<std::vector<double>> shear(2,
                                           std::vector<double>(grid64.node_count()));
    std::vector<std::vector<double>> stream = shear;
    std::size_t idx = 0;
    for (int k0 = 0; k0 < n; ++k0)
        for (int k1 = 0; k1 < n; ++k1, ++idx) {
            shear[0][idx] = std::sin(k1 * h);   // u = (sin x1, 0)
            stream[0][idx] = std::sin(k0 * h);  // u = (sin x0, 0)
        }
    const SpectralField u_shear = SpectralField::from_physical(grid64, shear);
    CHECK(divergence(u_shear).l2_norm() <= 1e-13);

    const SpectralField u_stream = SpectralField::from_physical(grid64, stream);
    const auto div_phys = divergence(u_stream).to_physical(0);
    double worst = 0.0;
    idx = 0;
    for (int k0 = 0; k0 < n; ++k0)
        for (int k1 = 0; k1 < n; ++k1, ++idx)
            worst = std::max(worst, std::abs(div_phys[idx] - std::cos(k0 * h)));
    CHECK(worst <= 1e-12);

    for (std::uint64_t i = 0; i < 100; ++i) {
        SpectralField w = random_divfree_field(grid64, 100 + i, 1.0, 5.0);
        w += gradient_of_random_scalar(grid64, 200 + i);
        CHECK(divergence(leray_project(w)).l2_norm() <= 1e-10 * w.l2_norm());
    }
}

TEST_CASE("nonlinear term: bilinearity and degenerate arguments") {
    const SpectralField u = random_divfree_field(grid64, 9, 1.0, 4.0);
    const SpectralField v = random_divfree_field(grid64, 10, 1.0, 6.0);
    const SpectralField zero(grid64, 2);

    CHECK(nonlinear_term(u, zero).l2_norm() == 0.0);
    CHECK(nonlinear_term(zero, v).l2_norm() == 0.0);

    const SpectralField a = nonlinear_term(2.5 * SpectralField(u), v);
    const SpectralField b = 2.5 * nonlinear_term(u, v);
    CHECK((a - b).l2_norm() <= 1e-12 * b.l2_norm());

    // Not symmetric in its arguments, but always finite.
    const SpectralField uv = nonlinear_term(u, v);
    const SpectralField vu = nonlinear_term(v, u);
    CHECK((uv - vu).l2_norm() > 1e-6 * uv.l2_norm());
    CHECK(std::isfinite(uv.l2_norm()));
}

TEST_CASE("nonlinear term matches the sparse convolution oracle") {
    const SpectralField tg = taylor_green(grid64);

    // Taylor-Green: the unprojected divergence is a gradient, so the result
    // is zero; scale reference is || (sin 2x0, sin 2x1) / 2 ||_{L^2} = pi.
    CHECK(nonlinear_term(tg, tg).l2_norm() <= 1e-10 * std::numbers::pi);

    // A genuinely nonzero pair: Taylor-Green against a two-mode field.
    SpectralField w(grid64, 2);
    const int n = grid64.points_per_axis;
    w.at(0, static_cast<std::size_t>(2) * n + 1) = {0.3, 0.1};
    w.at(0, static_cast<std::size_t>(n - 2) * n + (n - 1)) = {0.3, -0.1};
    w.at(1, static_cast<std::size_t>(1) * n + 3) = {0.0, 0.2};
    w.at(1, static_cast<std::size_t>(n - 1) * n + (n - 3)) = {0.0, -0.2};

    const SpectralField got = nonlinear_term(tg, w);
    const SpectralField expected = oracle_nonlinear(tg, w);
    CHECK(expected.l2_norm() > 1e-3);
    CHECK((got - expected).l2_norm() <= 1e-10 * expected.l2_norm());
}

TEST_CASE("nonlinear term is energy-orthogonal to divergence-free fields") {
    for (std::uint64_t i = 0; i < 10; ++i) {
        SpectralField u = random_divfree_field(grid64, 300 + i, 1.0, 5.0);
        u.dealias();
        const SpectralField nl = nonlinear_term(u, u);
        CHECK(std::abs(nl.inner_l2(u)) <= 1e-8 * nl.l2_norm() * u.l2_norm());
    }
}

TEST_CASE("oscillating data: divergence-free by construction") {
    const GridSpec g3{3, 32, two_pi};
    InitialDataSpec spec;
    spec.kind = InitialDataSpec::Kind::oscillating;
    spec.epsilon = 0.25;
    spec.p_exponent = 6.0;
    InitialDataInfo info;
    const SpectralField u0 = make_initial_data(spec, g3, &info);
    CHECK(info.oscillation_mode == 4);
    CHECK(info.epsilon_effective == doctest::Approx(0.25));
    CHECK(u0.l2_norm() > 0.0);
    CHECK(divergence(u0).l2_norm() <= 1e-10 * u0.l2_norm());
}

TEST_CASE(
    "oscillating data: amplitude grows like eps^{3/p-1}, critical norm stays put") {
    const GridSpec g3{3, 64, two_pi};
    const DyadicPartition P = build_partition(g3);
    const BesovParams crit{3.0 / 6.0 - 1.0, 6.0, 2.0};

    std::vector<double> linf, bnorm;
    for (double eps : {0.25, 0.125, 0.0625}) {
        InitialDataSpec spec;
        spec.kind = InitialDataSpec::Kind::oscillating;
        spec.epsilon = eps;
        spec.p_exponent = 6.0;
        const SpectralField u0 = make_initial_data(spec, g3);
        CHECK(divergence(u0).l2_norm() <= 1e-10 * u0.l2_norm());
        linf.push_back(u0.linf_norm());
        bnorm.push_back(besov_norm(u0, crit, P));
    }
    // Each halving of eps multiplies the prefactor by 2^{1/2} for p = 6.
    for (std::size_t i = 0; i + 1 < linf.size(); ++i)
        CHECK(std::abs(linf[i + 1] / linf[i] - std::sqrt(2.0)) <=
              0.1 * std::sqrt(2.0));
    const auto [mn, mx] = std::minmax_element(bnorm.begin(), bnorm.end());
    CHECK(*mx / *mn <= 2.0);
}

TEST_CASE("oscillating data: unresolvable carriers are rejected") {
    const GridSpec g3{3, 32, two_pi};
    InitialDataSpec spec;
    spec.kind = InitialDataSpec::Kind::oscillating;
    spec.epsilon = 1.0 / 40.0;  // carrier mode 40 > 32/3
    CHECK_THROWS_WITH_AS((void)make_initial_data(spec, g3),
                         doctest::Contains("oscillation unresolvable"),
                         std::invalid_argument);

    InitialDataSpec flat = spec;
    flat.epsilon = 0.25;
    CHECK_THROWS_AS((void)make_initial_data(flat, GridSpec{2, 64, two_pi}),
                    std::invalid_argument);
}

TEST_CASE("gaussian data is a pure function of its seed") {
    InitialDataSpec spec;
    spec.kind = InitialDataSpec::Kind::gaussian_divfree;
    spec.seed = 777;
    const SpectralField a = make_initial_data(spec, grid64);
    const SpectralField b = make_initial_data(spec, grid64);
    bool identical = true;
    for (int c = 0; c < a.components(); ++c)
        for (std::size_t i = 0; i < a.node_count(); ++i)
            identical = identical && a.at(c, i) == b.at(c, i);
    CHECK(identical);
    spec.seed = 778;
    const SpectralField other = make_initial_data(spec, grid64);
    CHECK((a - other).l2_norm() > 1e-3);
}

TEST_CASE("field files round-trip through the binary format") {
    const SpectralField u = random_divfree_field(grid64, 99, 2.0, 4.0);
    const std::string base = "roundtrip_field";
    write_field(u, base);
    const SpectralField back = read_field(base);
    REQUIRE(back.grid() == u.grid());
    REQUIRE(back.components() == u.components());
    bool identical = true;
    for (int c = 0; c < u.components(); ++c)
        for (std::size_t i = 0; i < u.node_count(); ++i)
            identical = identical && back.at(c, i) == u.at(c, i);
    CHECK(identical);
    std::remove((base + ".bin").c_str());
    std::remove((base + ".json").c_str());
}
