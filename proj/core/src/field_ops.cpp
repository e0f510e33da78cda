#include "snsim/field_ops.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "snsim/fft.hpp"
#include "snsim/rng.hpp"

namespace snsim {

SpectralField leray_project(SpectralField u) {
    const GridSpec& grid = u.grid();
    const int d = grid.dimension;
    if (u.components() != d)
        throw std::invalid_argument("leray_project: need a d-component field");
    std::vector<std::complex<double>*> comp(static_cast<std::size_t>(d));
    for (int c = 0; c < d; ++c) comp[static_cast<std::size_t>(c)] = u.data(c);
    for_each_mode(grid, [&](std::size_t idx, std::array<int, 3> m) {
        const double m2 = static_cast<double>(m[0]) * m[0] +
                          static_cast<double>(m[1]) * m[1] +
                          static_cast<double>(m[2]) * m[2];
        if (m2 == 0.0) return;
        std::complex<double> dot = 0.0;
        for (int c = 0; c < d; ++c) dot += static_cast<double>(m[c]) * comp[c][idx];
        dot /= m2;
        for (int c = 0; c < d; ++c) comp[c][idx] -= static_cast<double>(m[c]) * dot;
    });
    return u;
}

SpectralField divergence(const SpectralField& u) {
    const GridSpec& grid = u.grid();
    const int d = grid.dimension;
    if (u.components() != d)
        throw std::invalid_argument("divergence: need a d-component field");
    SpectralField out(grid, 1);
    const double ku = grid.freq_unit();
    const int nyq = -grid.points_per_axis / 2;
    auto* dst = out.data(0);
    for (int c = 0; c < d; ++c) {
        const auto* src = u.data(c);
        for_each_mode(grid, [&](std::size_t idx, std::array<int, 3> m) {
            if (m[0] == nyq || m[1] == nyq || m[2] == nyq) return;
            dst[idx] += std::complex<double>(0.0, ku * m[c]) * src[idx];
        });
    }
    return out;
}

SpectralField nonlinear_term(const SpectralField& u, const SpectralField& v) {
    if (!u.same_shape(v))
        throw std::invalid_argument("nonlinear_term: field shape mismatch");
    const GridSpec& grid = u.grid();
    const int d = grid.dimension;
    if (u.components() != d)
        throw std::invalid_argument("nonlinear_term: need d-component fields");

    const bool same = &u == &v;
    SpectralField ud = u;
    ud.dealias();
    std::vector<std::vector<double>> pu, pv;
    for (int c = 0; c < d; ++c) pu.push_back(ud.to_physical(c));
    if (same) {
        pv = pu;
    } else {
        SpectralField vd = v;
        vd.dealias();
        for (int c = 0; c < d; ++c) pv.push_back(vd.to_physical(c));
    }

    const std::size_t total = grid.node_count();
    const double ku = grid.freq_unit();
    const double scale = 1.0 / static_cast<double>(total);
    std::vector<std::complex<double>> prod(total), spec(total);
    SpectralField out(grid, d);
    for (int i = 0; i < d; ++i) {
        auto* dst = out.data(i);
        for (int c = 0; c < d; ++c) {
            for (std::size_t idx = 0; idx < total; ++idx)
                prod[idx] = pu[c][idx] * pv[i][idx];
            fft::transform(grid, prod.data(), spec.data(), -1);
            for_each_mode(grid, [&](std::size_t idx, std::array<int, 3> m) {
                dst[idx] += std::complex<double>(0.0, ku * m[c]) * spec[idx] * scale;
            });
        }
    }
    out.dealias();
    out.enforce_conjugate_symmetry();
    out.zero_mean();
    return leray_project(std::move(out));
}

void InitialDataSpec::validate(const GridSpec& grid) const {
    if (kind == Kind::oscillating) {
        if (grid.dimension != 3)
            throw std::invalid_argument("oscillating data requires dimension 3");
        if (!(epsilon > 0.0 && epsilon < 1.0))
            throw std::invalid_argument("epsilon must lie in (0, 1)");
    }
    if (kind == Kind::file && path.empty())
        throw std::invalid_argument("file initial data needs a path");
}

SpectralField random_divfree_field(const GridSpec& grid, std::uint64_t seed,
                                   double amplitude, double spectral_center) {
    grid.validate();
    const int d = grid.dimension;
    const std::size_t total = grid.node_count();
    std::vector<std::vector<double>> phys(static_cast<std::size_t>(d),
                                          std::vector<double>(total));
    for (int c = 0; c < d; ++c) {
        CounterRng rng(seed, "divfree-noise", static_cast<std::uint64_t>(c));
        for (std::size_t i = 0; i < total; ++i) phys[static_cast<std::size_t>(c)][i] = rng.gaussian();
    }
    SpectralField f = SpectralField::from_physical(grid, phys);
    const double kc2 = spectral_center * spectral_center;
    // Ring-peaked spectrum: mass concentrated near |xi| = spectral_center.
    f.apply_isotropic_multiplier(
        [&](double k2) { return (k2 / kc2) * std::exp(-k2 / kc2); });
    f = leray_project(std::move(f));
    f.dealias();
    f.zero_mean();
    const double norm = f.l2_norm();
    if (norm > 0.0) f *= amplitude / norm;
    return f;
}

namespace {

SpectralField oscillating_data(const InitialDataSpec& spec, const GridSpec& grid,
                               InitialDataInfo* info) {
    const int n = grid.points_per_axis;
    const double ku = grid.freq_unit();
    const int mode = static_cast<int>(std::llround(1.0 / (spec.epsilon * ku)));
    if (mode < 1 || mode > grid.dealias_limit())
        throw std::invalid_argument(
            "oscillation unresolvable: carrier frequency outside the dealiased "
            "band");
    const double eps_eff = 1.0 / (ku * mode);
    if (info) {
        info->epsilon_effective = eps_eff;
        info->oscillation_mode = mode;
    }

    // Periodized Gaussian envelope phi centered in the box.
    const double w = spec.profile_width > 0.0 ? spec.profile_width
                                              : grid.box_length / 10.0;
    const double L = grid.box_length;
    const double h = L / n;
    const std::size_t total = grid.node_count();
    std::vector<double> phi(total);
    std::size_t idx = 0;
    for (int k0 = 0; k0 < n; ++k0)
        for (int k1 = 0; k1 < n; ++k1)
            for (int k2 = 0; k2 < n; ++k2, ++idx) {
                const double dx0 = k0 * h - 0.5 * L;
                const double dx1 = k1 * h - 0.5 * L;
                const double dx2 = k2 * h - 0.5 * L;
                phi[idx] = std::exp(-(dx0 * dx0 + dx1 * dx1 + dx2 * dx2) /
                                    (2.0 * w * w));
            }
    std::vector<std::vector<double>> one_comp{phi};
    SpectralField phi_hat = SpectralField::from_physical(grid, one_comp);

    // Envelope vector field (0, -d3 phi, d2 phi), truncated so the carrier
    // shift below cannot wrap past Nyquist (the tail it drops is Gaussian-
    // small by construction).
    const int band = std::min(grid.dealias_limit(), n / 2 - 1 - mode);
    if (band < 1)
        throw std::invalid_argument(
            "oscillation unresolvable: no room for the envelope next to the "
            "carrier");
    SpectralField env(grid, 3);
    const auto* ph = phi_hat.data(0);
    auto* w2 = env.data(1);
    auto* w3 = env.data(2);
    for_each_mode(grid, [&](std::size_t i, std::array<int, 3> m) {
        if (std::abs(m[0]) > band || std::abs(m[1]) > band ||
            std::abs(m[2]) > band)
            return;
        const std::complex<double> iu(0.0, 1.0);
        w2[i] = -iu * (ku * m[2]) * ph[i];
        w3[i] = iu * (ku * m[1]) * ph[i];
    });

    // Multiply by sin(x1/eps) exactly in spectral space: a +-mode shift along
    // axis 1. Keeps the divergence identically zero in floating point.
    const double pref =
        spec.amplitude * std::pow(eps_eff, 3.0 / spec.p_exponent - 1.0);
    SpectralField out(grid, 3);
    const std::complex<double> half_over_i(0.0, -0.5);  // 1/(2i)
    for (int c = 1; c < 3; ++c) {
        const auto* src = env.data(c);
        auto* dst = out.data(c);
        for_each_mode(grid, [&](std::size_t i, std::array<int, 3> m) {
            std::complex<double> acc = 0.0;
            const int lo = m[0] - mode;
            const int hi = m[0] + mode;
            const std::size_t tail = i % (static_cast<std::size_t>(n) * n);
            if (std::abs(lo) <= band) {
                const std::size_t src_idx =
                    static_cast<std::size_t>((lo + n) % n) *
                        static_cast<std::size_t>(n) * n +
                    tail;
                acc += src[src_idx];
            }
            if (std::abs(hi) <= band) {
                const std::size_t src_idx =
                    static_cast<std::size_t>((hi + n) % n) *
                        static_cast<std::size_t>(n) * n +
                    tail;
                acc -= src[src_idx];
            }
            dst[i] = pref * half_over_i * acc;
        });
    }
    out.zero_mean();
    return out;
}

}  // namespace

SpectralField make_initial_data(const InitialDataSpec& spec,
                                const GridSpec& grid, InitialDataInfo* info) {
    grid.validate();
    spec.validate(grid);
    switch (spec.kind) {
        case InitialDataSpec::Kind::gaussian_divfree: {
            // Spectral ring peak: 2*pi/profile_width, clamped inside the
            // dealiased band; defaults to 4 base frequencies.
            double kc = 4.0 * grid.freq_unit();
            if (spec.profile_width > 0.0)
                kc = std::min(2.0 * std::numbers::pi / spec.profile_width,
                              0.5 * grid.dealias_limit() * grid.freq_unit());
            return random_divfree_field(grid, spec.seed, spec.amplitude, kc);
        }
        case InitialDataSpec::Kind::oscillating:
            return oscillating_data(spec, grid, info);
        case InitialDataSpec::Kind::file: {
            SpectralField f = read_field(spec.path);
            if (!(f.grid() == grid))
                throw std::invalid_argument(
                    "file initial data has mismatched grid");
            f *= spec.amplitude;
            return f;
        }
    }
    throw std::logic_error("unreachable");
}

}  // namespace snsim
