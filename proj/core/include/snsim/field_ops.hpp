#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "snsim/field.hpp"

namespace snsim {

/// Frequency-wise projection onto divergence-free fields, I - xi xi^T/|xi|^2
/// (zero mode left at 0).
SpectralField leray_project(SpectralField u);

/// Spectral divergence; exact on band-limited fields. Returns a 1-component
/// field. Nyquist planes are zeroed (the odd multiplier has no real
/// counterpart there).
SpectralField divergence(const SpectralField& u);

/// P div(u (x) v): pointwise tensor product in physical space under the
/// 2/3 rule, divergence taken spectrally, then the Leray projection.
SpectralField nonlinear_term(const SpectralField& u, const SpectralField& v);

struct InitialDataSpec {
    enum class Kind { gaussian_divfree, oscillating, file };
    Kind kind = Kind::gaussian_divfree;
    double amplitude = 1.0;
    double epsilon = 0.25;       // oscillation scale, oscillating only
    double p_exponent = 6.0;     // sets the eps^{3/p-1} prefactor
    double profile_width = 0.0;  // envelope scale; 0 -> L/10 default
    std::uint64_t seed = 1;
    std::string path;  // kind == file

    void validate(const GridSpec& grid) const;
};

struct InitialDataInfo {
    double epsilon_effective = 0.0;
    int oscillation_mode = 0;
};

/// Builds a real divergence-free initial field. For the oscillating kind,
/// 1/epsilon is snapped to the nearest integer grid frequency (recorded in
/// info) so the carrier is exactly periodic; the field follows the curl form
/// amp * eps^{3/p-1} sin(x1/eps) (0, -d3 phi, d2 phi) with a periodized
/// Gaussian envelope phi. Throws "oscillation unresolvable" when the snapped
/// carrier falls outside the dealiased band.
SpectralField make_initial_data(const InitialDataSpec& spec,
                                const GridSpec& grid,
                                InitialDataInfo* info = nullptr);

/// Seed-deterministic smooth divergence-free field (spectral Gaussian noise
/// under a radial envelope, Leray-projected and dealiased). spectral_center
/// sets the wavenumber where the envelope peaks.
SpectralField random_divfree_field(const GridSpec& grid, std::uint64_t seed,
                                   double amplitude, double spectral_center);

}  // namespace snsim
