#pragma once

#include <complex>
#include <span>
#include <vector>

#include "snsim/grid.hpp"

namespace snsim {

/// Real vector field on the periodic grid, stored as complex Fourier
/// coefficients in FFTW bin order, one array per component. Two invariants
/// are maintained by every constructor and mutation helper here: the
/// coefficients are conjugate-symmetric (the physical samples are real) and
/// the zero mode is exactly 0, i.e. all fields live in the mean-free sector.
class SpectralField {
public:
    SpectralField() = default;
    SpectralField(const GridSpec& grid, int components);

    /// Forward-transforms real physical samples (one vector per component).
    static SpectralField from_physical(const GridSpec& grid,
                                       std::span<const std::vector<double>> comps);

    const GridSpec& grid() const { return grid_; }
    int components() const { return ncomp_; }
    std::size_t node_count() const { return grid_.node_count(); }
    bool empty() const { return ncomp_ == 0; }

    std::complex<double>* data(int c) { return coeffs_[c].data(); }
    const std::complex<double>* data(int c) const { return coeffs_[c].data(); }
    std::complex<double>& at(int c, std::size_t idx) { return coeffs_[c][idx]; }
    const std::complex<double>& at(int c, std::size_t idx) const {
        return coeffs_[c][idx];
    }

    /// Inverse transform of one component; imaginary parts are discarded
    /// (they are roundoff once the symmetry invariant holds).
    std::vector<double> to_physical(int c) const;

    // -- algebra ------------------------------------------------------------
    SpectralField& operator*=(double a);
    SpectralField& operator+=(const SpectralField& other);
    SpectralField& operator-=(const SpectralField& other);
    void add_scaled(const SpectralField& other, double a);  // this += a*other

    friend SpectralField operator*(double a, SpectralField f) {
        f *= a;
        return f;
    }
    friend SpectralField operator+(SpectralField a, const SpectralField& b) {
        a += b;
        return a;
    }
    friend SpectralField operator-(SpectralField a, const SpectralField& b) {
        a -= b;
        return a;
    }

    // -- invariant enforcement ----------------------------------------------
    void zero_mean();
    void enforce_conjugate_symmetry();
    /// Sharp 2/3-rule truncation: zeroes every mode with |m_i| > n/3.
    void dealias();

    // -- multipliers ----------------------------------------------------------
    /// Multiplies every coefficient by f(|xi|^2), f real-valued.
    template <class F>
    void apply_isotropic_multiplier(F&& f) {
        const double ku = grid_.freq_unit();
        for (int c = 0; c < ncomp_; ++c) {
            auto* a = coeffs_[c].data();
            for_each_mode(grid_, [&](std::size_t idx, std::array<int, 3> m) {
                const double k2 =
                    ku * ku *
                    (static_cast<double>(m[0]) * m[0] +
                     static_cast<double>(m[1]) * m[1] +
                     static_cast<double>(m[2]) * m[2]);
                a[idx] *= f(k2);
            });
        }
    }

    /// Multiplies component c pointwise by real weights (spectral space).
    void apply_weights(int c, std::span<const double> w);
    /// Same table applied to every component.
    void apply_weights_all(std::span<const double> w);

    // -- norms ----------------------------------------------------------------
    double l2_norm() const;  // Parseval route, exact for the rectangle rule
    double lp_norm(double p) const;  // physical quadrature of |u(x)|_2
    double linf_norm() const;
    double inner_l2(const SpectralField& other) const;

    bool same_shape(const SpectralField& other) const {
        return grid_ == other.grid_ && ncomp_ == other.ncomp_;
    }

private:
    GridSpec grid_{};
    int ncomp_ = 0;
    std::vector<std::vector<std::complex<double>>> coeffs_;
};

/// Pointwise physical-space product of two sample arrays.
std::vector<double> pointwise_product(std::span<const double> a,
                                      std::span<const double> b);

/// Raw little-endian complex128 dump plus a JSON sidecar with grid metadata
/// and component order; writes <basepath>.bin and <basepath>.json.
void write_field(const SpectralField& f, const std::string& basepath);
SpectralField read_field(const std::string& basepath);

}  // namespace snsim
