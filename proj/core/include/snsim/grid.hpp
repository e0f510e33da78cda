#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>

namespace snsim {

/// Periodic computational box [0,L]^d sampled on a uniform n^d grid.
struct GridSpec {
    int dimension = 2;
    int points_per_axis = 64;
    double box_length = 2.0 * std::numbers::pi;

    void validate() const {
        if (dimension != 2 && dimension != 3)
            throw std::invalid_argument("GridSpec: dimension must be 2 or 3");
        const int n = points_per_axis;
        if (n < 16 || (n & (n - 1)) != 0)
            throw std::invalid_argument(
                "insufficient resolution: points_per_axis must be a power of "
                "two >= 16");
        if (!(box_length > 0.0))
            throw std::invalid_argument("GridSpec: box_length must be positive");
    }

    std::size_t node_count() const {
        std::size_t n = static_cast<std::size_t>(points_per_axis);
        std::size_t total = n;
        for (int i = 1; i < dimension; ++i) total *= n;
        return total;
    }

    double cell_volume() const {
        return std::pow(box_length / points_per_axis, dimension);
    }

    /// Smallest nonzero wavenumber magnitude, 2*pi/L.
    double freq_unit() const { return 2.0 * std::numbers::pi / box_length; }

    /// Largest wavenumber along one axis (Nyquist), freq_unit * n/2.
    double nyquist() const { return freq_unit() * (points_per_axis / 2); }

    /// Sharp 2/3-rule bound: integer mode indices with |m_i| <= this survive
    /// pointwise products without in-band aliasing.
    int dealias_limit() const { return points_per_axis / 3; }

    bool operator==(const GridSpec&) const = default;
};

/// Signed integer frequency of FFT bin k on an n-point axis (Nyquist -> -n/2).
inline int freq_of_bin(int k, int n) { return k < (n + 1) / 2 ? k : k - n; }

/// Visits every grid mode as f(flat_index, m) with m the signed integer
/// frequency vector (third entry 0 in 2-D). Row-major FFTW layout.
template <class F>
void for_each_mode(const GridSpec& g, F&& f) {
    const int n = g.points_per_axis;
    if (g.dimension == 2) {
        std::size_t idx = 0;
        for (int k0 = 0; k0 < n; ++k0) {
            const int m0 = freq_of_bin(k0, n);
            for (int k1 = 0; k1 < n; ++k1, ++idx)
                f(idx, std::array<int, 3>{m0, freq_of_bin(k1, n), 0});
        }
    } else {
        std::size_t idx = 0;
        for (int k0 = 0; k0 < n; ++k0) {
            const int m0 = freq_of_bin(k0, n);
            for (int k1 = 0; k1 < n; ++k1) {
                const int m1 = freq_of_bin(k1, n);
                for (int k2 = 0; k2 < n; ++k2, ++idx)
                    f(idx, std::array<int, 3>{m0, m1, freq_of_bin(k2, n)});
            }
        }
    }
}

}  // namespace snsim
