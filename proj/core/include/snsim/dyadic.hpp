#pragma once

#include <string>
#include <vector>

#include "snsim/field.hpp"
#include "snsim/grid.hpp"

namespace snsim {

/// Dyadic filter bank: radial filters phi_j sampled at every grid frequency,
/// each supported in the annulus 2^j * [3/4, 8/3] and normalized so that the
/// family sums to exactly 1 at every nonzero frequency (the out-of-range tail
/// is truncated, so the exact sum is only guaranteed on the inner band).
struct DyadicPartition {
    GridSpec grid;
    int j_min = 0;
    int j_max = 0;
    static constexpr double ring_inner = 0.75;
    static constexpr double ring_outer = 8.0 / 3.0;
    std::vector<std::vector<double>> filter_values;  // [j - j_min][node]

    int shell_count() const { return j_max - j_min + 1; }
    bool has_shell(int j) const { return j >= j_min && j <= j_max; }
    const std::vector<double>& filter(int j) const {
        return filter_values[static_cast<std::size_t>(j - j_min)];
    }

    /// Wavenumber band on which every contributing shell is in range, so the
    /// truncated sum is an exact partition of unity: [2^{j_min+1}, 2^{j_max-1}].
    double band_lo() const { return std::ldexp(1.0, j_min + 1); }
    double band_hi() const { return std::ldexp(1.0, j_max - 1); }

    /// Max |sum_j phi_j(xi) - 1| over grid frequencies in the band above.
    double partition_residual() const;

    /// Diagnostic dump: per-shell annulus bounds and residual statistics.
    std::string diagnostics_json() const;
};

/// Builds the filter bank for a grid. Throws std::invalid_argument
/// ("insufficient resolution") when fewer than 3 shells fit.
DyadicPartition build_partition(const GridSpec& grid);

/// Frequency localization to shell j. Throws if j is out of range.
SpectralField dyadic_block(const SpectralField& u, int j,
                           const DyadicPartition& P);

/// Sum of blocks strictly below j; the zero field for j <= j_min.
SpectralField low_freq_sum(const SpectralField& u, int j,
                           const DyadicPartition& P);

}  // namespace snsim
