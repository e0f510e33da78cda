#include "snsim/field.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "snsim/fft.hpp"

namespace snsim {

static_assert(std::endian::native == std::endian::little,
              "field files are little-endian");

SpectralField::SpectralField(const GridSpec& grid, int components)
    : grid_(grid), ncomp_(components) {
    grid_.validate();
    if (components < 1)
        throw std::invalid_argument("SpectralField: need at least 1 component");
    coeffs_.assign(static_cast<std::size_t>(components),
                   std::vector<std::complex<double>>(grid_.node_count()));
}

SpectralField SpectralField::from_physical(
    const GridSpec& grid, std::span<const std::vector<double>> comps) {
    SpectralField f(grid, static_cast<int>(comps.size()));
    const std::size_t total = grid.node_count();
    std::vector<std::complex<double>> buf(total);
    const double scale = 1.0 / static_cast<double>(total);
    for (std::size_t c = 0; c < comps.size(); ++c) {
        if (comps[c].size() != total)
            throw std::invalid_argument("from_physical: sample count mismatch");
        for (std::size_t i = 0; i < total; ++i) buf[i] = comps[c][i];
        fft::transform(grid, buf.data(), f.coeffs_[c].data(), -1);
        for (auto& z : f.coeffs_[c]) z *= scale;
    }
    f.enforce_conjugate_symmetry();
    f.zero_mean();
    return f;
}

std::vector<double> SpectralField::to_physical(int c) const {
    const std::size_t total = grid_.node_count();
    std::vector<std::complex<double>> buf(total);
    fft::transform(grid_, coeffs_[c].data(), buf.data(), +1);
    std::vector<double> out(total);
    for (std::size_t i = 0; i < total; ++i) out[i] = buf[i].real();
    return out;
}

SpectralField& SpectralField::operator*=(double a) {
    for (auto& comp : coeffs_)
        for (auto& z : comp) z *= a;
    return *this;
}

SpectralField& SpectralField::operator+=(const SpectralField& other) {
    add_scaled(other, 1.0);
    return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& other) {
    add_scaled(other, -1.0);
    return *this;
}

void SpectralField::add_scaled(const SpectralField& other, double a) {
    if (!same_shape(other))
        throw std::invalid_argument("field shape mismatch");
    for (int c = 0; c < ncomp_; ++c) {
        auto* dst = coeffs_[c].data();
        const auto* src = other.coeffs_[c].data();
        const std::size_t total = coeffs_[c].size();
        for (std::size_t i = 0; i < total; ++i) dst[i] += a * src[i];
    }
}

void SpectralField::zero_mean() {
    for (auto& comp : coeffs_) comp[0] = 0.0;
}

void SpectralField::enforce_conjugate_symmetry() {
    // Averages c(m) with conj(c(-m)); fixes roundoff drift after forward
    // transforms of physical products.
    const int n = grid_.points_per_axis;
    const int d = grid_.dimension;
    const std::size_t total = grid_.node_count();
    auto mirror = [&](std::size_t idx) {
        std::size_t rev = 0;
        if (d == 2) {
            const int k0 = static_cast<int>(idx) / n;
            const int k1 = static_cast<int>(idx) % n;
            rev = static_cast<std::size_t>(((n - k0) % n) * n + (n - k1) % n);
        } else {
            const int k2 = static_cast<int>(idx % static_cast<std::size_t>(n));
            const int rest = static_cast<int>(idx / static_cast<std::size_t>(n));
            const int k1 = rest % n;
            const int k0 = rest / n;
            rev = (static_cast<std::size_t>((n - k0) % n) * n + (n - k1) % n) * n +
                  (n - k2) % n;
        }
        return rev;
    };
    for (auto& comp : coeffs_) {
        for (std::size_t idx = 0; idx < total; ++idx) {
            const std::size_t rev = mirror(idx);
            if (rev < idx) continue;
            const auto a = comp[idx];
            const auto b = comp[rev];
            const std::complex<double> avg = 0.5 * (a + std::conj(b));
            comp[idx] = avg;
            comp[rev] = std::conj(avg);
        }
    }
}

void SpectralField::dealias() {
    const int lim = grid_.dealias_limit();
    for (int c = 0; c < ncomp_; ++c) {
        auto* a = coeffs_[c].data();
        for_each_mode(grid_, [&](std::size_t idx, std::array<int, 3> m) {
            if (std::abs(m[0]) > lim || std::abs(m[1]) > lim ||
                std::abs(m[2]) > lim)
                a[idx] = 0.0;
        });
    }
}

void SpectralField::apply_weights(int c, std::span<const double> w) {
    auto& comp = coeffs_[c];
    if (w.size() != comp.size())
        throw std::invalid_argument("apply_weights: size mismatch");
    for (std::size_t i = 0; i < comp.size(); ++i) comp[i] *= w[i];
}

void SpectralField::apply_weights_all(std::span<const double> w) {
    for (int c = 0; c < ncomp_; ++c) apply_weights(c, w);
}

double SpectralField::l2_norm() const {
    double sum = 0.0;
    for (const auto& comp : coeffs_)
        for (const auto& z : comp) sum += std::norm(z);
    return std::sqrt(sum * std::pow(grid_.box_length, grid_.dimension));
}

double SpectralField::lp_norm(double p) const {
    std::vector<std::vector<double>> phys;
    phys.reserve(static_cast<std::size_t>(ncomp_));
    for (int c = 0; c < ncomp_; ++c) phys.push_back(to_physical(c));
    const std::size_t total = grid_.node_count();
    double sum = 0.0;
    for (std::size_t i = 0; i < total; ++i) {
        double mag2 = 0.0;
        for (int c = 0; c < ncomp_; ++c) mag2 += phys[c][i] * phys[c][i];
        sum += std::pow(mag2, 0.5 * p);
    }
    return std::pow(sum * grid_.cell_volume(), 1.0 / p);
}

double SpectralField::linf_norm() const {
    std::vector<std::vector<double>> phys;
    phys.reserve(static_cast<std::size_t>(ncomp_));
    for (int c = 0; c < ncomp_; ++c) phys.push_back(to_physical(c));
    const std::size_t total = grid_.node_count();
    double best = 0.0;
    for (std::size_t i = 0; i < total; ++i) {
        double mag2 = 0.0;
        for (int c = 0; c < ncomp_; ++c) mag2 += phys[c][i] * phys[c][i];
        best = std::max(best, mag2);
    }
    return std::sqrt(best);
}

double SpectralField::inner_l2(const SpectralField& other) const {
    if (!same_shape(other))
        throw std::invalid_argument("inner_l2: field shape mismatch");
    double sum = 0.0;
    for (int c = 0; c < ncomp_; ++c) {
        const auto* a = coeffs_[c].data();
        const auto* b = other.coeffs_[c].data();
        const std::size_t total = coeffs_[c].size();
        for (std::size_t i = 0; i < total; ++i)
            sum += (a[i] * std::conj(b[i])).real();
    }
    return sum * std::pow(grid_.box_length, grid_.dimension);
}

std::vector<double> pointwise_product(std::span<const double> a,
                                      std::span<const double> b) {
    if (a.size() != b.size())
        throw std::invalid_argument("pointwise_product: size mismatch");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
    return out;
}

void write_field(const SpectralField& f, const std::string& basepath) {
    nlohmann::json sidecar{
        {"dimension", f.grid().dimension},
        {"points_per_axis", f.grid().points_per_axis},
        {"box_length", f.grid().box_length},
        {"components", f.components()},
        {"dtype", "complex128"},
        {"byte_order", "little"},
        {"layout", "row-major FFTW bin order, component-major"},
        {"zero_mode_policy", "zeroed"},
    };
    std::ofstream js(basepath + ".json");
    js << sidecar.dump(2) << "\n";

    std::ofstream bin(basepath + ".bin", std::ios::binary);
    if (!bin) throw std::runtime_error("write_field: cannot open " + basepath);
    for (int c = 0; c < f.components(); ++c)
        bin.write(reinterpret_cast<const char*>(f.data(c)),
                  static_cast<std::streamsize>(f.node_count() *
                                               sizeof(std::complex<double>)));
}

SpectralField read_field(const std::string& basepath) {
    std::ifstream js(basepath + ".json");
    if (!js) throw std::runtime_error("read_field: missing sidecar for " + basepath);
    nlohmann::json sidecar = nlohmann::json::parse(js);
    GridSpec grid{sidecar.at("dimension").get<int>(),
                  sidecar.at("points_per_axis").get<int>(),
                  sidecar.at("box_length").get<double>()};
    const int ncomp = sidecar.at("components").get<int>();
    if (sidecar.at("dtype").get<std::string>() != "complex128")
        throw std::runtime_error("read_field: unsupported dtype");

    SpectralField f(grid, ncomp);
    std::ifstream bin(basepath + ".bin", std::ios::binary);
    if (!bin) throw std::runtime_error("read_field: missing binary for " + basepath);
    for (int c = 0; c < ncomp; ++c)
        bin.read(reinterpret_cast<char*>(f.data(c)),
                 static_cast<std::streamsize>(f.node_count() *
                                              sizeof(std::complex<double>)));
    if (!bin) throw std::runtime_error("read_field: truncated binary");
    f.enforce_conjugate_symmetry();
    f.zero_mean();
    return f;
}

}  // namespace snsim
