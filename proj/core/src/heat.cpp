#include "snsim/heat.hpp"

#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>
#include <stdexcept>

#include "snsim/field_ops.hpp"
#include "snsim/rng.hpp"

namespace snsim {
namespace {

// Shared table cache for per-mode multipliers that repeat across steps and
// Monte Carlo paths (same grid, same t). Cleared wholesale when it grows
// past the cap.
class TableCache {
public:
    using Key = std::tuple<int, int, double, double, int>;

    std::shared_ptr<const std::vector<double>> get(
        const GridSpec& grid, double t, int which,
        const std::function<std::vector<double>()>& make) {
        const Key key{grid.dimension, grid.points_per_axis, grid.box_length, t,
                      which};
        std::lock_guard lock(mutex_);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
        if (cache_.size() > 256) cache_.clear();
        auto table = std::make_shared<const std::vector<double>>(make());
        cache_.emplace(key, table);
        return table;
    }

    static TableCache& instance() {
        static TableCache cache;
        return cache;
    }

private:
    std::mutex mutex_;
    std::map<Key, std::shared_ptr<const std::vector<double>>> cache_;
};

std::vector<double> build_isotropic_table(
    const GridSpec& grid, const std::function<double(double)>& f) {
    std::vector<double> table(grid.node_count());
    const double ku = grid.freq_unit();
    for_each_mode(grid, [&](std::size_t idx, std::array<int, 3> m) {
        const double k2 = ku * ku *
                          (static_cast<double>(m[0]) * m[0] +
                           static_cast<double>(m[1]) * m[1] +
                           static_cast<double>(m[2]) * m[2]);
        table[idx] = f(k2);
    });
    return table;
}

std::shared_ptr<const std::vector<double>> heat_table(const GridSpec& grid,
                                                      double t) {
    return TableCache::instance().get(grid, t, 0, [&] {
        return build_isotropic_table(
            grid, [t](double k2) { return std::exp(-t * k2); });
    });
}

}  // namespace

SpectralField heat_semigroup(SpectralField u, double t) {
    if (t < 0.0) throw std::invalid_argument("heat_semigroup: t must be >= 0");
    if (t == 0.0) return u;
    u.apply_weights_all(*heat_table(u.grid(), t));
    return u;
}

void apply_heat_step(SpectralField& u, double dt) {
    u.apply_weights_all(*heat_table(u.grid(), dt));
}

namespace {

// phi1(z) = (1 - e^-z)/z and phi2(z) = (z - 1 + e^-z)/z^2, the exponential
// trapezoid weights; series below z ~ 1e-3 to dodge cancellation.
double phi1(double z) {
    if (z < 1e-3) return 1.0 - z / 2.0 + z * z / 6.0 - z * z * z / 24.0;
    return -std::expm1(-z) / z;
}

double phi2(double z) {
    if (z < 1e-3) return 0.5 - z / 6.0 + z * z / 24.0 - z * z * z / 120.0;
    return (z - 1.0 + std::exp(-z)) / (z * z);
}

// One ETD2 step per mode: u <- e^-z u + dt [(phi1-phi2) f_m + phi2 f_{m+1}],
// with the three weight tables cached per (grid, dt).
void etd2_step(SpectralField& u, const SpectralField& f_lo,
               const SpectralField& f_hi, double dt) {
    const GridSpec& grid = u.grid();
    auto& cache = TableCache::instance();
    const auto decay = cache.get(grid, dt, 1, [&] {
        return build_isotropic_table(
            grid, [dt](double k2) { return std::exp(-k2 * dt); });
    });
    const auto w_lo = cache.get(grid, dt, 2, [&] {
        return build_isotropic_table(grid, [dt](double k2) {
            const double z = k2 * dt;
            return dt * (phi1(z) - phi2(z));
        });
    });
    const auto w_hi = cache.get(grid, dt, 3, [&] {
        return build_isotropic_table(grid, [dt](double k2) {
            return dt * phi2(k2 * dt);
        });
    });
    const std::size_t total = grid.node_count();
    for (int c = 0; c < u.components(); ++c) {
        auto* a = u.data(c);
        const auto* lo = f_lo.data(c);
        const auto* hi = f_hi.data(c);
        for (std::size_t i = 0; i < total; ++i)
            a[i] = (*decay)[i] * a[i] + (*w_lo)[i] * lo[i] + (*w_hi)[i] * hi[i];
    }
}

}  // namespace

Trajectory duhamel_solve_nodes(const SpectralField& u0,
                               std::span<const SpectralField> forcing_nodes,
                               const TimeGrid& tg) {
    tg.validate();
    if (forcing_nodes.size() != static_cast<std::size_t>(tg.node_count()))
        throw std::invalid_argument("duhamel_solve: forcing node count mismatch");
    Trajectory out;
    out.tg = tg;
    out.nodes.reserve(forcing_nodes.size());
    out.nodes.push_back(u0);
    const double dt = tg.dt();
    SpectralField state = u0;
    for (int m = 0; m < tg.n_steps; ++m) {
        etd2_step(state, forcing_nodes[static_cast<std::size_t>(m)],
                  forcing_nodes[static_cast<std::size_t>(m) + 1], dt);
        out.nodes.push_back(state);
    }
    return out;
}

Trajectory duhamel_solve(const SpectralField& u0,
                         const std::function<SpectralField(double)>& forcing,
                         const TimeGrid& tg) {
    tg.validate();
    std::vector<SpectralField> nodes;
    nodes.reserve(static_cast<std::size_t>(tg.node_count()));
    for (int m = 0; m <= tg.n_steps; ++m) nodes.push_back(forcing(tg.time(m)));
    return duhamel_solve_nodes(u0, nodes, tg);
}

Trajectory bilinear_B(const Trajectory& u, const Trajectory& v) {
    if (!(u.tg == v.tg))
        throw std::invalid_argument("bilinear_B: trajectories on different grids");
    if (u.nodes.size() != v.nodes.size() ||
        u.nodes.size() != static_cast<std::size_t>(u.tg.node_count()))
        throw std::invalid_argument("bilinear_B: node count mismatch");

    Trajectory out;
    out.tg = u.tg;
    out.nodes.reserve(u.nodes.size());
    SpectralField state(u.nodes[0].grid(), u.nodes[0].components());
    out.nodes.push_back(state);
    const double dt = u.tg.dt();
    SpectralField f_prev = -1.0 * nonlinear_term(u.nodes[0], v.nodes[0]);
    for (int m = 0; m < u.tg.n_steps; ++m) {
        SpectralField f_next =
            -1.0 * nonlinear_term(u.nodes[static_cast<std::size_t>(m) + 1],
                                  v.nodes[static_cast<std::size_t>(m) + 1]);
        etd2_step(state, f_prev, f_next, dt);
        out.nodes.push_back(state);
        f_prev = std::move(f_next);
    }
    return out;
}

ShellDecayFit annulus_decay_check(int j, const DyadicPartition& P, double p_exp,
                                  int samples, std::uint64_t seed) {
    if (!P.has_shell(j))
        throw std::out_of_range("annulus_decay_check: shell out of range");
    const auto& w = P.filter(j);
    bool populated = false;
    for (double v : w)
        if (v != 0.0) {
            populated = true;
            break;
        }
    if (!populated)
        throw std::invalid_argument("annulus_decay_check: shell empty on grid");

    const GridSpec& grid = P.grid;
    const double four_j = std::pow(4.0, j);
    constexpr int n_times = 20;
    std::vector<double> times(n_times);
    for (int i = 0; i < n_times; ++i)
        times[i] = std::pow(10.0, -2.0 + 2.0 * i / (n_times - 1)) / four_j;

    // Least-squares slope of log ||e^{t Delta} Delta_j u||_{L^p} vs t, pooled
    // over the ensemble, then the envelope constant against the fitted rate.
    double sxx = 0.0, sxy = 0.0, sx = 0.0, sy = 0.0;
    int count = 0;
    std::vector<std::vector<double>> curves;
    std::vector<double> base_norms;
    for (int s = 0; s < samples; ++s) {
        // White noise filtered to the shell: every annulus mode carries mass.
        const std::uint64_t member_seed =
            derive_seed(seed, "annulus-decay", static_cast<std::uint64_t>(s));
        std::vector<std::vector<double>> phys(
            static_cast<std::size_t>(grid.dimension),
            std::vector<double>(grid.node_count()));
        for (int c = 0; c < grid.dimension; ++c) {
            CounterRng rng(member_seed, "shell-noise",
                           static_cast<std::uint64_t>(c));
            for (auto& x : phys[static_cast<std::size_t>(c)]) x = rng.gaussian();
        }
        SpectralField u =
            dyadic_block(SpectralField::from_physical(grid, phys), j, P);
        const double base = u.lp_norm(p_exp);
        if (base == 0.0) continue;
        std::vector<double> curve(n_times);
        for (int i = 0; i < n_times; ++i) {
            curve[i] = heat_semigroup(u, times[i]).lp_norm(p_exp);
            const double x = times[i] * four_j;
            const double y = std::log(curve[i] / base);
            sxx += x * x;
            sxy += x * y;
            sx += x;
            sy += y;
            ++count;
        }
        curves.push_back(std::move(curve));
        base_norms.push_back(base);
    }
    if (count == 0)
        throw std::invalid_argument("annulus_decay_check: ensemble degenerate");

    const double slope =
        (count * sxy - sx * sy) / (count * sxx - sx * sx);
    const double rate = -slope;
    double envelope = 1.0;  // t = 0 forces C >= 1
    for (std::size_t s = 0; s < curves.size(); ++s)
        for (int i = 0; i < n_times; ++i)
            envelope = std::max(envelope,
                                curves[s][static_cast<std::size_t>(i)] /
                                    (base_norms[s] *
                                     std::exp(-rate * times[static_cast<std::size_t>(i)] * four_j)));

    ShellDecayFit fit;
    fit.shell = j;
    fit.envelope_constant = envelope;
    fit.rate = rate;
    fit.sample_count = static_cast<int>(curves.size());
    fit.seed = seed;
    return fit;
}

}  // namespace snsim
