#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>

#include "snsim/experiment.hpp"
#include "snsim/rng.hpp"

namespace snsim {
namespace {

using Check = std::function<std::pair<bool, std::string>()>;

std::string num(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

// Oscillatory profile under a Gaussian envelope, dilated by lambda as
// lambda * f(lambda x); both scales stay resolved for lambda <= 2 when the
// base oscillation uses 1/16 of the axis modes.
SpectralField scaling_profile(const GridSpec& grid, double lambda) {
    const int n = grid.points_per_axis;
    const double L = grid.box_length;
    const double h = L / n;
    const double m0 = (n / 16) * grid.freq_unit();
    const double w = L / 12.0;
    const double cx = 0.5 * L;
    const std::size_t total = grid.node_count();
    std::vector<double> vals(total);
    const int planes = grid.dimension == 2 ? 1 : n;
    std::size_t idx = 0;
    for (int k0 = 0; k0 < n; ++k0)
        for (int k1 = 0; k1 < n; ++k1)
            for (int k2 = 0; k2 < planes; ++k2, ++idx) {
                const double x0 = k0 * h, x1 = k1 * h, x2 = k2 * h;
                double r2 = (lambda * x0 - cx) * (lambda * x0 - cx) +
                            (lambda * x1 - cx) * (lambda * x1 - cx);
                if (grid.dimension == 3)
                    r2 += (lambda * x2 - cx) * (lambda * x2 - cx);
                vals[idx] = lambda * std::sin(m0 * lambda * x0) *
                            std::exp(-r2 / (2.0 * w * w));
            }
    std::vector<std::vector<double>> comps(
        static_cast<std::size_t>(grid.dimension));
    comps[0] = std::move(vals);
    for (int c = 1; c < grid.dimension; ++c)
        comps[static_cast<std::size_t>(c)].assign(total, 0.0);
    return SpectralField::from_physical(grid, comps);
}

SpectralField gradient_field(const GridSpec& grid, std::uint64_t seed) {
    // grad of a random scalar: the Leray projection must annihilate it.
    std::vector<std::vector<double>> one(1, std::vector<double>(grid.node_count()));
    CounterRng rng(seed, "grad-scalar");
    for (auto& x : one[0]) x = rng.gaussian();
    SpectralField psi = SpectralField::from_physical(grid, one);
    psi.apply_isotropic_multiplier([](double k2) { return std::exp(-0.5 * k2); });
    psi.dealias();
    SpectralField grad(grid, grid.dimension);
    const double ku = grid.freq_unit();
    const int nyq = -grid.points_per_axis / 2;
    for (int c = 0; c < grid.dimension; ++c) {
        auto* dst = grad.data(c);
        const auto* src = psi.data(0);
        for_each_mode(grid, [&](std::size_t idx, std::array<int, 3> m) {
            if (m[0] == nyq || m[1] == nyq || m[2] == nyq) return;
            dst[idx] = std::complex<double>(0.0, ku * m[c]) * src[idx];
        });
    }
    return grad;
}

}  // namespace

std::vector<SuiteResult> run_verify(const ExperimentConfig& config,
                                    const VerifyOptions& opts) {
    const GridSpec grid = config.grid;
    grid.validate();
    DyadicPartition P = build_partition(grid);
    if (opts.corrupt_partition) {
        auto& mid = P.filter_values[static_cast<std::size_t>(P.shell_count() / 2)];
        for (auto& v : mid)
            if (v > 0.1) v *= 1.01;
    }
    const BesovParams besov = config.solver.besov;
    const std::uint64_t seed = config.master_seed;
    const double ku = grid.freq_unit();

    auto field = [&](std::uint64_t i, double amp = 1.0) {
        return random_divfree_field(grid, derive_seed(seed, "verify-field", i),
                                    amp, 4.0 * ku);
    };

    std::vector<SuiteResult> results;
    auto add = [&](const char* name, const char* property, const Check& fn) {
        SuiteResult r;
        r.name = name;
        r.property = property;
        try {
            auto [ok, details] = fn();
            r.passed = ok;
            r.details = details;
        } catch (const std::exception& e) {
            r.passed = false;
            r.details = std::string("exception: ") + e.what();
        }
        results.push_back(std::move(r));
    };

    add("partition_of_unity",
        "sum_j phi(2^-j xi) = 1 on the resolvable band, residual <= 1e-10",
        [&]() -> std::pair<bool, std::string> {
            const double res = P.partition_residual();
            return {res <= 1e-10 && P.shell_count() >= 3,
                    "residual=" + num(res) +
                        " shells=" + std::to_string(P.shell_count())};
        });

    add("filter_almost_orthogonality",
        "filters two or more shells apart have pointwise product zero",
        [&]() -> std::pair<bool, std::string> {
            double worst = 0.0;
            for (int a = P.j_min; a <= P.j_max; ++a)
                for (int b = a + 2; b <= P.j_max; ++b) {
                    const auto& fa = P.filter(a);
                    const auto& fb = P.filter(b);
                    for (std::size_t i = 0; i < fa.size(); ++i)
                        worst = std::max(worst, std::abs(fa[i] * fb[i]));
                }
            return {worst == 0.0, "max product=" + num(worst)};
        });

    add("filter_support",
        "each filter is nonnegative and supported in 2^j [3/4, 8/3]",
        [&]() -> std::pair<bool, std::string> {
            bool ok = true;
            for (int j = P.j_min; j <= P.j_max && ok; ++j) {
                const auto& f = P.filter(j);
                const double lo = DyadicPartition::ring_inner * std::ldexp(1.0, j);
                const double hi = DyadicPartition::ring_outer * std::ldexp(1.0, j);
                for_each_mode(grid, [&](std::size_t i, std::array<int, 3> m) {
                    if (f[i] == 0.0) return;
                    const double rho =
                        ku * std::sqrt(static_cast<double>(m[0]) * m[0] +
                                       static_cast<double>(m[1]) * m[1] +
                                       static_cast<double>(m[2]) * m[2]);
                    if (f[i] < 0.0 || rho < lo || rho > hi) ok = false;
                });
            }
            return {ok, ""};
        });

    add("besov_homogeneity", "||a u|| = |a| ||u|| to 1e-12 relative",
        [&]() -> std::pair<bool, std::string> {
            const SpectralField u = field(1);
            const double a = -3.7;
            const double lhs = besov_norm(a * SpectralField(u), besov, P);
            const double rhs = std::abs(a) * besov_norm(u, besov, P);
            const double rel = std::abs(lhs - rhs) / rhs;
            return {rel <= 1e-12, "rel=" + num(rel)};
        });

    add("besov_triangle", "||u+v|| <= ||u|| + ||v|| + 1e-10",
        [&]() -> std::pair<bool, std::string> {
            double worst = -1.0;
            for (std::uint64_t i = 0; i < 20; ++i) {
                const SpectralField u = field(100 + 2 * i);
                const SpectralField v = field(101 + 2 * i);
                const double gap = besov_norm(u + v, besov, P) -
                                   besov_norm(u, besov, P) -
                                   besov_norm(v, besov, P);
                worst = std::max(worst, gap);
            }
            return {worst <= 1e-10, "max gap=" + num(worst)};
        });

    add("besov_r_monotonicity",
        "the norm is nonincreasing in the summability exponent r",
        [&]() -> std::pair<bool, std::string> {
            const SpectralField u = field(2);
            double prev = std::numeric_limits<double>::infinity();
            bool ok = true;
            for (double r : {2.0, 3.0, 4.0, 8.0}) {
                BesovParams p = besov;
                p.r = r;
                const double v = besov_norm(u, p, P);
                if (v > prev * (1.0 + 1e-12)) ok = false;
                prev = v;
            }
            return {ok, ""};
        });

    add("besov_critical_scaling",
        "||lambda f(lambda .)|| at s = d/p - 1 is scale-free to 2%",
        [&]() -> std::pair<bool, std::string> {
            BesovParams crit = besov;
            crit.s = grid.dimension / crit.p - 1.0;
            const double n1 = besov_norm(scaling_profile(grid, 1.0), crit, P);
            const double n2 = besov_norm(scaling_profile(grid, 2.0), crit, P);
            const double rel = std::abs(n2 / n1 - 1.0);
            return {rel <= 0.02, "rel=" + num(rel)};
        });

    add("leray_projector",
        "P kills gradients, is the identity on its range, and is idempotent",
        [&]() -> std::pair<bool, std::string> {
            double worst_grad = 0.0, worst_idem = 0.0, worst_div = 0.0;
            for (std::uint64_t i = 0; i < 100; ++i) {
                const SpectralField g = gradient_field(grid, 500 + i);
                worst_grad = std::max(
                    worst_grad, leray_project(g).l2_norm() /
                                    std::max(1e-300, g.l2_norm()));
                const SpectralField u = field(700 + i);
                const SpectralField pu = leray_project(u);
                worst_div = std::max(worst_div,
                                     divergence(pu).l2_norm() /
                                         std::max(1e-300, u.l2_norm()));
                worst_idem = std::max(
                    worst_idem, (leray_project(pu) - pu).l2_norm() /
                                    std::max(1e-300, pu.l2_norm()));
            }
            const bool ok =
                worst_grad <= 1e-10 && worst_div <= 1e-10 && worst_idem <= 1e-12;
            return {ok, "grad=" + num(worst_grad) + " div=" + num(worst_div) +
                            " idem=" + num(worst_idem)};
        });

    add("leray_l2_nonexpansive", "||P u||_{L^2} <= ||u||_{L^2}",
        [&]() -> std::pair<bool, std::string> {
            bool ok = true;
            for (std::uint64_t i = 0; i < 20; ++i) {
                SpectralField u = field(900 + i);
                u += gradient_field(grid, 950 + i);
                if (leray_project(u).l2_norm() > u.l2_norm() * (1.0 + 1e-12))
                    ok = false;
            }
            return {ok, ""};
        });

    add("nonlinear_bilinearity",
        "the tensor term is linear in each argument to 1e-12 relative",
        [&]() -> std::pair<bool, std::string> {
            const SpectralField u = field(3), v = field(4);
            const SpectralField a = nonlinear_term(2.5 * SpectralField(u), v);
            const SpectralField b = 2.5 * nonlinear_term(u, v);
            const double rel =
                (a - b).l2_norm() / std::max(1e-300, b.l2_norm());
            return {rel <= 1e-12, "rel=" + num(rel)};
        });

    add("nonlinear_energy_orthogonality",
        "<P div(u x u), u>_{L^2} vanishes for divergence-free u (dealiased)",
        [&]() -> std::pair<bool, std::string> {
            double worst = 0.0;
            for (std::uint64_t i = 0; i < 20; ++i) {
                SpectralField u = field(1100 + i);
                u.dealias();
                const SpectralField nl = nonlinear_term(u, u);
                const double rel = std::abs(nl.inner_l2(u)) /
                                   std::max(1e-300, nl.l2_norm() * u.l2_norm());
                worst = std::max(worst, rel);
            }
            return {worst <= 1e-8, "max rel=" + num(worst)};
        });

    add("heat_semigroup",
        "e^{sA} e^{tA} = e^{(s+t)A}, monotone L^2 decay, identity at t = 0",
        [&]() -> std::pair<bool, std::string> {
            const SpectralField u = field(5);
            const SpectralField a = heat_semigroup(heat_semigroup(u, 0.3), 0.45);
            const SpectralField b = heat_semigroup(u, 0.75);
            const double rel = (a - b).l2_norm() / b.l2_norm();
            bool monotone = true;
            double prev = u.l2_norm();
            for (int i = 1; i <= 10; ++i) {
                const double cur = heat_semigroup(u, 0.05 * i).l2_norm();
                if (cur > prev * (1.0 + 1e-12)) monotone = false;
                prev = cur;
            }
            const double ident = (heat_semigroup(u, 0.0) - u).l2_norm();
            return {rel <= 1e-12 && monotone && ident == 0.0,
                    "semigroup rel=" + num(rel)};
        });

    add("duhamel_linearity",
        "the heat response is linear in (u0, f) to 1e-12 relative",
        [&]() -> std::pair<bool, std::string> {
            const TimeGrid tg{0.25, 16};
            const SpectralField ua = field(6), ub = field(7);
            const SpectralField fa = field(8), fb = field(9);
            auto constant = [](const SpectralField& f) {
                return [f](double) { return f; };
            };
            const Trajectory a = duhamel_solve(ua, constant(fa), tg);
            const Trajectory b = duhamel_solve(ub, constant(fb), tg);
            const Trajectory ab = duhamel_solve(ua + ub, constant(fa + fb), tg);
            double worst = 0.0;
            for (std::size_t m = 0; m < ab.nodes.size(); ++m) {
                const SpectralField sum = a.nodes[m] + b.nodes[m];
                worst = std::max(worst, (ab.nodes[m] - sum).l2_norm() /
                                            std::max(1e-300, sum.l2_norm()));
            }
            return {worst <= 1e-12, "max rel=" + num(worst)};
        });

    add("wiener_moments",
        "W(T) has mean 0, variance T, and orthogonal modes decorrelate (3 SE)",
        [&]() -> std::pair<bool, std::string> {
            const TimeGrid tg{0.7, 50};
            const int paths = 2000;
            double sum0 = 0, sum00 = 0, sum1 = 0, sum11 = 0, cross = 0;
            for (int i = 0; i < paths; ++i) {
                const WienerPath w = sample_wiener(
                    derive_seed(seed, "verify-wiener",
                                static_cast<std::uint64_t>(i)),
                    tg, 2);
                double w0 = 0, w1 = 0;
                for (int m = 0; m < tg.n_steps; ++m) {
                    w0 += w.inc(m, 0);
                    w1 += w.inc(m, 1);
                }
                sum0 += w0;
                sum00 += w0 * w0;
                sum1 += w1;
                sum11 += w1 * w1;
                cross += w0 * w1;
            }
            const double T = tg.t_end;
            const double mean0 = sum0 / paths;
            const double var0 = sum00 / paths - mean0 * mean0;
            const double cov = cross / paths - mean0 * (sum1 / paths);
            const double se_mean = std::sqrt(T / paths);
            const double se_var = T * std::sqrt(2.0 / (paths - 1));
            const double se_cov = T / std::sqrt(static_cast<double>(paths));
            const bool ok = std::abs(mean0) <= 3 * se_mean &&
                            std::abs(var0 - T) <= 3 * se_var &&
                            std::abs(cov) <= 3 * se_cov;
            return {ok, "mean=" + num(mean0) + " var=" + num(var0) +
                            " cov=" + num(cov)};
        });

    add("convolution_noise_linearity",
        "doubling every coupling doubles the convolution path-wise",
        [&]() -> std::pair<bool, std::string> {
            NoiseModel m1;
            m1.mode_count = 2;
            m1.couplings = {0.25, 0.125};
            m1.prepare(grid);
            NoiseModel m2 = m1;
            m2.couplings = {0.5, 0.25};
            m2.prepare(grid);
            const TimeGrid tg{0.1, 16};
            Trajectory u;
            u.tg = tg;
            const SpectralField base = field(10);
            for (int m = 0; m <= tg.n_steps; ++m) u.nodes.push_back(base);
            const WienerPath w = sample_wiener(derive_seed(seed, "lin", 0), tg, 2);
            const Trajectory f1 = stochastic_convolution(m1, u, w);
            const Trajectory f2 = stochastic_convolution(m2, u, w);
            double worst = 0.0;
            for (std::size_t m = 0; m < f1.nodes.size(); ++m) {
                SpectralField d = f2.nodes[m] - 2.0 * SpectralField(f1.nodes[m]);
                worst = std::max(worst, d.l2_norm());
            }
            const double ref = f2.nodes.back().l2_norm();
            return {worst <= 1e-14 * std::max(1.0, ref), "max abs=" + num(worst)};
        });

    add("factorization_identity",
        "int (t-s)^{a-1} (s-tau)^{-a} ds = Gamma(a) Gamma(1-a) = pi/sin(pi a)",
        [&]() -> std::pair<bool, std::string> {
            const auto c1 = factorization_identity_check(0.25, 0.0, 1.0);
            const auto c2 = factorization_identity_check(0.25, 0.3, 2.7);
            const double reflect =
                std::numbers::pi / std::sin(std::numbers::pi * 0.25);
            const bool ok = c1.abs_error <= 1e-3 &&
                            std::abs(c1.numeric - c2.numeric) <= 1e-6 &&
                            std::abs(c1.analytic - reflect) <= 1e-12;
            return {ok, "err=" + num(c1.abs_error) +
                            " tau-shift=" + num(std::abs(c1.numeric - c2.numeric))};
        });

    add("cutoff_formulas",
        "theta1/theta2 match their breakpoints and are 1-Lipschitz rescaled",
        [&]() -> std::pair<bool, std::string> {
            // Binary-exact R so the breakpoint arithmetic is exact.
            const double R = 0.25, N = 2.0;
            bool ok = theta1(R / 2, R) == 1.0 && theta1(1.5 * R, R) == 0.5 &&
                      theta1(3 * R, R) == 0.0 && theta2(N - 1, N) == 1.0 &&
                      theta2(N + 0.5, N) == 0.5 && theta2(N + 2, N) == 0.0 &&
                      theta1(R, R) == 1.0 && theta1(2 * R, R) == 0.0 &&
                      theta2(N, N) == 1.0 && theta2(N + 1, N) == 0.0;
            CounterRng rng(seed, "theta-pairs");
            for (int i = 0; i < 200 && ok; ++i) {
                const double x = 3.0 * rng.uniform(), y = 3.0 * rng.uniform();
                if (std::abs(theta1(x, R) - theta1(y, R)) >
                    std::abs(x - y) / R + 1e-15)
                    ok = false;
                if (std::abs(theta2(x, N) - theta2(y, N)) >
                    std::abs(x - y) + 1e-15)
                    ok = false;
            }
            return {ok, ""};
        });

    add("constants_formulas",
        "R = min{1,(4C*)^{-1/r}}, M = 3C*E||u0||^r+1, T_hat per its formula",
        [&]() -> std::pair<bool, std::string> {
            NoiseModel m;
            m.mode_count = 1;
            m.couplings = {0.1};
            m.eta_bound = 1e-3;
            m.beta2_bound = 1e-3;
            SolverConfig cfg;
            cfg.besov = besov;
            cfg.besov.s = grid.dimension / besov.p - 1.0;
            cfg.N_cutoff = 2.0;
            cfg.tg = TimeGrid{1.0, 4};
            bool ok = true;
            for (double cstar : {1.0, 0.1, 7.3}) {
                cfg.C_star = cstar;
                const auto c = solver_constants(cfg, 1.0, m);
                const double r = besov.r;
                const double R_ref =
                    std::min(1.0, std::pow(4.0 * cstar, -1.0 / r));
                const double M_ref = 3.0 * cstar + 1.0;
                const double b1 = m.eta_bound * std::pow(cfg.N_cutoff + 1.0, r);
                const double T_ref =
                    1.0 / (3.0 * cstar *
                           ((std::pow(R_ref, -r) + 1.0) * b1 + m.beta2_bound));
                ok = ok && std::abs(c.R - R_ref) <= 1e-12 &&
                     std::abs(c.M - M_ref) <= 1e-12 &&
                     std::abs(c.T_hat - T_ref) <= 1e-12 * T_ref;
            }
            return {ok, ""};
        });

    add("cutoff_monotonicity",
        "chi1 is nonincreasing along every path (its argument accumulates)",
        [&]() -> std::pair<bool, std::string> {
            NoiseModel m;
            m.mode_count = 2;
            m.couplings = {0.05, 0.05};
            m.prepare(grid);
            DyadicPartition Pv = build_partition(grid);
            audit_noise_model(m, grid, Pv, besov, 50,
                              derive_seed(seed, "verify-audit", 0));
            SolverConfig cfg;
            cfg.besov = besov;
            cfg.besov.s = grid.dimension / besov.p - 1.0;
            cfg.C_star = 10.0;
            cfg.N_cutoff = 2.0;
            cfg.tg = TimeGrid{0.5, 64};
            const SpectralField u0 = field(11, 5.0);
            const WienerPath w = sample_wiener(derive_seed(seed, "mono", 0),
                                               cfg.tg, m.mode_count);
            auto [traj, rec] = time_step_path(u0, m, w, cfg, Pv);
            bool ok = true;
            for (std::size_t i = 1; i < traj.series.chi1.size(); ++i)
                if (traj.series.chi1[i] > traj.series.chi1[i - 1] + 1e-15)
                    ok = false;
            return {ok, to_string(rec.status)};
        });

    add("stopping_time_ordering",
        "tau_N is nondecreasing in the cutoff level N on every path",
        [&]() -> std::pair<bool, std::string> {
            NoiseModel m;
            m.mode_count = 2;
            m.couplings = {0.1, 0.1};
            m.prepare(grid);
            DyadicPartition Pv = build_partition(grid);
            audit_noise_model(m, grid, Pv, besov, 50,
                              derive_seed(seed, "verify-audit2", 0));
            SolverConfig cfg;
            cfg.besov = besov;
            cfg.besov.s = grid.dimension / besov.p - 1.0;
            cfg.C_star = 10.0;
            cfg.tg = TimeGrid{0.5, 64};
            int violations = 0;
            for (std::uint64_t pidx = 0; pidx < 3; ++pidx) {
                const SpectralField u0 = field(20 + pidx, 4.0);
                const WienerPath w = sample_wiener(
                    derive_seed(seed, "ordering", pidx), cfg.tg, m.mode_count);
                double prev_tau = -1.0;
                bool prev_hit = true;
                for (double N : {1.0, 2.0, 4.0}) {
                    cfg.N_cutoff = N;
                    auto [traj, rec] = time_step_path(u0, m, w, cfg, Pv);
                    const bool hit = rec.tau_N.has_value();
                    const double tau = hit ? *rec.tau_N
                                           : std::numeric_limits<double>::infinity();
                    if (prev_hit) {
                        if (tau < prev_tau) ++violations;
                    } else if (hit) {
                        ++violations;  // larger N may not stop earlier
                    }
                    prev_tau = hit ? tau : std::numeric_limits<double>::infinity();
                    prev_hit = hit;
                }
            }
            return {violations == 0, "violations=" + std::to_string(violations)};
        });

    add("noise_growth_audit",
        "the shipped multiplicative model satisfies its declared envelopes",
        [&]() -> std::pair<bool, std::string> {
            NoiseModel m = config.noise;
            m.prepare(grid);
            DyadicPartition Pv = build_partition(grid);
            const auto audit = audit_noise_model(
                m, grid, Pv, besov, std::min(config.audit_samples, 50),
                derive_seed(seed, "verify-audit3", 0));
            const SpectralField zero(grid, grid.dimension);
            const auto at_zero = noise_eval_all(m, 0.0, zero);
            double zero_norm = 0.0;
            for (const auto& f : at_zero) zero_norm += f.l2_norm();
            const bool zero_ok =
                m.structure != NoiseModel::Structure::linear_multiplicative ||
                zero_norm == 0.0;
            return {audit.passed && zero_ok,
                    "eta=" + num(m.eta_bound) + " beta2=" + num(m.beta2_bound)};
        });

    add("additive_weak_order",
        "additive-noise second moments converge with order >= 0.9 in dt",
        [&]() -> std::pair<bool, std::string> {
            NoiseModel m;
            m.mode_count = 2;
            m.structure = NoiseModel::Structure::additive;
            m.couplings = {0.3, 0.2};
            m.prepare(grid);
            const auto rep = additive_weak_order_check(m, grid, 0.5, 8, 4);
            return {rep.order >= 0.9, "order=" + num(rep.order)};
        });

    return results;
}

}  // namespace snsim
