#include "snsim/noise.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "snsim/field_ops.hpp"
#include "snsim/rng.hpp"

namespace snsim {

double NoiseModel::beta1(double /*t*/, double x, double r) const {
    return beta1_power_law() ? eta_bound * std::pow(x, r) : beta1_const;
}

double NoiseModel::beta2(double /*t*/, double /*x*/) const { return beta2_bound; }

void NoiseModel::validate() const {
    if (mode_count < 1)
        throw std::invalid_argument("NoiseModel: mode_count must be >= 1");
    if (!couplings.empty() &&
        couplings.size() != static_cast<std::size_t>(mode_count))
        throw std::invalid_argument("NoiseModel: couplings size mismatch");
    if (eta_bound < 0.0 || gamma_bound < 0.0 || beta2_bound < 0.0)
        throw std::invalid_argument("NoiseModel: envelope bounds must be >= 0");
}

void NoiseModel::prepare(const GridSpec& grid) {
    validate();
    grid.validate();
    if (prepared_for(grid)) return;
    if (couplings.empty())
        couplings.assign(static_cast<std::size_t>(mode_count), 0.0);

    // Low-frequency Fourier profiles: psi_0 = 1, then cos/sin pairs cycling
    // through the axes with increasing harmonic.
    const std::size_t total = grid.node_count();
    const int n = grid.points_per_axis;
    const double h = 2.0 * std::numbers::pi / n;  // phase step per grid point
    shapes_.assign(static_cast<std::size_t>(mode_count),
                   std::vector<double>(total));
    trig_.assign(static_cast<std::size_t>(mode_count), TrigShape{});
    for (int k = 0; k < mode_count; ++k) {
        auto& psi = shapes_[static_cast<std::size_t>(k)];
        if (k == 0) {
            psi.assign(total, 1.0);
            continue;
        }
        const int axis = (k - 1) / 2 % grid.dimension;
        const bool use_sin = (k - 1) % 2 != 0;
        const int harmonic = 1 + (k - 1) / (2 * grid.dimension);
        trig_[static_cast<std::size_t>(k)] = TrigShape{axis, harmonic, use_sin};
        std::size_t idx = 0;
        const int planes = grid.dimension == 2 ? 1 : n;
        for (int k0 = 0; k0 < n; ++k0)
            for (int k1 = 0; k1 < n; ++k1)
                for (int k2 = 0; k2 < planes; ++k2, ++idx) {
                    const int coord = axis == 0 ? k0 : (axis == 1 ? k1 : k2);
                    const double phase = harmonic * h * coord;
                    psi[idx] = use_sin ? std::sin(phase) : std::cos(phase);
                }
    }

    additive_bases_.clear();
    if (structure == Structure::additive) {
        for (int k = 0; k < mode_count; ++k) {
            SpectralField g = random_divfree_field(
                grid, fnv1a64("additive-base") + static_cast<std::uint64_t>(k),
                1.0, 2.0 * grid.freq_unit());
            std::vector<std::vector<double>> prod;
            for (int c = 0; c < grid.dimension; ++c)
                prod.push_back(pointwise_product(
                    g.to_physical(c), shapes_[static_cast<std::size_t>(k)]));
            SpectralField base = SpectralField::from_physical(grid, prod);
            base.dealias();
            additive_bases_.push_back(std::move(base));
        }
    }
    realized_grid_ = grid;
    realized_ = true;
}

bool NoiseModel::prepared_for(const GridSpec& grid) const {
    return realized_ && realized_grid_ == grid;
}

void NoiseModel::require_prepared(const GridSpec& grid) const {
    if (!prepared_for(grid))
        throw std::logic_error("NoiseModel: prepare() not called for this grid");
}

void NoiseModel::require_audited() const {
    if (!audit.performed || !audit.passed)
        throw std::runtime_error(
            "NoiseModel: growth-condition audit missing or failed");
}

std::span<const double> NoiseModel::shape(int k) const {
    return shapes_[static_cast<std::size_t>(k)];
}

const SpectralField& NoiseModel::additive_base(int k) const {
    return additive_bases_[static_cast<std::size_t>(k)];
}

nlohmann::json NoiseModel::to_json() const {
    return nlohmann::json{
        {"mode_count", mode_count},
        {"structure", structure == Structure::linear_multiplicative
                          ? "linear_multiplicative"
                          : "additive"},
        {"couplings", couplings},
        {"mode_shapes", "fourier_lowfreq"},
        {"eta_bound", eta_bound},
        {"beta1_const", beta1_const},
        {"beta2_bound", beta2_bound},
        {"gamma_bound", gamma_bound},
        {"audit",
         {{"performed", audit.performed},
          {"passed", audit.passed},
          {"samples", audit.samples},
          {"seed", audit.seed},
          {"margin", audit.margin},
          {"max_beta1_ratio", audit.max_beta1_ratio},
          {"max_beta2_ratio", audit.max_beta2_ratio}}}};
}

NoiseModel NoiseModel::from_json(const nlohmann::json& j) {
    NoiseModel m;
    m.mode_count = j.at("mode_count").get<int>();
    const auto structure = j.at("structure").get<std::string>();
    if (structure == "linear_multiplicative")
        m.structure = Structure::linear_multiplicative;
    else if (structure == "additive")
        m.structure = Structure::additive;
    else
        throw std::invalid_argument("NoiseModel: unknown structure " + structure);
    m.couplings = j.at("couplings").get<std::vector<double>>();
    if (j.contains("eta_bound")) m.eta_bound = j.at("eta_bound").get<double>();
    if (j.contains("beta1_const"))
        m.beta1_const = j.at("beta1_const").get<double>();
    if (j.contains("beta2_bound"))
        m.beta2_bound = j.at("beta2_bound").get<double>();
    if (j.contains("gamma_bound"))
        m.gamma_bound = j.at("gamma_bound").get<double>();
    if (j.contains("audit")) {
        const auto& a = j.at("audit");
        m.audit.performed = a.at("performed").get<bool>();
        m.audit.passed = a.at("passed").get<bool>();
        m.audit.samples = a.at("samples").get<int>();
        m.audit.seed = a.at("seed").get<std::uint64_t>();
        m.audit.margin = a.at("margin").get<double>();
        m.audit.max_beta1_ratio = a.at("max_beta1_ratio").get<double>();
        m.audit.max_beta2_ratio = a.at("max_beta2_ratio").get<double>();
    }
    m.validate();
    return m;
}

WienerPath sample_wiener(std::uint64_t seed, const TimeGrid& tg, int modes) {
    tg.validate();
    if (modes < 1) throw std::invalid_argument("sample_wiener: modes must be >= 1");
    WienerPath path;
    path.seed = seed;
    path.dt = tg.dt();
    path.n_steps = tg.n_steps;
    path.modes = modes;
    path.increments.resize(static_cast<std::size_t>(tg.n_steps) *
                           static_cast<std::size_t>(modes));
    const double scale = std::sqrt(path.dt);
    for (int k = 0; k < modes; ++k) {
        CounterRng rng(seed, "wiener-mode", static_cast<std::uint64_t>(k));
        for (int m = 0; m < tg.n_steps; ++m)
            path.increments[static_cast<std::size_t>(m) *
                                static_cast<std::size_t>(modes) +
                            static_cast<std::size_t>(k)] =
                scale * rng.gaussian();
    }
    return path;
}

SpectralField multiply_by_shape(const NoiseModel& model, int k,
                                const SpectralField& u) {
    const GridSpec& grid = u.grid();
    model.require_prepared(grid);
    const auto& trig = model.trig_[static_cast<std::size_t>(k)];
    if (trig.harmonic == 0) return u;  // constant profile

    const int n = grid.points_per_axis;
    const int d = grid.dimension;
    std::size_t stride = 1;
    for (int a = d - 1; a > trig.axis; --a) stride *= static_cast<std::size_t>(n);

    SpectralField out(grid, u.components());
    const int h = trig.harmonic;
    const int m_limit = n / 2 - 1;
    // cos: (u(m-h) + u(m+h))/2; sin: (u(m-h) - u(m+h))/(2i).
    const std::complex<double> c_minus =
        trig.is_sin ? std::complex<double>(0.0, -0.5)
                    : std::complex<double>(0.5, 0.0);
    const std::complex<double> c_plus = trig.is_sin ? -c_minus : c_minus;
    // Per-bin source offsets along the shifted axis; out-of-band shifts are
    // truncated rather than wrapped.
    const auto sstride = static_cast<std::ptrdiff_t>(stride);
    constexpr std::ptrdiff_t none = std::numeric_limits<std::ptrdiff_t>::min();
    std::vector<std::ptrdiff_t> off_lo(static_cast<std::size_t>(n), none);
    std::vector<std::ptrdiff_t> off_hi(static_cast<std::size_t>(n), none);
    for (int bin = 0; bin < n; ++bin) {
        const int ma = freq_of_bin(bin, n);
        if (std::abs(ma - h) <= m_limit)
            off_lo[static_cast<std::size_t>(bin)] =
                ((ma - h + n) % n - bin) * sstride;
        if (std::abs(ma + h) <= m_limit)
            off_hi[static_cast<std::size_t>(bin)] =
                ((ma + h + n) % n - bin) * sstride;
    }

    const int planes = d == 2 ? 1 : n;
    for (int c = 0; c < u.components(); ++c) {
        const auto* src = u.data(c);
        auto* dst = out.data(c);
        std::ptrdiff_t idx = 0;
        for (int b0 = 0; b0 < n; ++b0)
            for (int b1 = 0; b1 < n; ++b1)
                for (int b2 = 0; b2 < planes; ++b2, ++idx) {
                    const int bin =
                        trig.axis == 0 ? b0 : (trig.axis == 1 ? b1 : b2);
                    const std::ptrdiff_t lo = off_lo[static_cast<std::size_t>(bin)];
                    const std::ptrdiff_t hi = off_hi[static_cast<std::size_t>(bin)];
                    std::complex<double> acc = 0.0;
                    if (lo != none) acc += c_minus * src[idx + lo];
                    if (hi != none) acc += c_plus * src[idx + hi];
                    dst[idx] = acc;
                }
    }
    out.zero_mean();
    return out;
}

namespace {

std::vector<SpectralField> eval_modes(const NoiseModel& model, double /*t*/,
                                      const SpectralField& u, int k_begin,
                                      int k_end) {
    const GridSpec& grid = u.grid();
    model.require_prepared(grid);
    std::vector<SpectralField> out;
    out.reserve(static_cast<std::size_t>(k_end - k_begin));
    if (model.structure == NoiseModel::Structure::additive) {
        for (int k = k_begin; k < k_end; ++k) {
            SpectralField f = model.additive_base(k);
            f *= model.couplings[static_cast<std::size_t>(k)];
            out.push_back(std::move(f));
        }
        return out;
    }
    SpectralField ud = u;
    ud.dealias();
    for (int k = k_begin; k < k_end; ++k) {
        const double sigma = model.couplings[static_cast<std::size_t>(k)];
        if (sigma == 0.0) {
            out.emplace_back(grid, u.components());
            continue;
        }
        SpectralField f = multiply_by_shape(model, k, ud);
        f.dealias();
        f *= sigma;
        out.push_back(std::move(f));
    }
    return out;
}

}  // namespace

SpectralField noise_eval(const NoiseModel& model, double t,
                         const SpectralField& u, int k) {
    if (k < 0 || k >= model.mode_count)
        throw std::out_of_range("noise_eval: mode index out of range");
    return std::move(eval_modes(model, t, u, k, k + 1)[0]);
}

std::vector<SpectralField> noise_eval_all(const NoiseModel& model, double t,
                                          const SpectralField& u) {
    return eval_modes(model, t, u, 0, model.mode_count);
}

Trajectory stochastic_convolution(const NoiseModel& model,
                                  const Trajectory& u_traj,
                                  const WienerPath& path,
                                  const ConvolutionOptions& opts) {
    const TimeGrid& tg = u_traj.tg;
    tg.validate();
    if (path.n_steps != tg.n_steps || path.modes != model.mode_count ||
        std::abs(path.dt - tg.dt()) > 1e-14 * tg.dt())
        throw std::invalid_argument("stochastic_convolution: grid mismatch");
    if (!opts.weights.empty() &&
        opts.weights.size() < static_cast<std::size_t>(tg.n_steps))
        throw std::invalid_argument("stochastic_convolution: weights mismatch");
    if (u_traj.nodes.size() != static_cast<std::size_t>(tg.node_count()))
        throw std::invalid_argument("stochastic_convolution: node count mismatch");

    const GridSpec& grid = u_traj.nodes[0].grid();
    model.require_prepared(grid);
    const double dt = tg.dt();
    Trajectory out;
    out.tg = tg;
    out.nodes.reserve(u_traj.nodes.size());
    SpectralField state(grid, u_traj.nodes[0].components());
    out.nodes.push_back(state);
    for (int m = 0; m < tg.n_steps; ++m) {
        const double w = opts.weights.empty()
                             ? 1.0
                             : opts.weights[static_cast<std::size_t>(m)];
        if (w != 0.0) {
            auto modes = noise_eval_all(
                model, tg.time(m), u_traj.nodes[static_cast<std::size_t>(m)]);
            SpectralField sum(grid, state.components());
            for (int k = 0; k < model.mode_count; ++k)
                sum.add_scaled(modes[static_cast<std::size_t>(k)],
                               path.inc(m, k));
            state.add_scaled(leray_project(std::move(sum)), w);
        }
        if (!opts.freeze_semigroup)
            apply_heat_step(state, dt);
        out.nodes.push_back(state);
    }
    return out;
}

namespace {

double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double fa, double fm, double fb, double tol,
                        int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return adaptive_simpson(f, a, m, fa, flm, fm, 0.5 * tol, depth - 1) +
           adaptive_simpson(f, m, b, fm, frm, fb, 0.5 * tol, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b,
                 double tol) {
    const double m = 0.5 * (a + b);
    return adaptive_simpson(f, a, b, f(a), f(m), f(b), tol, 40);
}

}  // namespace

FactorizationCheck factorization_identity_check(double alpha, double tau,
                                                double t) {
    if (!(alpha > 0.0 && alpha < 0.5))
        throw std::invalid_argument(
            "factorization_identity_check: alpha must lie in (0, 1/2)");
    if (!(t > tau))
        throw std::invalid_argument(
            "factorization_identity_check: need t > tau");

    const double mid = 0.5 * (tau + t);
    // Left half: substitute v = (s - tau)^{1-alpha} to absorb the s = tau
    // singularity; right half symmetrically with u = (t - s)^{alpha}. The
    // remaining factor of the original integrand is evaluated at the mapped
    // node s, so the analytic (tau, t)-independence stays a nontrivial check.
    auto left = [&](double v) {
        const double s = tau + std::pow(v, 1.0 / (1.0 - alpha));
        return std::pow(t - s, alpha - 1.0) / (1.0 - alpha);
    };
    auto right = [&](double u) {
        const double s = t - std::pow(u, 1.0 / alpha);
        return std::pow(s - tau, -alpha) / alpha;
    };
    const double numeric =
        integrate(left, 0.0, std::pow(mid - tau, 1.0 - alpha), 5e-10) +
        integrate(right, 0.0, std::pow(t - mid, alpha), 5e-10);
    const double analytic = std::tgamma(alpha) * std::tgamma(1.0 - alpha);
    return {numeric, analytic, std::abs(numeric - analytic)};
}

ItoMomentReport ito_moment_check(const NoiseModel& model, const GridSpec& grid,
                                 int paths, const TimeGrid& tg, double p_exp,
                                 double q_exp, std::uint64_t seed) {
    model.require_prepared(grid);
    tg.validate();
    const int K = model.mode_count;
    const int M = tg.n_steps;
    const std::size_t total = grid.node_count();

    // Deterministic separable integrand G_k(t, x) = sigma_k a_k(t) psi_k(x),
    // left-point convention on both sides of the inequality.
    auto amp = [](int k, double t) {
        return 1.0 + 0.5 * std::cos((k + 1) * t);
    };

    const double cellvol = grid.cell_volume();
    double bound_sq = 0.0;  // int ||G(t)||_{L^q(H)}^2 dt, left rectangles
    for (int m = 0; m < M; ++m) {
        double acc = 0.0;
        for (std::size_t i = 0; i < total; ++i) {
            double mag2 = 0.0;
            for (int k = 0; k < K; ++k) {
                const double g = model.couplings[static_cast<std::size_t>(k)] *
                                 amp(k, tg.time(m)) * model.shape(k)[i];
                mag2 += g * g;
            }
            acc += std::pow(mag2, 0.5 * q_exp);
        }
        const double lq = std::pow(acc * cellvol, 1.0 / q_exp);
        bound_sq += tg.dt() * lq * lq;
    }
    const double bound = std::pow(std::sqrt(bound_sq), p_exp);

    double sum = 0.0, sum_sq = 0.0;
    std::vector<double> mode_sum(static_cast<std::size_t>(K));
    for (int pidx = 0; pidx < paths; ++pidx) {
        const WienerPath w = sample_wiener(
            derive_seed(seed, "ito-moment", static_cast<std::uint64_t>(pidx)),
            tg, K);
        for (int k = 0; k < K; ++k) {
            double c = 0.0;
            for (int m = 0; m < M; ++m) c += amp(k, tg.time(m)) * w.inc(m, k);
            mode_sum[static_cast<std::size_t>(k)] =
                c * model.couplings[static_cast<std::size_t>(k)];
        }
        double acc = 0.0;
        for (std::size_t i = 0; i < total; ++i) {
            double v = 0.0;
            for (int k = 0; k < K; ++k)
                v += mode_sum[static_cast<std::size_t>(k)] * model.shape(k)[i];
            acc += std::pow(std::abs(v), q_exp);
        }
        const double sample =
            std::pow(std::pow(acc * cellvol, 1.0 / q_exp), p_exp);
        sum += sample;
        sum_sq += sample * sample;
    }
    ItoMomentReport rep;
    rep.path_count = paths;
    rep.seed = seed;
    rep.estimate = sum / paths;
    rep.standard_error = std::sqrt(
        std::max(0.0, (sum_sq / paths - rep.estimate * rep.estimate) /
                          std::max(1, paths - 1)));
    rep.bound = bound;
    rep.ratio = rep.estimate / bound;
    return rep;
}

ConvRegularityReport conv_regularity_ratio(const NoiseModel& model,
                                           const Trajectory& u_traj, int paths,
                                           std::uint64_t seed,
                                           const DyadicPartition& P,
                                           const BesovParams& critical) {
    const TimeGrid& tg = u_traj.tg;
    const GridSpec& grid = u_traj.nodes[0].grid();
    model.require_prepared(grid);
    const double r = critical.r;
    const double dt = tg.dt();
    const BesovParams lower = critical.with_s(critical.s - 2.0 + 2.0 / r);

    // The integrand along the frozen trajectory is deterministic: project
    // once, reuse across paths.
    std::vector<std::vector<SpectralField>> G(
        static_cast<std::size_t>(tg.n_steps));
    double denom = 0.0;  // left-rule int ||G||^r dt in the H-valued norm
    for (int m = 0; m < tg.n_steps; ++m) {
        auto modes = noise_eval_all(model, tg.time(m),
                                    u_traj.nodes[static_cast<std::size_t>(m)]);
        for (auto& f : modes) f = leray_project(std::move(f));
        denom += dt * std::pow(besov_norm_hvalued(modes, lower, P), r);
        G[static_cast<std::size_t>(m)] = std::move(modes);
    }

    const int shells = P.shell_count();
    double numer = 0.0;
    for (int pidx = 0; pidx < paths; ++pidx) {
        const WienerPath w = sample_wiener(
            derive_seed(seed, "conv-reg", static_cast<std::uint64_t>(pidx)), tg,
            model.mode_count);
        SpectralField state(grid, u_traj.nodes[0].components());
        std::vector<double> shell_sup(static_cast<std::size_t>(shells), 0.0);
        for (int m = 0; m < tg.n_steps; ++m) {
            SpectralField sum(grid, state.components());
            for (int k = 0; k < model.mode_count; ++k)
                sum.add_scaled(
                    G[static_cast<std::size_t>(m)][static_cast<std::size_t>(k)],
                    w.inc(m, k));
            state += sum;
            apply_heat_step(state, dt);
            for (int j = P.j_min; j <= P.j_max; ++j)
                shell_sup[static_cast<std::size_t>(j - P.j_min)] = std::max(
                    shell_sup[static_cast<std::size_t>(j - P.j_min)],
                    shell_lp_norm(state, j, P, critical.p));
        }
        double path_norm = 0.0;
        for (int j = P.j_min; j <= P.j_max; ++j) {
            const double a =
                std::pow(2.0, j * critical.s) *
                shell_sup[static_cast<std::size_t>(j - P.j_min)];
            if (a > 0.0) path_norm += std::pow(a, r);
        }
        numer += path_norm;  // already the r-th power sum
    }
    numer /= paths;

    ConvRegularityReport rep;
    rep.dt = dt;
    rep.numerator = numer;
    rep.denominator = denom;
    rep.ratio = denom > 0.0 ? numer / denom : 0.0;
    rep.paths = paths;
    return rep;
}

WeakOrderReport additive_weak_order_check(const NoiseModel& model,
                                          const GridSpec& grid, double t_end,
                                          int coarsest_steps, int levels) {
    model.require_prepared(grid);
    if (model.structure != NoiseModel::Structure::additive)
        throw std::invalid_argument("weak order check needs an additive model");

    // E ||F(T)||^2 has a closed form for both the scheme and the limit:
    // per mode, sum resp. integral of e^{-2 k^2 (T - s)} over s. Modes are
    // independent, so second moments add.
    std::vector<SpectralField> bases;
    for (int k = 0; k < model.mode_count; ++k) {
        SpectralField f = leray_project(SpectralField(model.additive_base(k)));
        f *= model.couplings[static_cast<std::size_t>(k)];
        bases.push_back(std::move(f));
    }

    auto scheme_moment = [&](int steps) {
        const double dt = t_end / steps;
        double total = 0.0;
        for (const auto& base : bases)
            for (int m = 0; m < steps; ++m) {
                SpectralField f = heat_semigroup(base, (steps - m) * dt);
                total += dt * f.l2_norm() * f.l2_norm();
            }
        return total;
    };
    auto exact_moment = [&]() {
        double total = 0.0;
        for (const auto& base : bases) {
            SpectralField f = base;
            const double T = t_end;
            f.apply_isotropic_multiplier([T](double k2) {
                if (k2 == 0.0) return std::sqrt(T);
                return std::sqrt(-std::expm1(-2.0 * k2 * T) / (2.0 * k2));
            });
            total += f.l2_norm() * f.l2_norm();
        }
        return total;
    }();

    WeakOrderReport rep;
    int steps = coarsest_steps;
    for (int level = 0; level < levels; ++level, steps *= 2) {
        rep.dts.push_back(t_end / steps);
        rep.errors.push_back(std::abs(scheme_moment(steps) - exact_moment));
    }
    double order_sum = 0.0;
    for (std::size_t i = 0; i + 1 < rep.errors.size(); ++i)
        order_sum += std::log2(rep.errors[i] / rep.errors[i + 1]);
    rep.order = order_sum / std::max<std::size_t>(1, rep.errors.size() - 1);
    return rep;
}

NoiseModel::Audit audit_noise_model(NoiseModel& model, const GridSpec& grid,
                                    const DyadicPartition& P,
                                    const BesovParams& critical, int samples,
                                    std::uint64_t seed) {
    model.prepare(grid);
    const double r = critical.r;
    const BesovParams lower = critical.with_s(critical.s - 2.0 + 2.0 / r);
    const BesovParams higher = critical.with_s(critical.s + 2.0 / r);

    auto draw = [&](std::uint64_t s, int i) {
        CounterRng rng(s, "audit-params", static_cast<std::uint64_t>(i));
        const double amp = std::pow(10.0, -2.0 + 2.5 * rng.uniform());
        const double kc =
            grid.freq_unit() *
            std::pow(2.0, 0.5 + rng.uniform() *
                                    (std::log2(grid.dealias_limit() * 0.5)));
        return random_divfree_field(
            grid, derive_seed(s, "audit-field", static_cast<std::uint64_t>(i)),
            amp, kc);
    };

    auto lhs_norm_pow_r = [&](const SpectralField& u) {
        auto modes = noise_eval_all(model, 0.0, u);
        for (auto& f : modes) f = leray_project(std::move(f));
        return std::pow(besov_norm_hvalued(modes, lower, P), r);
    };

    // Fit phase.
    double max_b1 = 0.0, max_b2 = 0.0;
    for (int i = 0; i < samples; ++i) {
        const SpectralField u = draw(seed, 2 * i);
        const SpectralField v = draw(seed, 2 * i + 1);
        const double xu = besov_norm(u, critical, P);
        const double yu = besov_norm(u, higher, P);
        if (xu > 0.0) {
            const double lhs = lhs_norm_pow_r(u);
            const double slack = model.gamma_bound * std::pow(yu, r);
            const double denom = model.beta1_power_law() ? std::pow(xu, r) : 1.0;
            max_b1 = std::max(max_b1, (lhs - slack) / denom);
        }
        const SpectralField diff = u - v;
        const double xd = besov_norm(diff, critical, P);
        const double yd = besov_norm(diff, higher, P);
        if (xd > 0.0 &&
            model.structure == NoiseModel::Structure::linear_multiplicative) {
            const double lhs = lhs_norm_pow_r(diff);
            const double slack = model.gamma_bound * std::pow(yd, r);
            max_b2 = std::max(max_b2, (lhs - slack) / std::pow(xd, r));
        }
    }

    NoiseModel::Audit a;
    a.performed = true;
    a.samples = samples;
    a.seed = seed;
    a.margin = 1.25;
    a.max_beta1_ratio = max_b1;
    a.max_beta2_ratio = max_b2;
    if (model.beta1_power_law())
        model.eta_bound = a.margin * max_b1;
    else
        model.beta1_const = a.margin * max_b1;
    model.beta2_bound = a.margin * std::max(max_b2, max_b1);

    // Certification on fresh draws.
    const std::uint64_t cert_seed = derive_seed(seed, "audit-cert", 1);
    bool ok = true;
    for (int i = 0; i < samples && ok; ++i) {
        const SpectralField u = draw(cert_seed, i);
        const double xu = besov_norm(u, critical, P);
        const double yu = besov_norm(u, higher, P);
        const double lhs = lhs_norm_pow_r(u);
        ok = lhs <= model.beta1(0.0, xu, r) +
                        model.gamma_bound * std::pow(yu, r) + 1e-12;
    }
    a.passed = ok;
    model.audit = a;
    return a;
}

}  // namespace snsim
