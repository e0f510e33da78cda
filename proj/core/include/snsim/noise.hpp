#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"
#include "snsim/besov.hpp"
#include "snsim/heat.hpp"

namespace snsim {

/// Truncated cylindrical Wiener description: K scalar Brownian motions
/// against fixed spatial profiles psi_k, coupled through per-mode sigma_k.
/// The declared envelope bounds certify the growth conditions the solver
/// relies on; audit_noise_model fits and freezes them.
class NoiseModel {
public:
    enum class Structure { linear_multiplicative, additive };

    struct Audit {
        bool performed = false;
        bool passed = false;
        int samples = 0;
        std::uint64_t seed = 0;
        double margin = 0.0;
        double max_beta1_ratio = 0.0;
        double max_beta2_ratio = 0.0;
    };

    int mode_count = 4;
    Structure structure = Structure::linear_multiplicative;
    std::vector<double> couplings;  // sigma_k; resized to mode_count if empty

    // Envelopes: beta1(t,x) = eta_bound * x^r for the multiplicative model,
    // the constant beta1_const otherwise; beta2 is constant in x; gamma
    // multiplies the higher-regularity norm in the growth condition.
    double eta_bound = 0.0;
    double beta1_const = 0.0;
    double beta2_bound = 0.0;
    double gamma_bound = 0.0;
    Audit audit;

    bool beta1_power_law() const {
        return structure == Structure::linear_multiplicative;
    }
    double beta1(double t, double x, double r) const;
    double beta2(double t, double x) const;

    void validate() const;

    /// Realizes mode shapes (and additive base fields) on a grid. Must be
    /// called before evaluation; idempotent, not thread-safe against itself.
    void prepare(const GridSpec& grid);
    bool prepared_for(const GridSpec& grid) const;
    void require_prepared(const GridSpec& grid) const;
    void require_audited() const;

    std::span<const double> shape(int k) const;
    const SpectralField& additive_base(int k) const;

    nlohmann::json to_json() const;
    static NoiseModel from_json(const nlohmann::json& j);

private:
    // psi_k as a pure trigonometric mode: multiplication by it acts on the
    // coefficients as a +-harmonic shift along one axis, exactly.
    struct TrigShape {
        int axis = 0;
        int harmonic = 0;  // 0 encodes the constant profile
        bool is_sin = false;
    };

    bool realized_ = false;
    GridSpec realized_grid_{};
    std::vector<TrigShape> trig_;
    std::vector<std::vector<double>> shapes_;
    std::vector<SpectralField> additive_bases_;

    friend SpectralField multiply_by_shape(const NoiseModel&, int,
                                           const SpectralField&);
};

/// Exact spectral product psi_k * u for the trigonometric mode shapes.
SpectralField multiply_by_shape(const NoiseModel& model, int k,
                                const SpectralField& u);

/// One path of the truncated Wiener process: n_steps x K Gaussian increments
/// of variance dt, one counter-based stream per mode.
struct WienerPath {
    std::uint64_t seed = 0;
    double dt = 0.0;
    int n_steps = 0;
    int modes = 0;
    std::vector<double> increments;  // [step * modes + mode]

    double inc(int step, int mode) const {
        return increments[static_cast<std::size_t>(step) *
                              static_cast<std::size_t>(modes) +
                          static_cast<std::size_t>(mode)];
    }
};

WienerPath sample_wiener(std::uint64_t seed, const TimeGrid& tg, int modes);

/// f(t, u) for one mode: sigma_k psi_k u (dealiased physical product) for the
/// multiplicative structure, the fixed sigma_k base field otherwise. The
/// Leray projection is applied by consumers.
SpectralField noise_eval(const NoiseModel& model, double t,
                         const SpectralField& u, int k);
/// All modes at once, sharing the inverse transforms of u.
std::vector<SpectralField> noise_eval_all(const NoiseModel& model, double t,
                                          const SpectralField& u);

struct ConvolutionOptions {
    bool freeze_semigroup = false;      // test hook: drop the heat multiplier
    std::span<const double> weights{};  // per-node scalar factors (cut-offs)
};

/// Exponential-Euler Ito discretization of the stochastic heat response:
/// F(t_{m+1}) = e^{dt Delta} (F(t_m) + w_m sum_k P f(t_m, u(t_m), k) dW_k^m),
/// zero initial data, left-point evaluation throughout.
Trajectory stochastic_convolution(const NoiseModel& model,
                                  const Trajectory& u_traj,
                                  const WienerPath& path,
                                  const ConvolutionOptions& opts = {});

struct FactorizationCheck {
    double numeric = 0.0;
    double analytic = 0.0;
    double abs_error = 0.0;
};

/// Quadrature of int_tau^t (t-s)^{alpha-1} (s-tau)^{-alpha} ds against
/// Gamma(alpha) Gamma(1-alpha); alpha restricted to (0, 1/2).
FactorizationCheck factorization_identity_check(double alpha, double tau = 0.0,
                                                double t = 1.0);

struct ItoMomentReport {
    int path_count = 0;
    double estimate = 0.0;        // Monte Carlo mean of ||int G dW||_{L^q}^p
    double standard_error = 0.0;  // of the estimate
    double bound = 0.0;           // ||G||_{L^2_t(L^q;H)}^p quadrature
    double ratio = 0.0;
    std::uint64_t seed = 0;
};

/// One-sided moment inequality check for a deterministic separable test
/// integrand built from the model's modes; p_exp is the moment power, q_exp
/// the spatial integrability.
ItoMomentReport ito_moment_check(const NoiseModel& model, const GridSpec& grid,
                                 int paths, const TimeGrid& tg, double p_exp,
                                 double q_exp, std::uint64_t seed);

struct ConvRegularityReport {
    double dt = 0.0;
    double numerator = 0.0;    // E ||F||^r in the sup-in-time critical norm
    double denominator = 0.0;  // ||G||^r in the L^r-in-time lower norm
    double ratio = 0.0;
    int paths = 0;
};

/// Smoothing ratio of the stochastic convolution along a frozen trajectory:
/// E ||F||^r_{sup-t Besov(s)} / ||G||^r_{L^r_t, H-valued Besov(s-2+2/r)} with
/// s the critical index. The integrand is deterministic, so the denominator
/// is quadrature only.
ConvRegularityReport conv_regularity_ratio(const NoiseModel& model,
                                           const Trajectory& u_traj, int paths,
                                           std::uint64_t seed,
                                           const DyadicPartition& P,
                                           const BesovParams& critical);

struct WeakOrderReport {
    std::vector<double> dts;
    std::vector<double> errors;  // scheme second moment vs exact, at t_end
    double order = 0.0;          // mean log2 error contraction per halving
};

/// Second-moment convergence of the additive-noise scheme under dt halving.
WeakOrderReport additive_weak_order_check(const NoiseModel& model,
                                          const GridSpec& grid, double t_end,
                                          int coarsest_steps, int levels);

/// Fits the envelope constants on an ensemble, freezes them into the model,
/// then certifies the growth conditions on fresh samples.
NoiseModel::Audit audit_noise_model(NoiseModel& model, const GridSpec& grid,
                                    const DyadicPartition& P,
                                    const BesovParams& critical, int samples,
                                    std::uint64_t seed);

}  // namespace snsim
