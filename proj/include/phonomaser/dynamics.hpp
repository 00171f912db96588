#pragma once

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "phonomaser/closed_form.hpp"
#include "phonomaser/errors.hpp"
#include "phonomaser/fock.hpp"
#include "phonomaser/gain.hpp"
#include "phonomaser/numerics.hpp"

namespace phonomaser {

/// Full scenario parameterization of the maser master equation. Times are in
/// units of 1/omega_m; kappa and the injection rate r = 1/delta_t share those
/// units. The optional physical frequencies are metadata only.
struct MaserConfig {
    GainChannel channel;
    double kappa;
    double nbar0;
    double delta_t;            // inter-spin interval; may be +inf (no injection)
    double pump_p = 0.0;       // pump-statistics parameter, 0 = random injection
    int cutoff = 26;
    std::optional<double> omega_m_hz;
    std::optional<double> lambda0_hz;

    MaserConfig(GainChannel channel_, double kappa_, double nbar0_, double delta_t_,
                double pump_p_ = 0.0, int cutoff_ = 26)
        : channel(std::move(channel_)), kappa(kappa_), nbar0(nbar0_), delta_t(delta_t_),
          pump_p(pump_p_), cutoff(cutoff_) {}

    double injection_rate() const {
        return std::isinf(delta_t) ? 0.0 : 1.0 / delta_t;
    }

    void validate() const {
        if (!(kappa > 0)) throw InvalidParameter("MaserConfig: kappa must be > 0");
        if (nbar0 < 0) throw InvalidParameter("MaserConfig: nbar0 must be >= 0");
        if (pump_p < 0 || pump_p > 1) throw InvalidParameter("MaserConfig: pump_p must be in [0,1]");
        if (cutoff < 2) throw InvalidDimension("MaserConfig: cutoff must be >= 2");
        if (!std::isinf(delta_t)) {
            if (delta_t < 10.0 * channel.tau)
                throw InvalidParameter("MaserConfig: delta_t must be >= 10 tau (coarse-graining)");
            if (delta_t < 30.0 * channel.tau)
                std::clog << "[phonomaser] warning: delta_t = " << delta_t / channel.tau
                          << " tau is marginal for the coarse-grained model (< 30 tau)\n";
        }
    }

    ClosedFormSolution closed_form() const {
        return {channel.lambda, kappa, nbar0, injection_rate()};
    }
};

/// Sampled observables of one evolution run.
struct TimeSeries {
    std::vector<double> times;
    std::vector<double> mean_phonons;
    std::vector<double> g2_zero;        // NaN where <n> = 0
    std::vector<double> trace_drift;    // |Tr-1| before renormalization
    std::vector<std::pair<double, DensityMatrix>> snapshots;
};

namespace detail {

struct LindbladOps {
    Matrix b, bd, n, bbd;
    explicit LindbladOps(int dim) {
        auto [ann, cre, num] = ladder_operators(dim);
        b = ann.entries();
        bd = cre.entries();
        n = num.entries();
        bbd = b * bd;
    }
};

inline Matrix lindblad_apply(const LindbladOps& ops, double kappa, double nbar0, const Matrix& rho) {
    Matrix out = kappa * (1.0 + nbar0) *
                 (ops.b * rho * ops.bd - 0.5 * (ops.n * rho + rho * ops.n));
    if (nbar0 > 0)
        out += kappa * nbar0 * (ops.bd * rho * ops.b - 0.5 * (ops.bbd * rho + rho * ops.bbd));
    return out;
}

inline double mean_phonons_raw(const Matrix& rho) {
    double m = 0.0;
    for (Eigen::Index n = 0; n < rho.rows(); ++n) m += n * rho(n, n).real();
    return m;
}

inline double g2_raw(const Matrix& rho) {
    double m1 = 0.0, m2 = 0.0;
    for (Eigen::Index n = 0; n < rho.rows(); ++n) {
        const double p = rho(n, n).real();
        m1 += n * p;
        m2 += static_cast<double>(n) * (n - 1.0) * p;
    }
    if (m1 <= 0.0) return std::numeric_limits<double>::quiet_NaN();
    return m2 / (m1 * m1);
}

}  // namespace detail

/// Right-hand-side generator of the coarse-grained maser master equation
/// rho' = r (M - 1) rho + L rho, with an optional second-order pump-statistics
/// correction -(r p / 2)(M - 1)^2 rho.
///
/// The gain kick M is evaluated in the stroboscopic frame (see ChannelKernel):
/// the free oscillator phase accumulated over one injection cycle tau + delta_t
/// is folded into the kick, which is what makes the damping term below purely
/// dissipative. For the resonant spacings used by all shipped scenarios the
/// kick is a pure conditional displacement.
class MaserGenerator {
  public:
    MaserGenerator(const MaserConfig& config, int dim)
        : config_(config), dim_(dim), ops_(dim), rate_(config.injection_rate()) {
        config.validate();
        if (rate_ > 0.0)
            kernel_.emplace(ChannelKernel::stroboscopic(config.channel, config.delta_t, dim));
    }

    const MaserConfig& config() const { return config_; }
    int dim() const { return dim_; }

    Matrix rhs(const Matrix& rho) const {
        Matrix out = detail::lindblad_apply(ops_, config_.kappa, config_.nbar0, rho);
        if (rate_ > 0.0) {
            const Matrix gained = kernel_->apply(rho).rho_out;
            out += rate_ * (gained - rho);
            if (config_.pump_p > 0.0) {
                // (M-1)^2 rho = M(M rho) - 2 M rho + rho, applied operationally
                const Matrix twice = kernel_->apply(gained).rho_out;
                out -= (rate_ * config_.pump_p / 2.0) * (twice - 2.0 * gained + rho);
            }
        }
        return 0.5 * (out + out.adjoint());
    }

  private:
    MaserConfig config_;
    int dim_;
    std::optional<ChannelKernel> kernel_;
    detail::LindbladOps ops_;
    double rate_;
};

/// Time derivative of rho under the maser master equation at `config`.
inline Matrix maser_rhs(const DensityMatrix& rho, const MaserConfig& config) {
    return MaserGenerator(config, rho.dim()).rhs(rho.entries());
}

struct IntegrationOptions {
    double rtol = 1e-8;
    double atol = 1e-10;
    bool keep_snapshots = false;
    bool validate_samples = true;
};

/// 400 logarithmically spaced sample times on (0, t_end], preceded by t = 0.
/// Captures both the quadratic early rise and the exponential saturation.
inline std::vector<double> default_output_grid(double t_end, int samples = 400) {
    std::vector<double> grid;
    grid.reserve(samples + 1);
    grid.push_back(0.0);
    const double t_min = t_end * 1e-4;
    for (int i = 0; i < samples; ++i) {
        const double f = static_cast<double>(i) / (samples - 1);
        grid.push_back(t_min * std::pow(t_end / t_min, f));
    }
    grid.back() = t_end;
    return grid;
}

/// Adaptive Dormand-Prince 4(5) integration of the maser master equation,
/// sampling observables on `output_grid`. Trace drift beyond 1e-12 is
/// renormalized at sample points and recorded.
inline TimeSeries integrate_ode(const MaserConfig& config, const DensityMatrix& rho0, double t_end,
                                const std::vector<double>& output_grid,
                                const IntegrationOptions& opts = {}) {
    if (!(t_end > 0)) throw InvalidParameter("integrate_ode: t_end must be > 0");
    for (double t : output_grid)
        if (t < 0 || t > t_end * (1 + 1e-12))
            throw InvalidParameter("integrate_ode: output grid point outside [0, t_end]");

    const MaserGenerator gen(config, rho0.dim());

    // Dormand-Prince coefficients (autonomous right-hand side, no c_i needed)
    static const double a21 = 1.0 / 5;
    static const double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static const double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static const double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                        a54 = -212.0 / 729;
    static const double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                        a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static const double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                        b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static const double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                        e4 = 125.0 / 192 - 393.0 / 640, e5 = -2187.0 / 6784 + 92097.0 / 339200,
                        e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;

    Matrix y = rho0.entries();
    double t = 0.0;
    double h = std::min(t_end / 100.0, 1.0);
    Matrix k1 = gen.rhs(y);

    TimeSeries series;
    double worst_drift_since_sample = 0.0;
    auto record = [&](double time, Matrix& state) {
        const double drift = std::max(worst_drift_since_sample, std::abs(state.trace().real() - 1.0));
        worst_drift_since_sample = 0.0;
        if (std::abs(state.trace().real() - 1.0) > 1e-12) state /= state.trace().real();
        series.times.push_back(time);
        series.mean_phonons.push_back(detail::mean_phonons_raw(state));
        series.g2_zero.push_back(detail::g2_raw(state));
        series.trace_drift.push_back(drift);
        if (opts.validate_samples || opts.keep_snapshots) {
            DensityMatrix snap(state);  // enforces Hermiticity/positivity invariants
            if (opts.keep_snapshots) series.snapshots.emplace_back(time, std::move(snap));
        }
    };

    for (double target : output_grid) {
        while (t < target * (1 - 1e-15) && target - t > 1e-300) {
            h = std::min(h, target - t);
            if (h < 1e-12 * std::max(1.0, t))
                throw StiffnessError("integrate_ode: step size underflow at t = " + std::to_string(t), t);

            const Matrix k2 = gen.rhs(y + h * (a21 * k1));
            const Matrix k3 = gen.rhs(y + h * (a31 * k1 + a32 * k2));
            const Matrix k4 = gen.rhs(y + h * (a41 * k1 + a42 * k2 + a43 * k3));
            const Matrix k5 = gen.rhs(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
            const Matrix k6 = gen.rhs(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
            const Matrix y5 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
            const Matrix k7 = gen.rhs(y5);
            const Matrix err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

            double scaled = 0.0;
            for (Eigen::Index j = 0; j < err.size(); ++j) {
                const double sc = opts.atol + opts.rtol * std::max(std::abs(y(j)), std::abs(y5(j)));
                scaled = std::max(scaled, std::abs(err(j)) / sc);
            }
            if (scaled <= 1.0) {
                t += h;
                y = y5;
                k1 = k7;  // FSAL
                const double drift = std::abs(y.trace().real() - 1.0);
                if (drift > 1e-12) {
                    worst_drift_since_sample = std::max(worst_drift_since_sample, drift);
                    y /= y.trace().real();
                }
            }
            const double factor = (scaled > 0) ? 0.9 * std::pow(scaled, -0.2) : 5.0;
            h *= std::clamp(factor, 0.2, 5.0);
        }
        record(target, y);
    }
    return series;
}

/// integrate_ode on the default logarithmic output grid.
inline TimeSeries integrate_ode(const MaserConfig& config, const DensityMatrix& rho0, double t_end,
                                const IntegrationOptions& opts = {}) {
    return integrate_ode(config, rho0, t_end, default_output_grid(t_end), opts);
}

/// Vectorized Lindblad generator: L rho  ==  unvec(S vec(rho)), column-major.
inline Matrix lindblad_superoperator(int dim, double kappa, double nbar0) {
    const detail::LindbladOps ops(dim);
    const Matrix id = Matrix::Identity(dim, dim);
    auto sandwich = [&](const Matrix& left, const Matrix& right) {
        // vec(L rho R) = (R^T (x) L) vec(rho)
        return kron(right.transpose(), left);
    };
    Matrix s = kappa * (1.0 + nbar0) *
               (sandwich(ops.b, ops.bd) - 0.5 * sandwich(ops.n, id) - 0.5 * sandwich(id, ops.n));
    s += kappa * nbar0 *
         (sandwich(ops.bd, ops.b) - 0.5 * sandwich(ops.bbd, id) - 0.5 * sandwich(id, ops.bbd));
    return s;
}

/// Exact thermal attenuator over an interval: expm of the Lindblad
/// superoperator. This is the closed-form Gaussian-channel update used
/// between discrete kicks.
class ThermalAttenuator {
  public:
    ThermalAttenuator(int dim, double kappa, double nbar0, double interval)
        : dim_(dim), channel_(matrix_exp(Matrix(lindblad_superoperator(dim, kappa, nbar0) * interval))) {}

    Matrix apply(const Matrix& rho) const {
        Eigen::Map<const Vector> v(rho.data(), rho.size());
        Vector out = channel_ * v;
        Matrix m = Eigen::Map<Matrix>(out.data(), dim_, dim_);
        return 0.5 * (m + m.adjoint());
    }

  private:
    int dim_;
    Matrix channel_;
};

enum class DiscreteMode { Expected, Sampled };

/// Discrete per-spin injection: alternate the (stroboscopic-frame) gain kick
/// with exact Lindblad relaxation over delta_t; record observables after each
/// spin. `Expected` applies the channel's deterministic map; `Sampled` draws
/// per-spin post-selection outcomes (success with the fixed probability P_S)
/// and applies the corresponding normalized branch.
inline TimeSeries run_discrete(const MaserConfig& config, const DensityMatrix& rho0, int n_spins,
                               DiscreteMode mode = DiscreteMode::Expected, std::uint64_t seed = 0,
                               bool keep_snapshots = false,
                               const ThermalAttenuator* shared_relax = nullptr) {
    if (n_spins < 0) throw InvalidParameter("run_discrete: n_spins must be >= 0");
    config.validate();
    if (std::isinf(config.delta_t))
        throw InvalidParameter("run_discrete: finite delta_t required");
    const int dim = rho0.dim();
    const ChannelKernel kernel = ChannelKernel::stroboscopic(config.channel, config.delta_t, dim);
    std::optional<ThermalAttenuator> local;
    if (!shared_relax)
        local.emplace(dim, config.kappa, config.nbar0, config.delta_t);
    const ThermalAttenuator& relax = shared_relax ? *shared_relax : *local;

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    const GainChannel& ch = config.channel;
    Matrix fail_kraus;  // orthogonal-post branch, for sampled failure outcomes
    if (mode == DiscreteMode::Sampled && ch.mode == ChannelMode::PostSelectWithFailures)
        fail_kraus = ChannelKernel::stroboscopic(
                         GainChannel::heralded(ch.pre, ch.post->orthogonal(), ch.tau, ch.lambda),
                         config.delta_t, dim)
                         .success_kraus();

    auto sampled_kick = [&](const Matrix& rho) -> Matrix {
        switch (ch.mode) {
            case ChannelMode::HeraldedPostSelect:
                // heralded control enforces success on every spin
                return kernel.apply(rho).rho_out;
            case ChannelMode::PostSelectWithFailures: {
                const bool success = unit(rng) < kernel.fixed_success_probability();
                const Matrix& k = success ? kernel.success_kraus() : fail_kraus;
                Matrix out = k * rho * k.adjoint();
                const double tr = out.trace().real();
                if (tr < 1e-14) throw DegeneratePostselection("run_discrete: branch trace vanished");
                return out / tr;
            }
            case ChannelMode::SpinTrace: {
                const bool up = unit(rng) < std::norm(ch.pre.up_amplitude());
                const Matrix& b = up ? kernel.branches().up : kernel.branches().down;
                Matrix out = b * rho * b.adjoint();
                return out / out.trace().real();
            }
        }
        throw InvalidParameter("run_discrete: unknown channel mode");
    };

    TimeSeries series;
    Matrix rho = rho0.entries();
    auto record = [&](int k, const Matrix& state, double drift) {
        series.times.push_back(k * config.delta_t);
        series.mean_phonons.push_back(detail::mean_phonons_raw(state));
        series.g2_zero.push_back(detail::g2_raw(state));
        series.trace_drift.push_back(drift);
        if (keep_snapshots) series.snapshots.emplace_back(k * config.delta_t, DensityMatrix(state));
    };
    record(0, rho, 0.0);
    for (int k = 1; k <= n_spins; ++k) {
        rho = (mode == DiscreteMode::Expected) ? kernel.apply(rho).rho_out : sampled_kick(rho);
        rho = relax.apply(rho);
        const double drift = std::abs(rho.trace().real() - 1.0);
        rho /= rho.trace().real();
        record(k, rho, drift);
    }
    return series;
}

}  // namespace phonomaser
