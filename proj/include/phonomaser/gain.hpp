#pragma once

#include <cmath>
#include <complex>
#include <optional>
#include <utility>

#include "phonomaser/errors.hpp"
#include "phonomaser/fock.hpp"
#include "phonomaser/numerics.hpp"
#include "phonomaser/spin.hpp"

namespace phonomaser {

enum class ChannelMode { HeraldedPostSelect, PostSelectWithFailures, SpinTrace };

/// How the failure channel combines the success and orthogonal branches.
///
///   FixedGlobal:    weight the unnormalized branch outcomes by the fixed
///                   spin-only P_S and 1-P_S, then normalize the sum once.
///                   This is the weighted-projector average and the variant
///                   that produces distinct lasing from spin tracing.
///   FixedPerBranch: normalize each branch first, then mix with fixed P_S.
///                   Nearly indistinguishable from spin tracing at weak
///                   coupling; kept as a configuration switch.
///   StateDependent: weight by the state-dependent joint probabilities,
///                   which reduces exactly to the spin-trace channel.
enum class FailureWeighting { FixedGlobal, FixedPerBranch, StateDependent };

/// eta(tau) = 1 - exp(-i tau); the per-interaction displacement is lambda*eta.
inline Complex eta(double tau) { return 1.0 - std::exp(Complex(0.0, -tau)); }

/// One spin-conditioned gain map: pre/post spin states, interaction time tau
/// (units of 1/omega_m) and scaled coupling lambda = lambda0/omega_m.
struct GainChannel {
    ChannelMode mode;
    SpinVector pre;
    std::optional<SpinVector> post;
    double tau;
    double lambda;
    FailureWeighting failure_weighting = FailureWeighting::FixedGlobal;

    static GainChannel heralded(SpinVector pre, SpinVector post, double tau, double lambda) {
        validate(tau, lambda);
        return {ChannelMode::HeraldedPostSelect, pre, post, tau, lambda, FailureWeighting::FixedGlobal};
    }
    static GainChannel with_failures(SpinVector pre, SpinVector post, double tau, double lambda,
                                     FailureWeighting w = FailureWeighting::FixedGlobal) {
        validate(tau, lambda);
        return {ChannelMode::PostSelectWithFailures, pre, post, tau, lambda, w};
    }
    static GainChannel spin_trace(SpinVector pre, double tau, double lambda) {
        validate(tau, lambda);
        return {ChannelMode::SpinTrace, pre, std::nullopt, tau, lambda, FailureWeighting::FixedGlobal};
    }

    /// Fixed spin-only success probability |<post|pre>|^2 (1 for SpinTrace).
    double success_probability() const {
        return post ? spin_overlap_probability(pre, *post) : 1.0;
    }

  private:
    static void validate(double tau, double lambda) {
        if (!(tau > 0)) throw InvalidParameter("GainChannel: tau must be > 0");
        if (lambda < 0) throw InvalidParameter("GainChannel: lambda must be >= 0");
    }
};

/// Branch evolution operators for the two sigma_z eigenvalues:
/// B_{+1} = D(+alpha) R(phase), B_{-1} = D(-alpha) R(phase) with R = exp(-i n phase).
struct BranchOperators {
    Matrix up;
    Matrix down;
    int dim;
};

inline BranchOperators branch_operators(Complex alpha, double rotation_phase, int dim) {
    Matrix rot = Matrix::Zero(dim, dim);
    for (int n = 0; n < dim; ++n) rot(n, n) = std::exp(Complex(0.0, -rotation_phase * n));
    return {displacement(alpha, dim).entries() * rot,
            displacement(-alpha, dim).entries() * rot, dim};
}

/// sigma_z = sign branch of the factored per-spin evolution applied to rho:
/// D(sign lambda eta) R(tau) rho R(tau)^dag D(-sign lambda eta). Unnormalized
/// (trace-preserving here since the branch operator is unitary on the interior).
inline Matrix conditioned_branch_map(int sign, double tau, double lambda, const DensityMatrix& rho) {
    if (sign != 1 && sign != -1) throw InvalidParameter("conditioned_branch_map: sign must be +-1");
    const BranchOperators b = branch_operators(lambda * eta(tau), tau, rho.dim());
    const Matrix& op = (sign == 1) ? b.up : b.down;
    return op * rho.entries() * op.adjoint();
}

struct GainResult {
    Matrix rho_out;
    double success_weight;
};

/// Precomputed application kernel for a gain channel on a fixed-dimension
/// Fock space. Two frames are supported:
///
///   per-spin:     alpha = lambda eta(tau), rotation = tau. The literal
///                 single-interaction map.
///   stroboscopic: alpha = lambda eta(tau) exp(-i delta_t), rotation =
///                 (tau + delta_t) mod 2pi. The kick as seen at injection
///                 instants, with the free oscillator phase accrued over one
///                 full injection cycle folded in. The damping part of the
///                 maser equation is phase covariant, so this is the frame in
///                 which the coarse-grained equation is integrated; for the
///                 resonant spacings used throughout (tau + delta_t a multiple
///                 of 2pi) the kick reduces to a pure displacement.
class ChannelKernel {
  public:
    static ChannelKernel per_spin(const GainChannel& ch, int dim) {
        return ChannelKernel(ch, ch.lambda * eta(ch.tau), ch.tau, dim);
    }

    static ChannelKernel stroboscopic(const GainChannel& ch, double delta_t, int dim) {
        const Complex alpha = ch.lambda * eta(ch.tau) * std::exp(Complex(0.0, -delta_t));
        const double rotation = std::fmod(ch.tau + delta_t, 2.0 * pi);
        return ChannelKernel(ch, alpha, rotation, dim);
    }

    const GainChannel& channel() const { return channel_; }
    int dim() const { return branches_.dim; }
    const BranchOperators& branches() const { return branches_; }
    double fixed_success_probability() const { return ps_; }

    GainResult apply(const Matrix& rho) const {
        switch (channel_.mode) {
            case ChannelMode::HeraldedPostSelect: {
                Matrix out = k_post_ * rho * k_post_.adjoint();
                const double w = out.trace().real();
                if (w < 1e-14)
                    throw DegeneratePostselection("gain_map: post-selection has vanishing success trace");
                out /= w;
                return {hermitize(out), w};
            }
            case ChannelMode::SpinTrace: {
                const double wu = std::norm(channel_.pre.up_amplitude());
                const double wd = std::norm(channel_.pre.down_amplitude());
                Matrix out = wu * (branches_.up * rho * branches_.up.adjoint()) +
                             wd * (branches_.down * rho * branches_.down.adjoint());
                return {hermitize(out), 1.0};
            }
            case ChannelMode::PostSelectWithFailures: {
                const Matrix succ = k_post_ * rho * k_post_.adjoint();
                const Matrix fail = k_orth_ * rho * k_orth_.adjoint();
                switch (channel_.failure_weighting) {
                    case FailureWeighting::FixedGlobal: {
                        Matrix out = ps_ * succ + (1.0 - ps_) * fail;
                        const double tr = out.trace().real();
                        if (tr < 1e-14)
                            throw DegeneratePostselection("gain_map: weighted branch sum has vanishing trace");
                        return {hermitize(out / tr), ps_};
                    }
                    case FailureWeighting::FixedPerBranch: {
                        const double ts = succ.trace().real();
                        const double tf = fail.trace().real();
                        if (ts < 1e-14 || tf < 1e-14)
                            throw DegeneratePostselection("gain_map: branch with vanishing trace");
                        return {hermitize(ps_ * (succ / ts) + (1.0 - ps_) * (fail / tf)), ps_};
                    }
                    case FailureWeighting::StateDependent: {
                        // joint-probability weights; identical to the spin trace
                        return {hermitize(succ + fail), succ.trace().real()};
                    }
                }
                throw InvalidParameter("gain_map: unknown failure weighting");
            }
        }
        throw InvalidParameter("gain_map: unknown channel mode");
    }

    /// Kraus operator of the success branch (post-selection onto `post`).
    const Matrix& success_kraus() const { return k_post_; }
    /// True when apply() is a linear map of rho.
    bool is_linear() const {
        if (channel_.mode == ChannelMode::SpinTrace) return true;
        if (channel_.mode == ChannelMode::HeraldedPostSelect) {
            // K is proportional to a unitary iff only one branch contributes
            const Complex a = std::conj(channel_.post->up_amplitude()) * channel_.pre.up_amplitude();
            const Complex b = std::conj(channel_.post->down_amplitude()) * channel_.pre.down_amplitude();
            return std::abs(a) < 1e-14 || std::abs(b) < 1e-14;
        }
        return false;
    }

  private:
    ChannelKernel(const GainChannel& ch, Complex alpha, double rotation, int dim)
        : channel_(ch), branches_(branch_operators(alpha, rotation, dim)), ps_(ch.success_probability()) {
        if (ch.mode != ChannelMode::SpinTrace) {
            if (!ch.post) throw InvalidParameter("GainChannel: post state required for this mode");
            k_post_ = kraus_for(*ch.post);
            if (ch.mode == ChannelMode::PostSelectWithFailures)
                k_orth_ = kraus_for(ch.post->orthogonal());
        }
    }

    Matrix kraus_for(const SpinVector& post) const {
        return std::conj(post.up_amplitude()) * channel_.pre.up_amplitude() * branches_.up +
               std::conj(post.down_amplitude()) * channel_.pre.down_amplitude() * branches_.down;
    }

    static Matrix hermitize(const Matrix& m) { return 0.5 * (m + m.adjoint()); }

    GainChannel channel_;
    BranchOperators branches_;
    double ps_;
    Matrix k_post_;
    Matrix k_orth_;
};

/// Apply the per-spin gain map of `channel` to `rho`. Returns the normalized
/// output state and the mode's success weight (state-dependent trace for
/// heralded post-selection, 1 for tracing, fixed P_S for the failure channel).
inline std::pair<DensityMatrix, double> gain_map(const GainChannel& channel, const DensityMatrix& rho) {
    const GainResult r = ChannelKernel::per_spin(channel, rho.dim()).apply(rho.entries());
    return {DensityMatrix(r.rho_out), r.success_weight};
}

}  // namespace phonomaser
