#pragma once

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "phonomaser/closed_form.hpp"
#include "phonomaser/dynamics.hpp"
#include "phonomaser/errors.hpp"
#include "phonomaser/fock.hpp"
#include "phonomaser/gain.hpp"
#include "phonomaser/numerics.hpp"
#include "phonomaser/spin.hpp"

namespace phonomaser {

// Brute-force validators. Each one reaches its answer by a route independent
// of the implementation it checks: the joint oracle exponentiates the full
// Hamiltonian instead of using the factored branch form, the pump map applies
// the binomial product formula literally, the Fokker-Planck check substitutes
// the Gaussian family into the PDE, and the g2 oracle differentiates the
// generating function numerically.

namespace detail {

/// Joint-space operators on C^2 (x) C^dim, oscillator-major ordering
/// (row = 2 n_fock + spin, spin 0 = up).
inline Matrix joint_hamiltonian(double lambda, int dim) {
    auto [ann, cre, num] = ladder_operators(dim);
    Matrix sz = Matrix::Zero(2, 2);
    sz(0, 0) = 1.0;
    sz(1, 1) = -1.0;
    const Matrix id2 = Matrix::Identity(2, 2);
    return kron(num.entries(), id2) - lambda * kron(cre.entries() + ann.entries(), sz);
}

inline Matrix spin_projection(const Matrix& joint, const SpinVector& post, int dim) {
    // <post| joint |post> over the spin factor
    Matrix out = Matrix::Zero(dim, dim);
    const Complex amp[2] = {post.up_amplitude(), post.down_amplitude()};
    for (int m = 0; m < dim; ++m)
        for (int n = 0; n < dim; ++n)
            for (int s = 0; s < 2; ++s)
                for (int sp = 0; sp < 2; ++sp)
                    out(m, n) += std::conj(amp[s]) * joint(2 * m + s, 2 * n + sp) * amp[sp];
    return out;
}

inline Matrix spin_trace(const Matrix& joint, int dim) {
    Matrix out = Matrix::Zero(dim, dim);
    for (int m = 0; m < dim; ++m)
        for (int n = 0; n < dim; ++n)
            out(m, n) = joint(2 * m, 2 * n) + joint(2 * m + 1, 2 * n + 1);
    return out;
}

}  // namespace detail

struct JointComparison {
    Matrix joint_direct;    // exp(-i H tau) route
    Matrix joint_factored;  // conditional-displacement route
    double max_deviation;   // worst entrywise gap among conditioned states
};

/// Evolve rho (x) |pre><pre| with exp(-i H tau), H = n - lambda sigma_z (b + b'),
/// built and exponentiated directly on the joint space, and independently with
/// the factored branch-operator form. Conditioned oscillator states (a fixed
/// post-state set plus the spin trace) are compared entrywise.
///
/// The factored evolution differs from exp(-i H tau) by a global phase only
/// (it is spin-independent because sigma_z^2 = 1), so density-matrix-level
/// agreement is exact up to truncation.
inline JointComparison joint_evolution_compare(const SpinVector& pre, double tau, double lambda,
                                               const DensityMatrix& rho) {
    const int dim = rho.dim();
    if (dim > 64) throw InvalidParameter("joint_evolution_oracle: oracle scale capped at dim 64");

    Matrix spin = Matrix::Zero(2, 2);
    const Complex amp[2] = {pre.up_amplitude(), pre.down_amplitude()};
    for (int s = 0; s < 2; ++s)
        for (int sp = 0; sp < 2; ++sp) spin(s, sp) = amp[s] * std::conj(amp[sp]);
    const Matrix joint0 = kron(rho.entries(), spin);

    const Matrix u_direct = matrix_exp(Matrix(Complex(0.0, -tau) * detail::joint_hamiltonian(lambda, dim)));
    const Matrix joint_direct = u_direct * joint0 * u_direct.adjoint();

    const BranchOperators b = branch_operators(lambda * eta(tau), tau, dim);
    Matrix u_factored = Matrix::Zero(2 * dim, 2 * dim);
    for (int m = 0; m < dim; ++m)
        for (int n = 0; n < dim; ++n) {
            u_factored(2 * m + 0, 2 * n + 0) = b.up(m, n);
            u_factored(2 * m + 1, 2 * n + 1) = b.down(m, n);
        }
    const Matrix joint_factored = u_factored * joint0 * u_factored.adjoint();

    const std::vector<SpinVector> posts = {SpinVector::up(), SpinVector::down(),
                                           SpinVector::plus(), SpinVector(1.0, -1.0),
                                           SpinVector(1.0, Complex(0.0, 1.0))};
    double worst = 0.0;
    for (const SpinVector& post : posts) {
        Matrix a = detail::spin_projection(joint_direct, post, dim);
        Matrix c = detail::spin_projection(joint_factored, post, dim);
        const double ta = a.trace().real(), tc = c.trace().real();
        if (ta < 1e-12 || tc < 1e-12) continue;  // post-selection impossible, no conditioned state
        worst = std::max(worst, ((a / ta) - (c / tc)).cwiseAbs().maxCoeff());
    }
    worst = std::max(worst, (detail::spin_trace(joint_direct, dim) -
                             detail::spin_trace(joint_factored, dim)).cwiseAbs().maxCoeff());
    return {joint_direct, joint_factored, worst};
}

/// joint_evolution_compare with a pass/fail gate: throws FactorizationError
/// beyond `tol`, otherwise returns the directly evolved joint state.
inline DensityMatrix joint_evolution_oracle(const SpinVector& pre, double tau, double lambda,
                                            const DensityMatrix& rho, double tol = 1e-8) {
    JointComparison cmp = joint_evolution_compare(pre, tau, lambda, rho);
    if (cmp.max_deviation > tol)
        throw FactorizationError("joint_evolution_oracle: routes disagree by " +
                                 std::to_string(cmp.max_deviation));
    return DensityMatrix(std::move(cmp.joint_direct));
}

/// Randomized factorization sweep: random pre states at several couplings and
/// interaction times. Returns the largest conditioned-state deviation seen;
/// throws FactorizationError if any point exceeds `tol`.
inline double randomized_factorization_sweep(int dim = 40, std::uint64_t seed = 20190615,
                                             int n_states = 20, double tol = 1e-8) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    const std::vector<double> lambdas = {0.001, 0.01, 0.06};
    const std::vector<double> taus = {pi / 2.0, pi, 1.5 * pi};
    const DensityMatrix rho = thermal_state(0.3, dim);
    double worst = 0.0;
    for (int i = 0; i < n_states; ++i) {
        const SpinVector pre(Complex(unit(rng), unit(rng)), Complex(unit(rng), unit(rng)));
        for (double lambda : lambdas)
            for (double tau : taus)
                worst = std::max(worst, joint_evolution_compare(pre, tau, lambda, rho).max_deviation);
    }
    if (worst > tol)
        throw FactorizationError("randomized_factorization_sweep: worst deviation " +
                                 std::to_string(worst));
    return worst;
}

/// Finite-K pump power map {1 + p (M - 1)}^K applied to rho0, with M the
/// coarse-grained (stroboscopic) gain kick. Only defined for channels whose
/// normalized map is linear; binomial averaging presumes linearity.
inline DensityMatrix pump_map_power(const MaserConfig& config, int K, const DensityMatrix& rho0) {
    if (K < 0) throw InvalidParameter("pump_map_power: K must be >= 0");
    const ChannelKernel kernel = ChannelKernel::stroboscopic(config.channel, config.delta_t, rho0.dim());
    if (!kernel.is_linear())
        throw UnsupportedChannel("pump_map_power: channel's normalized gain map is nonlinear");
    const double p = config.pump_p;
    if (p < 0 || p > 1) throw InvalidParameter("pump_map_power: pump_p must be in [0,1]");
    Matrix rho = rho0.entries();
    for (int k = 0; k < K; ++k) {
        if (p == 0.0) break;  // identity map
        rho = rho + p * (kernel.apply(rho).rho_out - rho);
    }
    return DensityMatrix(rho);
}

/// Substitute the Gaussian solution family into the phase-space transport
/// equation
///   kappa P + (dP/2dB)(kappa B - 4 lambda r) + (dP/2dB*)(kappa B* - 4 lambda r)
///   + kappa nbar0 d2P/dBdB* = dP/dt
/// and return the maximum absolute residual over the grid, normalized by the
/// largest |dP/dt|.
inline double fokker_planck_residual(const ClosedFormSolution& sol, const std::vector<double>& t_grid,
                                     const std::vector<Complex>& beta_grid,
                                     double d_perturbation = 1.0) {
    double worst = 0.0;
    double scale = 0.0;
    for (double t : t_grid) {
        FpCoefficients k = fp_coefficients(sol, t);
        FpCoefficients kd = fp_coefficients_dot(sol, t);
        k.d *= d_perturbation;
        kd.d *= d_perturbation;
        // a(t) from normalization; a_dot by differentiating a = log(-d/pi) + b c / d
        const Complex a = fp_normalization(k);
        const Complex a_dot = kd.d / k.d + (kd.b * k.c + k.b * kd.c) / k.d -
                              k.b * k.c * kd.d / (k.d * k.d);
        for (const Complex& beta : beta_grid) {
            const Complex expo = a + k.b * beta + k.c * std::conj(beta) + k.d * std::norm(beta);
            const double p = std::exp(expo.real()) * std::cos(expo.imag());
            const Complex db = k.b + k.d * std::conj(beta);   // d/dbeta of the exponent
            const Complex dbs = k.c + k.d * beta;             // d/dbeta* of the exponent
            const Complex p_beta = db * p;
            const Complex p_betastar = dbs * p;
            const Complex p_mixed = (k.d + db * dbs) * p;
            const Complex p_t = (a_dot + kd.b * beta + kd.c * std::conj(beta) + kd.d * std::norm(beta)) * p;

            const Complex lhs = sol.kappa * p +
                                0.5 * p_beta * (sol.kappa * beta - 4.0 * sol.lambda * sol.r) +
                                0.5 * p_betastar * (sol.kappa * std::conj(beta) - 4.0 * sol.lambda * sol.r) +
                                sol.kappa * sol.nbar0 * p_mixed;
            worst = std::max(worst, std::abs(lhs - p_t));
            scale = std::max(scale, std::abs(p_t));
        }
    }
    if (scale <= 0.0) throw InvalidParameter("fokker_planck_residual: vanishing dP/dt on grid");
    return worst / scale;
}

/// g2(0) via the generating function Q(s) = sum_n (1-s)^n P(n):
/// g2 = Q''(0) / <n>^2 with <n> = -Q'(0). Derivatives by central differences
/// (base step 1e-4) with one Richardson extrapolation step; the series is
/// truncated at n_max, which must cover the distribution (default
/// 10 + 10 nbar_SS).
inline double g2_series_oracle(const ClosedFormSolution& sol, double t, int n_max = -1) {
    if (n_max < 0) n_max = static_cast<int>(std::ceil(10.0 + 10.0 * sol.steady_state_mean()));
    std::vector<double> p(n_max + 1);
    for (int n = 0; n <= n_max; ++n) p[n] = pn_analytic(sol, t, n);
    double tail = 1.0;
    for (double v : p) tail -= v;
    if (std::abs(tail) > 1e-8)
        throw PrecisionError("g2_series_oracle: series truncation leaves mass " + std::to_string(tail));

    // extended precision for Q: the second difference divides by h^2 = 1e-8,
    // so double rounding of Q would leave ~1e-5 relative noise on Q''
    auto q = [&](long double s) {
        long double acc = 0.0L;
        const long double base = 1.0L - s;
        long double pw = 1.0L;
        for (int n = 0; n <= n_max; ++n, pw *= base) acc += pw * static_cast<long double>(p[n]);
        return acc;
    };
    auto second = [&](long double h) { return (q(h) - 2.0L * q(0.0L) + q(-h)) / (h * h); };
    auto first = [&](long double h) { return (q(h) - q(-h)) / (2.0L * h); };

    const long double h = 1e-4L;
    const double d2 = static_cast<double>((4.0L * second(h / 2.0L) - second(h)) / 3.0L);  // Richardson
    const double d1 = static_cast<double>((4.0L * first(h / 2.0L) - first(h)) / 3.0L);
    const double mean = -d1;
    if (mean <= 0.0) throw std::domain_error("g2_series_oracle: zero mean");
    return d2 / (mean * mean);
}

}  // namespace phonomaser
