#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "phonomaser/errors.hpp"
#include "phonomaser/numerics.hpp"

namespace phonomaser {

/// Parameters of the analytic solution family: scaled coupling, damping,
/// bath occupancy, injection rate, plus the initial Gaussian width epsilon
/// and center beta0 of the phase-space distribution.
struct ClosedFormSolution {
    double lambda;
    double kappa;
    double nbar0;
    double r;
    double epsilon;
    Complex beta0;

    ClosedFormSolution(double lambda_, double kappa_, double nbar0_, double r_,
                       double epsilon_ = -1.0, Complex beta0_ = 0.0)
        : lambda(lambda_), kappa(kappa_), nbar0(nbar0_), r(r_),
          epsilon(epsilon_ < 0 ? (nbar0_ > 0 ? nbar0_ : 1.0) : epsilon_), beta0(beta0_) {
        if (!(kappa > 0)) throw InvalidParameter("ClosedFormSolution: kappa must be > 0");
        if (nbar0 < 0) throw InvalidParameter("ClosedFormSolution: nbar0 must be >= 0");
        if (r < 0) throw InvalidParameter("ClosedFormSolution: r must be >= 0");
        if (!(epsilon > 0)) throw InvalidParameter("ClosedFormSolution: epsilon must be > 0");
    }

    double beta1_infinity() const { return 4.0 * lambda * r / kappa; }
    double steady_state_mean() const { return nbar0 + beta1_infinity() * beta1_infinity(); }
};

/// Drift amplitude beta1(t) = (4 lambda r / kappa)(1 - exp(-kappa t / 2)).
inline double beta1_t(const ClosedFormSolution& sol, double t) {
    if (t < 0) throw InvalidParameter("beta1_t: t must be >= 0");
    return sol.beta1_infinity() * (1.0 - std::exp(-sol.kappa * t / 2.0));
}

/// Mean phonon number nbar0 + beta1(t)^2; the steady state is
/// nbar0 + 16 lambda^2 r^2 / kappa^2.
inline double mean_phonons_analytic(const ClosedFormSolution& sol, double t) {
    const double b = beta1_t(sol, t);
    return sol.nbar0 + b * b;
}

namespace detail {

/// log of the displaced-thermal number distribution
/// p_n = q^n/(1+nbar) exp(-S/(1+nbar)) L_n(-S/(nbar(1+nbar))), q = nbar/(1+nbar),
/// with L_n evaluated from its (all-positive at negative argument) series in
/// log space. Exact Poisson limit for nbar = 0.
inline double displaced_thermal_pn_laguerre(int n, double nbar, double amp_sq) {
    if (nbar <= 0.0) {
        if (amp_sq == 0.0) return (n == 0) ? 1.0 : 0.0;
        return std::exp(-amp_sq + n * std::log(amp_sq) - log_factorial(n));
    }
    const double q = nbar / (1.0 + nbar);
    double log_laguerre = 0.0;
    if (amp_sq > 0.0) {
        const double y = amp_sq / (nbar * (1.0 + nbar));
        const double log_y = std::log(y);
        std::vector<double> terms(n + 1);
        double tmax = -std::numeric_limits<double>::infinity();
        for (int k = 0; k <= n; ++k) {
            terms[k] = log_factorial(n) - log_factorial(k) - log_factorial(n - k)
                     + k * log_y - log_factorial(k);
            tmax = std::max(tmax, terms[k]);
        }
        double s = 0.0;
        for (int k = 0; k <= n; ++k) s += std::exp(terms[k] - tmax);
        log_laguerre = tmax + std::log(s);
    }
    return std::exp(n * std::log(q) - std::log1p(nbar) - amp_sq / (1.0 + nbar) + log_laguerre);
}

/// Polar Gauss-Legendre evaluation of
/// (1/(pi nbar n!)) Int d^2 beta |beta|^{2n} exp(-|beta|^2 - |beta - b1|^2/nbar).
/// Domains are clipped around the integrand's radial peak and the angular
/// ridge at phi = 0 so the node budget concentrates where the mass is.
inline double displaced_thermal_pn_quadrature(int n, double nbar, double b1,
                                              int radial_nodes, int angular_nodes) {
    if (nbar <= 0.0) throw InvalidParameter("pn quadrature: requires nbar > 0");
    const double inv = 1.0 / nbar;
    const double a_coeff = 1.0 + inv;  // quadratic confinement
    // radial peak of 2n log(rho) - a rho^2 + 2 b1 rho / nbar
    const double lin = b1 * inv;
    const double rho_peak = (lin + std::sqrt(lin * lin + 4.0 * n * a_coeff)) / (2.0 * a_coeff);
    const double width = 1.0 / std::sqrt(2.0 * (n / std::max(rho_peak * rho_peak, 1e-30) + a_coeff));
    const double lo = std::max(0.0, rho_peak - 14.0 * width);
    const double hi = rho_peak + 14.0 * width;

    const QuadratureRule radial = gauss_legendre(radial_nodes, lo, hi);
    const QuadratureRule angular_unit = gauss_legendre(angular_nodes, 0.0, 1.0);
    const double log_norm = -std::log(pi * nbar) - log_factorial(n);

    double total = 0.0;
    double emax_global = -std::numeric_limits<double>::infinity();
    struct Cell { double log_f; double meas; };
    std::vector<Cell> cells;
    cells.reserve(static_cast<size_t>(radial_nodes) * angular_nodes);

    for (int i = 0; i < radial_nodes; ++i) {
        const double rho = radial.nodes[i];
        if (rho <= 0.0) continue;
        const double c = 2.0 * rho * b1 * inv;  // angular ridge sharpness
        const double phi_max = (c > 4.0) ? std::min(pi, 16.0 / std::sqrt(c)) : pi;
        QuadratureRule angular = angular_unit;  // affine image of the cached unit rule
        for (int j = 0; j < angular_nodes; ++j) {
            angular.nodes[j] *= phi_max;
            angular.weights[j] *= phi_max;
        }
        // exponent split so the O(1/nbar) pieces cancel analytically:
        // -(rho^2 + b1^2 - 2 rho b1 cos phi)/nbar = -(rho-b1)^2/nbar - c (1 - cos phi)
        const double log_radial = 2.0 * n * std::log(rho) - rho * rho
                                - (rho - b1) * (rho - b1) * inv + log_norm + std::log(rho);
        for (int j = 0; j < angular_nodes; ++j) {
            const double sin_half = std::sin(0.5 * angular.nodes[j]);
            const double log_f = log_radial - 2.0 * c * sin_half * sin_half;
            const double meas = 2.0 * radial.weights[i] * angular.weights[j];  // symmetry in phi
            emax_global = std::max(emax_global, log_f);
            cells.push_back({log_f, meas});
        }
    }
    if (!std::isfinite(emax_global) || emax_global < -745.0) return 0.0;
    for (const Cell& cell : cells) total += cell.meas * std::exp(cell.log_f - emax_global);
    return total * std::exp(emax_global);
}

}  // namespace detail

/// P(n) at time t: the displaced-thermal number distribution at amplitude
/// beta1(t), evaluated by polar Gauss-Legendre quadrature and cross-checked
/// against the closed Laguerre form on every call. A node-doubling
/// convergence check and the dual-route agreement gate (1e-9) both throw
/// PrecisionError on failure.
inline double pn_analytic(const ClosedFormSolution& sol, double t, int n) {
    if (n < 0) throw InvalidParameter("pn_analytic: n must be >= 0");
    const double b1 = beta1_t(sol, t);
    const double lag = detail::displaced_thermal_pn_laguerre(n, sol.nbar0, b1 * b1);
    if (sol.nbar0 <= 0.0) return lag;  // exact coherent limit, no integral needed

    const double coarse = detail::displaced_thermal_pn_quadrature(n, sol.nbar0, b1, 200, 128);
    const double fine = detail::displaced_thermal_pn_quadrature(n, sol.nbar0, b1, 400, 256);
    const double change = std::abs(fine - coarse);
    if (change > 1e-9 * std::max(std::abs(fine), 1e-300) && change > 1e-13)
        throw PrecisionError("pn_analytic: quadrature did not converge under node doubling");
    if (std::abs(fine - lag) > 1e-9)
        throw PrecisionError("pn_analytic: quadrature and Laguerre closed form disagree");
    return fine;
}

/// Second-order coherence from the solution family:
/// g2(t) = (2 n0^2 + 4 b1^2 n0 + b1^4) / (n0^2 + 2 b1^2 n0 + b1^4).
inline double g2_analytic(const ClosedFormSolution& sol, double t) {
    const double b2 = beta1_t(sol, t) * beta1_t(sol, t);
    const double n0 = sol.nbar0;
    const double denom = n0 * n0 + 2.0 * b2 * n0 + b2 * b2;
    if (denom <= 0.0)
        throw std::domain_error("g2_analytic: undefined for the vacuum (nbar0 = 0, beta1 = 0)");
    return (2.0 * n0 * n0 + 4.0 * b2 * n0 + b2 * b2) / denom;
}

/// Steady-state phase-diffusion linewidth kappa nbar0 / (2 nbar_SS).
inline double linewidth_analytic(const ClosedFormSolution& sol) {
    const double nss = sol.steady_state_mean();
    if (!(nss > 0)) throw std::domain_error("linewidth_analytic: requires nbar_SS > 0");
    return sol.kappa * sol.nbar0 / (2.0 * nss);
}

/// Coefficients of the Gaussian phase-space ansatz
/// P = exp(a + b beta + c beta* + d beta beta*).
struct FpCoefficients {
    Complex b;
    Complex c;
    double d;
};

/// The printed coefficient formulas:
///   b(t) = c(t) = (4 lambda r / kappa nbar0)(1 - e^{-kappa t/2}) + (beta0/nbar0) e^{-kappa t/2}
///   d(t) = -1 / (nbar0 (1 - e^{-kappa t}) + epsilon e^{-kappa t})
/// For complex beta0 the b coefficient carries conj(beta0) so that the
/// induced distribution stays real.
inline FpCoefficients fp_coefficients(const ClosedFormSolution& sol, double t) {
    if (t < 0) throw InvalidParameter("fp_coefficients: t must be >= 0");
    if (!(sol.nbar0 > 0)) throw InvalidParameter("fp_coefficients: requires nbar0 > 0");
    const double decay_half = std::exp(-sol.kappa * t / 2.0);
    const double decay_full = std::exp(-sol.kappa * t);
    const double drift = (4.0 * sol.lambda * sol.r / (sol.kappa * sol.nbar0)) * (1.0 - decay_half);
    FpCoefficients out;
    out.b = drift + std::conj(sol.beta0) / sol.nbar0 * decay_half;
    out.c = drift + sol.beta0 / sol.nbar0 * decay_half;
    out.d = -1.0 / (sol.nbar0 * (1.0 - decay_full) + sol.epsilon * decay_full);
    return out;
}

/// Time derivatives of the printed coefficients (analytic).
inline FpCoefficients fp_coefficients_dot(const ClosedFormSolution& sol, double t) {
    const double decay_half = std::exp(-sol.kappa * t / 2.0);
    const double drift_dot = (2.0 * sol.lambda * sol.r / sol.nbar0) * decay_half;
    const FpCoefficients now = fp_coefficients(sol, t);
    FpCoefficients out;
    out.b = drift_dot - (sol.kappa / 2.0) * std::conj(sol.beta0) / sol.nbar0 * decay_half;
    out.c = drift_dot - (sol.kappa / 2.0) * sol.beta0 / sol.nbar0 * decay_half;
    out.d = sol.kappa * now.d + sol.kappa * sol.nbar0 * now.d * now.d;  // Riccati flow of d
    return out;
}

/// Normalization coefficient a(t) recovered from unit total probability:
/// Int exp(a + b beta + c beta* + d |beta|^2) d^2 beta = 1 requires
/// a = log(-d/pi) + b c / d (d < 0).
inline Complex fp_normalization(const FpCoefficients& k) {
    if (!(k.d < 0)) throw InvalidParameter("fp_normalization: d must be negative");
    return std::log(-k.d / pi) + k.b * k.c / k.d;
}

/// Value of the normalized Gaussian ansatz at phase-space point beta.
inline double fp_value(const FpCoefficients& k, Complex beta) {
    const Complex a = fp_normalization(k);
    const Complex e = a + k.b * beta + k.c * std::conj(beta) + k.d * std::norm(beta);
    return std::exp(e.real()) * std::cos(e.imag());
}

/// Mean amplitude <beta> of the normalized Gaussian ansatz: -c/d
/// (the conjugate-coordinate coefficient over the curvature).
inline Complex fp_mean(const FpCoefficients& k) {
    if (!(k.d < 0)) throw InvalidParameter("fp_mean: d must be negative");
    return -k.c / k.d;
}

}  // namespace phonomaser
