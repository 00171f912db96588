#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <complex>
#include <iostream>
#include <tuple>
#include <utility>

#include "phonomaser/errors.hpp"
#include "phonomaser/numerics.hpp"

namespace phonomaser {

/// Dense operator on an N-level truncated Fock space. Entries are
/// dimensionless (hbar = 1, time in units of 1/omega_m).
class FockOperator {
  public:
    FockOperator(int dim, Matrix entries) : dim_(dim), m_(std::move(entries)) {
        if (dim_ < 2) throw InvalidDimension("FockOperator: dim must be >= 2");
        if (m_.rows() != dim_ || m_.cols() != dim_)
            throw InvalidDimension("FockOperator: entries shape does not match dim");
    }

    static FockOperator identity(int dim) { return {dim, Matrix::Identity(dim, dim)}; }
    static FockOperator zero(int dim) { return {dim, Matrix::Zero(dim, dim)}; }

    int dim() const { return dim_; }
    const Matrix& entries() const { return m_; }

    FockOperator adjoint() const { return {dim_, m_.adjoint()}; }

    FockOperator operator*(const FockOperator& rhs) const {
        require_same_dim(rhs);
        return {dim_, m_ * rhs.m_};
    }
    FockOperator operator+(const FockOperator& rhs) const {
        require_same_dim(rhs);
        return {dim_, m_ + rhs.m_};
    }
    FockOperator operator-(const FockOperator& rhs) const {
        require_same_dim(rhs);
        return {dim_, m_ - rhs.m_};
    }
    friend FockOperator operator*(Complex s, const FockOperator& op) {
        return {op.dim_, s * op.m_};
    }

  private:
    void require_same_dim(const FockOperator& rhs) const {
        if (dim_ != rhs.dim_)
            throw InvalidDimension("FockOperator: mixed dimensions in binary operation");
    }

    int dim_;
    Matrix m_;
};

/// Hermitian, unit-trace, positive-semidefinite (up to a -1e-9 truncation
/// floor) state of the oscillator or of the joint spin (x) oscillator system.
/// Construction renormalizes the trace and rejects states violating the
/// Hermiticity or positivity tolerances.
class DensityMatrix {
  public:
    static constexpr double hermiticity_tol = 1e-12;
    static constexpr double eigenvalue_floor = -1e-9;

    explicit DensityMatrix(Matrix entries) : dim_(static_cast<int>(entries.rows())), m_(std::move(entries)) {
        if (dim_ < 1 || m_.cols() != dim_)
            throw InvalidDimension("DensityMatrix: square matrix required");
        const double herm = (m_ - m_.adjoint()).cwiseAbs().maxCoeff();
        if (herm > hermiticity_tol)
            throw ConsistencyError("DensityMatrix: Hermiticity violated by " + std::to_string(herm));
        const Complex tr = m_.trace();
        if (std::abs(tr) < 1e-300)
            throw ConsistencyError("DensityMatrix: vanishing trace");
        m_ /= tr;
        Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m_ + m_.adjoint()), Eigen::EigenvaluesOnly);
        const double min_eig = es.eigenvalues().minCoeff();
        if (min_eig < eigenvalue_floor)
            throw ConsistencyError("DensityMatrix: eigenvalue " + std::to_string(min_eig) +
                                   " below truncation floor");
    }

    int dim() const { return dim_; }
    const Matrix& entries() const { return m_; }
    double trace_real() const { return m_.trace().real(); }

  private:
    int dim_;
    Matrix m_;
};

/// Annihilation, creation and number operators on a dim-level space.
/// annihilation(n-1, n) = sqrt(n); creation is its adjoint; number is diagonal 0..dim-1.
inline std::tuple<FockOperator, FockOperator, FockOperator> ladder_operators(int dim) {
    if (dim < 2) throw InvalidDimension("ladder_operators: dim must be >= 2");
    Matrix b = Matrix::Zero(dim, dim);
    Matrix num = Matrix::Zero(dim, dim);
    for (int n = 1; n < dim; ++n) {
        b(n - 1, n) = std::sqrt(static_cast<double>(n));
        num(n, n) = n;  // = creation * annihilation, held exactly
    }
    return {FockOperator(dim, b), FockOperator(dim, b.adjoint()), FockOperator(dim, num)};
}

/// exp(A) for Fock operators; see numerics.hpp for the algorithm.
inline FockOperator matrix_exp(const FockOperator& a) {
    return {a.dim(), matrix_exp(a.entries())};
}

namespace detail {
inline Matrix displacement_generator(Complex alpha, int dim) {
    Matrix g = Matrix::Zero(dim, dim);
    for (int n = 1; n < dim; ++n) {
        const double s = std::sqrt(static_cast<double>(n));
        g(n, n - 1) = alpha * s;           // alpha b^dag
        g(n - 1, n) = -std::conj(alpha) * s;  // -conj(alpha) b
    }
    return g;
}
}  // namespace detail

/// Displacement operator D(alpha) = exp(alpha b^dag - conj(alpha) b).
///
/// Built on a padded space of dimension dim + max(16, ceil(4|alpha|)) and
/// truncated back, which confines the exponential's edge distortion to the
/// discarded rows: the retained entries match the untruncated operator's
/// matrix elements to ~1e-10 on interior columns. |alpha|^2 <= dim/4 is
/// recommended; larger displacements only act accurately on the lowest levels.
inline FockOperator displacement(Complex alpha, int dim) {
    if (dim < 2) throw InvalidDimension("displacement: dim must be >= 2");
    if (std::norm(alpha) > dim / 4.0)
        std::clog << "[phonomaser] warning: displacement |alpha|^2 = " << std::norm(alpha)
                  << " exceeds dim/4 = " << dim / 4.0 << "; edge levels will be inaccurate\n";
    const int pad = std::max(16, static_cast<int>(std::ceil(4.0 * std::abs(alpha))));
    const Matrix full = matrix_exp(detail::displacement_generator(alpha, dim + pad));
    return {dim, full.topLeftCorner(dim, dim)};
}

/// Largest leading block size on which truncated displacement products can be
/// trusted to ~1e-10: levels whose displaced support stays clear of the cutoff.
inline int displacement_interior_dim(Complex alpha, int dim) {
    const double a = std::abs(alpha);
    int k = 0;
    while (k < dim && (k + a * a + 5.0 * a * std::sqrt(k + 1.0) + 8.0) <= dim - 1) ++k;
    return k;
}

/// Parity operator (-1)^n.
inline FockOperator parity(int dim) {
    Matrix p = Matrix::Zero(dim, dim);
    for (int n = 0; n < dim; ++n) p(n, n) = (n % 2 == 0) ? 1.0 : -1.0;
    return {dim, p};
}

/// Thermal state with mean occupancy nbar0: diagonal geometric distribution
/// p_n proportional to (nbar0/(1+nbar0))^n, renormalized on the truncated space.
inline DensityMatrix thermal_state(double nbar0, int dim) {
    if (nbar0 < 0) throw InvalidParameter("thermal_state: nbar0 must be >= 0");
    if (dim < 2) throw InvalidDimension("thermal_state: dim must be >= 2");
    Matrix rho = Matrix::Zero(dim, dim);
    if (nbar0 == 0.0) {
        rho(0, 0) = 1.0;
    } else {
        const double q = nbar0 / (1.0 + nbar0);
        double p = 1.0;
        double sum = 0.0;
        for (int n = 0; n < dim; ++n, p *= q) {
            rho(n, n) = p;
            sum += p;
        }
        rho /= sum;
    }
    return DensityMatrix(rho);
}

/// Coherent state |alpha> on the truncated space (renormalized).
inline Vector coherent_state(Complex alpha, int dim) {
    Vector v(dim);
    // amplitudes alpha^n / sqrt(n!), stable in log space
    v(0) = 1.0;
    for (int n = 1; n < dim; ++n) v(n) = v(n - 1) * alpha / std::sqrt(static_cast<double>(n));
    v.normalize();
    return v;
}

}  // namespace phonomaser
