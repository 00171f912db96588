#pragma once

#include <cmath>
#include <complex>
#include <iostream>
#include <stdexcept>
#include <vector>

#include "phonomaser/errors.hpp"
#include "phonomaser/fock.hpp"
#include "phonomaser/numerics.hpp"

namespace phonomaser {

/// Tr(n rho). The imaginary residue is checked (consistency error above 1e-8)
/// and discarded.
inline double mean_phonons(const DensityMatrix& rho) {
    Complex acc = 0.0;
    for (int n = 0; n < rho.dim(); ++n) acc += static_cast<double>(n) * rho.entries()(n, n);
    if (std::abs(acc.imag()) > 1e-8)
        throw ConsistencyError("mean_phonons: imaginary residue " + std::to_string(acc.imag()));
    return acc.real();
}

struct ClampReport {
    int clamped_entries = 0;
    double largest_excursion = 0.0;  // most negative diagonal seen, as magnitude
};

/// Fock-basis diagonal of rho. Small negative truncation noise (within the
/// -1e-9 floor) is clamped to zero; clamps are reported and logged.
inline std::vector<double> number_distribution(const DensityMatrix& rho,
                                               ClampReport* report = nullptr) {
    std::vector<double> p(rho.dim());
    ClampReport local;
    for (int n = 0; n < rho.dim(); ++n) {
        double v = rho.entries()(n, n).real();
        if (v < 0.0) {
            local.clamped_entries += 1;
            local.largest_excursion = std::max(local.largest_excursion, -v);
            v = 0.0;
        }
        p[n] = v;
    }
    if (local.clamped_entries > 0)
        std::clog << "[phonomaser] number_distribution: clamped " << local.clamped_entries
                  << " negative diagonal entries (worst " << local.largest_excursion << ")\n";
    if (report) *report = local;
    return p;
}

/// g2(0) = Tr(b'b'bb rho) / Tr(b'b rho)^2 = <n(n-1)> / <n>^2.
inline double g2_zero_numeric(const DensityMatrix& rho) {
    double m1 = 0.0, m2 = 0.0;
    for (int n = 0; n < rho.dim(); ++n) {
        const double p = rho.entries()(n, n).real();
        m1 += n * p;
        m2 += static_cast<double>(n) * (n - 1.0) * p;
    }
    if (m1 <= 0.0) throw std::domain_error("g2_zero_numeric: zero mean phonon number");
    return m2 / (m1 * m1);
}

/// Wigner function by displaced parity, W(alpha) = (2/pi) Tr[D(-alpha) rho D(alpha) P].
///
/// The state is embedded (exactly) into a larger Fock space when the grid
/// reaches beyond the trust region |alpha|^2 <= dim/4 of the displacement on
/// the state's own cutoff; points outside the evaluation space's trust region
/// trigger a warning.
inline std::vector<double> wigner(const DensityMatrix& rho, const std::vector<Complex>& grid,
                                  int eval_dim = 0) {
    double max_abs2 = 0.0;
    for (const Complex& a : grid) {
        if (!std::isfinite(a.real()) || !std::isfinite(a.imag()))
            throw InvalidParameter("wigner: non-finite grid point");
        max_abs2 = std::max(max_abs2, std::norm(a));
    }
    int dim = rho.dim();
    if (eval_dim > dim) dim = eval_dim;
    if (max_abs2 > dim / 4.0)
        std::clog << "[phonomaser] warning: wigner grid reaches |alpha|^2 = " << max_abs2
                  << " beyond dim/4 = " << dim / 4.0 << "\n";

    Matrix state = Matrix::Zero(dim, dim);
    state.topLeftCorner(rho.dim(), rho.dim()) = rho.entries();
    const Matrix par = parity(dim).entries();

    std::vector<double> w(grid.size());
    for (size_t i = 0; i < grid.size(); ++i) {
        const Matrix d = displacement(-grid[i], dim).entries();
        const Matrix shifted = d * state * d.adjoint();
        const Complex tr = (shifted * par).trace();
        if (std::abs(tr.imag()) > 1e-8)
            throw ConsistencyError("wigner: imaginary residue in parity trace");
        w[i] = (2.0 / pi) * tr.real();
    }
    return w;
}

/// Wigner function on a rectangular grid of points x + i y.
///
/// Same displaced-parity definition as wigner(), using
/// Tr[D(-a) rho D(a) P] = Tr[rho D(2a) P] and the factorization
/// D(2a) = e^{i 4 x y} D(2x) D(2iy), so one displacement per grid row and
/// column suffices instead of one per point. Returns w[iy * xs.size() + ix].
inline std::vector<double> wigner_grid(const DensityMatrix& rho, const std::vector<double>& xs,
                                       const std::vector<double>& ys, int eval_dim = 0) {
    int dim = rho.dim();
    if (eval_dim > dim) dim = eval_dim;
    double max_abs2 = 0.0;
    for (double x : xs)
        for (double y : ys) max_abs2 = std::max(max_abs2, x * x + y * y);
    if (max_abs2 > dim / 4.0)
        std::clog << "[phonomaser] warning: wigner grid reaches |alpha|^2 = " << max_abs2
                  << " beyond dim/4 = " << dim / 4.0 << "\n";

    Matrix state = Matrix::Zero(dim, dim);
    state.topLeftCorner(rho.dim(), rho.dim()) = rho.entries();
    const Matrix par = parity(dim).entries();

    std::vector<Matrix> row_ops;  // D(2iy) P rho, one per y
    row_ops.reserve(ys.size());
    for (double y : ys)
        row_ops.push_back(displacement(Complex(0.0, 2.0 * y), dim).entries() * par * state);
    std::vector<Matrix> col_ops;  // D(2x), one per x
    col_ops.reserve(xs.size());
    for (double x : xs) col_ops.push_back(displacement(Complex(2.0 * x, 0.0), dim).entries());

    std::vector<double> w(xs.size() * ys.size());
    for (size_t j = 0; j < ys.size(); ++j)
        for (size_t i = 0; i < xs.size(); ++i) {
            // Tr[rho D(2x) D(2iy) P] = Tr[(D(2iy) P rho) D(2x)], using
            // Tr(AB) = sum_{mn} A(m,n) B(n,m) without forming the product
            const Complex tr = row_ops[j].transpose().cwiseProduct(col_ops[i]).sum();
            const Complex phase = std::exp(Complex(0.0, 4.0 * xs[i] * ys[j]));
            w[j * xs.size() + i] = (2.0 / pi) * (phase * tr).real();
        }
    return w;
}

}  // namespace phonomaser
