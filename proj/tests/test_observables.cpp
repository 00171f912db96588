#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <vector>

#include "phonomaser/fock.hpp"
#include "phonomaser/observables.hpp"

using namespace phonomaser;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {
DensityMatrix fock_projector(int level, int dim) {
    Matrix m = Matrix::Zero(dim, dim);
    m(level, level) = 1.0;
    return DensityMatrix(m);
}

DensityMatrix coherent_density(Complex alpha, int dim) {
    Vector v = coherent_state(alpha, dim);
    return DensityMatrix(Matrix(v * v.adjoint()));
}
}  // namespace

TEST_CASE("mean phonons") {
    REQUIRE(mean_phonons(fock_projector(0, 8)) == 0.0);

    DensityMatrix coh = coherent_density(Complex(1.2, -0.5), 40);
    REQUIRE_THAT(mean_phonons(coh), WithinAbs(1.69, 1e-8));

    REQUIRE_THAT(mean_phonons(thermal_state(0.1, 26)), WithinAbs(0.1, 1e-10));
}

TEST_CASE("number distribution") {
    SECTION("Fock state") {
        std::vector<double> p = number_distribution(fock_projector(2, 6));
        for (int n = 0; n < 6; ++n) REQUIRE_THAT(p[n], WithinAbs(n == 2 ? 1.0 : 0.0, 1e-15));
    }
    SECTION("thermal ratio") {
        std::vector<double> p = number_distribution(thermal_state(0.1, 26));
        for (int n = 0; n + 1 < 12; ++n) REQUIRE_THAT(p[n + 1] / p[n], WithinAbs(1.0 / 11.0, 1e-12));
        double sum = 0.0;
        for (double v : p) sum += v;
        REQUIRE_THAT(sum, WithinAbs(1.0, 1e-10));
    }
    SECTION("negative truncation noise is clamped and reported") {
        Matrix m = Matrix::Zero(3, 3);
        m(0, 0) = 1.0 + 5e-10;
        m(1, 1) = -5e-10;  // within the -1e-9 floor
        DensityMatrix rho(m);
        ClampReport report;
        std::vector<double> p = number_distribution(rho, &report);
        REQUIRE(p[1] == 0.0);
        REQUIRE(report.clamped_entries == 1);
        REQUIRE(report.largest_excursion > 0.0);
    }
}

TEST_CASE("numeric g2") {
    REQUIRE_THAT(g2_zero_numeric(fock_projector(1, 6)), WithinAbs(0.0, 1e-15));
    REQUIRE_THAT(g2_zero_numeric(thermal_state(0.1, 26)), WithinAbs(2.0, 1e-6));
    REQUIRE_THAT(g2_zero_numeric(coherent_density(1.1, 40)), WithinAbs(1.0, 1e-8));
    REQUIRE_THROWS_AS(g2_zero_numeric(fock_projector(0, 4)), std::domain_error);
}

TEST_CASE("Wigner function by displaced parity") {
    SECTION("vacuum at the origin") {
        std::vector<double> w = wigner(fock_projector(0, 12), {Complex(0.0, 0.0)});
        REQUIRE_THAT(w[0], WithinAbs(2.0 / pi, 1e-12));
    }
    SECTION("thermal parity at the origin") {
        for (double nbar : {0.1, 0.7}) {
            std::vector<double> w = wigner(thermal_state(nbar, 30), {Complex(0.0, 0.0)});
            REQUIRE_THAT(w[0], WithinAbs((2.0 / pi) / (2.0 * nbar + 1.0), 1e-10));
        }
    }
    SECTION("covariance under displacement: displaced state = shifted grid") {
        const int dim = 34;
        const Complex shift(0.9, 0.0);
        DensityMatrix rho = thermal_state(0.3, dim);
        Matrix d = displacement(shift, dim).entries();
        DensityMatrix moved(Matrix(d * rho.entries() * d.adjoint()));

        std::vector<Complex> grid, shifted_grid;
        for (double x = -1.0; x <= 1.01; x += 0.5)
            for (double y = -1.0; y <= 1.01; y += 0.5) {
                grid.emplace_back(x, y);
                shifted_grid.emplace_back(x - shift.real(), y - shift.imag());
            }
        std::vector<double> w_moved = wigner(moved, grid);
        std::vector<double> w_base = wigner(rho, shifted_grid);
        for (size_t i = 0; i < grid.size(); ++i)
            REQUIRE_THAT(w_moved[i], WithinAbs(w_base[i], 1e-8));
    }
    SECTION("grid evaluation agrees with the pointwise route") {
        const int dim = 22;
        DensityMatrix rho0 = thermal_state(0.2, dim);
        Matrix d = displacement(Complex(0.6, -0.4), dim).entries();
        DensityMatrix rho(Matrix(d * rho0.entries() * d.adjoint()));

        std::vector<double> xs = {-1.0, -0.3, 0.0, 0.5, 1.2};
        std::vector<double> ys = {-0.8, 0.0, 0.7};
        std::vector<Complex> points;
        for (double y : ys)
            for (double x : xs) points.emplace_back(x, y);

        std::vector<double> fast = wigner_grid(rho, xs, ys, 40);
        std::vector<double> slow = wigner(rho, points, 40);
        for (size_t i = 0; i < points.size(); ++i)
            REQUIRE_THAT(fast[i], WithinAbs(slow[i], 1e-9));
    }
    SECTION("quasi-probability integrates to one") {
        const double nbar = 0.4;
        DensityMatrix rho = thermal_state(nbar, 24);
        const double extent = 4.0 * std::sqrt(nbar) + 1.5;
        const int npts = 41;
        const double step = 2.0 * extent / (npts - 1);
        std::vector<Complex> grid;
        for (int i = 0; i < npts; ++i)
            for (int j = 0; j < npts; ++j)
                grid.emplace_back(-extent + i * step, -extent + j * step);
        std::vector<double> w = wigner(rho, grid, 48);
        double integral = 0.0;
        for (double v : w) integral += v * step * step;
        REQUIRE_THAT(integral, WithinRel(1.0, 0.01));
    }
}
