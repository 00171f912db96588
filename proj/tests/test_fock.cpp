#include <catch2/catch_amalgamated.hpp>

#include <complex>
#include <random>

#include "phonomaser/fock.hpp"

using namespace phonomaser;
using Catch::Matchers::WithinAbs;

namespace {
double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }
}  // namespace

TEST_CASE("ladder operators act as sqrt(n) shifts") {
    auto [b, bd, num] = ladder_operators(4);

    Vector fock3 = Vector::Zero(4);
    fock3(3) = 1.0;
    Vector lowered = b.entries() * fock3;
    REQUIRE_THAT(std::abs(lowered(2)), WithinAbs(std::sqrt(3.0), 1e-15));
    REQUIRE_THAT(lowered.norm(), WithinAbs(std::sqrt(3.0), 1e-15));

    // canonical commutator away from the cutoff edge
    Matrix comm = b.entries() * bd.entries() - bd.entries() * b.entries();
    REQUIRE(max_abs(comm.topLeftCorner(3, 3) - Matrix::Identity(3, 3)) < 1e-15);

    for (int n = 0; n < 4; ++n) REQUIRE(num.entries()(n, n) == Complex(n, 0));
    REQUIRE(max_abs(num.entries() - bd.entries() * b.entries()) < 1e-14);

    REQUIRE_THROWS_AS(ladder_operators(1), InvalidDimension);
}

TEST_CASE("creation is exactly the adjoint of annihilation") {
    for (int dim : {2, 5, 17, 40}) {
        auto [b, bd, num] = ladder_operators(dim);
        REQUIRE(max_abs(bd.entries() - b.entries().adjoint()) == 0.0);
        REQUIRE(max_abs(b.adjoint().adjoint().entries() - b.entries()) == 0.0);
    }
}

TEST_CASE("mixed dimensions are rejected") {
    auto a = FockOperator::identity(4);
    auto c = FockOperator::identity(5);
    REQUIRE_THROWS_AS(a * c, InvalidDimension);
}

TEST_CASE("matrix_exp basics") {
    REQUIRE(max_abs(matrix_exp(Matrix(Matrix::Zero(5, 5))) - Matrix::Identity(5, 5)) < 1e-15);

    // exp(i pi n) has diagonal (1, -1, 1, -1)
    auto [b, bd, num] = ladder_operators(4);
    Matrix e = matrix_exp(Matrix(Complex(0, pi) * num.entries()));
    for (int n = 0; n < 4; ++n)
        REQUIRE_THAT(std::abs(e(n, n) - Complex(n % 2 == 0 ? 1.0 : -1.0, 0.0)), WithinAbs(0.0, 1e-14));

    // nilpotent 2x2
    Matrix nil = Matrix::Zero(2, 2);
    nil(0, 1) = Complex(3.0, -2.0);
    Matrix en = matrix_exp(nil);
    REQUIRE_THAT(std::abs(en(0, 0) - Complex(1, 0)), WithinAbs(0.0, 1e-14));
    REQUIRE_THAT(std::abs(en(1, 1) - Complex(1, 0)), WithinAbs(0.0, 1e-14));
    REQUIRE_THAT(std::abs(en(0, 1) - nil(0, 1)), WithinAbs(0.0, 1e-15));

    Matrix bad = Matrix::Zero(2, 2);
    bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
    REQUIRE_THROWS_AS(matrix_exp(bad), NumericError);
}

TEST_CASE("matrix_exp inverse property up to norm 10") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 6; ++trial) {
        Matrix a(8, 8);
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 8; ++j) a(i, j) = Complex(u(rng), u(rng));
        a *= 10.0 / a.cwiseAbs().colwise().sum().maxCoeff();
        REQUIRE(max_abs(matrix_exp(a) * matrix_exp(Matrix(-a)) - Matrix::Identity(8, 8)) < 1e-10);
    }
}

TEST_CASE("displacement of vacuum is a coherent state") {
    REQUIRE(max_abs(displacement(0.0, 12).entries() - Matrix::Identity(12, 12)) < 1e-14);

    // alpha = lambda eta at tau = pi, lambda = 0.001
    const Complex alpha = 0.002;
    const int dim = 26;
    auto [b, bd, num] = ladder_operators(dim);
    Vector vac = Vector::Zero(dim);
    vac(0) = 1.0;
    Vector state = displacement(alpha, dim).entries() * vac;
    const double mean = (state.adjoint() * num.entries() * state)(0).real();
    REQUIRE_THAT(mean, WithinAbs(4e-6, 1e-12));
}

TEST_CASE("displacement group inverse and unitarity on the interior") {
    const int dim = 26;
    for (Complex alpha : {Complex(0.5, 0.0), Complex(1.0, 0.0), Complex(0.7, -0.7), Complex(2.0, 0.0)}) {
        const int k = displacement_interior_dim(alpha, dim);
        INFO("alpha = " << alpha << " interior = " << k);
        REQUIRE(k >= 1);
        Matrix prod = displacement(alpha, dim).entries() * displacement(-alpha, dim).entries();
        REQUIRE(max_abs(prod.topLeftCorner(k, k) - Matrix::Identity(k, k)) < 1e-10);
        Matrix gram = displacement(alpha, dim).adjoint().entries() * displacement(alpha, dim).entries();
        REQUIRE(max_abs(gram.topLeftCorner(k, k) - Matrix::Identity(k, k)) < 1e-10);
    }
}

TEST_CASE("displacement entries match the exact matrix elements") {
    // reference: <m|D(a)|n> for m >= n is sqrt(n!/m!) a^(m-n) e^(-|a|^2/2) L_n^(m-n)(|a|^2),
    // evaluated here through the recurrence on associated Laguerre polynomials
    auto exact_entry = [](Complex a, int m, int n) {
        const double x = std::norm(a);
        const int d = std::abs(m - n);
        const int k = std::min(m, n);
        // L_k^{(d)}(x) by three-term recurrence
        double l0 = 1.0, l1 = 1.0 + d - x;
        double l = (k == 0) ? l0 : l1;
        for (int i = 2; i <= k; ++i) {
            const double next = ((2.0 * i - 1.0 + d - x) * l1 - (i - 1.0 + d) * l0) / i;
            l0 = l1;
            l1 = next;
            l = next;
        }
        double logpref = 0.5 * (std::lgamma(k + 1.0) - std::lgamma(k + d + 1.0));
        Complex phase = (m >= n) ? std::pow(a, d) : std::pow(-std::conj(a), d);
        return phase * std::exp(logpref - x / 2.0) * l;
    };
    const int dim = 20;
    for (Complex a : {Complex(0.3, 0.2), Complex(1.0, 0.0), Complex(0.0, 1.5)}) {
        Matrix d = displacement(a, dim).entries();
        const int interior = displacement_interior_dim(a, dim);
        for (int m = 0; m < dim; ++m)
            for (int n = 0; n < interior; ++n)
                REQUIRE_THAT(std::abs(d(m, n) - exact_entry(a, m, n)), WithinAbs(0.0, 1e-10));
    }
}

TEST_CASE("thermal state is the truncated geometric distribution") {
    SECTION("vacuum limit") {
        DensityMatrix rho = thermal_state(0.0, 8);
        REQUIRE(rho.entries()(0, 0) == Complex(1, 0));
        REQUIRE(max_abs(rho.entries().bottomRightCorner(7, 7)) == 0.0);
    }
    SECTION("nbar0 = 0.1") {
        DensityMatrix rho = thermal_state(0.1, 26);
        REQUIRE_THAT(rho.entries()(0, 0).real(), WithinAbs(1.0 / 1.1, 1e-12));
        REQUIRE_THAT(rho.trace_real(), WithinAbs(1.0, 1e-15));
        // mean occupancy within truncated tail mass
        double mean = 0.0;
        for (int n = 0; n < 26; ++n) mean += n * rho.entries()(n, n).real();
        REQUIRE_THAT(mean, WithinAbs(0.1, 1e-10));
    }
    SECTION("rejects negative occupancy") {
        REQUIRE_THROWS_AS(thermal_state(-0.5, 8), InvalidParameter);
    }
}

TEST_CASE("density matrix invariants are enforced") {
    Matrix ok = Matrix::Zero(3, 3);
    ok(0, 0) = 0.6;
    ok(1, 1) = 0.8;  // trace 1.4, gets renormalized
    DensityMatrix rho(ok);
    REQUIRE_THAT(rho.trace_real(), WithinAbs(1.0, 1e-15));

    Matrix nonherm = Matrix::Zero(2, 2);
    nonherm(0, 0) = 1.0;
    nonherm(0, 1) = Complex(0.0, 1e-3);
    REQUIRE_THROWS_AS(DensityMatrix(nonherm), ConsistencyError);

    Matrix indef = Matrix::Zero(2, 2);
    indef(0, 0) = 1.1;
    indef(1, 1) = -0.1;
    REQUIRE_THROWS_AS(DensityMatrix(indef), ConsistencyError);
}
