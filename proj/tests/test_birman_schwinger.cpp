#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "wgt/birman_schwinger.hpp"
#include "wgt/errors.hpp"
#include "wgt/fit.hpp"

using namespace wgt;
constexpr double pi = std::numbers::pi;

namespace {

// Bisection root of g on [a, b] assuming a sign change.
template <class F>
double bisect_root(F g, double a, double b) {
    double ga = g(a);
    for (int i = 0; i < 200; ++i) {
        const double m = 0.5 * (a + b);
        const double gm = g(m);
        if ((gm < 0.0) == (ga < 0.0)) {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    return 0.5 * (a + b);
}

// Even ground state of -d^2/dx^2 - depth on |x| < a.
double even_bound_state(double depth, double a) {
    const double kmax = std::min(std::sqrt(depth), 0.5 * pi / a) * (1.0 - 1e-15);
    const double k = bisect_root(
        [&](double k) { return k * std::tan(k * a) - std::sqrt(depth - k * k); }, 1e-12, kmax);
    return k * k - depth;
}

WaveguideModel separable_well(int n_omega, int n_x) {
    const auto cs = CrossSection::interval(pi);
    return make_model(cs, Potential::square_well(10.0, {0.0, 0.0}, {pi, 0.0}, -0.5, 0.5), n_omega,
                      n_x);
}

WaveguideModel unit_box(int n_omega, int n_x) {
    const auto cs = CrossSection::interval(pi);
    return make_model(cs, Potential::square_well(1.0, {1.0, 0.0}, {2.0, 0.0}, 0.0, 1.0), n_omega,
                      n_x);
}

} // namespace

TEST_CASE("square root branch") {
    CHECK(std::abs(sqrt_branch(Complex(-4.0, 0.0)) - Complex(0.0, 2.0)) < 1e-15);
    CHECK(std::abs(sqrt_branch(Complex(-4.0, -0.0)) - Complex(0.0, 2.0)) < 1e-15);
    CHECK(std::abs(sqrt_branch(Complex(4.0, 0.0)) - Complex(2.0, 0.0)) < 1e-15);
    const Complex k(0.3, -0.2);
    CHECK(std::abs(sqrt_branch(-k * k) - Complex(0.0, 1.0) * k) < 1e-15);
    for (double t : {1e-3, 0.5}) {
        CHECK(sqrt_branch(-Complex(t, 0.0) * Complex(t, 0.0)) == Complex(0.0, t));
        const Complex ki(0.0, -t);
        CHECK(sqrt_branch(-ki * ki) == Complex(t, 0.0));
    }
}

TEST_CASE("free kernel values") {
    CHECK(std::abs(free_kernel(-1.0, 0.0, 2.0) - 0.5 * std::exp(-2.0)) < 1e-16);
    const Complex v = free_kernel(4.0, 1.0, 0.0);
    CHECK(std::abs(v - Complex(0.0, 1.0) * std::exp(Complex(0.0, 2.0)) / 4.0) < 1e-16);
    CHECK_THROWS_AS(free_kernel_r(0.0, 1.0), DomainError);
}

TEST_CASE("kernel difference is stable and consistent") {
    const Complex z(2.0, 0.5);
    for (double r : {0.0, 0.3, 2.0}) {
        const Complex d = Complex(0.01, 0.02);
        const Complex direct = free_kernel_r(z + d, r) - free_kernel_r(z, r);
        CHECK(std::abs(free_kernel_difference(z, d, r) - direct) < 1e-14);
        CHECK(free_kernel_difference(z, 0.0, r) == Complex(0.0));
        // derivative of i e^{isr}/(2s) in z, s = sqrt z
        const Complex s = sqrt_branch(z);
        const Complex deriv = -std::exp(Complex(0.0, 1.0) * s * r) * (r * s + Complex(0.0, 1.0)) /
                              (2.0 * s * s) / (2.0 * s);
        const double h = 1e-9;
        CHECK(std::abs(free_kernel_difference(z, h, r) / h - deriv) < 1e-7 * std::abs(deriv));
    }
}

TEST_CASE("spectral point regions") {
    CHECK(SpectralPoint::make(4.0, 0.0).region == Region::Axis);
    CHECK(SpectralPoint::make(4.0, Complex(0.1, 0.0), 0.5).region == Region::BoundaryReal);
    CHECK(SpectralPoint::make(4.0, Complex(0.0, -0.1), 0.5).region == Region::BoundaryImaginary);
    CHECK(SpectralPoint::make(4.0, Complex(0.1, -0.1), 0.5).region == Region::Sector);
    CHECK_THROWS_AS(SpectralPoint::make(4.0, Complex(-0.1, -0.1), 0.5), DomainError);
    CHECK_THROWS_AS(SpectralPoint::make(4.0, Complex(0.1, 0.1), 0.5), DomainError);
    CHECK_THROWS_AS(SpectralPoint::make(4.0, Complex(0.6, 0.0), 0.5), DomainError);
    const auto p = SpectralPoint::make(4.0, Complex(0.1, -0.2), 0.5);
    CHECK(std::abs(p.z() - (4.0 - Complex(0.1, -0.2) * Complex(0.1, -0.2))) < 1e-15);
}

TEST_CASE("zero potential gives u") {
    const auto cs = CrossSection::interval(pi);
    const auto m = make_model(cs, Potential::zero(cs, 0.0, 1.0), 4, 8);
    const auto op = bs_operator(SpectralPoint::make(2.0, 0.0), m, 1e-3);
    CHECK((op.matrix - ComplexMatrix::Identity(m.dim(), m.dim())).norm() == 0.0);
}

TEST_CASE("grid operator entries and symmetry") {
    const auto m = unit_box(4, 12);
    const auto pt = SpectralPoint::make(4.0, Complex(0.05, -0.02), 0.5);
    const auto op = bs_operator(pt, m, 1e-2);
    CHECK(op.tail_bound <= 1e-2);
    CHECK(op.matrix.rows() == m.dim());
    CHECK((op.matrix - op.matrix.transpose()).norm() <= 1e-14 * op.matrix.norm());
    // one entry against a direct mode sum
    const auto modes = m.modes(op.n_max);
    const Index i = 1, j = 2, k = 3, l = 7;
    Complex sum = 0.0;
    for (const auto& md : modes)
        sum += mode_value(m.cross_section, md, m.grid.omega[size_t(i)]) *
               mode_value(m.cross_section, md, m.grid.omega[size_t(j)]) *
               free_kernel(pt.z() - md.eigenvalue, m.grid.x(k), m.grid.x(l));
    const Index I = m.grid.index(i, k), J = m.grid.index(j, l);
    sum *= m.b(I) * m.b(J);
    CHECK(std::abs(op.matrix(I, J) - sum) < 1e-14 * std::abs(sum));
}

TEST_CASE("below every threshold the operator is real symmetric") {
    const auto m = unit_box(4, 10);
    const auto op = bs_operator(SpectralPoint::make(0.5, 0.0), m, 1e-3);
    CHECK(op.matrix.imag().norm() == 0.0);
}

TEST_CASE("tail certificate bounds the truncation error") {
    const auto m = unit_box(6, 10);
    for (double lam : {0.5, 4.5}) {
        const auto pt = SpectralPoint::make(lam, 0.0);
        const double tol = 0.05;
        const auto op = bs_operator(pt, m, tol);
        const auto big = bs_operator(pt, m, tol, 2 * op.n_max);
        CHECK(op.tail_bound <= tol);
        CHECK(op_norm(big.matrix - op.matrix) <= 2.0 * tol);
        CHECK(op_norm(big.matrix - op.matrix) <= 2.0 * op.tail_bound);
    }
    CHECK_THROWS_AS(bs_operator(SpectralPoint::make(0.5, 0.0), m, 1e-3, 2), TruncationError);
}

TEST_CASE("weighted resolvent norm on the line") {
    // |R0(lambda)(r)|^2 = 1/(4 lambda) for lambda > 0, so the norm is pi/(2 sqrt(lambda)) at s = 1
    for (double lam : {4.0, 16.0}) {
        const auto d = hs_diagnostic(lam, 0.0, 1.0, 1.0);
        CHECK(d.hs_norm == doctest::Approx(pi / (2.0 * std::sqrt(lam))).epsilon(1e-6));
        CHECK(std::isnan(d.diff_norm));
    }
    std::vector<double> lams{4.0, 16.0, 64.0, 256.0}, vals;
    for (double lam : lams) vals.push_back(hs_diagnostic(lam, Complex(0.1, 0.05), 2.0, 1.0).hs_norm);
    CHECK(fit_growth_exponent(lams, vals) == doctest::Approx(-0.5).epsilon(0.05));
    CHECK(hs_diagnostic(4.0, 0.0, 2.0, 1.0).diff_norm == 0.0);
    std::vector<double> zs{1e-3, 1e-2, 1e-1}, dn;
    for (double z : zs) dn.push_back(hs_diagnostic(4.0, Complex(0.0, z), 2.0, 1.0).diff_norm);
    CHECK(fit_growth_exponent(zs, dn) == doctest::Approx(1.0).epsilon(0.05));
    CHECK_THROWS_AS(hs_diagnostic(0.5, 0.0, 1.0, 1.0), PreconditionError);
    CHECK_THROWS_AS(hs_diagnostic(4.0, Complex(0.0, -0.1), 1.0, 1.0), PreconditionError);
    CHECK_THROWS_AS(hs_diagnostic(4.0, 0.6, 1.0, 1.0), PreconditionError);
    CHECK_THROWS_AS(hs_diagnostic(4.0, 0.0, 0.5, 1.0), PreconditionError);
}

TEST_CASE("smallest singular value") {
    ComplexMatrix a(3, 3);
    a << 2.0, Complex(0.0, 1.0), 0.0, 0.5, 1.0, Complex(1.0, 1.0), 0.0, 0.3, 4.0;
    Eigen::BDCSVD<ComplexMatrix> svd(a);
    CHECK(smallest_singular_value(a) ==
          doctest::Approx(svd.singularValues().minCoeff()).epsilon(1e-10));
    ComplexMatrix s = ComplexMatrix::Zero(2, 2);
    s(0, 0) = 1.0;
    CHECK(smallest_singular_value(s) == 0.0);
}

TEST_CASE("separable well bound states") {
    // V independent of the transverse variable: channels decouple, so the
    // eigenvalues are lambda_n plus the bound states of the 1-D well.
    EigenSearchOptions opt;
    opt.tail_tol = 1.0;
    const double e0 = even_bound_state(10.0, 0.5);
    const auto found = eigenvalue_search(-8.0, 0.9, separable_well(4, 60), 30, opt);
    REQUIRE(found.size() == 2);
    CHECK(found[0].self_adjoint);
    CHECK(found[0].relative_sigma < 1e-6);
    CHECK(std::abs(found[0].lambda - (1.0 + e0)) < 1e-2);
    CHECK(std::abs(found[1].lambda - (4.0 + e0)) < 1e-2);
    CHECK(std::abs((found[1].lambda - found[0].lambda) - 3.0) < 1e-9);
    CHECK_THROWS_AS(eigenvalue_search(0.5, 1.5, separable_well(4, 10), 10, opt), PreconditionError);
}

TEST_CASE("bound state converges at second order in the longitudinal grid") {
    EigenSearchOptions opt;
    opt.tail_tol = 10.0;
    const double exact = 1.0 + even_bound_state(10.0, 0.5);
    std::vector<double> e;
    for (int nx : {40, 80, 160}) {
        const auto f = eigenvalue_search(-8.0, 0.9, separable_well(2, nx), 30, opt);
        REQUIRE(f.size() == 1);
        e.push_back(f[0].lambda - exact);
    }
    CHECK(std::abs(e[0] / e[1]) > 3.5);
    CHECK(std::abs(e[1] / e[2]) > 3.5);
    CHECK(std::abs((4.0 * e[2] - e[1]) / 3.0) < 1e-5);
}

TEST_CASE("optical factor reproduces the imaginary part") {
    const auto m = unit_box(4, 16);
    const double lam = 6.5;
    for (const auto& md : m.modes(4)) {
        const RealMatrix b = optical_factor(m, md, lam);
        const ComplexMatrix t = mode_term(m, md, lam);
        const double scale = std::max(1.0, t.norm());
        if (md.eigenvalue < lam) {
            CHECK(b.rows() == 2);
            CHECK((b.transpose() * b - t.imag()).norm() <= 1e-12 * scale);
        } else {
            CHECK(b.rows() == 0);
            CHECK(t.imag().norm() == 0.0);
        }
    }
}
