#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "support/random_matrices.hpp"
#include "wgt/family_io.hpp"
#include "wgt/inversion.hpp"

using namespace wgt;
using namespace wgt::testing;

namespace {

OperatorFamily scalar_z() {
    OperatorFamily f;
    f.base = ComplexMatrix::Zero(1, 1);
    f.remainder = [](Complex) { return ComplexMatrix::Identity(1, 1); };
    f.remainder_delta = [](Complex) { return ComplexMatrix::Zero(1, 1); };
    f.remainder_derivative = ComplexMatrix::Zero(1, 1);
    f.bound = 1.0;
    return f;
}

double rel_err(const ComplexMatrix& a, const ComplexMatrix& b) {
    return (a - b).norm() / b.norm();
}

} // namespace

TEST_CASE("verify_conditions trivial cases") {
    const ComplexMatrix a = 2.0 * ComplexMatrix::Identity(3, 3);
    CHECK(verify_conditions(a, Projection::zero(3)).ok);
    CHECK(verify_conditions(ComplexMatrix::Zero(2, 2), Projection::identity(2)).ok);
}

TEST_CASE("verify_conditions on an engineered A0 with its kernel projection") {
    std::mt19937_64 rng(21);
    const EngineeredA0 e = engineered_a0(rng, 8, 2);
    const ConditionReport r = verify_conditions(e.a0, kernel_projector(e.a0));
    CHECK(r.ok);
    CHECK(r.cond_i_margin > 0.0);
}

TEST_CASE("verify_conditions reports failure of (ii) for an oblique kernel") {
    ComplexMatrix a(2, 2);
    a << 0.0, 1.0, 0.0, 0.0; // kernel e1, range e1: S(A+S)^{-1}S != S
    const ConditionReport r = verify_conditions(a, kernel_projector(a));
    CHECK_FALSE(r.ok);
}

TEST_CASE("b_operator for the scalar family z") {
    const OperatorFamily f = scalar_z();
    const Complex z(0.01, -0.02);
    const BOperator b = b_operator(f, Projection::identity(1), z);
    CHECK(std::abs(b.compressed(0, 0) - 1.0 / (1.0 + z)) < 4e-16);
    const BOperator b0 = b_operator(f, Projection::zero(1), z);
    CHECK(b0.compressed.size() == 0);
}

TEST_CASE("b_operator series and quotient forms agree") {
    std::mt19937_64 rng(22);
    const RandomFamily rf = random_family(rng, 6, 2);
    const BOperator b = b_operator(rf.family, rf.s, Complex(2e-3, 1e-3));
    CHECK(b.agreement <= 1e-10 * std::max(1.0, b.full.norm()));
    CHECK(b.compressed.rows() == 2);
    CHECK(b.tail_bound < 1e-14 * 10);
}

TEST_CASE("b_operator refuses a non-contractive series") {
    std::mt19937_64 rng(23);
    const RandomFamily rf = random_family(rng, 6, 2);
    CHECK_THROWS_AS(b_operator(rf.family, rf.s, Complex(50.0, 0.0)), DomainError);
}

TEST_CASE("jn_invert scalar family gives 1/z") {
    const OperatorFamily f = scalar_z();
    for (Complex z : {Complex(1e-6, 0.0), Complex(3e-3, -1e-3), Complex(0.0, 1e-2)}) {
        const InversionResult r = jn_invert(f, Projection::identity(1), z);
        REQUIRE(r.invertible);
        CHECK(std::abs(r.inverse(0, 0) - 1.0 / z) <= 8e-16 * std::abs(1.0 / z));
    }
}

TEST_CASE("jn_invert with S = 0 is the direct inverse") {
    std::mt19937_64 rng(24);
    OperatorFamily f;
    f.base = random_matrix(rng, 5, 5) + 5.0 * ComplexMatrix::Identity(5, 5);
    const ComplexMatrix c = random_matrix(rng, 5, 5);
    f.remainder = [c](Complex) { return c; };
    const Complex z(1e-3, 2e-3);
    const InversionResult r = jn_invert(f, Projection::zero(5), z);
    CHECK(rel_err(r.inverse, f.evaluate(z).inverse()) < 1e-13);
}

TEST_CASE("jn_invert matches direct inversion on a random corpus") {
    std::mt19937_64 rng(25);
    std::uniform_int_distribution<int> dim(4, 12), ker(0, 3);
    std::uniform_real_distribution<double> lg(-6.0, -2.0), ph(0.0, 6.283185307179586);
    for (int t = 0; t < 30; ++t) {
        const Index n = dim(rng);
        const RandomFamily rf = random_family(rng, n, std::min<Index>(ker(rng), n - 1));
        const Complex z = std::polar(std::pow(10.0, lg(rng)), ph(rng));
        const InversionResult r = jn_invert(rf.family, rf.s, z);
        REQUIRE(r.invertible);
        CHECK(rel_err(r.inverse, rf.family.evaluate(z).inverse()) <= 1e-9);
    }
}

TEST_CASE("jn_invert reports singular B exactly when A(z) is singular") {
    // A(z) = diag(0, 1) + z diag(1 - z/z0, 0): singular at z = z0
    const Complex z0(4e-3, 1e-3);
    OperatorFamily f;
    f.base = ComplexMatrix::Zero(2, 2);
    f.base(1, 1) = 1.0;
    f.remainder = [z0](Complex z) {
        ComplexMatrix m = ComplexMatrix::Zero(2, 2);
        m(0, 0) = 1.0 - z / z0;
        return m;
    };
    const Projection s = kernel_projector(f.base);
    const InversionResult at = jn_invert(f, s, z0);
    CHECK_FALSE(at.invertible);
    CHECK(rcond(f.evaluate(z0)) < 1e-12);
    const InversionResult off = jn_invert(f, s, 0.5 * z0);
    CHECK(off.invertible);
}

TEST_CASE("check_a0_annihilation") {
    std::mt19937_64 rng(26);
    const EngineeredA0 e = engineered_a0(rng, 9, 3);
    const AnnihilationReport r = check_a0_annihilation(e.a0);
    CHECK(r.rank == 3);
    CHECK(r.pass);
    ComplexMatrix nil(2, 2);
    nil << 0.0, 1.0, 0.0, 0.0;
    CHECK_THROWS_AS(check_a0_annihilation(nil), PreconditionError);
}

TEST_CASE("check_a0_annihilation on a self-adjoint matrix with kernel") {
    std::mt19937_64 rng(27);
    const ComplexMatrix u = random_unitary(rng, 6);
    Eigen::VectorXd d(6);
    d << 0.0, 1.0, -2.0, 0.5, 3.0, 0.0;
    const ComplexMatrix a = u * d.cast<Complex>().asDiagonal() * u.adjoint();
    const AnnihilationReport r = check_a0_annihilation(a);
    CHECK(r.rank == 2);
    CHECK(r.left_defect <= 1e-12 * r.scale);
}

TEST_CASE("check_riesz_orthogonal") {
    std::mt19937_64 rng(28);
    const EngineeredA0 e = engineered_a0(rng, 8, 2);
    const OrthogonalityReport r = check_riesz_orthogonal(e.a0);
    CHECK(r.pass);
    CHECK(r.riesz_vs_orthogonal <= 1e-8);
    // negative control: Im A0 indefinite, oblique Riesz projection
    ComplexMatrix bad(2, 2);
    bad << 0.0, Complex(0.0, 1.0), 0.0, Complex(0.0, -1.0);
    const OrthogonalityReport nb = check_riesz_orthogonal(bad);
    CHECK_FALSE(nb.hypothesis_ok);
    CHECK_FALSE(nb.pass);
}

TEST_CASE("check_factor_annihilation") {
    std::mt19937_64 rng(29);
    const EngineeredA0 e = engineered_a0(rng, 8, 2);
    const Projection s = kernel_projector(e.a0);
    const FactorReport r = check_factor_annihilation(e.zs, e.x, s);
    CHECK(r.pass);
    CHECK(r.max_zs <= 1e-8 * r.max_z);
    const FactorReport z = check_factor_annihilation(e.zs, e.x, Projection::zero(8));
    CHECK(z.max_zs == 0.0);
    CHECK_THROWS_AS(check_factor_annihilation(e.zs, e.x, Projection::identity(8)),
                    PreconditionError);
}

TEST_CASE("build_ladder with invertible base is a single terminal level") {
    std::mt19937_64 rng(30);
    const RandomFamily rf = random_family(rng, 6, 0);
    const Ladder lad = build_ladder(rf.family);
    REQUIRE(lad.levels.size() == 1);
    CHECK(lad.levels[0].terminal);
    CHECK(lad.levels[0].projection.rank == 0);
}

TEST_CASE("build_ladder for the scalar family z") {
    const Ladder lad = build_ladder(scalar_z());
    REQUIRE(lad.levels.size() == 2);
    CHECK(lad.levels[0].projection.rank == 1);
    CHECK(std::abs(lad.levels[1].leading(0, 0) - 1.0) < 1e-15);
    CHECK(lad.levels[1].terminal);
    const Complex k(1e-3, -1e-3);
    CHECK(std::abs(ladder_inverse(lad, k)(0, 0) - 1.0 / k) < 1e-12 * std::abs(1.0 / k));
}

TEST_CASE("ladder with two singular levels reproduces the direct inverse") {
    // A(k) = diag(0,0,1) + k C(k) with S0 C(0) S0 of rank 1 on range(S0)
    std::mt19937_64 rng(31);
    const ComplexMatrix u = random_unitary(rng, 3);
    OperatorFamily f;
    ComplexMatrix d = ComplexMatrix::Zero(3, 3);
    d(2, 2) = 1.0;
    f.base = u * d * u.adjoint();
    ComplexMatrix c0 = ComplexMatrix::Zero(3, 3);
    c0(0, 0) = 1.0;
    c0(2, 2) = 0.3;
    c0(0, 2) = 0.2;
    c0(2, 0) = 0.2;
    c0 = u * c0 * u.adjoint();
    const ComplexMatrix c1 = 0.5 * random_hermitian(rng, 3);
    f.remainder = [c0, c1](Complex k) -> ComplexMatrix { return c0 + k * c1; };
    f.remainder_delta = [c1](Complex k) -> ComplexMatrix { return k * c1; };
    f.remainder_derivative = c1;
    const Ladder lad = build_ladder(f);
    REQUIRE(lad.levels.size() >= 2);
    CHECK(lad.levels[0].projection.rank == 2);
    CHECK(lad.levels[1].projection.rank == 1);
    for (const auto& lv : lad.levels)
        if (lv.level > 0) {
            const ComplexMatrix& s = lv.projection.matrix;
            const ComplexMatrix& p = lv.domain.matrix;
            CHECK((s * p - s).norm() <= 1e-10);
            CHECK((p * s - s).norm() <= 1e-10);
        }
    for (Complex k : {Complex(1e-2, -1e-2), Complex(1e-3, 0.0), Complex(0.0, -3e-3)}) {
        const ComplexMatrix direct = f.evaluate(k).inverse();
        CHECK(rel_err(ladder_inverse(lad, k), direct) <= 1e-8);
    }
}

TEST_CASE("final_step_invert") {
    std::mt19937_64 rng(32);
    OperatorFamily f;
    f.base = random_matrix(rng, 4, 4) + 4.0 * ComplexMatrix::Identity(4, 4);
    const ComplexMatrix c = random_matrix(rng, 4, 4);
    f.remainder = [c](Complex) { return c; };
    const FinalStep fs = final_step_invert(f, Projection::identity(4), Complex(1e-3, 0.0));
    CHECK_FALSE(fs.used_schur);
    CHECK(rel_err(fs.inverse, f.evaluate(1e-3).inverse()) < 1e-13);

    const OperatorFamily s = scalar_z();
    const FinalStep fz = final_step_invert(s, Projection::identity(1), Complex(1e-3, -2e-3));
    CHECK(fz.used_schur);
    CHECK(std::abs(fz.inverse(0, 0) - 1.0 / Complex(1e-3, -2e-3)) < 1e-9);
    const BoundednessReport br =
        final_step_boundedness(s, Projection::identity(1), Complex(1.0, 0.0), 1e-5, 1e-2);
    CHECK_FALSE(br.bounded);
    CHECK(br.exponent == doctest::Approx(-1.0).epsilon(1e-6));
    const BoundednessReport bf =
        final_step_boundedness(f, Projection::identity(4), Complex(1.0, -1.0), 1e-5, 1e-2);
    CHECK(bf.bounded);
}

TEST_CASE("family JSON: scalar polynomial family") {
    const auto doc = nlohmann::json::parse(R"({
      "schema_version": 1,
      "families": [{"name": "scalar", "dim": 1, "base": [[0, 0]],
                    "remainder": {"kind": "polynomial", "coefficients": [[[1, 0]]]},
                    "points": [[1e-3, 0], [0, -1e-4]]}]})");
    const auto fams = parse_family_json(doc, 1);
    REQUIRE(fams.size() == 1);
    CHECK(fams[0].projection.rank == 1);
    const InversionResult r = jn_invert(fams[0].family, fams[0].projection, fams[0].points[1]);
    CHECK(std::abs(r.inverse(0, 0) - 1.0 / fams[0].points[1]) < 1e-10);
}

TEST_CASE("family JSON: errors carry a location") {
    const auto doc = nlohmann::json::parse(R"({
      "schema_version": 1,
      "families": [{"dim": 2, "base": [[0, 0], [1, 0], [0, 0]],
                    "remainder": {"kind": "polynomial", "coefficients": []}, "points": [1e-3]}]})");
    try {
        parse_family_json(doc, 1);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("/families/0/base") != std::string::npos);
    }
    CHECK_THROWS_AS(load_family_file("/nonexistent/file.json", 1), ParseError);
}

TEST_CASE("family JSON: rational remainder and random corpus") {
    const auto doc = nlohmann::json::parse(R"({
      "schema_version": 1,
      "families": [{"dim": 1, "base": [[0, 0]],
                    "remainder": {"kind": "rational", "coefficients": [[[1, 0]]],
                                  "poles": [[2, 0]], "residues": [[[1, 0]]]},
                    "points": [[1e-3, 1e-3]]}],
      "random_corpus": {"count": 3}})");
    const auto fams = parse_family_json(doc, 7);
    REQUIRE(fams.size() == 4);
    const Complex z = fams[0].points[0];
    const InversionResult r = jn_invert(fams[0].family, fams[0].projection, z);
    const Complex a = z * (1.0 + 1.0 / (z - 2.0));
    CHECK(std::abs(r.inverse(0, 0) - 1.0 / a) < 1e-9 * std::abs(1.0 / a));
    const auto again = parse_family_json(doc, 7);
    CHECK((again[3].family.base - fams[3].family.base).norm() == 0.0);
}
