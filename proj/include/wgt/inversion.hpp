#pragma once

// Generalized inversion of A(z) = A0 + s z A1(z) around a singular A0 and the
// nested projection ladder built by iterating it.

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "wgt/linalg.hpp"

namespace wgt {

using MatrixFunction = std::function<ComplexMatrix(Complex)>;

/// z -> A0 + scale * z * A1(z).
struct OperatorFamily {
    ComplexMatrix base;
    MatrixFunction remainder;
    /// Optional z -> A1(z) - A1(0), evaluated without cancellation.
    MatrixFunction remainder_delta;
    /// Optional A1'(0).
    std::optional<ComplexMatrix> remainder_derivative;
    double scale = 1.0;
    double bound = std::numeric_limits<double>::infinity();
    double domain_radius = std::numeric_limits<double>::infinity();
    /// Restrict to Re z > 0, Im z < 0 (closure allowed).
    bool sector = false;

    Index dim() const { return base.rows(); }
    ComplexMatrix evaluate(Complex z) const;
    ComplexMatrix remainder_at(Complex z) const;
    ComplexMatrix delta_at(Complex z) const;
    bool in_domain(Complex z) const;
};

/// Throws DimensionError unless base is square, remainder has the same shape
/// at a probe point and the bound holds at a few sampled points.
void validate_family(const OperatorFamily& fam);

struct ConditionReport {
    double cond_i_margin = 0.0;  // smallest singular value of A0 + S
    double cond_ii_defect = 0.0; // |S (A0+S)^{-1} S - S|
    double tol = 0.0;
    bool ok = false;
};

ConditionReport verify_conditions(const ComplexMatrix& a0, const Projection& s,
                                  double tol = 1e-9);

struct BOperator {
    ComplexMatrix full;       // B(z) as an operator on the whole space
    ComplexMatrix compressed; // Q* B Q on an orthonormal basis of range(S)
    ComplexMatrix quotient;   // defining quotient form, full size
    int series_terms = 0;
    double contraction = 0.0; // |z A1(z) (A0+S)^{-1}|_F
    double tail_bound = 0.0;
    double agreement = 0.0;   // |series - quotient|
    double agreement_tol = 0.0;
};

BOperator b_operator(const OperatorFamily& fam, const Projection& s, Complex z);

struct InversionResult {
    bool invertible = false;
    ComplexMatrix inverse;
    double b_condition = 0.0; // condition estimate of compressed B(z)
    double residual = 0.0;    // |A(z) X - I|
};

/// A(z)^{-1} by the two-term formula. When B(z) is singular on range(S) the
/// result reports invertible = false.
InversionResult jn_invert(const OperatorFamily& fam, const Projection& s, Complex z);

struct AnnihilationReport {
    double left_defect = 0.0;  // |A0 S_r|
    double right_defect = 0.0; // |S_r A0|
    double scale = 0.0;        // |A0|
    Index rank = 0;
    bool pass = false;
};

AnnihilationReport check_a0_annihilation(const ComplexMatrix& a0, double tol = 1e-10);

struct OrthogonalityReport {
    double riesz_vs_orthogonal = 0.0; // |S_r - S_o|
    double psd_defect = 0.0;          // of Im A0
    bool hypothesis_ok = false;
    bool pass = false;
    Projection riesz;
    Projection orthogonal;
};

OrthogonalityReport check_riesz_orthogonal(const ComplexMatrix& a0, double tol = 1e-8,
                                           double rank_tol = kDefaultRankTol);

struct FactorReport {
    double max_zs = 0.0;   // max_m |Z_m S|
    double max_szs = 0.0;  // max_m |S Z_m^*|
    double max_z = 0.0;    // max_m |Z_m|
    bool pass = false;
};

FactorReport check_factor_annihilation(const std::vector<ComplexMatrix>& zs,
                                       const ComplexMatrix& x, const Projection& s,
                                       double tol = 1e-8);

/// One rung of the ladder. Level j lives on range(domain) = range(S_{j-1}).
struct LadderLevel {
    int level = 0;
    Projection domain;
    Projection projection; // S_j (orthogonal; zero on the terminal level)
    ComplexMatrix leading; // I_j(0)
    double scale = 1.0;    // I_j(k) = I_j(0) + scale * k * (...)
    bool terminal = false;
    double orthogonality_defect = 0.0;
    ConditionReport conditions;
};

struct Ladder {
    OperatorFamily family;
    std::vector<LadderLevel> levels;
    bool terminated = false;
    /// Riesz projection of the last leading operator when the depth is
    /// exhausted with a nontrivial kernel.
    std::optional<Projection> final_riesz;
    double rank_tol = kDefaultRankTol;
    ComplexMatrix remainder_at_zero; // A1(0)
    std::vector<std::string> notes;
};

Ladder build_ladder(const OperatorFamily& fam, int max_depth = 4,
                    double rank_tol = kDefaultRankTol, double richardson_h = 1e-2);

/// Values of the ladder operators at one parameter value.
struct LadderPoint {
    Complex kappa;
    std::vector<ComplexMatrix> I; // I_j(k)
    std::vector<ComplexMatrix> W; // (I_j(k) + S_j)^{-1} on range(S_{j-1})
};

LadderPoint evaluate_ladder(const Ladder& ladder, Complex kappa);

/// A(k)^{-1} assembled from the ladder by the nested two-term formula.
ComplexMatrix ladder_inverse(const Ladder& ladder, Complex kappa);
ComplexMatrix ladder_inverse(const Ladder& ladder, const LadderPoint& pt);

struct FinalStep {
    ComplexMatrix inverse; // on the full space, zero on ker(domain)
    Projection riesz;      // S_3 in coordinates of range(domain)
    bool used_schur = false;
};

/// Inverse of I(k) = base + scale k A1(k) on range(domain); Riesz/Schur step
/// when base is singular there.
FinalStep final_step_invert(const OperatorFamily& fam, const Projection& domain, Complex kappa,
                            double rank_tol = kDefaultRankTol);
/// Same for a precomputed value I(k); riesz may carry S_3 from an earlier call.
FinalStep final_step_invert_value(const ComplexMatrix& value, const ComplexMatrix& leading,
                                  const Projection& domain, const Projection* riesz = nullptr,
                                  double rank_tol = kDefaultRankTol);

struct BoundednessReport {
    std::vector<double> moduli;
    std::vector<double> norms;
    double exponent = 0.0;
    bool bounded = false;
};

/// Samples |I(k)^{-1}| along k = t * direction for t on a geometric grid and
/// fits the growth exponent; bounded when the exponent is >= -0.1.
BoundednessReport final_step_boundedness(const OperatorFamily& fam, const Projection& domain,
                                         Complex direction, double t_min, double t_max,
                                         int per_decade = 8);

} // namespace wgt
