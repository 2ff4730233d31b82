#pragma once

// Expansion of (u + v R0(lambda - kappa^2) v)^{-1} near a threshold or an
// eigenvalue: the kernels N0, N1, N2, the family I0(kappa) = N0 + 2 kappa M1(kappa),
// its projection ladder, the four-term and two-term formulas, and numerical
// checks of the structural identities used along the way.

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "wgt/birman_schwinger.hpp"
#include "wgt/inversion.hpp"

namespace wgt {

struct ThresholdOptions {
    double epsilon = 0.5;
    double tail_tol = 1e-2;
    int n_max = 0; // 0: from tail_tol at Re z = lambda + epsilon^2
    double rank_tol = kDefaultRankTol;
    int max_depth = 4;
    double richardson_h = 1e-2;
};

/// (e^{-k r} - 1 + k r) / (2 k^2), the kernel of N2(k); r^2/4 at k = 0.
Complex n2_kernel(Complex kappa, double r);

struct ThresholdLadder {
    double lambda = 0.0;
    ThresholdGroup group;
    double epsilon = 0.0;
    int n_max = 0;
    double tail_tol = 0.0;
    double tail_bound = 0.0;
    std::shared_ptr<const WaveguideModel> model;
    std::vector<TransverseMode> modes; // all modes kept, group included

    ComplexMatrix N0, N1_0, N2_0, M1_0, X; // X = real part of M1(0)
    Ladder ladder;                         // of I0(kappa) with scale 2

    ComplexMatrix M1(Complex kappa) const;
    /// M1(kappa) - M1(0) without cancellation.
    ComplexMatrix M1_delta(Complex kappa) const;
    /// M_{j+1}(kappa) = (I_j(kappa) - I_j(0)) / kappa, j = 1, 2.
    ComplexMatrix M(int j, Complex kappa) const;
    /// S_j; the zero projection below the terminal level.
    Projection S(int j) const;
    int depth() const { return int(ladder.levels.size()); }
    bool in_group(double lambda_n) const;
};

ThresholdLadder build_threshold_ladder(double lambda, const WaveguideModel& model,
                                       const ThresholdOptions& opt = {});

struct MTerms {
    ComplexMatrix total;
    std::array<ComplexMatrix, 4> terms; // prefactors 2k, 1, 1/k, 1/k^2
};

MTerms m_function_terms(const ThresholdLadder& lad, Complex kappa);
/// The four-term expansion; with verify set and kappa off both rays the
/// result is compared with m_direct and AccuracyError is raised above 1e-6.
ComplexMatrix m_function(const ThresholdLadder& lad, Complex kappa, bool verify = false);
/// inverse(u + v R0(lambda - kappa^2) v) at the ladder's truncation.
ComplexMatrix m_direct(const ThresholdLadder& lad, Complex kappa);

/// |a - b| / |b| in operator norm.
double relative_error(const ComplexMatrix& a, const ComplexMatrix& b);

struct EigenvalueLadder {
    double lambda = 0.0;
    double epsilon = 0.0;
    int n_max = 0;
    double tail_tol = 0.0;
    double tail_bound = 0.0;
    std::shared_ptr<const WaveguideModel> model;
    std::vector<TransverseMode> modes;
    ComplexMatrix T0;
    Projection S;
    ConditionReport conditions;
    double psd_defect = 0.0;
    double orthogonality_defect = 0.0;

    /// (1/k^2) sum_n v {P_n (x) (R0(lambda - k^2 - lambda_n) - R0(lambda - lambda_n))} v
    ComplexMatrix T1(Complex kappa) const;
    ComplexMatrix J0(Complex kappa) const;
};

EigenvalueLadder build_eigenvalue_ladder(double lambda, const WaveguideModel& model,
                                         const ThresholdOptions& opt = {});
ComplexMatrix m_function_at_eigenvalue(const EigenvalueLadder& lad, Complex kappa,
                                       bool verify = false);
ComplexMatrix m_direct(const EigenvalueLadder& lad, Complex kappa);

/// C_jk(kappa) = [S_j, (I_k(kappa) + S_k)^{-1}] for 2 >= j >= k >= 0.
ComplexMatrix commutator(const ThresholdLadder& lad, int j, int k, Complex kappa);

struct IdentityLine {
    std::string name;
    double defect = 0.0;
    double tol = 0.0;
    bool pass = false;
    bool informational = false; // reported, not part of the verdict
};

struct GrowthLine {
    std::string name;
    double exponent = 0.0;
    double required = 0.0;
    bool pass = false;
};

struct StructuralReport {
    std::vector<IdentityLine> identities;
    std::vector<GrowthLine> growth;
    bool pass = false;
    nlohmann::json to_json() const;
};

/// Identity defects (relative) and growth exponents of |C_jk(kappa)| along
/// kappa = t (1 - i)/sqrt 2, t on a geometric grid over [t_min, t_max].
StructuralReport verify_structural_lemmas(const ThresholdLadder& lad, double t_min = 1e-4,
                                          double t_max = 1e-2, double tol = 1e-8);

} // namespace wgt
