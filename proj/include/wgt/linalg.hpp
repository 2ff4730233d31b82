#pragma once

// Dense complex linear algebra substrate: solves, norms, self-adjoint splits
// and the two projection constructions used by the inversion engine.

#include <complex>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "wgt/errors.hpp"

namespace wgt {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr double kDefaultRankTol = 1e-8;
inline constexpr int kDefaultRieszQuadrature = 64;

/// A square idempotent matrix together with the data needed to apply it
/// cheaply. For orthogonal projections both an orthonormal basis of the range
/// and of the complement are kept; either may be used depending on size.
struct Projection {
    ComplexMatrix matrix;
    bool orthogonal = true;
    double tol = 0.0;
    Index rank = 0;
    ComplexMatrix range_basis;      // dim x rank, orthonormal columns
    ComplexMatrix complement_basis; // dim x (dim - rank); orthogonal case only

    static Projection zero(Index dim);
    static Projection identity(Index dim);

    Index dim() const { return matrix.rows(); }
    bool is_zero() const { return rank == 0; }
    bool is_identity() const { return orthogonal && rank == dim(); }

    /// P * X
    ComplexMatrix apply_left(const ComplexMatrix& x) const;
    /// X * P
    ComplexMatrix apply_right(const ComplexMatrix& x) const;
    /// 1 - P (orthogonal projections only)
    ComplexMatrix complement_matrix() const;

    double idempotence_defect() const;
    double adjoint_defect() const;
};

/// Throws DimensionError when any entry is NaN or infinite.
void require_finite(const ComplexMatrix& a, const char* what);
void require_square(const ComplexMatrix& a, const char* what);

/// Spectral norm. Exact (via singular values) for small matrices, power
/// iteration on A*A otherwise.
double op_norm(const ComplexMatrix& a);

ComplexMatrix commutator(const ComplexMatrix& a, const ComplexMatrix& b);

/// (A - A*) / 2i
ComplexMatrix imaginary_part(const ComplexMatrix& a);
/// (A + A*) / 2
ComplexMatrix real_part(const ComplexMatrix& a);

double hermitian_defect(const ComplexMatrix& a);

/// max(0, -lambda_min(Y)) for self-adjoint Y. Throws DimensionError if Y is
/// not self-adjoint to tolerance.
double psd_defect(const ComplexMatrix& y, double sa_tol = 1e-10);

/// X with A X = B by partial-pivoted LU; SingularityError when the condition
/// estimate exceeds 1e-3 / machine epsilon.
ComplexMatrix solve(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexMatrix inverse(const ComplexMatrix& a);

/// Reciprocal condition estimate from the LU factorization.
double rcond(const ComplexMatrix& a);

/// Smallest and largest singular values.
std::pair<double, double> singular_extremes(const ComplexMatrix& a);

/// Orthogonal projector onto the span of right singular vectors with
/// sigma_i < rank_tol * sigma_max. Identity when A = 0.
Projection kernel_projector(const ComplexMatrix& a, double rank_tol = kDefaultRankTol);

/// Kernel of an operator that acts on range(domain) (and vanishes on its
/// complement), as a projection inside range(domain). domain must be
/// orthogonal.
Projection kernel_projector_within(const ComplexMatrix& a, const Projection& domain,
                                   double rank_tol = kDefaultRankTol);

/// (2 pi i)^{-1} \oint_{|zeta| = radius} (zeta - A)^{-1} d zeta by the n_quad
/// point trapezoid rule.
Projection riesz_projection(const ComplexMatrix& a, double radius,
                            int n_quad = kDefaultRieszQuadrature);

/// Location of the eigenvalue group at 0 and the contour radius (half the
/// distance to the nearest nonzero eigenvalue).
struct ZeroGroup {
    std::vector<Complex> eigenvalues;
    Index zero_count = 0;
    double zero_spread = 0.0;     // max |mu| inside the zero group
    double nearest_nonzero = 0.0; // min |mu| outside the zero group
    double radius = 0.0;
};

ZeroGroup zero_group(const ComplexMatrix& a, double rank_tol = kDefaultRankTol);

struct SvdResult {
    RealVector s;    // descending
    ComplexMatrix u; // full m x m (empty without vectors)
    ComplexMatrix v; // full n x n
};

/// Singular value decomposition by LAPACK divide and conquer.
SvdResult svd_decompose(const ComplexMatrix& a, bool vectors);

/// Riesz projection for a semisimple eigenvalue 0 from one SVD:
/// V (U*V)^{-1} U* with V spanning ker A and U spanning ker A*. Returns an
/// empty optional when U*V is near-singular (a Jordan block at 0).
std::optional<Projection> riesz_projection_semisimple(const ComplexMatrix& a,
                                                      double rank_tol = kDefaultRankTol);

/// Above this size riesz_projection_at_zero tries the semisimple formula first.
inline constexpr Index kRieszContourLimit = 96;

/// Riesz projection for the eigenvalue 0 with the contour radius taken from
/// zero_group(). Zero projection when 0 is not an eigenvalue.
Projection riesz_projection_at_zero(const ComplexMatrix& a, double rank_tol = kDefaultRankTol,
                                    int n_quad = kDefaultRieszQuadrature);

/// Inverse of an operator A that maps range(domain) into itself, as an
/// operator on the full space vanishing on ker(domain).
ComplexMatrix compressed_inverse(const ComplexMatrix& a, const Projection& domain);

/// Orthonormal basis and projector built from arbitrary columns.
Projection orthogonal_projection_onto(const ComplexMatrix& columns, double rank_tol = 1e-12);

} // namespace wgt
