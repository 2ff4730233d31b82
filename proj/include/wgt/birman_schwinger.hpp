#pragma once

// Free one-dimensional resolvent kernel, the sandwiched operator u + v R0(z) v
// on the waveguide grid, weighted Hilbert-Schmidt diagnostics and the scan for
// kernels of the boundary-value operator.

#include <functional>
#include <vector>

#include "wgt/waveguide.hpp"

namespace wgt {

/// sqrt with Im > 0 off [0, inf) and the positive root on (0, inf).
Complex sqrt_branch(Complex z);

/// e^w - 1 without cancellation for small |w|.
Complex expm1_complex(Complex w);

/// i e^{i sqrt(z) r} / (2 sqrt(z)) with r = |x - x'|. DomainError at z = 0.
Complex free_kernel(Complex z, double x, double xp);
Complex free_kernel_r(Complex z, double r);

/// R0(z + delta)(r) - R0(z)(r) evaluated without cancellation.
Complex free_kernel_difference(Complex z, Complex delta, double r);

enum class Region { Sector, BoundaryReal, BoundaryImaginary, Axis };

/// Energy lambda and parameter kappa with effective z = lambda - kappa^2.
struct SpectralPoint {
    double lambda = 0.0;
    Complex kappa = 0.0;
    Region region = Region::Axis;

    Complex z() const { return lambda - kappa * kappa; }

    /// Classifies kappa: sector (Re > 0, Im < 0), one of the two boundary rays,
    /// or kappa = 0 (boundary value lambda + i0). Throws DomainError when
    /// |kappa| >= epsilon or kappa lies outside the closed quarter disk.
    static SpectralPoint make(double lambda, Complex kappa,
                              double epsilon = std::numeric_limits<double>::infinity());
};

/// Kernel of one transverse channel as a function of lambda_n and r = |x - x'|.
using RadialKernel = std::function<Complex(double lambda_n, double r)>;

/// diag(b) [sum_n (f_n f_n^T) (x) K_n] diag(b) on the composite grid; modes with
/// equal eigenvalues share one kernel evaluation.
ComplexMatrix mode_sandwich(const WaveguideModel& model, const std::vector<TransverseMode>& modes,
                            const RadialKernel& kernel);

/// B_n for an open channel (lambda_n < lambda), mu = sqrt(lambda - lambda_n):
/// rows b (f_n (x) cos mu x) / sqrt(2 mu) and b (f_n (x) sin mu x) / sqrt(2 mu),
/// so that B_n^T B_n = Im v (P_n (x) R0(mu^2)) v on the grid. Zero rows when
/// the channel is closed.
RealMatrix optical_factor(const WaveguideModel& model, const TransverseMode& mode, double lambda);

/// v (P_n (x) R0(z - lambda_n)) v for one mode.
ComplexMatrix mode_term(const WaveguideModel& model, const TransverseMode& mode, Complex z);

struct GridOperator {
    ComplexMatrix matrix;
    double lambda = 0.0;
    Complex kappa = 0.0;
    int n_max = 0;
    double tail_bound = 0.0;
};

/// u + sum_{n <= n_max} v (P_n (x) R0(z - lambda_n)) v. n_max comes from the
/// tail criterion unless n_max_override > 0 (then the achieved bound is still
/// recorded; TruncationError if it exceeds tail_tol).
GridOperator bs_operator(const SpectralPoint& pt, const WaveguideModel& model, double tail_tol,
                         int n_max_override = 0);

struct HsDiagnostic {
    double hs_norm = 0.0;
    double diff_norm = 0.0; // NaN when s <= 3/2
    double window = 0.0;    // X of the truncation window [-X, X]
    int nodes = 0;
};

/// Frobenius norms of <x>^{-s} R0(lambda + zeta) <x>^{-s} and of the difference
/// with R0(lambda), discretized on a tan-mapped Gauss-Legendre grid.
HsDiagnostic hs_diagnostic(double lambda, Complex zeta, double s, double epsilon,
                           int nodes = 400);

/// Smallest singular value by LU and inverse power iteration (0 for an exactly
/// singular matrix).
double smallest_singular_value(const ComplexMatrix& a);

struct EigenCandidate {
    double lambda = 0.0;
    double sigma_min = 0.0;
    double relative_sigma = 0.0; // sigma_min / |T|
    bool self_adjoint = false;   // every channel closed
    int multiplicity = 1;
};

struct EigenSearchOptions {
    double tail_tol = 1e-3;
    double detection = 1e-6; // relative to |T|
    double width = 1e-10;    // refinement bracket width
    double threshold_margin = 1e-9;
};

/// Scan of `resolution` equally spaced energies across [lo, hi].
std::vector<EigenCandidate> eigenvalue_search(double lo, double hi, const WaveguideModel& model,
                                              int resolution,
                                              const EigenSearchOptions& opt = {});

} // namespace wgt
