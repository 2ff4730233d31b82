#include "wgt/linalg.hpp"

#include <complex>
#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace wgt {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

Projection make_orthogonal(const ComplexMatrix& range, const ComplexMatrix& complement,
                           double tol) {
    Projection p;
    const Index n = range.rows();
    p.orthogonal = true;
    p.tol = tol;
    p.rank = range.cols();
    p.range_basis = range;
    p.complement_basis = complement;
    if (p.rank == 0) {
        p.matrix = ComplexMatrix::Zero(n, n);
    } else {
        p.matrix = range * range.adjoint();
    }
    return p;
}

} // namespace

Projection Projection::zero(Index dim) {
    return make_orthogonal(ComplexMatrix(dim, 0), ComplexMatrix::Identity(dim, dim), 0.0);
}

Projection Projection::identity(Index dim) {
    return make_orthogonal(ComplexMatrix::Identity(dim, dim), ComplexMatrix(dim, 0), 0.0);
}

ComplexMatrix Projection::apply_left(const ComplexMatrix& x) const {
    if (x.rows() != dim()) throw DimensionError("projection apply_left: size mismatch");
    if (rank == 0) return ComplexMatrix::Zero(x.rows(), x.cols());
    if (orthogonal) {
        if (rank == dim()) return x;
        if (rank <= dim() - rank) return range_basis * (range_basis.adjoint() * x);
        return x - complement_basis * (complement_basis.adjoint() * x);
    }
    return matrix * x;
}

ComplexMatrix Projection::apply_right(const ComplexMatrix& x) const {
    if (x.cols() != dim()) throw DimensionError("projection apply_right: size mismatch");
    if (rank == 0) return ComplexMatrix::Zero(x.rows(), x.cols());
    if (orthogonal) {
        if (rank == dim()) return x;
        if (rank <= dim() - rank) return (x * range_basis) * range_basis.adjoint();
        return x - (x * complement_basis) * complement_basis.adjoint();
    }
    return x * matrix;
}

ComplexMatrix Projection::complement_matrix() const {
    return ComplexMatrix::Identity(dim(), dim()) - matrix;
}

double Projection::idempotence_defect() const {
    return op_norm(matrix * matrix - matrix);
}

double Projection::adjoint_defect() const {
    return op_norm(matrix - matrix.adjoint());
}

void require_finite(const ComplexMatrix& a, const char* what) {
    if (!a.allFinite()) throw DimensionError(std::string(what) + ": non-finite entry");
}

void require_square(const ComplexMatrix& a, const char* what) {
    if (a.rows() != a.cols())
        throw DimensionError(std::string(what) + ": matrix is not square (" +
                             std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + ")");
}

SvdResult svd_decompose(const ComplexMatrix& a, bool vectors) {
    const lapack_int m = lapack_int(a.rows()), n = lapack_int(a.cols());
    SvdResult out;
    const lapack_int k = std::min(m, n);
    out.s.resize(k);
    if (k == 0) return out;
    ComplexMatrix work = a;
    ComplexMatrix vt;
    if (vectors) {
        out.u.resize(m, m);
        vt.resize(n, n);
    }
    const lapack_int info =
        LAPACKE_zgesdd(LAPACK_COL_MAJOR, vectors ? 'A' : 'N', m, n, work.data(), m, out.s.data(),
                       vectors ? out.u.data() : nullptr, m, vectors ? vt.data() : nullptr, n);
    if (info != 0)
        throw AccuracyError("svd_decompose: LAPACK zgesdd failed with info " + std::to_string(info));
    if (vectors) out.v = vt.adjoint();
    return out;
}

double op_norm(const ComplexMatrix& a) {
    if (a.size() == 0) return 0.0;
    if (std::min(a.rows(), a.cols()) <= 160) {
        return svd_decompose(a, false).s(0);
    }
    // power iteration on A*A, deterministic start
    ComplexVector v = ComplexVector::Ones(a.cols()) / std::sqrt(double(a.cols()));
    for (Index j = 0; j < v.size(); ++j) v(j) *= Complex(1.0, 0.01 * double(j % 7));
    v.normalize();
    double est = 0.0;
    for (int it = 0; it < 200; ++it) {
        ComplexVector w = a.adjoint() * (a * v);
        const double nw = w.norm();
        if (nw == 0.0) return 0.0;
        const double next = std::sqrt(nw);
        v = w / nw;
        if (std::abs(next - est) <= 1e-12 * next) {
            est = next;
            break;
        }
        est = next;
    }
    return est;
}

ComplexMatrix commutator(const ComplexMatrix& a, const ComplexMatrix& b) {
    return a * b - b * a;
}

ComplexMatrix imaginary_part(const ComplexMatrix& a) {
    require_square(a, "imaginary_part");
    return (a - a.adjoint()) / Complex(0.0, 2.0);
}

ComplexMatrix real_part(const ComplexMatrix& a) {
    require_square(a, "real_part");
    return (a + a.adjoint()) * 0.5;
}

double hermitian_defect(const ComplexMatrix& a) {
    return (a - a.adjoint()).norm();
}

double psd_defect(const ComplexMatrix& y, double sa_tol) {
    require_square(y, "psd_defect");
    const double scale = std::max(1.0, y.norm());
    if (hermitian_defect(y) > sa_tol * scale)
        throw DimensionError("psd_defect: operator is not self-adjoint");
    if (y.size() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(real_part(y), Eigen::EigenvaluesOnly);
    return std::max(0.0, -es.eigenvalues()(0));
}

double rcond(const ComplexMatrix& a) {
    require_square(a, "rcond");
    if (a.size() == 0) return 1.0;
    Eigen::PartialPivLU<ComplexMatrix> lu(a);
    const double rc = lu.rcond();
    if (!(lu.matrixLU().diagonal().cwiseAbs().minCoeff() > 0.0) || !std::isfinite(rc)) return 0.0;
    return rc;
}

ComplexMatrix solve(const ComplexMatrix& a, const ComplexMatrix& b) {
    require_square(a, "solve");
    if (a.rows() != b.rows()) throw DimensionError("solve: right-hand side size mismatch");
    require_finite(a, "solve");
    if (a.size() == 0) return ComplexMatrix(0, b.cols());
    Eigen::PartialPivLU<ComplexMatrix> lu(a);
    double rc = lu.rcond();
    const auto piv = lu.matrixLU().diagonal().cwiseAbs();
    if (!(piv.minCoeff() > 0.0) || !std::isfinite(rc)) rc = 0.0;
    if (!(rc * 1e-3 > kEps))
        throw SingularityError("solve: matrix is numerically singular", rc > 0 ? 1.0 / rc
                                   : std::numeric_limits<double>::infinity());
    return lu.solve(b);
}

ComplexMatrix inverse(const ComplexMatrix& a) {
    return solve(a, ComplexMatrix::Identity(a.rows(), a.cols()));
}

std::pair<double, double> singular_extremes(const ComplexMatrix& a) {
    if (a.size() == 0) return {0.0, 0.0};
    const RealVector s = svd_decompose(a, false).s;
    return {s(s.size() - 1), s(0)};
}

Projection kernel_projector(const ComplexMatrix& a, double rank_tol) {
    require_square(a, "kernel_projector");
    require_finite(a, "kernel_projector");
    const Index n = a.rows();
    if (n == 0) return Projection::zero(0);
    const double scale = std::max(a.norm(), 1e-300);
    ComplexMatrix vecs;
    RealVector sig;
    if (hermitian_defect(a) <= 1e-13 * scale) {
        Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(real_part(a));
        vecs = es.eigenvectors();
        sig = es.eigenvalues().cwiseAbs();
    } else {
        SvdResult svd = svd_decompose(a, true);
        vecs = std::move(svd.v);
        sig = std::move(svd.s);
    }
    const double smax = sig.maxCoeff();
    if (smax == 0.0) {
        Projection p = Projection::identity(n);
        p.tol = rank_tol;
        return p;
    }
    std::vector<Index> ker, ran;
    for (Index i = 0; i < n; ++i) (sig(i) < rank_tol * smax ? ker : ran).push_back(i);
    ComplexMatrix k(n, Index(ker.size())), c(n, Index(ran.size()));
    for (size_t j = 0; j < ker.size(); ++j) k.col(Index(j)) = vecs.col(ker[j]);
    for (size_t j = 0; j < ran.size(); ++j) c.col(Index(j)) = vecs.col(ran[j]);
    return make_orthogonal(k, c, rank_tol);
}

Projection kernel_projector_within(const ComplexMatrix& a, const Projection& domain,
                                   double rank_tol) {
    require_square(a, "kernel_projector_within");
    if (a.rows() != domain.dim()) throw DimensionError("kernel_projector_within: size mismatch");
    if (!domain.orthogonal) throw PreconditionError("kernel_projector_within: domain not orthogonal");
    const Index n = a.rows();
    if (domain.rank == 0) return Projection::zero(n);
    // compress to range(domain), take the kernel there, lift back
    const ComplexMatrix& q = domain.range_basis;
    const ComplexMatrix b = q.adjoint() * a * q;
    Projection small = kernel_projector(b, rank_tol);
    if (small.rank == 0) return Projection::zero(n);
    ComplexMatrix range = q * small.range_basis;
    ComplexMatrix comp(n, n - small.rank);
    comp << domain.complement_basis, q * small.complement_basis;
    Projection p = make_orthogonal(range, comp, rank_tol);
    return p;
}

Projection orthogonal_projection_onto(const ComplexMatrix& columns, double rank_tol) {
    const Index n = columns.rows();
    if (columns.cols() == 0) return Projection::zero(n);
    const SvdResult svd = svd_decompose(columns, true);
    const RealVector& s = svd.s;
    Index r = 0;
    for (Index i = 0; i < s.size(); ++i)
        if (s(i) > rank_tol * std::max(s(0), 1e-300)) ++r;
    if (s(0) == 0.0) r = 0;
    const ComplexMatrix& u = svd.u;
    return make_orthogonal(u.leftCols(r), u.rightCols(n - r), rank_tol);
}

Projection riesz_projection(const ComplexMatrix& a, double radius, int n_quad) {
    require_square(a, "riesz_projection");
    require_finite(a, "riesz_projection");
    if (!(radius > 0.0) || !std::isfinite(radius))
        throw DomainError("riesz_projection: radius must be positive and finite");
    if (n_quad < 8) throw DomainError("riesz_projection: need at least 8 quadrature nodes");
    const Index n = a.rows();
    if (n == 0) return Projection::zero(0);
    const ComplexMatrix id = ComplexMatrix::Identity(n, n);
    ComplexMatrix p = ComplexMatrix::Zero(n, n);
    for (int k = 0; k < n_quad; ++k) {
        const double th = 2.0 * std::numbers::pi * double(k) / double(n_quad);
        const Complex zeta = std::polar(radius, th);
        Eigen::PartialPivLU<ComplexMatrix> lu(zeta * id - a);
        const double rc = lu.rcond();
        if (!(rc >= 1e-12) || !(lu.matrixLU().diagonal().cwiseAbs().minCoeff() > 0.0))
            throw SpectrumError("riesz_projection: contour passes through the spectrum");
        p += zeta * lu.inverse();
    }
    p /= double(n_quad);
    const double pn = std::max(1.0, op_norm(p));
    const double idem = op_norm(p * p - p);
    if (idem > 1e-8 * pn * pn)
        throw AccuracyError("riesz_projection: idempotence defect " + std::to_string(idem) +
                            " exceeds tolerance");
    Projection out;
    out.tol = 1e-8;
    out.orthogonal = op_norm(p - p.adjoint()) <= 1e-8;
    const SvdResult svd = svd_decompose(p, true);
    const RealVector& s = svd.s;
    Index r = 0;
    for (Index i = 0; i < s.size(); ++i)
        if (s(i) > 0.5) ++r;
    out.rank = r;
    const ComplexMatrix& u = svd.u;
    out.range_basis = u.leftCols(r);
    if (out.orthogonal) {
        out.complement_basis = u.rightCols(n - r);
        out.matrix = r == 0 ? ComplexMatrix::Zero(n, n)
                            : ComplexMatrix(out.range_basis * out.range_basis.adjoint());
    } else {
        out.matrix = p;
    }
    return out;
}

ZeroGroup zero_group(const ComplexMatrix& a, double rank_tol) {
    require_square(a, "zero_group");
    ZeroGroup g;
    const Index n = a.rows();
    if (n == 0) return g;
    Eigen::ComplexEigenSolver<ComplexMatrix> es(a, false);
    const double scale = std::max(op_norm(a), 1e-300);
    // nilpotent blocks split as eps^{1/k}; sqrt(rank_tol) covers k = 2
    const double zero_tol = std::sqrt(rank_tol) * scale;
    g.nearest_nonzero = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < n; ++i) {
        const Complex mu = es.eigenvalues()(i);
        g.eigenvalues.push_back(mu);
        const double m = std::abs(mu);
        if (m <= zero_tol) {
            ++g.zero_count;
            g.zero_spread = std::max(g.zero_spread, m);
        } else {
            g.nearest_nonzero = std::min(g.nearest_nonzero, m);
        }
    }
    g.radius = std::isfinite(g.nearest_nonzero) ? 0.5 * g.nearest_nonzero : 2.0 * scale + 1.0;
    return g;
}

std::optional<Projection> riesz_projection_semisimple(const ComplexMatrix& a, double rank_tol) {
    require_square(a, "riesz_projection_semisimple");
    require_finite(a, "riesz_projection_semisimple");
    const Index n = a.rows();
    if (n == 0) return Projection::zero(0);
    const SvdResult svd = svd_decompose(a, true);
    const RealVector& s = svd.s;
    if (s(0) == 0.0) return Projection::identity(n);
    Index r = 0;
    while (r < n && s(r) >= rank_tol * s(0)) ++r;
    const Index k = n - r;
    if (k == 0) return Projection::zero(n);
    const ComplexMatrix v = svd.v.rightCols(k);
    const ComplexMatrix u = svd.u.rightCols(k);
    const ComplexMatrix g = u.adjoint() * v;
    const double gmin = svd_decompose(g, false).s(k - 1);
    if (!(gmin > 1e-6)) return std::nullopt;
    const ComplexMatrix p = v * solve(g, u.adjoint());
    const double asym = op_norm(p - p.adjoint());
    if (asym <= 1e-8) {
        Projection out = make_orthogonal(v, svd.v.leftCols(r), 1e-8);
        return out;
    }
    Projection out;
    out.tol = 1e-8;
    out.orthogonal = false;
    out.rank = k;
    out.range_basis = v;
    out.matrix = p;
    return out;
}

Projection riesz_projection_at_zero(const ComplexMatrix& a, double rank_tol, int n_quad) {
    if (a.rows() > kRieszContourLimit)
        if (auto p = riesz_projection_semisimple(a, rank_tol)) return *p;
    const ZeroGroup g = zero_group(a, rank_tol);
    if (g.zero_count == 0) return Projection::zero(a.rows());
    if (g.zero_spread >= 0.5 * g.radius)
        throw SpectrumError("riesz_projection_at_zero: eigenvalue 0 is not isolated");
    return riesz_projection(a, g.radius, n_quad);
}

ComplexMatrix compressed_inverse(const ComplexMatrix& a, const Projection& domain) {
    require_square(a, "compressed_inverse");
    if (a.rows() != domain.dim()) throw DimensionError("compressed_inverse: size mismatch");
    const Index n = a.rows();
    if (domain.rank == 0) return ComplexMatrix::Zero(n, n);
    if (domain.is_identity()) return inverse(a);
    const ComplexMatrix& q = domain.range_basis;
    if (domain.orthogonal) {
        if (2 * domain.rank <= n) {
            const ComplexMatrix b = q.adjoint() * a * q;
            return q * solve(b, q.adjoint());
        }
        const ComplexMatrix comp = domain.complement_matrix();
        return inverse(a + comp) - comp;
    }
    // oblique: coordinates in range(S) via the left inverse Q*, then apply S
    const ComplexMatrix b = q.adjoint() * a * q;
    return q * solve(b, q.adjoint() * domain.matrix);
}

} // namespace wgt
