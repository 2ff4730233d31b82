#include "wgt/birman_schwinger.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "wgt/errors.hpp"

namespace wgt {

namespace {
constexpr Complex kI{0.0, 1.0};
}

Complex sqrt_branch(Complex z) {
    Complex s = std::sqrt(z);
    if (s.imag() < 0.0) s = -s;
    if (s.imag() == 0.0 && s.real() < 0.0) s = -s;
    return s;
}

Complex expm1_complex(Complex w) {
    const double x = w.real(), y = w.imag();
    const double sh = std::sin(0.5 * y);
    const double re = std::expm1(x) * std::cos(y) - 2.0 * sh * sh;
    const double im = std::exp(x) * std::sin(y);
    return {re, im};
}

Complex free_kernel_r(Complex z, double r) {
    if (z == Complex(0.0)) throw DomainError("free_kernel: z = 0 is the threshold");
    const Complex s = sqrt_branch(z);
    return kI * std::exp(kI * s * r) / (2.0 * s);
}

Complex free_kernel(Complex z, double x, double xp) { return free_kernel_r(z, std::abs(x - xp)); }

Complex free_kernel_difference(Complex z, Complex delta, double r) {
    if (z == Complex(0.0) || z + delta == Complex(0.0))
        throw DomainError("free_kernel_difference: argument at the threshold");
    const Complex a = sqrt_branch(z + delta);
    const Complex b = sqrt_branch(z);
    // a - b without cancellation; fall back when the branches disagree
    Complex amb = a - b;
    if (std::abs(a + b) > 0.5 * std::max(std::abs(a), std::abs(b))) amb = delta / (a + b);
    const Complex eb = std::exp(kI * b * r);
    return 0.5 * kI * eb * (expm1_complex(kI * amb * r) / a - amb / (a * b));
}

SpectralPoint SpectralPoint::make(double lambda, Complex kappa, double epsilon) {
    if (!std::isfinite(lambda) || !std::isfinite(kappa.real()) || !std::isfinite(kappa.imag()))
        throw DomainError("SpectralPoint: non-finite input");
    if (kappa.real() < 0.0 || kappa.imag() > 0.0)
        throw DomainError("SpectralPoint: kappa outside Re >= 0, Im <= 0");
    if (std::abs(kappa) >= epsilon) throw DomainError("SpectralPoint: |kappa| >= epsilon");
    SpectralPoint p;
    p.lambda = lambda;
    p.kappa = kappa;
    if (kappa == Complex(0.0)) p.region = Region::Axis;
    else if (kappa.imag() == 0.0) p.region = Region::BoundaryReal;
    else if (kappa.real() == 0.0) p.region = Region::BoundaryImaginary;
    else p.region = Region::Sector;
    return p;
}

ComplexMatrix mode_sandwich(const WaveguideModel& model, const std::vector<TransverseMode>& modes,
                            const RadialKernel& kernel) {
    const Grid& g = model.grid;
    const Index nt = g.n_t(), nx = g.n_x(), d = g.size();
    ComplexMatrix m = ComplexMatrix::Zero(d, d);
    if (modes.empty()) return m;
    const RealMatrix f = model.mode_samples(modes);

    // |x_k - x_l| table
    RealMatrix r(nx, nx);
    for (Index k = 0; k < nx; ++k)
        for (Index l = 0; l < nx; ++l) r(k, l) = std::abs(g.x(k) - g.x(l));

    size_t start = 0;
    ComplexMatrix kmat(nx, nx);
    while (start < modes.size()) {
        const double lam = modes[start].eigenvalue;
        size_t stop = start + 1;
        while (stop < modes.size() &&
               std::abs(modes[stop].eigenvalue - lam) <= 1e-14 * std::max(1.0, std::abs(lam)))
            ++stop;
        RealMatrix fg = RealMatrix::Zero(nt, nt);
        for (size_t n = start; n < stop; ++n) {
            const RealVector row = f.row(Index(n)).transpose();
            fg.noalias() += row * row.transpose();
        }
        for (Index k = 0; k < nx; ++k)
            for (Index l = k; l < nx; ++l) {
                kmat(k, l) = kernel(lam, r(k, l));
                kmat(l, k) = kmat(k, l);
            }
        for (Index i = 0; i < nt; ++i)
            for (Index j = 0; j < nt; ++j) {
                const double c = fg(i, j);
                if (c == 0.0) continue;
                m.block(i * nx, j * nx, nx, nx) += c * kmat;
            }
        start = stop;
    }
    const RealVector& b = model.b;
    for (Index j = 0; j < d; ++j)
        for (Index i = 0; i < d; ++i) m(i, j) *= b(i) * b(j);
    return m;
}

RealMatrix optical_factor(const WaveguideModel& model, const TransverseMode& mode, double lambda) {
    const double gap = lambda - mode.eigenvalue;
    const Grid& g = model.grid;
    if (!(gap > 0.0)) return RealMatrix(0, g.size());
    const double mu = std::sqrt(gap);
    const RealMatrix f = model.mode_samples({mode});
    RealMatrix out(2, g.size());
    const double c = 1.0 / std::sqrt(2.0 * mu);
    for (Index i = 0; i < g.n_t(); ++i)
        for (Index k = 0; k < g.n_x(); ++k) {
            const Index I = g.index(i, k);
            const double a = c * model.b(I) * f(0, i);
            out(0, I) = a * std::cos(mu * g.x(k));
            out(1, I) = a * std::sin(mu * g.x(k));
        }
    return out;
}

ComplexMatrix mode_term(const WaveguideModel& model, const TransverseMode& mode, Complex z) {
    return mode_sandwich(model, {mode}, [&](double lam_n, double r) {
        return free_kernel_r(z - lam_n, r);
    });
}

GridOperator bs_operator(const SpectralPoint& pt, const WaveguideModel& model, double tail_tol,
                         int n_max_override) {
    if (!(tail_tol > 0.0)) throw DomainError("bs_operator: tail tolerance must be positive");
    GridOperator op;
    op.lambda = pt.lambda;
    op.kappa = pt.kappa;
    const Complex z = pt.z();
    const Index d = model.dim();
    if (model.trivial()) {
        op.matrix = ComplexMatrix::Zero(d, d);
        op.matrix.diagonal() = model.factors.u.cast<Complex>();
        op.n_max = 0;
        return op;
    }
    int n = n_max_override > 0 ? n_max_override : model.modes_for_tail(z.real(), tail_tol);
    op.n_max = n;
    op.tail_bound = model.tail_bound(n, z.real());
    if (n_max_override > 0 && op.tail_bound > tail_tol)
        throw TruncationError("bs_operator: n_max " + std::to_string(n) + " leaves tail " +
                              std::to_string(op.tail_bound));
    const auto modes = model.modes(n);
    const Complex k2 = pt.kappa * pt.kappa;
    op.matrix = mode_sandwich(model, modes, [&](double lam_n, double r) {
        return free_kernel_r(Complex(pt.lambda - lam_n) - k2, r);
    });
    op.matrix.diagonal() += model.factors.u.cast<Complex>();
    return op;
}

HsDiagnostic hs_diagnostic(double lambda, Complex zeta, double s, double epsilon, int nodes) {
    if (!(epsilon > 0.0) || std::abs(lambda) < epsilon)
        throw PreconditionError("hs_diagnostic: need |lambda| >= epsilon > 0");
    if (!(std::abs(zeta) < 0.5 * epsilon) || zeta.imag() < 0.0)
        throw PreconditionError("hs_diagnostic: need |zeta| < epsilon/2 and Im zeta >= 0");
    if (!(s > 0.5)) throw PreconditionError("hs_diagnostic: need s > 1/2");
    if (nodes < 20) throw DomainError("hs_diagnostic: too few nodes");

    HsDiagnostic out;
    const double p = 2.0 * s - 1.0;
    // tail of int <x>^{-2s} beyond |x| = X below 1e-10
    out.window = std::pow(2e10 / p, 1.0 / p);
    const double tmax = std::atan(out.window);
    std::vector<double> th, tw;
    composite_rule(nodes, -tmax, tmax, {0.0}, th, tw);
    out.nodes = int(th.size());

    const Index n = Index(th.size());
    RealVector x(n), c(n);
    for (Index i = 0; i < n; ++i) {
        x(i) = std::tan(th[size_t(i)]);
        const double jac = 1.0 + x(i) * x(i);
        c(i) = std::sqrt(tw[size_t(i)] * jac) * std::pow(jac, -0.5 * s);
    }
    const bool diff = s > 1.5;
    const Complex z = Complex(lambda) + zeta;
    double hs2 = 0.0, d2 = 0.0;
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) {
            const double r = std::abs(x(i) - x(j));
            const double cc = c(i) * c(j);
            hs2 += std::norm(cc * free_kernel_r(z, r));
            if (diff) d2 += std::norm(cc * free_kernel_difference(Complex(lambda), zeta, r));
        }
    out.hs_norm = std::sqrt(hs2);
    out.diff_norm = diff ? std::sqrt(d2) : std::numeric_limits<double>::quiet_NaN();
    return out;
}

double smallest_singular_value(const ComplexMatrix& a) {
    require_square(a, "smallest_singular_value");
    const Index n = a.rows();
    if (n == 0) return 0.0;
    Eigen::PartialPivLU<ComplexMatrix> lu(a);
    const auto& m = lu.matrixLU();
    for (Index i = 0; i < n; ++i)
        if (m(i, i) == Complex(0.0)) return 0.0;
    ComplexVector x(n);
    for (Index i = 0; i < n; ++i) x(i) = Complex(1.0 + 0.37 * std::cos(1.3 * double(i)), 0.21 * std::sin(0.7 * double(i)));
    x.normalize();
    double est = 0.0;
    for (int it = 0; it < 300; ++it) {
        ComplexVector y = lu.solve(x);
        // A* = U* L* P with PA = LU
        m.triangularView<Eigen::Upper>().adjoint().solveInPlace(y);
        m.triangularView<Eigen::UnitLower>().adjoint().solveInPlace(y);
        y = lu.permutationP().transpose() * y;
        const double nrm = y.norm();
        if (!std::isfinite(nrm)) return 0.0;
        if (nrm == 0.0) break;
        const double next = 1.0 / std::sqrt(nrm);
        x = y / nrm;
        if (it > 2 && std::abs(next - est) <= 1e-13 * next) {
            est = next;
            break;
        }
        est = next;
    }
    return est;
}

namespace {

struct SearchContext {
    const WaveguideModel& model;
    const EigenSearchOptions& opt;
    int n_max;

    ComplexMatrix matrix(double lam) const {
        return bs_operator(SpectralPoint::make(lam, 0.0), model, opt.tail_tol, n_max).matrix;
    }
    RealVector real_spectrum(double lam) const {
        const RealMatrix t = matrix(lam).real();
        Eigen::SelfAdjointEigenSolver<RealMatrix> es(t, Eigen::EigenvaluesOnly);
        return es.eigenvalues();
    }
    int negative_count(double lam) const {
        const RealVector ev = real_spectrum(lam);
        return int((ev.array() < 0.0).count());
    }
    double sigma(double lam) const { return smallest_singular_value(matrix(lam)); }

    EigenCandidate candidate(double lam, bool sa, int mult) const {
        EigenCandidate c;
        c.lambda = lam;
        c.self_adjoint = sa;
        c.multiplicity = mult;
        const ComplexMatrix t = matrix(lam);
        if (sa) {
            const RealVector ev = real_spectrum(lam);
            c.sigma_min = ev.cwiseAbs().minCoeff();
        } else {
            c.sigma_min = smallest_singular_value(t);
        }
        const double nt = op_norm(t);
        c.relative_sigma = nt > 0.0 ? c.sigma_min / nt : 0.0;
        return c;
    }

    void bisect(double a, int ca, double b, int cb, std::vector<EigenCandidate>& out) const {
        if (ca == cb) return;
        if (b - a <= opt.width) {
            out.push_back(candidate(0.5 * (a + b), true, std::abs(ca - cb)));
            return;
        }
        const double m = 0.5 * (a + b);
        const int cm = negative_count(m);
        bisect(a, ca, m, cm, out);
        bisect(m, cm, b, cb, out);
    }

    double golden(double a, double b) const {
        const double g = 0.5 * (std::sqrt(5.0) - 1.0);
        double c = b - g * (b - a), d = a + g * (b - a);
        double fc = sigma(c), fd = sigma(d);
        while (b - a > opt.width) {
            if (fc < fd) {
                b = d;
                d = c;
                fd = fc;
                c = b - g * (b - a);
                fc = sigma(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + g * (b - a);
                fd = sigma(d);
            }
        }
        return 0.5 * (a + b);
    }
};

} // namespace

std::vector<EigenCandidate> eigenvalue_search(double lo, double hi, const WaveguideModel& model,
                                              int resolution, const EigenSearchOptions& opt) {
    if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi))
        throw DomainError("eigenvalue_search: need a finite window lo < hi");
    if (resolution < 3) throw DomainError("eigenvalue_search: resolution must be >= 3");
    std::vector<EigenCandidate> out;
    if (model.trivial()) return out;

    const int n_max = model.modes_for_tail(hi, opt.tail_tol);
    for (const auto& m : model.modes(n_max + 1))
        if (m.eigenvalue >= lo - opt.threshold_margin && m.eigenvalue <= hi + opt.threshold_margin)
            throw PreconditionError("eigenvalue_search: threshold " + std::to_string(m.eigenvalue) +
                                    " inside the window");

    const SearchContext ctx{model, opt, n_max};
    const bool sa = hi < model.modes(1).front().eigenvalue;
    std::vector<double> grid(static_cast<size_t>(resolution));
    for (int k = 0; k < resolution; ++k)
        grid[size_t(k)] = lo + (hi - lo) * double(k) / double(resolution - 1);

    if (sa) {
        std::vector<int> cnt(grid.size());
        for (size_t k = 0; k < grid.size(); ++k) cnt[k] = ctx.negative_count(grid[k]);
        for (size_t k = 0; k + 1 < grid.size(); ++k)
            ctx.bisect(grid[k], cnt[k], grid[k + 1], cnt[k + 1], out);
    } else {
        std::vector<double> sig(grid.size());
        for (size_t k = 0; k < grid.size(); ++k) sig[k] = ctx.sigma(grid[k]);
        for (size_t k = 0; k < grid.size(); ++k) {
            const bool left = k == 0 || sig[k] <= sig[k - 1];
            const bool right = k + 1 == grid.size() || sig[k] <= sig[k + 1];
            if (!left || !right) continue;
            const double a = grid[k == 0 ? 0 : k - 1];
            const double b = grid[k + 1 == grid.size() ? k : k + 1];
            const double lam = ctx.golden(a, b);
            EigenCandidate c = ctx.candidate(lam, false, 1);
            if (c.relative_sigma >= opt.detection) continue;
            if (!out.empty() && std::abs(out.back().lambda - lam) <= 10.0 * opt.width) continue;
            out.push_back(c);
        }
    }
    std::vector<EigenCandidate> kept;
    for (const auto& c : out)
        if (!c.self_adjoint || c.relative_sigma < opt.detection) kept.push_back(c);
    return kept;
}

} // namespace wgt
