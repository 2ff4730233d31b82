#include "wgt/inversion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "wgt/fit.hpp"

namespace wgt {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
// geometric tail bound at which the series form is truncated
constexpr double kSeriesTol = 1e-16;

double fro(const ComplexMatrix& a) { return a.norm(); }

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(3);
    os << std::scientific << x;
    return os.str();
}

} // namespace

ComplexMatrix OperatorFamily::remainder_at(Complex z) const {
    if (!remainder) return ComplexMatrix::Zero(dim(), dim());
    ComplexMatrix r = remainder(z);
    if (r.rows() != dim() || r.cols() != dim())
        throw DimensionError("operator family: remainder shape differs from base");
    return r;
}

ComplexMatrix OperatorFamily::delta_at(Complex z) const {
    if (remainder_delta) return remainder_delta(z);
    return remainder_at(z) - remainder_at(0.0);
}

ComplexMatrix OperatorFamily::evaluate(Complex z) const {
    return base + (scale * z) * remainder_at(z);
}

bool OperatorFamily::in_domain(Complex z) const {
    if (!(std::abs(z) <= domain_radius)) return false;
    if (sector && (z.real() < 0.0 || z.imag() > 0.0)) return false;
    return true;
}

void validate_family(const OperatorFamily& fam) {
    require_square(fam.base, "operator family base");
    require_finite(fam.base, "operator family base");
    const double r = std::isfinite(fam.domain_radius) ? fam.domain_radius : 1.0;
    const Complex probes[] = {Complex(0.5 * r, -0.25 * r), Complex(0.1 * r, 0.0),
                              Complex(0.0, -0.1 * r)};
    for (Complex z : probes) {
        if (!fam.in_domain(z)) continue;
        const ComplexMatrix a1 = fam.remainder_at(z);
        require_finite(a1, "operator family remainder");
        if (op_norm(a1) > fam.bound * (1.0 + 1e-12))
            throw DimensionError("operator family: remainder exceeds declared bound");
    }
}

ConditionReport verify_conditions(const ComplexMatrix& a0, const Projection& s, double tol) {
    require_square(a0, "verify_conditions");
    if (a0.rows() != s.dim()) throw DimensionError("verify_conditions: size mismatch");
    ConditionReport rep;
    rep.tol = tol;
    const Index n = a0.rows();
    if (n == 0) {
        rep.ok = true;
        return rep;
    }
    const ComplexMatrix a = a0 + s.matrix;
    const auto [smin, smax] = singular_extremes(a);
    rep.cond_i_margin = smin;
    if (!(smin > 1e-12 * std::max(1.0, smax))) {
        rep.cond_ii_defect = std::numeric_limits<double>::infinity();
        return rep;
    }
    const ComplexMatrix g = inverse(a);
    rep.cond_ii_defect = op_norm(s.matrix * g * s.matrix - s.matrix);
    rep.ok = rep.cond_ii_defect <= tol * std::max(1.0, op_norm(s.matrix));
    return rep;
}

BOperator b_operator(const OperatorFamily& fam, const Projection& s, Complex z) {
    const Index n = fam.dim();
    if (s.dim() != n) throw DimensionError("b_operator: projection size mismatch");
    BOperator out;
    if (s.rank == 0) {
        out.full = ComplexMatrix::Zero(n, n);
        out.quotient = out.full;
        out.compressed = ComplexMatrix(0, 0);
        return out;
    }
    if (z == Complex(0.0)) throw DomainError("b_operator: z = 0");
    const Complex zs = fam.scale * z;
    ComplexMatrix g;
    try {
        g = inverse(fam.base + s.matrix);
    } catch (const SingularityError&) {
        throw PreconditionError("b_operator: A0 + S is not invertible");
    }
    const ComplexMatrix a1 = fam.remainder_at(z);
    const ComplexMatrix k = a1 * g;
    const double q = std::abs(zs) * fro(k);
    out.contraction = q;
    if (!(q < 1.0))
        throw DomainError("b_operator: series not contractive, |z A1 G| = " + fmt(q));

    // B = S G sum_j (-zs K)^j K S
    const ComplexMatrix sg = s.apply_left(g);
    ComplexMatrix term = s.apply_right(k);
    ComplexMatrix acc = term;
    const double pref = fro(sg) * fro(term);
    double qj = 1.0;
    int terms = 1;
    double tail = pref * q / (1.0 - q);
    while (tail >= kSeriesTol * std::max(1.0, pref) && terms < 4000) {
        term = (-zs) * (k * term);
        acc += term;
        ++terms;
        qj *= q;
        tail = pref * qj * q / (1.0 - q);
    }
    out.series_terms = terms;
    out.tail_bound = tail;
    out.full = sg * acc;

    const ComplexMatrix w = inverse(fam.evaluate(z) + s.matrix);
    out.quotient = (s.matrix - s.apply_left(s.apply_right(w))) / zs;
    out.agreement = fro(out.full - out.quotient);
    const double sn = fro(s.matrix);
    // quotient form loses eps |S|^2 |W| / |z| to cancellation
    out.agreement_tol = 1e-9 * std::max(1.0, fro(out.full)) +
                        64.0 * kEps * sn * sn * fro(w) / std::abs(zs);
    if (out.agreement > out.agreement_tol)
        throw AccuracyError("b_operator: series and quotient forms differ by " +
                            fmt(out.agreement) + " (tolerance " + fmt(out.agreement_tol) + ")");
    const ComplexMatrix& q_basis = s.range_basis;
    out.compressed = q_basis.adjoint() * out.full * q_basis;
    return out;
}

InversionResult jn_invert(const OperatorFamily& fam, const Projection& s, Complex z) {
    const Index n = fam.dim();
    InversionResult out;
    const ComplexMatrix az = fam.evaluate(z);
    if (s.rank == 0) {
        try {
            out.inverse = inverse(az);
            out.invertible = true;
        } catch (const SingularityError& e) {
            out.b_condition = e.condition();
            return out;
        }
    } else {
        const BOperator b = b_operator(fam, s, z);
        const ComplexMatrix w = inverse(az + s.matrix);
        const ComplexMatrix& q = s.range_basis;
        const ComplexMatrix lw = (q.adjoint() * s.matrix) * w;
        ComplexMatrix x;
        try {
            x = solve(b.compressed, lw);
        } catch (const SingularityError& e) {
            out.b_condition = e.condition();
            return out;
        }
        out.b_condition = 1.0 / std::max(rcond(b.compressed), 1e-300);
        out.inverse = w + (w * q) * x / (fam.scale * z);
        out.invertible = true;
    }
    out.residual = fro(az * out.inverse - ComplexMatrix::Identity(n, n));
    const double cond = fro(az) * fro(out.inverse);
    if (out.residual > 1e-8 * std::max(1.0, cond))
        throw AccuracyError("jn_invert: residual " + fmt(out.residual) + " too large");
    return out;
}

AnnihilationReport check_a0_annihilation(const ComplexMatrix& a0, double tol) {
    require_square(a0, "check_a0_annihilation");
    AnnihilationReport rep;
    rep.scale = op_norm(a0);
    const double psd = psd_defect(imaginary_part(a0));
    if (psd > tol * std::max(1.0, rep.scale))
        throw PreconditionError("check_a0_annihilation: imaginary part is not nonnegative "
                                "(defect " + fmt(psd) + ")");
    const Projection sr = riesz_projection_at_zero(a0);
    rep.rank = sr.rank;
    rep.left_defect = op_norm(a0 * sr.matrix);
    rep.right_defect = op_norm(sr.matrix * a0);
    const double lim = 1e-8 * std::max(rep.scale, 1e-300);
    rep.pass = rep.left_defect <= lim && rep.right_defect <= lim;
    return rep;
}

OrthogonalityReport check_riesz_orthogonal(const ComplexMatrix& a0, double tol,
                                           double rank_tol) {
    require_square(a0, "check_riesz_orthogonal");
    OrthogonalityReport rep;
    rep.psd_defect = psd_defect(imaginary_part(a0));
    rep.hypothesis_ok = rep.psd_defect <= 1e-10 * std::max(1.0, op_norm(a0));
    rep.orthogonal = kernel_projector(a0, rank_tol);
    rep.riesz = riesz_projection_at_zero(a0, rank_tol);
    rep.riesz_vs_orthogonal = op_norm(rep.riesz.matrix - rep.orthogonal.matrix);
    rep.pass = rep.hypothesis_ok && rep.riesz_vs_orthogonal <= tol;
    return rep;
}

FactorReport check_factor_annihilation(const std::vector<ComplexMatrix>& zs,
                                       const ComplexMatrix& x, const Projection& s,
                                       double tol) {
    require_square(x, "check_factor_annihilation");
    if (x.rows() != s.dim()) throw DimensionError("check_factor_annihilation: size mismatch");
    ComplexMatrix a0 = x;
    for (const auto& z : zs) {
        if (z.cols() != x.rows()) throw DimensionError("check_factor_annihilation: Z shape");
        a0 += Complex(0.0, 1.0) * (z.adjoint() * z);
    }
    const double scale = std::max(1.0, op_norm(a0));
    const double pre = std::max(op_norm(a0 * s.matrix), op_norm(s.matrix * a0));
    if (pre > tol * scale)
        throw PreconditionError("check_factor_annihilation: A0 S != 0 (defect " + fmt(pre) + ")");
    FactorReport rep;
    for (const auto& z : zs) {
        rep.max_z = std::max(rep.max_z, op_norm(z));
        rep.max_zs = std::max(rep.max_zs, op_norm(z * s.matrix));
        rep.max_szs = std::max(rep.max_szs, op_norm(s.matrix * z.adjoint()));
    }
    const double lim = tol * std::max(rep.max_z, 1e-300);
    rep.pass = rep.max_zs <= lim && rep.max_szs <= lim;
    return rep;
}

namespace {

// I_0..I_upto and W_0..W_{upto-1} for a partially built ladder whose levels
// 0..upto-1 all carry a nontrivial S_j.
void chain(const Ladder& lad, int upto, Complex kappa, LadderPoint& pt) {
    const OperatorFamily& fam = lad.family;
    pt.kappa = kappa;
    pt.I.assign(size_t(upto) + 1, ComplexMatrix());
    pt.W.assign(size_t(upto), ComplexMatrix());
    const ComplexMatrix a1 = fam.remainder_at(kappa);
    pt.I[0] = fam.base + (fam.scale * kappa) * a1;
    for (int j = 0; j < upto; ++j) {
        const LadderLevel& lv = lad.levels[size_t(j)];
        const Projection& s = lv.projection;
        pt.W[size_t(j)] = compressed_inverse(pt.I[size_t(j)] + s.matrix, lv.domain);
        const ComplexMatrix& w = pt.W[size_t(j)];
        ComplexMatrix next;
        if (j == 0) {
            next = s.apply_right(s.apply_left(a1) * w);
        } else if (j == 1 && fam.remainder_delta) {
            const Projection& s0 = lad.levels[0].projection;
            const ComplexMatrix& w0 = pt.W[0];
            const ComplexMatrix d0 = fam.remainder_delta(kappa) / kappa;
            ComplexMatrix inner = s.apply_left(d0) * w0 -
                                  fam.scale * ((s.apply_left(lad.remainder_at_zero) * w0) * a1);
            next = s.apply_right(s0.apply_right(inner) * w);
        } else {
            const ComplexMatrix delta = pt.I[size_t(j)] - lv.leading;
            next = s.apply_right(s.apply_left(delta) * w) / (lv.scale * kappa);
        }
        pt.I[size_t(j) + 1] = std::move(next);
    }
}

} // namespace

Ladder build_ladder(const OperatorFamily& fam, int max_depth, double rank_tol,
                    double richardson_h) {
    require_square(fam.base, "build_ladder");
    if (max_depth < 1 || max_depth > 4) throw DomainError("build_ladder: max_depth must be 1..4");
    Ladder lad;
    lad.family = fam;
    lad.rank_tol = rank_tol;
    const Index n = fam.dim();
    lad.remainder_at_zero = fam.remainder_at(0.0);
    Projection domain = Projection::identity(n);
    ComplexMatrix leading = fam.base;
    for (int j = 0; j < max_depth; ++j) {
        LadderLevel lv;
        lv.level = j;
        lv.domain = domain;
        lv.leading = leading;
        lv.scale = j == 0 ? fam.scale : 1.0;
        lv.projection = kernel_projector_within(leading, domain, rank_tol);
        const ComplexMatrix& qd = domain.range_basis;
        if (lv.projection.rank == 0) {
            lv.terminal = true;
            lv.conditions = verify_conditions(leading + domain.complement_matrix(),
                                              lv.projection);
            lad.levels.push_back(std::move(lv));
            lad.terminated = true;
            return lad;
        }
        const ComplexMatrix compressed = qd.adjoint() * leading * qd;
        if (j == max_depth - 1) {
            // depth exhausted: invert the last level with its Riesz projection
            lv.terminal = true;
            lad.final_riesz = riesz_projection_at_zero(compressed, rank_tol);
            lad.notes.push_back("level " + std::to_string(j) +
                                " keeps a kernel of rank " + std::to_string(lv.projection.rank) +
                                "; inverted with its Riesz projection");
            lv.projection = Projection::zero(n);
            lad.levels.push_back(std::move(lv));
            lad.terminated = false;
            return lad;
        }
        const OrthogonalityReport cert = check_riesz_orthogonal(compressed, 1e-8, rank_tol);
        lv.orthogonality_defect = cert.riesz_vs_orthogonal;
        if (!cert.pass)
            throw StructuralError("build_ladder: level " + std::to_string(j) +
                                  " fails the orthogonality certificate (|S_r - S_o| = " +
                                  fmt(cert.riesz_vs_orthogonal) + ", Im defect " +
                                  fmt(cert.psd_defect) + ")");
        lv.conditions = verify_conditions(leading + domain.complement_matrix(), lv.projection);
        if (!lv.conditions.ok)
            throw StructuralError("build_ladder: conditions (i)-(ii) fail at level " +
                                  std::to_string(j));
        lad.levels.push_back(lv);

        const Projection& s = lad.levels.back().projection;
        if (j == 0) {
            leading = s.apply_right(s.apply_left(lad.remainder_at_zero));
        } else if (j == 1 && fam.remainder_derivative) {
            const Projection& s0 = lad.levels[0].projection;
            const ComplexMatrix g0 = inverse(fam.base + s0.matrix);
            const ComplexMatrix& a = lad.remainder_at_zero;
            ComplexMatrix inner = *fam.remainder_derivative - fam.scale * (a * g0 * a);
            leading = s.apply_right(s.apply_left(inner));
        } else {
            const int next = j + 1;
            const Extrapolation ex = richardson_limit(
                [&](double h) {
                    LadderPoint pt;
                    chain(lad, next, Complex(h, 0.0), pt);
                    return pt.I[size_t(next)];
                },
                richardson_h, 5);
            leading = ex.value;
            lad.notes.push_back("I_" + std::to_string(next) +
                                "(0) by extrapolation, error estimate " + fmt(ex.error_estimate));
        }
        domain = s;
    }
    return lad;
}

LadderPoint evaluate_ladder(const Ladder& lad, Complex kappa) {
    if (lad.levels.empty()) throw PreconditionError("evaluate_ladder: empty ladder");
    if (kappa == Complex(0.0)) throw DomainError("evaluate_ladder: kappa = 0");
    const int last = int(lad.levels.size()) - 1;
    LadderPoint pt;
    chain(lad, last, kappa, pt);
    const LadderLevel& lv = lad.levels.back();
    const ComplexMatrix& it = pt.I[size_t(last)];
    if (lad.final_riesz) {
        pt.W.push_back(final_step_invert_value(it, lv.leading, lv.domain, &*lad.final_riesz,
                                               lad.rank_tol)
                           .inverse);
    } else {
        pt.W.push_back(compressed_inverse(it, lv.domain));
    }
    return pt;
}

ComplexMatrix ladder_inverse(const Ladder& lad, const LadderPoint& pt) {
    const int last = int(lad.levels.size()) - 1;
    ComplexMatrix x = pt.W[size_t(last)];
    for (int j = last - 1; j >= 0; --j) {
        const LadderLevel& lv = lad.levels[size_t(j)];
        const ComplexMatrix& w = pt.W[size_t(j)];
        const Projection& s = lv.projection;
        x = w + (w * s.apply_right(s.apply_left(x))) * w / (lv.scale * pt.kappa);
    }
    return x;
}

ComplexMatrix ladder_inverse(const Ladder& lad, Complex kappa) {
    return ladder_inverse(lad, evaluate_ladder(lad, kappa));
}

FinalStep final_step_invert_value(const ComplexMatrix& value, const ComplexMatrix& leading,
                                  const Projection& domain, const Projection* riesz,
                                  double rank_tol) {
    require_square(value, "final_step_invert");
    if (value.rows() != domain.dim() || leading.rows() != domain.dim())
        throw DimensionError("final_step_invert: size mismatch");
    if (!domain.orthogonal) throw PreconditionError("final_step_invert: domain not orthogonal");
    FinalStep out;
    const ComplexMatrix& qd = domain.range_basis;
    const ComplexMatrix c = qd.adjoint() * value * qd;
    out.riesz = riesz ? *riesz : riesz_projection_at_zero(qd.adjoint() * leading * qd, rank_tol);
    ComplexMatrix cinv;
    if (out.riesz.rank == 0) {
        cinv = inverse(c);
    } else {
        out.used_schur = true;
        const ComplexMatrix v = inverse(c + out.riesz.matrix);
        const ComplexMatrix& q3 = out.riesz.range_basis;
        const ComplexMatrix l = q3.adjoint() * out.riesz.matrix;
        const ComplexMatrix lv = l * v;
        const ComplexMatrix b =
            ComplexMatrix::Identity(q3.cols(), q3.cols()) - lv * q3;
        ComplexMatrix y;
        try {
            y = solve(b, lv);
        } catch (const SingularityError& e) {
            throw SingularityError("final_step_invert: Schur block is singular", e.condition());
        }
        cinv = v + (v * q3) * y;
    }
    out.inverse = qd * cinv * qd.adjoint();
    return out;
}

FinalStep final_step_invert(const OperatorFamily& fam, const Projection& domain, Complex kappa,
                            double rank_tol) {
    return final_step_invert_value(fam.evaluate(kappa), fam.base, domain, nullptr, rank_tol);
}

BoundednessReport final_step_boundedness(const OperatorFamily& fam, const Projection& domain,
                                         Complex direction, double t_min, double t_max,
                                         int per_decade) {
    BoundednessReport rep;
    const Complex dir = direction / std::abs(direction);
    const ComplexMatrix& qd = domain.range_basis;
    const Projection riesz = riesz_projection_at_zero(qd.adjoint() * fam.base * qd);
    for (double t : geometric_grid(t_min, t_max, per_decade)) {
        const FinalStep fs =
            final_step_invert_value(fam.evaluate(t * dir), fam.base, domain, &riesz);
        rep.moduli.push_back(t);
        rep.norms.push_back(op_norm(fs.inverse));
    }
    rep.exponent = fit_growth_exponent(rep.moduli, rep.norms);
    rep.bounded = rep.exponent >= -0.1;
    return rep;
}

} // namespace wgt
