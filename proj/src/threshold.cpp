#include "wgt/threshold.hpp"

#include <cmath>
#include <sstream>

#include "wgt/errors.hpp"
#include "wgt/fit.hpp"

namespace wgt {

namespace {

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(3);
    os << x;
    return os.str();
}

double group_tol(const WaveguideModel& m, double lambda) {
    return m.degeneracy_tol >= 0.0 ? m.degeneracy_tol : default_degeneracy_tol(lambda);
}

// (e^{-w} - 1) / (2 k) with w = k r; -r/2 at k = 0
Complex n1_kernel(Complex kappa, double r) {
    if (kappa == Complex(0.0)) return -0.5 * r;
    return expm1_complex(-kappa * r) / (2.0 * kappa);
}

struct KernelData {
    std::shared_ptr<const WaveguideModel> model;
    std::vector<TransverseMode> modes;
    double lambda = 0.0;
    double tol = 0.0;

    bool in_group(double ln) const { return std::abs(ln - lambda) <= tol; }

    ComplexMatrix m1(Complex kappa) const {
        ComplexMatrix m = mode_sandwich(*model, modes, [&](double ln, double r) {
            if (in_group(ln)) return n1_kernel(kappa, r);
            return free_kernel_r(Complex(lambda - ln) - kappa * kappa, r);
        });
        m.diagonal() += model->factors.u.cast<Complex>();
        return m;
    }

    ComplexMatrix m1_delta(Complex kappa) const {
        if (kappa == Complex(0.0)) return ComplexMatrix::Zero(model->dim(), model->dim());
        return mode_sandwich(*model, modes, [&](double ln, double r) {
            if (in_group(ln)) return kappa * n2_kernel(kappa, r);
            return free_kernel_difference(Complex(lambda - ln), -kappa * kappa, r);
        });
    }

    ComplexMatrix group_sandwich(const RadialKernel& k) const {
        std::vector<TransverseMode> g;
        for (const auto& m : modes)
            if (in_group(m.eigenvalue)) g.push_back(m);
        return mode_sandwich(*model, g, k);
    }
};

KernelData kernel_data(const ThresholdLadder& lad) {
    return {lad.model, lad.modes, lad.lambda, group_tol(*lad.model, lad.lambda)};
}

} // namespace

Complex n2_kernel(Complex kappa, double r) {
    const Complex w = kappa * r;
    if (std::abs(w) < 0.1) {
        // r^2 sum_{k>=2} (-w)^{k-2} / (2 k!)
        Complex term = 0.25, sum = 0.0;
        for (int k = 2; k < 14; ++k) {
            sum += term;
            term *= -w / double(k + 1);
        }
        return r * r * sum;
    }
    return (expm1_complex(-w) + w) / (2.0 * kappa * kappa);
}

bool ThresholdLadder::in_group(double lambda_n) const {
    return std::abs(lambda_n - lambda) <= group_tol(*model, lambda);
}

ComplexMatrix ThresholdLadder::M1(Complex kappa) const { return kernel_data(*this).m1(kappa); }

ComplexMatrix ThresholdLadder::M1_delta(Complex kappa) const {
    return kernel_data(*this).m1_delta(kappa);
}

ComplexMatrix ThresholdLadder::M(int j, Complex kappa) const {
    if (j < 2 || j > 3) throw DomainError("ThresholdLadder::M: j must be 2 or 3");
    if (kappa == Complex(0.0)) throw DomainError("ThresholdLadder::M: kappa = 0");
    const int lvl = j - 1;
    if (lvl >= depth()) throw PreconditionError("ThresholdLadder::M: ladder too short");
    const LadderPoint pt = evaluate_ladder(ladder, kappa);
    return (pt.I[size_t(lvl)] - ladder.levels[size_t(lvl)].leading) / kappa;
}

Projection ThresholdLadder::S(int j) const {
    const Index n = model->dim();
    if (j < 0) throw DomainError("ThresholdLadder::S: negative level");
    if (j >= depth()) return Projection::zero(n);
    const LadderLevel& lv = ladder.levels[size_t(j)];
    if (j == depth() - 1 && ladder.final_riesz) {
        const Projection& r = *ladder.final_riesz;
        const ComplexMatrix& q = lv.domain.range_basis;
        Projection p;
        p.orthogonal = r.orthogonal;
        p.tol = r.tol;
        p.rank = r.rank;
        p.matrix = q * r.matrix * q.adjoint();
        p.range_basis = q * r.range_basis;
        if (r.orthogonal) {
            ComplexMatrix comp(n, n - r.rank);
            comp << lv.domain.complement_basis, q * r.complement_basis;
            p.complement_basis = comp;
        }
        return p;
    }
    return lv.projection;
}

ThresholdLadder build_threshold_ladder(double lambda, const WaveguideModel& model,
                                       const ThresholdOptions& opt) {
    if (!(opt.epsilon > 0.0)) throw DomainError("build_threshold_ladder: epsilon must be positive");
    ThresholdLadder lad;
    lad.lambda = lambda;
    lad.epsilon = opt.epsilon;
    lad.tail_tol = opt.tail_tol;
    lad.model = std::make_shared<const WaveguideModel>(model);

    const double re_z = lambda + opt.epsilon * opt.epsilon;
    lad.n_max = opt.n_max > 0 ? opt.n_max : model.modes_for_tail(re_z, opt.tail_tol);
    lad.tail_bound = model.tail_bound(lad.n_max, re_z);
    if (lad.tail_bound > opt.tail_tol)
        throw TruncationError("build_threshold_ladder: n_max " + std::to_string(lad.n_max) +
                              " leaves tail " + fmt(lad.tail_bound));
    lad.modes = model.modes(lad.n_max);

    bool found = false;
    for (const auto& g : threshold_groups(lad.modes, model.degeneracy_tol))
        if (std::abs(g.value - lambda) <= group_tol(model, lambda)) {
            lad.group = g;
            found = true;
        }
    if (!found)
        throw PreconditionError("build_threshold_ladder: " + fmt(lambda) +
                                " is not a threshold among the first " +
                                std::to_string(lad.n_max) + " modes");

    const KernelData kd = kernel_data(lad);
    lad.N0 = kd.group_sandwich([](double, double) { return Complex(1.0); });
    lad.N1_0 = kd.group_sandwich([](double, double r) { return Complex(-0.5 * r); });
    lad.N2_0 = kd.group_sandwich([](double, double r) { return Complex(0.25 * r * r); });
    lad.M1_0 = kd.m1(0.0);
    lad.X = real_part(lad.M1_0);

    OperatorFamily fam;
    fam.base = lad.N0;
    fam.remainder = [kd](Complex k) { return kd.m1(k); };
    fam.remainder_delta = [kd](Complex k) { return kd.m1_delta(k); };
    fam.remainder_derivative = lad.N2_0;
    fam.scale = 2.0;
    fam.domain_radius = opt.epsilon;
    lad.ladder = build_ladder(fam, opt.max_depth, opt.rank_tol, opt.richardson_h);
    return lad;
}

double relative_error(const ComplexMatrix& a, const ComplexMatrix& b) {
    const double nb = op_norm(b);
    const double d = op_norm(a - b);
    return nb > 0.0 ? d / nb : d;
}

MTerms m_function_terms(const ThresholdLadder& lad, Complex kappa) {
    if (kappa == Complex(0.0)) throw DomainError("m_function: kappa = 0");
    if (std::abs(kappa) >= lad.epsilon || kappa.real() < 0.0 || kappa.imag() > 0.0)
        throw DomainError("m_function: kappa outside the closed quarter disk of radius epsilon");
    const Index n = lad.model->dim();
    const LadderPoint pt = evaluate_ladder(lad.ladder, kappa);
    const int depth = lad.depth();
    MTerms out;
    for (auto& t : out.terms) t = ComplexMatrix::Zero(n, n);
    const ComplexMatrix& w0 = pt.W[0];
    out.terms[0] = (2.0 * kappa) * w0;
    // left/right partial products W0 S0 W1 S1 ... and ... S1 W1 S0 W0
    ComplexMatrix lft = w0, rgt = w0;
    Complex coef = 1.0;
    for (int j = 1; j < depth; ++j) {
        const Projection s = lad.S(j - 1);
        if (s.rank == 0) break;
        const ComplexMatrix ls = s.apply_right(lft);
        const ComplexMatrix sr = s.apply_left(rgt);
        const ComplexMatrix lw = ls * pt.W[size_t(j)];
        out.terms[size_t(j)] = coef * (lw * sr);
        if (j + 1 < depth && lad.S(j).rank > 0) {
            lft = lw;
            rgt = pt.W[size_t(j)] * sr;
        }
        coef /= kappa;
    }
    out.total = out.terms[0];
    for (int j = 1; j < 4; ++j) out.total += out.terms[size_t(j)];
    return out;
}

ComplexMatrix m_direct(const ThresholdLadder& lad, Complex kappa) {
    const auto pt = SpectralPoint::make(lad.lambda, kappa, lad.epsilon);
    return inverse(bs_operator(pt, *lad.model, lad.tail_tol, lad.n_max).matrix);
}

ComplexMatrix m_function(const ThresholdLadder& lad, Complex kappa, bool verify) {
    MTerms t = m_function_terms(lad, kappa);
    if (verify && kappa.real() > 0.0 && kappa.imag() < 0.0) {
        const double err = relative_error(t.total, m_direct(lad, kappa));
        if (!(err <= 1e-6)) {
            std::string msg = "m_function: expansion differs from direct inversion by " + fmt(err) +
                              " (term norms";
            for (const auto& m : t.terms) msg += " " + fmt(m.norm());
            throw AccuracyError(msg + ")");
        }
    }
    return std::move(t.total);
}

ComplexMatrix EigenvalueLadder::T1(Complex kappa) const {
    if (kappa == Complex(0.0)) throw DomainError("EigenvalueLadder::T1: kappa = 0");
    const Complex k2 = kappa * kappa;
    return mode_sandwich(*model, modes, [&](double ln, double r) {
        return free_kernel_difference(Complex(lambda - ln), -k2, r) / k2;
    });
}

ComplexMatrix EigenvalueLadder::J0(Complex kappa) const {
    return T0 + (kappa * kappa) * T1(kappa);
}

EigenvalueLadder build_eigenvalue_ladder(double lambda, const WaveguideModel& model,
                                         const ThresholdOptions& opt) {
    if (!(opt.epsilon > 0.0)) throw DomainError("build_eigenvalue_ladder: epsilon must be positive");
    EigenvalueLadder lad;
    lad.lambda = lambda;
    lad.epsilon = opt.epsilon;
    lad.tail_tol = opt.tail_tol;
    lad.model = std::make_shared<const WaveguideModel>(model);
    const double re_z = lambda + opt.epsilon * opt.epsilon;
    lad.n_max = opt.n_max > 0 ? opt.n_max : model.modes_for_tail(re_z, opt.tail_tol);
    lad.tail_bound = model.tail_bound(lad.n_max, re_z);
    if (lad.tail_bound > opt.tail_tol)
        throw TruncationError("build_eigenvalue_ladder: n_max " + std::to_string(lad.n_max) +
                              " leaves tail " + fmt(lad.tail_bound));
    lad.modes = model.modes(lad.n_max);
    for (const auto& m : model.modes(lad.n_max + 1))
        if (std::abs(m.eigenvalue - lambda) <= opt.epsilon * opt.epsilon)
            throw PreconditionError("build_eigenvalue_ladder: threshold " + fmt(m.eigenvalue) +
                                    " within epsilon^2 of " + fmt(lambda));
    lad.T0 = bs_operator(SpectralPoint::make(lambda, 0.0), model, opt.tail_tol, lad.n_max).matrix;
    lad.psd_defect = psd_defect(imaginary_part(lad.T0));
    const OrthogonalityReport cert = check_riesz_orthogonal(lad.T0, 1e-8, opt.rank_tol);
    lad.orthogonality_defect = cert.riesz_vs_orthogonal;
    if (!cert.pass)
        throw StructuralError("build_eigenvalue_ladder: orthogonality certificate fails (" +
                              fmt(cert.riesz_vs_orthogonal) + ")");
    lad.S = cert.orthogonal;
    lad.conditions = verify_conditions(lad.T0, lad.S);
    return lad;
}

ComplexMatrix m_function_at_eigenvalue(const EigenvalueLadder& lad, Complex kappa, bool verify) {
    if (kappa == Complex(0.0)) throw DomainError("m_function_at_eigenvalue: kappa = 0");
    if (std::abs(kappa) >= lad.epsilon || kappa.real() < 0.0 || kappa.imag() > 0.0)
        throw DomainError("m_function_at_eigenvalue: kappa outside the quarter disk");
    const ComplexMatrix j0 = lad.J0(kappa);
    ComplexMatrix out;
    if (lad.S.rank == 0) {
        out = inverse(j0);
    } else {
        const ComplexMatrix w = inverse(j0 + lad.S.matrix);
        // J1 = (S - S W S) / k^2 on range(S), the Schur complement form
        const ComplexMatrix& q = lad.S.range_basis;
        const ComplexMatrix qw = q.adjoint() * w;
        const ComplexMatrix j1 = (ComplexMatrix::Identity(q.cols(), q.cols()) - qw * q) /
                                 (kappa * kappa);
        const ComplexMatrix wq = w * q;
        out = w + (wq * solve(j1, qw)) / (kappa * kappa);
    }
    if (verify && kappa.real() > 0.0 && kappa.imag() < 0.0) {
        const double err = relative_error(out, m_direct(lad, kappa));
        if (!(err <= 1e-6))
            throw AccuracyError("m_function_at_eigenvalue: differs from direct inversion by " +
                                fmt(err));
    }
    return out;
}

ComplexMatrix m_direct(const EigenvalueLadder& lad, Complex kappa) {
    const auto pt = SpectralPoint::make(lad.lambda, kappa, lad.epsilon);
    return inverse(bs_operator(pt, *lad.model, lad.tail_tol, lad.n_max).matrix);
}

ComplexMatrix commutator(const ThresholdLadder& lad, int j, int k, Complex kappa) {
    if (!(j >= k && k >= 0 && j <= 2)) throw DomainError("commutator: need 2 >= j >= k >= 0");
    const Index n = lad.model->dim();
    const Projection s = lad.S(j);
    if (s.rank == 0 || k >= lad.depth() - 1) return ComplexMatrix::Zero(n, n);
    const LadderPoint pt = evaluate_ladder(lad.ladder, kappa);
    const ComplexMatrix& w = pt.W[size_t(k)];
    return s.apply_left(w) - s.apply_right(w);
}

namespace {

double rel(double defect, double scale) { return scale > 0.0 ? defect / scale : defect; }

void add(StructuralReport& r, std::string name, double defect, double tol,
         bool informational = false) {
    r.identities.push_back({std::move(name), defect, tol, defect <= tol, informational});
}

} // namespace

StructuralReport verify_structural_lemmas(const ThresholdLadder& lad, double t_min, double t_max,
                                          double tol) {
    StructuralReport rep;
    const WaveguideModel& m = *lad.model;
    const Grid& g = m.grid;
    const Index n = m.dim();
    const Projection s0 = lad.S(0), s1 = lad.S(1), s2 = lad.S(2);

    for (const auto& [name, mat] : {std::pair<const char*, const ComplexMatrix*>{"N0 self-adjoint", &lad.N0},
                                    {"N1(0) self-adjoint", &lad.N1_0},
                                    {"N2(0) self-adjoint", &lad.N2_0}})
        add(rep, name, rel(hermitian_defect(*mat), std::max(1.0, op_norm(*mat))), 1e-12);

    std::vector<TransverseMode> group;
    for (const auto& md : lad.modes)
        if (lad.in_group(md.eigenvalue)) group.push_back(md);
    const Index n0_rank = n - s0.rank;
    add(rep, "rank N0 <= |N|", double(std::max<Index>(0, n0_rank - Index(group.size()))), 0.0);

    const RealMatrix f = m.mode_samples(group);
    for (size_t a = 0; a < group.size(); ++a) {
        // g_n = b (f_n (x) 1); x g_n; and the per-x map of (P_n (x) 1) v
        ComplexVector gn(n), qn(n);
        ComplexMatrix per_x = ComplexMatrix::Zero(g.n_x(), n);
        for (Index i = 0; i < g.n_t(); ++i)
            for (Index k = 0; k < g.n_x(); ++k) {
                const Index I = g.index(i, k);
                gn(I) = m.b(I) * f(Index(a), i);
                qn(I) = g.x(k) * gn(I);
                per_x(k, I) = std::sqrt(g.omega_weights(i)) * f(Index(a), i) * m.factors.v(I);
            }
        const std::string tag = " (n = " + std::to_string(group[a].index + 1) + ")";
        const ComplexMatrix gs = s0.apply_right(ComplexMatrix(gn.adjoint()));
        add(rep, "<v(f_n x 1)| S0 = 0" + tag, rel(gs.norm(), gn.norm()), tol);
        const ComplexMatrix ps = s0.apply_right(per_x);
        add(rep, "(P_n x 1) v S0 = 0, pointwise in x" + tag, rel(op_norm(ps), op_norm(per_x)),
            tol, true);
        if (s2.rank > 0) {
            const ComplexMatrix sq = s2.apply_left(ComplexMatrix(qn));
            add(rep, "S2 (1 x Q) v (f_n x 1) = 0" + tag, rel(sq.norm(), qn.norm()), tol);
        }
    }

    if (s1.rank > 0) {
        for (const auto& md : lad.modes) {
            if (lad.in_group(md.eigenvalue) || md.eigenvalue >= lad.lambda) continue;
            const ComplexMatrix b = optical_factor(m, md, lad.lambda).cast<Complex>();
            const double nb = std::max(op_norm(b), 1e-300);
            const std::string tag = " (n = " + std::to_string(md.index + 1) + ")";
            add(rep, "B_n S1 = 0" + tag, rel(op_norm(s1.apply_right(b)), nb), tol);
            add(rep, "S1 B_n* = 0" + tag,
                rel(op_norm(s1.apply_left(ComplexMatrix(b.adjoint()))), nb), tol);
        }
    }
    if (s2.rank > 0) {
        const double nx = std::max(1.0, op_norm(lad.X));
        add(rep, "X S2 = 0", rel(op_norm(s2.apply_right(lad.X)), nx), tol);
        add(rep, "S2 X = 0", rel(op_norm(s2.apply_left(lad.X)), nx), tol);
        const double nm = std::max(1.0, op_norm(lad.M1_0));
        add(rep, "M1(0) S2 = 0", rel(op_norm(s2.apply_right(lad.M1_0)), nm), tol);
        add(rep, "S2 M1(0) = 0", rel(op_norm(s2.apply_left(lad.M1_0)), nm), tol);
    }
    if (lad.depth() > 2) {
        const ComplexMatrix& i2 = lad.ladder.levels[2].leading;
        add(rep, "I2(0) self-adjoint", rel(hermitian_defect(i2), std::max(1.0, op_norm(i2))), 1e-10);
    }
    for (int j = 0; j + 1 < lad.depth() && j < 3; ++j)
        add(rep, "S" + std::to_string(j) + " Riesz = orthogonal",
            lad.ladder.levels[size_t(j)].orthogonality_defect, tol);
    for (int j = 1; j < lad.depth(); ++j)
        add(rep, "rank S" + std::to_string(j) + " <= rank S" + std::to_string(j - 1),
            double(std::max<Index>(0, lad.S(j).rank - lad.S(j - 1).rank)), 0.0);

    // growth of the commutators along the diagonal ray, boundedness of the
    // terminal inverse along the real ray
    const std::vector<double> ts = geometric_grid(t_min, t_max, 8);
    const Complex dir = Complex(1.0, -1.0) / std::sqrt(2.0);
    std::vector<std::vector<double>> cn(9);
    std::vector<double> term;
    const int last = lad.depth() - 1;
    for (double t : ts) {
        const LadderPoint pt = evaluate_ladder(lad.ladder, t * dir);
        int idx = 0;
        for (int j = 0; j <= 2; ++j)
            for (int k = 0; k <= j; ++k, ++idx) {
                const Projection s = lad.S(j);
                double v = 0.0;
                if (s.rank > 0 && k < last) {
                    const ComplexMatrix& w = pt.W[size_t(k)];
                    v = op_norm(s.apply_left(w) - s.apply_right(w));
                }
                cn[size_t(idx)].push_back(v);
            }
        term.push_back(op_norm(evaluate_ladder(lad.ladder, Complex(t, 0.0)).W[size_t(last)]));
    }
    int idx = 0;
    for (int j = 0; j <= 2; ++j)
        for (int k = 0; k <= j; ++k, ++idx) {
            const double e = fit_growth_exponent(ts, cn[size_t(idx)]);
            const double need = (j == 2 && k == 0) ? 1.9 : 0.9;
            rep.growth.push_back({"C" + std::to_string(j) + std::to_string(k), e, need, e >= need});
        }
    const double eb = fit_growth_exponent(ts, term);
    rep.growth.push_back({"terminal inverse I" + std::to_string(last) + "^{-1}", eb, -0.1, eb >= -0.1});

    rep.pass = true;
    for (const auto& l : rep.identities)
        if (!l.informational && !l.pass) rep.pass = false;
    for (const auto& l : rep.growth)
        if (!l.pass) rep.pass = false;
    return rep;
}

nlohmann::json StructuralReport::to_json() const {
    nlohmann::json j;
    j["pass"] = pass;
    for (const auto& l : identities)
        j["identities"].push_back({{"name", l.name},
                                   {"defect", l.defect},
                                   {"tol", l.tol},
                                   {"pass", l.pass},
                                   {"informational", l.informational}});
    for (const auto& l : growth)
        j["growth"].push_back({{"name", l.name},
                               {"exponent", std::isfinite(l.exponent) ? nlohmann::json(l.exponent)
                                                                     : nlohmann::json("inf")},
                               {"required", l.required},
                               {"pass", l.pass}});
    return j;
}

} // namespace wgt
