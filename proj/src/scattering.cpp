#include "wgt/scattering.hpp"

#include <Eigen/LU>
#include <cmath>
#include <limits>
#include <numbers>

#include "wgt/errors.hpp"
#include "wgt/fit.hpp"
#include "wgt/parallel.hpp"

namespace wgt {

namespace {

constexpr double pi = std::numbers::pi;
const Complex I1(0.0, 1.0);

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

double threshold_tol(const WaveguideModel& m, double lambda) {
    return m.degeneracy_tol >= 0.0 ? m.degeneracy_tol : default_degeneracy_tol(lambda);
}

const TransverseMode& mode_at(const std::vector<TransverseMode>& modes, int n) {
    if (n < 0 || size_t(n) >= modes.size())
        throw DomainError("scattering: mode " + std::to_string(n) + " outside the kept " +
                          std::to_string(modes.size()));
    return modes[size_t(n)];
}

// Row with e^{-i sigma s x} replaced by a caller-supplied phase function.
template <class Phase>
ComplexVector weighted_row(const TransverseMode& mode, const WaveguideModel& model, Complex c,
                           Phase phase) {
    const Grid& g = model.grid;
    const RealMatrix f = model.mode_samples({mode});
    ComplexVector row(g.size());
    for (Index i = 0; i < g.n_t(); ++i)
        for (Index k = 0; k < g.n_x(); ++k) {
            const Index id = g.index(i, k);
            row(id) = c * f(0, i) * phase(g.x(k)) * model.b(id);
        }
    return row;
}

} // namespace

const char* to_string(PairKind k) {
    switch (k) {
    case PairKind::OpenOpen: return "open/open";
    case PairKind::OpenOpening: return "open/opening";
    case PairKind::OpeningOpening: return "opening/opening";
    }
    return "?";
}

TraceRow trace_row(Complex energy, const TransverseMode& mode, int sigma,
                   const WaveguideModel& model) {
    if (sigma != 1 && sigma != -1) throw DomainError("trace_row: sigma must be +1 or -1");
    const Complex gap = energy - mode.eigenvalue;
    if (gap.imag() == 0.0 && !(gap.real() > 0.0))
        throw ChannelClosedError("trace_row: channel " + std::to_string(mode.index) +
                                 " is closed at energy " + fmt(energy.real()));
    const Complex s = std::sqrt(gap);
    TraceRow out;
    out.energy = energy;
    out.channel = {mode.index, sigma};
    out.prefactor = 1.0 / (std::sqrt(2.0) * std::sqrt(s) * std::sqrt(2.0 * pi));
    out.row = weighted_row(mode, model, out.prefactor,
                           [&](double x) { return std::exp(-I1 * double(sigma) * s * x); });
    return out;
}

std::vector<Channel> open_channels(double lambda, const std::vector<TransverseMode>& modes) {
    std::vector<Channel> out;
    for (const auto& m : modes)
        if (m.eigenvalue < lambda) {
            out.push_back({m.index, -1});
            out.push_back({m.index, 1});
        }
    return out;
}

ComplexMatrix trace_block(Complex energy, const std::vector<Channel>& channels,
                          const std::vector<TransverseMode>& modes, const WaveguideModel& model) {
    ComplexMatrix r(Index(channels.size()), model.grid.size());
    for (size_t c = 0; c < channels.size(); ++c)
        r.row(Index(c)) =
            trace_row(energy, mode_at(modes, channels[c].mode), channels[c].sigma, model)
                .row.transpose();
    return r;
}

ComplexVector gamma_row(int j, const TransverseMode& mode, const WaveguideModel& model) {
    if (j < 0) throw DomainError("gamma_row: order must be nonnegative");
    const double c = 1.0 / (2.0 * std::tgamma(j + 1.0) * std::sqrt(pi));
    return weighted_row(mode, model, c, [&](double x) { return Complex(std::pow(x, j), 0.0); });
}

Complex SMatrix::entry(const Channel& a, const Channel& b) const {
    Index ia = -1, ib = -1;
    for (size_t c = 0; c < channels.size(); ++c) {
        if (channels[c] == a) ia = Index(c);
        if (channels[c] == b) ib = Index(c);
    }
    if (ia < 0 || ib < 0) throw ChannelClosedError("SMatrix::entry: channel not open");
    return s(ia, ib);
}

SMatrix channel_smatrix(double lambda, const WaveguideModel& model, double tail_tol,
                        int n_max_override) {
    const int n_keep =
        n_max_override > 0 ? n_max_override : model.modes_for_tail(lambda, tail_tol);
    const auto modes = model.modes(n_keep);
    // the first closed mode is the nearest threshold above lambda
    for (const auto& g : threshold_groups(model.modes(n_keep + 1), model.degeneracy_tol))
        if (std::abs(g.value - lambda) <= threshold_tol(model, lambda))
            throw PreconditionError("channel_smatrix: " + fmt(lambda) + " is a threshold");
    const auto op = bs_operator(SpectralPoint::make(lambda, 0.0), model, tail_tol, n_keep);

    SMatrix out;
    out.lambda = lambda;
    out.n_max = op.n_max;
    out.tail_bound = op.tail_bound;
    out.channels = open_channels(lambda, modes);

    const ComplexMatrix& t = op.matrix;
    const double sigma = smallest_singular_value(t);
    const double scale = t.cwiseAbs().colwise().sum().maxCoeff();
    if (!(sigma > 1e-12 * scale))
        throw SingularityError("channel_smatrix: boundary value singular at " + fmt(lambda) +
                               " (relative smallest singular value " + fmt(sigma / scale) +
                               "); use the eigenvalue expansion",
                               scale / std::max(sigma, std::numeric_limits<double>::min()));
    const Index m = Index(out.channels.size());
    if (m == 0) return out;
    const ComplexMatrix r = trace_block(lambda, out.channels, modes, model);
    const ComplexMatrix x = Eigen::PartialPivLU<ComplexMatrix>(t).solve(r.adjoint());
    out.s = ComplexMatrix::Identity(m, m) - 2.0 * pi * I1 * (r * x);
    out.unitarity_defect = op_norm(out.s.adjoint() * out.s - ComplexMatrix::Identity(m, m));
    return out;
}

UnitarityCheck unitarity_check(double lambda, const WaveguideModel& coarse,
                               const WaveguideModel& fine, double tail_tol) {
    const SMatrix a = channel_smatrix(lambda, coarse, tail_tol);
    const SMatrix b = channel_smatrix(lambda, fine, tail_tol);
    if (a.channels != b.channels)
        throw DimensionError("unitarity_check: open channels differ between grids");
    UnitarityCheck out;
    out.lambda = lambda;
    out.defect_coarse = a.unitarity_defect;
    out.defect_fine = b.unitarity_defect;
    out.budget = a.s.size() == 0 ? 0.0 : 10.0 * op_norm(a.s - b.s);
    return out;
}

namespace {

RealVector grid_x(const WaveguideModel& model) {
    const Grid& g = model.grid;
    RealVector x(g.size());
    for (Index i = 0; i < g.n_t(); ++i)
        for (Index k = 0; k < g.n_x(); ++k) x(g.index(i, k)) = g.x(k);
    return x;
}

nlohmann::json number(double x) {
    if (std::isfinite(x)) return x;
    return x > 0 ? "inf" : (x < 0 ? "-inf" : "nan");
}

nlohmann::json complex_list(const std::vector<Complex>& v) {
    auto out = nlohmann::json::array();
    for (const auto& z : v) out.push_back({number(z.real()), number(z.imag())});
    return out;
}

nlohmann::json number_list(const std::vector<double>& v) {
    auto out = nlohmann::json::array();
    for (double x : v) out.push_back(number(x));
    return out;
}

RemainderFit finish(RemainderFit fit, double required) {
    fit.required = required;
    fit.exponent = fit_growth_exponent(fit.t, fit.remainder);
    fit.pass = fit.exponent >= required;
    return fit;
}

} // namespace

nlohmann::json RemainderFit::to_json() const {
    return {{"t", number_list(t)},
            {"remainder", number_list(remainder)},
            {"exponent", number(exponent)},
            {"required", required},
            {"pass", pass}};
}

RemainderFit f0_expansion_regular(double lambda, const TransverseMode& mode, int sigma,
                                  const WaveguideModel& model, const std::vector<double>& t,
                                  double theta) {
    const double a = lambda - mode.eigenvalue;
    if (!(a > 0.0)) throw ChannelClosedError("f0_expansion_regular: channel closed at lambda");
    const ComplexVector base = trace_row(lambda, mode, sigma, model).row;
    const RealVector x = grid_x(model);
    RemainderFit fit;
    fit.t = t;
    for (double ti : t) {
        const Complex k = std::polar(ti, theta);
        const Complex k2 = k * k;
        const ComplexVector row = trace_row(lambda - k2, mode, sigma, model).row;
        const ComplexVector factor =
            (1.0 + k2 / (4.0 * a) + I1 * double(sigma) * k2 / (2.0 * std::sqrt(a)) * x.array())
                .matrix();
        fit.remainder.push_back((row - base.cwiseProduct(factor)).norm());
    }
    return finish(std::move(fit), 3.9);
}

RemainderFit f0_expansion_threshold(const TransverseMode& mode, int sigma,
                                    const WaveguideModel& model, const std::vector<double>& t) {
    const ComplexVector g0 = gamma_row(0, mode, model);
    const ComplexVector g1 = gamma_row(1, mode, model);
    RemainderFit fit;
    fit.t = t;
    for (double ti : t) {
        const ComplexVector row = trace_row(mode.eigenvalue + ti * ti, mode, sigma, model).row;
        const ComplexVector lead =
            g0 / std::sqrt(ti) - I1 * double(sigma) * std::sqrt(ti) * g1;
        fit.remainder.push_back((row - lead).norm());
    }
    return finish(std::move(fit), 1.5);
}

GrowthLine f0_projection_growth(const std::string& name, double lambda, const Projection& s,
                                const TransverseMode& mode, int sigma,
                                const WaveguideModel& model, const std::vector<double>& t,
                                double required) {
    GrowthLine line;
    line.name = name;
    line.required = required;
    std::vector<double> norms;
    for (double ti : t) {
        if (s.is_zero()) {
            norms.push_back(0.0);
            continue;
        }
        const ComplexVector row = trace_row(lambda - ti * ti, mode, sigma, model).row;
        norms.push_back((row.transpose() * s.matrix).norm());
    }
    line.exponent = fit_growth_exponent(t, norms);
    line.pass = line.exponent >= required;
    return line;
}

namespace {

template <class Lad, class MFun>
Complex entry_from(const Lad& lad, Complex kappa, const Channel& a, const Channel& b, MFun mfun) {
    const Complex e = lad.lambda - kappa * kappa;
    const ComplexVector ra = trace_row(e, mode_at(lad.modes, a.mode), a.sigma, *lad.model).row;
    const ComplexVector rb = trace_row(e, mode_at(lad.modes, b.mode), b.sigma, *lad.model).row;
    const ComplexMatrix m = mfun(kappa);
    const Complex delta = a == b ? 1.0 : 0.0;
    return delta - 2.0 * pi * I1 * ra.cwiseProduct(m * rb.conjugate()).sum();
}

void fill_cauchy(const std::vector<Complex>& v, std::vector<double>& out) {
    for (size_t i = 1; i < v.size(); ++i) out.push_back(std::abs(v[i] - v[i - 1]));
}

template <class Lad, class MFun>
ChannelBlock block_from(const Lad& lad, Complex kappa, const std::vector<Channel>& channels,
                        MFun mfun) {
    ChannelBlock out;
    out.kappa = kappa;
    out.energy = lad.lambda - kappa * kappa;
    out.channels = channels;
    const Index m = Index(channels.size());
    out.s = ComplexMatrix::Identity(m, m);
    if (m == 0) return out;
    const ComplexMatrix r = trace_block(out.energy, channels, lad.modes, *lad.model);
    out.s -= 2.0 * pi * I1 * (r * mfun(kappa) * r.adjoint());
    out.unitarity_defect = out.energy.imag() == 0.0
                               ? op_norm(out.s.adjoint() * out.s - ComplexMatrix::Identity(m, m))
                               : std::numeric_limits<double>::quiet_NaN();
    return out;
}

std::vector<Channel> threshold_channels(const ThresholdLadder& lad, Complex kappa) {
    // the group opens except on the left ray, where lambda - kappa^2 < lambda
    const bool left = kappa.imag() == 0.0;
    std::vector<Channel> out;
    for (const auto& m : lad.modes) {
        const bool open = m.eigenvalue < lad.lambda && !lad.in_group(m.eigenvalue);
        if (open || (!left && lad.in_group(m.eigenvalue))) {
            out.push_back({m.index, -1});
            out.push_back({m.index, 1});
        }
    }
    return out;
}

void check_h(const std::vector<double>& h, double epsilon, const char* who) {
    for (double hi : h)
        if (!(hi > 0.0 && hi < epsilon))
            throw DomainError(std::string(who) + ": h must lie in (0, epsilon)");
}

ContinuityReport assemble(double lambda, const Channel& a, const Channel& b, PairKind kind,
                          const std::vector<double>& h, const std::vector<ChannelBlock>& left,
                          const std::vector<ChannelBlock>& right) {
    ContinuityReport rep;
    rep.lambda = lambda;
    rep.a = a;
    rep.b = b;
    rep.kind = kind;
    rep.h = h;
    for (const auto& blk : right) rep.right.push_back(blk.entry(a, b));
    if (kind == PairKind::OpenOpen)
        for (const auto& blk : left) rep.left.push_back(blk.entry(a, b));
    fill_cauchy(rep.right, rep.right_cauchy);
    fill_cauchy(rep.left, rep.left_cauchy);
    for (size_t i = 0; i < rep.left.size(); ++i)
        rep.gap.push_back(std::abs(rep.left[i] - rep.right[i]));
    return rep;
}

} // namespace

nlohmann::json ContinuityReport::to_json() const {
    return {{"lambda", lambda},
            {"a", {{"mode", a.mode}, {"sigma", a.sigma}}},
            {"b", {{"mode", b.mode}, {"sigma", b.sigma}}},
            {"kind", to_string(kind)},
            {"h", number_list(h)},
            {"left", complex_list(left)},
            {"right", complex_list(right)},
            {"left_cauchy", number_list(left_cauchy)},
            {"right_cauchy", number_list(right_cauchy)},
            {"gap", number_list(gap)}};
}

nlohmann::json EigenContinuityReport::to_json() const {
    nlohmann::json js = entries.to_json();
    js["f0_vs"] = {{"name", f0_vs.name},
                   {"exponent", number(f0_vs.exponent)},
                   {"required", f0_vs.required},
                   {"pass", f0_vs.pass}};
    return js;
}

Complex smatrix_entry(const ThresholdLadder& lad, Complex kappa, const Channel& a,
                      const Channel& b) {
    return entry_from(lad, kappa, a, b, [&](Complex k) { return m_function(lad, k); });
}

Complex smatrix_entry(const EigenvalueLadder& lad, Complex kappa, const Channel& a,
                      const Channel& b) {
    return entry_from(lad, kappa, a, b,
                      [&](Complex k) { return m_function_at_eigenvalue(lad, k); });
}

Complex ChannelBlock::entry(const Channel& a, const Channel& b) const {
    Index ia = -1, ib = -1;
    for (size_t c = 0; c < channels.size(); ++c) {
        if (channels[c] == a) ia = Index(c);
        if (channels[c] == b) ib = Index(c);
    }
    if (ia < 0 || ib < 0) throw ChannelClosedError("ChannelBlock::entry: channel not open");
    return s(ia, ib);
}

ChannelBlock smatrix_block(const ThresholdLadder& lad, Complex kappa, bool verify) {
    return block_from(lad, kappa, threshold_channels(lad, kappa),
                      [&](Complex k) { return m_function(lad, k, verify); });
}

ChannelBlock smatrix_block(const EigenvalueLadder& lad, Complex kappa, bool verify) {
    return block_from(lad, kappa, open_channels(lad.lambda, lad.modes),
                      [&](Complex k) { return m_function_at_eigenvalue(lad, k, verify); });
}

PairKind pair_kind(const ThresholdLadder& lad, const Channel& a, const Channel& b) {
    auto opening = [&](const Channel& c) {
        const auto& m = mode_at(lad.modes, c.mode);
        if (lad.in_group(m.eigenvalue)) return true;
        if (!(m.eigenvalue < lad.lambda))
            throw ChannelClosedError("pair_kind: channel " + std::to_string(c.mode) +
                                     " is closed at the threshold");
        return false;
    };
    const int n = int(opening(a)) + int(opening(b));
    return n == 0 ? PairKind::OpenOpen : n == 1 ? PairKind::OpenOpening : PairKind::OpeningOpening;
}

ContinuityScan threshold_continuity_scan(const ThresholdLadder& lad,
                                         const std::vector<std::pair<Channel, Channel>>& pairs,
                                         const std::vector<double>& h, int threads,
                                         bool verify) {
    check_h(h, lad.epsilon, "threshold_continuity_scan");
    std::vector<PairKind> kinds;
    bool need_left = false;
    for (const auto& [a, b] : pairs) {
        kinds.push_back(pair_kind(lad, a, b));
        need_left = need_left || kinds.back() == PairKind::OpenOpen;
    }
    ContinuityScan scan;
    scan.lambda = lad.lambda;
    scan.h = h;
    scan.right.resize(h.size());
    if (need_left) scan.left.resize(h.size());
    parallel_for(h.size(), threads, [&](size_t i) {
        scan.right[i] = smatrix_block(lad, Complex(0.0, -h[i]), verify);
        if (need_left) scan.left[i] = smatrix_block(lad, Complex(h[i], 0.0), verify);
    });
    for (size_t p = 0; p < pairs.size(); ++p)
        scan.pairs.push_back(
            assemble(lad.lambda, pairs[p].first, pairs[p].second, kinds[p], h, scan.left, scan.right));
    return scan;
}

ContinuityReport threshold_continuity_probe(const ThresholdLadder& lad, const Channel& a,
                                            const Channel& b, const std::vector<double>& h,
                                            int threads) {
    return threshold_continuity_scan(lad, {{a, b}}, h, threads).pairs.front();
}

EigenContinuityReport eigenvalue_continuity_probe(const EigenvalueLadder& lad, const Channel& a,
                                                  const Channel& b, const std::vector<double>& h,
                                                  int threads) {
    for (const Channel& c : {a, b})
        if (!(mode_at(lad.modes, c.mode).eigenvalue < lad.lambda))
            throw ChannelClosedError("eigenvalue_continuity_probe: channel " +
                                     std::to_string(c.mode) + " is closed");
    check_h(h, lad.epsilon, "eigenvalue_continuity_probe");
    std::vector<ChannelBlock> left(h.size()), right(h.size());
    parallel_for(h.size(), threads, [&](size_t i) {
        right[i] = smatrix_block(lad, Complex(0.0, -h[i]));
        left[i] = smatrix_block(lad, Complex(h[i], 0.0));
    });
    EigenContinuityReport rep;
    rep.entries = assemble(lad.lambda, a, b, PairKind::OpenOpen, h, left, right);
    rep.f0_vs = f0_projection_growth("F0 v S", lad.lambda, lad.S, mode_at(lad.modes, a.mode),
                                     a.sigma, *lad.model, h);
    return rep;
}

nlohmann::json ContinuityScan::to_json() const {
    auto defects = [](const std::vector<ChannelBlock>& v) {
        std::vector<double> out;
        for (const auto& b : v) out.push_back(b.unitarity_defect);
        return number_list(out);
    };
    auto list = nlohmann::json::array();
    for (const auto& p : pairs) list.push_back(p.to_json());
    return {{"lambda", lambda},
            {"h", number_list(h)},
            {"left_unitarity_defect", defects(left)},
            {"right_unitarity_defect", defects(right)},
            {"pairs", list}};
}

} // namespace wgt
