#include "wgt/waveguide.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace wgt {

namespace {

constexpr double kPi = std::numbers::pi;

void check_length(double l, const char* what) {
    if (!(l > 0.0) || !std::isfinite(l)) throw ModelError(std::string(what) + ": length must be positive");
}

} // namespace

CrossSection CrossSection::interval(double length) {
    check_length(length, "interval cross-section");
    CrossSection cs;
    cs.kind = Kind::Interval;
    cs.lengths = {length, 0.0};
    return cs;
}

CrossSection CrossSection::rectangle(double l1, double l2) {
    check_length(l1, "rectangle cross-section");
    check_length(l2, "rectangle cross-section");
    CrossSection cs;
    cs.kind = Kind::Rectangle;
    cs.lengths = {l1, l2};
    return cs;
}

CrossSection CrossSection::custom(std::vector<double> nodes, std::vector<double> weights,
                                  std::vector<double> eigenvalues,
                                  std::vector<std::vector<double>> samples) {
    const size_t m = nodes.size();
    if (m == 0 || weights.size() != m) throw ModelError("custom cross-section: nodes and weights differ in length");
    for (double w : weights)
        if (!(w > 0.0)) throw ModelError("custom cross-section: weights must be positive");
    if (eigenvalues.empty() || samples.size() != eigenvalues.size())
        throw ModelError("custom cross-section: one sample row per eigenvalue required");
    for (size_t n = 1; n < eigenvalues.size(); ++n)
        if (eigenvalues[n] < eigenvalues[n - 1])
            throw ModelError("custom cross-section: eigenvalues must be nondecreasing");
    for (const auto& row : samples)
        if (row.size() != m) throw ModelError("custom cross-section: sample row length differs from node count");
    for (size_t a = 0; a < samples.size(); ++a)
        for (size_t b = 0; b <= a; ++b) {
            double ip = 0.0;
            for (size_t i = 0; i < m; ++i) ip += weights[i] * samples[a][i] * samples[b][i];
            if (std::abs(ip - (a == b ? 1.0 : 0.0)) > 1e-8)
                throw ModelError("custom cross-section: modes " + std::to_string(a) + " and " +
                                 std::to_string(b) + " are not orthonormal");
        }
    CrossSection cs;
    cs.kind = Kind::Custom;
    cs.nodes = std::move(nodes);
    cs.weights = std::move(weights);
    cs.eigenvalues = std::move(eigenvalues);
    cs.samples = std::move(samples);
    cs.lengths = {cs.nodes.back(), 0.0};
    return cs;
}

std::vector<TransverseMode> transverse_modes(const CrossSection& cs, int n_max) {
    if (n_max < 1) throw ModelError("transverse_modes: n_max must be >= 1");
    std::vector<TransverseMode> out;
    switch (cs.kind) {
    case CrossSection::Kind::Interval: {
        const double l = cs.lengths[0];
        for (int n = 1; n <= n_max; ++n) {
            TransverseMode m;
            m.index = n - 1;
            m.eigenvalue = std::pow(n * kPi / l, 2);
            m.quantum = {n, 0};
            out.push_back(m);
        }
        break;
    }
    case CrossSection::Kind::Rectangle: {
        const double a = kPi / cs.lengths[0], b = kPi / cs.lengths[1];
        double cap = 4.0 * (a * a + b * b);
        std::vector<TransverseMode> all;
        for (;;) {
            all.clear();
            const int imax = int(std::sqrt(cap) / a) + 1, jmax = int(std::sqrt(cap) / b) + 1;
            for (int i = 1; i <= imax; ++i)
                for (int j = 1; j <= jmax; ++j) {
                    const double lam = (i * a) * (i * a) + (j * b) * (j * b);
                    if (lam <= cap) {
                        TransverseMode m;
                        m.eigenvalue = lam;
                        m.quantum = {i, j};
                        all.push_back(m);
                    }
                }
            if (int(all.size()) >= n_max) break;
            cap *= 2.0;
        }
        std::sort(all.begin(), all.end(), [](const TransverseMode& p, const TransverseMode& q) {
            const double tol = 1e-12 * std::max(p.eigenvalue, q.eigenvalue);
            if (std::abs(p.eigenvalue - q.eigenvalue) > tol) return p.eigenvalue < q.eigenvalue;
            return p.quantum < q.quantum;
        });
        all.resize(size_t(n_max));
        for (int k = 0; k < n_max; ++k) all[size_t(k)].index = k;
        out = std::move(all);
        break;
    }
    case CrossSection::Kind::Custom: {
        if (size_t(n_max) > cs.eigenvalues.size())
            throw TruncationError("transverse_modes: custom cross-section supplies only " +
                                  std::to_string(cs.eigenvalues.size()) + " modes");
        for (int n = 0; n < n_max; ++n) {
            TransverseMode m;
            m.index = n;
            m.eigenvalue = cs.eigenvalues[size_t(n)];
            m.quantum = {n + 1, 0};
            out.push_back(m);
        }
        break;
    }
    }
    return out;
}

double mode_value(const CrossSection& cs, const TransverseMode& mode, const TransversePoint& p) {
    switch (cs.kind) {
    case CrossSection::Kind::Interval: {
        const double l = cs.lengths[0];
        return std::sqrt(2.0 / l) * std::sin(mode.quantum[0] * kPi * p[0] / l);
    }
    case CrossSection::Kind::Rectangle: {
        const double l1 = cs.lengths[0], l2 = cs.lengths[1];
        return std::sqrt(2.0 / l1) * std::sin(mode.quantum[0] * kPi * p[0] / l1) *
               std::sqrt(2.0 / l2) * std::sin(mode.quantum[1] * kPi * p[1] / l2);
    }
    case CrossSection::Kind::Custom:
        break;
    }
    throw ModelError("mode_value: custom modes exist only at their sample nodes");
}

double default_degeneracy_tol(double lambda) { return 1e-9 * std::max(1.0, std::abs(lambda)); }

std::vector<ThresholdGroup> threshold_groups(const std::vector<TransverseMode>& modes, double tol) {
    std::vector<ThresholdGroup> out;
    for (const auto& m : modes) {
        if (!out.empty()) {
            ThresholdGroup& g = out.back();
            const double t = tol < 0.0 ? default_degeneracy_tol(g.value) : tol;
            if (m.eigenvalue - g.value <= t) {
                g.members.push_back(m.index);
                continue;
            }
        }
        out.push_back(ThresholdGroup{m.eigenvalue, {m.index}});
    }
    return out;
}

void gauss_legendre(int n, double a, double b, std::vector<double>& x, std::vector<double>& w) {
    if (n < 1) throw DomainError("gauss_legendre: need at least one node");
    x.assign(size_t(n), 0.0);
    w.assign(size_t(n), 0.0);
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double t = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = t;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (t * p1 - p0) / (t * t - 1.0);
            const double dt = p1 / dp;
            t -= dt;
            if (std::abs(dt) < 1e-16) break;
        }
        // recompute derivative at the converged root
        double p0 = 1.0, p1 = t;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (t * p1 - p0) / (t * t - 1.0);
        const double wt = 2.0 / ((1.0 - t * t) * dp * dp);
        x[size_t(i)] = mid - half * t;
        x[size_t(n - 1 - i)] = mid + half * t;
        w[size_t(i)] = w[size_t(n - 1 - i)] = half * wt;
    }
}

void composite_rule(int n, double a, double b, const std::vector<double>& breakpoints,
                    std::vector<double>& x, std::vector<double>& w) {
    if (n < 1 || !(b > a)) throw DomainError("composite_rule: need n >= 1 and a < b");
    std::vector<double> cuts{a};
    for (double c : breakpoints)
        if (c > a && c < b) cuts.push_back(c);
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    const int segs = int(cuts.size()) - 1;
    if (n < segs) throw DomainError("composite_rule: fewer nodes than breakpoint segments");
    const int panels = std::max(segs, (n + 9) / 10);
    // panels per segment proportional to length, at least one each
    std::vector<int> per(size_t(segs), 1);
    for (int extra = panels - segs; extra > 0; --extra) {
        int best = 0;
        double best_len = -1.0;
        for (int s = 0; s < segs; ++s) {
            const double len = (cuts[size_t(s) + 1] - cuts[size_t(s)]) / per[size_t(s)];
            if (len > best_len) best_len = len, best = s;
        }
        ++per[size_t(best)];
    }
    x.clear();
    w.clear();
    int panel = 0;
    std::vector<double> px, pw;
    for (int s = 0; s < segs; ++s) {
        const double lo = cuts[size_t(s)], hi = cuts[size_t(s) + 1];
        for (int p = 0; p < per[size_t(s)]; ++p, ++panel) {
            const int m = n / panels + (panel < n % panels ? 1 : 0);
            const double pa = lo + (hi - lo) * p / per[size_t(s)];
            const double pb = lo + (hi - lo) * (p + 1) / per[size_t(s)];
            gauss_legendre(m, pa, pb, px, pw);
            x.insert(x.end(), px.begin(), px.end());
            w.insert(w.end(), pw.begin(), pw.end());
        }
    }
}

double Potential::operator()(const TransversePoint& w, double x) const {
    switch (kind) {
    case Kind::Zero:
        return 0.0;
    case Kind::SquareWell: {
        if (x < x_lo || x > x_hi) return 0.0;
        for (int a = 0; a < 2; ++a)
            if (omega_hi[size_t(a)] > omega_lo[size_t(a)] &&
                (w[size_t(a)] < omega_lo[size_t(a)] || w[size_t(a)] > omega_hi[size_t(a)]))
                return 0.0;
        return -depth;
    }
    case Kind::Table: {
        if (x < x_edges.front() || x > x_edges.back() || w[0] < omega_edges.front() ||
            w[0] > omega_edges.back())
            return 0.0;
        auto cell = [](const std::vector<double>& e, double t) {
            const auto it = std::upper_bound(e.begin(), e.end(), t);
            return std::min<size_t>(size_t(std::max<long>(0, long(it - e.begin()) - 1)), e.size() - 2);
        };
        return values[cell(omega_edges, w[0])][cell(x_edges, x)];
    }
    case Kind::Function:
        return function(w, x);
    }
    return 0.0;
}

Potential Potential::zero(const CrossSection& cs, double x_lo, double x_hi) {
    Potential p;
    p.kind = Kind::Zero;
    p.x_lo = x_lo;
    p.x_hi = x_hi;
    if (cs.kind == CrossSection::Kind::Custom) {
        p.omega_lo = {cs.nodes.front(), 0.0};
        p.omega_hi = {cs.nodes.back(), 0.0};
    } else {
        p.omega_hi = cs.lengths;
    }
    return p;
}

Potential Potential::square_well(double depth, std::array<double, 2> omega_lo,
                                 std::array<double, 2> omega_hi, double x_lo, double x_hi) {
    if (!std::isfinite(depth)) throw ModelError("square well: depth must be finite");
    if (!(x_hi > x_lo)) throw ModelError("square well: empty longitudinal box");
    Potential p;
    p.kind = Kind::SquareWell;
    p.depth = depth;
    p.omega_lo = omega_lo;
    p.omega_hi = omega_hi;
    p.x_lo = x_lo;
    p.x_hi = x_hi;
    return p;
}

Potential Potential::table(std::vector<double> omega_edges, std::vector<double> x_edges,
                           std::vector<std::vector<double>> values) {
    auto increasing = [](const std::vector<double>& e) {
        if (e.size() < 2) return false;
        for (size_t i = 1; i < e.size(); ++i)
            if (!(e[i] > e[i - 1])) return false;
        return true;
    };
    if (!increasing(omega_edges) || !increasing(x_edges))
        throw ModelError("table potential: edges must be strictly increasing with >= 2 entries");
    if (values.size() != omega_edges.size() - 1) throw ModelError("table potential: wrong number of rows");
    for (const auto& row : values) {
        if (row.size() != x_edges.size() - 1) throw ModelError("table potential: wrong row length");
        for (double v : row)
            if (!std::isfinite(v)) throw ModelError("table potential: unbounded value");
    }
    Potential p;
    p.kind = Kind::Table;
    p.omega_lo = {omega_edges.front(), 0.0};
    p.omega_hi = {omega_edges.back(), 0.0};
    p.x_lo = x_edges.front();
    p.x_hi = x_edges.back();
    p.x_breakpoints.assign(x_edges.begin() + 1, x_edges.end() - 1);
    p.omega_breakpoints.assign(omega_edges.begin() + 1, omega_edges.end() - 1);
    p.omega_edges = std::move(omega_edges);
    p.x_edges = std::move(x_edges);
    p.values = std::move(values);
    return p;
}

PotentialModel factorize_potential(const RealVector& values) {
    PotentialModel m;
    m.V = values;
    m.v.resize(values.size());
    m.u.resize(values.size());
    for (Index i = 0; i < values.size(); ++i) {
        const double x = values(i);
        if (!std::isfinite(x) || std::abs(x) > 1e150) throw ModelError("factorize_potential: unbounded value");
        m.v(i) = std::sqrt(std::abs(x));
        m.u(i) = x >= 0.0 ? 1.0 : -1.0;
    }
    return m;
}

RealVector Grid::sqrt_weights() const {
    RealVector s(size());
    for (Index i = 0; i < n_t(); ++i)
        for (Index k = 0; k < n_x(); ++k)
            s(index(i, k)) = std::sqrt(omega_weights(i) * x_weights(k));
    return s;
}

Grid build_grid(const CrossSection& cs, const Potential& pot, int n_omega, int n_x,
                TransverseRule rule) {
    if (n_omega < 2 || n_x < 2) throw DomainError("build_grid: counts must be >= 2");
    Grid g;
    std::vector<double> x, w;
    composite_rule(n_x, pot.x_lo, pot.x_hi, pot.x_breakpoints, x, w);
    g.x = Eigen::Map<RealVector>(x.data(), Index(x.size()));
    g.x_weights = Eigen::Map<RealVector>(w.data(), Index(w.size()));

    if (cs.kind == CrossSection::Kind::Custom) {
        for (double t : cs.nodes) g.omega.push_back({t, 0.0});
        g.omega_weights = Eigen::Map<const RealVector>(cs.weights.data(), Index(cs.weights.size()));
        return g;
    }
    const int axes = cs.dimension();
    std::array<std::vector<double>, 2> ax, aw;
    for (int a = 0; a < axes; ++a) {
        const double l = cs.lengths[size_t(a)];
        double lo = pot.omega_lo[size_t(a)], hi = pot.omega_hi[size_t(a)];
        if (!(hi > lo)) lo = 0.0, hi = l;
        if (lo < 0.0 || hi > l * (1.0 + 1e-14))
            throw ModelError("build_grid: potential support leaves the cross-section");
        const bool full = lo <= 0.0 && hi >= l * (1.0 - 1e-14) &&
                          (a > 0 || pot.omega_breakpoints.empty());
        const bool uniform = rule == TransverseRule::Uniform ||
                             (rule == TransverseRule::Auto && full);
        if (uniform) {
            if (!full) throw ModelError("build_grid: uniform transverse rule needs full support");
            ax[size_t(a)].clear();
            aw[size_t(a)].clear();
            for (int i = 1; i <= n_omega; ++i) {
                ax[size_t(a)].push_back(i * l / (n_omega + 1));
                aw[size_t(a)].push_back(l / (n_omega + 1));
            }
        } else {
            composite_rule(n_omega, lo, hi, a == 0 ? pot.omega_breakpoints : std::vector<double>{},
                           ax[size_t(a)], aw[size_t(a)]);
        }
    }
    std::vector<double> ww;
    if (axes == 1) {
        for (size_t i = 0; i < ax[0].size(); ++i) {
            g.omega.push_back({ax[0][i], 0.0});
            ww.push_back(aw[0][i]);
        }
    } else {
        for (size_t i = 0; i < ax[0].size(); ++i)
            for (size_t j = 0; j < ax[1].size(); ++j) {
                g.omega.push_back({ax[0][i], ax[1][j]});
                ww.push_back(aw[0][i] * aw[1][j]);
            }
    }
    g.omega_weights = Eigen::Map<RealVector>(ww.data(), Index(ww.size()));
    return g;
}

std::vector<TransverseMode> WaveguideModel::modes(int count) const {
    return transverse_modes(cross_section, count);
}

RealMatrix WaveguideModel::mode_samples(const std::vector<TransverseMode>& ms) const {
    RealMatrix f(Index(ms.size()), grid.n_t());
    for (size_t n = 0; n < ms.size(); ++n)
        for (Index i = 0; i < grid.n_t(); ++i)
            f(Index(n), i) = cross_section.kind == CrossSection::Kind::Custom
                                 ? cross_section.samples[size_t(ms[n].index)][size_t(i)]
                                 : mode_value(cross_section, ms[n], grid.omega[size_t(i)]);
    return f;
}

double WaveguideModel::tail_bound(int n_modes, double re_z) const {
    if (v_sup == 0.0) return 0.0;
    double next;
    if (cross_section.kind == CrossSection::Kind::Custom) {
        const size_t have = cross_section.eigenvalues.size();
        if (size_t(n_modes) < have) next = cross_section.eigenvalues[size_t(n_modes)];
        else next = cross_section.eigenvalues.back();
    } else {
        next = transverse_modes(cross_section, n_modes + 1).back().eigenvalue;
    }
    if (!(next > re_z)) return std::numeric_limits<double>::infinity();
    return v_sup * v_sup / (next - re_z);
}

int WaveguideModel::modes_for_tail(double re_z, double tol) const {
    if (!(tol > 0.0)) throw DomainError("modes_for_tail: tolerance must be positive");
    const double need = v_sup * v_sup / tol + re_z; // lambda_{N+1} >= need
    if (cross_section.kind == CrossSection::Kind::Custom) {
        const auto& ev = cross_section.eigenvalues;
        for (size_t n = 0; n + 1 < ev.size(); ++n)
            if (ev[n + 1] >= need && ev[n + 1] > re_z) return int(n + 1);
        throw TruncationError("modes_for_tail: custom cross-section has too few modes for tail " +
                              std::to_string(tol));
    }
    int lo = 1, hi = 1;
    while (transverse_modes(cross_section, hi + 1).back().eigenvalue < need) {
        lo = hi;
        hi *= 2;
        if (hi > n_max_cap)
            throw TruncationError("modes_for_tail: tail " + std::to_string(tol) +
                                  " needs more than " + std::to_string(n_max_cap) + " modes");
    }
    while (lo < hi) {
        const int mid = (lo + hi) / 2;
        if (transverse_modes(cross_section, mid + 1).back().eigenvalue >= need) hi = mid;
        else lo = mid + 1;
    }
    return lo;
}

std::vector<ThresholdGroup> WaveguideModel::thresholds(int count) const {
    return threshold_groups(modes(count), degeneracy_tol);
}

WaveguideModel make_model(const CrossSection& cs, const Potential& pot, int n_omega, int n_x,
                          TransverseRule rule) {
    WaveguideModel m;
    m.cross_section = cs;
    m.potential = pot;
    m.grid = build_grid(cs, pot, n_omega, n_x, rule);
    RealVector vals(m.grid.size());
    for (Index i = 0; i < m.grid.n_t(); ++i)
        for (Index k = 0; k < m.grid.n_x(); ++k)
            vals(m.grid.index(i, k)) = pot(m.grid.omega[size_t(i)], m.grid.x(k));
    m.factors = factorize_potential(vals);
    m.b = m.grid.sqrt_weights().cwiseProduct(m.factors.v);
    m.v_sup = m.factors.v.size() ? m.factors.v.maxCoeff() : 0.0;
    return m;
}

} // namespace wgt
