#include "wgt/fit.hpp"

#include <cmath>
#include <limits>

namespace wgt {

std::vector<double> geometric_grid(double lo, double hi, int per_decade) {
    if (!(lo > 0.0) || !(hi >= lo) || per_decade < 1)
        throw DomainError("geometric_grid: need 0 < lo <= hi and per_decade >= 1");
    const double decades = std::log10(hi / lo);
    const int n = std::max(1, int(std::ceil(decades * per_decade - 1e-9)));
    std::vector<double> out;
    out.reserve(size_t(n) + 1);
    for (int k = 0; k <= n; ++k) out.push_back(hi * std::pow(lo / hi, double(k) / double(n)));
    if (lo == hi) out.resize(1);
    return out;
}

std::vector<double> halving_sequence(double h0, int count) {
    std::vector<double> out;
    double h = h0;
    for (int k = 0; k < count; ++k, h *= 0.5) out.push_back(h);
    return out;
}

double fit_growth_exponent(const std::vector<double>& t, const std::vector<double>& y) {
    if (t.size() != y.size()) throw DimensionError("fit_growth_exponent: size mismatch");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    bool all_zero = !y.empty();
    for (size_t i = 0; i < t.size(); ++i) {
        if (y[i] != 0.0) all_zero = false;
        if (!(t[i] > 0.0) || !(y[i] > 0.0) || !std::isfinite(y[i])) continue;
        const double lx = std::log(t[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++m;
    }
    if (all_zero) return std::numeric_limits<double>::infinity();
    if (m < 2) throw DomainError("fit_growth_exponent: fewer than two positive samples");
    const double den = m * sxx - sx * sx;
    if (den <= 0.0) throw DomainError("fit_growth_exponent: degenerate abscissae");
    return (m * sxy - sx * sy) / den;
}

Extrapolation richardson_limit(const std::function<ComplexMatrix(double)>& f, double h0,
                               int levels) {
    if (levels < 2) throw DomainError("richardson_limit: need at least two levels");
    std::vector<double> h(static_cast<size_t>(levels));
    std::vector<ComplexMatrix> p(static_cast<size_t>(levels));
    for (int k = 0; k < levels; ++k) {
        h[size_t(k)] = h0 * std::ldexp(1.0, -k);
        p[size_t(k)] = f(h[size_t(k)]);
    }
    // Neville tableau evaluated at 0
    ComplexMatrix prev_diag = p[0];
    for (int m = 1; m < levels; ++m) {
        for (int k = levels - 1; k >= m; --k) {
            const double hk = h[size_t(k)], hkm = h[size_t(k - m)];
            p[size_t(k)] = (hkm * p[size_t(k)] - hk * p[size_t(k - 1)]) / (hkm - hk);
        }
        if (m == levels - 1) prev_diag = p[size_t(levels - 2)];
    }
    Extrapolation out;
    out.value = p[size_t(levels - 1)];
    out.error_estimate = (out.value - prev_diag).norm();
    return out;
}

} // namespace wgt
