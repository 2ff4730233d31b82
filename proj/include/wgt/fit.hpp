#pragma once

#include <functional>
#include <vector>

#include "wgt/linalg.hpp"

namespace wgt {

/// Geometric grid from hi down to lo with the given number of points per
/// decade (both end points included).
std::vector<double> geometric_grid(double lo, double hi, int per_decade = 8);

/// Halving sequence h0, h0/2, ..., h0/2^(count-1).
std::vector<double> halving_sequence(double h0, int count);

/// Least-squares slope p of log y = c + p log t. Samples with y == 0 are
/// treated as exact zeros; if every sample is zero the exponent is +inf.
/// Throws DomainError when fewer than two usable samples remain.
double fit_growth_exponent(const std::vector<double>& t, const std::vector<double>& y);

/// Polynomial (Neville) extrapolation to h = 0 from samples at
/// h0, h0/2, ..., h0/2^(levels-1). The error estimate is the difference between
/// the last two diagonal entries.
struct Extrapolation {
    ComplexMatrix value;
    double error_estimate = 0.0;
};

Extrapolation richardson_limit(const std::function<ComplexMatrix(double)>& f, double h0,
                               int levels = 5);

} // namespace wgt
