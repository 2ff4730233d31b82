#pragma once

// Straight waveguide Sigma x R: transverse Dirichlet modes, threshold groups,
// the factorization V = v u v and the quadrature grid over supp V.

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "wgt/linalg.hpp"

namespace wgt {

using TransversePoint = std::array<double, 2>;

struct CrossSection {
    enum class Kind { Interval, Rectangle, Custom };
    Kind kind = Kind::Interval;
    std::array<double, 2> lengths{0.0, 0.0};

    // Custom data: 1-D transverse nodes and weights, eigenvalues and mode
    // samples (samples[n][i] = f_n(node_i)).
    std::vector<double> nodes;
    std::vector<double> weights;
    std::vector<double> eigenvalues;
    std::vector<std::vector<double>> samples;

    static CrossSection interval(double length);
    static CrossSection rectangle(double l1, double l2);
    static CrossSection custom(std::vector<double> nodes, std::vector<double> weights,
                               std::vector<double> eigenvalues,
                               std::vector<std::vector<double>> samples);

    int dimension() const { return kind == Kind::Rectangle ? 2 : 1; }
};

struct TransverseMode {
    int index = 0;                   // 0-based position in the sorted list
    double eigenvalue = 0.0;
    std::array<int, 2> quantum{0, 0}; // sine indices (1-based); custom: {index+1, 0}
};

/// First n_max modes, sorted by eigenvalue (ties: lexicographic in the sine
/// indices). Throws ModelError for invalid custom data.
std::vector<TransverseMode> transverse_modes(const CrossSection& cs, int n_max);

/// f_n at a transverse point (analytic kinds only).
double mode_value(const CrossSection& cs, const TransverseMode& mode, const TransversePoint& p);

struct ThresholdGroup {
    double value = 0.0;
    std::vector<int> members;
};

double default_degeneracy_tol(double lambda);

/// Greedy clustering of sorted modes; tol < 0 selects default_degeneracy_tol.
std::vector<ThresholdGroup> threshold_groups(const std::vector<TransverseMode>& modes,
                                             double tol = -1.0);

/// Gauss-Legendre nodes and weights on [a, b].
void gauss_legendre(int n, double a, double b, std::vector<double>& x, std::vector<double>& w);

/// Composite Gauss-Legendre rule with n nodes over [a, b]: panels of at most
/// 10 nodes that never straddle a breakpoint.
void composite_rule(int n, double a, double b, const std::vector<double>& breakpoints,
                    std::vector<double>& x, std::vector<double>& w);

struct Potential {
    enum class Kind { Zero, SquareWell, Table, Function };
    Kind kind = Kind::Zero;
    // Support box: transverse [lo, hi] per axis and longitudinal [lo, hi].
    std::array<double, 2> omega_lo{0.0, 0.0};
    std::array<double, 2> omega_hi{0.0, 0.0};
    double x_lo = 0.0;
    double x_hi = 1.0;
    double depth = 0.0; // square well: V = -depth inside the box
    // Table: piecewise constant cells, values[i_omega][i_x] (interval sections)
    std::vector<double> omega_edges;
    std::vector<double> x_edges;
    std::vector<std::vector<double>> values;
    std::function<double(const TransversePoint&, double)> function;
    std::vector<double> x_breakpoints;
    std::vector<double> omega_breakpoints;

    double operator()(const TransversePoint& w, double x) const;

    static Potential zero(const CrossSection& cs, double x_lo, double x_hi);
    static Potential square_well(double depth, std::array<double, 2> omega_lo,
                                 std::array<double, 2> omega_hi, double x_lo, double x_hi);
    static Potential table(std::vector<double> omega_edges, std::vector<double> x_edges,
                           std::vector<std::vector<double>> values);
};

struct PotentialModel {
    RealVector V;
    RealVector v; // |V|^{1/2}
    RealVector u; // +1 where V >= 0, -1 where V < 0
};

PotentialModel factorize_potential(const RealVector& values);

enum class TransverseRule { Auto, GaussLegendre, Uniform };

/// Composite index I = i * n_x + k for transverse node i and longitudinal
/// node k.
struct Grid {
    std::vector<TransversePoint> omega;
    RealVector omega_weights;
    RealVector x;
    RealVector x_weights;
    Index n_t() const { return Index(omega.size()); }
    Index n_x() const { return x.size(); }
    Index size() const { return n_t() * n_x(); }
    Index index(Index i, Index k) const { return i * n_x() + k; }
    RealVector sqrt_weights() const;
};

/// n_omega counts nodes per transverse axis. Uniform (sine-exact) transverse
/// nodes are used when the support spans the whole cross-section under Auto.
Grid build_grid(const CrossSection& cs, const Potential& pot, int n_omega, int n_x,
                TransverseRule rule = TransverseRule::Auto);

struct WaveguideModel {
    CrossSection cross_section;
    Potential potential;
    Grid grid;
    PotentialModel factors;
    RealVector b;         // sqrt(w) * v on the composite grid
    double v_sup = 0.0;   // max v
    double degeneracy_tol = -1.0;
    double tail_tol = 1e-3;
    int n_max_cap = 4096;

    Index dim() const { return grid.size(); }
    bool trivial() const { return v_sup == 0.0; }

    std::vector<TransverseMode> modes(int count) const;
    /// count x n_t matrix of f_n(omega_i).
    RealMatrix mode_samples(const std::vector<TransverseMode>& modes) const;
    /// Number of modes whose closed-channel tail bound |v|^2/(lambda_{N+1} - re_z)
    /// is <= tol; TruncationError beyond n_max_cap.
    int modes_for_tail(double re_z, double tol) const;
    double tail_bound(int n_modes, double re_z) const;
    std::vector<ThresholdGroup> thresholds(int count) const;
};

WaveguideModel make_model(const CrossSection& cs, const Potential& pot, int n_omega, int n_x,
                          TransverseRule rule = TransverseRule::Auto);

} // namespace wgt
