#pragma once

// Trace rows F0(E; n, sigma) v on the waveguide grid, channel scattering
// matrices, expansions of the trace rows near a fixed energy and near a
// threshold, and continuity probes of S-matrix entries as kappa -> 0.

#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "wgt/birman_schwinger.hpp"
#include "wgt/threshold.hpp"

namespace wgt {

struct Channel {
    int mode = 0;  // position in the sorted mode list
    int sigma = 1; // +1 or -1
    bool operator==(const Channel&) const = default;
};

/// 2^{-1/2} s^{-1/2} (2 pi)^{-1/2} f_n(omega_i) e^{-i sigma s x_k} b_ik with
/// s = (E - lambda_n)^{1/2} (principal branch), b = v sqrt(w).
struct TraceRow {
    ComplexVector row;
    Complex energy = 0.0;
    Channel channel;
    Complex prefactor = 0.0; // 2^{-1/2} s^{-1/2} (2 pi)^{-1/2}
};

/// ChannelClosedError when E - lambda_n lies on (-inf, 0].
TraceRow trace_row(Complex energy, const TransverseMode& mode, int sigma,
                   const WaveguideModel& model);

/// Open channels at a real energy in mode order, sigma = -1 before +1.
std::vector<Channel> open_channels(double lambda, const std::vector<TransverseMode>& modes);

/// Rows of F0 v stacked in the order of `channels`.
ComplexMatrix trace_block(Complex energy, const std::vector<Channel>& channels,
                          const std::vector<TransverseMode>& modes, const WaveguideModel& model);

/// gamma_j(n) v as a row: f_n(omega_i) x_k^j b_ik / (2 j! sqrt(pi)).
ComplexVector gamma_row(int j, const TransverseMode& mode, const WaveguideModel& model);

struct SMatrix {
    double lambda = 0.0;
    std::vector<Channel> channels;
    ComplexMatrix s;
    double unitarity_defect = 0.0; // |S* S - I|
    int n_max = 0;
    double tail_bound = 0.0;

    Complex entry(const Channel& a, const Channel& b) const;
};

/// S = 1 - 2 pi i R (u + v R0(lambda + i0) v)^{-1} R^*, R = trace_block.
/// PreconditionError on a threshold; SingularityError when the boundary value
/// is not invertible (relative smallest singular value below 1e-12).
SMatrix channel_smatrix(double lambda, const WaveguideModel& model, double tail_tol,
                        int n_max_override = 0);

struct UnitarityCheck {
    double lambda = 0.0;
    double defect_coarse = 0.0;
    double defect_fine = 0.0;
    double budget = 0.0; // 10 |S_coarse - S_fine|
};

/// Same energy on two grids (the fine one normally with n_x doubled).
UnitarityCheck unitarity_check(double lambda, const WaveguideModel& coarse,
                               const WaveguideModel& fine, double tail_tol);

struct RemainderFit {
    std::vector<double> t;
    std::vector<double> remainder; // Euclidean norm of the row difference
    double exponent = 0.0;
    double required = 0.0;
    bool pass = false;
    nlohmann::json to_json() const;
};

/// Remainder of F0(lambda - k^2) = F0(lambda)(1 + k^2/(4a) + i sigma k^2/(2 sqrt a) Q),
/// a = lambda - lambda_n, at kappa = t e^{i theta}. Required exponent 3.9.
RemainderFit f0_expansion_regular(double lambda, const TransverseMode& mode, int sigma,
                                  const WaveguideModel& model, const std::vector<double>& t,
                                  double theta = -0.25 * 3.14159265358979323846);

/// Remainder of F0(lambda_n + t^2) = t^{-1/2} gamma_0 - i sigma t^{1/2} gamma_1
/// (kappa = -i t). Required exponent 1.5.
RemainderFit f0_expansion_threshold(const TransverseMode& mode, int sigma,
                                    const WaveguideModel& model, const std::vector<double>& t);

/// |F0(lambda - t^2; n, sigma) v S| over t (left ray, lambda - t^2 > lambda_n).
/// `required` is attached to the fit; a zero S gives exponent +inf.
GrowthLine f0_projection_growth(const std::string& name, double lambda, const Projection& s,
                                const TransverseMode& mode, int sigma,
                                const WaveguideModel& model, const std::vector<double>& t,
                                double required = 1.9);

enum class PairKind { OpenOpen, OpenOpening, OpeningOpening };

struct ContinuityReport {
    double lambda = 0.0;
    Channel a, b;
    PairKind kind = PairKind::OpenOpen;
    std::vector<double> h;
    std::vector<Complex> left;  // kappa = h; empty unless both channels are open below lambda
    std::vector<Complex> right; // kappa = -i h
    std::vector<double> left_cauchy, right_cauchy; // |entry(h_i) - entry(h_{i-1})|
    std::vector<double> gap;                       // |left - right| per h
    nlohmann::json to_json() const;
};

/// delta_ab - 2 pi i F0(lambda - k^2; a) v M(lambda, k) v F0(lambda - k^2; b)^*.
Complex smatrix_entry(const ThresholdLadder& lad, Complex kappa, const Channel& a,
                      const Channel& b);
Complex smatrix_entry(const EigenvalueLadder& lad, Complex kappa, const Channel& a,
                      const Channel& b);

/// Every channel open at lambda - k^2 (the threshold group included except on
/// the real kappa ray); unitarity_defect is NaN at complex energies.
struct ChannelBlock {
    Complex kappa = 0.0;
    Complex energy = 0.0;
    std::vector<Channel> channels;
    ComplexMatrix s;
    double unitarity_defect = 0.0;

    Complex entry(const Channel& a, const Channel& b) const;
};

/// verify enables the expansion's internal oracle cross-check.
ChannelBlock smatrix_block(const ThresholdLadder& lad, Complex kappa, bool verify = false);
ChannelBlock smatrix_block(const EigenvalueLadder& lad, Complex kappa, bool verify = false);

PairKind pair_kind(const ThresholdLadder& lad, const Channel& a, const Channel& b);

/// Blocks on both rays for each h; one M(lambda, kappa) evaluation per ray and h.
struct ContinuityScan {
    double lambda = 0.0;
    std::vector<double> h;
    std::vector<ChannelBlock> left; // empty unless some pair is open/open
    std::vector<ChannelBlock> right;
    std::vector<ContinuityReport> pairs;
    nlohmann::json to_json() const;
};

ContinuityScan threshold_continuity_scan(const ThresholdLadder& lad,
                                         const std::vector<std::pair<Channel, Channel>>& pairs,
                                         const std::vector<double>& h, int threads = 1,
                                         bool verify = false);

/// Entries along both rays for the halving sequence h (threshold lambda = lad.lambda).
ContinuityReport threshold_continuity_probe(const ThresholdLadder& lad, const Channel& a,
                                            const Channel& b, const std::vector<double>& h,
                                            int threads = 1);

struct EigenContinuityReport {
    ContinuityReport entries;
    GrowthLine f0_vs; // |F0(lambda - k^2; a) v S| along the left ray
    nlohmann::json to_json() const;
};

EigenContinuityReport eigenvalue_continuity_probe(const EigenvalueLadder& lad, const Channel& a,
                                                  const Channel& b, const std::vector<double>& h,
                                                  int threads = 1);

const char* to_string(PairKind k);

} // namespace wgt
