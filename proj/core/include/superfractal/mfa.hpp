#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "superfractal/model.hpp"
#include "superfractal/simulation.hpp"

namespace superfractal {

// Dyadic window half-widths h = 2^-j, j = j_max down to j_min.
struct ScaleRange {
  int j_min = 0;
  int j_max = 0;
};

struct HolderEstimate {
  double eta_hat = 0.0;
  double fit_quality = 0.0;  // R^2 of log osc against log h
  int detrend_degree = 0;
  bool smooth = false;       // no singularity seen up to the cap
  int scales_used = 0;
  std::vector<std::string> warnings;
};

// Estimates beyond this are reported as smooth.
inline constexpr double kHolderCap = 2.0;

// osc(h) = max_{|y - x| <= h} |f(y) - P_x(y)| with P_x = f(x) (degree 0) or
// f(x) + c (y - x), c the least-squares slope on the window (degree 1); the
// exponent is the least-squares slope of log osc against log h. Windows that
// leave the grid or are narrower than one cell are dropped.
HolderEstimate pointwise_holder(const std::vector<double>& field, const Grid1D& grid,
                                std::size_t x_index, const ScaleRange& scales, int detrend_degree);

struct HolderConfig {
  ScaleRange scales;        // j_max = 0: from 2 dx up over 7 octaves
  double x_lo = 0.0;        // analysed range
  double x_hi = 1.0;
  double near_one = 0.05;   // |eta - 1| below this triggers the degree-1 refit
};

// Default ladder for a grid: h from 2 dx up over 7 octaves.
ScaleRange default_scale_range(const Grid1D& grid);

struct HolderField {
  Grid1D grid;
  std::vector<double> eta_hat;  // NaN outside the analysed range
  std::vector<int> detrend_degree;
  std::vector<double> fit_quality;
  std::vector<bool> smooth;
  // The degree-0 estimate fell within near_one of the critical exponent 1,
  // or the two degrees gave estimates on opposite sides of 1; the reported
  // degree then follows the fit, not the estimate.
  std::vector<bool> near_one;
  std::vector<std::string> warnings;

  bool evaluated(std::size_t i) const { return eta_hat[i] == eta_hat[i]; }
};

// Degree-0 fit everywhere; estimates within near_one of 1 are refitted with
// degree 1 keeping the better R^2, and estimates above 1 + near_one use the
// degree-1 fit.
HolderField holder_field(const std::vector<double>& field, const Grid1D& grid,
                         const HolderConfig& config = {});

using EtaBin = std::pair<double, double>;

// Consecutive bins of the given width covering [lo, hi).
std::vector<EtaBin> make_bins(double lo, double hi, double width);

struct LevelSets {
  std::vector<EtaBin> bins;
  std::vector<std::vector<std::size_t>> members;  // grid indices per bin
  std::vector<bool> empty;
};

// Assigns every evaluated point that is neither smooth nor flagged near 1
// (optionally restricted to mask) to the bin holding its estimate.
LevelSets level_sets(const HolderField& hf, const std::vector<EtaBin>& bins,
                     const std::vector<bool>* mask = nullptr);

struct BoxDimension {
  double dimension = std::numeric_limits<double>::quiet_NaN();
  bool defined = false;  // at least 10 points and 4 scales
  double r_squared = 0.0;
  std::vector<double> scales;
  std::vector<double> counts;  // mean over shifted box origins
};

// Dyadic scales 2^-j for j in [j_min, j_max].
std::vector<double> dyadic_scales(int j_min, int j_max);

// Box scales matched to a Hoelder ladder: 2^-2 down to twice the smallest
// window, below which neighbouring estimates share the same singularity.
std::vector<double> spectrum_box_scales(const ScaleRange& holder_scales);

// Least-squares slope of log N(eps) against log(1/eps), N the number of
// occupied boxes of width eps averaged over 8 evenly shifted box origins
// (anchored at x_min). The dimension is reported for any nonempty set;
// defined is false below 10 points or 4 scales.
BoxDimension box_dimension(const std::vector<std::size_t>& points, const Grid1D& grid,
                           const std::vector<double>& scales);

// x^{(beta + 1)(eta - eta_c)} log^2(1/x).
double gauge_function(const SpectrumTheory& st, double eta, double x);

// Covers by the unshifted boxes [x_min + k eps, x_min + (k + 1) eps).
struct GaugeCoveringReport {
  double eta = 0.0;
  std::vector<double> cover_scale_ladder;
  std::vector<double> gauge_sums;
  std::vector<std::int64_t> box_counts;
};

GaugeCoveringReport gauge_covering_sum(const std::vector<std::size_t>& points, const Grid1D& grid,
                                       double eta, const SpectrumTheory& st,
                                       const std::vector<double>& scales);

inline constexpr double kNoJumpExponent = std::numeric_limits<double>::infinity();

struct JumpExponentOptions {
  double time_cutoff = 1e-3;           // only jumps with t - s below this
  double distance_cutoff = 1.0 / 256;  // and |x - y| below this (at most 1)
};

// eta_c + min over qualifying jumps of
// [log r - (1/(1+beta) - gamma) log(t - s)] / log |x - y|; kNoJumpExponent
// where no jump qualifies.
std::vector<double> jump_exponent_field(const JumpRecord& jumps, const Grid1D& grid,
                                        const SpectrumTheory& st, double gamma, double t,
                                        const JumpExponentOptions& opts = {});

struct CensusBox {
  int j = 0;
  int n = 0;
  std::int64_t count = 0;
  double lambda = 0.0;
  bool exceeds = false;  // count > 2 lambda
  double stated_bound = 0.0;    // e^{-lambda}
  double chernoff_bound = 0.0;  // e^{-(2 ln 2 - 1) lambda}
};

struct CensusOctave {
  int j = 0;
  int n0 = 0;
  int n1 = 0;
  double Lambda = 0.0;  // sum of lambda_{n,j} over n0..n1
  std::int64_t count = 0;
  bool exceeds = false;
};

struct CoveringBall {
  double center = 0.0;
  double radius = 0.0;
  int j = 0;
  int n = 0;
};

struct JumpCensus {
  double gamma = 0.0;
  double eta = 0.0;
  double mass_bound = 0.0;
  std::vector<CensusBox> boxes;
  std::vector<CensusOctave> octaves;
  std::vector<CoveringBall> balls;
  std::vector<std::string> warnings;
};

// N rho (2^{1+beta} - 1) / (2 (1+beta)) 2^{n(1+beta) - j}.
double census_intensity(const ModelParams& p, double mass_bound, int n, int j);
// (2^-n / (2^{-j-1})^{1/(1+beta) - gamma})^{1/(eta - eta_c)}.
double census_ball_radius(const SpectrumTheory& st, double gamma, double eta, int n, int j);
// floor(j (1/(1+beta) -+ gamma/4)).
int census_n0(const SpectrumTheory& st, double gamma, int j);
int census_n1(const SpectrumTheory& st, double gamma, int j);

// sup over stored times of X_s((lo, hi)).
double sup_mass_on(const MeasurePath& path, double lo, double hi);

struct JumpCensusOptions {
  double y_lo = 0.0;  // jumps located in [y_lo, y_hi)
  double y_hi = 1.0;
  int j_max = 0;      // 0: log2 of the time resolution
};

// Bins the jumps located in [y_lo, y_hi) into D_{j,n} = [t - 2^-j, t - 2^{-j-1})
// x [2^{-n-1}, 2^-n). Only boxes lying fully above the recording threshold
// r_min and inside [0, t] are reported.
JumpCensus jump_census(const JumpRecord& jumps, const ModelParams& params,
                       const SpectrumTheory& st, double gamma, double eta, double mass_bound,
                       const JumpCensusOptions& opts = {});

struct SumRuleReport {
  double theta = 0.0;
  double threshold = 0.0;  // (1 + beta)(eta - eta_c)
  std::vector<double> partial_sums;  // truncation levels K, 2K, 4K, ...
  bool converges = false;
};

// Truncated series sum_j (2 Lambda_j r_j^theta + sum_{n >= n1(j)} 2 lambda_{j,n}
// radius^theta) with j <= K and n < n1(j) + K, r_j = 2^{-3 gamma j / (4 (eta - eta_c))},
// for K = base_truncation doubled up to `doublings` times. Converges iff the
// last doubling adds less than 1e-6 of the sum.
SumRuleReport census_sum_rule(const ModelParams& p, const SpectrumTheory& st, double gamma,
                              double eta, double theta, double mass_bound = 1.0,
                              int base_truncation = 64, int doublings = 14);

struct CensusParams {
  double m = 2.0;
  double eta = 0.5;
  double theta = 0.0;   // 0: 0.1 of the mean terminal density on (0, 1)
  double gamma = 0.0;   // 0: min(1e-2 eta_c / alpha, 1e-3) / 2
  double rho = 0.0;     // 0: gamma / 200
  double nu = 0.0;      // 0: midpoint of the admissible interval
  double c = 0.0;       // 0: twice the lower end of the admissible interval
  int Q = 2;
  int R = 1;
  int n_min = 1;
  int n_max = 14;
};

// Fills defaults and returns the violated constraints (m > 3/alpha, rho <
// 1e-2 gamma, nu in ((alpha gamma + 5 rho)/eta_c, 0.1), c in (10/(2 - eta),
// 1/(10 rho)), eta in (eta_c, eta_bar_c), Q > 1, R > 0).
std::vector<std::string> resolve_census_params(CensusParams& cp, const SpectrumTheory& st,
                                               const std::vector<double>& terminal,
                                               const Grid1D& grid);

struct EventCensusRow {
  int n = 0;
  bool O = false;
  bool B = false;
  std::int64_t A_cells = 0;  // cells I_k^(n) receiving a jump of A type
  std::int64_t G_cells = 0;
  // Per-cell bound on P(G_k^(n)): mean over cells of the squared integrated
  // intensity of qualifying jumps.
  double G_envelope = 0.0;
  bool A_resolved = true;  // 2^{-(eta+1)n} above the recording threshold
  bool G_resolved = true;
};

struct EventCensus {
  CensusParams params;
  double q = 0.0;  // (alpha + 3) m / ((beta + 1)(eta - eta_c))
  std::vector<EventCensusRow> rows;
  std::vector<std::string> warnings;
};

// Event indicators for n in [n_min, n_max] on the cells I_k^(n) = [k 2^-n,
// (k+1) 2^-n) of (0, 1). Sup/inf over time windows use the stored fields;
// A_k^(n) is tallied by the cell where the jump lands (the index shift
// 2 n^q + 2 exceeds 2^n at every feasible n). n is capped where a cell
// holds fewer than two grid points.
EventCensus event_census(const MeasurePath& path, const JumpRecord& jumps,
                         const ModelParams& params, const SpectrumTheory& st, CensusParams cp);

struct SpectrumEstimate {
  std::vector<EtaBin> eta_bins;
  std::vector<double> d_hat;     // NaN where undefined
  std::vector<double> d_theory;  // NaN outside [eta_c, eta_bar_c)
  std::vector<std::int64_t> counts;
};

// Box dimension of each bin's point set.
SpectrumEstimate empirical_spectrum(const LevelSets& ls, const Grid1D& grid,
                                    const SpectrumTheory& st, const std::vector<double>& scales);

// Averages the defined dimensions per bin; counts are summed.
SpectrumEstimate pool_spectra(const std::vector<SpectrumEstimate>& runs);

}  // namespace superfractal
