#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace superfractal {

// Levy density c r^{-1-kappa} dr of the spectrally positive kappa-stable
// process with E exp(-lambda L_t) = exp(t lambda^kappa):
//   int_0^inf (e^{-lambda r} - 1 + lambda r) c r^{-1-kappa} dr = c Gamma(-kappa) lambda^kappa,
// so c = 1 / Gamma(-kappa) = kappa (kappa - 1) / Gamma(2 - kappa) for kappa in (1, 2).
double stable_levy_constant(double kappa);

// Exponent psi with E exp(-lambda L_t) = exp(t psi(lambda)) for the process
// that keeps jumps above r_min and replaces the rest by their compensator.
double truncated_laplace_exponent(double kappa, double lambda, double r_min);

// |exp(t lambda^kappa) - exp(t psi_trunc(lambda))|: the bias of the
// truncated scheme in the Laplace transform.
double truncation_tolerance(double kappa, double t, double lambda, double r_min);

struct StableJump {
  double time = 0.0;
  double size = 0.0;
};

// Spectrally positive kappa-stable path on [0, horizon]: jumps above r_min
// plus the linear drift that compensates them (smaller jumps dropped).
struct StablePathSample {
  double kappa = 1.5;
  double horizon = 1.0;
  double r_min = 1e-3;
  double drift_correction = 0.0;  // per unit time
  std::vector<StableJump> jumps;  // increasing times
  std::vector<double> cumulative;  // cumulative jump sizes
  std::vector<std::string> warnings;

  // Right-continuous L_u, u in [0, horizon].
  double value(double u) const;
  double terminal() const { return value(horizon); }
};

StablePathSample sample_path(double kappa, double horizon, double r_min, std::uint64_t seed);

// Terminal value only, without storing the jump list.
double sample_terminal(double kappa, double horizon, double r_min, std::uint64_t seed);

struct LaplaceCheckRow {
  double lambda = 0.0;
  double empirical = 0.0;
  double standard_error = 0.0;
  double theory = 0.0;            // exp(t lambda^kappa)
  double truncated_theory = 0.0;  // exp(t psi_trunc)
  double tolerance = 0.0;         // truncation bias bound
  bool passed = false;
};

struct LaplaceCheckReport {
  double kappa = 0.0;
  double t = 0.0;
  double r_min = 0.0;
  std::int64_t n_paths = 0;
  std::vector<LaplaceCheckRow> rows;
  bool passed = false;
};

LaplaceCheckReport empirical_laplace_check(double kappa, const std::vector<double>& lambdas,
                                           double t, std::int64_t n_paths, double r_min,
                                           std::uint64_t seed);

struct TailBoundReport {
  double x = 0.0;
  double y = 0.0;
  double t = 0.0;
  double empirical_prob = 0.0;
  double standard_error = 0.0;
  double bound_value = 0.0;
  std::int64_t n_paths = 0;
  double fitted_C = 0.0;
  bool vacuous = false;
  bool passed = false;
};

// Monte-Carlo estimate of P(sup_{u<=t} |L_u| 1{all jumps up to u are <= y} >= x).
// With fitted_C > 0 the bound (C t / (x y^{kappa-1}))^{x/y} is evaluated and
// the cell passes iff empirical_prob <= bound + 3 SE.
TailBoundReport truncated_sup_tail_check(double kappa, double t, double x, double y,
                                         std::int64_t n_paths, std::uint64_t seed,
                                         double fitted_C = 0.0, double r_min = 0.0);

struct TailGridReport {
  double kappa = 0.0;
  double fitted_C = 0.0;
  std::vector<TailBoundReport> cells;  // verification ensemble
  bool passed = false;
};

// Fits one C over the non-vacuous cells (relative SE < 30%) of a fitting
// ensemble, then checks every cell of an independent ensemble of twice the
// size against the bound with that C.
TailGridReport tail_bound_grid_check(double kappa, const std::vector<double>& xs,
                                     const std::vector<double>& ys,
                                     const std::vector<double>& ts, std::int64_t n_paths,
                                     std::uint64_t seed);

struct JumpCountGofReport {
  std::vector<double> levels;
  std::vector<double> expected_means;
  std::vector<double> p_values;
  bool passed = false;
};

// Chi-square goodness of fit of per-path jump counts above each level
// against Poisson(t c r^{-kappa} / kappa); passes at the 1% level.
JumpCountGofReport jump_count_gof(double kappa, double t, double r_min,
                                  const std::vector<double>& levels, std::int64_t n_paths,
                                  std::uint64_t seed);

struct SelfSimilarityReport {
  double ks_statistic = 0.0;
  double p_value = 0.0;
  bool passed = false;
};

// Two-sample KS between L_{ct} (cut r_min) and c^{1/kappa} L_t (cut
// r_min c^{-1/kappa}); the truncated process is exactly self-similar under
// that joint rescaling.
SelfSimilarityReport self_similarity_check(double kappa, double t, double c, double r_min,
                                           std::int64_t n_paths, std::uint64_t seed);

}  // namespace superfractal
