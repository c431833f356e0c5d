#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "superfractal/model.hpp"
#include "superfractal/stable_density.hpp"

namespace superfractal {

// Transition density p_tau of the symmetric alpha-stable motion (generator
// -(-Delta)^{alpha/2}) wrapped onto a circle of length L. Narrow kernels
// (tau^{1/alpha} <= L/16) are evaluated in real space from the unit density
// plus image sums; wide kernels from the Fourier series.
class PeriodicStableKernel {
 public:
  PeriodicStableKernel(double alpha, double length);
  // Shared instance per (alpha, length).
  static std::shared_ptr<const PeriodicStableKernel> get(double alpha, double length);

  double alpha() const { return alpha_; }
  double length() const { return L_; }
  double pdf(double tau, double z) const;
  double dpdf(double tau, double z) const;
  // Periodic mass on [a, b], b - a <= L.
  double mass(double tau, double a, double b) const;

  const UnitStableDensity& unit() const { return *unit_; }
  // Fold z into [-L/2, L/2).
  double fold(double z) const;
  // Sum of p_tau (d = 0) or p'_tau (d = 1) over the images z + jL, |j| >= 3,
  // for folded z and tau^{1/alpha} <= L/16.
  double far_images(double tau, double z, int d) const;

 private:
  bool narrow(double tau) const;
  double fourier(double tau, double z, int d) const;
  double fourier_mass(double tau, double a, double b) const;

  double alpha_;
  double L_;
  std::shared_ptr<const UnitStableDensity> unit_;
  // Far image sums sum_{|j|>=3} |z + jL|^{-alpha k - 1} (and z-derivative)
  // on nodes z in [0, L/2].
  std::vector<std::vector<double>> far_h_, far_dh_;
  double node_ = 0.0;
};

struct KernelTable {
  double alpha = 0.0;
  double t = 0.0;
  Grid1D grid;
  std::vector<double> values;
  std::vector<double> gradient_values;
  int oversampling = 1;

  // Periodic trapezoid rule over [x_min, x_max].
  double integral() const;
  // Mass of p_t outside [x_min, x_max), from the exact distribution function.
  double tail_mass_outside() const;
  double normalization() const { return integral() + tail_mass_outside(); }
  // Rows "x,p,dp_dx" with a header line.
  void write_csv(const std::string& path) const;
};

// Samples p_t and its derivative at the grid points (the kernel centred at
// 0). Requires the grid span to cover at least 16 widths t^{1/alpha}.
KernelTable build_kernel(double alpha, double t, const Grid1D& grid);

// Fourier multiplier of S_s on a periodic grid (rfft layout). Resolved
// times use exp(-s |xi|^alpha) directly; times too short for the grid use
// the transform of the cell-mass kernel so that the operator stays
// positive and mass preserving.
class SpectralPropagator {
 public:
  SpectralPropagator(const Grid1D& grid, double alpha);

  const Grid1D& grid() const { return grid_; }
  double alpha() const { return alpha_; }
  bool resolved(double s) const;
  std::vector<double> multiplier(double s) const;
  // Multiplier of the kernel averaged over tau in [s0, s1] and over a cell.
  std::vector<double> averaged_multiplier(double s0, double s1, bool cell_average) const;
  // Real-space kernel averaged over tau in [s0, s1] and over the source
  // position within a cell, sampled at offsets j dx (FFT order). With
  // derivative = 1 the spatial derivative of that average.
  std::vector<double> averaged_kernel(double s0, double s1, int derivative) const;
  void apply(std::vector<double>& field, const std::vector<double>& mult) const;
  void apply(std::vector<double>& field, double s) const;
  const PeriodicStableKernel& kernel() const { return *kernel_; }

 private:
  Grid1D grid_;
  double alpha_;
  std::shared_ptr<const PeriodicStableKernel> kernel_;
};

std::vector<double> apply_semigroup(const std::vector<double>& field, double alpha, double s,
                                    const Grid1D& grid);

struct KernelEstimateReport {
  std::string inequality;
  double alpha = 0.0;
  double delta = 0.0;
  double fitted_constant = 0.0;
  double max_violation_ratio = 0.0;
  std::int64_t sample_count = 0;
  bool passed = false;
};

// |p_t(x) - p_t(y)| <= C |x-y|^delta t^{-delta/alpha} (p_t(x/2) + p_t(y/2)).
KernelEstimateReport check_kernel_difference_bound(double alpha, double delta,
                                                   std::int64_t samples, std::uint64_t seed);

// |p'_t(x) - p'_t(y)| <= C |x-y|^delta t^{-(1+delta)/alpha} (p_t(x/2) + p_t(y/2)).
KernelEstimateReport check_gradient_difference_bound(double alpha, double delta,
                                                     std::int64_t samples, std::uint64_t seed);

// |p'_t(x)| <= C t^{-1/alpha} p_t(x/2).
KernelEstimateReport check_gradient_envelope_bound(double alpha, std::int64_t samples,
                                                   std::uint64_t seed);

// |p_t(x) - p_t(y) - (x-y) p'_t(y)| <= C |x-y|^delta t^{-delta/alpha}
// (p_t(x/2) + p_t(y/2)), delta in [1, 2].
KernelEstimateReport check_taylor_remainder_bound(double alpha, double delta,
                                                  std::int64_t samples, std::uint64_t seed);

// p_1(z) <= C (|z| v 1)^{-alpha-1}.
KernelEstimateReport check_tail_envelope_bound(double alpha, std::int64_t samples,
                                               std::uint64_t seed);

// The three gradient inequalities: difference (a) at delta_a in [0, 1],
// envelope (b), and Taylor remainder at delta_c in [1, 2].
std::vector<KernelEstimateReport> check_gradient_bounds(double alpha, double delta_a,
                                                        double delta_c, std::int64_t samples,
                                                        std::uint64_t seed);

}  // namespace superfractal
