#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "superfractal/kernels.hpp"
#include "superfractal/model.hpp"

namespace superfractal {

// Increasing times 0 = s_0 < ... < s_K = t.
struct TimeGrid {
  std::vector<double> times;
  std::size_t steps() const { return times.empty() ? 0 : times.size() - 1; }
  double dt(std::size_t k) const { return times[k + 1] - times[k]; }
  double horizon() const { return times.back(); }
};

// Geometric in t - s from t down to tau_floor (plus a final step to t), or
// uniform when geometric is false; any step longer than max_dt is split
// evenly.
TimeGrid make_time_grid(double t, std::int64_t steps, double tau_floor, double max_dt,
                        bool geometric = true);

struct SimulationOptions {
  double r_min = 1e-4;
  std::int64_t time_steps = 200;
  bool geometric = true;
  double tau_floor = 0.0;       // 0: (dx/4)^alpha
  double max_compensation = 0.5;  // bound on c dt per step
  bool store_fields = true;
  double mass_overflow = 1e12;
  // Jumps below this size act on the field but are left out of the record.
  double record_min = 0.0;
};

// Largest jump expected over [0, t] from the initial mass: the level whose
// expected exceedance count is one.
double expected_max_jump(const ModelParams& p);
// 1e-4 times expected_max_jump.
double default_r_min(const ModelParams& p);

struct Jump {
  double s = 0.0;
  double y = 0.0;
  double r = 0.0;
  std::int32_t step = 0;
  std::int32_t cell = 0;
};

struct JumpRecord {
  double r_min = 0.0;
  double record_min = 0.0;  // smallest recorded size (r_min when complete)
  std::vector<Jump> jumps;  // ordered by step, then time
};

struct MeasurePath {
  Grid1D grid;
  TimeGrid time_grid;
  // fields[k] is the density at time_grid.times[k] (empty if not stored).
  std::vector<std::vector<double>> fields;
  std::vector<double> total_mass;
  double jump_rate = 0.0;          // jumps above r_min per unit mass and time
  double compensation_rate = 0.0;  // mean jump mass per unit mass and time
  double clipped_negativity = 0.0;
  const std::vector<double>& terminal() const { return fields.back(); }
};

// Deterministic per-run data shared by every replica on the same grid and
// time grid.
class SimulationPlan {
 public:
  SimulationPlan(const ModelParams& params, const Grid1D& grid, const SimulationOptions& opts);
  const ModelParams& params() const { return params_; }
  const Grid1D& grid() const { return grid_; }
  const SimulationOptions& options() const { return opts_; }
  const TimeGrid& time_grid() const { return times_; }
  const SpectralPropagator& propagator() const { return prop_; }
  // exp(-dt |xi|^alpha) for step k.
  const std::vector<double>& step_multiplier(std::size_t k) const { return step_mult_[k]; }
  // Positivity-preserving multiplier for steps too short for the grid
  // (empty when step k is resolved).
  const std::vector<double>& positive_multiplier(std::size_t k) const { return pos_mult_[k]; }
  const std::vector<double>& initial_field() const { return initial_; }
  double jump_rate() const { return jump_rate_; }
  double compensation_rate() const { return comp_rate_; }

 private:
  ModelParams params_;
  Grid1D grid_;
  SimulationOptions opts_;
  SpectralPropagator prop_;
  TimeGrid times_;
  std::vector<std::vector<double>> step_mult_;
  std::vector<std::vector<double>> pos_mult_;
  std::vector<double> initial_;
  double jump_rate_ = 0.0;
  double comp_rate_ = 0.0;
};

struct SimulationResult {
  MeasurePath path;
  JumpRecord jumps;
};

// Euler scheme for the jump SPDE: per step the exact linear flow, the drift
// factor exp(a dt), the compensator (1 - c dt) and Poisson jumps above r_min
// with intensity rho dt X(dx) r^{-2-beta} dr.
SimulationResult simulate_measure_path(const SimulationPlan& plan, std::uint64_t seed);
SimulationResult simulate_measure_path(const ModelParams& params, const Grid1D& grid,
                                       const SimulationOptions& opts, std::uint64_t seed);

struct RepresentationOptions {
  // Jumps whose kernel width is below near_radius/8 cells get exact kernel
  // values within near_radius cells.
  int near_radius = 48;
};

struct DensityDecomposition {
  std::vector<double> z1, z2, z3, x_t;
  std::optional<std::vector<double>> z2_prime;
  // Mass of the negative part of x_t over its total mass.
  double negative_mass_fraction = 0.0;
};

DensityDecomposition density_from_representation(const ModelParams& params, const Grid1D& grid,
                                                 const MeasurePath& path, const JumpRecord& jumps,
                                                 const RepresentationOptions& opts = {});

// Spatial derivative of Z2; requires beta < (alpha - 1) / 2.
std::vector<double> compute_z2_derivative(const ModelParams& params, const Grid1D& grid,
                                          const MeasurePath& path, const JumpRecord& jumps,
                                          const RepresentationOptions& opts = {});

struct GoodEventThresholds {
  double jump_constant = 1.0;
  double v_constant = 1e3;
  double holder_constant = 1e3;
};

struct DiagnosticsReport {
  double v_hat = 0.0;
  double max_jump_ratio = 0.0;
  double holder_ratio = 0.0;
  // jump bound, V bound, Hoelder bound.
  bool a_eps_pass[3] = {false, false, false};
};

// max_jump_ratio = max r / (t - s)^{1/(1+beta) - gamma}; v_hat = max over
// stored steps of S_{2^alpha (t - s)} X_s; holder_ratio = max over dyadic
// separations h of |X_t(x + h) - X_t(x)| / h^{eta_c - epsilon} on (0, 1).
DiagnosticsReport diagnostics_good_event(const MeasurePath& path, const JumpRecord& jumps,
                                         const ModelParams& params, double gamma,
                                         double epsilon, const GoodEventThresholds& th = {});

struct TimeChange {
  double t_plus = 0.0;
  double t_minus = 0.0;
};

// T_+- at s = t: int_0^t du int X_u(dy) ((ptilde_{t-u}(x1 - y, x2 - y))^{+-})^{1+beta},
// with ptilde the kernel difference, gradient corrected when eta > 1.
TimeChange increment_time_change(const ModelParams& params, const MeasurePath& path, double x1,
                                 double x2, double eta);

}  // namespace superfractal
