#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "superfractal/model.hpp"

namespace superfractal {

// Solution u_t of du/dt = Delta_alpha u + a u - b u^{1+beta} on a periodic grid.
struct LogLaplaceState {
  Grid1D grid;
  std::vector<double> u;
  double time = 0.0;
  ModelParams params;
  std::int64_t n_steps = 0;
  // Largest negative excursion clipped after a linear step (0 if none).
  double clipped_negativity = 0.0;
  std::vector<std::string> diagnostics;
};

// Exact flow of u' = a u - b u^{1+beta} over time dt.
double reaction_flow(double u, double a, double b, double beta, double dt);

// Strang splitting: half reaction, exact linear step exp(-dt |xi|^alpha),
// half reaction, n_steps times up to params.t. The scheme is stable for any
// dt; accuracy is second order in dt = t / n_steps.
LogLaplaceState solve_log_laplace(const std::vector<double>& phi, const ModelParams& params,
                                  const Grid1D& grid, std::int64_t n_steps);

// Same as above to an explicit time instead of params.t.
LogLaplaceState solve_log_laplace_to(const std::vector<double>& phi, const ModelParams& params,
                                     const Grid1D& grid, double t, std::int64_t n_steps);

// <mu, u> with the Lebesgue part integrated by cell overlap and atoms by
// linear interpolation.
double pair_measure(const InitialMeasure& mu, const Grid1D& grid, const std::vector<double>& u);

// exp(-<mu, u_t>).
double laplace_functional(const InitialMeasure& mu, const LogLaplaceState& state);

struct DualityReport {
  double monte_carlo = 0.0;  // mean of exp(-<X_t, phi>)
  double standard_error = 0.0;
  double solver = 0.0;       // exp(-<mu, u_t>)
  double solver_step_change = 0.0;  // |solver(n) - solver(n/2)|
  double tolerance = 0.0;    // 3 SE + relative solver tolerance
  std::int64_t n_replicas = 0;
  bool passed = false;
};

// Compares the Monte-Carlo mean of exp(-<X_t, phi>) over terminal densities
// (one per replica, on grid) with the solver value.
DualityReport duality_check(const ModelParams& params, const std::vector<double>& phi,
                            const Grid1D& grid,
                            const std::vector<std::vector<double>>& terminal_densities,
                            std::int64_t n_steps = 200, double solver_rel_tol = 0.01);

}  // namespace superfractal
