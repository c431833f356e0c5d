#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace superfractal {

struct Atom {
  double x = 0.0;
  double mass = 0.0;
};

// Lebesgue measure with constant density on [lo, hi).
struct LebesgueSegment {
  double lo = 0.0;
  double hi = 1.0;
  double density = 1.0;
};

// Finite initial measure: an optional uniform segment plus point atoms.
struct InitialMeasure {
  std::optional<LebesgueSegment> segment;
  std::vector<Atom> atoms;

  static InitialMeasure lebesgue(double lo, double hi, double density = 1.0);
  static InitialMeasure atom(double x, double mass = 1.0);

  double total_mass() const;
};

struct ModelParams {
  double alpha = 1.6;
  double beta = 0.4;
  double a = 0.0;
  double b = 1.0;
  double t = 1.0;
  InitialMeasure mu = InitialMeasure::lebesgue(0.0, 1.0);

  double kappa() const { return 1.0 + beta; }
};

struct ValidationReport {
  std::vector<std::string> violations;
  std::vector<std::string> notes;
  // beta < (alpha - 1) / 2: the jump integral Z2 has a spatial derivative.
  bool z2_differentiable = false;

  bool ok() const { return violations.empty(); }
};

// b = 0 is accepted with a note: it switches branching off and is the
// deterministic reference case used throughout the tests.
ValidationReport validate_params(const ModelParams& p);

struct SpectrumTheory {
  double alpha = 0.0;
  double beta = 0.0;
  double eta_c = 0.0;
  double eta_bar_c = 0.0;
  double rho_coeff = 0.0;
};

// Throws DomainError when validate_params reports violations.
SpectrumTheory derive_exponents(const ModelParams& p);

// (1 + beta)(eta - eta_c); eta must lie in [eta_c, eta_bar_c).
double theoretical_spectrum(const SpectrumTheory& st, double eta);

// Uniform periodic grid x_i = x_min + i dx, i < n_points.
class Grid1D {
 public:
  Grid1D() = default;
  Grid1D(double x_min, double x_max, std::size_t n_points);

  double x_min() const { return x_min_; }
  double x_max() const { return x_max_; }
  std::size_t size() const { return n_; }
  double dx() const { return dx_; }
  double length() const { return x_max_ - x_min_; }
  double x(std::size_t i) const { return x_min_ + static_cast<double>(i) * dx_; }
  // Index of the grid point whose cell [x_i - dx/2, x_i + dx/2) holds x,
  // after wrapping x into the periodic box.
  std::size_t cell_of(double x) const;
  // Signed periodic displacement y - x folded into [-L/2, L/2).
  double wrap_delta(double d) const;

  bool operator==(const Grid1D& o) const {
    return x_min_ == o.x_min_ && x_max_ == o.x_max_ && n_ == o.n_;
  }

 private:
  double x_min_ = 0.0;
  double x_max_ = 1.0;
  std::size_t n_ = 2;
  double dx_ = 0.5;
};

// Cell averages of mu's Lebesgue part, sampled on the grid (atoms excluded).
std::vector<double> lebesgue_density_on_grid(const InitialMeasure& mu, const Grid1D& g);

}  // namespace superfractal
