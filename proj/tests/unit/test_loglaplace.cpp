#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "superfractal/errors.hpp"
#include "superfractal/kernels.hpp"
#include "superfractal/loglaplace.hpp"

using namespace superfractal;

namespace {
ModelParams params(double alpha, double beta, double a, double b, double t) {
  ModelParams p;
  p.alpha = alpha;
  p.beta = beta;
  p.a = a;
  p.b = b;
  p.t = t;
  return p;
}

std::vector<double> bump(const Grid1D& g, double center, double width, double height) {
  std::vector<double> v(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    double z = (g.x(i) - center) / width;
    v[i] = std::fabs(z) < 1 ? height * std::exp(-1.0 / (1 - z * z)) : 0.0;
  }
  return v;
}

double rk4_reaction(double u, double a, double b, double beta, double t) {
  auto f = [&](double v) { return a * v - b * std::pow(v, 1 + beta); };
  const int n = 20000;
  double h = t / n;
  for (int i = 0; i < n; ++i) {
    double k1 = f(u), k2 = f(u + h / 2 * k1), k3 = f(u + h / 2 * k2), k4 = f(u + h * k3);
    u += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return u;
}
}  // namespace

TEST(ReactionFlow, MatchesRungeKutta) {
  for (double a : {-0.7, 0.0, 0.9})
    for (double u0 : {0.05, 1.0, 3.0})
      EXPECT_NEAR(reaction_flow(u0, a, 1.3, 0.4, 0.8), rk4_reaction(u0, a, 1.3, 0.4, 0.8), 1e-10);
  EXPECT_EQ(reaction_flow(0.0, 0.5, 1.0, 0.4, 1.0), 0.0);
  EXPECT_NEAR(reaction_flow(2.0, 0.5, 0.0, 0.4, 1.0), 2.0 * std::exp(0.5), 1e-14);
}

TEST(LogLaplace, ZeroDatumStaysZero) {
  Grid1D g(0, 1, 128);
  auto s = solve_log_laplace(std::vector<double>(128, 0.0), params(1.6, 0.4, 0, 1, 1), g, 20);
  for (double v : s.u) EXPECT_EQ(v, 0.0);
}

TEST(LogLaplace, ConstantDatumHasClosedForm) {
  Grid1D g(0, 1, 128);
  auto s = solve_log_laplace(std::vector<double>(128, 1.0), params(1.6, 0.5, 0, 1, 1), g, 10);
  for (double v : s.u) EXPECT_NEAR(v, 4.0 / 9.0, 1e-12);
}

TEST(LogLaplace, LinearLimitIsTheSemigroup) {
  Grid1D g(-2, 2, 256);
  auto phi = bump(g, 0.1, 0.5, 2.0);
  auto s = solve_log_laplace(phi, params(1.6, 0.4, 0, 0, 0.3), g, 7);
  auto ref = apply_semigroup(phi, 1.6, 0.3, g);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(s.u[i], ref[i], 1e-8);
  auto s2 = solve_log_laplace(phi, params(1.6, 0.4, 0.5, 0, 0.3), g, 7);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(s2.u[i], std::exp(0.15) * ref[i], 1e-8);
}

TEST(LogLaplace, RejectsBadInput) {
  Grid1D g(0, 1, 64);
  std::vector<double> phi(64, 1.0);
  phi[3] = -0.1;
  EXPECT_THROW(solve_log_laplace(phi, params(1.6, 0.4, 0, 1, 1), g, 10), DomainError);
  EXPECT_THROW(solve_log_laplace(std::vector<double>(32, 1.0), params(1.6, 0.4, 0, 1, 1), g, 10),
               DomainError);
}

TEST(LogLaplace, Monotone) {
  Grid1D g(0, 1, 128);
  std::mt19937_64 eng(5);
  std::uniform_real_distribution<double> U(0, 1);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> lo(128), hi(128);
    for (int i = 0; i < 128; ++i) {
      lo[i] = 3 * U(eng);
      hi[i] = lo[i] + U(eng);
    }
    auto p = params(1.6, 0.4, 0.3, 1, 0.5);
    auto a = solve_log_laplace(lo, p, g, 20);
    auto b = solve_log_laplace(hi, p, g, 20);
    for (int i = 0; i < 128; ++i) EXPECT_LE(a.u[i], b.u[i] + 1e-12);
  }
}

TEST(LogLaplace, StrangSecondOrder) {
  Grid1D g(0, 1, 256);
  auto phi = bump(g, 0.5, 0.3, 3.0);
  auto p = params(1.6, 0.4, 0.2, 1, 0.3);
  auto u1 = solve_log_laplace(phi, p, g, 8).u;
  auto u2 = solve_log_laplace(phi, p, g, 16).u;
  auto u3 = solve_log_laplace(phi, p, g, 32).u;
  double d12 = 0, d23 = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    d12 = std::max(d12, std::fabs(u1[i] - u2[i]));
    d23 = std::max(d23, std::fabs(u2[i] - u3[i]));
  }
  EXPECT_GT(d12 / d23, 3.2);
  EXPECT_LT(d12 / d23, 4.8);
}

TEST(LogLaplace, SemigroupProperty) {
  Grid1D g(0, 1, 256);
  auto phi = bump(g, 0.4, 0.3, 3.0);
  auto p = params(1.6, 0.4, 0, 1, 0.6);
  auto full = solve_log_laplace_to(phi, p, g, 0.6, 60);
  auto half = solve_log_laplace_to(phi, p, g, 0.3, 30);
  auto two = solve_log_laplace_to(half.u, p, g, 0.3, 30);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(full.u[i], two.u[i], 1e-7);
}

TEST(LaplaceFunctional, Examples) {
  Grid1D g(0, 1, 128);
  LogLaplaceState s;
  s.grid = g;
  s.u.assign(128, 0.0);
  EXPECT_EQ(laplace_functional(InitialMeasure::lebesgue(0, 1), s), 1.0);
  for (std::size_t i = 0; i < 128; ++i) s.u[i] = 1.0 + std::sin(2 * M_PI * g.x(i));
  EXPECT_NEAR(laplace_functional(InitialMeasure::atom(g.x(17)), s), std::exp(-s.u[17]), 1e-15);
  s.u.assign(128, 4.0 / 9.0);
  EXPECT_NEAR(laplace_functional(InitialMeasure::lebesgue(0, 1), s), std::exp(-4.0 / 9.0), 1e-14);
  EXPECT_NEAR(std::exp(-4.0 / 9.0), 0.6412, 1e-4);
}

TEST(DualityCheck, ZeroTestFunctionIsExact) {
  Grid1D g(0, 1, 64);
  std::vector<std::vector<double>> ens(5, std::vector<double>(64, 1.3));
  auto rep = duality_check(params(1.6, 0.4, 0, 1, 0.3), std::vector<double>(64, 0.0), g, ens, 20);
  EXPECT_EQ(rep.monte_carlo, 1.0);
  EXPECT_EQ(rep.solver, 1.0);
  EXPECT_TRUE(rep.passed);
  EXPECT_THROW(duality_check(params(1.6, 0.4, 0, 1, 0.3), std::vector<double>(64, 0.0), g,
                             {std::vector<double>(32, 1.0)}),
               DomainError);
}
