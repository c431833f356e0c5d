#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "superfractal/mfa.hpp"
#include "superfractal/model.hpp"

namespace superfractal {

struct SimulationConfig {
  double record_min = 0.0;      // 0: record every jump
  bool geometric = true;        // geometric late-time grid
  bool representation = true;   // Z1/Z2/Z3 for replica 0 (needs the full record)
  double jumps_csv_min = 1e-4;  // jumps.csv lists replica 0's jumps at least this big
};

struct SpectrumGate {
  std::vector<double> etas;  // bins containing these exponents are gated
  double tolerance = 0.15;
  bool monotone = true;      // gated bins must be nondecreasing
};

struct SpectrumConfig {
  double bin_lo = 0.05;
  double bin_hi = 0.95;
  double bin_width = 0.1;
  int octaves = 7;             // Hoelder ladder length from 2 dx
  double theta_fraction = 0.1;  // mask {X_t > theta_fraction * mean density on (0, 1)}
  SpectrumGate gate;
};

struct CensusConfig {
  CensusParams params;
  double eta = 0.5;         // jump census exponent
  int j_max = 0;            // 0: 24
  std::size_t max_balls = 10000;
};

struct KernelVerifyConfig {
  std::vector<double> closed_form_times = {0.01, 0.1, 1.0};
  std::int64_t inequality_samples = 100000;
  std::vector<double> inequality_alphas = {1.2, 1.6, 2.0};
};

struct LevyVerifyConfig {
  std::vector<double> kappas = {1.2, 1.5, 1.8};
  std::vector<double> lambdas = {0.5, 1.0, 2.0};
  std::int64_t paths = 100000;
  std::int64_t tail_paths = 5000;  // fitting ensemble of the tail bound grid
  double t = 1.0;
};

struct DualityConfig {
  struct Bump {
    double center = 0.5;
    double width = 0.2;
    double height = 1.0;
  };
  std::vector<Bump> bumps = {{0.5, 0.2, 1.0}, {0.3, 0.1, 2.0}};
  std::int64_t replicas = 0;  // 0: n_replicas
  std::int64_t solver_steps = 200;
  double solver_tolerance = 0.01;
};

struct VerifyConfig {
  bool kernels = true;
  bool levy = true;
  bool duality = true;
  KernelVerifyConfig kernel;
  LevyVerifyConfig levy_config;
  DualityConfig duality_config;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::int64_t n_replicas = 0;
  std::int64_t time_steps = 0;
  double r_min = 0.0;
  double gamma = 0.0;
  std::string output_dir = "./out";
  ModelParams model;
  Grid1D grid;
  SimulationConfig simulation;
  SpectrumConfig spectrum;
  CensusConfig census;
  VerifyConfig verify;
};

// Parses and validates a config. Errors are ConfigError with a
// "source:line:col: message" prefix pointing at the offending value.
RunConfig parse_run_config(const std::string& text, const std::string& source = "<config>");
RunConfig load_run_config(const std::string& path);

// Full snapshot, every default filled in; parse_run_config(dump) round-trips.
nlohmann::json config_to_json(const RunConfig& cfg);

// Bump phi(x) = height * (1 - ((x - center) / width)^2)^2 on |x - center| < width.
std::vector<double> bump_on_grid(const DualityConfig::Bump& b, const Grid1D& grid);

}  // namespace superfractal
