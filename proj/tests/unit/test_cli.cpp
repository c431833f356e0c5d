#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <regex>
#include <set>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "artifacts.hpp"
#include "run.hpp"
#include "superfractal/kernels.hpp"

using namespace superfractal;
using namespace superfractal::app;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("superfractal_cli_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

fs::path write_config(const fs::path& dir, const json& cfg) {
  const fs::path p = dir / "config.json";
  write_atomic(p, cfg.dump(2));
  return p;
}

json small_config() {
  return json::parse(R"({
    "seed": 5,
    "n_replicas": 2,
    "time_steps": 40,
    "r_min": 1e-3,
    "gamma": 1e-4,
    "model": {"alpha": 1.6, "beta": 0.4, "a": 0.0, "b": 1.0, "t": 0.3,
              "mu": {"lebesgue": {"lo": 0.0, "hi": 1.0}}},
    "grid": {"x_min": -0.5, "x_max": 1.5, "n_points": 1024},
    "census": {"j_max": 10}
  })");
}

RunOutcome run_quiet(Command cmd, const RunOptions& opts) {
  std::ostringstream log;
  return run(cmd, opts, log);
}

std::vector<std::vector<double>> read_csv(const fs::path& p) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(read_file(p));
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::istringstream cells(line);
    std::string c;
    while (std::getline(cells, c, ',')) row.push_back(std::strtod(c.c_str(), nullptr));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

TEST(Cli, CommandNamesRoundTrip) {
  for (auto c : {Command::Simulate, Command::Spectrum, Command::Census, Command::Verify,
                 Command::LogLaplaceCheck, Command::All, Command::Plots})
    EXPECT_EQ(parse_command(command_name(c)), c);
  EXPECT_FALSE(parse_command("simulat").has_value());
}

TEST(Cli, OutputDirectoryPrecedence) {
  RunConfig cfg;
  cfg.output_dir = "from_config";
  RunOptions opts;
  ::unsetenv("SUPERFRACTAL_OUT");
  EXPECT_EQ(resolve_output_dir(opts, cfg), fs::path("from_config"));
  ::setenv("SUPERFRACTAL_OUT", "from_env", 1);
  EXPECT_EQ(resolve_output_dir(opts, cfg), fs::path("from_env"));
  opts.out = "from_flag";
  EXPECT_EQ(resolve_output_dir(opts, cfg), fs::path("from_flag"));
  ::unsetenv("SUPERFRACTAL_OUT");
}

TEST(Cli, BadConfigExitsTwoWithPosition) {
  const auto dir = scratch_dir("bad");
  json cfg = small_config();
  cfg["grid"]["n_points"] = 1000;
  RunOptions opts;
  opts.config_path = write_config(dir, cfg).string();
  opts.out = (dir / "run").string();
  const auto out = run_quiet(Command::Simulate, opts);
  EXPECT_EQ(out.exit_code, kExitConfig);
  EXPECT_TRUE(std::regex_search(out.error, std::regex(R"(config\.json:\d+:\d+: n_points)")))
      << out.error;

  opts.config_path = (dir / "missing.json").string();
  EXPECT_EQ(run_quiet(Command::Simulate, opts).exit_code, kExitConfig);
}

TEST(Cli, NumericFailureNamesTheStage) {
  const auto dir = scratch_dir("overflow");
  json cfg = small_config();
  cfg["model"]["a"] = 40.0;
  cfg["model"]["b"] = 0.0;
  cfg["model"]["t"] = 1.0;
  RunOptions opts;
  opts.config_path = write_config(dir, cfg).string();
  opts.out = (dir / "run").string();
  const auto out = run_quiet(Command::Simulate, opts);
  EXPECT_EQ(out.exit_code, kExitNumeric);
  EXPECT_NE(out.error.find("stage simulate"), std::string::npos) << out.error;
}

TEST(Cli, HeatFlowWithoutBranching) {
  const auto dir = scratch_dir("heat");
  json cfg = small_config();
  cfg["model"]["b"] = 0.0;
  cfg["n_replicas"] = 1;
  RunOptions opts;
  opts.config_path = write_config(dir, cfg).string();
  opts.out = (dir / "run").string();
  const auto out = run_quiet(Command::Simulate, opts);
  ASSERT_EQ(out.exit_code, kExitOk) << out.error;

  EXPECT_TRUE(read_csv(dir / "run" / "jumps.csv").empty());
  // Oracle: X_t(x) = int_0^1 p_t(x - y) dy, the kernel mass of [x - 1, x]
  // on the periodic box.
  const auto kernel = PeriodicStableKernel::get(1.6, 2.0);
  const auto rows = read_csv(dir / "run" / "density.csv");
  ASSERT_EQ(rows.size(), 1024u);
  double worst = 0.0;
  for (const auto& r : rows) worst = std::max(worst, std::abs(r[4] - kernel->mass(0.3, r[0] - 1.0, r[0])));
  // The grid carries the initial indicator as cell averages; the flow
  // smooths the edge cells, leaving an O(dx) discrepancy.
  EXPECT_LT(worst, 2e-3);
}

TEST(Cli, VerifyAlphaTwoSmoke) {
  const auto dir = scratch_dir("alpha2");
  json cfg = small_config();
  cfg["model"]["alpha"] = 2.0;
  cfg["model"]["beta"] = 0.5;
  cfg["model"]["t"] = 0.1;
  cfg["spectrum"] = {{"bin_hi", 1.05}};
  cfg["verify"] = {{"kernel", {{"inequality_samples", 5000}, {"inequality_alphas", {2.0}}}},
                   {"levy_config", {{"kappas", {1.5}}, {"paths", 5000}, {"tail_paths", 1000}}},
                   {"duality", false}};
  RunOptions opts;
  opts.config_path = write_config(dir, cfg).string();
  opts.out = (dir / "run").string();
  opts.dump_kernel = true;
  const auto out = run_quiet(Command::Verify, opts);
  EXPECT_EQ(out.exit_code, kExitOk) << out.error;

  // Independent check of the dumped table against the heat kernel.
  const auto rows = read_csv(dir / "run" / "kernel_table.csv");
  ASSERT_FALSE(rows.empty());
  double worst = 0.0;
  for (const auto& r : rows) {
    const double exact = std::exp(-r[0] * r[0] / 0.4) / std::sqrt(0.4 * M_PI);
    worst = std::max(worst, std::abs(r[1] - exact));
  }
  EXPECT_LT(worst, 1e-6);
  const json v = json::parse(read_file(dir / "run" / "verify.json"));
  for (const auto& row : v["kernels"]["closed_forms"])
    if (row["alpha"] == 2.0) EXPECT_LE(row["sup_error"].get<double>(), 1e-6);
}

TEST(Cli, RepeatedRunsAreByteIdentical) {
  const auto dir = scratch_dir("determinism");
  RunOptions opts;
  opts.config_path = write_config(dir, small_config()).string();
  opts.out = (dir / "a").string();
  ASSERT_EQ(run_quiet(Command::Simulate, opts).exit_code, kExitOk);
  opts.out = (dir / "b").string();
  opts.jobs = 2;
  ASSERT_EQ(run_quiet(Command::Simulate, opts).exit_code, kExitOk);
  // Rerun from the manifest alone.
  RunOptions again;
  again.config_path = (dir / "a" / "manifest.json").string();
  again.out = (dir / "c").string();
  ASSERT_EQ(run_quiet(Command::Simulate, again).exit_code, kExitOk);

  const json ma = json::parse(read_file(dir / "a" / "manifest.json"));
  ASSERT_FALSE(ma["artifacts"].empty());
  for (const char* other : {"b", "c"}) {
    const json mb = json::parse(read_file(dir / other / "manifest.json"));
    EXPECT_EQ(ma["artifacts"], mb["artifacts"]) << other;
    EXPECT_EQ(ma["config"], mb["config"]) << other;
    for (const auto& [name, sum] : ma["artifacts"].items())
      EXPECT_EQ(read_file(dir / other / name), read_file(dir / "a" / name)) << name;
  }
  for (const auto& [name, sum] : ma["artifacts"].items())
    EXPECT_EQ(sha256_hex(read_file(dir / "a" / name)), sum.get<std::string>());

  // A different seed changes the jumps.
  opts.seed = 6;
  opts.out = (dir / "d").string();
  ASSERT_EQ(run_quiet(Command::Simulate, opts).exit_code, kExitOk);
  EXPECT_NE(read_file(dir / "d" / "jumps.csv"), read_file(dir / "a" / "jumps.csv"));
}

TEST(Plots, MissingArtifactsExitTwo) {
  const auto dir = scratch_dir("plots_missing");
  std::ostringstream log;
  EXPECT_EQ(emit_plots(dir, log).exit_code, kExitConfig);
}

TEST(Plots, EmptySpectrumDrawsTheoryOnly) {
  const auto dir = scratch_dir("plots_empty");
  json manifest = {{"manifest_version", 1}, {"config", small_config()}};
  write_atomic(dir / "manifest.json", manifest.dump());
  write_atomic(dir / "spectrum.csv",
               "eta_bin_lo,eta_bin_hi,d_hat,d_theory,count\n0.45,0.55,nan,0.5,0\n");
  std::ostringstream log;
  ASSERT_EQ(emit_plots(dir, log).exit_code, kExitOk);
  const std::string sp = read_file(dir / "spectrum.gp");
  EXPECT_NE(sp.find("theory(x)"), std::string::npos);
  EXPECT_EQ(sp.find("'spectrum.csv'"), std::string::npos);
  const std::string jp = read_file(dir / "jumps.gp");
  EXPECT_NE(jp.find("slope = -2.4\n"), std::string::npos);
}

TEST(Plots, FullRunScriptsAreSelfContained) {
  const auto dir = scratch_dir("plots_full");
  json cfg = small_config();
  cfg["verify"] = {{"kernel", {{"inequality_samples", 2000}, {"inequality_alphas", {1.6}}}},
                   {"levy_config", {{"kappas", {1.5}}, {"paths", 2000}, {"tail_paths", 500}}}};
  RunOptions opts;
  opts.config_path = write_config(dir, cfg).string();
  opts.out = (dir / "run").string();
  const auto out = run_quiet(Command::All, opts);
  ASSERT_NE(out.exit_code, kExitConfig) << out.error;
  ASSERT_NE(out.exit_code, kExitNumeric) << out.error;

  const std::regex quoted(R"('([^']*\.(csv|json|png))')");
  int scripts = 0;
  for (const char* name : {"spectrum.gp", "holder_field.gp", "jumps.gp"}) {
    const fs::path p = dir / "run" / name;
    ASSERT_TRUE(fs::exists(p)) << name;
    ++scripts;
    const std::string text = read_file(p);
    for (auto it = std::sregex_iterator(text.begin(), text.end(), quoted);
         it != std::sregex_iterator(); ++it) {
      const std::string file = (*it)[1].str();
      EXPECT_EQ(file.find('/'), std::string::npos) << name << ": " << file;
      if (file.ends_with(".csv")) EXPECT_TRUE(fs::exists(dir / "run" / file)) << file;
    }
  }
  EXPECT_EQ(scripts, 3);
  EXPECT_NE(read_file(dir / "run" / "spectrum.gp").find("'spectrum.csv'"), std::string::npos);
}
