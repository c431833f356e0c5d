#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "superfractal/config.hpp"

namespace superfractal::app {

enum class Command { Simulate, Spectrum, Census, Verify, LogLaplaceCheck, All, Plots };

std::optional<Command> parse_command(const std::string& name);
std::string command_name(Command c);

inline constexpr int kExitOk = 0;
inline constexpr int kExitGateFailed = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;

struct RunOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> replicas;
  std::optional<std::string> out;
  int jobs = 1;
  bool dump_kernel = false;
};

struct Gate {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct RunOutcome {
  int exit_code = kExitOk;
  std::filesystem::path run_dir;
  std::vector<Gate> gates;
  std::string error;
};

// Output directory: --out, else SUPERFRACTAL_OUT, else the config's output_dir.
std::filesystem::path resolve_output_dir(const RunOptions& opts, const RunConfig& cfg);

// Loads a config file, or the config snapshot inside a manifest.json.
RunConfig load_config_or_manifest(const std::string& path);

RunOutcome run(Command cmd, const RunOptions& opts, std::ostream& log);

// Writes spectrum.gp, holder_field.gp and jumps.gp into run_dir.
RunOutcome emit_plots(const std::filesystem::path& run_dir, std::ostream& log);

}  // namespace superfractal::app
