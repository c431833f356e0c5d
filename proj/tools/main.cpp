#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "run.hpp"

using namespace superfractal::app;

int main(int argc, char** argv) {
  CLI::App app{"Simulation and multifractal analysis of stable-branching superprocesses"};
  app.require_subcommand(1);

  RunOptions opts;
  std::uint64_t seed = 0;
  std::int64_t replicas = 0;
  std::string out;

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"simulate", "Simulate replicas; writes density.csv, jumps.csv, diagnostics.json"},
      {"spectrum", "Hoelder field and pooled spectrum; writes spectrum.csv, holder_field.csv"},
      {"census", "Jump and event census; writes census.json"},
      {"verify", "Kernel, Levy and duality checks; writes verify.json"},
      {"loglaplace-check", "Duality check alone; writes loglaplace.json"},
      {"all", "Every stage plus plot scripts"},
      {"plots", "Writes gnuplot scripts into an existing run directory (--out)"}};
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    if (name != "plots") {
      sub->add_option("--config", opts.config_path, "JSON config, or a manifest.json to rerun")
          ->required();
      sub->add_option("--seed", seed, "Override the config seed");
      sub->add_option("--replicas", replicas, "Override n_replicas");
      sub->add_option("--jobs", opts.jobs, "Worker threads for replicas")->check(CLI::PositiveNumber);
    }
    if (name == "verify" || name == "all")
      sub->add_flag("--dump-kernel", opts.dump_kernel, "Write kernel_table.csv");
    sub->add_option("--out", out, "Output directory");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  auto* sub = app.get_subcommands().front();
  const auto cmd = parse_command(sub->get_name());
  if (sub->count("--seed")) opts.seed = seed;
  if (sub->count("--replicas")) opts.replicas = replicas;
  if (sub->count("--out")) opts.out = out;

  const RunOutcome outcome = run(*cmd, opts, std::cerr);
  if (!outcome.error.empty()) std::cerr << "error: " << outcome.error << "\n";
  if (!outcome.run_dir.empty()) std::cout << outcome.run_dir.string() << "\n";
  return outcome.exit_code;
}
