#include "run.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <map>
#include <mutex>
#include <numbers>
#include <thread>

#include <nlohmann/json.hpp>

#include "artifacts.hpp"
#include "superfractal/errors.hpp"
#include "superfractal/kernels.hpp"
#include "superfractal/levy.hpp"
#include "superfractal/loglaplace.hpp"
#include "superfractal/mfa.hpp"
#include "superfractal/rng.hpp"
#include "superfractal/simulation.hpp"
#include "superfractal/stats.hpp"

#ifndef SUPERFRACTAL_VERSION
#define SUPERFRACTAL_VERSION "unknown"
#endif

namespace superfractal::app {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::optional<Command> parse_command(const std::string& name) {
  static const std::map<std::string, Command> names = {
      {"simulate", Command::Simulate},   {"spectrum", Command::Spectrum},
      {"census", Command::Census},       {"verify", Command::Verify},
      {"loglaplace-check", Command::LogLaplaceCheck},
      {"all", Command::All},             {"plots", Command::Plots}};
  auto it = names.find(name);
  if (it == names.end()) return std::nullopt;
  return it->second;
}

std::string command_name(Command c) {
  switch (c) {
    case Command::Simulate: return "simulate";
    case Command::Spectrum: return "spectrum";
    case Command::Census: return "census";
    case Command::Verify: return "verify";
    case Command::LogLaplaceCheck: return "loglaplace-check";
    case Command::All: return "all";
    case Command::Plots: return "plots";
  }
  return "";
}

fs::path resolve_output_dir(const RunOptions& opts, const RunConfig& cfg) {
  if (opts.out) return *opts.out;
  if (const char* env = std::getenv("SUPERFRACTAL_OUT"); env && *env) return env;
  return cfg.output_dir;
}

RunConfig load_config_or_manifest(const std::string& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::exception&) {
    throw ConfigError(path + ": cannot open config file");
  }
  const json probe = json::parse(text, nullptr, false);
  if (probe.is_object() && probe.contains("manifest_version") && probe.contains("config"))
    return parse_run_config(probe.at("config").dump(2), path + "#config");
  return parse_run_config(text, path);
}

namespace {

using Clock = std::chrono::steady_clock;

// Hoelder-ratio diagnostic exponent eta_c - epsilon, epsilon = this * eta_c.
constexpr double kDiagnosticEpsilonFraction = 0.5;
// Pooled frequencies are gated at their bound plus this many standard errors.
constexpr double kSigmas = 3.0;

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json numbers_or_null(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(number_or_null(x));
  return a;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

template <class F>
void for_replicas(std::int64_t n, int jobs, F&& body) {
  std::atomic<std::int64_t> next{0};
  std::exception_ptr err;
  std::mutex m;
  auto worker = [&] {
    for (;;) {
      const std::int64_t r = next.fetch_add(1);
      if (r >= n) return;
      try {
        body(r);
      } catch (...) {
        std::lock_guard<std::mutex> lock(m);
        if (!err) err = std::current_exception();
        next.store(n);
        return;
      }
    }
  };
  const int k = std::max(1, std::min<int>(jobs, static_cast<int>(n)));
  if (k == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < k; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (err) std::rethrow_exception(err);
}

double mean_density_on_unit(const std::vector<double>& x, const Grid1D& g) {
  double s = 0.0;
  std::size_t k = 0;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g.x(i) > 0.0 && g.x(i) < 1.0) {
      s += x[i];
      ++k;
    }
  return k ? s / static_cast<double>(k) : 0.0;
}

struct Want {
  bool simulate_artifacts = false;
  bool spectrum = false;
  bool census = false;
  bool duality = false;  // collect terminal densities for the duality oracle
};

struct ReplicaOut {
  std::uint64_t seed = 0;
  double total_mass = 0.0;
  double mass_unit = 0.0;
  std::int64_t jumps_recorded = 0;
  double clipped_negativity = 0.0;
  DiagnosticsReport diag;
  // spectrum
  SpectrumEstimate spectrum;
  std::vector<double> masked_eta;
  // census
  double sup_mass = 0.0;
  std::vector<CensusBox> boxes;
  std::vector<CensusOctave> octaves;
  std::vector<EventCensusRow> events;
  double q = 0.0;
  CensusParams census_params;
  // duality
  std::vector<double> terminal;
};

struct FirstReplica {
  std::vector<double> path_terminal;
  std::optional<DensityDecomposition> dec;
  std::string representation_note;
  std::optional<HolderField> hf;
  std::vector<double> eta_jump;
  std::vector<Jump> csv_jumps;
  std::vector<CoveringBall> balls;
  std::vector<std::string> census_warnings;
};

class Runner {
 public:
  Runner(RunConfig cfg, RunOptions opts, fs::path dir, std::ostream& log)
      : cfg_(std::move(cfg)), opts_(std::move(opts)), dir_(std::move(dir)), log_(log),
        st_(derive_exponents(cfg_.model)) {}

  RunOutcome execute(Command cmd);

 private:
  void stage(const std::string& name) {
    stage_ = name;
    stage_start_ = Clock::now();
    log_ << "[" << name << "] start\n";
  }
  void stage_done() {
    const double s = std::chrono::duration<double>(Clock::now() - stage_start_).count();
    timings_.push_back({{"stage", stage_}, {"seconds", s}});
    log_ << "[" << stage_ << "] done in " << s << " s\n";
  }
  void artifact(const std::string& name, const std::string& content) {
    write_atomic(dir_ / name, content);
    checksums_[name] = sha256_hex(content);
  }
  void gate(const std::string& name, bool passed, const std::string& detail) {
    gates_.push_back({name, passed, detail});
    log_ << "[gate] " << (passed ? "PASS " : "FAIL ") << name << ": " << detail << "\n";
  }

  SimulationOptions sim_options(bool full_record, bool store) const;
  void replica_pass(const Want& want, std::int64_t n);
  void write_simulation_artifacts();
  void write_spectrum_artifacts();
  void write_census_artifacts();
  void run_duality(const std::vector<std::vector<double>>& terminals, json& out);
  void run_verify(json& out);
  void write_manifest(Command cmd, int exit_code);

  RunConfig cfg_;
  RunOptions opts_;
  fs::path dir_;
  std::ostream& log_;
  SpectrumTheory st_;

  std::string stage_;
  Clock::time_point stage_start_;
  json timings_ = json::array();
  std::map<std::string, std::string> checksums_;
  std::vector<Gate> gates_;

  std::vector<ReplicaOut> reps_;
  FirstReplica first_;
  HolderConfig holder_config_;
  std::vector<EtaBin> bins_;
};

SimulationOptions Runner::sim_options(bool full_record, bool store) const {
  SimulationOptions o;
  o.r_min = cfg_.r_min;
  o.time_steps = cfg_.time_steps;
  o.geometric = cfg_.simulation.geometric;
  o.store_fields = store;
  o.record_min = full_record ? 0.0 : cfg_.simulation.record_min;
  return o;
}

void Runner::replica_pass(const Want& want, std::int64_t n) {
  const Grid1D& g = cfg_.grid;
  const bool full_first = want.simulate_artifacts && cfg_.simulation.representation &&
                          !(cfg_.simulation.record_min > cfg_.r_min);
  const bool store = want.census || full_first;
  SimulationPlan plan(cfg_.model, g, sim_options(false, store));
  std::optional<SimulationPlan> plan_first;
  if (full_first && cfg_.simulation.record_min > 0.0)
    plan_first.emplace(cfg_.model, g, sim_options(true, store));

  holder_config_.scales = default_scale_range(g);
  holder_config_.scales.j_min = holder_config_.scales.j_max - cfg_.spectrum.octaves + 1;
  bins_ = make_bins(cfg_.spectrum.bin_lo, cfg_.spectrum.bin_hi, cfg_.spectrum.bin_width);
  const auto box_scales = spectrum_box_scales(holder_config_.scales);

  reps_.assign(static_cast<std::size_t>(n), {});
  for_replicas(n, opts_.jobs, [&](std::int64_t r) {
    ReplicaOut& out = reps_[static_cast<std::size_t>(r)];
    out.seed = derive_seed(cfg_.seed, static_cast<std::uint64_t>(r));
    auto res = simulate_measure_path(r == 0 && plan_first ? *plan_first : plan, out.seed);
    const auto& x = res.path.terminal();
    for (double v : x)
      if (!std::isfinite(v)) throw NumericError("non-finite density in replica " + std::to_string(r));
    out.total_mass = res.path.total_mass.back();
    out.mass_unit = mean_density_on_unit(x, g);
    {
      std::size_t k = 0;
      for (std::size_t i = 0; i < g.size(); ++i)
        if (g.x(i) > 0.0 && g.x(i) < 1.0) ++k;
      out.mass_unit *= static_cast<double>(k) * g.dx();
    }
    out.jumps_recorded = static_cast<std::int64_t>(res.jumps.jumps.size());
    out.clipped_negativity = res.path.clipped_negativity;
    if (want.simulate_artifacts && store)
      out.diag = diagnostics_good_event(res.path, res.jumps, cfg_.model, cfg_.gamma,
                                        kDiagnosticEpsilonFraction * st_.eta_c);

    std::optional<HolderField> hf;
    if (want.spectrum) {
      hf = holder_field(x, g, holder_config_);
      const double theta = cfg_.spectrum.theta_fraction * mean_density_on_unit(x, g);
      std::vector<bool> mask(g.size());
      for (std::size_t i = 0; i < g.size(); ++i) {
        mask[i] = x[i] > theta;
        if (mask[i] && hf->evaluated(i)) out.masked_eta.push_back(hf->eta_hat[i]);
      }
      out.spectrum = empirical_spectrum(level_sets(*hf, bins_, &mask), g, st_, box_scales);
    }

    if (want.census) {
      out.sup_mass = sup_mass_on(res.path, 0.0, 1.0);
      JumpCensusOptions jo;
      jo.j_max = cfg_.census.j_max;
      auto jc = jump_census(res.jumps, cfg_.model, st_, cfg_.gamma, cfg_.census.eta,
                            out.sup_mass, jo);
      out.boxes = std::move(jc.boxes);
      out.octaves = std::move(jc.octaves);
      auto ec = event_census(res.path, res.jumps, cfg_.model, st_, cfg_.census.params);
      out.events = std::move(ec.rows);
      out.q = ec.q;
      out.census_params = ec.params;
      if (r == 0) {
        first_.balls = std::move(jc.balls);
        if (first_.balls.size() > cfg_.census.max_balls) first_.balls.resize(cfg_.census.max_balls);
        first_.census_warnings = jc.warnings;
        for (const auto& w : ec.warnings) first_.census_warnings.push_back(w);
      }
    }

    if (want.duality) out.terminal = x;

    if (r == 0) {
      first_.path_terminal = x;
      if (hf) {
        first_.hf = std::move(hf);
        first_.eta_jump = jump_exponent_field(res.jumps, g, st_, cfg_.gamma, cfg_.model.t);
      }
      if (want.simulate_artifacts) {
        for (const auto& j : res.jumps.jumps)
          if (j.r >= cfg_.simulation.jumps_csv_min) first_.csv_jumps.push_back(j);
        if (!cfg_.simulation.representation) {
          first_.representation_note = "disabled in the config";
        } else if (!full_first) {
          first_.representation_note = "skipped: jumps below record_min are not recorded";
        } else {
          first_.dec = density_from_representation(cfg_.model, g, res.path, res.jumps);
          first_.representation_note = "computed";
        }
      }
    }
  });
}

void Runner::write_simulation_artifacts() {
  const Grid1D& g = cfg_.grid;
  CsvText density({"x", "z1", "z2", "z3", "x_t"});
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (first_.dec)
      density.row({g.x(i), first_.dec->z1[i], first_.dec->z2[i], first_.dec->z3[i],
                   first_.dec->x_t[i]});
    else
      density.row({g.x(i), nan, nan, nan, first_.path_terminal[i]});
  }
  artifact("density.csv", density.str());

  CsvText jumps({"s", "y", "r"});
  for (const auto& j : first_.csv_jumps) jumps.row({j.s, j.y, j.r});
  artifact("jumps.csv", jumps.str());

  json reps = json::array();
  for (const auto& r : reps_) {
    reps.push_back({{"seed", r.seed},
                    {"total_mass", r.total_mass},
                    {"mass_on_unit_interval", r.mass_unit},
                    {"jumps_recorded", r.jumps_recorded},
                    {"clipped_negativity", r.clipped_negativity},
                    {"v_hat", number_or_null(r.diag.v_hat)},
                    {"max_jump_ratio", number_or_null(r.diag.max_jump_ratio)},
                    {"holder_ratio", number_or_null(r.diag.holder_ratio)},
                    {"good_event",
                     {{"jump_bound", r.diag.a_eps_pass[0]},
                      {"v_bound", r.diag.a_eps_pass[1]},
                      {"holder_bound", r.diag.a_eps_pass[2]}}}});
  }
  json first = {{"representation", first_.representation_note},
                {"jumps_csv_min", cfg_.simulation.jumps_csv_min},
                {"jumps_in_csv", first_.csv_jumps.size()}};
  if (first_.dec) {
    double gap = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
      gap = std::max(gap, std::abs(first_.dec->x_t[i] - first_.path_terminal[i]));
    first["negative_mass_fraction"] = first_.dec->negative_mass_fraction;
    first["sup_gap_representation_vs_path"] = gap;
  }
  json diag = {{"eta_c", st_.eta_c},
               {"eta_bar_c", st_.eta_bar_c},
               {"rho", st_.rho_coeff},
               {"gamma", cfg_.gamma},
               {"epsilon", kDiagnosticEpsilonFraction * st_.eta_c},
               {"replica_0", first},
               {"replicas", reps}};
  double mean_mass = 0.0;
  for (const auto& r : reps_) mean_mass += r.total_mass / static_cast<double>(reps_.size());
  diag["mean_total_mass"] = mean_mass;
  diag["expected_total_mass"] = cfg_.model.mu.total_mass() * std::exp(cfg_.model.a * cfg_.model.t);
  artifact("diagnostics.json", dump(diag));
}

void Runner::write_spectrum_artifacts() {
  const Grid1D& g = cfg_.grid;
  std::vector<SpectrumEstimate> runs;
  std::vector<double> pooled_eta, q01;
  for (const auto& r : reps_) {
    runs.push_back(r.spectrum);
    pooled_eta.insert(pooled_eta.end(), r.masked_eta.begin(), r.masked_eta.end());
    if (!r.masked_eta.empty()) q01.push_back(quantile(r.masked_eta, 0.01));
  }
  const SpectrumEstimate pooled = pool_spectra(runs);

  CsvText csv({"eta_bin_lo", "eta_bin_hi", "d_hat", "d_theory", "count"});
  for (std::size_t b = 0; b < pooled.eta_bins.size(); ++b)
    csv.row({pooled.eta_bins[b].first, pooled.eta_bins[b].second, pooled.d_hat[b],
             pooled.d_theory[b], static_cast<double>(pooled.counts[b])});
  artifact("spectrum.csv", csv.str());

  if (first_.hf) {
    CsvText hcsv({"x", "eta_hat", "detrend_degree", "fit_quality", "smooth", "near_one",
                  "eta_jump"});
    const auto& hf = *first_.hf;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!hf.evaluated(i)) continue;
      hcsv.row({g.x(i), hf.eta_hat[i], static_cast<double>(hf.detrend_degree[i]),
                hf.fit_quality[i], hf.smooth[i] ? 1.0 : 0.0, hf.near_one[i] ? 1.0 : 0.0,
                first_.eta_jump[i]});
    }
    artifact("holder_field.csv", hcsv.str());
  }

  // Gates: pooled D(eta) at the configured exponents, and monotonicity.
  const auto& gc = cfg_.spectrum.gate;
  std::vector<double> gated;
  for (double eta : gc.etas) {
    std::size_t bin = pooled.eta_bins.size();
    for (std::size_t b = 0; b < pooled.eta_bins.size(); ++b)
      if (eta >= pooled.eta_bins[b].first && eta < pooled.eta_bins[b].second) bin = b;
    const double d = pooled.d_hat[bin];
    const double th = theoretical_spectrum(st_, eta);
    gated.push_back(d);
    gate("spectrum D(" + format_number(eta) + ")",
         std::isfinite(d) && std::abs(d - th) <= gc.tolerance,
         "D_hat " + format_number(d) + " vs theory " + format_number(th) + " +- " +
             format_number(gc.tolerance));
  }
  if (gc.monotone && gated.size() > 1) {
    bool mono = true;
    for (std::size_t k = 1; k < gated.size(); ++k)
      if (!(gated[k] >= gated[k - 1])) mono = false;
    gate("spectrum monotone", mono, "D_hat nondecreasing across the gated bins");
  }

  json per_bin = json::array();
  for (std::size_t b = 0; b < pooled.eta_bins.size(); ++b) {
    std::vector<double> vals;
    for (const auto& r : runs) vals.push_back(r.d_hat[b]);
    per_bin.push_back({{"bin", {pooled.eta_bins[b].first, pooled.eta_bins[b].second}},
                       {"d_hat_per_replica", numbers_or_null(vals)}});
  }
  json summary = {
      {"eta_c", st_.eta_c},
      {"eta_bar_c", st_.eta_bar_c},
      {"holder_scales", {{"j_min", holder_config_.scales.j_min}, {"j_max", holder_config_.scales.j_max}}},
      {"box_scales", spectrum_box_scales(holder_config_.scales)},
      {"theta_fraction", cfg_.spectrum.theta_fraction},
      {"eta_hat_percentile_1_pooled", pooled_eta.empty() ? json(nullptr) : json(quantile(pooled_eta, 0.01))},
      {"eta_hat_percentile_1_per_replica", q01},
      {"holder_floor", st_.eta_c - 0.1},
      {"bins", per_bin}};
  artifact("spectrum_summary.json", dump(summary));
}

void Runner::write_census_artifacts() {
  const std::size_t R = reps_.size();
  const double Rd = static_cast<double>(R);
  json census;
  census["gamma"] = cfg_.gamma;
  census["eta"] = cfg_.census.eta;
  census["replicas"] = R;

  // Jump census boxes pooled across replicas.
  json boxes = json::array();
  std::size_t violations = 0, gated_boxes = 0;
  const auto& b0 = reps_.front().boxes;
  for (std::size_t k = 0; k < b0.size(); ++k) {
    double exceed = 0.0, bound = 0.0, chern = 0.0, lambda = 0.0, count = 0.0;
    for (const auto& r : reps_) {
      const auto& b = r.boxes[k];
      exceed += b.exceeds ? 1.0 : 0.0;
      bound += b.stated_bound;
      chern += b.chernoff_bound;
      lambda += b.lambda;
      count += static_cast<double>(b.count);
    }
    exceed /= Rd;
    bound /= Rd;
    chern /= Rd;
    lambda /= Rd;
    count /= Rd;
    const double se = std::sqrt(bound * (1.0 - bound) / Rd);
    const bool ok = exceed <= bound + kSigmas * se;
    ++gated_boxes;
    if (!ok) ++violations;
    boxes.push_back({{"j", b0[k].j},
                     {"n", b0[k].n},
                     {"mean_count", count},
                     {"mean_lambda", lambda},
                     {"exceed_fraction", exceed},
                     {"stated_bound", bound},
                     {"chernoff_bound", chern},
                     {"standard_error", se},
                     {"within_bound", ok}});
  }
  census["boxes"] = boxes;
  gate("census boxes", violations == 0,
       std::to_string(violations) + " of " + std::to_string(gated_boxes) +
           " box classes above the per-box bound + 3 SE");

  json octaves = json::array();
  for (std::size_t k = 0; k < reps_.front().octaves.size(); ++k) {
    const auto& o = reps_.front().octaves[k];
    double exceed = 0.0, Lambda = 0.0;
    for (const auto& r : reps_) {
      exceed += r.octaves[k].exceeds ? 1.0 : 0.0;
      Lambda += r.octaves[k].Lambda;
    }
    octaves.push_back({{"j", o.j},
                       {"n0", o.n0},
                       {"n1", o.n1},
                       {"mean_Lambda", Lambda / Rd},
                       {"exceed_fraction", exceed / Rd}});
  }
  census["octaves"] = octaves;

  json balls = json::array();
  for (const auto& b : first_.balls)
    balls.push_back({{"center", b.center}, {"radius", b.radius}, {"j", b.j}, {"n", b.n}});
  census["replica_0_balls"] = balls;
  census["replica_0_warnings"] = first_.census_warnings;

  // Event census.
  const auto& cp = reps_.front().census_params;
  census["event_params"] = {{"m", cp.m},     {"eta", cp.eta}, {"theta_replica_0", cp.theta},
                            {"gamma", cp.gamma}, {"rho", cp.rho}, {"nu", cp.nu},
                            {"c", cp.c},     {"Q", cp.Q},     {"R", cp.R},
                            {"n_min", cp.n_min}, {"n_max", cp.n_max},
                            {"q", reps_.front().q}};
  json rows = json::array();
  std::vector<double> ns, o_freq;
  bool g_ok = true;
  for (std::size_t k = 0; k < reps_.front().events.size(); ++k) {
    const int n = reps_.front().events[k].n;
    const double cells = std::ldexp(1.0, n);
    double o = 0.0, bb = 0.0, a = 0.0, gf = 0.0, env = 0.0;
    bool a_res = true, g_res = true;
    for (const auto& r : reps_) {
      const auto& e = r.events[k];
      o += e.O ? 1.0 : 0.0;
      bb += e.B ? 1.0 : 0.0;
      a += static_cast<double>(e.A_cells);
      gf += static_cast<double>(e.G_cells) / cells;
      env += e.G_envelope;
      a_res = a_res && e.A_resolved;
      g_res = g_res && e.G_resolved;
    }
    o /= Rd;
    bb /= Rd;
    a /= Rd;
    gf /= Rd;
    env /= Rd;
    const double g_se = std::sqrt(env / (cells * Rd));
    const bool within = gf <= env + kSigmas * g_se;
    g_ok = g_ok && within;
    ns.push_back(n);
    o_freq.push_back(o);
    rows.push_back({{"n", n},
                    {"O_frequency", o},
                    {"B_frequency", bb},
                    {"A_cells_mean", a},
                    {"G_frequency_per_cell", gf},
                    {"G_envelope", env},
                    {"G_within_envelope", within},
                    {"A_resolved", a_res},
                    {"G_resolved", g_res}});
  }
  census["events"] = rows;
  if (ns.size() >= 2) {
    const double slope = least_squares(ns, o_freq).slope;
    const bool ok = slope <= 0.0 && o_freq.front() >= o_freq.back();
    census["O_trend_slope"] = slope;
    gate("census O_n decreasing", ok, "least-squares slope " + format_number(slope));
  }
  gate("census G envelope", g_ok, "per-cell G frequency within envelope + 3 SE");

  // Sum rule on the census arithmetic.
  double mass_bound = 0.0;
  for (const auto& r : reps_) mass_bound = std::max(mass_bound, r.sup_mass);
  const double thr = (1.0 + st_.beta) * (cfg_.census.eta - st_.eta_c);
  const auto above =
      census_sum_rule(cfg_.model, st_, cfg_.gamma, cfg_.census.eta, thr + 0.05, mass_bound);
  const auto below =
      census_sum_rule(cfg_.model, st_, cfg_.gamma, cfg_.census.eta, thr - 0.05, mass_bound);
  census["sum_rule"] = {{"threshold", thr},
                        {"mass_bound", mass_bound},
                        {"above", {{"theta", above.theta}, {"partial_sums", numbers_or_null(above.partial_sums)}, {"converges", above.converges}}},
                        {"below", {{"theta", below.theta}, {"partial_sums", numbers_or_null(below.partial_sums)}, {"converges", below.converges}}}};
  gate("census sum rule", above.converges && !below.converges,
       "converges above the threshold, diverges below");
  artifact("census.json", dump(census));
}

void Runner::run_duality(const std::vector<std::vector<double>>& terminals, json& out) {
  json rows = json::array();
  for (const auto& bump : cfg_.verify.duality_config.bumps) {
    const auto phi = bump_on_grid(bump, cfg_.grid);
    const auto rep = duality_check(cfg_.model, phi, cfg_.grid, terminals,
                                   cfg_.verify.duality_config.solver_steps,
                                   cfg_.verify.duality_config.solver_tolerance);
    rows.push_back({{"bump", {{"center", bump.center}, {"width", bump.width}, {"height", bump.height}}},
                    {"monte_carlo", rep.monte_carlo},
                    {"standard_error", rep.standard_error},
                    {"solver", rep.solver},
                    {"solver_step_change", rep.solver_step_change},
                    {"tolerance", rep.tolerance},
                    {"replicas", rep.n_replicas},
                    {"passed", rep.passed}});
    gate("duality bump at " + format_number(bump.center), rep.passed,
         "|MC - solver| = " + format_number(std::abs(rep.monte_carlo - rep.solver)) +
             " vs tolerance " + format_number(rep.tolerance));
  }
  out = {{"checks", rows}};
}

void Runner::run_verify(json& out) {
  constexpr double kPi = std::numbers::pi;
  if (cfg_.verify.kernels) {
    stage("verify-kernels");
    json closed = json::array();
    bool ok = true;
    for (double t : cfg_.verify.kernel.closed_form_times) {
      for (double alpha : {2.0, 1.0}) {
        const double w = std::pow(t, 1.0 / alpha);
        const auto kt = build_kernel(alpha, t, Grid1D(-40.0 * w, 40.0 * w, 8192));
        double err = 0.0;
        for (std::size_t i = 0; i < kt.values.size(); ++i) {
          const double x = kt.grid.x(i);
          if (std::abs(x) > 8.0 * w) continue;
          const double exact = alpha == 2.0
                                   ? std::exp(-x * x / (4.0 * t)) / std::sqrt(4.0 * kPi * t)
                                   : t / (kPi * (t * t + x * x));
          err = std::max(err, std::abs(kt.values[i] - exact));
        }
        const double norm_err = std::abs(kt.normalization() - 1.0);
        const bool pass = err <= 1e-6 && norm_err <= 1e-6;
        ok = ok && pass;
        closed.push_back({{"alpha", alpha}, {"t", t}, {"sup_error", err},
                          {"normalization_error", norm_err}, {"passed", pass}});
      }
    }
    gate("kernel closed forms", ok, "sup error and normalization within 1e-6");

    // Scaling law p_t(x) = t^{-1/alpha} p_1(x t^{-1/alpha}) at the model index.
    const double alpha = cfg_.model.alpha;
    double worst = 0.0;
    const auto k1 = build_kernel(alpha, 1.0, Grid1D(-32.0, 32.0, 4096));
    for (double t : cfg_.verify.kernel.closed_form_times) {
      const double w = std::pow(t, 1.0 / alpha);
      const auto kt = build_kernel(alpha, t, Grid1D(-32.0 * w, 32.0 * w, 4096));
      for (std::size_t i = 0; i < 4096; ++i)
        if (k1.values[i] > 1e-6 * k1.values[2048])
          worst = std::max(worst, std::abs(kt.values[i] * w - k1.values[i]) / k1.values[i]);
    }
    gate("kernel scaling law", worst <= 1e-10, "max relative deviation " + format_number(worst));

    json ineq = json::array();
    bool iok = true;
    std::uint64_t stream = 100;
    for (double a : cfg_.verify.kernel.inequality_alphas) {
      const auto n = cfg_.verify.kernel.inequality_samples;
      std::vector<KernelEstimateReport> reps;
      reps.push_back(check_kernel_difference_bound(a, 0.5, n, derive_seed(cfg_.seed, stream++)));
      for (auto& r : check_gradient_bounds(a, 0.5, 1.5, n, derive_seed(cfg_.seed, stream++)))
        reps.push_back(r);
      reps.push_back(check_tail_envelope_bound(a, n, derive_seed(cfg_.seed, stream++)));
      for (const auto& r : reps) {
        iok = iok && r.passed;
        ineq.push_back({{"inequality", r.inequality}, {"alpha", r.alpha}, {"delta", r.delta},
                        {"fitted_constant", r.fitted_constant},
                        {"refit_ratio", r.max_violation_ratio},
                        {"samples", r.sample_count}, {"passed", r.passed}});
      }
    }
    gate("kernel inequalities", iok, "fitted constants stable within 10% under doubling");
    out["kernels"] = {{"closed_forms", closed}, {"scaling_law_max_relative", worst},
                      {"inequalities", ineq}};
    if (opts_.dump_kernel) {
      const double w = std::pow(cfg_.model.t, 1.0 / alpha);
      const auto kt = build_kernel(alpha, cfg_.model.t, Grid1D(-32.0 * w, 32.0 * w, 4096));
      CsvText csv({"x", "p", "dp_dx"});
      for (std::size_t i = 0; i < kt.values.size(); ++i)
        csv.row({kt.grid.x(i), kt.values[i], kt.gradient_values[i]});
      artifact("kernel_table.csv", csv.str());
    }
    stage_done();
  }

  if (cfg_.verify.levy) {
    stage("verify-levy");
    const auto& lc = cfg_.verify.levy_config;
    json rows = json::array();
    std::uint64_t stream = 200;
    for (double kappa : lc.kappas) {
      // Truncation cut: the bias decays like r_min^{2 - kappa}.
      const double r_min = kappa <= 1.5 ? 1e-3 : 1e-2;
      const auto lap = empirical_laplace_check(kappa, lc.lambdas, lc.t, lc.paths, r_min,
                                               derive_seed(cfg_.seed, stream++));
      const auto tail = tail_bound_grid_check(kappa, {0.5, 1.0, 2.0}, {0.25, 0.5, 1.0},
                                              {0.25, 1.0}, lc.tail_paths,
                                              derive_seed(cfg_.seed, stream++));
      json lrows = json::array();
      for (const auto& r : lap.rows)
        lrows.push_back({{"lambda", r.lambda}, {"empirical", r.empirical},
                         {"standard_error", r.standard_error}, {"theory", r.theory},
                         {"truncated_theory", r.truncated_theory},
                         {"truncation_tolerance", r.tolerance}, {"passed", r.passed}});
      rows.push_back({{"kappa", kappa}, {"r_min", r_min}, {"paths", lc.paths},
                      {"laplace", lrows}, {"laplace_passed", lap.passed},
                      {"tail_fitted_C", tail.fitted_C}, {"tail_passed", tail.passed}});
      gate("levy laplace kappa=" + format_number(kappa), lap.passed,
           "E exp(-lambda L_t) within 3 SE + truncation tolerance");
      gate("levy tail bound kappa=" + format_number(kappa), tail.passed,
           "fitted C " + format_number(tail.fitted_C));
    }
    out["levy"] = rows;
    stage_done();
  }
}

void Runner::write_manifest(Command cmd, int exit_code) {
  json arts = json::object();
  for (const auto& [k, v] : checksums_) arts[k] = v;
  json gates = json::array();
  for (const auto& g : gates_)
    gates.push_back({{"name", g.name}, {"passed", g.passed}, {"detail", g.detail}});
  json m = {{"manifest_version", 1},
            {"version", std::string("superfractal ") + SUPERFRACTAL_VERSION},
            {"command", command_name(cmd)},
            {"seed", cfg_.seed},
            {"jobs", opts_.jobs},
            {"config", config_to_json(cfg_)},
            {"stages", timings_},
            {"artifacts", arts},
            {"gates", gates},
            {"exit_code", exit_code}};
  write_atomic(dir_ / "manifest.json", dump(m));
}

RunOutcome Runner::execute(Command cmd) {
  RunOutcome outcome;
  outcome.run_dir = dir_;
  const bool all = cmd == Command::All;
  Want want;
  want.simulate_artifacts = all || cmd == Command::Simulate;
  want.spectrum = all || cmd == Command::Spectrum;
  want.census = all || cmd == Command::Census;
  const bool duality = (all || cmd == Command::Verify) ? cfg_.verify.duality
                                                       : cmd == Command::LogLaplaceCheck;
  std::int64_t dual_n = cfg_.verify.duality_config.replicas > 0
                            ? cfg_.verify.duality_config.replicas
                            : cfg_.n_replicas;
  const bool main_pass = want.simulate_artifacts || want.spectrum || want.census;
  want.duality = duality && main_pass && dual_n == cfg_.n_replicas;

  try {
    fs::create_directories(dir_);
    if (main_pass) {
      stage("simulate");
      replica_pass(want, cfg_.n_replicas);
      stage_done();
      if (want.simulate_artifacts) write_simulation_artifacts();
      if (want.spectrum) {
        stage("spectrum");
        write_spectrum_artifacts();
        stage_done();
      }
      if (want.census) {
        stage("census");
        write_census_artifacts();
        stage_done();
      }
    }
    json verify;
    if (all || cmd == Command::Verify) run_verify(verify);
    if (duality) {
      std::vector<std::vector<double>> terminals;
      if (want.duality) {
        for (auto& r : reps_) terminals.push_back(std::move(r.terminal));
      } else {
        stage("duality-simulate");
        Want w;
        w.duality = true;
        replica_pass(w, dual_n);
        for (auto& r : reps_) terminals.push_back(std::move(r.terminal));
        stage_done();
      }
      stage("duality");
      json d;
      run_duality(terminals, d);
      stage_done();
      if (cmd == Command::LogLaplaceCheck)
        artifact("loglaplace.json", dump(d));
      else
        verify["duality"] = d;
    }
    if (all || cmd == Command::Verify) artifact("verify.json", dump(verify));
  } catch (const ConfigError& e) {
    outcome.exit_code = kExitConfig;
    outcome.error = e.what();
  } catch (const DomainError& e) {
    outcome.exit_code = kExitConfig;
    outcome.error = "stage " + stage_ + ": " + e.what();
  } catch (const NumericError& e) {
    outcome.exit_code = kExitNumeric;
    outcome.error = "numeric failure in stage " + stage_ + ": " + e.what();
  } catch (const fs::filesystem_error& e) {
    outcome.exit_code = kExitConfig;
    outcome.error = std::string("cannot write the run directory: ") + e.what();
    return outcome;
  } catch (const std::exception& e) {
    outcome.exit_code = kExitNumeric;
    outcome.error = "failure in stage " + stage_ + ": " + e.what();
  }
  if (outcome.exit_code == kExitOk) {
    for (const auto& g : gates_)
      if (!g.passed) outcome.exit_code = kExitGateFailed;
  }
  outcome.gates = gates_;
  try {
    write_manifest(cmd, outcome.exit_code);
  } catch (const std::exception& e) {
    outcome.exit_code = kExitConfig;
    outcome.error = std::string("cannot write manifest.json: ") + e.what();
    return outcome;
  }
  if (all && outcome.exit_code != kExitNumeric && outcome.exit_code != kExitConfig) {
    auto plots = emit_plots(dir_, log_);
    if (plots.exit_code != kExitOk) outcome.exit_code = plots.exit_code;
  }
  return outcome;
}

// Reads the lines of a CSV after the header.
std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::size_t pos = text.find('\n');
  while (pos != std::string::npos && pos + 1 < text.size()) {
    const std::size_t end = text.find('\n', pos + 1);
    const std::string line = text.substr(pos + 1, end == std::string::npos ? std::string::npos : end - pos - 1);
    std::vector<std::string> cells;
    std::size_t s = 0;
    for (;;) {
      const std::size_t c = line.find(',', s);
      cells.push_back(line.substr(s, c == std::string::npos ? std::string::npos : c - s));
      if (c == std::string::npos) break;
      s = c + 1;
    }
    if (!line.empty()) rows.push_back(cells);
    pos = end;
  }
  return rows;
}

}  // namespace

RunOutcome run(Command cmd, const RunOptions& opts, std::ostream& log) {
  RunOutcome outcome;
  if (cmd == Command::Plots) {
    if (!opts.out) {
      outcome.exit_code = kExitConfig;
      outcome.error = "plots needs --out pointing at a run directory";
      return outcome;
    }
    return emit_plots(*opts.out, log);
  }
  RunConfig cfg;
  try {
    if (opts.config_path.empty()) throw ConfigError("--config is required");
    cfg = load_config_or_manifest(opts.config_path);
    if (opts.seed) cfg.seed = *opts.seed;
    if (opts.replicas) {
      if (*opts.replicas < 1) throw ConfigError("--replicas must be at least 1");
      cfg.n_replicas = *opts.replicas;
    }
    if (opts.jobs < 1) throw ConfigError("--jobs must be at least 1");
  } catch (const ConfigError& e) {
    outcome.exit_code = kExitConfig;
    outcome.error = e.what();
    return outcome;
  }
  const fs::path dir = resolve_output_dir(opts, cfg);
  Runner runner(cfg, opts, dir, log);
  return runner.execute(cmd);
}

RunOutcome emit_plots(const fs::path& run_dir, std::ostream& log) {
  RunOutcome outcome;
  outcome.run_dir = run_dir;
  const fs::path spectrum = run_dir / "spectrum.csv";
  const fs::path manifest = run_dir / "manifest.json";
  if (!fs::exists(spectrum) || !fs::exists(manifest)) {
    outcome.exit_code = kExitConfig;
    outcome.error = "plots: " + run_dir.string() + " lacks spectrum.csv or manifest.json";
    return outcome;
  }
  RunConfig cfg;
  try {
    cfg = load_config_or_manifest(manifest.string());
  } catch (const ConfigError& e) {
    outcome.exit_code = kExitConfig;
    outcome.error = e.what();
    return outcome;
  }
  const SpectrumTheory st = derive_exponents(cfg.model);
  bool any = false;
  for (const auto& row : csv_rows(read_file(spectrum)))
    if (row.size() >= 3 && row[2] != "nan") any = true;

  const std::string beta = format_number(st.beta);
  std::string sp;
  sp += "# Estimated spectrum against (1 + beta)(eta - eta_c).\n";
  sp += "set terminal pngcairo size 800,600\nset output 'spectrum.png'\n";
  sp += "set datafile separator ','\nset key left top\n";
  sp += "set xlabel 'eta'\nset ylabel 'D(eta)'\nset xrange [0:1]\nset yrange [0:1.1]\n";
  sp += "set samples 500\n";
  sp += "beta = " + beta + "\n";
  sp += "eta_c = " + format_number(st.eta_c) + "\n";
  sp += "eta_bar_c = " + format_number(st.eta_bar_c) + "\n";
  sp += "theory(x) = (x >= eta_c && x < eta_bar_c) ? (1 + beta) * (x - eta_c) : 1/0\n";
  sp += "plot theory(x) with lines lw 2 title 'theory'";
  if (any)
    sp += ", \\\n     'spectrum.csv' skip 1 using (($1 + $2) / 2):3 with linespoints pt 7 "
          "title 'estimate'";
  sp += "\n";

  std::string hp;
  hp += "# Hoelder exponent estimates along x, coloured by value.\n";
  hp += "set terminal pngcairo size 1000,500\nset output 'holder_field.png'\n";
  hp += "set datafile separator ','\nset xlabel 'x'\nset ylabel 'eta_hat'\n";
  hp += "set yrange [0:2.1]\nset palette rgb 33,13,10\nset key off\n";
  hp += "eta_c = " + format_number(st.eta_c) + "\n";
  hp += "eta_bar_c = " + format_number(st.eta_bar_c) + "\n";
  hp += "set arrow from graph 0, first eta_c to graph 1, first eta_c nohead dt 2\n";
  hp += "set arrow from graph 0, first eta_bar_c to graph 1, first eta_bar_c nohead dt 2\n";
  hp += "plot 'holder_field.csv' skip 1 using 1:2:2 with lines lc palette\n";

  std::string jp;
  jp += "# Recorded jumps: (t - s, r) scatter and the size density against the\n";
  jp += "# compensator power law r^(-2 - beta).\n";
  jp += "set terminal pngcairo size 1200,500\nset output 'jumps.png'\n";
  jp += "set datafile separator ','\nset logscale xy\nset format xy '10^{%L}'\n";
  jp += "t = " + format_number(cfg.model.t) + "\n";
  jp += "beta = " + beta + "\n";
  jp += "slope = " + format_number(-2.0 - st.beta) + "\n";
  jp += "r0 = " + format_number(cfg.simulation.jumps_csv_min) + "\n";
  jp += "set multiplot layout 1,2\n";
  jp += "set xlabel 't - s'\nset ylabel 'r'\nset key off\n";
  jp += "plot 'jumps.csv' skip 1 using (t - $1):3 with dots\n";
  jp += "set xlabel 'r'\nset ylabel 'jumps per unit r'\nset key top right\n";
  jp += "bin(r) = 10**(floor(log10(r) * 10) / 10.0)\n";
  jp += "width(r) = bin(r) * (10**0.1 - 1)\n";
  jp += "guide(r) = r0**(-slope) * r**slope\n";
  jp += "plot 'jumps.csv' skip 1 using (bin($3)):(1.0 / width($3)) smooth frequency "
        "with points pt 7 title 'recorded', \\\n";
  jp += "     guide(x) with lines dt 2 title sprintf('slope %g', slope)\n";
  jp += "unset multiplot\n";

  write_atomic(run_dir / "spectrum.gp", sp);
  write_atomic(run_dir / "holder_field.gp", hp);
  write_atomic(run_dir / "jumps.gp", jp);
  log << "[plots] wrote spectrum.gp, holder_field.gp, jumps.gp\n";
  return outcome;
}

}  // namespace superfractal::app
