#include "superfractal/config.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "superfractal/errors.hpp"

namespace superfractal {

namespace {

using json = nlohmann::json;

struct Position {
  int line = 1;
  int col = 1;
};

std::string escape_pointer_token(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '~')
      out += "~0";
    else if (c == '/')
      out += "~1";
    else
      out += c;
  }
  return out;
}

// Line and column of every value in an already well-formed JSON text,
// keyed by JSON pointer.
std::map<std::string, Position> index_positions(const std::string& text) {
  struct Frame {
    bool object = false;
    bool expect_key = true;
    std::string key;
    int index = 0;
    std::string path;
  };
  std::map<std::string, Position> pos;
  std::vector<Frame> stack;
  int line = 1, col = 1;
  std::size_t i = 0;
  auto advance = [&] {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
    ++i;
  };
  auto child_path = [&] {
    if (stack.empty()) return std::string();
    const Frame& f = stack.back();
    return f.path + "/" + (f.object ? escape_pointer_token(f.key) : std::to_string(f.index));
  };
  auto read_string = [&] {
    std::string s;
    advance();  // opening quote
    while (i < text.size() && text[i] != '"') {
      if (text[i] == '\\') {
        advance();
        if (i < text.size()) s += text[i];
      } else {
        s += text[i];
      }
      advance();
    }
    if (i < text.size()) advance();
    return s;
  };
  while (i < text.size()) {
    const char c = text[i];
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == ':') {
      advance();
    } else if (c == ',') {
      if (!stack.empty()) {
        if (stack.back().object)
          stack.back().expect_key = true;
        else
          ++stack.back().index;
      }
      advance();
    } else if (c == '}' || c == ']') {
      if (!stack.empty()) stack.pop_back();
      advance();
    } else if (c == '"' && !stack.empty() && stack.back().object && stack.back().expect_key) {
      stack.back().key = read_string();
      stack.back().expect_key = false;
    } else {
      const std::string path = child_path();
      pos[path] = {line, col};
      if (c == '{' || c == '[') {
        stack.push_back({c == '{', true, "", 0, path});
        advance();
      } else if (c == '"') {
        read_string();
      } else {
        while (i < text.size() && text[i] != ',' && text[i] != '}' && text[i] != ']' &&
               text[i] != ' ' && text[i] != '\n' && text[i] != '\t' && text[i] != '\r')
          advance();
      }
    }
  }
  return pos;
}

Position position_of_offset(const std::string& text, std::size_t offset) {
  Position p;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++p.line;
      p.col = 1;
    } else {
      ++p.col;
    }
  }
  return p;
}

class Reader {
 public:
  Reader(const std::string& text, const std::string& source)
      : source_(source), positions_(index_positions(text)) {}

  [[noreturn]] void fail(const std::string& pointer, const std::string& msg) const {
    std::string p = pointer;
    auto it = positions_.find(p);
    while (it == positions_.end() && !p.empty()) {
      p = p.substr(0, p.rfind('/'));
      it = positions_.find(p);
    }
    const Position pos = it != positions_.end() ? it->second : Position{};
    throw ConfigError(source_ + ":" + std::to_string(pos.line) + ":" + std::to_string(pos.col) +
                      ": " + msg);
  }

  // Object at `pointer` whose keys must all be in `allowed`.
  const json& object(const json& parent, const std::string& pointer, const std::string& key,
                     const std::set<std::string>& allowed, bool required) {
    static const json empty = json::object();
    const std::string p = pointer + "/" + key;
    if (!parent.contains(key)) {
      if (required) fail(pointer, "missing required section \"" + key + "\"");
      return empty;
    }
    const json& o = parent.at(key);
    if (!o.is_object()) fail(p, "\"" + key + "\" must be an object");
    check_keys(o, p, allowed);
    return o;
  }

  void check_keys(const json& o, const std::string& pointer,
                  const std::set<std::string>& allowed) const {
    for (auto it = o.begin(); it != o.end(); ++it)
      if (!allowed.count(it.key()))
        fail(pointer + "/" + escape_pointer_token(it.key()), "unknown key \"" + it.key() + "\"");
  }

  double number(const json& o, const std::string& pointer, const std::string& key,
                const double* fallback) const {
    const std::string p = pointer + "/" + key;
    if (!o.contains(key)) {
      if (!fallback) fail(pointer, "missing required key \"" + key + "\"");
      return *fallback;
    }
    const json& v = o.at(key);
    if (!v.is_number()) fail(p, "\"" + key + "\" must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(p, "\"" + key + "\" must be finite");
    return d;
  }

  double number(const json& o, const std::string& pointer, const std::string& key) const {
    return number(o, pointer, key, nullptr);
  }
  double number_or(const json& o, const std::string& pointer, const std::string& key,
                   double fallback) const {
    return number(o, pointer, key, &fallback);
  }

  std::int64_t integer(const json& o, const std::string& pointer, const std::string& key,
                       const std::int64_t* fallback) const {
    const std::string p = pointer + "/" + key;
    if (!o.contains(key)) {
      if (!fallback) fail(pointer, "missing required key \"" + key + "\"");
      return *fallback;
    }
    const json& v = o.at(key);
    if (!v.is_number_integer()) fail(p, "\"" + key + "\" must be an integer");
    return v.get<std::int64_t>();
  }
  std::int64_t integer(const json& o, const std::string& pointer, const std::string& key) const {
    return integer(o, pointer, key, nullptr);
  }
  std::int64_t integer_or(const json& o, const std::string& pointer, const std::string& key,
                          std::int64_t fallback) const {
    return integer(o, pointer, key, &fallback);
  }

  bool boolean_or(const json& o, const std::string& pointer, const std::string& key,
                  bool fallback) const {
    if (!o.contains(key)) return fallback;
    const json& v = o.at(key);
    if (!v.is_boolean()) fail(pointer + "/" + key, "\"" + key + "\" must be true or false");
    return v.get<bool>();
  }

  std::vector<double> numbers_or(const json& o, const std::string& pointer,
                                 const std::string& key, std::vector<double> fallback) const {
    if (!o.contains(key)) return fallback;
    const json& v = o.at(key);
    const std::string p = pointer + "/" + key;
    if (!v.is_array()) fail(p, "\"" + key + "\" must be an array of numbers");
    std::vector<double> out;
    for (std::size_t k = 0; k < v.size(); ++k) {
      if (!v[k].is_number()) fail(p + "/" + std::to_string(k), "array entries must be numbers");
      out.push_back(v[k].get<double>());
    }
    return out;
  }

 private:
  std::string source_;
  std::map<std::string, Position> positions_;
};

InitialMeasure read_measure(Reader& r, const json& model) {
  const json& mu = r.object(model, "/model", "mu", {"lebesgue", "atoms"}, true);
  InitialMeasure m;
  if (mu.contains("lebesgue")) {
    const json& l = r.object(mu, "/model/mu", "lebesgue", {"lo", "hi", "density"}, true);
    const std::string p = "/model/mu/lebesgue";
    LebesgueSegment s;
    s.lo = r.number(l, p, "lo");
    s.hi = r.number(l, p, "hi");
    s.density = r.number_or(l, p, "density", 1.0);
    if (!(s.hi > s.lo)) r.fail(p, "lebesgue segment needs hi > lo");
    if (!(s.density >= 0.0)) r.fail(p + "/density", "density must be nonnegative");
    m.segment = s;
  }
  if (mu.contains("atoms")) {
    const json& a = mu.at("atoms");
    const std::string p = "/model/mu/atoms";
    if (!a.is_array()) r.fail(p, "\"atoms\" must be an array of {x, mass}");
    for (std::size_t k = 0; k < a.size(); ++k) {
      const std::string pk = p + "/" + std::to_string(k);
      if (!a[k].is_object()) r.fail(pk, "atoms must be objects {x, mass}");
      r.check_keys(a[k], pk, {"x", "mass"});
      Atom at;
      at.x = r.number(a[k], pk, "x");
      at.mass = r.number(a[k], pk, "mass");
      if (!(at.mass >= 0.0)) r.fail(pk + "/mass", "atom mass must be nonnegative");
      m.atoms.push_back(at);
    }
  }
  if (!m.segment && m.atoms.empty()) r.fail("/model/mu", "mu needs \"lebesgue\" or \"atoms\"");
  return m;
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::string& source) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    const Position p = position_of_offset(text, e.byte > 0 ? e.byte - 1 : 0);
    std::string what = e.what();
    const auto cut = what.find(": ");
    if (cut != std::string::npos) what = what.substr(cut + 2);
    throw ConfigError(source + ":" + std::to_string(p.line) + ":" + std::to_string(p.col) +
                      ": " + what);
  }
  Reader r(text, source);
  if (!root.is_object()) r.fail("", "the config must be a JSON object");
  r.check_keys(root, "",
               {"seed", "n_replicas", "time_steps", "r_min", "gamma", "output_dir", "model",
                "grid", "simulation", "spectrum", "census", "verify"});

  RunConfig cfg;
  {
    if (!root.contains("seed")) r.fail("", "missing required key \"seed\"");
    const json& s = root.at("seed");
    if (!s.is_number_unsigned()) r.fail("/seed", "\"seed\" must be a nonnegative integer");
    cfg.seed = s.get<std::uint64_t>();
  }
  cfg.n_replicas = r.integer(root, "", "n_replicas");
  if (cfg.n_replicas < 1) r.fail("/n_replicas", "n_replicas must be at least 1");
  cfg.time_steps = r.integer(root, "", "time_steps");
  if (cfg.time_steps < 1) r.fail("/time_steps", "time_steps must be at least 1");
  cfg.r_min = r.number(root, "", "r_min");
  if (!(cfg.r_min > 0.0)) r.fail("/r_min", "r_min must be positive");
  cfg.gamma = r.number(root, "", "gamma");
  if (root.contains("output_dir")) {
    if (!root.at("output_dir").is_string()) r.fail("/output_dir", "output_dir must be a string");
    cfg.output_dir = root.at("output_dir").get<std::string>();
  }

  const json& model = r.object(root, "", "model", {"alpha", "beta", "a", "b", "t", "mu"}, true);
  cfg.model.alpha = r.number(model, "/model", "alpha");
  cfg.model.beta = r.number(model, "/model", "beta");
  cfg.model.a = r.number(model, "/model", "a");
  cfg.model.b = r.number(model, "/model", "b");
  cfg.model.t = r.number(model, "/model", "t");
  cfg.model.mu = read_measure(r, model);
  const ValidationReport vr = validate_params(cfg.model);
  if (!vr.violations.empty()) r.fail("/model", "invalid model: " + vr.violations.front());

  const json& grid = r.object(root, "", "grid", {"x_min", "x_max", "n_points"}, true);
  const double x_min = r.number(grid, "/grid", "x_min");
  const double x_max = r.number(grid, "/grid", "x_max");
  const std::int64_t n_points = r.integer(grid, "/grid", "n_points");
  if (!(x_max > x_min)) r.fail("/grid", "grid needs x_max > x_min");
  if (n_points < 2 || (n_points & (n_points - 1)) != 0)
    r.fail("/grid/n_points", "n_points must be a power of two, at least 2");
  cfg.grid = Grid1D(x_min, x_max, static_cast<std::size_t>(n_points));

  const SpectrumTheory st = derive_exponents(cfg.model);
  const double gamma_hi = 1e-2 * st.eta_c / cfg.model.alpha;
  if (!(cfg.gamma > 0.0 && cfg.gamma < gamma_hi))
    r.fail("/gamma", "gamma must lie in (0, 1e-2 eta_c / alpha) = (0, " +
                         std::to_string(gamma_hi) + ")");

  const json& sim = r.object(root, "", "simulation",
                             {"record_min", "geometric", "representation", "jumps_csv_min"}, false);
  cfg.simulation.record_min = r.number_or(sim, "/simulation", "record_min", 0.0);
  if (cfg.simulation.record_min < 0.0)
    r.fail("/simulation/record_min", "record_min must be nonnegative");
  cfg.simulation.geometric = r.boolean_or(sim, "/simulation", "geometric", true);
  cfg.simulation.representation = r.boolean_or(sim, "/simulation", "representation", true);
  cfg.simulation.jumps_csv_min = r.number_or(sim, "/simulation", "jumps_csv_min", 1e-4);

  const json& spec = r.object(
      root, "", "spectrum", {"bin_lo", "bin_hi", "bin_width", "octaves", "theta_fraction", "gate"},
      false);
  SpectrumConfig& sc = cfg.spectrum;
  sc.bin_lo = r.number_or(spec, "/spectrum", "bin_lo", sc.bin_lo);
  sc.bin_hi = r.number_or(spec, "/spectrum", "bin_hi", sc.bin_hi);
  sc.bin_width = r.number_or(spec, "/spectrum", "bin_width", sc.bin_width);
  if (!(sc.bin_width > 0.0 && sc.bin_hi > sc.bin_lo))
    r.fail("/spectrum", "bins need bin_width > 0 and bin_hi > bin_lo");
  if (!(sc.bin_lo < st.eta_c && sc.bin_hi > st.eta_bar_c))
    r.fail("/spectrum", "bins must cover (eta_c, eta_bar_c) = (" + std::to_string(st.eta_c) +
                            ", " + std::to_string(st.eta_bar_c) + ")");
  sc.octaves = static_cast<int>(r.integer_or(spec, "/spectrum", "octaves", sc.octaves));
  if (sc.octaves < 4) r.fail("/spectrum/octaves", "octaves must be at least 4");
  sc.theta_fraction = r.number_or(spec, "/spectrum", "theta_fraction", sc.theta_fraction);
  const json& gate = r.object(spec, "/spectrum", "gate", {"etas", "tolerance", "monotone"}, false);
  sc.gate.etas = r.numbers_or(gate, "/spectrum/gate", "etas", {});
  for (double e : sc.gate.etas)
    if (!(e > sc.bin_lo && e < sc.bin_hi))
      r.fail("/spectrum/gate/etas", "gated exponents must lie inside the bins");
  sc.gate.tolerance = r.number_or(gate, "/spectrum/gate", "tolerance", sc.gate.tolerance);
  sc.gate.monotone = r.boolean_or(gate, "/spectrum/gate", "monotone", sc.gate.monotone);

  const json& cen = r.object(root, "", "census",
                             {"eta", "j_max", "max_balls", "m", "theta", "rho", "nu", "c", "Q",
                              "R", "n_min", "n_max"},
                             false);
  CensusConfig& cc = cfg.census;
  cc.eta = r.number_or(cen, "/census", "eta", cc.eta);
  if (!(cc.eta > st.eta_c && cc.eta < st.eta_bar_c))
    r.fail("/census/eta", "census eta must lie in (eta_c, eta_bar_c)");
  cc.j_max = static_cast<int>(r.integer_or(cen, "/census", "j_max", 0));
  cc.max_balls = static_cast<std::size_t>(r.integer_or(cen, "/census", "max_balls", 10000));
  CensusParams& cp = cc.params;
  cp.m = r.number_or(cen, "/census", "m", cp.m);
  cp.eta = cc.eta;
  cp.theta = r.number_or(cen, "/census", "theta", 0.0);
  cp.gamma = cfg.gamma;
  cp.rho = r.number_or(cen, "/census", "rho", 0.0);
  cp.nu = r.number_or(cen, "/census", "nu", 0.0);
  cp.c = r.number_or(cen, "/census", "c", 0.0);
  cp.Q = static_cast<int>(r.integer_or(cen, "/census", "Q", cp.Q));
  cp.R = static_cast<int>(r.integer_or(cen, "/census", "R", cp.R));
  cp.n_min = static_cast<int>(r.integer_or(cen, "/census", "n_min", cp.n_min));
  cp.n_max = static_cast<int>(r.integer_or(cen, "/census", "n_max", cp.n_max));
  {
    // theta needs the terminal density; check the rest against a unit field.
    CensusParams probe = cp;
    std::vector<double> unit(cfg.grid.size(), 1.0);
    const auto bad = resolve_census_params(probe, st, unit, cfg.grid);
    if (!bad.empty()) r.fail("/census", "census parameters: " + bad.front());
  }

  const json& ver = r.object(root, "", "verify",
                             {"kernels", "levy", "duality", "kernel", "levy_config", "duality_config"},
                             false);
  VerifyConfig& vc = cfg.verify;
  vc.kernels = r.boolean_or(ver, "/verify", "kernels", true);
  vc.levy = r.boolean_or(ver, "/verify", "levy", true);
  vc.duality = r.boolean_or(ver, "/verify", "duality", true);
  const json& kv = r.object(ver, "/verify", "kernel",
                            {"closed_form_times", "inequality_samples", "inequality_alphas"}, false);
  vc.kernel.closed_form_times =
      r.numbers_or(kv, "/verify/kernel", "closed_form_times", vc.kernel.closed_form_times);
  vc.kernel.inequality_samples =
      r.integer_or(kv, "/verify/kernel", "inequality_samples", vc.kernel.inequality_samples);
  vc.kernel.inequality_alphas =
      r.numbers_or(kv, "/verify/kernel", "inequality_alphas", vc.kernel.inequality_alphas);
  const json& lv =
      r.object(ver, "/verify", "levy_config", {"kappas", "lambdas", "paths", "tail_paths", "t"}, false);
  vc.levy_config.kappas = r.numbers_or(lv, "/verify/levy_config", "kappas", vc.levy_config.kappas);
  vc.levy_config.lambdas =
      r.numbers_or(lv, "/verify/levy_config", "lambdas", vc.levy_config.lambdas);
  vc.levy_config.paths = r.integer_or(lv, "/verify/levy_config", "paths", vc.levy_config.paths);
  vc.levy_config.tail_paths =
      r.integer_or(lv, "/verify/levy_config", "tail_paths", vc.levy_config.tail_paths);
  vc.levy_config.t = r.number_or(lv, "/verify/levy_config", "t", vc.levy_config.t);
  if (vc.levy_config.paths < 1 || vc.levy_config.tail_paths < 1)
    r.fail("/verify/levy_config", "path counts must be positive");
  for (double k : vc.levy_config.kappas)
    if (!(k > 1.0 && k < 2.0)) r.fail("/verify/levy_config/kappas", "kappa must lie in (1, 2)");
  const json& dv = r.object(ver, "/verify", "duality_config",
                            {"bumps", "replicas", "solver_steps", "solver_tolerance"}, false);
  DualityConfig& dc = vc.duality_config;
  if (dv.contains("bumps")) {
    const json& b = dv.at("bumps");
    const std::string p = "/verify/duality_config/bumps";
    if (!b.is_array() || b.empty()) r.fail(p, "\"bumps\" must be a nonempty array");
    dc.bumps.clear();
    for (std::size_t k = 0; k < b.size(); ++k) {
      const std::string pk = p + "/" + std::to_string(k);
      if (!b[k].is_object()) r.fail(pk, "bumps must be objects {center, width, height}");
      r.check_keys(b[k], pk, {"center", "width", "height"});
      DualityConfig::Bump bump;
      bump.center = r.number(b[k], pk, "center");
      bump.width = r.number(b[k], pk, "width");
      bump.height = r.number_or(b[k], pk, "height", 1.0);
      if (!(bump.width > 0.0 && bump.height >= 0.0))
        r.fail(pk, "bump needs width > 0 and height >= 0");
      dc.bumps.push_back(bump);
    }
  }
  dc.replicas = r.integer_or(dv, "/verify/duality_config", "replicas", 0);
  dc.solver_steps = r.integer_or(dv, "/verify/duality_config", "solver_steps", dc.solver_steps);
  dc.solver_tolerance =
      r.number_or(dv, "/verify/duality_config", "solver_tolerance", dc.solver_tolerance);
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), path);
}

json config_to_json(const RunConfig& cfg) {
  json mu = json::object();
  if (cfg.model.mu.segment) {
    const auto& s = *cfg.model.mu.segment;
    mu["lebesgue"] = {{"lo", s.lo}, {"hi", s.hi}, {"density", s.density}};
  }
  if (!cfg.model.mu.atoms.empty()) {
    json atoms = json::array();
    for (const auto& a : cfg.model.mu.atoms) atoms.push_back({{"x", a.x}, {"mass", a.mass}});
    mu["atoms"] = atoms;
  }
  const auto& cp = cfg.census.params;
  json bumps = json::array();
  for (const auto& b : cfg.verify.duality_config.bumps)
    bumps.push_back({{"center", b.center}, {"width", b.width}, {"height", b.height}});
  return {
      {"seed", cfg.seed},
      {"n_replicas", cfg.n_replicas},
      {"time_steps", cfg.time_steps},
      {"r_min", cfg.r_min},
      {"gamma", cfg.gamma},
      {"output_dir", cfg.output_dir},
      {"model",
       {{"alpha", cfg.model.alpha},
        {"beta", cfg.model.beta},
        {"a", cfg.model.a},
        {"b", cfg.model.b},
        {"t", cfg.model.t},
        {"mu", mu}}},
      {"grid",
       {{"x_min", cfg.grid.x_min()}, {"x_max", cfg.grid.x_max()}, {"n_points", cfg.grid.size()}}},
      {"simulation",
       {{"record_min", cfg.simulation.record_min},
        {"geometric", cfg.simulation.geometric},
        {"representation", cfg.simulation.representation},
        {"jumps_csv_min", cfg.simulation.jumps_csv_min}}},
      {"spectrum",
       {{"bin_lo", cfg.spectrum.bin_lo},
        {"bin_hi", cfg.spectrum.bin_hi},
        {"bin_width", cfg.spectrum.bin_width},
        {"octaves", cfg.spectrum.octaves},
        {"theta_fraction", cfg.spectrum.theta_fraction},
        {"gate",
         {{"etas", cfg.spectrum.gate.etas},
          {"tolerance", cfg.spectrum.gate.tolerance},
          {"monotone", cfg.spectrum.gate.monotone}}}}},
      {"census",
       {{"eta", cfg.census.eta},
        {"j_max", cfg.census.j_max},
        {"max_balls", cfg.census.max_balls},
        {"m", cp.m},
        {"theta", cp.theta},
        {"rho", cp.rho},
        {"nu", cp.nu},
        {"c", cp.c},
        {"Q", cp.Q},
        {"R", cp.R},
        {"n_min", cp.n_min},
        {"n_max", cp.n_max}}},
      {"verify",
       {{"kernels", cfg.verify.kernels},
        {"levy", cfg.verify.levy},
        {"duality", cfg.verify.duality},
        {"kernel",
         {{"closed_form_times", cfg.verify.kernel.closed_form_times},
          {"inequality_samples", cfg.verify.kernel.inequality_samples},
          {"inequality_alphas", cfg.verify.kernel.inequality_alphas}}},
        {"levy_config",
         {{"kappas", cfg.verify.levy_config.kappas},
          {"lambdas", cfg.verify.levy_config.lambdas},
          {"paths", cfg.verify.levy_config.paths},
          {"tail_paths", cfg.verify.levy_config.tail_paths},
          {"t", cfg.verify.levy_config.t}}},
        {"duality_config",
         {{"bumps", bumps},
          {"replicas", cfg.verify.duality_config.replicas},
          {"solver_steps", cfg.verify.duality_config.solver_steps},
          {"solver_tolerance", cfg.verify.duality_config.solver_tolerance}}}}}};
}

std::vector<double> bump_on_grid(const DualityConfig::Bump& b, const Grid1D& grid) {
  std::vector<double> phi(grid.size(), 0.0);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double u = (grid.x(i) - b.center) / b.width;
    if (std::abs(u) < 1.0) phi[i] = b.height * (1.0 - u * u) * (1.0 - u * u);
  }
  return phi;
}

}  // namespace superfractal
