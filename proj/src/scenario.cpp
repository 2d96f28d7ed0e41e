#include "nlfp/scenario.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <future>
#include <set>
#include <sstream>

#include "json.hpp"
#include "nlfp/error.hpp"

namespace nlfp {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Strict view over a JSON object: every key must be consumed.
class Fields {
 public:
  Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key) {
    if (!has(key)) throw ConfigError("missing required key '" + where(key) + "'");
    seen_.insert(key);
    return j_.at(key);
  }

  std::string where(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  double number(const std::string& key, std::optional<double> def = std::nullopt) {
    if (!has(key)) return require(key, def);
    const json& v = raw(key);
    if (v.is_string()) {
      const auto s = v.get<std::string>();
      if (s == "inf" || s == "infinity") return INFINITY;
    }
    if (!v.is_number()) throw ConfigError(where(key) + ": expected a number");
    return v.get<double>();
  }

  std::int64_t integer(const std::string& key, std::optional<std::int64_t> def = std::nullopt) {
    if (!has(key)) return require(key, def);
    const json& v = raw(key);
    if (!v.is_number_integer()) throw ConfigError(where(key) + ": expected an integer");
    return v.get<std::int64_t>();
  }

  std::uint64_t uinteger(const std::string& key, std::optional<std::uint64_t> def = std::nullopt) {
    if (!has(key)) return require(key, def);
    const json& v = raw(key);
    if (!v.is_number_unsigned()) throw ConfigError(where(key) + ": expected a nonnegative integer");
    return v.get<std::uint64_t>();
  }

  std::string string(const std::string& key, std::optional<std::string> def = std::nullopt) {
    if (!has(key)) return require(key, def);
    const json& v = raw(key);
    if (!v.is_string()) throw ConfigError(where(key) + ": expected a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_array()) throw ConfigError(where(key) + ": expected an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) throw ConfigError(where(key) + ": expected an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key()))
        throw ConfigError("unknown key '" + it.key() + "'" + (path_.empty() ? "" : " in " + path_));
  }

 private:
  template <class T>
  T require(const std::string& key, const std::optional<T>& def) const {
    if (!def) throw ConfigError("missing required key '" + where(key) + "'");
    return *def;
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void check(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

json number_json(double v) {
  if (std::isinf(v)) return v > 0 ? json("inf") : json("-inf");
  return json(v);
}

std::vector<double> checkpoint_list(const SolverSpec& s) {
  if (s.checkpoint_times) return *s.checkpoint_times;
  std::vector<double> t{0.0};
  const double tol = 1e-9 * std::max(1.0, s.T);
  for (int k = 1;; ++k) {
    const double tk = k * s.checkpoint_interval;
    if (tk > s.T - tol) break;
    t.push_back(tk);
  }
  t.push_back(s.T);
  return t;
}

CustomCoefficientSpec parse_custom(Fields& f) {
  CustomCoefficientSpec c;
  c.beta = f.numbers("beta");
  c.gamma0 = f.number("gamma0");
  if (f.has("b")) {
    Fields b(f.raw("b"), f.where("b"));
    c.b.kind = b.string("kind");
    c.b.scale = b.number("scale", 1.0);
    c.b.width = b.number("width", 1.0);
    c.b.rate = b.number("rate", 1.0);
    b.finish();
  }
  if (f.has("E")) {
    Fields e(f.raw("E"), f.where("E"));
    c.E.kind = e.string("kind");
    c.E.scale = e.number("scale", 1.0);
    e.finish();
  }
  if (f.has("lipschitz_interval")) {
    const auto v = f.numbers("lipschitz_interval");
    check(v.size() == 2, "coefficients.lipschitz_interval: expected [lo, hi]");
    c.lipschitz_interval = {v[0], v[1]};
  }
  return c;
}

Experiment parse_experiment(const json& j, const std::string& path) {
  Fields f(j, path);
  const std::string type = f.string("type");
  Experiment out;
  if (type == "superposition") {
    SuperpositionExperiment e;
    e.tolerance = f.number("tolerance", e.tolerance);
    check(e.tolerance > 0.0, path + ".tolerance must be > 0");
    out = e;
  } else if (type == "coupling") {
    CouplingExperiment e;
    if (f.has("dt_levels")) e.dt_levels = f.numbers("dt_levels");
    e.n = static_cast<std::size_t>(f.uinteger("n", e.n));
    e.seed = f.uinteger("seed", e.seed);
    e.expect = f.string("expect", e.dt_levels.size() == 1 ? "zero" : "decreasing");
    check(!e.dt_levels.empty(), path + ".dt_levels must not be empty");
    for (std::size_t k = 0; k < e.dt_levels.size(); ++k) {
      check(e.dt_levels[k] > 0.0, path + ".dt_levels must be positive");
      if (k > 0)
        check(std::abs(2.0 * e.dt_levels[k] - e.dt_levels[k - 1]) <= 1e-12 * e.dt_levels[k - 1],
              path + ".dt_levels must form a halving chain");
    }
    check(e.n >= 1, path + ".n must be >= 1");
    check(e.expect == "decreasing" || e.expect == "zero",
          path + ".expect must be 'decreasing' or 'zero'");
    check(e.expect == "zero" || e.dt_levels.size() >= 3,
          path + ".expect 'decreasing' needs at least three dt levels");
    out = e;
  } else if (type == "lipschitz_certificate") {
    LipschitzExperiment e;
    e.R = f.number("R", e.R);
    e.p = f.number("p", e.p);
    e.q = f.number("q", e.q);
    e.p_dual = f.number("p_dual", e.p_dual);
    e.q_dual = f.number("q_dual", e.q_dual);
    e.n_pairs = static_cast<std::size_t>(f.uinteger("n_pairs", e.n_pairs));
    e.seed = f.uinteger("seed", e.seed);
    e.max_violation_rate = f.number("max_violation_rate", e.max_violation_rate);
    auto inv = [](double p) { return std::isinf(p) ? 0.0 : 1.0 / p; };
    check(e.p >= 1.0 && e.q >= 1.0 && e.p_dual >= 1.0 && e.q_dual >= 1.0,
          path + ": exponents must lie in [1, inf]");
    check(std::abs(inv(e.p) + inv(e.p_dual) - 1.0) <= 1e-12 &&
              std::abs(inv(e.q) + inv(e.q_dual) - 1.0) <= 1e-12,
          path + ": exponent duality 1/p+1/p_dual = 1/q+1/q_dual = 1 violated");
    check(e.R > 0.0, path + ".R must be > 0");
    check(e.n_pairs >= 1000, path + ".n_pairs must be >= 1000");
    check(e.max_violation_rate >= 0.0 && e.max_violation_rate <= 1.0,
          path + ".max_violation_rate must lie in [0, 1]");
    out = e;
  } else if (type == "weak_form_residual") {
    WeakFormExperiment e;
    e.center = f.number("center", e.center);
    e.radius = f.number("radius", e.radius);
    if (f.has("t")) e.t = f.number("t");
    e.tolerance = f.number("tolerance", e.tolerance);
    check(e.radius > 0.0, path + ".radius must be > 0");
    check(e.tolerance > 0.0, path + ".tolerance must be > 0");
    out = e;
  } else {
    throw ConfigError(path + ".type '" + type +
                      "' invalid; valid: superposition coupling lipschitz_certificate "
                      "weak_form_residual");
  }
  f.finish();
  return out;
}

void validate_config(const ScenarioConfig& c) {
  check(!c.name.empty(), "name must not be empty");
  (void)c.coefficient_set();
  Mesh mesh = [&] {
    try {
      return c.make_mesh();
    } catch (const DomainError& e) {
      throw ConfigError(std::string("mesh: ") + e.what());
    }
  }();
  check(c.initial.kind == "gaussian" || c.initial.kind == "indicator",
        "initial.kind must be 'gaussian' or 'indicator'");
  check(c.initial.kind != "gaussian" || c.initial.sd > 0.0, "initial.sd must be > 0");
  check(c.initial.kind != "indicator" || c.initial.hi > c.initial.lo,
        "initial: indicator needs lo < hi");
  check(c.solver.transport == "muscl" || c.solver.transport == "upwind",
        "solver.transport must be 'muscl' or 'upwind'");
  check(c.solver.checkpoint_interval > 0.0, "solver.checkpoint_interval must be > 0");
  const SolverConfig sc = c.solver_config();
  sc.validate();

  if (c.particles) {
    const auto& p = *c.particles;
    check(p.n >= 2, "particles.n must be >= 2");
    check(p.mode == "decoupled" || p.mode == "self_consistent",
          "particles.mode must be 'decoupled' or 'self_consistent'");
    check(p.mode != "self_consistent" || p.n >= 100,
          "particles.n must be >= 100 in self_consistent mode");
    check(!p.kde.bandwidth || *p.kde.bandwidth > 0.0, "particles.kde_bandwidth must be > 0");
    const double dt = p.dt.value_or(c.solver.dt);
    check(dt > 0.0, "particles.dt must be > 0");
    for (double t : sc.checkpoint_times) {
      const double k = std::round(t / dt);
      check(std::abs(k * dt - t) <= 1e-9 * std::max(1.0, t),
            "particles.dt must divide every solver checkpoint");
    }
  }
  for (std::size_t i = 0; i < c.experiments.size(); ++i) {
    const std::string path = "experiments[" + std::to_string(i) + "]";
    const auto& e = c.experiments[i];
    if (std::holds_alternative<SuperpositionExperiment>(e)) {
      check(c.particles.has_value(), path + ": superposition requires a particles block");
    } else if (const auto* ce = std::get_if<CouplingExperiment>(&e)) {
      const double dt = ce->dt_levels.front();
      for (double t : sc.checkpoint_times) {
        const double k = std::round(t / dt);
        check(std::abs(k * dt - t) <= 1e-9 * std::max(1.0, t),
              path + ": coarsest dt must divide every solver checkpoint");
      }
    } else if (const auto* le = std::get_if<LipschitzExperiment>(&e)) {
      check(-le->R >= mesh.x_min() && le->R <= mesh.x_max(), path + ": B_R must lie inside the mesh");
    } else if (const auto* we = std::get_if<WeakFormExperiment>(&e)) {
      const double t = we->t.value_or(c.solver.T);
      bool found = false;
      for (double tc : sc.checkpoint_times) found |= std::abs(tc - t) <= 1e-9 * std::max(1.0, t);
      check(found, path + ".t must be a solver checkpoint");
    }
  }
}

json to_json(const CustomCoefficientSpec& c) {
  return {{"beta", c.beta},
          {"gamma0", c.gamma0},
          {"b", {{"kind", c.b.kind}, {"scale", c.b.scale}, {"width", c.b.width}, {"rate", c.b.rate}}},
          {"E", {{"kind", c.E.kind}, {"scale", c.E.scale}}},
          {"lipschitz_interval", {c.lipschitz_interval.lo, c.lipschitz_interval.hi}}};
}

json to_json(const Experiment& e) {
  return std::visit(
      [](const auto& x) -> json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, SuperpositionExperiment>) {
          return {{"type", "superposition"}, {"tolerance", x.tolerance}};
        } else if constexpr (std::is_same_v<T, CouplingExperiment>) {
          return {{"type", "coupling"}, {"dt_levels", x.dt_levels}, {"n", x.n},
                  {"seed", x.seed},     {"expect", x.expect}};
        } else if constexpr (std::is_same_v<T, LipschitzExperiment>) {
          return {{"type", "lipschitz_certificate"},
                  {"R", x.R},
                  {"p", number_json(x.p)},
                  {"q", number_json(x.q)},
                  {"p_dual", number_json(x.p_dual)},
                  {"q_dual", number_json(x.q_dual)},
                  {"n_pairs", x.n_pairs},
                  {"seed", x.seed},
                  {"max_violation_rate", x.max_violation_rate}};
        } else {
          json j = {{"type", "weak_form_residual"},
                    {"center", x.center},
                    {"radius", x.radius},
                    {"tolerance", x.tolerance}};
          if (x.t) j["t"] = *x.t;
          return j;
        }
      },
      e);
}

}  // namespace

std::string experiment_type(const Experiment& e) {
  switch (e.index()) {
    case 0: return "superposition";
    case 1: return "coupling";
    case 2: return "lipschitz_certificate";
    default: return "weak_form_residual";
  }
}

CoefficientSet ScenarioConfig::coefficient_set() const {
  if (coefficients.preset) return preset(*coefficients.preset);
  if (coefficients.custom) return make_custom(*coefficients.custom);
  throw ConfigError("coefficients: need 'preset' or an inline 'beta' specification");
}

Mesh ScenarioConfig::make_mesh() const { return Mesh(mesh.x_min, mesh.x_max, mesh.n_cells); }

SolverConfig ScenarioConfig::solver_config() const {
  SolverConfig s;
  s.dt = solver.dt;
  s.T = solver.T;
  s.newton_tol = solver.newton_tol;
  s.newton_max_iter = solver.newton_max_iter;
  s.checkpoint_times = checkpoint_list(solver);
  s.boundary_mass_tol = solver.boundary_mass_tol;
  s.transport = solver.transport == "upwind" ? TransportScheme::kUpwind : TransportScheme::kMuscl;
  return s;
}

GridFunction ScenarioConfig::initial_density() const {
  const Mesh m = make_mesh();
  if (initial.kind == "indicator") {
    const double lo = initial.lo, hi = initial.hi;
    return project_density([lo, hi](double x) { return indicator(x, lo, hi); }, m);
  }
  const double mu = initial.mean, sd = initial.sd;
  return project_density([mu, sd](double x) { return gaussian_pdf(x, mu, sd); }, m);
}

ScenarioConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("malformed JSON at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  ScenarioConfig c;
  Fields top(j, "");
  c.name = top.string("name", c.name);
  {
    Fields f(top.raw("coefficients"), "coefficients");
    if (f.has("preset")) {
      c.coefficients.preset = f.string("preset");
    } else {
      c.coefficients.custom = parse_custom(f);
    }
    f.finish();
  }
  if (top.has("initial")) {
    Fields f(top.raw("initial"), "initial");
    c.initial.kind = f.string("kind", c.initial.kind);
    c.initial.mean = f.number("mean", c.initial.mean);
    c.initial.sd = f.number("sd", c.initial.sd);
    c.initial.lo = f.number("lo", c.initial.lo);
    c.initial.hi = f.number("hi", c.initial.hi);
    f.finish();
  }
  if (top.has("mesh")) {
    Fields f(top.raw("mesh"), "mesh");
    c.mesh.x_min = f.number("x_min", c.mesh.x_min);
    c.mesh.x_max = f.number("x_max", c.mesh.x_max);
    c.mesh.n_cells = static_cast<int>(f.integer("n_cells", c.mesh.n_cells));
    f.finish();
  }
  if (top.has("solver")) {
    Fields f(top.raw("solver"), "solver");
    auto& s = c.solver;
    s.dt = f.number("dt", s.dt);
    s.T = f.number("T", s.T);
    s.newton_tol = f.number("newton_tol", s.newton_tol);
    s.newton_max_iter = static_cast<int>(f.integer("newton_max_iter", s.newton_max_iter));
    if (f.has("checkpoint_times")) {
      check(!f.has("checkpoint_interval"),
            "solver: give either checkpoint_times or checkpoint_interval, not both");
      s.checkpoint_times = f.numbers("checkpoint_times");
    }
    s.checkpoint_interval = f.number("checkpoint_interval", s.checkpoint_interval);
    s.boundary_mass_tol = f.number("boundary_mass_tol", s.boundary_mass_tol);
    s.transport = f.string("transport", s.transport);
    f.finish();
  }
  if (top.has("particles")) {
    Fields f(top.raw("particles"), "particles");
    ParticlesSpec p;
    p.n = static_cast<std::size_t>(f.uinteger("n", p.n));
    p.seed = f.uinteger("seed", p.seed);
    p.mode = f.string("mode", p.mode);
    if (f.has("dt")) p.dt = f.number("dt");
    if (f.has("kde_bandwidth")) {
      const json& b = f.raw("kde_bandwidth");
      if (b.is_string()) {
        check(b.get<std::string>() == "silverman",
              "particles.kde_bandwidth must be 'silverman' or a positive number");
      } else if (b.is_number()) {
        p.kde.bandwidth = b.get<double>();
      } else {
        throw ConfigError("particles.kde_bandwidth must be 'silverman' or a positive number");
      }
    }
    f.finish();
    c.particles = p;
  }
  if (top.has("experiments")) {
    const json& arr = top.raw("experiments");
    check(arr.is_array(), "experiments: expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i)
      c.experiments.push_back(parse_experiment(arr[i], "experiments[" + std::to_string(i) + "]"));
  }
  c.output_dir = top.string("output_dir", c.output_dir);
  top.finish();
  validate_config(c);
  return c;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const ScenarioConfig& c) {
  json j;
  j["name"] = c.name;
  if (c.coefficients.preset)
    j["coefficients"] = {{"preset", *c.coefficients.preset}};
  else if (c.coefficients.custom)
    j["coefficients"] = to_json(*c.coefficients.custom);
  j["initial"] = {{"kind", c.initial.kind}, {"mean", c.initial.mean}, {"sd", c.initial.sd},
                  {"lo", c.initial.lo},     {"hi", c.initial.hi}};
  j["mesh"] = {{"x_min", c.mesh.x_min}, {"x_max", c.mesh.x_max}, {"n_cells", c.mesh.n_cells}};
  json s = {{"dt", c.solver.dt},
            {"T", c.solver.T},
            {"newton_tol", c.solver.newton_tol},
            {"newton_max_iter", c.solver.newton_max_iter},
            {"boundary_mass_tol", c.solver.boundary_mass_tol},
            {"transport", c.solver.transport}};
  if (c.solver.checkpoint_times)
    s["checkpoint_times"] = *c.solver.checkpoint_times;
  else
    s["checkpoint_interval"] = c.solver.checkpoint_interval;
  j["solver"] = s;
  if (c.particles) {
    const auto& p = *c.particles;
    json pj = {{"n", p.n}, {"seed", p.seed}, {"mode", p.mode}};
    if (p.dt) pj["dt"] = *p.dt;
    pj["kde_bandwidth"] = p.kde.bandwidth ? json(*p.kde.bandwidth) : json("silverman");
    j["particles"] = pj;
  }
  j["experiments"] = json::array();
  for (const auto& e : c.experiments) j["experiments"].push_back(to_json(e));
  j["output_dir"] = c.output_dir;
  return j.dump(2) + "\n";
}

bool RunSummary::passed() const {
  if (!error.empty()) return false;
  for (const auto& c : checks)
    if (!c.passed) return false;
  for (const auto& e : experiments)
    if (!e.passed) return false;
  return true;
}

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// Write to a temporary sibling, then rename into place.
void write_atomic(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    body(out);
    if (!out) throw Error("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

struct ExperimentResult {
  ExperimentOutcome outcome;
  std::string file;
  std::string csv;
};

struct Context {
  const ScenarioConfig& cfg;
  const CoefficientSet& coeffs;
  const Mesh& mesh;
  const GridFunction& u0;
  const Solution& solution;
  const EnsembleCheckpoints* ensembles;
};

ExperimentResult run_experiment(const Experiment& e, const Context& ctx) {
  ExperimentResult r;
  std::ostringstream csv;
  const DensityTrajectory& traj = ctx.solution.trajectory;
  auto& o = r.outcome;
  o.type = experiment_type(e);
  if (std::holds_alternative<SuperpositionExperiment>(e)) {
    const auto& x = std::get<SuperpositionExperiment>(e);
    const auto rep = superposition_report(traj, *ctx.ensembles, ctx.mesh, ctx.cfg.particles->kde);
    write_report_csv(csv, rep);
    o.metric = rep.max_distance();
    o.tolerance = x.tolerance;
    o.passed = o.metric <= x.tolerance;
    o.detail = summarize(rep);
  } else if (const auto* c = std::get_if<CouplingExperiment>(&e)) {
    const auto rep = coupling_experiment(ctx.coeffs, traj, ctx.u0, c->seed, c->n, c->dt_levels);
    write_report_csv(csv, rep);
    o.metric = rep.sup_path_distance;
    o.tolerance = 0.0;
    o.passed = c->expect == "zero" ? rep.sup_path_distance == 0.0 : rep.strictly_decreasing;
    o.detail = summarize(rep) + " (expect " + c->expect + ")";
  } else if (const auto* l = std::get_if<LipschitzExperiment>(&e)) {
    const auto cert = lipschitz_certificate(traj, ctx.coeffs, l->R,
                                            {l->p, l->q, l->p_dual, l->q_dual}, l->n_pairs, l->seed);
    write_report_csv(csv, cert);
    o.metric = cert.violation_rate;
    o.tolerance = l->max_violation_rate;
    o.passed = std::isfinite(cert.calibrated_C) && cert.violation_rate <= l->max_violation_rate;
    o.detail = summarize(cert);
  } else {
    const auto& w = std::get<WeakFormExperiment>(e);
    const double t = w.t.value_or(ctx.cfg.solver.T);
    const double res = weak_form_residual(traj, WeakFormTestFunction(w.center, w.radius), ctx.coeffs, t);
    csv << "report_type,key,value\n";
    char buf[128];
    for (auto [k, v] : {std::pair<const char*, double>{"center", w.center}, {"radius", w.radius},
                        {"t", t}, {"residual", res}, {"tolerance", w.tolerance}}) {
      std::snprintf(buf, sizeof buf, "weak_form_residual,%s,%.17g\n", k, v);
      csv << buf;
    }
    o.metric = res;
    o.tolerance = w.tolerance;
    o.passed = res <= w.tolerance;
    o.detail = "weak_form_residual: |residual| = " + num(res) + " at t=" + num(t);
  }
  r.csv = csv.str();
  return r;
}

}  // namespace

RunSummary run_scenario(const ScenarioConfig& cfg, const RunOptions& opts) {
  const auto start = std::chrono::steady_clock::now();
  RunSummary summary;
  summary.scenario = cfg.name;
  const fs::path dir = opts.output_dir.value_or(cfg.output_dir);

  try {
    fs::create_directories(dir);
    const CoefficientSet coeffs = cfg.coefficient_set();
    const Mesh mesh = cfg.make_mesh();
    const SolverConfig sc = cfg.solver_config();
    const double cfl = transport_cfl(coeffs, mesh, sc.dt);
    if (cfl > 1.0)
      throw ConfigError("CFL violation: dt*sup|E b|/dx = " + num(cfl) + " exceeds 1 (solver.dt, mesh.n_cells)");
    const GridFunction u0 = cfg.initial_density();

    const Solution sol = solve(u0, coeffs, sc);
    write_atomic(dir / "trajectory.csv", [&](std::ostream& os) { write_trajectory_csv(os, sol.trajectory); });
    write_atomic(dir / "monitors.csv", [&](std::ostream& os) { write_monitor_csv(os, sol.monitors); });
    summary.files = {"trajectory.csv", "monitors.csv"};

    const double drift = sol.max_mass_drift();
    const double min_u = sol.min_value();
    summary.checks.push_back({"mass_conservation", drift <= 1e-8, drift, 1e-8,
                              "max |mass - 1| over all steps = " + num(drift)});
    summary.checks.push_back({"positivity", min_u >= -1e-12, min_u, -1e-12,
                              "min u over all steps = " + num(min_u)});
    summary.diagnostics = {{"gradient_energy", sol.gradient_energy},
                           {"sup_density", bounded_density_check(sol.trajectory)}};

    std::optional<EnsembleCheckpoints> ensembles;
    if (cfg.particles) {
      const auto& p = *cfg.particles;
      const double dt = p.dt.value_or(sc.dt);
      const BrownianDriver driver(p.n, dt, static_cast<int>(std::llround(sc.T / dt)), p.seed);
      const ParticleEnsemble ens0 = sample_initial(u0, p.n, p.seed);
      ensembles = p.mode == "self_consistent"
                      ? simulate_self_consistent(ens0, coeffs, driver, p.kde, mesh, sol.trajectory.times)
                      : simulate_decoupled(ens0, sol.trajectory, coeffs, driver);
      write_atomic(dir / "ensemble.csv", [&](std::ostream& os) { write_ensemble_csv(os, *ensembles); });
      summary.files.push_back("ensemble.csv");
    }

    const Context ctx{cfg, coeffs, mesh, u0, sol, ensembles ? &*ensembles : nullptr};
    std::vector<ExperimentResult> results(cfg.experiments.size());
    const std::size_t jobs = static_cast<std::size_t>(std::max(1, opts.jobs));
    for (std::size_t first = 0; first < cfg.experiments.size(); first += jobs) {
      const std::size_t last = std::min(cfg.experiments.size(), first + jobs);
      if (jobs == 1) {
        results[first] = run_experiment(cfg.experiments[first], ctx);
        continue;
      }
      std::vector<std::future<ExperimentResult>> pending;
      for (std::size_t i = first; i < last; ++i)
        pending.push_back(std::async(std::launch::async, run_experiment, std::cref(cfg.experiments[i]),
                                     std::cref(ctx)));
      for (std::size_t i = first; i < last; ++i) results[i] = pending[i - first].get();
    }

    std::map<std::string, int> used;
    for (auto& r : results) {
      const int k = ++used[r.outcome.type];
      const std::string file = r.outcome.type + (k > 1 ? "_" + std::to_string(k) : "") + ".csv";
      write_atomic(dir / file, [&](std::ostream& os) { os << r.csv; });
      summary.files.push_back(file);
      summary.experiments.push_back(r.outcome);
    }
  } catch (const ConfigError& e) {
    throw ConfigError("scenario '" + cfg.name + "': " + e.what());
  } catch (const DomainTooSmallError& e) {
    throw DomainTooSmallError("scenario '" + cfg.name + "': " + e.what());
  } catch (const DomainError& e) {
    throw DomainError("scenario '" + cfg.name + "': " + e.what());
  } catch (const SolverError& e) {
    throw SolverError("scenario '" + cfg.name + "': " + e.what());
  } catch (const Error& e) {
    throw Error("scenario '" + cfg.name + "': " + e.what());
  }
  summary.files.push_back("summary.txt");
  summary.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_atomic(dir / "summary.txt", [&](std::ostream& os) { os << format_summary(summary); });
  return summary;
}

std::string format_summary(const RunSummary& s) {
  std::ostringstream os;
  const std::time_t now = std::time(nullptr);
  char stamp[64];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  os << "timestamp: " << stamp << " wall_time_s=" << num(s.wall_time) << "\n";
  os << "scenario: " << s.scenario << "\n";
  os << "status: " << (s.passed() ? "PASS" : "FAIL") << "\n";
  if (!s.error.empty()) os << "error: " << s.error << "\n";
  for (const auto& c : s.checks)
    os << "[" << (c.passed ? "PASS" : "FAIL") << "] check " << c.type << ": " << c.detail << "\n";
  for (const auto& e : s.experiments)
    // detail comes from summarize(), which already leads with the type.
    os << "[" << (e.passed ? "PASS" : "FAIL") << "] " << e.detail << " (metric "
       << num(e.metric) << ", tolerance " << num(e.tolerance) << ")\n";
  for (const auto& [key, value] : s.diagnostics) os << "diagnostic " << key << " = " << num(value) << "\n";
  os << "files:";
  for (const auto& f : s.files) os << " " << f;
  os << "\n";
  return os.str();
}

void write_summary(const RunSummary& s, const std::string& dir) {
  fs::create_directories(dir);
  write_atomic(fs::path(dir) / "summary.txt", [&](std::ostream& os) { os << format_summary(s); });
}

int run_and_report(const ScenarioConfig& cfg, const RunOptions& opts, RunSummary* out) {
  RunSummary summary;
  int code = 0;
  try {
    summary = run_scenario(cfg, opts);
    code = summary.passed() ? 0 : 1;
  } catch (const ConfigError& e) {
    summary.error = std::string("configuration error: ") + e.what();
    code = 2;
  } catch (const std::exception& e) {
    summary.error = std::string("runtime error: ") + e.what();
    code = 3;
  }
  if (code >= 2) {
    summary.scenario = cfg.name;
    const fs::path dir = opts.output_dir.value_or(cfg.output_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    summary.files.push_back("summary.txt");
    try {
      write_atomic(dir / "summary.txt", [&](std::ostream& os) { os << format_summary(summary); });
    } catch (const std::exception&) {
      // Output directory unusable; the caller still gets the exit code.
    }
  }
  if (out) *out = summary;
  return code;
}

}  // namespace nlfp
