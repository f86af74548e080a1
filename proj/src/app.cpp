#include "resostab/app.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <set>
#include <sstream>

#include <CLI11.hpp>

namespace resostab::app {

namespace fs = std::filesystem;

namespace {

constexpr double kJupiterMass = 1.0 / 1047.348644;
constexpr double kSaturnMass = 1.0 / 3497.901768;

std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string csv_text(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

// Strict reader over one JSON object: every key must be consumed before finish().
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError((path_.empty() ? std::string("config") : "'" + path_ + "'") +
                                           " must be a JSON object");
  }

  std::string key(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }

  bool has(const std::string& k) const { return j_.contains(k); }

  const json* get(const std::string& k) {
    seen_.insert(k);
    const auto it = j_.find(k);
    return it == j_.end() ? nullptr : &*it;
  }

  const json& require(const std::string& k) {
    const json* v = get(k);
    if (!v) throw ConfigError("missing key '" + key(k) + "'");
    return *v;
  }

  double as_num(const json& v, const std::string& k) const {
    try {
      return to_double(v);
    } catch (const ConfigError&) {
      throw ConfigError("key '" + key(k) + "' must be a number");
    }
  }

  double num(const std::string& k, double def) {
    const json* v = get(k);
    return v ? as_num(*v, k) : def;
  }
  double num(const std::string& k) { return as_num(require(k), k); }

  long long integer(const std::string& k, long long def) {
    const json* v = get(k);
    return v ? as_int(*v, k) : def;
  }
  long long as_int(const json& v, const std::string& k) const {
    if (v.is_number_integer() || v.is_number_unsigned()) return v.get<long long>();
    if (v.is_number_float()) {
      const double d = v.get<double>();
      if (std::floor(d) == d && std::abs(d) < 9e15) return static_cast<long long>(d);
    }
    throw ConfigError("key '" + key(k) + "' must be an integer");
  }

  bool boolean(const std::string& k, bool def) {
    const json* v = get(k);
    if (!v) return def;
    if (!v->is_boolean()) throw ConfigError("key '" + key(k) + "' must be true or false");
    return v->get<bool>();
  }

  std::string str(const std::string& k, const std::string& def) {
    const json* v = get(k);
    if (!v) return def;
    if (!v->is_string()) throw ConfigError("key '" + key(k) + "' must be a string");
    return v->get<std::string>();
  }

  std::vector<double> nums(const std::string& k, std::vector<double> def, std::size_t exact = 0) {
    const json* v = get(k);
    if (!v) return def;
    if (!v->is_array()) throw ConfigError("key '" + key(k) + "' must be an array of numbers");
    std::vector<double> out;
    for (const auto& e : *v) out.push_back(as_num(e, k));
    if (exact && out.size() != exact)
      throw ConfigError("key '" + key(k) + "' must have " + std::to_string(exact) + " entries");
    return out;
  }

  std::vector<long long> ints(const std::string& k, std::vector<long long> def) {
    const json* v = get(k);
    if (!v) return def;
    if (!v->is_array()) throw ConfigError("key '" + key(k) + "' must be an array of integers");
    std::vector<long long> out;
    for (const auto& e : *v) out.push_back(as_int(e, k));
    return out;
  }

  Reader sub(const std::string& k) { return Reader(require(k), key(k)); }

  void finish() const {
    for (const auto& item : j_.items())
      if (!seen_.count(item.key())) throw ConfigError("unknown key '" + key(item.key()) + "'");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

double positive(double x, const std::string& name) {
  if (!(x > 0) || !std::isfinite(x)) throw ConfigError("key '" + name + "' must be positive and finite");
  return x;
}

double nonnegative(double x, const std::string& name) {
  if (!(x >= 0) || !std::isfinite(x)) throw ConfigError("key '" + name + "' must be non-negative");
  return x;
}

ScheduleConfig parse_schedule(Reader r, bool restricted) {
  ScheduleConfig s;
  const std::string mode = r.str("mode", "tight");
  if (mode == "tight") {
    s.mode = QMode::tight;
  } else if (mode == "grid") {
    s.mode = QMode::grid;
  } else if (mode == "fixed") {
    s.fixed = true;
  } else {
    throw ConfigError("key '" + r.key("mode") + "' must be one of tight, grid, fixed");
  }
  s.m = static_cast<int>(r.integer("m", 1));
  s.p = r.num("p", 0.3);
  if (restricted) {
    const auto q = r.nums("q", {0.3, 0.3, 0.3, 0.3}, 4);
    std::copy(q.begin(), q.end(), s.q.begin());
  } else {
    s.q[0] = r.num("q1", 0.3);
    s.q[1] = r.num("q2", 0.3);
  }
  s.slack = r.num("slack", 1e-9);
  s.m_cap = static_cast<int>(r.integer("m_cap", 1000));
  s.p_grid = r.nums("p_grid", s.p_grid);
  s.q_grid = r.nums("q_grid", s.q_grid);
  r.finish();
  if (s.fixed && s.m < 1) throw ConfigError("key '" + r.key("m") + "' must be at least 1");
  if (s.m_cap < 1) throw ConfigError("key '" + r.key("m_cap") + "' must be at least 1");
  if (s.p_grid.empty() || s.q_grid.empty()) throw ConfigError("schedule grids must not be empty");
  return s;
}

Axis parse_axis(Reader& parent, const std::string& name, Axis def, int coarse) {
  def.coarse = coarse;
  const json* v = parent.get(name);
  if (!v) return def;
  const std::string k = parent.key(name);
  if (v->is_array()) {
    if (v->size() != 2) throw ConfigError("key '" + k + "' must be [lo, hi]");
    def.lo = parent.as_num((*v)[0], name);
    def.hi = parent.as_num((*v)[1], name);
  } else {
    Reader a(*v, k);
    def.lo = a.num("lo");
    def.hi = a.num("hi");
    def.coarse = static_cast<int>(a.integer("coarse", coarse));
    def.log_scale = a.boolean("log", def.log_scale);
    a.finish();
  }
  if (def.lo == def.hi) def.coarse = 1;
  return def;
}

SearchSpace parse_search(const json* j, const std::string& path, const std::vector<Axis>& defaults,
                         int default_coarse) {
  SearchSpace sp;
  if (!j) {
    sp.axes = defaults;
    for (auto& a : sp.axes) a.coarse = default_coarse;
    return sp;
  }
  Reader r(*j, path);
  const int coarse = static_cast<int>(r.integer("coarse", default_coarse));
  for (const auto& a : defaults) sp.axes.push_back(parse_axis(r, a.name, a, coarse));
  sp.rounds = static_cast<int>(r.integer("rounds", sp.rounds));
  sp.shrink = r.num("shrink", sp.shrink);
  sp.refine_points = static_cast<int>(r.integer("refine_points", sp.refine_points));
  sp.n_threads = static_cast<unsigned>(r.integer("threads", 0));
  r.finish();
  try {
    sp.validate();
  } catch (const std::exception& e) {
    throw ConfigError("key '" + path + "': " + e.what());
  }
  return sp;
}

void apply_schedule(const ScheduleConfig& sc, QMode& mode, double& slack, int& m_cap, std::vector<double>& pg,
                    std::vector<double>& qg) {
  mode = sc.mode;
  slack = sc.slack;
  m_cap = sc.m_cap;
  pg = sc.p_grid;
  qg = sc.q_grid;
}

double eps_from(Reader& r, bool& given) {
  const bool has_log = r.has("log10_eps"), has_eps = r.has("eps");
  if (has_log && has_eps) throw ConfigError("keys 'log10_eps' and 'eps' are mutually exclusive");
  given = has_log || has_eps;
  if (has_log) {
    const double le = r.num("log10_eps");
    if (std::isnan(le) || le == INFINITY) throw ConfigError("key 'log10_eps' must be finite or -inf");
    return le;
  }
  if (has_eps) return std::log10(nonnegative(r.num("eps"), "eps"));
  return 0.0;
}

}  // namespace

json number(double x) {
  if (std::isfinite(x)) return json(x);
  if (std::isnan(x)) return json("nan");
  return json(x > 0 ? "inf" : "-inf");
}

double to_double(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf" || s == "+inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    if (s == "nan") return NAN;
  }
  throw ConfigError("not a number");
}

// ------------------------------------------------------------------ planetary config

bool PlanetaryConfig::eps_zero() const {
  if (masses) return (*masses)[0] == 0.0 && (*masses)[1] == 0.0;
  return std::isinf(log10_eps) && log10_eps < 0;
}

PlanetaryProblem PlanetaryConfig::problem(double le) const {
  PlanetaryProblem pb;
  if (masses) {
    pb.mass = MassConfig(m0, (*masses)[0], (*masses)[1], G);
    pb.res = locate_resonance(pb.mass, lambda_from_axis(pb.mass, 0, a1), p_int, q_int);
  } else {
    pb = make_planetary_problem(le, G, m0, m2_over_m1, a1, p_int, q_int);
  }
  pb.hp = hp;
  pb.rho = rho_rel * pb.lambda_max();
  pb.R = R_rel * pb.lambda_max();
  pb.xi_mode = xi_mode;
  pb.e_init = e_init;
  pb.xi0_common = xi0;
  apply_schedule(schedule, pb.q_mode, pb.slack, pb.m_cap, pb.p_grid, pb.q_grid);
  if (schedule.fixed) pb.fixed_schedule = Schedule{schedule.m, schedule.p, schedule.q[0], schedule.q[1]};
  pb.Rf_cap = Rf_cap_rel;
  return pb;
}

PlanetaryConfig parse_planetary_config(const json& cfg, const Overrides& ov) {
  Reader r(cfg, "");
  PlanetaryConfig c;
  r.str("kind", "planetary");
  r.get("comment");
  c.G = r.num("G", 4.0 * std::numbers::pi * std::numbers::pi);
  c.m0 = positive(r.num("m0", 1.0), "m0");
  c.log10_eps = eps_from(r, c.eps_given);
  if (r.has("masses")) {
    if (c.eps_given) throw ConfigError("key 'masses' excludes 'log10_eps' and 'eps'");
    const auto m = r.nums("masses", {}, 2);
    c.masses = std::array<double, 2>{nonnegative(m[0], "masses"), nonnegative(m[1], "masses")};
    c.eps_given = true;
    c.log10_eps = std::log10(m[0] / c.m0);
  }
  c.m2_over_m1 = positive(r.num("m2_over_m1", kSaturnMass / kJupiterMass), "m2_over_m1");
  c.a1 = positive(r.num("a1", c.a1), "a1");
  {
    const auto res = r.ints("resonance", {5, 2});
    if (res.size() != 2 || res[0] < 1 || res[1] < 1) throw ConfigError("key 'resonance' must be [p, q] with p, q >= 1");
    c.p_int = static_cast<int>(res[0]);
    c.q_int = static_cast<int>(res[1]);
  }
  {
    const auto e = r.nums("e_init", {c.e_init[0], c.e_init[1]}, 2);
    c.e_init = {e[0], e[1]};
  }
  const std::string xm = r.str("xi_mode", "per_body");
  if (xm == "per_body") {
    c.xi_mode = XiMode::per_body;
  } else if (xm == "common") {
    c.xi_mode = XiMode::common;
  } else {
    throw ConfigError("key 'xi_mode' must be per_body or common");
  }
  c.xi0 = nonnegative(r.num("xi0", 0.0), "xi0");
  c.rho_rel = nonnegative(r.num("rho_rel", 0.0), "rho_rel");
  c.R_rel = nonnegative(r.num("R_rel", 0.0), "R_rel");
  if (r.has("hp_model")) {
    Reader h = r.sub("hp_model");
    c.hp.hp_scale = positive(h.num("scale"), "hp_model.scale");
    c.hp.hp_lambda_s = h.num("lambda_s", 0.0);
    h.finish();
  }
  if (r.has("widths")) {
    Reader w = r.sub("widths");
    c.widths = std::array<double, 3>{positive(w.num("r_rel"), "widths.r_rel"), positive(w.num("s"), "widths.s"),
                                     positive(w.num("beta", 1.0), "widths.beta")};
    w.finish();
  }
  c.schedule = r.has("schedule") ? parse_schedule(r.sub("schedule"), false) : ScheduleConfig{};
  c.search = parse_search(r.get("search"), "search",
                          {{"r_rel", 1e-8, 1e-4, true, 9}, {"s", 1e-3, 0.5, true, 9}, {"beta", 0.8, 1.25, true, 9}},
                          9);
  if (r.has("sweep")) {
    Reader s = r.sub("sweep");
    c.sweep_log10_eps = s.nums("log10_eps", {});
    if (const json* rows = s.get("rows")) {
      if (!rows->is_array()) throw ConfigError("key 'sweep.rows' must be an array");
      for (std::size_t i = 0; i < rows->size(); ++i) {
        Reader row((*rows)[i], "sweep.rows[" + std::to_string(i) + "]");
        PlanetaryRowSpec spec;
        spec.log10_eps = row.num("log10_eps");
        spec.r_rel = positive(row.num("r_rel"), row.key("r_rel"));
        spec.s = positive(row.num("s"), row.key("s"));
        spec.beta = positive(row.num("beta", 1.0), row.key("beta"));
        row.finish();
        c.sweep_rows.push_back(spec);
      }
    }
    s.finish();
    if (c.sweep_log10_eps.empty() && c.sweep_rows.empty())
      throw ConfigError("key 'sweep' needs 'log10_eps' or 'rows'");
  }
  if (r.has("calibrate")) {
    Reader k = r.sub("calibrate");
    PlanetaryRowSpec spec;
    spec.log10_eps = k.num("log10_eps");
    spec.r_rel = positive(k.num("r_rel"), "calibrate.r_rel");
    spec.s = positive(k.num("s"), "calibrate.s");
    spec.beta = positive(k.num("beta", 1.0), "calibrate.beta");
    c.calibrate_m = static_cast<int>(k.integer("m", 0));
    k.finish();
    if (c.calibrate_m < 1) throw ConfigError("key 'calibrate.m' must be at least 1");
    c.calibrate_at = spec;
  }
  c.Rf_cap_rel = nonnegative(r.num("Rf_cap_rel", 0.0), "Rf_cap_rel");
  c.time_unit_years = positive(r.num("time_unit_years", 1.0), "time_unit_years");
  c.seed = static_cast<std::uint64_t>(r.integer("seed", 1));
  r.finish();
  if (ov.seed) c.seed = *ov.seed;
  return c;
}

// ------------------------------------------------------------------ restricted config

bool RestrictedConfig::eps_zero() const { return std::isinf(log10_eps) && log10_eps < 0; }

RestrictedConfig parse_restricted_config(const json& cfg, const std::string& base_dir, const Overrides& ov) {
  Reader r(cfg, "");
  RestrictedConfig c;
  r.str("kind", "restricted");
  r.get("comment");
  {
    fs::path p = r.str("harmonic_file", "");
    if (p.empty()) throw ConfigError("missing key 'harmonic_file'");
    if (p.is_relative() && !base_dir.empty()) p = fs::path(base_dir) / p;
    c.harmonic_file = p.string();
  }
  c.log10_eps = eps_from(r, c.eps_given);
  c.params.Gm0 = positive(r.num("Gm0", 1.0), "Gm0");
  c.params.omega_g = positive(r.num("omega_g", 1.0), "omega_g");
  {
    const auto res = r.ints("resonance", {3, 1});
    if (res.size() != 2 || res[0] < 1 || res[1] < 1) throw ConfigError("key 'resonance' must be [p, q] with p, q >= 1");
    c.params.p_int = static_cast<int>(res[0]);
    c.params.q_int = static_cast<int>(res[1]);
  }
  c.params.time_unit_years = positive(r.num("time_unit_years", 1.0), "time_unit_years");
  if (r.has("widths")) {
    Reader w = r.sub("widths");
    c.rho_L = nonnegative(w.num("rho_L", 0.0), "widths.rho_L");
    c.rho_G = nonnegative(w.num("rho_G", 0.0), "widths.rho_G");
    const bool any = w.has("r_L") || w.has("r_G") || w.has("s_l") || w.has("s_g");
    if (any)
      c.widths = std::array<double, 4>{positive(w.num("r_L"), "widths.r_L"), positive(w.num("r_G"), "widths.r_G"),
                                       positive(w.num("s_l"), "widths.s_l"), positive(w.num("s_g"), "widths.s_g")};
    w.finish();
  }
  c.L_init = nonnegative(r.num("L_init", 0.0), "L_init");
  c.G_init = nonnegative(r.num("G_init", 0.0), "G_init");
  if (r.has("e0")) c.e0 = r.num("e0");
  if (c.e0 && !(*c.e0 >= 0 && *c.e0 < 1)) throw ConfigError("key 'e0' must lie in [0, 1)");
  {
    const std::string est = r.str("estimator", "majorant");
    if (est == "majorant") {
      c.estimator.estimator = Estimator::majorant;
    } else if (est == "sampled") {
      c.estimator.estimator = Estimator::sampled;
    } else {
      throw ConfigError("key 'estimator' must be majorant or sampled");
    }
    c.estimator.n_points = static_cast<std::size_t>(r.integer("n_points", 0));
    if (c.estimator.estimator == Estimator::sampled && c.estimator.n_points == 0) c.estimator.n_points = 100000;
  }
  c.estimator.seed = static_cast<std::uint64_t>(r.integer("seed", 1));
  c.preliminary_averaging = static_cast<int>(r.integer("preliminary_averaging", 0));
  if (r.has("caps")) {
    Reader k = r.sub("caps");
    c.caps.degree = static_cast<int>(k.integer("degree", c.caps.degree));
    c.caps.harmonic = static_cast<int>(k.integer("harmonic", c.caps.harmonic));
    k.finish();
  }
  c.schedule = r.has("schedule") ? parse_schedule(r.sub("schedule"), true) : ScheduleConfig{};
  c.search = parse_search(r.get("search"), "search",
                          {{"r_L", 1e-9, 1e-1, true, 7},
                           {"r_G", 1e-9, 1e-1, true, 7},
                           {"s_l", 1e-3, 2.0, true, 7},
                           {"s_g", 1e-3, 2.0, true, 7}},
                          7);
  c.real_sup_points = static_cast<std::size_t>(r.integer("real_sup_points", 20000));
  if (r.has("discard_threshold")) c.discard_threshold = nonnegative(r.num("discard_threshold"), "discard_threshold");
  if (r.has("verify")) {
    Reader v = r.sub("verify");
    c.verify.periods = positive(v.num("periods", c.verify.periods), "verify.periods");
    c.verify.steps_per_period = static_cast<int>(v.integer("steps_per_period", c.verify.steps_per_period));
    c.verify.sample_every = static_cast<std::size_t>(v.integer("sample_every", 64));
    c.verify.drift_tol = positive(v.num("drift_tol", c.verify.drift_tol), "verify.drift_tol");
    c.verify.g_slack = nonnegative(v.num("g_slack", c.verify.g_slack), "verify.g_slack");
    c.verify.write_trajectory = v.boolean("write_trajectory", true);
    if (v.has("initial")) {
      Reader ini = v.sub("initial");
      c.verify.initial = {ini.num("L", NAN), ini.num("G", NAN), ini.num("l", 0.0), ini.num("g", 0.0)};
      ini.finish();
    }
    v.finish();
    if (c.verify.steps_per_period < 1 || c.verify.sample_every < 1)
      throw ConfigError("keys 'verify.steps_per_period' and 'verify.sample_every' must be at least 1");
  }
  if (r.has("sweep")) {
    Reader s = r.sub("sweep");
    c.sweep_log10_eps = s.nums("log10_eps", {});
    const auto Ns = s.ints("N", {0, 1});
    c.sweep_N.assign(Ns.begin(), Ns.end());
    c.sweep_min_years = nonnegative(s.num("min_years", 0.0), "sweep.min_years");
    s.finish();
    if (c.sweep_log10_eps.empty()) throw ConfigError("missing key 'sweep.log10_eps'");
    for (int n : c.sweep_N)
      if (n != 0 && n != 1) throw ConfigError("key 'sweep.N' entries must be 0 or 1");
  }
  r.finish();
  if (ov.seed) c.estimator.seed = *ov.seed;
  if (ov.preliminary_averaging) c.preliminary_averaging = *ov.preliminary_averaging;
  if (c.preliminary_averaging != 0 && c.preliminary_averaging != 1)
    throw ConfigError("key 'preliminary_averaging' must be 0 or 1");
  return c;
}

json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
}

// ------------------------------------------------------------------ serialization

json to_json(const PlanetaryPoint& pt, double tu) {
  const auto& w = pt.widths;
  const auto& b = pt.bounds;
  const auto& rep = pt.report;
  const auto& res = pt.input.resonance;
  json j;
  j["feasible"] = pt.feasible;
  j["failing"] = pt.failing;
  j["violation"] = number(pt.violation);
  j["widths"] = {{"rho", number(w.rho())}, {"r", number(w.r())},   {"s", number(w.s())},
                 {"xi", number(w.xi())},   {"u", number(w.u())},   {"beta", number(w.beta())}};
  j["bounds"] = {{"eta0", number(b.eta0)},     {"gamma0", number(b.gamma0)}, {"delta", number(b.delta)},
                 {"Xi0", number(b.Xi0)},       {"Gamma0", number(b.Gamma0)}, {"f0_norm", number(b.f0_norm)},
                 {"g0_norm", number(b.g0_norm)}};
  j["schedule"] = {{"m", pt.schedule.m},
                   {"p", number(pt.schedule.p)},
                   {"q1", number(pt.schedule.q1)},
                   {"q2", number(pt.schedule.q2)}};
  j["resonance"] = {{"p", res.p_int},
                    {"q", res.q_int},
                    {"Lambda0", {number(res.Lambda0[0]), number(res.Lambda0[1])}},
                    {"omega", {number(res.omega[0]), number(res.omega[1])}},
                    {"T", number(res.T)}};
  j["convexity"] = {{"kappa", number(pt.input.convexity.kappa)}, {"K", number(pt.input.convexity.K)}};
  j["R"] = number(pt.input.R);
  j["xi0_body"] = {number(pt.input.xi0_body[0]), number(pt.input.xi0_body[1])};
  j["xi0"] = number(pt.input.xi0);
  const auto& f = rep.flags;
  j["report"] = {{"C1", number(rep.C1)},
                 {"C2", number(rep.C2)},
                 {"t_bar_internal", number(rep.t_bar)},
                 {"t_bar_years", number(rep.t_bar * tu)},
                 {"log10_t_bar_internal", number(rep.log10_t_bar)},
                 {"unbounded", rep.unbounded},
                 {"R_tilde", number(rep.R_tilde)},
                 {"Delta_aa", number(rep.Delta_aa)},
                 {"Delta_cart", number(rep.Delta_cart)},
                 {"Rf_tbar", number(rep.Rf_tbar)},
                 {"Rf_0", number(rep.Rf_0)},
                 {"N_minus", number(rep.N_minus)},
                 {"e_bar_0", {number(rep.e_bar0[0]), number(rep.e_bar0[1])}},
                 {"e_bar_tbar", {number(rep.e_bar_tbar[0]), number(rep.e_bar_tbar[1])}},
                 {"conditions",
                  {{"c1_positive", f.c1_positive},
                   {"c1_margin", number(f.c1_margin)},
                   {"xi_cover", f.xi_cover},
                   {"xi_cover_margin", number(f.xi_cover_margin)},
                   {"momentum", f.momentum},
                   {"momentum_margin", number(f.momentum_margin)},
                   {"momentum_rf", f.momentum_rf},
                   {"momentum_rf_margin", number(f.momentum_rf_margin)}}}};
  return j;
}

json to_json(const RestrictedPoint& pt) {
  const auto& s = pt.setup;
  const auto& w = s.widths;
  const auto& b = pt.input.bounds;
  const auto& rep = pt.report;
  auto arr4 = [](const std::array<double, 4>& a) {
    return json::array({number(a[0]), number(a[1]), number(a[2]), number(a[3])});
  };
  auto band = [](const EccentricityBand& e) {
    return json{{"e_lo", number(e.e_lo)},
                {"e_hi", number(e.e_hi)},
                {"A_plus", number(e.A_plus)},
                {"A_minus", number(e.A_minus)},
                {"clamped", e.clamped}};
  };
  json j;
  j["feasible"] = pt.feasible;
  j["failing"] = pt.failing;
  j["violation"] = number(pt.violation);
  j["setup"] = {{"eps", number(s.eps)},       {"L0", number(s.L0)},         {"G0", number(s.G0)},
                {"omega_l", number(s.omega[0])}, {"omega_g", number(s.omega[1])}, {"T", number(s.T)},
                {"kappa", number(s.kappa)},   {"K", number(s.K)},           {"time_unit_years", number(s.time_unit_years)},
                {"resonance", {s.p_int, s.q_int}}};
  j["widths"] = {{"rho_L", number(w.rho_L())}, {"rho_G", number(w.rho_G())}, {"r_L", number(w.r_L())},
                 {"r_G", number(w.r_G())},     {"s_l", number(w.s_l())},     {"s_g", number(w.s_g())}};
  j["bounds"] = {{"eta0", arr4(b.eta0)},
                 {"gamma0", arr4(b.gamma0)},
                 {"delta", number(b.delta)},
                 {"f0_norm", number(b.f0_norm)},
                 {"g0_norm", number(b.g0_norm)},
                 {"nonresonant_empty", pt.bounds.nonresonant_empty}};
  j["schedule"] = {{"m", pt.schedule.m}, {"p", number(pt.schedule.p)}, {"q", arr4(pt.schedule.q)}};
  j["initial"] = {{"L_init", number(pt.input.L_init)},
                  {"G_init", number(pt.input.G_init)},
                  {"e0", number(pt.input.e0)},
                  {"H1_sup_complex", number(pt.input.H1_sup_complex)},
                  {"H1_sup_real", number(pt.input.H1_sup_real)},
                  {"transform_shift_L", number(pt.input.transform_shift_L)}};
  j["report"] = {{"C3", number(rep.C3)},
                 {"C4", number(rep.C4)},
                 {"t_bar_internal", number(rep.t_bar)},
                 {"t_bar_years", number(rep.t_bar * s.time_unit_years)},
                 {"log10_t_bar_internal", number(rep.log10_t_bar)},
                 {"unbounded", rep.unbounded},
                 {"V", number(rep.V)},
                 {"W", number(rep.W)},
                 {"Delta", arr4(rep.Delta)},
                 {"L_tilde", number(rep.L_tilde)},
                 {"Lf_0", number(rep.Lf_0)},
                 {"Lf_tbar", number(rep.Lf_tbar)},
                 {"g_check",
                  {{"ok", rep.g_check.ok},
                   {"margin", number(rep.g_check.margin)},
                   {"lhs", number(rep.g_check.lhs)},
                   {"rhs", number(rep.g_check.rhs)}}},
                 {"band_0", band(rep.band_0)},
                 {"band_tbar", band(rep.band_tbar)},
                 {"c3_positive", rep.c3_positive}};
  return j;
}

json to_json(const ScanResult& scan, const std::vector<std::string>& axes, const std::vector<std::string>& aux) {
  auto point = [&](const std::vector<double>& x, const PointEval& e) {
    json p;
    for (std::size_t i = 0; i < x.size() && i < axes.size(); ++i) p[axes[i]] = number(x[i]);
    p["feasible"] = e.feasible;
    p["objective"] = number(e.objective);
    p["violation"] = number(e.violation);
    p["failing"] = e.failing;
    for (std::size_t i = 0; i < e.aux.size() && i < aux.size(); ++i) p[aux[i]] = number(e.aux[i]);
    return p;
  };
  json j;
  j["found"] = scan.found;
  j["tightest_failure"] = scan.tightest_failure;
  if (scan.found) j["best"] = point(scan.best_x, scan.best);
  json trace = json::array();
  for (const auto& t : scan.trace) {
    json p = point(t.x, t.eval);
    p["round"] = t.round;
    trace.push_back(std::move(p));
  }
  j["trace"] = std::move(trace);
  j["pareto"] = scan.pareto;
  return j;
}

std::string stability_csv(const std::vector<TableRow>& rows) {
  std::ostringstream os;
  os << "log10_eps,m,t_bar_years,t_bar_internal,Rf_over_maxLambda,e1_bar,e2_bar,log10_t_bar_years,feasible,"
        "failing\n";
  for (const auto& r : rows)
    os << fmt(r.log_eps) << ',' << r.m << ',' << fmt(r.t_bar_years) << ',' << fmt(r.t_bar_internal) << ','
       << fmt(r.Rf_rel) << ',' << fmt(r.e_bar[0]) << ',' << fmt(r.e_bar[1]) << ',' << fmt(r.log10_t_bar_years)
       << ',' << (r.feasible ? 1 : 0) << ',' << csv_text(r.failing) << '\n';
  return os.str();
}

std::string widths_csv(const std::vector<TableRow>& rows) {
  std::ostringstream os;
  os << "log10_eps,r_over_maxLambda,s,abs_one_minus_beta,xi\n";
  for (const auto& r : rows)
    os << fmt(r.log_eps) << ',' << fmt(r.r_rel) << ',' << fmt(r.s) << ',' << fmt(r.one_minus_beta) << ','
       << fmt(r.xi) << '\n';
  return os.str();
}

AveragingRow averaging_row(int N, double log_eps, const RestrictedPoint& pt) {
  AveragingRow row;
  row.N = N;
  row.log_eps = log_eps;
  row.feasible = pt.feasible;
  row.failing = pt.failing;
  row.unbounded = pt.report.unbounded;
  row.m = pt.schedule.m;
  row.t_bar_internal = pt.report.t_bar;
  row.t_bar_years = pt.report.t_bar * pt.setup.time_unit_years;
  row.log10_t_bar_years = pt.report.log10_t_bar + std::log10(pt.setup.time_unit_years);
  return row;
}

std::string averaging_csv(const std::vector<AveragingRow>& rows) {
  std::ostringstream os;
  os << "N,m,log10_eps,t_bar_years,t_bar_internal,log10_t_bar_years,feasible,failing\n";
  for (const auto& r : rows)
    os << r.N << ',' << r.m << ',' << fmt(r.log_eps) << ',' << fmt(r.t_bar_years) << ',' << fmt(r.t_bar_internal)
       << ',' << fmt(r.log10_t_bar_years) << ',' << (r.feasible ? 1 : 0) << ',' << csv_text(r.failing) << '\n';
  return os.str();
}

std::string trace_csv(const ScanResult& scan, const std::vector<std::string>& axes,
                      const std::vector<std::string>& aux) {
  std::ostringstream os;
  os << "index,round";
  for (const auto& a : axes) os << ',' << a;
  os << ",feasible,objective,violation";
  for (const auto& a : aux) os << ',' << a;
  os << ",failing\n";
  for (std::size_t i = 0; i < scan.trace.size(); ++i) {
    const auto& t = scan.trace[i];
    os << i << ',' << t.round;
    for (double x : t.x) os << ',' << fmt(x);
    os << ',' << (t.eval.feasible ? 1 : 0) << ',' << fmt(t.eval.objective) << ',' << fmt(t.eval.violation);
    for (std::size_t k = 0; k < aux.size(); ++k) os << ',' << (k < t.eval.aux.size() ? fmt(t.eval.aux[k]) : "");
    os << ',' << csv_text(t.eval.failing) << '\n';
  }
  return os.str();
}

// ------------------------------------------------------------------ planetary commands

namespace {

const std::vector<std::string> kPlanetaryAxes{"r_rel", "s", "beta"};
const std::vector<std::string> kPlanetaryAux{"m", "t_bar_internal", "Rf_over_maxLambda", "e1_bar", "e2_bar", "xi"};
const std::vector<std::string> kRestrictedAxes{"r_L", "r_G", "s_l", "s_g"};
const std::vector<std::string> kRestrictedAux{"m", "t_bar_internal", "Lf_tbar"};

void require_eps(bool given) {
  if (!given) throw ConfigError("missing key 'log10_eps'");
}

// Applies the optional calibration block, returning the problem-independent HP model.
HPModel calibrated_hp(const PlanetaryConfig& c, json& info) {
  if (!c.calibrate_at) return c.hp;
  const auto& k = *c.calibrate_at;
  const auto cal = calibrate_hp_scale(c.problem(k.log10_eps), k.r_rel, k.s, k.beta, c.calibrate_m);
  info = {{"log10_eps", number(k.log10_eps)}, {"target_m", c.calibrate_m}, {"attained_m", cal.m},
          {"exact", cal.exact},               {"hp_scale", number(cal.hp_scale)}};
  HPModel hp = c.hp;
  hp.hp_scale = cal.hp_scale;
  return hp;
}

TableRow sentinel_row(double le) {
  TableRow row;
  row.log_eps = le;
  row.feasible = true;
  row.unbounded = true;
  row.t_bar_internal = row.t_bar_years = row.log10_t_bar_years = INFINITY;
  return row;
}

json row_json(const TableRow& r) {
  return {{"log10_eps", number(r.log_eps)},
          {"feasible", r.feasible},
          {"unbounded", r.unbounded},
          {"failing", r.failing},
          {"m", r.m},
          {"t_bar_years", number(r.t_bar_years)},
          {"t_bar_internal", number(r.t_bar_internal)},
          {"log10_t_bar_years", number(r.log10_t_bar_years)},
          {"Rf_over_maxLambda", number(r.Rf_rel)},
          {"e_bar", {number(r.e_bar[0]), number(r.e_bar[1])}},
          {"r_over_maxLambda", number(r.r_rel)},
          {"s", number(r.s)},
          {"abs_one_minus_beta", number(r.one_minus_beta)},
          {"xi", number(r.xi)}};
}

std::string describe(double t_years, int m) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "m=%d t_bar=%.3e yr", m, t_years);
  return buf;
}

}  // namespace

CommandResult cmd_planetary(const PlanetaryConfig& c) {
  require_eps(c.eps_given);
  if (!c.widths) throw ConfigError("missing key 'widths'");
  CommandResult out;
  if (c.eps_zero()) {
    const auto row = sentinel_row(c.log10_eps);
    out.report = {{"kind", "planetary"}, {"sentinel", "eps = 0: unperturbed, stability time unbounded"},
                  {"row", row_json(row)}};
    out.message = "eps = 0: unbounded stability time";
    out.files = {{"planetary.json", out.report.dump(2)}, {"stability.csv", stability_csv({row})},
                 {"widths.csv", widths_csv({row})}};
    return out;
  }
  json cal;
  PlanetaryConfig cc = c;
  cc.hp = calibrated_hp(c, cal);
  const auto pb = cc.problem();
  const auto& w = *c.widths;
  const auto pt = evaluate_planetary_point(pb, w[0], w[1], w[2]);
  const double le = std::log10(pb.mass.eps());
  const auto row = planetary_row(le, pt, c.time_unit_years);
  out.report = {{"kind", "planetary"},
                {"log10_eps", number(le)},
                {"masses", {number(pb.mass.m0()), number(pb.mass.m1()), number(pb.mass.m2())}},
                {"hp_scale", number(cc.hp.hp_scale)},
                {"hp_lambda_s", number(cc.hp.hp_lambda_s)},
                {"point", to_json(pt, c.time_unit_years)},
                {"row", row_json(row)}};
  if (!cal.is_null()) out.report["calibration"] = cal;
  out.files = {{"planetary.json", out.report.dump(2)}, {"stability.csv", stability_csv({row})},
               {"widths.csv", widths_csv({row})}};
  if (pt.feasible) {
    out.message = "feasible: " + describe(row.t_bar_years, row.m);
  } else {
    out.exit_code = kInfeasible;
    out.message = "infeasible: " + pt.failing;
  }
  return out;
}

CommandResult cmd_scan_planetary(const PlanetaryConfig& c) {
  require_eps(c.eps_given);
  CommandResult out;
  if (c.eps_zero()) {
    const auto row = sentinel_row(c.log10_eps);
    out.report = {{"kind", "planetary"}, {"sentinel", "eps = 0: unperturbed, stability time unbounded"},
                  {"row", row_json(row)}};
    out.message = "eps = 0: unbounded stability time";
    out.files = {{"scan.json", out.report.dump(2)}, {"stability.csv", stability_csv({row})},
                 {"widths.csv", widths_csv({row})}};
    return out;
  }
  json cal;
  PlanetaryConfig cc = c;
  cc.hp = calibrated_hp(c, cal);
  const auto pb = cc.problem();
  const auto sc = optimize_planetary(pb, c.search);
  const double le = std::log10(pb.mass.eps());
  out.report = {{"kind", "planetary"},
                {"log10_eps", number(le)},
                {"hp_scale", number(cc.hp.hp_scale)},
                {"scan", to_json(sc.scan, kPlanetaryAxes, kPlanetaryAux)}};
  if (!cal.is_null()) out.report["calibration"] = cal;
  std::vector<TableRow> rows;
  if (sc.scan.found) {
    rows.push_back(planetary_row(le, sc.best, c.time_unit_years));
    out.report["best"] = to_json(sc.best, c.time_unit_years);
    out.report["reverified"] = sc.reverified;
    out.report["row"] = row_json(rows.back());
    out.message = "best: " + describe(rows.back().t_bar_years, rows.back().m);
    if (!sc.reverified) {
      out.exit_code = kInfeasible;
      out.message += " (re-verification failed)";
    }
  } else {
    TableRow row;
    row.log_eps = le;
    row.failing = sc.scan.tightest_failure;
    rows.push_back(row);
    out.exit_code = kInfeasible;
    out.message = "no feasible point; tightest failure: " + sc.scan.tightest_failure;
  }
  out.files = {{"scan.json", out.report.dump(2)},
               {"scan_trace.csv", trace_csv(sc.scan, kPlanetaryAxes, kPlanetaryAux)},
               {"stability.csv", stability_csv(rows)},
               {"widths.csv", widths_csv(rows)}};
  return out;
}

CommandResult cmd_tables_planetary(const PlanetaryConfig& c) {
  if (c.sweep_log10_eps.empty() && c.sweep_rows.empty()) throw ConfigError("missing key 'sweep'");
  if (c.masses) throw ConfigError("key 'masses' cannot be combined with an epsilon sweep");
  json cal;
  PlanetaryConfig cc = c;
  cc.hp = calibrated_hp(c, cal);
  std::vector<TableRow> rows;
  if (!c.sweep_rows.empty()) {
    auto specs = c.sweep_rows;
    std::stable_sort(specs.begin(), specs.end(),
                     [](const PlanetaryRowSpec& a, const PlanetaryRowSpec& b) { return a.log10_eps < b.log10_eps; });
    for (const auto& sp : specs) {
      if (std::isinf(sp.log10_eps) && sp.log10_eps < 0) {
        rows.push_back(sentinel_row(sp.log10_eps));
        continue;
      }
      const auto pt = evaluate_planetary_point(cc.problem(sp.log10_eps), sp.r_rel, sp.s, sp.beta);
      rows.push_back(planetary_row(sp.log10_eps, pt, c.time_unit_years));
    }
  } else {
    rows = epsilon_sweep(
        c.sweep_log10_eps, [&](double le) { return cc.problem(le); }, c.search, c.time_unit_years);
  }
  CommandResult out;
  json jr = json::array();
  std::size_t feasible = 0;
  for (const auto& r : rows) {
    jr.push_back(row_json(r));
    feasible += r.feasible;
  }
  out.report = {{"kind", "planetary"}, {"hp_scale", number(cc.hp.hp_scale)},
                {"hp_lambda_s", number(cc.hp.hp_lambda_s)}, {"rows", jr}};
  if (!cal.is_null()) out.report["calibration"] = cal;
  out.files = {{"tables.json", out.report.dump(2)}, {"stability.csv", stability_csv(rows)},
               {"widths.csv", widths_csv(rows)}};
  out.message = std::to_string(feasible) + " of " + std::to_string(rows.size()) + " rows feasible";
  if (feasible == 0) out.exit_code = kInfeasible;
  return out;
}

// ------------------------------------------------------------------ restricted commands

namespace {

struct RestrictedContext {
  HarmonicData data;
  bool discard_ok = true;
  std::string discard_note;
};

RestrictedContext load_harmonics(const RestrictedConfig& c) {
  RestrictedContext ctx;
  if (!fs::exists(c.harmonic_file)) throw ConfigError("key 'harmonic_file': no such file '" + c.harmonic_file + "'");
  try {
    ctx.data = read_harmonic_data(c.harmonic_file);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("key 'harmonic_file': ") + e.what());
  }
  if (c.discard_threshold) {
    if (ctx.data.discarded_max < 0) {
      ctx.discard_ok = false;
      ctx.discard_note = "harmonic file does not state its largest discarded coefficient";
    } else if (ctx.data.discarded_max > *c.discard_threshold) {
      ctx.discard_ok = false;
      ctx.discard_note = "largest discarded harmonic coefficient exceeds discard_threshold";
    }
  }
  return ctx;
}

bool unperturbed(const RestrictedConfig& c, const RestrictedContext& ctx) {
  if (c.eps_zero()) return true;
  for (const auto& [key, coef] : ctx.data.series.terms())
    if (coef != cplx(0.0, 0.0)) return false;
  return true;
}

RestrictedSetup base_setup(const RestrictedConfig& c, const RestrictedContext& ctx, double le) {
  RestrictedParams par = c.params;
  par.eps = std::pow(10.0, le);
  const RestrictedWidthSet w(c.rho_L, c.rho_G, 1e-4, 1e-4, 0.1, 0.1);
  try {
    return make_restricted_setup(par, w, ctx.data.series);
  } catch (const DomainError& e) {
    throw ConfigError(std::string("key 'harmonic_file': ") + e.what());
  }
}

RestrictedProblem restricted_problem(const RestrictedConfig& c, const RestrictedContext& ctx, double le, int N) {
  const auto base = base_setup(c, ctx, le);
  RestrictedProblem pb = make_restricted_problem(base, N, c.caps);
  pb.estimator = c.estimator;
  pb.rho_L = c.rho_L;
  pb.rho_G = c.rho_G;
  pb.L_init = c.L_init;
  pb.G_init = c.G_init;
  pb.e0 = c.e0 ? *c.e0 : eccentricity_of(base.L0, base.G0);
  apply_schedule(c.schedule, pb.q_mode, pb.slack, pb.m_cap, pb.p_grid, pb.q_grid);
  if (c.schedule.fixed) pb.fixed_schedule = RestrictedSchedule{c.schedule.m, c.schedule.p, c.schedule.q};
  pb.real_sup_points = c.real_sup_points;
  pb.seed = c.estimator.seed;
  return pb;
}

AveragingRow sentinel4(int N, double le) {
  AveragingRow r;
  r.N = N;
  r.log_eps = le;
  r.feasible = r.unbounded = true;
  r.t_bar_internal = r.t_bar_years = r.log10_t_bar_years = INFINITY;
  return r;
}

json row4_json(const AveragingRow& r) {
  return {{"N", r.N},
          {"log10_eps", number(r.log_eps)},
          {"m", r.m},
          {"t_bar_years", number(r.t_bar_years)},
          {"t_bar_internal", number(r.t_bar_internal)},
          {"log10_t_bar_years", number(r.log10_t_bar_years)},
          {"feasible", r.feasible},
          {"unbounded", r.unbounded},
          {"failing", r.failing}};
}

CommandResult restricted_sentinel(const RestrictedConfig& c, const char* json_name) {
  CommandResult out;
  const auto row = sentinel4(c.preliminary_averaging, c.log10_eps);
  out.report = {{"kind", "restricted"},
                {"sentinel", "unperturbed: eps = 0 or all harmonic coefficients vanish"},
                {"row", row4_json(row)}};
  out.message = "unperturbed: unbounded stability time";
  out.files = {{json_name, out.report.dump(2)}, {"averaging.csv", averaging_csv({row})}};
  return out;
}

void fail_on_discard(CommandResult& out, const RestrictedContext& ctx) {
  out.report["harmonic_truncation"] = {{"ok", ctx.discard_ok},
                                       {"discarded_max", number(ctx.data.discarded_max)},
                                       {"note", ctx.discard_note}};
  if (!ctx.discard_ok) {
    out.exit_code = kInfeasible;
    out.message = "infeasible: " + ctx.discard_note;
  }
}

}  // namespace

CommandResult cmd_restricted(const RestrictedConfig& c) {
  require_eps(c.eps_given);
  if (!c.widths) throw ConfigError("missing key 'widths'");
  const auto ctx = load_harmonics(c);
  if (unperturbed(c, ctx)) return restricted_sentinel(c, "restricted.json");
  const auto pb = restricted_problem(c, ctx, c.log10_eps, c.preliminary_averaging);
  const auto pt = evaluate_restricted_point(pb, *c.widths, true);
  const auto row = averaging_row(c.preliminary_averaging, c.log10_eps, pt);
  CommandResult out;
  out.report = {{"kind", "restricted"},
                {"log10_eps", number(c.log10_eps)},
                {"preliminary_averaging", c.preliminary_averaging},
                {"averaging_discarded", number(pb.prepared.averaging_discarded)},
                {"point", to_json(pt)},
                {"row", row4_json(row)}};
  if (pt.feasible) {
    out.message = "feasible: " + describe(row.t_bar_years, row.m);
  } else {
    out.exit_code = kInfeasible;
    out.message = "infeasible: " + pt.failing;
  }
  fail_on_discard(out, ctx);
  out.files = {{"restricted.json", out.report.dump(2)}, {"averaging.csv", averaging_csv({row})}};
  return out;
}

CommandResult cmd_scan_restricted(const RestrictedConfig& c) {
  require_eps(c.eps_given);
  const auto ctx = load_harmonics(c);
  if (unperturbed(c, ctx)) return restricted_sentinel(c, "scan.json");
  const auto pb = restricted_problem(c, ctx, c.log10_eps, c.preliminary_averaging);
  const auto sc = optimize_restricted(pb, c.search);
  CommandResult out;
  out.report = {{"kind", "restricted"},
                {"log10_eps", number(c.log10_eps)},
                {"preliminary_averaging", c.preliminary_averaging},
                {"scan", to_json(sc.scan, kRestrictedAxes, kRestrictedAux)}};
  std::vector<AveragingRow> rows;
  if (sc.scan.found) {
    rows.push_back(averaging_row(c.preliminary_averaging, c.log10_eps, sc.best));
    out.report["best"] = to_json(sc.best);
    out.report["reverified"] = sc.reverified;
    out.report["row"] = row4_json(rows.back());
    out.message = "best: " + describe(rows.back().t_bar_years, rows.back().m);
    if (!sc.reverified) {
      out.exit_code = kInfeasible;
      out.message += " (re-verification failed)";
    }
  } else {
    AveragingRow row;
    row.N = c.preliminary_averaging;
    row.log_eps = c.log10_eps;
    row.failing = sc.scan.tightest_failure;
    rows.push_back(row);
    out.exit_code = kInfeasible;
    out.message = "no feasible point; tightest failure: " + sc.scan.tightest_failure;
  }
  fail_on_discard(out, ctx);
  out.files = {{"scan.json", out.report.dump(2)},
               {"scan_trace.csv", trace_csv(sc.scan, kRestrictedAxes, kRestrictedAux)},
               {"averaging.csv", averaging_csv(rows)}};
  return out;
}

CommandResult cmd_tables_restricted(const RestrictedConfig& c) {
  if (c.sweep_log10_eps.empty()) throw ConfigError("missing key 'sweep'");
  const auto ctx = load_harmonics(c);
  auto grid = c.sweep_log10_eps;
  std::sort(grid.begin(), grid.end());
  std::vector<AveragingRow> rows;
  json frontier = json::object();
  for (int N : c.sweep_N) {
    double best = -INFINITY;
    for (double le : grid) {
      RestrictedConfig cl = c;
      cl.log10_eps = le;
      AveragingRow row;
      if (unperturbed(cl, ctx)) {
        row = sentinel4(N, le);
      } else {
        const auto pb = restricted_problem(c, ctx, le, N);
        if (c.widths) {
          row = averaging_row(N, le, evaluate_restricted_point(pb, *c.widths, true));
        } else {
          const auto sc = optimize_restricted(pb, c.search);
          if (sc.scan.found) {
            row = averaging_row(N, le, sc.best);
            row.feasible = row.feasible && sc.reverified;
          } else {
            row.N = N;
            row.log_eps = le;
            row.failing = sc.scan.tightest_failure;
          }
        }
      }
      if (row.feasible && row.t_bar_years >= c.sweep_min_years) best = std::max(best, le);
      rows.push_back(row);
    }
    frontier[std::to_string(N)] = number(best);
  }
  CommandResult out;
  json jr = json::array();
  for (const auto& r : rows) jr.push_back(row4_json(r));
  out.report = {{"kind", "restricted"}, {"min_years", number(c.sweep_min_years)}, {"frontier", frontier},
                {"rows", jr}};
  fail_on_discard(out, ctx);
  std::ostringstream msg;
  msg << "feasible log10 eps frontier:";
  for (int N : c.sweep_N) msg << " N=" << N << ": " << fmt(to_double(frontier[std::to_string(N)]));
  if (out.exit_code == kSuccess) out.message = msg.str();
  out.files = {{"tables.json", out.report.dump(2)}, {"averaging.csv", averaging_csv(rows)}};
  return out;
}

CommandResult cmd_verify(const RestrictedConfig& c) {
  require_eps(c.eps_given);
  const auto ctx = load_harmonics(c);
  RestrictedConfig cc = c;
  const bool flat = unperturbed(c, ctx);
  const double le = flat ? -INFINITY : c.log10_eps;
  auto pb = restricted_problem(cc, ctx, flat ? 0.0 : le, c.preliminary_averaging);
  if (flat) pb.base.eps = 0.0;

  State4 y0{c.verify.initial[0], c.verify.initial[1], c.verify.initial[2], c.verify.initial[3]};
  const double e_start = c.e0 ? *c.e0 : eccentricity_of(pb.base.L0, pb.base.G0);
  if (std::isnan(y0[0])) y0[0] = pb.base.L0;
  if (std::isnan(y0[1])) y0[1] = y0[0] * std::sqrt(1.0 - e_start * e_start);
  if (!(y0[0] > 0) || !(y0[1] > 0) || y0[1] > y0[0]) throw ConfigError("key 'verify.initial': need 0 < G <= L");
  pb.e0 = eccentricity_of(y0[0], y0[1]);

  CommandResult out;
  out.report = {{"kind", "restricted"}, {"log10_eps", number(le)}, {"preliminary_averaging", c.preliminary_averaging}};
  const double tolL = 1e-12 * pb.base.L0;
  if (std::abs(y0[0] - pb.base.L0) > c.L_init + tolL || std::abs(y0[1] - pb.base.G0) > c.G_init + tolL) {
    out.exit_code = kInfeasible;
    out.message = "infeasible: initial state lies outside the ball given by L_init, G_init";
    out.files = {{"verify.json", out.report.dump(2)}};
    return out;
  }

  RestrictedPoint pt;
  RestrictedSetup setup = pb.base;
  if (!flat) {
    if (c.widths) {
      pt = evaluate_restricted_point(pb, *c.widths, true);
    } else {
      const auto sc = optimize_restricted(pb, c.search);
      if (!sc.scan.found) {
        out.exit_code = kInfeasible;
        out.message = "no feasible configuration; tightest failure: " + sc.scan.tightest_failure;
        out.files = {{"verify.json", out.report.dump(2)}};
        return out;
      }
      pt = sc.best;
    }
    out.report["point"] = to_json(pt);
    if (!pt.feasible) {
      out.exit_code = kInfeasible;
      out.message = "infeasible: " + pt.failing;
      out.files = {{"verify.json", out.report.dump(2)}};
      return out;
    }
    setup = pt.setup;
  }

  const double period = 2.0 * std::numbers::pi / setup.omega[0];
  const double step = period / c.verify.steps_per_period;
  const double t_end = c.verify.periods * period;
  const auto traj = integrate(setup, y0, t_end, step, c.verify.sample_every);
  EnvelopeVerdict env;
  if (!flat) env = check_envelopes(traj, pt.input, pt.report);
  const std::size_t g_viol = g_energy_bound_violations(setup, traj, c.verify.g_slack);
  const bool drift_ok = traj.max_drift < c.verify.drift_tol;
  const bool ok = !traj.aborted && drift_ok && env.ok && g_viol == 0;

  out.report["integration"] = {{"t_end_internal", number(t_end)},
                               {"t_end_years", number(t_end * setup.time_unit_years)},
                               {"periods", number(c.verify.periods)},
                               {"step", number(step)},
                               {"steps", traj.steps},
                               {"samples", traj.t.size()},
                               {"aborted", traj.aborted},
                               {"abort_reason", traj.abort_reason},
                               {"max_relative_drift", number(traj.max_drift)},
                               {"drift_tol", number(c.verify.drift_tol)},
                               {"e_clamped", traj.e_clamped},
                               {"initial", {number(y0[0]), number(y0[1]), number(y0[2]), number(y0[3])}}};
  out.report["envelopes"] = {{"ok", env.ok},
                             {"samples_checked", env.samples_checked},
                             {"samples_beyond_tbar", env.samples_beyond_tbar},
                             {"violations_L", env.violations_L},
                             {"violations_e", env.violations_e},
                             {"worst_L_margin", number(env.worst_L_margin)},
                             {"worst_e_margin", number(env.worst_e_margin)}};
  out.report["g_energy_violations"] = g_viol;
  out.report["ok"] = ok;
  fail_on_discard(out, ctx);
  if (out.exit_code == kSuccess) {
    if (ok) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "verified: %zu steps, max drift %.2e, worst L margin %.3e", traj.steps,
                    traj.max_drift, env.worst_L_margin);
      out.message = buf;
    } else {
      out.exit_code = kInfeasible;
      out.message = traj.aborted ? "integration aborted: " + traj.abort_reason
                    : !drift_ok  ? "energy drift above tolerance"
                    : !env.ok    ? "envelope violated"
                                 : "energy bound on G violated";
    }
  }
  out.files = {{"verify.json", out.report.dump(2)}};
  if (c.verify.write_trajectory) out.files.push_back({"trajectory.csv", trajectory_csv(traj)});
  return out;
}

// ------------------------------------------------------------------ dispatch

CommandResult run(const std::string& command, const json& cfg, const std::string& base_dir, const Overrides& ov) {
  try {
    if (!cfg.is_object()) throw ConfigError("config must be a JSON object");
    const auto it = cfg.find("kind");
    if (it == cfg.end()) throw ConfigError("missing key 'kind'");
    if (!it->is_string()) throw ConfigError("key 'kind' must be a string");
    const std::string kind = it->get<std::string>();
    if (kind != "planetary" && kind != "restricted") throw ConfigError("key 'kind' must be planetary or restricted");

    if (kind == "planetary") {
      if (ov.preliminary_averaging) throw ConfigError("--preliminary-averaging applies to restricted configs only");
      const auto c = parse_planetary_config(cfg, ov);
      if (command == "planetary") return cmd_planetary(c);
      if (command == "scan") return cmd_scan_planetary(c);
      if (command == "tables") return cmd_tables_planetary(c);
      if (command == "restricted" || command == "verify")
        throw ConfigError("command '" + command + "' needs a restricted config (key 'kind')");
    } else {
      const auto c = parse_restricted_config(cfg, base_dir, ov);
      if (command == "restricted") return cmd_restricted(c);
      if (command == "scan") return cmd_scan_restricted(c);
      if (command == "verify") return cmd_verify(c);
      if (command == "tables") return cmd_tables_restricted(c);
      if (command == "planetary") throw ConfigError("command 'planetary' needs a planetary config (key 'kind')");
    }
    throw ConfigError("unknown command '" + command + "'");
  } catch (const ConfigError& e) {
    CommandResult out;
    out.exit_code = kConfigError;
    out.message = std::string("config error: ") + e.what();
    out.report = {{"error", e.what()}};
    return out;
  } catch (const std::exception& e) {
    CommandResult out;
    out.exit_code = kInfeasible;
    out.message = std::string("error: ") + e.what();
    out.report = {{"error", e.what()}};
    return out;
  }
}

int cli_main(int argc, char** argv) {
  CLI::App cli{"Stability-time estimates near mean-motion resonances"};
  std::string command, config, out_dir = ".";
  std::uint64_t seed = 0;
  int prelim = -1;
  cli.add_option("command", command, "planetary | restricted | scan | verify | tables")
      ->required()
      ->check(CLI::IsMember({"planetary", "restricted", "scan", "verify", "tables"}));
  cli.add_option("--config", config, "JSON config file")->required();
  cli.add_option("--out", out_dir, "output directory");
  auto* seed_opt = cli.add_option("--seed", seed, "seed for sampled estimates");
  auto* prelim_opt = cli.add_option("--preliminary-averaging", prelim, "preliminary averaging steps")
                         ->check(CLI::IsMember({0, 1}));
  try {
    cli.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return cli.exit(e);
  } catch (const CLI::ParseError& e) {
    cli.exit(e);
    return kConfigError;
  }

  Overrides ov;
  if (seed_opt->count()) ov.seed = seed;
  if (prelim_opt->count()) ov.preliminary_averaging = prelim;

  json cfg;
  try {
    cfg = load_config_file(config);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  const auto res = run(command, cfg, fs::path(config).parent_path().string(), ov);
  if (!res.files.empty()) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    for (const auto& f : res.files) {
      const auto path = fs::path(out_dir) / f.name;
      std::ofstream os(path);
      if (!os) {
        std::cerr << "cannot write " << path.string() << '\n';
        return kConfigError;
      }
      os << f.content;
    }
  }
  (res.exit_code == kSuccess ? std::cout : std::cerr) << res.message << '\n';
  return res.exit_code;
}

}  // namespace resostab::app
