#include "fracwave/config.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "json.hpp"

#include "fracwave/errors.hpp"

namespace fracwave {

using nlohmann::json;

const char* to_string(RunKind k) noexcept {
  switch (k) {
    case RunKind::Linear:
      return "linear";
    case RunKind::Semilinear:
      return "semilinear";
    case RunKind::Rates:
      return "rates";
    case RunKind::Residual:
      return "residual";
    case RunKind::InitialConditions:
      return "ic";
    case RunKind::KernelIneq:
      return "kernel-ineq";
  }
  return "unknown";
}

namespace {

[[noreturn]] void bad(const std::string& path, const std::string& msg) {
  throw Error(ErrorKind::Validation, "config field '" + path + "': " + msg);
}

// One JSON object being read. Every key read is copied (or defaulted) into
// the resolved output; finish() rejects keys nobody asked for.
class Node {
 public:
  Node(const json& in, json& out, std::string path)
      : in_(in), out_(out), path_(std::move(path)) {
    if (!in_.is_object()) bad(path_.empty() ? "<root>" : path_, "expected an object");
    if (!out_.is_object()) out_ = json::object();
  }

  std::string at(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  bool has(const std::string& key) const { return in_.contains(key); }

  const json& raw(const std::string& key) {
    if (!in_.contains(key)) bad(at(key), "required");
    seen_.insert(key);
    return in_.at(key);
  }

  template <class T>
  T get(const std::string& key, T def) {
    seen_.insert(key);
    T v = def;
    if (in_.contains(key)) v = convert<T>(key, in_.at(key));
    out_[key] = v;
    return v;
  }

  template <class T>
  T need(const std::string& key) {
    if (!in_.contains(key)) bad(at(key), "required");
    seen_.insert(key);
    T v = convert<T>(key, in_.at(key));
    out_[key] = v;
    return v;
  }

  Node child(const std::string& key) {
    seen_.insert(key);
    static const json empty = json::object();
    const json& c = in_.contains(key) ? in_.at(key) : empty;
    return Node(c, out_[key], at(key));
  }

  json& out() { return out_; }

  void finish() const {
    for (auto it = in_.begin(); it != in_.end(); ++it) {
      if (!seen_.count(it.key())) bad(at(it.key()), "unknown key");
    }
  }

 private:
  template <class T>
  T convert(const std::string& key, const json& j) const {
    try {
      return j.get<T>();
    } catch (const json::exception&) {
      bad(at(key), "wrong type");
    }
  }

  const json& in_;
  json& out_;
  std::string path_;
  std::set<std::string> seen_;
};

double positive(Node& n, const std::string& key, double def) {
  const double v = n.get<double>(key, def);
  if (!(v > 0.0) || !std::isfinite(v)) bad(n.at(key), "must be positive and finite");
  return v;
}

void alpha_open(Node& n, const std::string& key, double a) {
  if (!(a > 1.0 && a < 2.0)) bad(n.at(key), "must lie in (1, 2)");
}

GridPtr read_operator(Node n, const std::string& base_dir) {
  const auto kind = n.need<std::string>("builtin");
  GridPtr g;
  if (kind == "dirichlet") {
    const double L = positive(n, "length", std::numbers::pi);
    const int m = n.need<int>("modes");
    if (m < 1) bad(n.at("modes"), "must be >= 1");
    g = build_dirichlet_laplacian(L, m);
  } else if (kind == "harmonic") {
    const int m = n.need<int>("modes");
    if (m < 1) bad(n.at("modes"), "must be >= 1");
    g = build_harmonic_oscillator(m);
  } else if (kind == "single") {
    const double lam = positive(n, "lambda", 1.0);
    g = std::make_shared<SpectralGrid>(std::vector<Mode>{{1, lam, 1.0}}, lam,
                                       "single-mode");
  } else if (kind == "log-spectrum") {
    const double lo = positive(n, "lam_lo", 1e-4);
    const double hi = positive(n, "lam_hi", 1e12);
    if (!(hi > lo)) bad(n.at("lam_hi"), "must exceed lam_lo");
    g = build_log_spectrum(lo, hi, n.get<int>("per_decade", 16));
  } else if (kind == "measure") {
    std::filesystem::path p = n.need<std::string>("path");
    if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
    if (!std::filesystem::exists(p)) bad(n.at("path"), "file not found: " + p.string());
    n.out()["path"] = p.string();
    g = load_spectral_measure_file(p.string());
  } else {
    bad(n.at("builtin"), "unknown operator '" + kind +
                             "' (dirichlet, harmonic, single, log-spectrum, measure)");
  }
  const double s = n.get<double>("power", 1.0);
  if (!(s > 0.0 && s <= 1.0)) bad(n.at("power"), "must lie in (0, 1]");
  if (s != 1.0) g = build_fractional_power(*g, s);
  const double c = n.get<double>("shift", 0.0);
  if (c < 0.0) bad(n.at("shift"), "must be >= 0");
  if (c > 0.0) g = shift(*g, c);
  n.out()["resolved_modes"] = g->size();
  n.out()["resolved_m0"] = g->m0();
  n.finish();
  return g;
}

std::vector<double> data_vector(Node& parent, const std::string& key,
                                const SpectralGrid& g) {
  const std::size_t nm = g.size();
  std::vector<double> v(nm, 0.0);
  if (!parent.has(key)) {
    parent.child(key).out()["profile"] = "zero";
    return v;
  }
  const json& j = parent.raw(key);
  if (j.is_array()) {
    if (j.size() > nm) {
      bad(parent.at(key), "has " + std::to_string(j.size()) + " entries but the operator has " +
                              std::to_string(nm) + " modes");
    }
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (!j[i].is_number()) bad(parent.at(key) + "[" + std::to_string(i) + "]", "not a number");
      v[i] = j[i].get<double>();
    }
    parent.out()[key] = v;
    return v;
  }
  Node n(j, parent.out()[key], parent.at(key));
  const auto profile = n.need<std::string>("profile");
  if (profile == "zero") {
  } else if (profile == "mode") {
    const int k = n.get<int>("mode", 1);
    if (k < 1 || static_cast<std::size_t>(k) > nm) bad(n.at("mode"), "out of range");
    v[k - 1] = n.get<double>("amplitude", 1.0);
  } else if (profile == "constant") {
    const double c = n.need<double>("value");
    std::fill(v.begin(), v.end(), c);
  } else if (profile == "critical") {
    const double kappa = n.need<double>("kappa");
    const double scale = n.get<double>("scale", 1.0);
    v = critical_data(g, kappa);
    for (double& x : v) x *= scale;
  } else {
    bad(n.at("profile"), "unknown profile '" + profile + "' (zero, mode, constant, critical)");
  }
  n.finish();
  return v;
}

struct SourceResult {
  Source source;
  std::optional<double> lp;
  std::optional<std::pair<std::vector<double>, std::vector<double>>> data;
};

// Source that makes sum_i c_i t^{p_i} the exact solution of one mode.
SourceResult manufactured(Node& n, const SpectralGrid& g, double alpha) {
  const int k = n.get<int>("mode", 1);
  if (k < 1 || static_cast<std::size_t>(k) > g.size()) bad(n.at("mode"), "out of range");
  const double lam = g.eigenvalue(k - 1);
  const json& terms = n.raw("solution");
  if (!terms.is_array() || terms.empty()) bad(n.at("solution"), "expected a non-empty array");
  ClosedFormSource src;
  src.per_mode.resize(g.size());
  std::vector<double> u0(g.size(), 0.0), u1(g.size(), 0.0);
  json echo = json::array();
  for (std::size_t i = 0; i < terms.size(); ++i) {
    json out;
    Node t(terms[i], out, n.at("solution") + "[" + std::to_string(i) + "]");
    const double c = t.need<double>("coeff");
    const double p = t.need<double>("power");
    t.finish();
    echo.push_back(out);
    if (p == 0.0) {
      u0[k - 1] += c;
    } else if (p == 1.0) {
      u1[k - 1] += c;
    } else if (!(p > 1.0)) {
      bad(t.at("power"), "powers must be 0, 1 or > 1");
    } else {
      // D^a t^p = Gamma(p+1) / Gamma(p+1-a) t^{p-a}
      src.per_mode[k - 1].push_back(
          {c * std::tgamma(p + 1.0) * rgamma(p + 1.0 - alpha), p - alpha});
    }
    src.per_mode[k - 1].push_back({c * lam, p});
  }
  n.out()["solution"] = echo;
  SourceResult r;
  r.source = std::move(src);
  r.data = std::make_pair(std::move(u0), std::move(u1));
  return r;
}

SourceResult read_source(Node n, const SpectralGrid& g, double alpha) {
  const auto kind = n.get<std::string>("kind", "zero");
  SourceResult r;
  if (kind == "zero") {
  } else if (kind == "monomials") {
    ClosedFormSource src;
    src.per_mode.resize(g.size());
    const json& terms = n.raw("terms");
    if (!terms.is_array()) bad(n.at("terms"), "expected an array");
    json echo = json::array();
    for (std::size_t i = 0; i < terms.size(); ++i) {
      json out;
      Node t(terms[i], out, n.at("terms") + "[" + std::to_string(i) + "]");
      const int k = t.get<int>("mode", 1);
      if (k < 1 || static_cast<std::size_t>(k) > g.size()) bad(t.at("mode"), "out of range");
      const double c = t.need<double>("coeff");
      const double p = t.get<double>("power", 0.0);
      if (!(p > -1.0)) bad(t.at("power"), "must exceed -1");
      t.finish();
      echo.push_back(out);
      src.per_mode[k - 1].push_back({c, p});
    }
    n.out()["terms"] = echo;
    r.source = std::move(src);
  } else if (kind == "manufactured") {
    r = manufactured(n, g, alpha);
  } else {
    bad(n.at("kind"), "unknown source '" + kind + "' (zero, monomials, manufactured)");
  }
  if (n.has("lp")) {
    const double p = n.get<double>("lp", 1.0);
    if (!(p >= 1.0)) bad(n.at("lp"), "must be >= 1");
    r.lp = p;
  }
  n.finish();
  return r;
}

Nonlinearity read_nonlinearity(Node n) {
  const auto kind = n.need<std::string>("kind");
  Nonlinearity nl;
  if (kind == "zero") {
    nl = Nonlinearity::zero();
  } else if (kind == "linear") {
    nl = Nonlinearity::linear(n.need<double>("c"));
  } else if (kind == "power") {
    const int p = n.need<int>("p");
    if (p < 2) bad(n.at("p"), "must be an integer >= 2");
    nl = Nonlinearity::power(p, n.get<double>("coeff", 1.0));
  } else if (kind == "sine") {
    nl = Nonlinearity::sine();
  } else {
    bad(n.at("kind"), "unknown nonlinearity '" + kind + "' (zero, linear, power, sine)");
  }
  n.finish();
  return nl;
}

void read_time(Node n, RunConfig& c) {
  c.time.T = positive(n, "T", 1.0);
  c.time.N = n.get<int>("N", 128);
  if (c.time.N < 2) bad(n.at("N"), "must be >= 2");
  c.time.uniform = n.get<bool>("uniform", false);
  const double auto_r = default_grading(c.alpha, 0.5);
  if (n.has("grading") && n.raw("grading").is_string()) {
    if (n.raw("grading").get<std::string>() != "auto") bad(n.at("grading"), "number or \"auto\"");
    c.time.grading = auto_r;
  } else {
    c.time.grading = n.get<double>("grading", auto_r);
  }
  if (c.time.grading < 1.0) bad(n.at("grading"), "must be >= 1");
  n.out()["grading"] = c.time.uniform ? 1.0 : c.time.grading;
  n.finish();
}

void read_solver(Node n, SemilinearConfig& s) {
  s.dt = positive(n, "dt", s.dt);
  s.tol_fix = positive(n, "tol_fix", s.tol_fix);
  s.max_iter = n.get<int>("max_iter", s.max_iter);
  if (s.max_iter < 1) bad(n.at("max_iter"), "must be >= 1");
  s.c_hat = positive(n, "c_hat", s.c_hat);
  s.tau_min = n.get<double>("tau_min", s.tau_min);
  s.tau_max = n.get<double>("tau_max", s.tau_max);
  if (s.tau_min < 0.0) bad(n.at("tau_min"), "must be >= 0");
  if (s.tau_max < 0.0) bad(n.at("tau_max"), "must be >= 0");
  s.rho_grow = n.get<double>("rho_grow", s.rho_grow);
  if (!(s.rho_grow > 0.0 && s.rho_grow < 1.0)) bad(n.at("rho_grow"), "must lie in (0, 1)");
  s.energy_ceiling = positive(n, "energy_ceiling", s.energy_ceiling);
  s.shift = n.get<double>("shift", s.shift);
  if (s.shift < 0.0) bad(n.at("shift"), "must be >= 0");
  s.physical_space = n.get<bool>("physical_space", s.physical_space);
  s.physical_points = n.get<int>("physical_points", s.physical_points);
  s.growth_check_range = n.get<double>("growth_check_range", s.growth_check_range);
  n.finish();
}

std::optional<EnergyParams> read_energy(Node n, double alpha) {
  auto d = EnergyParams::defaults(alpha, n.get<double>("gamma", 0.75));
  d.s_exp = n.get<double>("s", d.s_exp);
  d.delta1 = n.get<double>("delta1", d.delta1);
  d.delta2 = n.get<double>("delta2", d.delta2);
  n.finish();
  return d;
}

std::vector<double> alpha_list(Node& n, const std::string& key,
                               std::vector<double> def) {
  auto v = n.get<std::vector<double>>(key, def);
  if (v.empty()) bad(n.at(key), "must not be empty");
  for (double a : v) {
    if (!(a > 1.0 && a < 2.0)) bad(n.at(key), "every alpha must lie in (1, 2)");
  }
  return v;
}

void read_rate_options(Node& n, RateSuiteOptions& o) {
  o.T = positive(n, "T", o.T);
  o.N = n.get<int>("N", o.N);
  if (o.N < 8) bad(n.at("N"), "must be >= 8");
  const auto w = n.get<std::vector<double>>("window", {o.window.lo, o.window.hi});
  if (w.size() != 2 || !(w[0] > 0.0) || !(w[1] > w[0]) || w[1] > 1.0) {
    bad(n.at("window"), "expected [lo, hi] with 0 < lo < hi <= 1 (fractions of T)");
  }
  o.window = {w[0], w[1]};
  o.tolerance = positive(n, "tolerance", o.tolerance);
  o.weak_gamma_tilde = n.get<double>("weak_gamma_tilde", o.weak_gamma_tilde);
  o.weak_gamma = n.get<double>("weak_gamma", o.weak_gamma);
  o.strong_gamma = n.get<double>("strong_gamma", o.strong_gamma);
  o.strong_gamma_tilde = n.get<double>("strong_gamma_tilde", o.strong_gamma_tilde);
  o.strong_theta = n.get<double>("strong_theta", o.strong_theta);
  o.lam_lo = positive(n, "lam_lo", o.lam_lo);
  o.lam_hi = positive(n, "lam_hi", o.lam_hi);
  if (!(o.lam_hi > o.lam_lo)) bad(n.at("lam_hi"), "must exceed lam_lo");
  o.per_decade = n.get<int>("per_decade", o.per_decade);
  if (o.per_decade < 1) bad(n.at("per_decade"), "must be >= 1");
  o.ml_tol = positive(n, "ml_tol", o.ml_tol);
}

std::vector<double> range3(Node& n, const std::string& key, std::vector<double> def) {
  const auto r = n.get<std::vector<double>>(key, def);
  if (r.size() != 3 || !(r[0] > 0.0) || !(r[1] > r[0]) || r[2] < 2.0 ||
      r[2] != std::floor(r[2])) {
    bad(n.at(key), "expected [lo, hi, n] with 0 < lo < hi and integer n >= 2");
  }
  return log_space(r[0], r[1], static_cast<int>(r[2]));
}

KernelIneqParams read_kernel_case(Node n) {
  KernelIneqParams p;
  const auto kind = n.get<std::string>("kind", "scaled");
  if (kind == "scaled") {
    p.kind = KernelInequality::Scaled;
  } else if (kind == "complement") {
    p.kind = KernelInequality::Complement;
  } else {
    bad(n.at("kind"), "expected \"scaled\" or \"complement\"");
  }
  p.alpha = n.need<double>("alpha");
  alpha_open(n, "alpha", p.alpha);
  p.alpha_prime = n.get<double>("alpha_prime", p.alpha);
  p.b = n.get<double>("b", 0.0);
  p.g = n.get<double>("g", 1.0);
  p.lams = range3(n, "lam", {1e-3, 1e6, 40});
  p.ts = range3(n, "t", {1e-4, 10.0, 40});
  p.c_cap = positive(n, "c_cap", p.c_cap);
  p.ml_tol = positive(n, "ml_tol", p.ml_tol);
  n.finish();
  return p;
}

RunKind read_kind(Node& n) {
  const auto k = n.need<std::string>("kind");
  for (RunKind r : {RunKind::Linear, RunKind::Semilinear, RunKind::Rates,
                    RunKind::Residual, RunKind::InitialConditions, RunKind::KernelIneq}) {
    if (k == to_string(r)) return r;
  }
  bad("kind", "unknown kind '" + k + "' (linear, semilinear, rates, residual, ic, kernel-ineq)");
}

}  // namespace

RunConfig parse_run_config(std::string_view text, const std::string& base_dir) {
  json in;
  try {
    in = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Validation, std::string("config is not valid JSON: ") + e.what());
  }
  json out = json::object();
  Node root(in, out, "");
  RunConfig c;
  c.schema_version = root.need<int>("schema_version");
  if (c.schema_version != kConfigSchemaVersion) {
    bad("schema_version", "unsupported version " + std::to_string(c.schema_version) +
                              " (expected " + std::to_string(kConfigSchemaVersion) + ")");
  }
  c.kind = read_kind(root);
  c.label = root.get<std::string>("label", to_string(c.kind));
  {
    auto tol = root.child("tolerances");
    c.ml_tol = positive(tol, "ml_tol", kDefaultMlTol);
    tol.finish();
  }

  const bool has_problem = c.kind == RunKind::Linear || c.kind == RunKind::Semilinear ||
                           c.kind == RunKind::Residual;
  if (has_problem) {
    c.alpha = root.need<double>("alpha");
    alpha_open(root, "alpha", c.alpha);
    if (!root.has("operator")) bad("operator", "required");
    c.grid = read_operator(root.child("operator"), base_dir);
    c.u0 = data_vector(root, "u0", *c.grid);
    c.u1 = data_vector(root, "u1", *c.grid);
    read_time(root.child("time"), c);
    auto out = root.child("output");
    c.want_d2u = out.get<bool>("d2u", false);
    out.finish();
  }

  switch (c.kind) {
    case RunKind::Linear:
    case RunKind::Residual: {
      auto r = read_source(root.child("source"), *c.grid, c.alpha);
      c.source = std::move(r.source);
      c.source_lp = r.lp;
      if (r.data) {
        if (root.has("u0") || root.has("u1")) {
          bad("u0", "must be omitted when the source is manufactured (it fixes the data)");
        }
        c.u0 = r.data->first;
        c.u1 = r.data->second;
        root.out()["u0"] = c.u0;
        root.out()["u1"] = c.u1;
      }
      if (c.kind == RunKind::Residual) {
        auto n = root.child("residual");
        auto& s = c.residual;
        s.h = positive(n, "h", s.h);
        s.levels = n.get<int>("levels", s.levels);
        if (s.levels < 1) bad(n.at("levels"), "must be >= 1");
        s.max_residual = positive(n, "max_residual", s.max_residual);
        s.min_order = n.get<double>("min_order", s.min_order);
        s.t_min = n.get<double>("t_min", s.t_min);
        s.floor = n.get<double>("floor", s.floor);
        n.finish();
        const double M = c.time.T / s.h;
        if (std::abs(M - std::round(M)) > 1e-9 * M) bad("residual.h", "must divide time.T");
      }
      break;
    }
    case RunKind::Semilinear: {
      if (!root.has("nonlinearity")) bad("nonlinearity", "required for semilinear runs");
      c.nonlinearity = read_nonlinearity(root.child("nonlinearity"));
      c.semilinear.ml_tol = c.ml_tol;
      read_solver(root.child("solver"), c.semilinear);
      if (root.has("energy")) c.semilinear.energy_params = read_energy(root.child("energy"), c.alpha);
      if (c.semilinear.physical_space && !c.grid->dirichlet_basis()) {
        bad("solver.physical_space", "needs a dirichlet operator");
      }
      break;
    }
    case RunKind::Rates: {
      auto n = root.child("rates");
      c.rates.alphas = alpha_list(n, "alphas", c.rates.alphas);
      read_rate_options(n, c.rates.options);
      c.rates.single_mode = n.get<bool>("single_mode", false);
      c.rates.only = n.get<std::vector<std::string>>("only", {});
      n.finish();
      break;
    }
    case RunKind::InitialConditions: {
      auto n = root.child("ic");
      c.ic.alphas = alpha_list(n, "alphas", c.ic.alphas);
      c.ic.sigma = n.get<double>("sigma", c.ic.sigma);
      read_rate_options(n, c.ic.options);
      n.finish();
      break;
    }
    case RunKind::KernelIneq: {
      auto n = root.child("kernel_ineq");
      const json& cases = n.raw("cases");
      if (!cases.is_array() || cases.empty()) bad("kernel_ineq.cases", "expected a non-empty array");
      n.out()["cases"] = json::array();
      for (std::size_t i = 0; i < cases.size(); ++i) {
        json o;
        c.kernel_ineq.push_back(
            read_kernel_case(Node(cases[i], o, "kernel_ineq.cases[" + std::to_string(i) + "]")));
        n.out()["cases"].push_back(o);
      }
      n.finish();
      break;
    }
  }
  root.finish();
  c.resolved = out.dump(2);
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Validation, "cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  const auto dir = std::filesystem::path(path).parent_path();
  return parse_run_config(ss.str(), dir.empty() ? "." : dir.string());
}

LinearProblem linear_problem(const RunConfig& c) {
  LinearProblem p{c.grid, c.u0, c.u1, c.source, c.alpha, c.label, c.source_lp};
  return p;
}

SemilinearProblem semilinear_problem(const RunConfig& c) {
  if (!c.nonlinearity) throw Error(ErrorKind::Configuration, "no nonlinearity configured");
  return {c.grid, c.alpha, c.u0, c.u1, *c.nonlinearity, c.label};
}

TimeGrid time_grid(const RunConfig& c) {
  return c.time.uniform ? TimeGrid::uniform(c.time.T, c.time.N)
                        : TimeGrid::graded(c.time.T, c.time.N, c.time.grading);
}

}  // namespace fracwave
