#include "fracwave/rate_verifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

#include "fracwave/errors.hpp"
#include "fracwave/parallel.hpp"
#include "numfmt.hpp"

namespace fracwave {

const char* to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::Pass:
      return "pass";
    case Verdict::Fail:
      return "fail";
    case Verdict::Skipped:
      return "skipped";
  }
  return "unknown";
}

// --- fitting -----------------------------------------------------------------

PowerFit fit_power_law(std::span<const double> t, std::span<const double> v,
                       FitWindow w) {
  if (t.size() != v.size()) {
    throw Error(ErrorKind::Validation, "fit: times and values differ in length");
  }
  PowerFit pf;
  std::vector<double> x, y;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!(t[i] >= w.lo && t[i] <= w.hi) || !(t[i] > 0.0)) continue;
    const double a = std::abs(v[i]);
    if (a == 0.0) {
      ++pf.zeros_excluded;
      continue;
    }
    if (!std::isfinite(a)) continue;
    x.push_back(std::log(t[i]));
    y.push_back(std::log(a));
  }
  pf.used = x.size();
  if (x.size() < 6) {
    std::ostringstream os;
    os << "power-law fit needs >= 6 usable points in [" << w.lo << ", " << w.hi
       << "], got " << x.size();
    throw Error(ErrorKind::InsufficientData, os.str());
  }
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  pf.exponent = sxy / sxx;
  const double intercept = my - pf.exponent * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - intercept - pf.exponent * x[i];
    sse += r * r;
  }
  pf.std_error = std::sqrt(sse / std::max(1.0, n - 2.0) / sxx);
  // A flat series fits perfectly.
  pf.r2 = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  return pf;
}

RateReport verify_rate(std::span<const double> t, std::span<const double> v,
                       const RateSpec& spec, FitWindow w) {
  RateReport rep;
  rep.spec = spec;
  rep.window = w;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] >= w.lo && t[i] <= w.hi) {
      rep.t.push_back(t[i]);
      rep.v.push_back(v[i]);
    }
  }
  if (!spec.hypothesis_holds) {
    rep.verdict = Verdict::Skipped;
    rep.note = "hypothesis not satisfied: " + spec.hypothesis;
    return rep;
  }
  if (!rep.v.empty() &&
      std::all_of(rep.v.begin(), rep.v.end(), [](double x) { return x == 0.0; })) {
    rep.verdict = Verdict::Pass;
    rep.fit.zeros_excluded = rep.v.size();
    rep.note = "series identically zero; all points excluded";
    return rep;
  }
  try {
    rep.fit = fit_power_law(t, v, w);
  } catch (const Error& e) {
    rep.verdict = Verdict::Fail;
    rep.note = e.what();
    return rep;
  }
  const double d = rep.fit.exponent - spec.theoretical_exponent;
  const bool rate_ok = spec.kind == RateKind::Equality
                           ? std::abs(d) <= spec.tolerance
                           : d >= -spec.tolerance;
  // A bound says nothing about the shape of the curve, so only an attained
  // rate has to be a clean power law.
  const bool r2_ok = spec.kind == RateKind::UpperBound || rep.fit.r2 >= 0.99;
  rep.verdict = rate_ok && r2_ok ? Verdict::Pass : Verdict::Fail;
  std::ostringstream os;
  os << "fitted " << rep.fit.exponent << " vs " << spec.theoretical_exponent
     << (spec.kind == RateKind::Equality ? " (equality" : " (upper bound")
     << ", tol " << spec.tolerance << "), R2 " << rep.fit.r2;
  rep.note = os.str();
  return rep;
}

std::vector<RateReport> verify_rates(const EstimateSeries& es,
                                     const std::vector<RateSpec>& specs,
                                     FitWindow w) {
  std::vector<RateReport> out;
  out.reserve(specs.size());
  for (const auto& s : specs) {
    if (!s.hypothesis_holds) {
      out.push_back(verify_rate({}, {}, s, w));
      continue;
    }
    out.push_back(verify_rate(es.t, es.series(s.quantity), s, w));
  }
  return out;
}

// --- instances ---------------------------------------------------------------

std::vector<double> log_space(double lo, double hi, int n) {
  if (!(lo > 0.0) || !(hi > lo) || n < 2) {
    throw Error(ErrorKind::Validation, "log_space needs 0 < lo < hi and n >= 2");
  }
  std::vector<double> v(n);
  const double a = std::log(lo), b = std::log(hi);
  for (int i = 0; i < n; ++i) v[i] = std::exp(a + (b - a) * i / (n - 1));
  v.front() = lo;
  v.back() = hi;
  return v;
}

GridPtr build_log_spectrum(double lam_lo, double lam_hi, int per_decade) {
  if (per_decade < 1) {
    throw Error(ErrorKind::Validation, "log spectrum needs per_decade >= 1");
  }
  const double decades = std::log10(lam_hi / lam_lo);
  const int n = static_cast<int>(std::lround(decades * per_decade)) + 1;
  const auto lams = log_space(lam_lo, lam_hi, n);
  const double dln = std::log(lam_hi / lam_lo) / (n - 1);
  std::vector<Mode> modes;
  modes.reserve(n);
  for (int i = 0; i < n; ++i) modes.push_back({i, lams[i], lams[i] * dln});
  std::ostringstream label;
  label << "log-spectrum[" << lam_lo << "," << lam_hi << "]x" << per_decade;
  return std::make_shared<SpectralGrid>(std::move(modes), lam_lo, label.str());
}

std::vector<double> critical_data(const SpectralGrid& g, double kappa) {
  std::vector<double> v(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) {
    v[j] = std::pow(g.eigenvalue(j), -0.5 * kappa);
  }
  return v;
}

namespace {

// Graded grid restricted to the nodes the fit needs; no source term, so
// nothing couples the dropped nodes.
TimeGrid fit_grid(const RateSuiteOptions& o, double alpha, double gamma_tilde) {
  const auto full = TimeGrid::graded(o.T, o.N, default_grading(alpha, gamma_tilde));
  std::vector<double> nodes;
  for (double t : full.nodes) {
    if (t <= o.window.hi * o.T * (1.0 + 1e-12)) nodes.push_back(t);
  }
  auto g = TimeGrid::from_nodes(std::move(nodes));
  g.grading = full.grading;
  return g;
}

RateSpec spec(std::string name, std::string quantity, double theory,
              RateKind kind, double tol, std::string hyp, bool holds,
              std::map<std::string, double> params) {
  RateSpec s;
  s.name = std::move(name);
  s.quantity = std::move(quantity);
  s.theoretical_exponent = theory;
  s.kind = kind;
  s.tolerance = tol;
  s.hypothesis = std::move(hyp);
  s.hypothesis_holds = holds;
  s.params = std::move(params);
  return s;
}

struct Instances {
  std::vector<RateSpec> weak_u1, weak_u0, strong_u0;
};

Instances rate_specs(double a, const RateSuiteOptions& o, RateKind kind) {
  const double gt = o.weak_gamma_tilde, g = o.weak_gamma;
  const double sg = o.strong_gamma, sgt = o.strong_gamma_tilde, th = o.strong_theta;
  const bool weak_ok = gt > 0.0 && gt <= 1.0 && g >= 0.0 && g <= 1.0;
  const bool strong_ok = sg > 0.0 && sg <= 1.0 && sgt >= 0.0 && sgt <= sg &&
                         th >= 0.0 && th <= sg;
  const std::string weak_h = "0 < gamma_tilde <= 1, 0 <= gamma <= 1, f = 0";
  const std::string strong_h =
      "0 < gamma <= 1, 0 <= gamma_tilde <= gamma, 0 <= theta <= gamma, f = 0";
  Instances in;
  in.weak_u1.push_back(spec("u_in_V_gamma_tilde_from_u1", "u_V_gamma_tilde",
                            1.0 - a * gt, kind, o.tolerance, weak_h, weak_ok,
                            {{"alpha", a}, {"gamma_tilde", gt}}));
  in.weak_u0.push_back(spec("du_from_u0", "du_L2", a * gt - 1.0, kind, o.tolerance,
                            weak_h, weak_ok, {{"alpha", a}, {"gamma_tilde", gt}}));
  in.weak_u0.push_back(spec("caputo_in_V_minus_gamma_from_u0",
                            "dalpha_V_minus_gamma", a * (g + gt - 1.0), kind,
                            o.tolerance, weak_h, weak_ok,
                            {{"alpha", a}, {"gamma", g}, {"gamma_tilde", gt}}));
  in.strong_u0.push_back(spec("Au_from_u0", "au_L2", a * (sg - 1.0), kind,
                              o.tolerance, strong_h, strong_ok,
                              {{"alpha", a}, {"gamma", sg}}));
  in.strong_u0.push_back(spec("du_in_V_gamma_tilde_from_u0", "du_V_gamma_tilde",
                              a * (sg - sgt) - 1.0, kind, o.tolerance, strong_h,
                              strong_ok,
                              {{"alpha", a}, {"gamma", sg}, {"gamma_tilde", sgt}}));
  in.strong_u0.push_back(spec("d2u_in_V_theta_from_u0", "d2u_V_theta",
                              a * (sg - th) - 2.0, kind, o.tolerance, strong_h,
                              strong_ok,
                              {{"alpha", a}, {"gamma", sg}, {"theta", th}}));
  return in;
}

void append(std::vector<RateReport>& out, std::vector<RateReport> more) {
  for (auto& r : more) out.push_back(std::move(r));
}

void check_alpha(double alpha) {
  if (!(alpha > 1.0 && alpha < 2.0)) {
    throw Error(ErrorKind::ParameterDomain, "rate suites need 1 < alpha < 2");
  }
}

}  // namespace

std::vector<RateReport> run_rate_suite(double alpha, const RateSuiteOptions& o) {
  check_alpha(alpha);
  const auto grid = build_log_spectrum(o.lam_lo, o.lam_hi, o.per_decade);
  const auto in = rate_specs(alpha, o, RateKind::Equality);
  const FitWindow w{o.window.lo * o.T, o.window.hi * o.T};
  const std::vector<double> zero(grid->size(), 0.0);
  const double gt = o.weak_gamma_tilde;
  std::vector<RateReport> out;

  LinearOptions lo;
  lo.tol = o.ml_tol;
  {
    LinearProblem p{grid, zero, critical_data(*grid, 1.0), {}, alpha, "u1-critical"};
    const auto tr = solve_linear(p, fit_grid(o, alpha, gt), lo);
    append(out, verify_rates(estimate_lhs(tr, {gt, o.weak_gamma, 0.0, false}),
                             in.weak_u1, w));
  }
  {
    LinearProblem p{grid, critical_data(*grid, 2.0 * gt + 1.0), zero, {}, alpha,
                    "u0-critical-weak"};
    const auto tr = solve_linear(p, fit_grid(o, alpha, gt), lo);
    append(out, verify_rates(estimate_lhs(tr, {gt, o.weak_gamma, 0.0, false}),
                             in.weak_u0, w));
  }
  {
    LinearProblem p{grid, critical_data(*grid, 2.0 * o.strong_gamma + 1.0), zero,
                    {}, alpha, "u0-critical-strong"};
    LinearOptions ls = lo;
    ls.want_d2u = true;
    const auto tr =
        solve_linear(p, fit_grid(o, alpha, std::min(o.strong_gamma_tilde > 0.0
                                                         ? o.strong_gamma_tilde
                                                         : gt,
                                                     gt)),
                     ls);
    append(out, verify_rates(estimate_lhs(tr, {o.strong_gamma_tilde, o.strong_gamma,
                                               o.strong_theta, true}),
                             in.strong_u0, w));
  }
  for (auto& r : out) r.spec.params["alpha"] = alpha;
  return out;
}

std::vector<RateReport> run_single_mode_rates(double alpha,
                                              const RateSuiteOptions& o) {
  check_alpha(alpha);
  auto grid = std::make_shared<SpectralGrid>(std::vector<Mode>{{1, 1.0, 1.0}},
                                             1.0, "single-mode(1)");
  const auto in = rate_specs(alpha, o, RateKind::UpperBound);
  const FitWindow w{o.window.lo * o.T, o.window.hi * o.T};
  const double gt = o.weak_gamma_tilde;
  std::vector<RateReport> out;
  LinearOptions lo;
  lo.tol = o.ml_tol;
  lo.want_d2u = true;
  const auto tg = fit_grid(o, alpha, std::min(gt, o.strong_gamma_tilde > 0.0
                                                      ? o.strong_gamma_tilde
                                                      : gt));
  const auto tr1 = solve_linear({grid, {0.0}, {1.0}, {}, alpha, "u1=1"}, tg, lo);
  const auto tr0 = solve_linear({grid, {1.0}, {0.0}, {}, alpha, "u0=1"}, tg, lo);
  append(out, verify_rates(estimate_lhs(tr1, {gt, o.weak_gamma, 0.0, true}),
                           in.weak_u1, w));
  append(out, verify_rates(estimate_lhs(tr0, {gt, o.weak_gamma, 0.0, true}),
                           in.weak_u0, w));
  append(out, verify_rates(estimate_lhs(tr0, {o.strong_gamma_tilde, o.strong_gamma,
                                              o.strong_theta, true}),
                           in.strong_u0, w));
  for (auto& r : out) r.spec.name = "single_mode_" + r.spec.name;
  return out;
}

// --- initial conditions ------------------------------------------------------

IcReport verify_initial_conditions(const Trajectory& traj, const IcOptions& o) {
  IcReport rep;
  const double a = traj.alpha;
  const bool sigma_ok = o.sigma >= 0.0 && o.sigma < std::min(o.gamma_tilde, 1.0 / a);
  const bool beta_ok = o.beta_ic > std::max(0.0, 1.0 / a - o.gamma_tilde);
  if (!sigma_ok || !beta_ok) {
    rep.verdict = Verdict::Skipped;
    std::ostringstream os;
    os << "hypothesis violated: need min(gamma_tilde, 1/alpha) > sigma >= 0 and "
          "beta > max(0, 1/alpha - gamma_tilde); got sigma="
       << o.sigma << ", beta=" << o.beta_ic << ", gamma_tilde=" << o.gamma_tilde;
    rep.note = os.str();
    return rep;
  }
  const SpectralGrid& g = *traj.grid;
  const std::size_t nm = g.size();
  std::vector<double> d(nm);
  for (std::size_t k = 1; k < traj.time.size(); ++k) {
    rep.t.push_back(traj.time.nodes[k]);
    for (std::size_t j = 0; j < nm; ++j) d[j] = traj.u(k, j) - traj.u(0, j);
    rep.u_distance.push_back(norm_V(g, d, {o.sigma}));
    for (std::size_t j = 0; j < nm; ++j) d[j] = traj.du(k, j) - traj.du(0, j);
    rep.du_distance.push_back(norm_V(g, d, {-o.beta_ic}));
  }
  const std::size_t m = std::min<std::size_t>(o.tail_nodes, rep.t.size());
  if (m < 2) {
    rep.verdict = Verdict::Fail;
    rep.note = "too few nodes near t = 0";
    return rep;
  }
  auto monotone = [&](const std::vector<double>& v) {
    for (std::size_t i = 0; i + 1 < m; ++i) {
      if (v[i] > v[i + 1]) return false;  // must shrink toward t = 0
    }
    return true;
  };
  rep.u_monotone = monotone(rep.u_distance);
  rep.du_monotone = monotone(rep.du_distance);
  const double u_min = rep.u_distance.front();
  const double du_min = rep.du_distance.front();
  const bool small = u_min <= o.ic_tol && du_min <= o.ic_tol;
  rep.verdict = rep.u_monotone && rep.du_monotone && small ? Verdict::Pass : Verdict::Fail;
  std::ostringstream os;
  os << "|u - u0| at t=" << rep.t.front() << ": " << u_min << ", |u' - u1|: " << du_min
     << (rep.u_monotone ? "" : "; u distance not monotone")
     << (rep.du_monotone ? "" : "; u' distance not monotone");
  rep.note = os.str();
  return rep;
}

std::vector<RateReport> run_initial_condition_suite(double alpha, double sigma,
                                                    const RateSuiteOptions& o) {
  check_alpha(alpha);
  const FitWindow w{o.window.lo * o.T, o.window.hi * o.T};
  const double gt = o.weak_gamma_tilde;
  const auto tg = fit_grid(o, alpha, gt);
  LinearOptions lo;
  lo.tol = o.ml_tol;
  std::vector<RateReport> out;

  auto distance_series = [](const Trajectory& tr, double s) {
    std::vector<double> v;
    std::vector<double> d(tr.grid->size());
    for (std::size_t k = 0; k < tr.time.size(); ++k) {
      for (std::size_t j = 0; j < d.size(); ++j) d[j] = tr.u(k, j) - tr.u(0, j);
      v.push_back(norm_V(*tr.grid, d, {s}));
    }
    return v;
  };

  {
    auto grid = std::make_shared<SpectralGrid>(std::vector<Mode>{{1, 1.0, 1.0}},
                                               1.0, "single-mode(1)");
    const auto tr = solve_linear({grid, {1.0}, {0.0}, {}, alpha, "u0=1"}, tg, lo);
    auto s = spec("u_approaches_u0", "u_minus_u0_V_0", alpha, RateKind::Equality,
                  0.1, "sigma = 0", true, {{"alpha", alpha}, {"sigma", 0.0}});
    out.push_back(verify_rate(tr.time.nodes, distance_series(tr, 0.0), s, w));
  }
  {
    const bool ok = sigma >= 0.0 && sigma < std::min(gt, 1.0 / alpha);
    auto grid = build_log_spectrum(o.lam_lo, o.lam_hi, o.per_decade);
    auto s = spec("u1_contribution_in_V_sigma", "u_minus_u0_V_sigma",
                  1.0 - alpha * sigma, RateKind::Equality, 0.1,
                  "min(gamma_tilde, 1/alpha) > sigma >= 0", ok,
                  {{"alpha", alpha}, {"sigma", sigma}});
    if (!ok) {
      out.push_back(verify_rate({}, {}, s, w));
    } else {
      const std::vector<double> zero(grid->size(), 0.0);
      const auto tr = solve_linear(
          {grid, zero, critical_data(*grid, 1.0), {}, alpha, "u1-critical"}, tg, lo);
      out.push_back(verify_rate(tr.time.nodes, distance_series(tr, sigma), s, w));
    }
  }
  return out;
}

// --- kernel bounds -----------------------------------------------------------

KernelIneqReport verify_kernel_inequality(const KernelIneqParams& p) {
  const double a = p.alpha;
  if (!(a > 1.0 && a < 2.0)) {
    throw Error(ErrorKind::Hypothesis, "kernel inequalities need 1 < alpha < 2");
  }
  if (p.kind == KernelInequality::Scaled) {
    if (!(p.b >= 0.0 && p.b <= 1.0) || !(p.g > 0.0 && p.g < a)) {
      throw Error(ErrorKind::Hypothesis,
                  "scaled kernel bound needs 0 <= b <= 1 and 0 < g < alpha");
    }
  } else if (!(p.g >= 0.0 && p.g <= 1.0)) {
    throw Error(ErrorKind::Hypothesis, "complement kernel bound needs 0 <= g <= 1");
  }
  KernelIneqReport rep;
  const std::size_t nl = p.lams.size();
  std::vector<double> sup_by_lam(nl, 0.0), t_by_lam(nl, 0.0);
  parallel_for(nl, [&](std::size_t i) {
    const double lam = p.lams[i];
    for (double t : p.ts) {
      double lhs, rhs;
      if (p.kind == KernelInequality::Scaled) {
        lhs = kernel_eval({a, p.alpha_prime, p.g, p.b, lam, t}, p.ml_tol);
        rhs = std::pow(t, p.g - a * p.b);
      } else {
        lhs = kernel_eval({a, p.alpha_prime, a - 2.0, 1.0 - p.g, lam, t}, p.ml_tol);
        rhs = std::pow(t, a * p.g - 2.0);
      }
      const double ratio = std::abs(lhs) / rhs;
      if (!(ratio <= sup_by_lam[i])) {
        sup_by_lam[i] = ratio;
        t_by_lam[i] = t;
      }
    }
  });
  for (std::size_t i = 0; i < nl; ++i) {
    if (!(sup_by_lam[i] <= rep.sup)) {
      rep.sup = sup_by_lam[i];
      rep.arg_lam = p.lams[i];
      rep.arg_t = t_by_lam[i];
    }
  }
  bool ok = std::isfinite(rep.sup) && rep.sup <= p.c_cap;
  std::ostringstream os;
  os << "empirical sup " << rep.sup << " at lam=" << rep.arg_lam << ", t=" << rep.arg_t;
  if (p.kind == KernelInequality::Scaled && p.b == 0.0) {
    rep.envelope = rgamma(p.alpha_prime);
    ok = ok && rep.sup <= std::abs(rep.envelope) + 1e-9;
    os << "; envelope 1/Gamma(alpha') = " << rep.envelope;
  }
  rep.verdict = ok ? Verdict::Pass : Verdict::Fail;
  rep.note = os.str();
  return rep;
}

MlBoundReport ml_bound_sup(double alpha, double beta, double z_min, int n,
                           double tol) {
  if (!(z_min < -1e-6)) throw Error(ErrorKind::Validation, "z_min must be < -1e-6");
  const auto xs = log_space(1e-6, -z_min, n);
  std::vector<double> vals(xs.size());
  parallel_for(xs.size(), [&](std::size_t i) {
    vals[i] = std::abs(ml({alpha, beta, -xs[i]}, tol)) * (1.0 + xs[i]);
  });
  MlBoundReport rep;
  rep.sup = std::abs(rgamma(beta));
  rep.arg_z = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(vals[i] <= rep.sup)) {
      rep.sup = vals[i];
      rep.arg_z = -xs[i];
    }
  }
  return rep;
}

// --- export ------------------------------------------------------------------

std::string rate_reports_json(const std::vector<RateReport>& reports) {
  auto arr = nlohmann::json::array();
  for (const auto& r : reports) {
    nlohmann::json j;
    j["name"] = r.spec.name;
    j["quantity"] = r.spec.quantity;
    j["theoretical_exponent"] = r.spec.theoretical_exponent;
    j["kind"] = r.spec.kind == RateKind::Equality ? "equality" : "upper-bound";
    j["tolerance"] = r.spec.tolerance;
    j["hypothesis"] = r.spec.hypothesis;
    j["params"] = r.spec.params;
    j["fitted_exponent"] = r.fit.exponent;
    j["stderr"] = r.fit.std_error;
    j["r2"] = r.fit.r2;
    j["points_used"] = r.fit.used;
    j["zeros_excluded"] = r.fit.zeros_excluded;
    j["window"] = {r.window.lo, r.window.hi};
    j["verdict"] = to_string(r.verdict);
    j["note"] = r.note;
    auto pts = nlohmann::json::array();
    for (std::size_t i = 0; i < r.t.size(); ++i) pts.push_back({r.t[i], r.v[i]});
    j["points"] = std::move(pts);
    arr.push_back(std::move(j));
  }
  return arr.dump(2);
}

void write_rate_reports_csv(const std::vector<RateReport>& reports,
                            const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorKind::Configuration, "cannot write " + path);
  using detail::fmt17;
  os << "name,t,value,fitted_exponent,theoretical_exponent,verdict\n";
  for (const auto& r : reports) {
    for (std::size_t i = 0; i < r.t.size(); ++i) {
      os << r.spec.name << ',' << fmt17(r.t[i]) << ',' << fmt17(r.v[i]) << ','
         << fmt17(r.fit.exponent) << ',' << fmt17(r.spec.theoretical_exponent)
         << ',' << to_string(r.verdict) << '\n';
    }
  }
}

}  // namespace fracwave
