// fracwave: batch front end for the Mittag-Leffler evaluator, the linear and
// semilinear solvers and the verification suites.
//
// Exit codes: 0 success, 2 invalid input, 3 numerical failure,
// 4 a verification verdict failed.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "fracwave/caputo_oracle.hpp"
#include "fracwave/config.hpp"
#include "fracwave/errors.hpp"
#include "fracwave/mittag_leffler.hpp"
#include "fracwave/parallel.hpp"
#include "fracwave/rate_verifier.hpp"
#include "fracwave/semilinear_solver.hpp"
#include "numfmt.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fracwave;

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 2;
constexpr int kNumerical = 3;
constexpr int kVerifyFailed = 4;

int exit_code(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::Validation:
    case ErrorKind::Configuration:
    case ErrorKind::ParameterDomain:
    case ErrorKind::Hypothesis:
      return kInvalid;
    default:
      return kNumerical;
  }
}

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(); }

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream os(p);
  if (!os) throw Error(ErrorKind::Configuration, "cannot write " + p.string());
  os << text << '\n';
}

fs::path prepare_out_dir(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw Error(ErrorKind::Configuration, "cannot create " + dir + ": " + ec.message());
  return p;
}

json tool_info() {
  return {{"name", "fracwave"}, {"version", "0.1.0"}, {"threads", thread_count()}};
}

// --- ml-eval -----------------------------------------------------------------

struct MlEvalArgs {
  double alpha = 1.0;
  double beta = 1.0;
  std::vector<double> z;
  std::vector<double> t;
  double lam = 1.0;
  double t_power = 0.0;
  double lam_power = 0.0;
  double tol = kDefaultMlTol;
  std::string csv;
};

int cmd_ml_eval(const MlEvalArgs& a) {
  if (!(a.alpha > 0.0 && a.alpha <= 2.0)) {
    throw Error(ErrorKind::ParameterDomain, "--alpha must lie in (0, 2]");
  }
  if (!std::isfinite(a.beta)) throw Error(ErrorKind::ParameterDomain, "--beta must be finite");
  if (!(a.tol > 0.0)) throw Error(ErrorKind::ParameterDomain, "--tol must be positive");
  if (a.z.empty() == a.t.empty()) {
    throw Error(ErrorKind::Validation, "give either --z values or --t values (kernel mode)");
  }
  for (double z : a.z) {
    if (!std::isfinite(z) || z > 0.0) {
      throw Error(ErrorKind::ParameterDomain, "--z values must be finite and <= 0");
    }
  }
  std::ofstream csv;
  if (!a.csv.empty()) {
    csv.open(a.csv);
    if (!csv) throw Error(ErrorKind::Configuration, "cannot write " + a.csv);
  }
  if (!a.z.empty()) {
    std::printf("%-24s %-24s %s\n", "z", "value", "regime");
    if (csv) csv << "alpha,beta,z,value,regime\n";
    for (double z : a.z) {
      const auto v = ml_eval({a.alpha, a.beta, z}, a.tol);
      const auto regime = std::string(to_string(v.regime));
      std::printf("%-24s %-24s %s\n", detail::fmt17(z).c_str(),
                  detail::fmt17(v.value).c_str(), regime.c_str());
      if (csv) {
        csv << detail::fmt17(a.alpha) << ',' << detail::fmt17(a.beta) << ','
            << detail::fmt17(z) << ',' << detail::fmt17(v.value) << ',' << regime << '\n';
      }
    }
    return kOk;
  }
  if (!(a.lam > 0.0)) throw Error(ErrorKind::ParameterDomain, "--lam must be positive");
  std::printf("%-24s %-24s %s\n", "t", "value", "z");
  if (csv) csv << "alpha,beta,lam,t,t_power,lam_power,value\n";
  for (double t : a.t) {
    if (!(t >= 0.0)) throw Error(ErrorKind::ParameterDomain, "--t values must be >= 0");
    const double v = kernel_eval({a.alpha, a.beta, a.t_power, a.lam_power, a.lam, t}, a.tol);
    std::printf("%-24s %-24s %s\n", detail::fmt17(t).c_str(), detail::fmt17(v).c_str(),
                detail::fmt17(-a.lam * std::pow(t, a.alpha)).c_str());
    if (csv) {
      csv << detail::fmt17(a.alpha) << ',' << detail::fmt17(a.beta) << ','
          << detail::fmt17(a.lam) << ',' << detail::fmt17(t) << ','
          << detail::fmt17(a.t_power) << ',' << detail::fmt17(a.lam_power) << ','
          << detail::fmt17(v) << '\n';
    }
  }
  return kOk;
}

// --- solve -------------------------------------------------------------------

int cmd_solve(const std::string& config_path, const std::string& out_dir) {
  const auto cfg = load_run_config(config_path);
  const json config = json::parse(cfg.resolved);
  const auto dir = prepare_out_dir(out_dir);

  if (cfg.kind == RunKind::Linear) {
    LinearOptions lo;
    lo.tol = cfg.ml_tol;
    lo.want_d2u = cfg.want_d2u;
    const auto tr = solve_linear(linear_problem(cfg), time_grid(cfg), lo);
    write_trajectory_csv(tr, (dir / "trajectory.csv").string());
    json meta = {{"config", config},
                 {"trajectory", json::parse(trajectory_metadata_json(tr))},
                 {"tool", tool_info()}};
    write_text(dir / "metadata.json", meta.dump(2));
    std::printf("linear: %zu nodes x %zu modes -> %s\n", tr.time.size(), tr.grid->size(),
                dir.string().c_str());
    return kOk;
  }
  if (cfg.kind != RunKind::Semilinear) {
    throw Error(ErrorKind::Validation,
                std::string("solve handles linear and semilinear configs; '") +
                    to_string(cfg.kind) + "' belongs to verify");
  }

  auto scfg = cfg.semilinear;
  SolveOutcome out;
  try {
    out = solve_semilinear(semilinear_problem(cfg), cfg.time.T, scfg);
  } catch (const Error& e) {
    json rep = {{"status", "error"},
                {"error_kind", to_string(e.kind())},
                {"diagnostics", e.what()},
                {"config", config}};
    write_text(dir / "report.json", rep.dump(2));
    throw;
  }
  write_trajectory_csv(out.traj, (dir / "trajectory.csv").string());
  write_energy_csv(out.energy, (dir / "energy.csv").string());
  json rep = json::parse(outcome_report_json(out));
  rep["config"] = config;
  write_text(dir / "report.json", rep.dump(2));
  json meta = {{"config", config},
               {"trajectory", json::parse(trajectory_metadata_json(out.traj))},
               {"tool", tool_info()}};
  write_text(dir / "metadata.json", meta.dump(2));
  std::printf("semilinear: %s, t_reached %s", to_string(out.status),
              detail::fmt17(out.t_reached).c_str());
  if (out.t_max_estimate) std::printf(", T_max ~ %s", detail::fmt17(*out.t_max_estimate).c_str());
  std::printf("\n");
  // A detected blow-up or stall is a result, not a tool failure.
  return kOk;
}

// --- verify ------------------------------------------------------------------

struct SuiteResult {
  json reports = json::array();
  bool all_pass = true;
};

void tally(SuiteResult& s, Verdict v) {
  if (v == Verdict::Fail) s.all_pass = false;
}

void add_rates(SuiteResult& s, const std::vector<RateReport>& reps,
               const std::vector<std::string>& only) {
  std::vector<RateReport> kept;
  for (const auto& r : reps) {
    if (!only.empty()) {
      bool keep = false;
      for (const auto& n : only) keep = keep || r.spec.name == n;
      if (!keep) continue;
    }
    tally(s, r.verdict);
    std::printf("  %-8s %-44s fitted %-10.4f theory %-10.4f\n", to_string(r.verdict),
                r.spec.name.c_str(), r.fit.exponent, r.spec.theoretical_exponent);
    kept.push_back(r);
  }
  for (auto& j : json::parse(rate_reports_json(kept))) s.reports.push_back(std::move(j));
}

SuiteResult suite_rates(const RunConfig& c) {
  SuiteResult s;
  for (double a : c.rates.alphas) {
    std::printf("alpha = %g\n", a);
    add_rates(s, run_rate_suite(a, c.rates.options), c.rates.only);
    if (c.rates.single_mode) add_rates(s, run_single_mode_rates(a, c.rates.options), c.rates.only);
  }
  return s;
}

SuiteResult suite_ic(const RunConfig& c) {
  SuiteResult s;
  for (double a : c.ic.alphas) {
    std::printf("alpha = %g\n", a);
    add_rates(s, run_initial_condition_suite(a, c.ic.sigma, c.ic.options), {});
  }
  return s;
}

SuiteResult suite_kernel(const RunConfig& c) {
  SuiteResult s;
  for (const auto& p : c.kernel_ineq) {
    KernelIneqReport r;
    try {
      r = verify_kernel_inequality(p);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Hypothesis) throw;
      r.verdict = Verdict::Skipped;
      r.note = std::string("hypothesis not satisfied: ") + e.what();
    }
    tally(s, r.verdict);
    const char* kind = p.kind == KernelInequality::Scaled ? "scaled" : "complement";
    std::printf("  %-8s %-10s alpha %g alpha' %g b %g g %g: sup %s\n", to_string(r.verdict),
                kind, p.alpha, p.alpha_prime, p.b, p.g, detail::fmt17(r.sup).c_str());
    s.reports.push_back({{"kind", kind},
                         {"alpha", p.alpha},
                         {"alpha_prime", p.alpha_prime},
                         {"b", p.b},
                         {"g", p.g},
                         {"sup", finite_or_null(r.sup)},
                         {"arg_lam", r.arg_lam},
                         {"arg_t", r.arg_t},
                         {"envelope", r.envelope},
                         {"verdict", to_string(r.verdict)},
                         {"note", r.note}});
  }
  return s;
}

SuiteResult suite_residual(const RunConfig& c) {
  SuiteResult s;
  const auto& rs = c.residual;
  LinearOptions lo;
  lo.tol = c.ml_tol;
  const auto levels = residual_study(linear_problem(c), c.time.T, rs.h, rs.levels, rs.t_min, lo);
  bool ok = levels.front().max_residual <= rs.max_residual;
  json lv = json::array();
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const auto& l = levels[i];
    // Once the coarser level is already at roundoff there is no order left
    // to observe.
    const bool exact = i > 0 && levels[i - 1].max_residual <= rs.floor;
    if (i > 0 && !exact && !(l.order >= rs.min_order)) ok = false;
    std::printf("  h %-12s residual %-24s order %s\n", detail::fmt17(l.h).c_str(),
                detail::fmt17(l.max_residual).c_str(),
                i == 0 ? "-" : exact ? "(at roundoff)" : detail::fmt17(l.order).c_str());
    lv.push_back({{"h", l.h},
                  {"max_residual", l.max_residual},
                  {"order", finite_or_null(l.order)},
                  {"at_roundoff", exact}});
  }
  const Verdict v = ok ? Verdict::Pass : Verdict::Fail;
  tally(s, v);
  std::printf("  %s (bound %s, min order %s)\n", to_string(v),
              detail::fmt17(rs.max_residual).c_str(), detail::fmt17(rs.min_order).c_str());
  s.reports.push_back({{"name", "oracle_residual"},
                       {"levels", lv},
                       {"max_residual_bound", rs.max_residual},
                       {"min_order", rs.min_order},
                       {"verdict", to_string(v)}});
  return s;
}

int cmd_verify(const std::string& config_path, const std::string& suite,
               const std::string& out_dir) {
  const auto cfg = load_run_config(config_path);
  static const std::map<std::string, RunKind> suites = {
      {"rates", RunKind::Rates},
      {"kernel-ineq", RunKind::KernelIneq},
      {"residual", RunKind::Residual},
      {"ic", RunKind::InitialConditions}};
  const std::string name = suite.empty() ? to_string(cfg.kind) : suite;
  const auto it = suites.find(name);
  if (it == suites.end()) {
    throw Error(ErrorKind::Validation,
                "--suite: unknown suite '" + name + "' (rates, kernel-ineq, residual, ic)");
  }
  if (it->second != cfg.kind) {
    throw Error(ErrorKind::Validation, "--suite " + name + " does not match config kind '" +
                                           to_string(cfg.kind) + "'");
  }
  const auto dir = prepare_out_dir(out_dir);
  const json config = json::parse(cfg.resolved);
  SuiteResult s;
  try {
    switch (cfg.kind) {
      case RunKind::Rates:
        s = suite_rates(cfg);
        break;
      case RunKind::InitialConditions:
        s = suite_ic(cfg);
        break;
      case RunKind::KernelIneq:
        s = suite_kernel(cfg);
        break;
      default:
        s = suite_residual(cfg);
        break;
    }
  } catch (const Error& e) {
    json rep = {{"suite", name},
                {"status", "error"},
                {"error_kind", to_string(e.kind())},
                {"diagnostics", e.what()},
                {"config", config}};
    write_text(dir / "report.json", rep.dump(2));
    throw;
  }
  json rep = {{"suite", name},
              {"status", s.all_pass ? "pass" : "fail"},
              {"reports", s.reports},
              {"config", config}};
  write_text(dir / "report.json", rep.dump(2));
  write_text(dir / "metadata.json", json{{"config", config}, {"tool", tool_info()}}.dump(2));
  std::printf("%s: %s\n", name.c_str(), s.all_pass ? "pass" : "FAIL");
  return s.all_pass ? kOk : kVerifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fracwave: time-fractional wave equations in spectral form"};
  app.require_subcommand(1);

  MlEvalArgs ml;
  auto* ml_cmd = app.add_subcommand("ml-eval", "Evaluate E_{alpha,beta}(z) or a scaled kernel");
  ml_cmd->add_option("--alpha", ml.alpha, "alpha in (0, 2]")->required();
  ml_cmd->add_option("--beta", ml.beta, "beta");
  ml_cmd->add_option("--z", ml.z, "arguments z <= 0");
  ml_cmd->add_option("--t", ml.t, "times for lam^a t^p E(-lam t^alpha)");
  ml_cmd->add_option("--lam", ml.lam, "eigenvalue (kernel mode)");
  ml_cmd->add_option("--t-power", ml.t_power, "p (kernel mode)");
  ml_cmd->add_option("--lam-power", ml.lam_power, "a (kernel mode)");
  ml_cmd->add_option("--tol", ml.tol, "target accuracy");
  ml_cmd->add_option("--csv", ml.csv, "also write a CSV table");

  std::string solve_config, solve_out = "out";
  auto* solve_cmd = app.add_subcommand("solve", "Run a linear or semilinear config");
  solve_cmd->add_option("config", solve_config, "config document")->required();
  solve_cmd->add_option("--out-dir", solve_out, "artifact directory");

  std::string verify_config, verify_suite, verify_out = "out";
  auto* verify_cmd = app.add_subcommand("verify", "Run a verification suite");
  verify_cmd->add_option("config", verify_config, "config document")->required();
  verify_cmd->add_option("--suite", verify_suite, "rates | kernel-ineq | residual | ic");
  verify_cmd->add_option("--out-dir", verify_out, "artifact directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kInvalid;
  }

  try {
    if (ml_cmd->parsed()) return cmd_ml_eval(ml);
    if (solve_cmd->parsed()) return cmd_solve(solve_config, solve_out);
    if (verify_cmd->parsed()) return cmd_verify(verify_config, verify_suite, verify_out);
  } catch (const Error& e) {
    std::fprintf(stderr, "fracwave: %s error: %s\n", to_string(e.kind()), e.what());
    return exit_code(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "fracwave: %s\n", e.what());
    return kNumerical;
  }
  return kInvalid;
}
