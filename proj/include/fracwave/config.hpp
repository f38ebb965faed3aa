#pragma once

// Run configuration documents for the command-line front end. A document
// is JSON with a schema_version field; every key is checked, so a typo is
// a validation error rather than a silently ignored option. The parser
// also produces the resolved document (all defaults filled in) that is
// echoed into every artifact.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fracwave/linear_solver.hpp"
#include "fracwave/rate_verifier.hpp"
#include "fracwave/semilinear_solver.hpp"

namespace fracwave {

inline constexpr int kConfigSchemaVersion = 1;

enum class RunKind { Linear, Semilinear, Rates, Residual, InitialConditions, KernelIneq };
const char* to_string(RunKind k) noexcept;

struct TimeSpec {
  double T = 1.0;
  int N = 128;
  double grading = 1.0;
  bool uniform = false;
};

struct RatesSpec {
  std::vector<double> alphas{1.25, 1.5, 1.75};
  RateSuiteOptions options;
  bool single_mode = false;
  std::vector<std::string> only;  // empty: every rate
};

struct ResidualSpec {
  double h = 5e-4;
  int levels = 2;              // h, h/2, ...
  double max_residual = 2e-3;  // at the coarsest level
  double min_order = 1.0;
  double t_min = 0.0;          // nodes earlier than this are not scored
  double floor = 1e-9;         // residuals below this count as exact
};

struct IcSpec {
  std::vector<double> alphas{1.25, 1.5, 1.75};
  double sigma = 0.25;
  RateSuiteOptions options;
};

struct RunConfig {
  int schema_version = kConfigSchemaVersion;
  RunKind kind = RunKind::Linear;
  std::string label;

  // problem (linear, semilinear, residual)
  GridPtr grid;
  double alpha = 1.5;
  std::vector<double> u0, u1;
  Source source;
  std::optional<double> source_lp;
  std::optional<Nonlinearity> nonlinearity;
  TimeSpec time;
  double ml_tol = kDefaultMlTol;
  bool want_d2u = false;
  SemilinearConfig semilinear;

  // verification suites
  RatesSpec rates;
  ResidualSpec residual;
  IcSpec ic;
  std::vector<KernelIneqParams> kernel_ineq;

  std::string resolved;  // JSON text
};

/// Parses a document; relative paths (spectral measures) resolve against
/// base_dir. Throws Error(Validation) naming the offending field.
RunConfig parse_run_config(std::string_view text, const std::string& base_dir = ".");
RunConfig load_run_config(const std::string& path);

LinearProblem linear_problem(const RunConfig& c);
SemilinearProblem semilinear_problem(const RunConfig& c);
TimeGrid time_grid(const RunConfig& c);

}  // namespace fracwave
