#pragma once

// Power-law fits near t = 0 and the checks built on them: rates of the
// a priori estimates, approach to the initial data, and uniform bounds for
// the scaled Mittag-Leffler kernels.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fracwave/linear_solver.hpp"

namespace fracwave {

struct PowerFit {
  double exponent = 0.0;
  double std_error = 0.0;
  double r2 = 1.0;
  std::size_t used = 0;
  std::size_t zeros_excluded = 0;
};

struct FitWindow {
  double lo;
  double hi;
};

/// Least squares slope of log v against log t over points with
/// lo <= t <= hi and v > 0. Exact zeros are excluded and counted; fewer
/// than six usable points is an InsufficientData error.
PowerFit fit_power_law(std::span<const double> t, std::span<const double> v,
                       FitWindow w);

enum class RateKind {
  Equality,    // the instance attains the rate: |fit - theory| <= tol
  UpperBound,  // the estimate only bounds growth: fit >= theory - tol
};

struct RateSpec {
  std::string name;
  std::string quantity;  // EstimateSeries name
  double theoretical_exponent;
  RateKind kind = RateKind::Equality;
  double tolerance = 0.05;
  std::string hypothesis;  // human-readable, recorded in reports
  bool hypothesis_holds = true;
  std::map<std::string, double> params;
};

enum class Verdict { Pass, Fail, Skipped };
const char* to_string(Verdict v) noexcept;

struct RateReport {
  RateSpec spec;
  PowerFit fit;
  FitWindow window{0.0, 0.0};
  Verdict verdict = Verdict::Fail;
  std::string note;
  std::vector<double> t;
  std::vector<double> v;
};

RateReport verify_rate(std::span<const double> t, std::span<const double> v,
                       const RateSpec& spec, FitWindow w);
std::vector<RateReport> verify_rates(const EstimateSeries& es,
                                     const std::vector<RateSpec>& specs,
                                     FitWindow w);

// ---------------------------------------------------------------------------
// Saturation instances

/// Log-spaced eigenvalues on [lam_lo, lam_hi] with weights lam dln(lam),
/// i.e. a discretization of Lebesgue measure in the spectral variable.
GridPtr build_log_spectrum(double lam_lo, double lam_hi, int per_decade);

/// Coefficients lam^{-kappa/2}: data lying exactly on the border of
/// V_{(kappa-1)/2}, the pattern for which the estimates are attained.
std::vector<double> critical_data(const SpectralGrid& g, double kappa);

struct RateSuiteOptions {
  double T = 1.0;
  int N = 256;
  FitWindow window{1e-4, 1e-2};  // relative to T
  double tolerance = 0.05;
  double weak_gamma_tilde = 0.5;
  double weak_gamma = 0.25;
  double strong_gamma = 0.75;
  double strong_gamma_tilde = 0.25;
  double strong_theta = 0.25;
  double lam_lo = 1e-4;
  double lam_hi = 1e12;
  int per_decade = 16;
  double ml_tol = 1e-12;
};

/// The six estimate rates on their saturation instances for one alpha.
std::vector<RateReport> run_rate_suite(double alpha, const RateSuiteOptions& o = {});

/// Single-mode instances (lam = 1) checked with upper-bound semantics.
std::vector<RateReport> run_single_mode_rates(double alpha,
                                              const RateSuiteOptions& o = {});

// ---------------------------------------------------------------------------
// Initial conditions

struct IcOptions {
  double sigma = 0.0;
  double beta_ic = 0.5;
  double gamma_tilde = 0.5;
  double ic_tol = 1e-2;
  int tail_nodes = 6;
};

struct IcReport {
  Verdict verdict = Verdict::Fail;
  std::string note;
  std::vector<double> t;
  std::vector<double> u_distance;   // |u(t) - u0|_{V_sigma}
  std::vector<double> du_distance;  // |u'(t) - u1|_{V_-beta}
  bool u_monotone = false;
  bool du_monotone = false;
};

IcReport verify_initial_conditions(const Trajectory& traj, const IcOptions& o);

/// Approach rates t^alpha (u0 data, single mode) and t^{1 - alpha sigma}
/// (critical u1 data) as fitted RateReports.
std::vector<RateReport> run_initial_condition_suite(double alpha, double sigma,
                                                    const RateSuiteOptions& o = {});

// ---------------------------------------------------------------------------
// Kernel bounds

enum class KernelInequality {
  Scaled,      // |lam^b t^g E_{a,a'}(-lam t^a)| <= C t^{g - a b}
  Complement,  // |lam^{1-g} t^{a-2} E_{a,a'}(-lam t^a)| <= C t^{a g - 2}
};

struct KernelIneqReport {
  Verdict verdict = Verdict::Fail;
  std::string note;
  double sup = 0.0;
  double arg_lam = 0.0;
  double arg_t = 0.0;
  double envelope = 0.0;  // analytic bound when known (b = 0), else 0
};

struct KernelIneqParams {
  KernelInequality kind = KernelInequality::Scaled;
  double alpha;
  double alpha_prime;
  double b = 0.0;      // lambda exponent (Scaled)
  double g = 1.0;      // t exponent (Scaled) or gamma (Complement)
  std::vector<double> lams;
  std::vector<double> ts;
  double c_cap = 1e3;
  double ml_tol = 1e-10;
};

KernelIneqReport verify_kernel_inequality(const KernelIneqParams& p);

/// n log-spaced points on [lo, hi].
std::vector<double> log_space(double lo, double hi, int n);

struct MlBoundReport {
  double sup = 0.0;
  double arg_z = 0.0;
};

/// sup of |E_{a,b}(z)| (1 + |z|) over z = 0 and n log-spaced points of
/// [z_min, -1e-6].
MlBoundReport ml_bound_sup(double alpha, double beta, double z_min, int n,
                           double tol = 1e-10);

// ---------------------------------------------------------------------------
// Export

std::string rate_reports_json(const std::vector<RateReport>& reports);
void write_rate_reports_csv(const std::vector<RateReport>& reports,
                            const std::string& path);

}  // namespace fracwave
