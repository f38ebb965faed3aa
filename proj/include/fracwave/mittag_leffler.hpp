#pragma once

// Two-parameter Mittag-Leffler function E_{a,b}(z) on the closed negative
// real axis, and the scaled kernels t^p lam^a E_{a,b}(-lam t^a) that the
// solution formulas are built from.
//
// Evaluation switches between three regimes:
//   * power series            |z| small
//   * ray-contour quadrature  intermediate |z|
//   * algebraic asymptotics   |z| large (plus the oscillating pole
//                             contributions when 1 < alpha <= 2)

#include <string_view>

namespace fracwave {

inline constexpr double kDefaultMlTol = 1e-14;

enum class MlRegime { Series, Integral, Asymptotic };

std::string_view to_string(MlRegime regime) noexcept;

struct MlQuery {
  double alpha;
  double beta;
  double z;
};

struct MlValue {
  double value;
  MlRegime regime;
};

struct AsymptoticValue {
  double value;
  double error;  // magnitude of the first omitted term
};

/// Reciprocal gamma function with 1/Gamma(-n) = 0 at the poles.
double rgamma(double x);

/// E_{alpha,beta}(z) for z <= 0, 0 < alpha <= 2. Relative error <= tol
/// (absolute when |E| < 1). tol must lie in (0, 1e-6].
double ml(const MlQuery& q, double tol = kDefaultMlTol);
MlValue ml_eval(const MlQuery& q, double tol = kDefaultMlTol);

/// Partial sum of the defining power series with exactly n_terms terms.
double ml_series(const MlQuery& q, int n_terms);

/// Truncated large-|z| expansion. Throws ErrorKind::Regime when |z| is
/// below asymptotic_threshold(alpha).
AsymptoticValue ml_asymptotic(const MlQuery& q, int n_terms);

/// Ray-contour quadrature, valid for every z < 0. Exposed for regime
/// consistency checks; ml() picks it automatically.
double ml_integral(const MlQuery& q, double tol = kDefaultMlTol);

/// |z| above which ml() tries the asymptotic expansion first.
double asymptotic_threshold(double alpha, double tol = kDefaultMlTol);

/// |z| up to which ml() sums the power series.
double series_threshold(double alpha);

// ---------------------------------------------------------------------------
// Kernels

/// lam^a t^p E_{alpha,beta}(-lam t^alpha).
struct KernelSpec {
  double alpha;
  double beta;
  double t_power;    // p
  double lam_power;  // a
  double lam;
  double t;
};

double kernel_eval(const KernelSpec& k, double tol = kDefaultMlTol);

/// Member of the family e_b(t) = t^{b-1} E_{alpha,b}(-lam t^alpha), which
/// is closed under differentiation (d/dt e_b = e_{b-1}) and integration
/// (int_0^t e_b = e_{b+1}). Uses E_{a,b}(z) = 1/Gamma(b) + z E_{a,a+b}(z)
/// to stay finite for b <= 0.
double ml_kernel(double alpha, double beta, double lam, double t,
                 double tol = kDefaultMlTol);

enum class KernelDerivative {
  K11ToK3,   // d/dt E_{a,1}(-lam t^a)         = -lam t^{a-1} E_{a,a}
  K12ToK11,  // d/dt t E_{a,2}(-lam t^a)       = E_{a,1}
  K3ToK3p,   // d/dt t^{a-1} E_{a,a}(-lam t^a) = t^{a-2} E_{a,a-1}
};

double kernel_time_derivative(KernelDerivative kind, double alpha, double lam,
                              double t, double tol = kDefaultMlTol);

}  // namespace fracwave
