#include "fracwave/mittag_leffler.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>

#include "fracwave/errors.hpp"

namespace fracwave {

namespace {

using std::numbers::pi;
using cplx = std::complex<double>;

constexpr int kSeriesCap = 500;
constexpr int kAsymptoticCap = 200;
constexpr int kMaxRefinements = 9;

bool is_nonpositive_integer(double x) {
  return x <= 0.0 && x == std::floor(x);
}

// sin(pi x) with exact zeros at the integers.
double sinpi(double x) {
  double r = x - 2.0 * std::round(0.5 * x);  // r in [-1, 1]
  if (r > 0.5) return std::sin(pi * (1.0 - r));
  if (r < -0.5) return -std::sin(pi * (1.0 + r));
  return std::sin(pi * r);
}

void check_query(const MlQuery& q) {
  if (!(q.alpha > 0.0 && q.alpha <= 2.0)) {
    std::ostringstream os;
    os << "alpha must lie in (0, 2], got " << q.alpha;
    throw Error(ErrorKind::ParameterDomain, os.str());
  }
  if (!std::isfinite(q.beta)) {
    throw Error(ErrorKind::ParameterDomain, "beta must be finite");
  }
  if (!(q.z <= 0.0) || !std::isfinite(q.z)) {
    std::ostringstream os;
    os << "z must be finite and <= 0, got " << q.z;
    throw Error(ErrorKind::ParameterDomain, os.str());
  }
}

void check_tol(double tol) {
  if (!(tol > 0.0 && tol <= 1e-6)) {
    std::ostringstream os;
    os << "tolerance must lie in (0, 1e-6], got " << tol;
    throw Error(ErrorKind::ParameterDomain, os.str());
  }
}

// x^n / Gamma(alpha n + beta) with the sign of z^n folded in by the caller.
double series_term_magnitude(double x, int n, double arg, double xpow) {
  if (arg > 170.0) {
    if (x == 0.0) return 0.0;
    double lg = std::lgamma(arg);
    return std::exp(n * std::log(x) - lg);
  }
  return xpow * rgamma(arg);
}

struct SeriesResult {
  double value;
  bool converged;
};

SeriesResult series_adaptive(double alpha, double beta, double x, double tol) {
  double sum = 0.0;
  double xpow = 1.0;
  int small_run = 0;
  // Terms grow until alpha*n is near x^{1/alpha}; only test after the peak.
  const int n_peak =
      static_cast<int>(std::ceil(std::pow(x, 1.0 / alpha) / alpha)) + 1;
  for (int n = 0; n < kSeriesCap; ++n) {
    double mag = series_term_magnitude(x, n, alpha * n + beta, xpow);
    double term = (n % 2 == 0) ? mag : -mag;
    sum += term;
    if (n >= n_peak && std::abs(term) <= tol * std::abs(sum)) {
      if (++small_run == 2) return {sum, true};
    } else {
      small_run = 0;
    }
    xpow *= x;
    if (!std::isfinite(xpow)) break;
  }
  return {sum, false};
}

struct AsymptoticParts {
  double algebraic;
  double poles;
  double next_term;
  double exp_bound;
};

// Oscillating contribution of the two poles mu = x^{1/a} e^{+-i pi/a} of the
// Hankel integrand; present only for 1 < alpha <= 2.
double pole_contribution(double alpha, double beta, double x) {
  if (alpha <= 1.0 || x == 0.0) return 0.0;
  const double rho = std::pow(x, 1.0 / alpha);
  const double phi = pi / alpha;
  const double mag = std::pow(rho, 1.0 - beta) * std::exp(rho * std::cos(phi));
  if (mag == 0.0) return 0.0;
  const double arg = rho * std::sin(phi) + (1.0 - beta) * phi;
  return (2.0 / alpha) * mag * std::cos(arg);
}

// Bound for the exponentially small part the expansion leaves out when
// alpha <= 1.
double omitted_exponential(double alpha, double beta, double x) {
  if (alpha > 1.0) return 0.0;
  const double rho = std::pow(x, 1.0 / alpha);
  return std::pow(rho, 1.0 - beta) * std::exp(-rho) / alpha;
}

AsymptoticParts asymptotic_fixed(double alpha, double beta, double x,
                                 int n_terms) {
  double sum = 0.0;
  double zinv_pow = 1.0;  // (-1/x)^k
  const double zinv = -1.0 / x;
  double next = 0.0;
  for (int k = 1; k <= n_terms + 1; ++k) {
    zinv_pow *= zinv;
    const double y = beta - alpha * k;
    double term = -zinv_pow * rgamma(y);
    if (k <= n_terms) {
      sum += term;
    } else {
      // the first omitted term can vanish at a pole of Gamma; bound it by
      // |1/Gamma(y)| <= Gamma(1-y)/pi instead
      next = y < 0.5 ? std::exp(std::lgamma(1.0 - y) - k * std::log(x)) / std::numbers::pi
                     : std::abs(term);
    }
  }
  return {sum, pole_contribution(alpha, beta, x), next,
          omitted_exponential(alpha, beta, x)};
}

struct AdaptiveAsymptotic {
  double value;
  bool converged;
};

AdaptiveAsymptotic asymptotic_adaptive(double alpha, double beta, double x,
                                       double tol) {
  const double poles = pole_contribution(alpha, beta, x);
  double sum = 0.0;
  double zinv_pow = 1.0;
  const double zinv = -1.0 / x;
  double prev_env = std::numeric_limits<double>::infinity();
  bool all_zero = true;
  const double log_x = std::log(x);
  for (int k = 1; k <= kAsymptoticCap; ++k) {
    zinv_pow *= zinv;
    const double y = beta - alpha * k;
    const double term = -zinv_pow * rgamma(y);
    if (term != 0.0) all_zero = false;
    // Decide on |1/Gamma(y)| <= Gamma(1-y)/pi rather than on the term
    // itself, which can be accidentally tiny near a pole of Gamma.
    const double env =
        y < 0.5 ? std::exp(std::lgamma(1.0 - y) - k * log_x) / std::numbers::pi
                : std::abs(term);
    if (env > prev_env) break;  // diverging before tolerance
    prev_env = env;
    sum += term;
    const double value = sum + poles;
    if (k > 1 && env <= 0.25 * tol * std::abs(value)) {
      const double expb = omitted_exponential(alpha, beta, x);
      return {value, expb <= tol * std::max(1.0, std::abs(value))};
    }
  }
  // Every algebraic term vanished (alpha = 2 with integer beta): only the
  // pole contributions remain and they are exact.
  return {sum + poles, all_zero};
}

// --- ray-contour quadrature --------------------------------------------------

struct GaussRule {
  std::array<double, 16> x;
  std::array<double, 16> w;
};

const GaussRule& gauss16() {
  static const GaussRule rule = [] {
    using G = boost::math::quadrature::gauss<double, 16>;
    GaussRule r{};
    const auto& a = G::abscissa();
    const auto& w = G::weights();
    for (std::size_t i = 0; i < a.size(); ++i) {
      r.x[2 * i] = a[i];
      r.w[2 * i] = w[i];
      r.x[2 * i + 1] = -a[i];
      r.w[2 * i + 1] = w[i];
    }
    return r;
  }();
  return rule;
}

template <class F>
double gauss_panel(const F& f, double a, double b, double* abs_acc) {
  const auto& g = gauss16();
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double s = 0.0;
  double sa = 0.0;
  for (std::size_t i = 0; i < g.x.size(); ++i) {
    double v = g.w[i] * f(mid + half * g.x[i]);
    s += v;
    sa += std::abs(v);
  }
  *abs_acc += half * sa;
  return half * s;
}

// Integrand on the two rays mu = r e^{+-i theta}, folded into one real
// function of r; the r^{alpha-beta} factor is kept separate so the
// endpoint singularity can be removed by substitution.
class RayIntegrand {
 public:
  RayIntegrand(double alpha, double beta, double x, double theta)
      : alpha_(alpha),
        x_(x),
        cos_t_(std::cos(theta)),
        sin_t_(std::sin(theta)),
        phase0_(theta * (alpha - beta + 1.0)),
        rot_(std::polar(1.0, theta * alpha)) {}

  // f(r) / r^{alpha-beta}
  double regular(double r) const {
    const double decay = std::exp(r * cos_t_);
    if (decay == 0.0) return 0.0;
    const cplx den = std::pow(r, alpha_) * rot_ + x_;
    const cplx num = std::polar(1.0, r * sin_t_ + phase0_);
    return decay * (num / den).imag() / pi;
  }

  double cos_theta() const { return cos_t_; }

 private:
  double alpha_;
  double x_;
  double cos_t_;
  double sin_t_;
  double phase0_;
  cplx rot_;
};

double integral_core(double alpha, double beta, double x, double tol) {
  const double pole_angle = pi / alpha;
  // Keep the rays at least pi/6 away from the poles of the integrand.
  const double theta = alpha >= 1.2 ? pi : 2.0 * pi / 3.0;
  const double residues =
      pole_angle < theta ? pole_contribution(alpha, beta, x) : 0.0;

  RayIntegrand f(alpha, beta, x, theta);
  const double power = alpha - beta;  // > -1 guaranteed by caller
  const double q = 1.0 / (1.0 + power);
  const double r0 = std::pow(x, 1.0 / alpha);
  const double r_split = 1.0;
  const double r_max =
      r0 + (46.0 + std::log1p(x) + std::max(0.0, power) * 4.0) /
               std::abs(f.cos_theta());
  // Near the origin substitute r = exp(-q s) (q = 1/(1+alpha-beta)), which
  // absorbs the r^{alpha-beta} endpoint behaviour and turns the remaining
  // fractional powers of r into exponentially decaying terms in s.
  const double s_max = 40.0;
  auto near_origin = [&](double s) {
    return q * f.regular(r_split * std::exp(-q * s)) *
           std::pow(r_split, 1.0 + power) * std::exp(-s);
  };
  auto far = [&](double r) { return std::pow(r, power) * f.regular(r); };

  double previous = std::numeric_limits<double>::quiet_NaN();
  double current = 0.0;
  for (int level = 0; level < kMaxRefinements; ++level) {
    const int n_far = 8 << level;
    const int n_near = 10 << level;
    double abs_acc = 0.0;
    double s = 0.0;
    const double hs = s_max / n_near;
    for (int k = 0; k < n_near; ++k) {
      s += gauss_panel(near_origin, k * hs, (k + 1) * hs, &abs_acc);
    }
    const double h = (r_max - r_split) / n_far;
    for (int k = 0; k < n_far; ++k) {
      s += gauss_panel(far, r_split + k * h, r_split + (k + 1) * h, &abs_acc);
    }
    current = s;
    if (level > 0) {
      const double scale = std::max(std::abs(current + residues),
                                    std::abs(current));
      const double diff = std::abs(current - previous);
      const double floor = 64.0 * std::numeric_limits<double>::epsilon() *
                           abs_acc;
      if (diff <= 0.1 * tol * scale || diff <= floor) {
        return current + residues;
      }
    }
    previous = current;
  }
  std::ostringstream os;
  os << "Mittag-Leffler contour quadrature did not converge for alpha="
     << alpha << " beta=" << beta << " z=" << -x;
  throw Error(ErrorKind::Accuracy, os.str());
}

double integral_reduced(double alpha, double beta, double x, double tol) {
  // The integrand is only integrable at the origin for beta < 1 + alpha;
  // lower beta with E_{a,b}(z) = (E_{a,b-a}(z) - 1/Gamma(b-a)) / z.
  if (beta >= 1.0 + alpha) {
    const double lower = integral_reduced(alpha, beta - alpha, x, tol);
    return (lower - rgamma(beta - alpha)) / (-x);
  }
  return integral_core(alpha, beta, x, tol);
}

}  // namespace

std::string_view to_string(MlRegime regime) noexcept {
  switch (regime) {
    case MlRegime::Series:
      return "series";
    case MlRegime::Integral:
      return "integral";
    case MlRegime::Asymptotic:
      return "asymptotic";
  }
  return "unknown";
}

double rgamma(double x) {
  if (is_nonpositive_integer(x)) return 0.0;
  if (x > 171.0) return std::exp(-std::lgamma(x));
  if (x < 0.5) {
    // Reflection: 1/Gamma(x) = sin(pi x) Gamma(1-x) / pi.
    const double s = sinpi(x);
    if (1.0 - x > 171.0) {
      const double mag = std::exp(std::lgamma(1.0 - x) + std::log(std::abs(s)) -
                                  std::log(pi));
      return s < 0.0 ? -mag : mag;
    }
    return s * std::tgamma(1.0 - x) / pi;
  }
  return 1.0 / std::tgamma(x);
}

double series_threshold(double alpha) {
  return std::min(5.0, std::pow(5.0, alpha));
}

double asymptotic_threshold(double alpha, double tol) {
  return std::max(20.0, std::pow(std::log(10.0 / tol), alpha));
}

double ml_series(const MlQuery& q, int n_terms) {
  check_query(q);
  if (n_terms < 1) {
    throw Error(ErrorKind::ParameterDomain, "n_terms must be >= 1");
  }
  const double x = -q.z;
  double sum = 0.0;
  double xpow = 1.0;
  for (int n = 0; n < n_terms; ++n) {
    double mag = series_term_magnitude(x, n, q.alpha * n + q.beta, xpow);
    sum += (n % 2 == 0) ? mag : -mag;
    xpow *= x;
  }
  return sum;
}

AsymptoticValue ml_asymptotic(const MlQuery& q, int n_terms) {
  check_query(q);
  if (n_terms < 1) {
    throw Error(ErrorKind::ParameterDomain, "n_terms must be >= 1");
  }
  const double x = -q.z;
  const double threshold = asymptotic_threshold(q.alpha);
  if (x < threshold) {
    std::ostringstream os;
    os << "|z| = " << x << " is below the asymptotic threshold " << threshold
       << " for alpha=" << q.alpha;
    throw Error(ErrorKind::Regime, os.str());
  }
  const auto parts = asymptotic_fixed(q.alpha, q.beta, x, n_terms);
  return {parts.algebraic + parts.poles, parts.next_term + parts.exp_bound};
}

double ml_integral(const MlQuery& q, double tol) {
  check_query(q);
  check_tol(tol);
  const double x = -q.z;
  if (x == 0.0) return rgamma(q.beta);
  return integral_reduced(q.alpha, q.beta, x, tol);
}

MlValue ml_eval(const MlQuery& q, double tol) {
  check_query(q);
  check_tol(tol);
  const double x = -q.z;
  if (x <= series_threshold(q.alpha)) {
    auto s = series_adaptive(q.alpha, q.beta, x, tol);
    if (s.converged) return {s.value, MlRegime::Series};
  } else if (x >= asymptotic_threshold(q.alpha, tol)) {
    auto a = asymptotic_adaptive(q.alpha, q.beta, x, tol);
    if (a.converged) return {a.value, MlRegime::Asymptotic};
  }
  return {integral_reduced(q.alpha, q.beta, x, tol), MlRegime::Integral};
}

double ml(const MlQuery& q, double tol) { return ml_eval(q, tol).value; }

// --- kernels -----------------------------------------------------------------

double kernel_eval(const KernelSpec& k, double tol) {
  if (!(k.lam >= 0.0) || !(k.t >= 0.0)) {
    throw Error(ErrorKind::ParameterDomain, "kernel requires lam >= 0, t >= 0");
  }
  if (k.t == 0.0 && k.t_power < 0.0) {
    throw Error(ErrorKind::SingularKernel,
                "kernel t^p with p < 0 is singular at t = 0");
  }
  const double z = -k.lam * std::pow(k.t, k.alpha);
  const double e = ml({k.alpha, k.beta, z}, tol);
  if (e == 0.0) return 0.0;
  if (k.lam == 0.0) {
    if (k.lam_power != 0.0) return 0.0;
    return (k.t_power == 0.0 ? 1.0 : std::pow(k.t, k.t_power)) * e;
  }
  if (k.t == 0.0) {
    return k.t_power == 0.0 ? std::pow(k.lam, k.lam_power) * e : 0.0;
  }
  // Combine the prefactors in log space so large lam with small t cannot
  // overflow before the decay of E is applied.
  const double log_pref = k.lam_power * std::log(k.lam) + k.t_power * std::log(k.t);
  const double pref = std::exp(log_pref);
  if (std::isfinite(pref) && pref != 0.0) return pref * e;
  const double le = std::log(std::abs(e)) + log_pref;
  return e < 0.0 ? -std::exp(le) : std::exp(le);
}

double ml_kernel(double alpha, double beta, double lam, double t, double tol) {
  if (!(lam >= 0.0) || !(t >= 0.0)) {
    throw Error(ErrorKind::ParameterDomain, "kernel requires lam >= 0, t >= 0");
  }
  if (is_nonpositive_integer(beta)) {
    // 1/Gamma(beta) = 0, so e_b(t) = -lam t^{a+b-1} E_{a,a+b}(-lam t^a).
    if (lam == 0.0) return 0.0;
    return -lam * ml_kernel(alpha, alpha + beta, lam, t, tol);
  }
  if (t == 0.0) {
    if (beta > 1.0) return 0.0;
    if (beta == 1.0) return 1.0;
    throw Error(ErrorKind::SingularKernel,
                "kernel t^{beta-1} E(...) is singular at t = 0 for beta < 1");
  }
  return kernel_eval({alpha, beta, beta - 1.0, 0.0, lam, t}, tol);
}

double kernel_time_derivative(KernelDerivative kind, double alpha, double lam,
                              double t, double tol) {
  if (!(t > 0.0) || !(lam >= 0.0)) {
    throw Error(ErrorKind::ParameterDomain,
                "kernel derivative requires t > 0 and lam >= 0");
  }
  switch (kind) {
    case KernelDerivative::K11ToK3:
      if (lam == 0.0) return 0.0;
      return -lam * ml_kernel(alpha, alpha, lam, t, tol);
    case KernelDerivative::K12ToK11:
      return ml_kernel(alpha, 1.0, lam, t, tol);
    case KernelDerivative::K3ToK3p:
      return ml_kernel(alpha, alpha - 1.0, lam, t, tol);
  }
  throw Error(ErrorKind::ParameterDomain, "unknown kernel derivative kind");
}

}  // namespace fracwave
