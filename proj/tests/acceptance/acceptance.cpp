// One line per acceptance criterion; exit status 1 when any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "fracwave/caputo_oracle.hpp"
#include "fracwave/errors.hpp"
#include "fracwave/linear_solver.hpp"
#include "fracwave/mittag_leffler.hpp"
#include "fracwave/rate_verifier.hpp"
#include "fracwave/semilinear_solver.hpp"

using namespace fracwave;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " FAILED[" << what << "]";
    }
  }
};

GridPtr single(double lam) {
  return std::make_shared<SpectralGrid>(std::vector<Mode>{{1, lam, 1.0}}, lam, "single");
}

double sup_diff(const Field& a, const Field& b) {
  double w = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    w = std::max(w, std::abs(a.data()[i] - b.data()[i]));
  }
  return w;
}

LinearProblem manufactured(double a, double lam, double p) {
  ClosedFormSource s;
  s.per_mode = {{{std::tgamma(p + 1) / std::tgamma(p + 1 - a), p - a}, {lam, 0.0}, {lam, p}}};
  return {single(lam), {1.0}, {0.0}, s, a};
}

void closed_forms(Outcome& o) {
  double e_exp = 0, e_cos = 0, e_expm1 = 0, e_sinc = 0;
  for (int i = 0; i <= 2000; ++i) {
    const double z = -50.0 * i / 2000;
    e_exp = std::max(e_exp, std::abs(ml({1, 1, z}) - std::exp(z)) / std::max(1.0, std::exp(z)));
    if (z != 0.0) e_expm1 = std::max(e_expm1, std::abs(ml({1, 2, z}) - std::expm1(z) / z));
    const double x = 20.0 * i / 2000;
    e_cos = std::max(e_cos, std::abs(ml({2, 1, -x * x}) - std::cos(x)));
    if (x != 0.0) e_sinc = std::max(e_sinc, std::abs(ml({2, 2, -x * x}) - std::sin(x) / x));
  }
  o.detail << "exp " << e_exp << " cos " << e_cos << " expm1/z " << e_expm1 << " sinc " << e_sinc;
  o.require(e_exp <= 1e-12, "exp");
  o.require(e_cos <= 1e-10, "cos");
  o.require(e_expm1 <= 1e-10, "(e^z-1)/z");
  o.require(e_sinc <= 1e-10, "sin/x");
}

void derivative_identities(Outcome& o) {
  auto K = [](KernelDerivative k, double a, double lam, double t) {
    const double z = -lam * std::pow(t, a);
    switch (k) {
      case KernelDerivative::K11ToK3:
        return ml({a, 1, z});
      case KernelDerivative::K12ToK11:
        return t * ml({a, 2, z});
      case KernelDerivative::K3ToK3p:
        return std::pow(t, a - 1) * ml({a, a, z});
    }
    return 0.0;
  };
  double worst = 0.0;
  int n = 0;
  for (double a : {1.25, 1.5, 1.75}) {
    for (auto kind : {KernelDerivative::K11ToK3, KernelDerivative::K12ToK11,
                      KernelDerivative::K3ToK3p}) {
      for (double lam : log_space(1e-2, 1e4, 13)) {
        for (double t : log_space(1e-3, 10.0, 13)) {
          const double h = 1e-3 * std::min(t, std::pow(lam, -1.0 / a));
          auto k = [&](double s) { return K(kind, a, lam, s); };
          const double fd =
              (k(t - 2 * h) - 8 * k(t - h) + 8 * k(t + h) - k(t + 2 * h)) / (12 * h);
          const double an = kernel_time_derivative(kind, a, lam, t, 1e-12);
          worst = std::max(worst, std::abs(fd - an) / std::max(std::abs(an), 1e-3));
          ++n;
        }
      }
    }
  }
  o.detail << n << " points, worst relative error " << worst;
  o.require(worst <= 1e-5, "fd mismatch");
}

void ml_bound(Outcome& o) {
  double worst_sup = 0.0, worst_drift = 0.0;
  for (double a : {1.1, 1.5, 1.9}) {
    for (double b : {1.0, 2.0, a, a - 1.0}) {
      const auto c = ml_bound_sup(a, b, -1e6, 2000);
      const auto f = ml_bound_sup(a, b, -1e6, 20000);
      worst_sup = std::max(worst_sup, f.sup);
      worst_drift = std::max(worst_drift, std::abs(f.sup - c.sup) / f.sup);
    }
  }
  o.detail << "max sup " << worst_sup << ", max drift under 10x refinement " << worst_drift;
  o.require(worst_sup <= 1e3, "sup");
  o.require(worst_drift <= 0.05, "refinement drift");
}

void kernel_inequalities(Outcome& o) {
  const auto lams = log_space(1e-3, 1e6, 60);
  const auto ts = log_space(1e-4, 1.0, 60);
  int n = 0, skipped = 0;
  for (double a : {1.25, 1.5, 1.75}) {
    for (double ap : {1.0, a, 2.0}) {
      // b = 0: analytic envelope 1/Gamma(alpha')
      KernelIneqParams p{KernelInequality::Scaled, a, ap, 0.0, 1.0, lams, ts};
      const auto r0 = verify_kernel_inequality(p);
      o.require(r0.verdict == Verdict::Pass, "envelope");
      o.require(std::abs(r0.envelope - 1.0 / std::tgamma(ap)) <= 1e-14, "envelope value");
      ++n;
      for (double b : {0.25, 0.5, 1.0}) {
        p.b = b;
        try {
          const auto r = verify_kernel_inequality(p);
          o.require(r.verdict == Verdict::Pass, "scaled");
          ++n;
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::Hypothesis) throw;
          ++skipped;
        }
      }
      for (double g : {0.25, 0.5, 0.75}) {
        KernelIneqParams c{KernelInequality::Complement, a, ap, 0.0, g, lams, ts};
        try {
          const auto r = verify_kernel_inequality(c);
          o.require(r.verdict == Verdict::Pass, "complement");
          ++n;
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::Hypothesis) throw;
          ++skipped;
        }
      }
    }
  }
  o.detail << n << " cases bounded, " << skipped << " outside the hypotheses";
}

void linear_exactness(Outcome& o) {
  double hom = 0.0;
  const auto tg = TimeGrid::graded(1.0, 256, 2.0);
  for (double a : {1.25, 1.5, 1.75}) {
    for (double lam : {0.5, 4.0, 100.0}) {
      const auto tr = solve_linear({single(lam), {1.0}, {0.7}, {}, a}, tg);
      for (std::size_t k = 0; k < tg.size(); ++k) {
        const double t = tg.nodes[k];
        const double ex = ml({a, 1, -lam * std::pow(t, a)}) + 0.7 * t * ml({a, 2, -lam * std::pow(t, a)});
        hom = std::max(hom, std::abs(tr.u(k, 0) - ex));
      }
    }
  }
  double man = 0.0;
  for (double a : {1.25, 1.5, 1.75}) {
    const auto tr = solve_linear(manufactured(a, 1.0, 2.0), tg);
    for (std::size_t k = 0; k < tg.size(); ++k) {
      const double t = tg.nodes[k];
      man = std::max(man, std::abs(tr.u(k, 0) - (1 + t * t)) / (1 + t * t));
    }
  }
  o.detail << "homogeneous " << hom << ", manufactured 1+t^2 relative " << man;
  o.require(hom <= 1e-12, "homogeneous");
  o.require(man <= 1e-4, "manufactured");
}

void oracle_residual(Outcome& o) {
  const auto m = residual_study(manufactured(1.5, 1.0, 2.0), 1.0, 5e-4, 1, 0.1);
  const auto c = residual_study(manufactured(1.5, 1.0, 3.0), 1.0, 1e-3, 2, 0.1);
  const auto h = residual_study({single(4.0), {1.0}, {0.0}, {}, 1.5}, 1.0, 5e-4, 2, 0.1);
  o.detail << "1+t^2 residual " << m[0].max_residual << ", 1+t^3 order " << c[1].order
           << ", homogeneous order " << h[1].order;
  o.require(m[0].max_residual <= 2e-3, "manufactured residual");
  o.require(c[1].order >= 1.0 && h[1].order >= 1.0, "residual order");

  double worst = 1e9;
  for (double a : {1.25, 1.5, 1.75}) {
    double prev = 0.0;
    for (int M : {250, 500, 1000, 2000}) {
      SampledSignal s{1.0 / M, std::vector<double>(M + 1)};
      for (int i = 0; i <= M; ++i) s.y[i] = std::pow(double(i) / M, 3);
      const double err = std::abs(caputo(s, a, 0.0).y[M] - 6.0 / std::tgamma(4.0 - a));
      if (prev > 0.0) worst = std::min(worst, std::log2(prev / err) - (3.0 - a));
      prev = err;
    }
  }
  o.detail << ", t^3 order margin over 3-alpha " << worst;
  o.require(worst >= -0.3, "L1 order");
}

void rate_reproduction(Outcome& o) {
  double worst = 0.0;
  for (double a : {1.25, 1.5, 1.75}) {
    for (const auto& r : run_rate_suite(a)) {
      const double d = std::abs(r.fit.exponent - r.spec.theoretical_exponent);
      worst = std::max(worst, d);
      o.require(r.verdict == Verdict::Pass && d <= 0.05,
                r.spec.name + " alpha " + std::to_string(a));
    }
  }
  o.detail << "18 fits, max |fit - theory| " << worst;
}

void wave_limit(Outcome& o) {
  const auto tg = TimeGrid::uniform(1.0, 400);
  const auto tr = solve_linear({single(4.0), {1.0}, {0.5}, {}, 1.999}, tg);
  double worst = 0.0;
  for (std::size_t k = 0; k < tg.size(); ++k) {
    const double t = tg.nodes[k];
    worst = std::max(worst, std::abs(tr.u(k, 0) - (std::cos(2 * t) + 0.25 * std::sin(2 * t))));
  }
  o.detail << "sup error " << worst;
  o.require(worst <= 5e-3, "wave limit");
}

void semilinear_reductions(Outcome& o) {
  auto g = build_dirichlet_laplacian(std::numbers::pi, 8);
  std::vector<double> u0(8, 0.0), u1(8, 0.0);
  u0[0] = 1.0;
  u1[2] = 0.3;
  SemilinearConfig cfg;
  cfg.dt = 1e-2;
  const auto z = solve_semilinear({g, 1.5, u0, u1, Nonlinearity::zero()}, 1.0, cfg);
  const double ez = sup_diff(z.traj.u, solve_linear({g, u0, u1, {}, 1.5}, z.traj.time).u);

  const auto l = solve_semilinear({single(4.0), 1.5, {1.0}, {0.0}, Nonlinearity::linear(1.0)}, 0.5);
  const double el = sup_diff(l.traj.u, solve_linear({single(3.0), {1.0}, {0.0}, {}, 1.5}, l.traj.time).u);

  SemilinearProblem p{build_harmonic_oscillator(4), 1.6, {0.5, 0.2, 0.0, -0.1},
                      {0.0, 0.1, 0.0, 0.0}, Nonlinearity::power(2, 0.5)};
  SemilinearConfig a, b;
  b.shift = 0.75;
  const double es = sup_diff(solve_semilinear(p, 0.5, a).traj.u, solve_semilinear(p, 0.5, b).traj.u);
  o.detail << "f=0 " << ez << ", f=cu " << el << ", shift " << es;
  o.require(ez <= 1e-12, "f = 0");
  o.require(el <= 1e-6, "f = c u");
  o.require(es <= 1e-6, "shift equivariance");
}

void blowup_alternative(Outcome& o) {
  SemilinearProblem p{single(1.0), 1.5, {50.0}, {0.0}, Nonlinearity::power(2, 1.0)};
  SemilinearConfig c1, c4;
  c4.dt = c1.dt / 4;
  const auto o1 = solve_semilinear(p, 1.0, c1);
  const auto o4 = solve_semilinear(p, 1.0, c4);
  const bool both = o1.status == SolveStatus::BlowupSuspected &&
                    o4.status == SolveStatus::BlowupSuspected && o1.t_max_estimate &&
                    o4.t_max_estimate;
  o.require(both, "blow-up detected");
  if (both) {
    const double d = std::abs(*o1.t_max_estimate - *o4.t_max_estimate) / *o4.t_max_estimate;
    o.detail << "T_max " << *o1.t_max_estimate << " -> " << *o4.t_max_estimate << " (" << d
             << ")";
    o.require(d <= 0.1, "T_max bracket");
  }
  const auto dfc =
      solve_semilinear({single(1.0), 1.5, {1.0}, {0.0}, Nonlinearity::power(3, -1.0)}, 2.0);
  double emax = 0.0;
  bool finite = true;
  for (const auto& e : dfc.energy) {
    finite = finite && std::isfinite(e.weak);
    emax = std::max(emax, e.weak);
  }
  o.detail << ", defocusing " << to_string(dfc.status) << " max energy " << emax;
  o.require(dfc.status == SolveStatus::Global && finite && emax < 10.0, "defocusing");
}

void initial_conditions(Outcome& o) {
  double worst = 0.0;
  for (double a : {1.25, 1.5, 1.75}) {
    for (const auto& r : run_initial_condition_suite(a, 0.25)) {
      const double d = std::abs(r.fit.exponent - r.spec.theoretical_exponent);
      worst = std::max(worst, d);
      o.require(d <= 0.1, r.spec.name + " alpha " + std::to_string(a));
    }
  }
  o.detail << "max |fit - theory| " << worst;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
      {"special-function closed forms", closed_forms},
      {"kernel derivative identities", derivative_identities},
      {"Mittag-Leffler uniform bound", ml_bound},
      {"scaled kernel inequalities", kernel_inequalities},
      {"linear solver exactness", linear_exactness},
      {"oracle residual and consistency order", oracle_residual},
      {"estimate rate reproduction", rate_reproduction},
      {"wave limit", wave_limit},
      {"semilinear reductions", semilinear_reductions},
      {"blow-up alternative", blowup_alternative},
      {"initial-condition approach rates", initial_conditions},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " exception: " << e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failed;
    std::printf("[%s] %2zu %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", i + 1,
                criteria[i].first.c_str(), o.detail.str().c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
