#include "fracwave/caputo_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "fracwave/errors.hpp"
#include "fracwave/parallel.hpp"

namespace fracwave {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_signal(const SampledSignal& s, std::size_t min_nodes) {
  if (s.y.size() < min_nodes) {
    std::ostringstream os;
    os << "signal has " << s.y.size() << " samples, need at least "
       << min_nodes;
    throw Error(ErrorKind::InsufficientData, os.str());
  }
  if (!(s.h > 0.0)) throw Error(ErrorKind::Validation, "signal step must be > 0");
}

void check_order(double alpha) {
  if (!(alpha > 1.0 && alpha < 2.0)) {
    throw Error(ErrorKind::ParameterDomain, "Caputo oracle needs 1 < alpha < 2");
  }
}

}  // namespace

SampledSignal caputo(const SampledSignal& u, double alpha,
                     std::optional<double> initial_velocity) {
  check_order(alpha);
  check_signal(u, 3);
  const std::size_t M = u.y.size() - 1;
  const double h = u.h;
  const auto& y = u.y;

  std::vector<double> up(M + 1);
  up[0] = initial_velocity ? *initial_velocity
                           : (-3.0 * y[0] + 4.0 * y[1] - y[2]) / (2.0 * h);
  for (std::size_t i = 1; i < M; ++i) up[i] = (y[i + 1] - y[i - 1]) / (2.0 * h);
  up[M] = (3.0 * y[M] - 4.0 * y[M - 1] + y[M - 2]) / (2.0 * h);

  std::vector<double> mean_u2(M + 1, 0.0);
  for (std::size_t j = 1; j <= M; ++j) mean_u2[j] = (up[j] - up[j - 1]) / h;

  // int over cell j of g_{2-a}(t_n - s) ds depends only on n - j.
  const double c = 2.0 - alpha;
  const double gc = std::tgamma(c + 1.0);
  std::vector<double> cell(M + 1, 0.0);
  for (std::size_t m = 0; m < M; ++m) {
    cell[m] = std::pow(h, c) *
              (std::pow(static_cast<double>(m + 1), c) -
               std::pow(static_cast<double>(m), c)) /
              gc;
  }

  SampledSignal out{h, std::vector<double>(M + 1, kNaN)};
  for (std::size_t n = 2; n <= M; ++n) {
    double s = 0.0;
    for (std::size_t j = 1; j <= n; ++j) s += cell[n - j] * mean_u2[j];
    out.y[n] = s;
  }
  return out;
}

std::vector<double> gconv(double gamma, std::span<const double> t,
                          std::span<const double> y) {
  if (!(gamma > 0.0)) {
    throw Error(ErrorKind::ParameterDomain, "gconv needs gamma > 0");
  }
  if (t.size() != y.size() || t.empty()) {
    throw Error(ErrorKind::Validation, "gconv: times and values differ in length");
  }
  const double g1 = std::tgamma(gamma + 1.0);
  const double g2 = std::tgamma(gamma + 2.0);
  auto G1 = [&](double s) { return std::pow(s, gamma) / g1; };
  auto G2 = [&](double s) { return std::pow(s, gamma + 1.0) / g2; };

  std::vector<double> out(t.size(), 0.0);
  std::vector<double> e1(t.size()), e2(t.size());
  for (std::size_t k = 1; k < t.size(); ++k) {
    for (std::size_t i = 0; i <= k; ++i) {
      const double s = t[k] - t[i];
      e1[i] = G1(s);
      e2[i] = G2(s);
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      const double h = t[i + 1] - t[i];
      const double m0 = e1[i] - e1[i + 1];
      const double m1 = h * e1[i] - (e2[i] - e2[i + 1]);
      // Weights of y_i and y_{i+1}; both are nonnegative exactly, clamp the
      // roundoff so nonnegative data stay nonnegative.
      const double wl = std::max(0.0, m1 / h);
      const double wr = std::max(0.0, m0 - m1 / h);
      acc += wl * y[i] + wr * y[i + 1];
    }
    out[k] = acc;
  }
  return out;
}

SampledSignal gconv(double gamma, const SampledSignal& y) {
  check_signal(y, 1);
  std::vector<double> t(y.y.size());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = y.time(i);
  return {y.h, gconv(gamma, t, y.y)};
}

SampledSignal caputo_rl(const SampledSignal& u, double alpha,
                        std::optional<double> initial_velocity) {
  check_order(alpha);
  check_signal(u, 4);
  const std::size_t M = u.y.size() - 1;
  const double h = u.h;
  const double v0 = initial_velocity
                        ? *initial_velocity
                        : (-3.0 * u.y[0] + 4.0 * u.y[1] - u.y[2]) / (2.0 * h);
  SampledSignal v{h, std::vector<double>(M + 1)};
  for (std::size_t i = 0; i <= M; ++i) {
    v.y[i] = u.y[i] - u.y[0] - u.time(i) * v0;
  }
  const auto W = gconv(2.0 - alpha, v).y;
  SampledSignal out{h, std::vector<double>(M + 1, kNaN)};
  const double h2 = h * h;
  for (std::size_t n = 2; n < M; ++n) {
    out.y[n] = (W[n + 1] - 2.0 * W[n] + W[n - 1]) / h2;
  }
  out.y[M] = (2.0 * W[M] - 5.0 * W[M - 1] + 4.0 * W[M - 2] - W[M - 3]) / h2;
  return out;
}

std::vector<double> residual(const Trajectory& traj, const Field& source) {
  const double h = traj.time.uniform_step();
  if (h == 0.0) {
    throw Error(ErrorKind::Configuration,
                "residual needs a trajectory on a uniform time grid; "
                "resample by re-evaluating the solution formula");
  }
  if (source.nodes() != traj.time.size() || source.modes() != traj.grid->size()) {
    throw Error(ErrorKind::Configuration,
                "residual: source samples do not match the trajectory resolution");
  }
  const std::size_t nt = traj.time.size();
  const std::size_t nm = traj.grid->size();
  Field r(nt, nm);
  parallel_for(nm, [&](std::size_t j) {
    SampledSignal u{h, traj.u.column(j)};
    const auto d = caputo(u, traj.alpha, traj.du(0, j));
    for (std::size_t k = 0; k < nt; ++k) {
      r(k, j) = d.y[k] + traj.au(k, j) - source(k, j);
    }
  });
  std::vector<double> out(nt, kNaN);
  for (std::size_t k = 2; k < nt; ++k) out[k] = norm_V(*traj.grid, r.row(k), {0.0});
  return out;
}

std::vector<double> residual(const Trajectory& traj) {
  return residual(traj, traj.f);
}

Trajectory resample_uniform(const LinearProblem& p, double T, int M,
                            const LinearOptions& opts) {
  if (std::holds_alternative<SampledSource>(p.source)) {
    throw Error(ErrorKind::Configuration,
                "a sampled source cannot be re-evaluated on a new grid");
  }
  return solve_linear(p, TimeGrid::uniform(T, M), opts);
}

std::vector<ResidualLevel> residual_study(const LinearProblem& p, double T,
                                          double h, int levels, double t_min,
                                          const LinearOptions& opts) {
  if (!(h > 0.0) || levels < 1) {
    throw Error(ErrorKind::Configuration, "residual study needs h > 0 and levels >= 1");
  }
  std::vector<ResidualLevel> out;
  for (int l = 0; l < levels; ++l) {
    const double hl = h / std::ldexp(1.0, l);
    const int M = static_cast<int>(std::lround(T / hl));
    if (M < 3) throw Error(ErrorKind::Configuration, "residual study: step too large for T");
    const auto tr = resample_uniform(p, T, M, opts);
    const auto r = residual(tr);
    double worst = 0.0;
    for (std::size_t k = 2; k < r.size(); ++k) {
      if (tr.time.nodes[k] >= t_min) worst = std::max(worst, r[k]);
    }
    const double order = out.empty() ? kNaN : std::log2(out.back().max_residual / worst);
    out.push_back({hl, worst, order});
  }
  return out;
}

}  // namespace fracwave
