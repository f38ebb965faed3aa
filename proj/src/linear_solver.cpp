#include "fracwave/linear_solver.hpp"

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

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool is_nonpositive_integer(double x) {
  return x <= 0.0 && x == std::floor(x);
}

// e_b(t), NaN where it is singular at t = 0.
double family(double alpha, double beta, double lam, double t, double tol) {
  if (t == 0.0) {
    try {
      return ml_kernel(alpha, beta, lam, 0.0, tol);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::SingularKernel) return kNaN;
      throw;
    }
  }
  return ml_kernel(alpha, beta, lam, t, tol);
}

void check_kernel_integrable(const KernelFamily& k) {
  const bool ok = k.beta > 0.0 ||
                  (is_nonpositive_integer(k.beta) && k.alpha + k.beta > 0.0);
  if (!ok) {
    std::ostringstream os;
    os << "kernel e_beta with beta=" << k.beta
       << " is not integrable at the origin";
    throw Error(ErrorKind::SingularKernel, os.str());
  }
}

// Values e_{beta}(t_k - tau_i), i = 0..k, reused across kernels that
// differ only in beta.
struct LagTable {
  const TimeGrid& tg;
  double h;  // > 0 on uniform grids: lags are exact multiples of h

  double lag(std::size_t k, std::size_t i) const {
    return h > 0.0 ? static_cast<double>(k - i) * h : tg.nodes[k] - tg.nodes[i];
  }
};

// Convolution of e_beta with the piecewise-linear interpolant of f at node
// k, given e_{beta+1} and e_{beta+2} at the lags t_k - t_i.
double assemble(std::span<const double> f, std::span<const double> e1,
                std::span<const double> e2, const LagTable& lt, std::size_t k) {
  double s = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double h = lt.lag(k, i) - lt.lag(k, i + 1);
    const double m0 = e1[i] - e1[i + 1];
    const double m1 = h * e1[i] - (e2[i] - e2[i + 1]);
    s += f[i + 1] * m0 + (f[i] - f[i + 1]) * m1 / h;
  }
  return s;
}

void check_problem(const LinearProblem& p, const TimeGrid& tg) {
  if (!p.grid) throw Error(ErrorKind::Validation, "problem has no grid");
  if (!(p.alpha > 1.0 && p.alpha < 2.0)) {
    std::ostringstream os;
    os << "alpha must lie in (1, 2) for solves, got " << p.alpha;
    throw Error(ErrorKind::ParameterDomain, os.str());
  }
  const std::size_t n = p.grid->size();
  if (p.u0.size() != n) {
    throw ValidationError(p.u0.size(), "u0 length does not match the grid");
  }
  if (p.u1.size() != n) {
    throw ValidationError(p.u1.size(), "u1 length does not match the grid");
  }
  if (tg.size() < 2) {
    throw Error(ErrorKind::Validation, "time grid needs at least two nodes");
  }
  if (const auto* cf = std::get_if<ClosedFormSource>(&p.source)) {
    if (cf->per_mode.size() != n) {
      throw ValidationError(cf->per_mode.size(),
                            "closed-form source length does not match the grid");
    }
    for (std::size_t j = 0; j < n; ++j) {
      for (const auto& term : cf->per_mode[j]) {
        if (!(term.power > -1.0)) {
          throw ValidationError(j, "source monomial power must exceed -1");
        }
      }
    }
  } else if (const auto* sp = std::get_if<SampledSource>(&p.source)) {
    if (sp->values.size() != n * tg.size()) {
      throw ValidationError(sp->values.size(),
                            "sampled source must have nodes x modes values");
    }
  }
}

}  // namespace

// --- time grids --------------------------------------------------------------

TimeGrid TimeGrid::graded(double T, int N, double r) {
  if (!(T > 0.0) || N < 1 || !(r >= 1.0)) {
    throw Error(ErrorKind::Validation, "graded grid needs T > 0, N >= 1, r >= 1");
  }
  TimeGrid g;
  g.grading = r;
  g.nodes.resize(N + 1);
  for (int j = 0; j <= N; ++j) {
    g.nodes[j] = T * std::pow(static_cast<double>(j) / N, r);
  }
  g.nodes[N] = T;
  return g;
}

TimeGrid TimeGrid::uniform(double T, int N) { return graded(T, N, 1.0); }

TimeGrid TimeGrid::from_nodes(std::vector<double> nodes) {
  if (nodes.size() < 2 || nodes.front() != 0.0) {
    throw Error(ErrorKind::Validation,
                "time grid needs >= 2 nodes starting at t = 0");
  }
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    if (!(nodes[i] > nodes[i - 1]) || !std::isfinite(nodes[i])) {
      throw ValidationError(i, "time grid nodes must be strictly increasing");
    }
  }
  TimeGrid g;
  g.nodes = std::move(nodes);
  return g;
}

double TimeGrid::uniform_step() const {
  const std::size_t n = nodes.size() - 1;
  const double h = nodes.back() / static_cast<double>(n);
  for (std::size_t i = 1; i <= n; ++i) {
    if (std::abs(nodes[i] - h * static_cast<double>(i)) > 1e-12 * nodes.back()) {
      return 0.0;
    }
  }
  return h;
}

double default_grading(double alpha, double gamma_tilde) {
  return std::max(1.0, 2.0 / (alpha * gamma_tilde));
}

// --- sources -----------------------------------------------------------------

double ClosedFormSource::value(std::size_t mode, double t) const {
  double s = 0.0;
  for (const auto& term : per_mode[mode]) {
    s += term.coeff * (term.power == 0.0 ? 1.0 : std::pow(t, term.power));
  }
  return s;
}

double ClosedFormSource::derivative(std::size_t mode, double t) const {
  double s = 0.0;
  for (const auto& term : per_mode[mode]) {
    if (term.power == 0.0) continue;
    s += term.coeff * term.power *
         (term.power == 1.0 ? 1.0 : std::pow(t, term.power - 1.0));
  }
  return s;
}

// --- fields ------------------------------------------------------------------

std::vector<double> Field::column(std::size_t j) const {
  std::vector<double> c(n_nodes_);
  for (std::size_t k = 0; k < n_nodes_; ++k) c[k] = (*this)(k, j);
  return c;
}

GridFunction Trajectory::at(const Field& fld, std::size_t k) const {
  auto r = fld.row(k);
  return GridFunction(grid, std::vector<double>(r.begin(), r.end()));
}

// --- convolutions ------------------------------------------------------------

KernelMoments kernel_moments(const KernelFamily& k, double a, double b,
                             double tol) {
  check_kernel_integrable(k);
  if (!(a >= 0.0 && b > a)) {
    throw Error(ErrorKind::ParameterDomain, "kernel moments need 0 <= a < b");
  }
  const double e1b = ml_kernel(k.alpha, k.beta + 1.0, k.lam, b, tol);
  const double e1a = ml_kernel(k.alpha, k.beta + 1.0, k.lam, a, tol);
  const double e2b = ml_kernel(k.alpha, k.beta + 2.0, k.lam, b, tol);
  const double e2a = ml_kernel(k.alpha, k.beta + 2.0, k.lam, a, tol);
  return {e1b - e1a, (b - a) * e1b - (e2b - e2a)};
}

double convolve_singular(const KernelFamily& k, const TimeGrid& tg,
                         std::span<const double> samples, std::size_t k_index,
                         double tol) {
  check_kernel_integrable(k);
  if (samples.size() < k_index + 1 || k_index >= tg.size()) {
    throw Error(ErrorKind::Validation, "convolution: samples do not cover t_k");
  }
  if (k_index == 0) return 0.0;
  LagTable lt{tg, 0.0};
  std::vector<double> e1(k_index + 1), e2(k_index + 1);
  for (std::size_t i = 0; i <= k_index; ++i) {
    const double s = lt.lag(k_index, i);
    e1[i] = ml_kernel(k.alpha, k.beta + 1.0, k.lam, s, tol);
    e2[i] = ml_kernel(k.alpha, k.beta + 2.0, k.lam, s, tol);
  }
  return assemble(samples, e1, e2, lt, k_index);
}

// --- solver ------------------------------------------------------------------

Trajectory solve_linear(const LinearProblem& p, const TimeGrid& tg,
                        const LinearOptions& opts) {
  check_problem(p, tg);
  const auto* sampled = std::get_if<SampledSource>(&p.source);
  const auto* closed = std::get_if<ClosedFormSource>(&p.source);
  if (opts.want_d2u && sampled && !sampled->differentiable) {
    throw Error(ErrorKind::Capability,
                "second derivative requested for a sampled source without "
                "differentiability information");
  }

  const double a = p.alpha;
  const std::size_t nt = tg.size();
  const std::size_t nm = p.grid->size();

  Trajectory tr;
  tr.time = tg;
  tr.grid = p.grid;
  tr.alpha = a;
  tr.label = p.label;
  tr.u = Field(nt, nm);
  tr.du = Field(nt, nm);
  tr.dalpha = Field(nt, nm);
  tr.au = Field(nt, nm);
  tr.f = Field(nt, nm);
  if (opts.want_d2u) tr.d2u = Field(nt, nm);

  const double h_uniform = tg.uniform_step();
  const LagTable lt{tg, h_uniform};

  parallel_for(
      nm,
      [&](std::size_t j) {
        const double lam = p.grid->eigenvalue(j);
        const double u0 = p.u0[j];
        const double u1 = p.u1[j];
        const double tol = opts.tol;

        for (std::size_t k = 0; k < nt; ++k) {
          const double t = tg.nodes[k];
          double u = 0.0, du = 0.0, d2u = 0.0;
          if (u0 != 0.0) {
            u += u0 * family(a, 1.0, lam, t, tol);
            du += u0 * family(a, 0.0, lam, t, tol);
            if (opts.want_d2u) d2u += u0 * family(a, -1.0, lam, t, tol);
          }
          if (u1 != 0.0) {
            u += u1 * family(a, 2.0, lam, t, tol);
            du += u1 * family(a, 1.0, lam, t, tol);
            if (opts.want_d2u) d2u += u1 * family(a, 0.0, lam, t, tol);
          }
          double f = 0.0;
          if (closed) {
            f = closed->value(j, t);
            for (const auto& term : closed->per_mode[j]) {
              const double c = term.coeff * std::tgamma(term.power + 1.0);
              u += c * family(a, a + term.power + 1.0, lam, t, tol);
              du += c * family(a, a + term.power, lam, t, tol);
              if (opts.want_d2u) {
                d2u += c * family(a, a + term.power - 1.0, lam, t, tol);
              }
            }
          } else if (sampled) {
            f = sampled->values[k * nm + j];
          }
          tr.u(k, j) = u;
          tr.du(k, j) = du;
          if (opts.want_d2u) (*tr.d2u)(k, j) = d2u;
          tr.f(k, j) = f;
        }

        if (sampled) {
          std::vector<double> fj(nt);
          for (std::size_t k = 0; k < nt; ++k) fj[k] = sampled->values[k * nm + j];
          if (std::all_of(fj.begin(), fj.end(), [](double v) { return v == 0.0; })) {
            return;
          }
          // e_alpha, e_{alpha+1}, e_{alpha+2} at every lag; on uniform grids
          // the lags repeat and one table serves all nodes.
          auto lag_values = [&](double beta, double s) {
            return ml_kernel(a, beta, lam, s, tol);
          };
          std::vector<double> ua(nt), ub(nt), uc(nt);
          if (h_uniform > 0.0) {
            for (std::size_t m = 0; m < nt; ++m) {
              const double s = static_cast<double>(m) * h_uniform;
              ua[m] = lag_values(a, s);
              ub[m] = lag_values(a + 1.0, s);
              uc[m] = lag_values(a + 2.0, s);
            }
          }
          std::vector<double> e0(nt), e1(nt), e2(nt);
          for (std::size_t k = 1; k < nt; ++k) {
            for (std::size_t i = 0; i <= k; ++i) {
              if (h_uniform > 0.0) {
                e0[i] = ua[k - i];
                e1[i] = ub[k - i];
                e2[i] = uc[k - i];
              } else {
                const double s = lt.lag(k, i);
                e0[i] = lag_values(a, s);
                e1[i] = lag_values(a + 1.0, s);
                e2[i] = lag_values(a + 2.0, s);
              }
            }
            std::span<const double> fs(fj.data(), k + 1);
            tr.u(k, j) += assemble(fs, e1, e2, lt, k);
            tr.du(k, j) += assemble(fs, e0, e1, lt, k);
            if (opts.want_d2u) {
              // Slopes of the interpolant stand in for f'.
              double s = 0.0;
              for (std::size_t i = 0; i < k; ++i) {
                const double h = tg.nodes[i + 1] - tg.nodes[i];
                s += (fj[i + 1] - fj[i]) / h * (e0[i] - e0[i + 1]);
              }
              s += family(a, a - 1.0, lam, tg.nodes[k], tol) * fj[0];
              (*tr.d2u)(k, j) += s;
            }
          }
        }
      },
      opts.threads);

  for (std::size_t k = 0; k < nt; ++k) {
    for (std::size_t j = 0; j < nm; ++j) {
      const double lam = p.grid->eigenvalue(j);
      tr.au(k, j) = lam * tr.u(k, j);
      tr.dalpha(k, j) = -tr.au(k, j) + tr.f(k, j);
    }
  }

  std::ostringstream tol;
  tol << opts.tol;
  tr.metadata["ml_tol"] = tol.str();
  tr.metadata["source"] = closed    ? "closed-form"
                          : sampled ? "sampled"
                                    : "zero";
  if (opts.want_d2u) {
    tr.metadata["d2u"] = sampled ? "approximate (interpolant slopes)" : "exact";
  }
  if (p.source_lp) {
    const double q = *p.source_lp;
    tr.metadata["source_lp"] = std::to_string(q);
    tr.metadata["source_hypothesis_alpha_minus_2_plus_1_over_p_positive"] =
        (a - 2.0 + 1.0 / q > 0.0) ? "true" : "false";
  }
  return tr;
}

// --- estimates ---------------------------------------------------------------

const std::vector<std::string>& EstimateSeries::names() {
  static const std::vector<std::string> n = {
      "u_V_gamma_tilde", "du_L2",    "dalpha_V_minus_gamma",
      "dalpha_L2",       "au_L2",    "du_V_gamma_tilde",
      "u_V_gamma",       "d2u_V_theta"};
  return n;
}

const std::vector<double>& EstimateSeries::series(const std::string& name) const {
  if (name == "u_V_gamma_tilde") return u_V_gamma_tilde;
  if (name == "du_L2") return du_L2;
  if (name == "dalpha_V_minus_gamma") return dalpha_V_minus_gamma;
  if (name == "dalpha_L2") return dalpha_L2;
  if (name == "au_L2") return au_L2;
  if (name == "du_V_gamma_tilde") return du_V_gamma_tilde;
  if (name == "u_V_gamma") return u_V_gamma;
  if (name == "d2u_V_theta") {
    if (d2u_V_theta.empty()) {
      throw Error(ErrorKind::Capability, "second-derivative series not computed");
    }
    return d2u_V_theta;
  }
  throw Error(ErrorKind::Validation, "unknown estimate series '" + name + "'");
}

EstimateSeries estimate_lhs(const Trajectory& traj, const EstimateIndices& idx) {
  if (idx.include_d2u && !traj.d2u) {
    throw Error(ErrorKind::Capability,
                "trajectory has no second derivative; solve with want_d2u");
  }
  const SpectralGrid& g = *traj.grid;
  EstimateSeries es;
  es.t = traj.time.nodes;
  for (std::size_t k = 0; k < traj.time.size(); ++k) {
    es.u_V_gamma_tilde.push_back(norm_V(g, traj.u.row(k), {idx.gamma_tilde}));
    es.du_L2.push_back(norm_V(g, traj.du.row(k), {0.0}));
    es.dalpha_V_minus_gamma.push_back(norm_V(g, traj.dalpha.row(k), {-idx.gamma}));
    es.dalpha_L2.push_back(norm_V(g, traj.dalpha.row(k), {0.0}));
    es.au_L2.push_back(norm_V(g, traj.au.row(k), {0.0}));
    es.du_V_gamma_tilde.push_back(norm_V(g, traj.du.row(k), {idx.gamma_tilde}));
    es.u_V_gamma.push_back(norm_V(g, traj.u.row(k), {idx.gamma}));
    if (idx.include_d2u) {
      es.d2u_V_theta.push_back(norm_V(g, traj.d2u->row(k), {idx.theta}));
    }
  }
  return es;
}

// --- export ------------------------------------------------------------------

void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Configuration, "cannot write " + path);
  using detail::fmt17;
  out << "time,mode_id,u,du,dalpha,au";
  if (traj.d2u) out << ",d2u";
  out << '\n';
  for (std::size_t k = 0; k < traj.time.size(); ++k) {
    for (std::size_t j = 0; j < traj.grid->size(); ++j) {
      out << fmt17(traj.time.nodes[k]) << ',' << traj.grid->mode(j).id << ','
          << fmt17(traj.u(k, j)) << ',' << fmt17(traj.du(k, j)) << ','
          << fmt17(traj.dalpha(k, j)) << ',' << fmt17(traj.au(k, j));
      if (traj.d2u) out << ',' << fmt17((*traj.d2u)(k, j));
      out << '\n';
    }
  }
}

std::string trajectory_metadata_json(const Trajectory& traj) {
  nlohmann::json doc;
  doc["alpha"] = traj.alpha;
  doc["label"] = traj.label;
  doc["grid_label"] = traj.grid->label();
  doc["n_modes"] = traj.grid->size();
  doc["n_nodes"] = traj.time.size();
  doc["final_time"] = traj.time.final_time();
  doc["grading"] = traj.time.grading;
  doc["has_d2u"] = traj.d2u.has_value();
  nlohmann::json meta = nlohmann::json::object();
  for (const auto& [k, v] : traj.metadata) meta[k] = v;
  doc["metadata"] = std::move(meta);
  return doc.dump(2);
}

}  // namespace fracwave
