#include "fracwave/semilinear_solver.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "json.hpp"

#include "fracwave/errors.hpp"
#include "fracwave/parallel.hpp"
#include "fracwave/caputo_oracle.hpp"
#include "numfmt.hpp"

namespace fracwave {

// --- nonlinearities ----------------------------------------------------------

double Nonlinearity::q1(double x) const {
  if (const auto* pg = std::get_if<PowerGrowth>(&growth)) {
    return pg->c_f * std::pow(x, pg->r - 1.0);
  }
  return std::get<MajorantGrowth>(growth).q1(x);
}

Nonlinearity Nonlinearity::zero() {
  const double c = 0.0;
  return {"zero", [](double) { return 0.0; }, [](double) { return 0.0; },
          MajorantGrowth{[c](double) { return c; }, [c](double) { return c; }}};
}

Nonlinearity Nonlinearity::linear(double c) {
  std::ostringstream name;
  name << "linear(" << c << ")";
  const double a = std::abs(c);
  return {name.str(), [c](double s) { return c * s; },
          [c](double) { return c; },
          MajorantGrowth{[a](double) { return a; },
                         [a](double x) { return a * x; }}};
}

Nonlinearity Nonlinearity::power(int p, double coeff) {
  if (p < 2) {
    throw Error(ErrorKind::Configuration, "power nonlinearity needs p >= 2");
  }
  std::ostringstream name;
  name << coeff << "*u^" << p;
  return {name.str(),
          [p, coeff](double s) { return coeff * std::pow(s, p); },
          [p, coeff](double s) { return coeff * p * std::pow(s, p - 1); },
          PowerGrowth{static_cast<double>(p), p * std::abs(coeff)}};
}

Nonlinearity Nonlinearity::sine() {
  return {"sin", [](double s) { return std::sin(s); },
          [](double s) { return std::cos(s); },
          MajorantGrowth{[](double) { return 1.0; }, [](double x) { return x; }}};
}

namespace {

void validate_growth(const Nonlinearity& nl) {
  if (!nl.f || !nl.df) {
    throw Error(ErrorKind::Configuration, "nonlinearity lacks f or f'");
  }
  if (const auto* pg = std::get_if<PowerGrowth>(&nl.growth)) {
    if (!(pg->r > 1.0) || !(pg->c_f > 0.0)) {
      throw Error(ErrorKind::Configuration,
                  "power growth needs r > 1 and C_f > 0");
    }
  } else {
    const auto& mg = std::get<MajorantGrowth>(nl.growth);
    if (!mg.q1 || !mg.q2) {
      throw Error(ErrorKind::Configuration, "majorant growth needs Q1 and Q2");
    }
  }
  if (nl.requires_shift && !(*nl.requires_shift >= 0.0)) {
    throw Error(ErrorKind::Configuration, "requires_shift must be >= 0");
  }
}

}  // namespace

GrowthReport check_growth(const Nonlinearity& nl, double s_max, int n_samples) {
  validate_growth(nl);
  if (!(s_max > 0.0) || !std::isfinite(s_max) || n_samples < 2) {
    throw Error(ErrorKind::Validation,
                "growth check needs a finite range and >= 2 samples");
  }
  GrowthReport rep;
  rep.worst_margin = std::numeric_limits<double>::infinity();
  const double f0 = nl.f(0.0);
  if (f0 != 0.0) {
    rep.ok = false;
    rep.worst_margin = -std::abs(f0);
    rep.detail = "f(0) != 0";
    return rep;
  }
  auto record = [&](double margin, double scale, double s, const char* what) {
    if (margin < rep.worst_margin) {
      rep.worst_margin = margin;
      rep.worst_s = s;
    }
    if (margin < -1e-12 * std::max(1.0, scale) && rep.ok) {
      rep.ok = false;
      std::ostringstream os;
      os << what << " violated at s=" << s;
      rep.detail = os.str();
    }
  };
  for (int i = 0; i < n_samples; ++i) {
    const double s = -s_max + 2.0 * s_max * i / (n_samples - 1);
    const double x = std::abs(s);
    const double d = std::abs(nl.df(s));
    if (const auto* pg = std::get_if<PowerGrowth>(&nl.growth)) {
      const double bound = pg->c_f * std::pow(x, pg->r - 1.0);
      record(bound - d, bound, s, "|f'(s)| <= C_f |s|^{r-1}");
    } else {
      const auto& mg = std::get<MajorantGrowth>(nl.growth);
      const double b1 = mg.q1(x);
      const double b2 = mg.q2(x);
      record(b1 - d, b1, s, "|f'(s)| <= Q1(|s|)");
      record(b2 - std::abs(nl.f(s)), b2, s, "|f(s)| <= Q2(|s|)");
    }
  }
  if (rep.ok) rep.detail = "growth conditions hold on the sampled range";
  return rep;
}

// --- energy ------------------------------------------------------------------

EnergyParams EnergyParams::defaults(double alpha, double gamma) {
  return {1.0 - alpha / 2.0 + 0.05, std::max(0.0, 1.0 - alpha * gamma) + 0.01,
          std::max(alpha * (1.0 - gamma), alpha - 1.0) + 0.01, gamma};
}

namespace {

double tpow(double t, double e) { return t == 0.0 ? 0.0 : std::pow(t, e); }

EnergyState energy_at(const SpectralGrid& g, double t, std::span<const double> u,
                      std::span<const double> du, std::span<const double> dalpha,
                      std::span<const double> au, double conv,
                      const EnergyParams& p) {
  EnergyState e{};
  e.t = t;
  const double uh = norm_V(g, u, {0.5});
  const double dun = norm_V(g, du, {0.0});
  e.u_V_half_sq = uh * uh;
  e.kinetic_t = tpow(t, 2.0 * p.s_exp) * dun * dun;
  e.kinetic_conv = conv;
  e.weak = e.u_V_half_sq + e.kinetic_t + e.kinetic_conv;
  e.u_V_gamma = norm_V(g, u, {p.gamma});
  e.du_weighted = tpow(t, p.delta1) * dun;
  e.dalpha_weighted = t == 0.0 ? 0.0 : tpow(t, p.delta2) * norm_V(g, dalpha, {0.0});
  e.au_weighted = t == 0.0 ? 0.0 : tpow(t, p.delta2) * norm_V(g, au, {0.0});
  e.strong = e.u_V_gamma + e.du_weighted + e.dalpha_weighted + e.au_weighted;
  return e;
}

}  // namespace

std::vector<EnergyState> energy(const Trajectory& traj, const EnergyParams& p) {
  if (traj.du.nodes() != traj.time.size() || traj.u.nodes() != traj.time.size()) {
    throw Error(ErrorKind::Capability, "energy needs u and du on every node");
  }
  const SpectralGrid& g = *traj.grid;
  const std::size_t nt = traj.time.size();
  std::vector<double> kin(nt);
  for (std::size_t k = 0; k < nt; ++k) {
    const double d = norm_V(g, traj.du.row(k), {0.0});
    kin[k] = d * d;
  }
  const auto conv = gconv(2.0 - traj.alpha, traj.time.nodes, kin);
  std::vector<EnergyState> out;
  out.reserve(nt);
  for (std::size_t k = 0; k < nt; ++k) {
    out.push_back(energy_at(g, traj.time.nodes[k], traj.u.row(k), traj.du.row(k),
                            traj.dalpha.row(k), traj.au.row(k), conv[k], p));
  }
  return out;
}

// --- physical-space adapter --------------------------------------------------

std::vector<double> dirichlet_points(const SpectralGrid& g, int n_points) {
  const auto& basis = g.dirichlet_basis();
  if (!basis) {
    throw Error(ErrorKind::Capability,
                "physical-space mode needs a Dirichlet Laplacian grid");
  }
  std::vector<double> x(n_points);
  for (int i = 0; i < n_points; ++i) {
    x[i] = basis->length * (i + 1) / static_cast<double>(n_points + 1);
  }
  return x;
}

std::vector<double> analyze_dirichlet(const SpectralGrid& g,
                                      std::span<const double> values) {
  const auto& basis = g.dirichlet_basis();
  if (!basis) {
    throw Error(ErrorKind::Capability,
                "physical-space mode needs a Dirichlet Laplacian grid");
  }
  const std::size_t P = values.size();
  const double scale = std::sqrt(2.0 * basis->length) / static_cast<double>(P + 1);
  std::vector<double> c(g.size(), 0.0);
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double k = static_cast<double>(g.mode(j).id);
    double s = 0.0;
    for (std::size_t i = 0; i < P; ++i) {
      s += values[i] * std::sin(k * std::numbers::pi * (i + 1) / (P + 1.0));
    }
    c[j] = scale * s;
  }
  return c;
}

// --- stepper -----------------------------------------------------------------

namespace {

// Kernel values of one mode at the lags m h, grown on demand.
struct ModeTables {
  double lam = 0.0;
  std::vector<double> e1, e2, e0;      // solution kernels at m h
  std::vector<double> wlu, wru;        // product weights, e_alpha kernel
  std::vector<double> wld, wrd;        // product weights, e_{alpha-1} kernel
  std::vector<double> ea, ea1, ea2;    // e_alpha, e_{alpha+1}, e_{alpha+2}
};

}  // namespace

struct SemilinearStepper::Impl {
  GridPtr grid;
  double alpha;
  std::vector<double> u0, u1;
  Nonlinearity nl;
  double shift_c = 0.0;
  SemilinearConfig cfg;
  double h;
  std::size_t nm;
  std::vector<ModeTables> tab;
  std::size_t tab_len = 0;
  // physical-space mode
  std::vector<double> xs;
  std::vector<std::vector<double>> phi;  // [point][mode]

  // accepted rows, [node][mode]
  std::vector<double> u, du, f;
  std::size_t accepted = 0;

  void ensure(std::size_t m_max) {
    if (m_max < tab_len) return;
    const std::size_t new_len = std::max(m_max + 1, 2 * tab_len);
    const double a = alpha;
    const double tol = cfg.ml_tol;
    parallel_for(
        nm,
        [&](std::size_t j) {
          ModeTables& t = tab[j];
          const double lam = t.lam;
          const std::size_t old = t.e1.size();
          for (auto* v : {&t.e1, &t.e2, &t.e0, &t.ea, &t.ea1, &t.ea2, &t.wlu,
                          &t.wru, &t.wld, &t.wrd}) {
            v->resize(new_len, 0.0);
          }
          for (std::size_t m = old; m < new_len; ++m) {
            const double s = static_cast<double>(m) * h;
            t.e1[m] = ml_kernel(a, 1.0, lam, s, tol);
            t.e2[m] = ml_kernel(a, 2.0, lam, s, tol);
            t.e0[m] = ml_kernel(a, 0.0, lam, s, tol);
            t.ea[m] = ml_kernel(a, a, lam, s, tol);
            t.ea1[m] = ml_kernel(a, a + 1.0, lam, s, tol);
            t.ea2[m] = ml_kernel(a, a + 2.0, lam, s, tol);
          }
          for (std::size_t m = std::max<std::size_t>(old, 1); m < new_len; ++m) {
            const double m0u = t.ea1[m] - t.ea1[m - 1];
            const double m1u = h * t.ea1[m] - (t.ea2[m] - t.ea2[m - 1]);
            t.wlu[m] = m1u / h;
            t.wru[m] = m0u - m1u / h;
            const double m0d = t.ea[m] - t.ea[m - 1];
            const double m1d = h * t.ea[m] - (t.ea1[m] - t.ea1[m - 1]);
            t.wld[m] = m1d / h;
            t.wrd[m] = m0d - m1d / h;
          }
        },
        cfg.threads);
    tab_len = new_len;
  }

  // f applied to one row of coefficients.
  void apply_f(std::span<const double> v, std::span<double> out) const {
    if (cfg.physical_space) {
      std::vector<double> vals(xs.size());
      for (std::size_t i = 0; i < xs.size(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < nm; ++j) s += phi[i][j] * v[j];
        vals[i] = nl.f(s);
      }
      const auto c = analyze_dirichlet(*grid, vals);
      for (std::size_t j = 0; j < nm; ++j) out[j] = c[j] + shift_c * v[j];
    } else {
      for (std::size_t j = 0; j < nm; ++j) out[j] = nl.f(v[j]) + shift_c * v[j];
    }
  }

  // sum over intervals [i, i+1], i in [i_lo, i_hi), of the product weights
  // at node n, with f given by a row accessor.
  template <class Row>
  static double conv(const std::vector<double>& wl, const std::vector<double>& wr,
                     std::size_t n, std::size_t i_lo, std::size_t i_hi,
                     const Row& fval) {
    double s = 0.0;
    for (std::size_t i = i_lo; i < i_hi; ++i) {
      const std::size_t m = n - i;
      s += wl[m] * fval(i) + wr[m] * fval(i + 1);
    }
    return s;
  }

  double lin_u(std::size_t n, std::size_t j) const {
    double v = 0.0;
    if (u0[j] != 0.0) v += u0[j] * tab[j].e1[n];
    if (u1[j] != 0.0) v += u1[j] * tab[j].e2[n];
    return v;
  }
  double lin_du(std::size_t n, std::size_t j) const {
    double v = 0.0;
    if (u0[j] != 0.0) v += u0[j] * tab[j].e0[n];
    if (u1[j] != 0.0) v += u1[j] * tab[j].e1[n];
    return v;
  }

  double sup_diff_vhalf(const std::vector<double>& a, const std::vector<double>& b,
                        std::size_t rows, double* sup_norm) const {
    double d = 0.0, nrm = 0.0;
    std::vector<double> diff(nm);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t j = 0; j < nm; ++j) diff[j] = a[r * nm + j] - b[r * nm + j];
      d = std::max(d, norm_V(*grid, diff, {0.5}));
      nrm = std::max(nrm, norm_V(*grid, std::span(a.data() + r * nm, nm), {0.5}));
    }
    if (sup_norm) *sup_norm = nrm;
    return d;
  }
};

SemilinearStepper::SemilinearStepper(const SemilinearProblem& p,
                                     const SemilinearConfig& cfg)
    : impl_(std::make_unique<Impl>()) {
  auto& s = *impl_;
  if (!p.grid) throw Error(ErrorKind::Validation, "problem has no grid");
  if (!(p.alpha > 1.0 && p.alpha < 2.0)) {
    throw Error(ErrorKind::ParameterDomain, "alpha must lie in (1, 2)");
  }
  if (!(cfg.dt > 0.0)) throw Error(ErrorKind::Configuration, "dt must be > 0");
  if (!(cfg.tol_fix > 0.0) || cfg.max_iter < 2) {
    throw Error(ErrorKind::Configuration, "need tol_fix > 0 and max_iter >= 2");
  }
  validate_growth(p.nl);
  const std::size_t n = p.grid->size();
  if (p.u0.size() != n) throw ValidationError(p.u0.size(), "u0 length mismatch");
  if (p.u1.size() != n) throw ValidationError(p.u1.size(), "u1 length mismatch");
  if (!(cfg.shift >= 0.0)) throw Error(ErrorKind::Configuration, "shift must be >= 0");

  s.shift_c = p.nl.requires_shift.value_or(0.0) + cfg.shift;
  s.grid = s.shift_c > 0.0 ? shift(*p.grid, s.shift_c) : p.grid;
  s.alpha = p.alpha;
  s.u0 = p.u0;
  s.u1 = p.u1;
  s.nl = p.nl;
  s.cfg = cfg;
  s.h = cfg.dt;
  s.nm = n;
  s.tab.resize(n);
  for (std::size_t j = 0; j < n; ++j) s.tab[j].lam = s.grid->eigenvalue(j);

  if (cfg.physical_space) {
    const int P = cfg.physical_points > 0 ? cfg.physical_points
                                          : static_cast<int>(2 * n + 1);
    s.xs = dirichlet_points(*s.grid, P);
    const double L = s.grid->dirichlet_basis()->length;
    const double norm = std::sqrt(2.0 / L);
    s.phi.assign(P, std::vector<double>(n));
    for (int i = 0; i < P; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        s.phi[i][j] = norm * std::sin(s.grid->mode(j).id * std::numbers::pi *
                                      s.xs[i] / L);
      }
    }
  }

  s.ensure(64);
  // node 0
  s.u.assign(s.u0.begin(), s.u0.end());
  s.du.resize(n);
  for (std::size_t j = 0; j < n; ++j) s.du[j] = s.lin_du(0, j);
  s.f.resize(n);
  s.apply_f(s.u, s.f);
  s.accepted = 1;
}

SemilinearStepper::~SemilinearStepper() = default;

std::size_t SemilinearStepper::accepted_nodes() const { return impl_->accepted; }
double SemilinearStepper::time_of(std::size_t n) const {
  return static_cast<double>(n) * impl_->h;
}
const GridPtr& SemilinearStepper::grid() const { return impl_->grid; }

SemilinearStepper::Window SemilinearStepper::picard_window(int n_steps) {
  auto& s = *impl_;
  if (n_steps < 1) throw Error(ErrorKind::Configuration, "window needs >= 1 step");
  const std::size_t A = s.accepted;
  const std::size_t W = static_cast<std::size_t>(n_steps);
  const std::size_t nm = s.nm;
  s.ensure(A + W);

  // Frozen parts: linear evolution plus the history integral over
  // [0, t_{A-1}].
  std::vector<double> base(W * nm), base_d(W * nm);
  parallel_for(
      nm,
      [&](std::size_t j) {
        const auto& t = s.tab[j];
        auto fj = [&](std::size_t i) { return s.f[i * nm + j]; };
        for (std::size_t r = 0; r < W; ++r) {
          const std::size_t n = A + r;
          base[r * nm + j] = s.lin_u(n, j) + Impl::conv(t.wlu, t.wru, n, 0, A - 1, fj);
          base_d[r * nm + j] =
              s.lin_du(n, j) + Impl::conv(t.wld, t.wrd, n, 0, A - 1, fj);
        }
      },
      s.cfg.threads);

  // Tail over [t_{A-1}, t_n] with window values from `fw`.
  auto tail = [&](const std::vector<double>& fw, bool derivative,
                  std::vector<double>& out, const std::vector<double>& b) {
    parallel_for(
        nm,
        [&](std::size_t j) {
          const auto& t = s.tab[j];
          const auto& wl = derivative ? t.wld : t.wlu;
          const auto& wr = derivative ? t.wrd : t.wru;
          auto fj = [&](std::size_t i) {
            return i < A ? s.f[i * nm + j] : fw[(i - A) * nm + j];
          };
          for (std::size_t r = 0; r < W; ++r) {
            const std::size_t n = A + r;
            out[r * nm + j] = b[r * nm + j] + Impl::conv(wl, wr, n, A - 1, n, fj);
          }
        },
        s.cfg.threads);
  };

  auto apply_rows = [&](const std::vector<double>& v, std::vector<double>& fw) {
    for (std::size_t r = 0; r < W; ++r) {
      s.apply_f(std::span(v.data() + r * nm, nm), std::span(fw.data() + r * nm, nm));
    }
  };

  auto finite = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };

  std::vector<double> v = base, next(W * nm), fw(W * nm);
  double prev_d = std::numeric_limits<double>::quiet_NaN();
  double rho = 0.0;
  int growing = 0;
  for (int it = 1; it <= s.cfg.max_iter; ++it) {
    apply_rows(v, fw);
    tail(fw, false, next, base);
    if (!finite(next)) break;
    double nrm = 0.0;
    const double d = s.sup_diff_vhalf(next, v, W, &nrm);
    if (std::isfinite(prev_d) && prev_d > 0.0) rho = d / prev_d;
    if (d == 0.0 && it > 1) rho = 0.0;
    v.swap(next);
    if (d <= s.cfg.tol_fix * std::max(1.0, nrm)) {
      Window w;
      w.first = A;
      w.iterations = it;
      w.rho = rho;
      w.u = v;
      w.f.resize(W * nm);
      apply_rows(w.u, w.f);
      w.du.resize(W * nm);
      tail(w.f, true, w.du, base_d);
      std::vector<double> again(W * nm);
      tail(w.f, false, again, base);
      w.defect = s.sup_diff_vhalf(again, w.u, W, nullptr);
      if (!finite(w.du) || !finite(w.f)) break;
      return w;
    }
    if (it > 3 && rho >= 1.0) {
      if (++growing >= 3) break;
    } else {
      growing = 0;
    }
    prev_d = d;
  }
  std::ostringstream os;
  os << "Picard iteration did not contract on [" << s.h * (A - 1) << ", "
     << s.h * (A - 1 + W) << "] (last ratio " << rho << ")";
  throw Error(ErrorKind::NonContraction, os.str());
}

void SemilinearStepper::accept(const Window& w) {
  auto& s = *impl_;
  if (w.first != s.accepted) {
    throw Error(ErrorKind::Configuration, "window does not continue the trajectory");
  }
  s.u.insert(s.u.end(), w.u.begin(), w.u.end());
  s.du.insert(s.du.end(), w.du.begin(), w.du.end());
  s.f.insert(s.f.end(), w.f.begin(), w.f.end());
  s.accepted += w.u.size() / s.nm;
}

Trajectory SemilinearStepper::trajectory() const {
  const auto& s = *impl_;
  Trajectory tr;
  std::vector<double> nodes(s.accepted);
  for (std::size_t n = 0; n < s.accepted; ++n) nodes[n] = static_cast<double>(n) * s.h;
  if (nodes.size() < 2) {
    tr.time.nodes = nodes;
  } else {
    tr.time = TimeGrid::from_nodes(std::move(nodes));
  }
  tr.grid = s.grid;
  tr.alpha = s.alpha;
  tr.u = Field(s.accepted, s.nm);
  tr.du = Field(s.accepted, s.nm);
  tr.f = Field(s.accepted, s.nm);
  tr.au = Field(s.accepted, s.nm);
  tr.dalpha = Field(s.accepted, s.nm);
  tr.u.data() = s.u;
  tr.du.data() = s.du;
  tr.f.data() = s.f;
  for (std::size_t k = 0; k < s.accepted; ++k) {
    for (std::size_t j = 0; j < s.nm; ++j) {
      tr.au(k, j) = s.grid->eigenvalue(j) * tr.u(k, j);
      tr.dalpha(k, j) = -tr.au(k, j) + tr.f(k, j);
    }
  }
  tr.metadata["nonlinearity"] = s.nl.name;
  tr.metadata["nonlinearity_picture"] =
      s.cfg.physical_space ? "physical-space (not the spectral fixed-point map)"
                           : "spectral";
  if (s.shift_c > 0.0) {
    std::ostringstream os;
    os << s.shift_c;
    tr.metadata["shift"] = os.str();
  }
  std::ostringstream dt;
  dt << s.h;
  tr.metadata["dt"] = dt.str();
  return tr;
}

SemilinearStepper::Window picard_window(const SemilinearProblem& p, double T,
                                        const SemilinearConfig& cfg) {
  SemilinearStepper st(p, cfg);
  const int n = std::max(1, static_cast<int>(std::llround(T / cfg.dt)));
  return st.picard_window(n);
}

// --- driver ------------------------------------------------------------------

const char* to_string(SolveStatus s) noexcept {
  switch (s) {
    case SolveStatus::Global:
      return "Global";
    case SolveStatus::WindowStalled:
      return "WindowStalled";
    case SolveStatus::BlowupSuspected:
      return "BlowupSuspected";
  }
  return "unknown";
}

SolveOutcome solve_semilinear(const SemilinearProblem& p, double T_target,
                              const SemilinearConfig& cfg) {
  if (!(T_target > 0.0)) throw Error(ErrorKind::Configuration, "T must be > 0");
  SemilinearStepper st(p, cfg);
  const GridPtr& g = st.grid();
  const double h = cfg.dt;
  const std::size_t n_target =
      static_cast<std::size_t>(std::ceil(T_target / h - 1e-9));
  const EnergyParams ep = cfg.energy_params.value_or(EnergyParams::defaults(p.alpha));

  SolveOutcome out;
  {
    double s_max = cfg.growth_check_range;
    if (!(s_max > 0.0)) {
      double m = 0.0;
      for (double v : p.u0) m = std::max(m, std::abs(v));
      s_max = std::max(1.0, 2.0 * m);
    }
    out.growth = check_growth(p.nl, s_max, 401);
  }

  // Initial window from the structure of the contraction bound.
  const double r_hat = 3.0 * (norm_V(*p.grid, p.u0, {0.5}) + norm_V(*p.grid, p.u1, {0.0}));
  const double q = p.nl.q1(2.0 * r_hat);
  double tau0 = T_target;
  if (q > 0.0) {
    tau0 = std::min(T_target, std::pow(1.0 / (2.0 * cfg.c_hat * q), 2.0 / p.alpha));
  }
  const double tau_min = cfg.tau_min > 0.0 ? cfg.tau_min : h;
  const int max_steps = cfg.tau_max > 0.0
                            ? std::max(1, static_cast<int>(cfg.tau_max / h))
                            : std::numeric_limits<int>::max() / 2;
  int n_w = std::clamp(static_cast<int>(std::floor(tau0 / h + 1e-9)), 1, max_steps);

  // Running weak energy for the blow-up test: kinetic convolution by
  // product integration over the accepted |u'|^2 samples.
  std::vector<double> kin;  // |u'|^2 at accepted nodes
  const double gam = 2.0 - p.alpha;
  const double g1 = std::tgamma(gam + 1.0), g2 = std::tgamma(gam + 2.0);
  std::vector<double> G1, G2;
  auto ensure_g = [&](std::size_t m) {
    while (G1.size() <= m) {
      const double s = static_cast<double>(G1.size()) * h;
      G1.push_back(std::pow(s, gam) / g1);
      G2.push_back(std::pow(s, gam + 1.0) / g2);
    }
  };
  auto kinetic_conv = [&](std::size_t n) {
    ensure_g(n);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t m = n - i;
      const double m0 = G1[m] - G1[m - 1];
      const double m1 = h * G1[m] - (G2[m] - G2[m - 1]);
      acc += std::max(0.0, m1 / h) * kin[i] + std::max(0.0, m0 - m1 / h) * kin[i + 1];
    }
    return acc;
  };

  struct Accepted {
    int steps;
    double weak;
  };
  std::vector<Accepted> history;
  double last_weak = 0.0;

  auto push_energy_rows = [&](const std::vector<double>& u,
                              const std::vector<double>& du,
                              const std::vector<double>& f, std::size_t first) {
    const std::size_t nm = g->size();
    const std::size_t rows = u.size() / nm;
    std::vector<double> au(nm), da(nm);
    for (std::size_t r = 0; r < rows; ++r) {
      std::span<const double> ur(u.data() + r * nm, nm), dr(du.data() + r * nm, nm);
      const double dn = norm_V(*g, dr, {0.0});
      kin.push_back(dn * dn);
      for (std::size_t j = 0; j < nm; ++j) {
        au[j] = g->eigenvalue(j) * ur[j];
        da[j] = -au[j] + f[r * nm + j];
      }
      const std::size_t n = first + r;
      const double t = static_cast<double>(n) * h;
      out.energy.push_back(energy_at(*g, t, ur, dr, da, au,
                                     n == 0 ? 0.0 : kinetic_conv(n), ep));
      last_weak = out.energy.back().weak;
    }
  };

  {
    const auto tr0 = st.trajectory();
    push_energy_rows(tr0.u.data(), tr0.du.data(), tr0.f.data(), 0);
  }

  out.status = SolveStatus::Global;
  while (st.accepted_nodes() - 1 < n_target) {
    const std::size_t done = st.accepted_nodes() - 1;
    const int steps = static_cast<int>(std::min<std::size_t>(n_w, n_target - done));
    const double t0 = static_cast<double>(done) * h;
    try {
      auto w = st.picard_window(steps);
      st.accept(w);
      out.windows.push_back({t0, t0 + steps * h, steps, w.iterations, w.rho, w.defect, true});
      push_energy_rows(w.u, w.du, w.f, w.first);
      history.push_back({steps, last_weak});
      if (w.rho < cfg.rho_grow) n_w = std::min(2 * n_w, max_steps);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NonContraction) throw;
      out.windows.push_back({t0, t0 + steps * h, steps, cfg.max_iter,
                             std::numeric_limits<double>::quiet_NaN(),
                             std::numeric_limits<double>::quiet_NaN(), false});
      n_w = steps / 2;
      if (n_w < 1 || n_w * h < tau_min * (1.0 - 1e-12)) {
        bool increasing = history.size() >= 3;
        for (std::size_t i = history.size() - std::min<std::size_t>(3, history.size());
             increasing && i + 1 < history.size(); ++i) {
          increasing = history[i + 1].weak > history[i].weak &&
                       history[i + 1].steps <= history[i].steps;
        }
        std::ostringstream os;
        os << "window shrank below tau_min at t=" << t0 << "; " << e.what();
        if (increasing && last_weak > cfg.energy_ceiling) {
          out.status = SolveStatus::BlowupSuspected;
          out.t_max_estimate = t0;
          os << "; energy " << last_weak << " above ceiling and increasing";
        } else {
          out.status = SolveStatus::WindowStalled;
        }
        out.diagnostics = os.str();
        break;
      }
    }
  }

  out.traj = st.trajectory();
  out.traj.label = p.label;
  out.t_reached = out.traj.time.nodes.back();
  if (out.status == SolveStatus::Global) out.diagnostics = "target time reached";
  if (!out.growth.ok) out.diagnostics += "; growth check: " + out.growth.detail;
  return out;
}

// --- export ------------------------------------------------------------------

void write_energy_csv(const std::vector<EnergyState>& e, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorKind::Configuration, "cannot write " + path);
  using detail::fmt17;
  os << "t,E_weak,u_V_half_sq,kinetic_t,kinetic_conv,E_strong,u_V_gamma,"
        "du_weighted,dalpha_weighted,au_weighted\n";
  for (const auto& s : e) {
    os << fmt17(s.t) << ',' << fmt17(s.weak) << ',' << fmt17(s.u_V_half_sq) << ','
       << fmt17(s.kinetic_t) << ',' << fmt17(s.kinetic_conv) << ','
       << fmt17(s.strong) << ',' << fmt17(s.u_V_gamma) << ','
       << fmt17(s.du_weighted) << ',' << fmt17(s.dalpha_weighted) << ','
       << fmt17(s.au_weighted) << '\n';
  }
}

std::string outcome_report_json(const SolveOutcome& out) {
  nlohmann::json doc;
  doc["status"] = to_string(out.status);
  doc["t_reached"] = out.t_reached;
  doc["t_max_estimate"] =
      out.t_max_estimate ? nlohmann::json(*out.t_max_estimate) : nlohmann::json();
  doc["diagnostics"] = out.diagnostics;
  doc["growth"] = {{"ok", out.growth.ok},
                   {"worst_margin", out.growth.worst_margin},
                   {"worst_s", out.growth.worst_s},
                   {"detail", out.growth.detail}};
  auto wins = nlohmann::json::array();
  for (const auto& w : out.windows) {
    nlohmann::json j = {{"t_start", w.t_start}, {"t_end", w.t_end},
                        {"steps", w.steps},     {"iterations", w.iterations},
                        {"accepted", w.accepted}};
    j["rho"] = std::isfinite(w.rho) ? nlohmann::json(w.rho) : nlohmann::json();
    j["defect"] = std::isfinite(w.defect) ? nlohmann::json(w.defect) : nlohmann::json();
    wins.push_back(std::move(j));
  }
  doc["windows"] = std::move(wins);
  return doc.dump(2);
}

}  // namespace fracwave
