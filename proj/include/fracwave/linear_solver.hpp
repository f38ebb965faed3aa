#pragma once

// Closed-form mild solution of D_t^alpha u + A u = f, u(0) = u0,
// u'(0) = u1, 1 < alpha < 2, evaluated mode by mode. With
// e_b(t) = t^{b-1} E_{alpha,b}(-lam t^alpha):
//
//   u    = u0 e_1  + u1 e_2 + e_alpha * f
//   u'   = u0 e_0  + u1 e_1 + e_{alpha-1} * f
//   u''  = u0 e_-1 + u1 e_0 + e_{alpha-1} * f' + e_{alpha-1}(t) f(0)
//
// where * is the causal convolution and e_0 = -lam e_alpha,
// e_-1 = -lam e_{alpha-1}.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "fracwave/mittag_leffler.hpp"
#include "fracwave/spectral_operator.hpp"

namespace fracwave {

struct TimeGrid {
  std::vector<double> nodes;  // t_0 = 0 < t_1 < ... < t_N
  double grading = 1.0;       // r when nodes = T (j/N)^r

  /// T (j/N)^r, j = 0..N.
  static TimeGrid graded(double T, int N, double r);
  static TimeGrid uniform(double T, int N);
  /// Arbitrary strictly increasing nodes starting at 0.
  static TimeGrid from_nodes(std::vector<double> nodes);

  std::size_t size() const noexcept { return nodes.size(); }
  double final_time() const { return nodes.back(); }
  /// Step when the nodes are uniform within a relative 1e-12, else 0.
  double uniform_step() const;
};

/// Grading exponent max(1, 2 / (alpha * gamma_tilde)).
double default_grading(double alpha, double gamma_tilde);

/// c t^p with p > -1.
struct MonomialTerm {
  double coeff;
  double power;
};

/// Per-mode finite sums of monomials; an empty list is the zero source.
struct ClosedFormSource {
  std::vector<std::vector<MonomialTerm>> per_mode;

  double value(std::size_t mode, double t) const;
  double derivative(std::size_t mode, double t) const;
};

/// Samples f(t_k) on the solve grid, row-major [node][mode]. Convolutions
/// use the piecewise-linear interpolant; `differentiable` declares that
/// the slope of that interpolant may stand in for f' in u''.
struct SampledSource {
  std::vector<double> values;
  bool differentiable = false;
};

using Source = std::variant<std::monostate, ClosedFormSource, SampledSource>;

struct LinearProblem {
  GridPtr grid;
  std::vector<double> u0;
  std::vector<double> u1;
  Source source;
  double alpha;
  std::string label = "linear";
  /// Declared time integrability p of the source (f in L^p(0,T; ...)),
  /// used only to report the theorem's hypotheses in the metadata.
  std::optional<double> source_lp = std::nullopt;
};

/// Node-by-mode table, row-major.
class Field {
 public:
  Field() = default;
  Field(std::size_t n_nodes, std::size_t n_modes)
      : n_nodes_(n_nodes), n_modes_(n_modes), data_(n_nodes * n_modes, 0.0) {}

  double& operator()(std::size_t k, std::size_t j) {
    return data_[k * n_modes_ + j];
  }
  double operator()(std::size_t k, std::size_t j) const {
    return data_[k * n_modes_ + j];
  }
  std::span<const double> row(std::size_t k) const {
    return {data_.data() + k * n_modes_, n_modes_};
  }
  std::span<double> row(std::size_t k) {
    return {data_.data() + k * n_modes_, n_modes_};
  }
  std::vector<double> column(std::size_t j) const;
  std::size_t nodes() const noexcept { return n_nodes_; }
  std::size_t modes() const noexcept { return n_modes_; }
  const std::vector<double>& data() const noexcept { return data_; }
  std::vector<double>& data() noexcept { return data_; }

 private:
  std::size_t n_nodes_ = 0;
  std::size_t n_modes_ = 0;
  std::vector<double> data_;
};

struct Trajectory {
  TimeGrid time;
  GridPtr grid;
  double alpha = 0.0;
  std::string label;
  Field u, du, dalpha, au;
  std::optional<Field> d2u;
  Field f;  // source values used in dalpha = -Au + f
  std::map<std::string, std::string> metadata;

  GridFunction at(const Field& fld, std::size_t k) const;
};

struct LinearOptions {
  double tol = kDefaultMlTol;
  bool want_d2u = false;
  int threads = 0;  // 0: FRACWAVE_THREADS or hardware
};

Trajectory solve_linear(const LinearProblem& p, const TimeGrid& tg,
                        const LinearOptions& opts = {});

// ---------------------------------------------------------------------------
// Weakly singular convolutions

/// The kernel e_beta of the family above for one eigenvalue.
struct KernelFamily {
  double alpha;
  double beta;
  double lam;
};

struct KernelMoments {
  double m0;  // int_a^b e_beta(s) ds
  double m1;  // int_a^b (s - a) e_beta(s) ds
};

/// Exact moments of e_beta over [a, b], 0 <= a < b, from the closed-form
/// antiderivatives e_{beta+1}, e_{beta+2}.
KernelMoments kernel_moments(const KernelFamily& k, double a, double b,
                             double tol = kDefaultMlTol);

/// int_0^{t_k} e_beta(t_k - s) f(s) ds with f piecewise linear through
/// the samples on tg.nodes[0..k].
double convolve_singular(const KernelFamily& k, const TimeGrid& tg,
                         std::span<const double> samples, std::size_t k_index,
                         double tol = kDefaultMlTol);

// ---------------------------------------------------------------------------
// Left-hand sides of the a priori estimates

struct EstimateIndices {
  double gamma_tilde = 0.5;
  double gamma = 0.25;
  double theta = 0.25;
  bool include_d2u = false;
};

struct EstimateSeries {
  std::vector<double> t;
  std::vector<double> u_V_gamma_tilde;    // |u|_{V_gt}
  std::vector<double> du_L2;              // |u'|
  std::vector<double> dalpha_V_minus_gamma;  // |D^a u|_{V_-g}
  std::vector<double> dalpha_L2;          // |D^a u|
  std::vector<double> au_L2;              // |Au|
  std::vector<double> du_V_gamma_tilde;   // |u'|_{V_gt}
  std::vector<double> u_V_gamma;          // |u|_{V_g}
  std::vector<double> d2u_V_theta;        // |u''|_{V_theta}, optional

  /// Named access for the verifier ("u_V_gamma_tilde", ...).
  const std::vector<double>& series(const std::string& name) const;
  static const std::vector<std::string>& names();
};

EstimateSeries estimate_lhs(const Trajectory& traj, const EstimateIndices& idx);

// ---------------------------------------------------------------------------
// Export

/// Columns time, mode_id, u, du, dalpha, au (+ d2u).
void write_trajectory_csv(const Trajectory& traj, const std::string& path);
/// JSON with alpha, grid label, grading, tolerances and traj.metadata.
std::string trajectory_metadata_json(const Trajectory& traj);

}  // namespace fracwave
