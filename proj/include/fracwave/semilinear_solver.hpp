#pragma once

// D_t^alpha u + A u = f(u) by Picard iteration of the mild-solution map
//
//   Phi(v)(t) = u0 e_1(t) + u1 e_2(t) + int_0^t e_alpha(t - s) f(v(s)) ds
//
// on successive windows of a uniform time grid. By default f acts on the
// spectral coefficients mode by mode; the optional physical-space mode
// (Dirichlet grids only) synthesizes u(x), applies f there and projects
// back, which is a different map.

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "fracwave/linear_solver.hpp"

namespace fracwave {

/// |f'(s)| <= C_f |s|^{r-1}, r > 1.
struct PowerGrowth {
  double r;
  double c_f;
};

/// |f'(s)| <= Q1(|s|), |f(s)| <= Q2(|s|) with Q1, Q2 nondecreasing.
struct MajorantGrowth {
  std::function<double(double)> q1;
  std::function<double(double)> q2;
};

struct Nonlinearity {
  std::string name;
  std::function<double(double)> f;
  std::function<double(double)> df;
  std::variant<PowerGrowth, MajorantGrowth> growth;
  /// Solve on A + c I with f(u) + c u instead.
  std::optional<double> requires_shift = std::nullopt;

  /// Bound on |f'| at amplitude x from the growth metadata.
  double q1(double x) const;

  static Nonlinearity zero();
  static Nonlinearity linear(double c);
  /// coeff * u^p for integer p >= 2: growth r = p, C_f = p |coeff|.
  static Nonlinearity power(int p, double coeff);
  static Nonlinearity sine();
};

struct GrowthReport {
  bool ok = true;
  double worst_margin = 0.0;  // min over samples of bound - |lhs|
  double worst_s = 0.0;
  std::string detail;
};

/// Samples s uniformly on [-s_max, s_max] and checks f(0) = 0 and the
/// declared growth inequalities.
GrowthReport check_growth(const Nonlinearity& nl, double s_max, int n_samples);

struct EnergyParams {
  double s_exp;
  double delta1;
  double delta2;
  double gamma;  // index of |u|_{V_gamma} in the strong norm

  /// s = 1 - alpha/2 + 0.05, delta1 = max(0, 1 - alpha gamma) + 0.01,
  /// delta2 = max(alpha (1 - gamma), alpha - 1) + 0.01.
  static EnergyParams defaults(double alpha, double gamma = 0.75);
};

struct EnergyState {
  double t;
  double u_V_half_sq;   // |u|^2_{V_1/2}
  double kinetic_t;     // t^{2s} |u'|^2
  double kinetic_conv;  // (g_{2-alpha} * |u'|^2)(t)
  double weak;          // sum of the three
  double u_V_gamma;
  double du_weighted;      // t^{delta1} |u'|
  double dalpha_weighted;  // t^{delta2} |D^a u|
  double au_weighted;      // t^{delta2} |Au|
  double strong;
};

std::vector<EnergyState> energy(const Trajectory& traj, const EnergyParams& p);

struct SemilinearConfig {
  double dt = 1e-3;              // uniform step of the time grid
  double tol_fix = 1e-10;        // Picard stopping tolerance
  int max_iter = 60;
  double c_hat = 1.0;            // constant in the initial window size
  double tau_min = 0.0;          // 0: one step
  double tau_max = 0.0;          // 0: unlimited
  double rho_grow = 0.25;        // double the window when rho < rho_grow
  double energy_ceiling = 1e8;
  double shift = 0.0;            // extra m0-shift on top of requires_shift
  bool physical_space = false;
  int physical_points = 0;       // 0: 2 * modes + 1
  double ml_tol = kDefaultMlTol;
  double growth_check_range = 0.0;  // 0: 2 * max |u0|, at least 1
  std::optional<EnergyParams> energy_params;
  int threads = 0;
};

struct WindowStats {
  double t_start;
  double t_end;
  int steps;
  int iterations;
  double rho;
  double defect;  // sup |Phi(u) - u|_{V_1/2} after acceptance
  bool accepted;
};

enum class SolveStatus { Global, WindowStalled, BlowupSuspected };
const char* to_string(SolveStatus s) noexcept;

struct SolveOutcome {
  Trajectory traj;  // accepted nodes only
  SolveStatus status = SolveStatus::Global;
  double t_reached = 0.0;
  std::optional<double> t_max_estimate;
  std::vector<WindowStats> windows;
  std::vector<EnergyState> energy;
  GrowthReport growth;
  std::string diagnostics;
};

struct SemilinearProblem {
  GridPtr grid;
  double alpha;
  std::vector<double> u0;
  std::vector<double> u1;
  Nonlinearity nl;
  std::string label = "semilinear";
};

/// Window-by-window driver. Accepted history is frozen; each window only
/// iterates the part of the convolution that falls inside it.
class SemilinearStepper {
 public:
  SemilinearStepper(const SemilinearProblem& p, const SemilinearConfig& cfg);
  ~SemilinearStepper();
  SemilinearStepper(const SemilinearStepper&) = delete;
  SemilinearStepper& operator=(const SemilinearStepper&) = delete;

  struct Window {
    std::size_t first;  // index of the first new node
    std::vector<double> u, du, f;  // rows [node][mode]
    int iterations;
    double rho;
    double defect;
  };

  /// Picard iteration on the next n_steps steps. Throws NonContraction
  /// when the iteration stalls or diverges.
  Window picard_window(int n_steps);
  void accept(const Window& w);

  std::size_t accepted_nodes() const;
  double time_of(std::size_t n) const;
  /// Grid actually solved on (after any shift).
  const GridPtr& grid() const;
  Trajectory trajectory() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// One Picard solve on [0, T] from the initial data.
SemilinearStepper::Window picard_window(const SemilinearProblem& p, double T,
                                        const SemilinearConfig& cfg);

SolveOutcome solve_semilinear(const SemilinearProblem& p, double T_target,
                              const SemilinearConfig& cfg = {});

/// Projection of physical values at the interior points x_i = i L/(P+1)
/// onto the sine modes of a Dirichlet grid (exact for modes k <= P).
std::vector<double> analyze_dirichlet(const SpectralGrid& g,
                                      std::span<const double> values);
std::vector<double> dirichlet_points(const SpectralGrid& g, int n_points);

void write_energy_csv(const std::vector<EnergyState>& e, const std::string& path);
std::string outcome_report_json(const SolveOutcome& out);

}  // namespace fracwave
