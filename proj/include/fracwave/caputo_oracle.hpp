#pragma once

// Discrete Caputo derivative and Riemann-Liouville convolutions on uniform
// grids. Used only to check solver output against the defining integral
// D^a u(t) = int_0^t g_{2-a}(t - s) u''(s) ds, g_c(t) = t^{c-1} / Gamma(c).

#include <optional>
#include <span>
#include <vector>

#include "fracwave/linear_solver.hpp"

namespace fracwave {

struct SampledSignal {
  double h;               // uniform step
  std::vector<double> y;  // y_0 .. y_M
  double time(std::size_t i) const { return h * static_cast<double>(i); }
};

/// D^alpha u at nodes 2..M (entries 0 and 1 are NaN), 1 < alpha < 2.
/// u'' is replaced on each cell by its mean, (u'(t_j) - u'(t_{j-1})) / h,
/// with u' from second-order differences, and g_{2-alpha} is integrated
/// exactly per cell. Supplying the initial velocity u'(0) replaces the
/// one-sided difference at t = 0, which is what keeps the scheme accurate
/// for solutions behaving like t^alpha near the origin.
SampledSignal caputo(const SampledSignal& u, double alpha,
                     std::optional<double> initial_velocity = std::nullopt);

/// Same quantity via the second derivative of g_{2-alpha} * (u - u(0) -
/// t u'(0)), differenced after the convolution.
SampledSignal caputo_rl(const SampledSignal& u, double alpha,
                        std::optional<double> initial_velocity = std::nullopt);

/// (g_gamma * y)(t_k) with y piecewise linear and exact kernel moments.
SampledSignal gconv(double gamma, const SampledSignal& y);
std::vector<double> gconv(double gamma, std::span<const double> t,
                          std::span<const double> y);

/// r(t_k) = |D^a u + A u - f|_{L2} for a trajectory on a uniform grid,
/// with the oracle derivative for D^a u; entries at nodes 0, 1 are NaN.
/// The initial velocity of each mode is read from du at t = 0.
std::vector<double> residual(const Trajectory& traj, const Field& source);
std::vector<double> residual(const Trajectory& traj);

/// Solution formula re-evaluated on the uniform grid with step T / M; the
/// residual needs this instead of interpolating a graded trajectory.
Trajectory resample_uniform(const LinearProblem& p, double T, int M,
                            const LinearOptions& opts = {});

struct ResidualLevel {
  double h;
  double max_residual;  // over nodes with t >= t_min (and index >= 2)
  double order;         // log2 against the previous level; NaN on the first
};

/// Residuals of the solution formula under h, h/2, ..., h/2^{levels-1}.
std::vector<ResidualLevel> residual_study(const LinearProblem& p, double T,
                                          double h, int levels, double t_min = 0.0,
                                          const LinearOptions& opts = {});

}  // namespace fracwave
