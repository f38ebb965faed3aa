#pragma once

// Positive self-adjoint operators in multiplication form: A acts on the
// coefficient of mode j as multiplication by m_j, and the L2 inner product
// carries the quadrature weight w_j of the (discretized) spectral measure.

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fracwave {

struct Mode {
  long id;
  double m;  // eigenvalue sample
  double w;  // spectral weight
};

/// Sine basis on (0, L) backing a Dirichlet Laplacian grid; only used to
/// synthesize physical-space values for display and for the optional
/// physical-space nonlinearity.
struct DirichletBasis {
  double length;
};

class SpectralGrid;
using GridPtr = std::shared_ptr<const SpectralGrid>;

class SpectralGrid {
 public:
  /// Validates m_j >= m0 > 0 and w_j > 0; throws ValidationError naming
  /// the first offending mode.
  SpectralGrid(std::vector<Mode> modes, double m0, std::string label,
               std::optional<DirichletBasis> basis = std::nullopt);

  /// Total shift c applied by shift(); kept separately so repeated shifts
  /// compose exactly.
  double offset() const noexcept { return offset_; }

  std::size_t size() const noexcept { return modes_.size(); }
  const std::vector<Mode>& modes() const noexcept { return modes_; }
  const Mode& mode(std::size_t j) const { return modes_.at(j); }
  double eigenvalue(std::size_t j) const { return modes_[j].m; }
  double weight(std::size_t j) const { return modes_[j].w; }
  double m0() const noexcept { return m0_; }
  double total_weight() const noexcept { return total_weight_; }
  const std::string& label() const noexcept { return label_; }
  const std::optional<DirichletBasis>& dirichlet_basis() const noexcept {
    return basis_;
  }

  std::vector<double> eigenvalues() const;

 private:
  std::vector<Mode> modes_;
  double m0_;
  double total_weight_;
  std::string label_;
  std::optional<DirichletBasis> basis_;
  std::vector<double> base_m_;
  double base_m0_;
  double offset_ = 0.0;

  friend GridPtr shift(const SpectralGrid& g, double c);
};

/// Coefficient vector on a grid.
struct GridFunction {
  GridPtr grid;
  std::vector<double> values;

  GridFunction(GridPtr g, std::vector<double> v);
  static GridFunction zeros(GridPtr g);
  double operator[](std::size_t j) const { return values[j]; }
  std::size_t size() const noexcept { return values.size(); }
};

/// Exponent of a fractional power space V_gamma = D(A^gamma); negative
/// values select the dual space.
struct FractionalIndex {
  double gamma;
};

// ---------------------------------------------------------------------------
// Constructors

/// -d^2/dx^2 on (0, L) with Dirichlet conditions: m_k = (k pi / L)^2.
GridPtr build_dirichlet_laplacian(double length, int n_modes);

/// Spectral power A^s, s in (0, 1].
GridPtr build_fractional_power(const SpectralGrid& g, double s);

/// 1-D quantum harmonic oscillator -d^2/dx^2 + x^2: m_k = 2k + 1.
GridPtr build_harmonic_oscillator(int n_modes);

/// A + c I, c >= 0.
GridPtr shift(const SpectralGrid& g, double c);

/// Parses a spectral-measure document (JSON text; see docs/formats.md).
GridPtr load_spectral_measure(std::string_view text);
GridPtr load_spectral_measure_file(const std::string& path);
std::string spectral_measure_document(const SpectralGrid& g);

// ---------------------------------------------------------------------------
// Norms

/// (sum_j w_j m_j^{2 gamma} |v_j|^2)^{1/2}
double norm_V(const SpectralGrid& g, std::span<const double> v,
              FractionalIndex idx);
double norm_V(const GridFunction& v, FractionalIndex idx);

/// Values of sum_j v_j phi_j(x) at the given points for a Dirichlet grid.
std::vector<double> synthesize_dirichlet(const SpectralGrid& g,
                                         std::span<const double> coeffs,
                                         std::span<const double> x);

}  // namespace fracwave
