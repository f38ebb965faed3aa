#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "fracwave/errors.hpp"
#include "fracwave/spectral_operator.hpp"

using namespace fracwave;
using std::numbers::pi;

namespace {

std::vector<double> eig(const GridPtr& g) { return g->eigenvalues(); }

GridPtr grid_of(std::vector<double> m, std::vector<double> w, double m0) {
  std::vector<Mode> modes;
  for (std::size_t i = 0; i < m.size(); ++i) modes.push_back({long(i), m[i], w[i]});
  return std::make_shared<SpectralGrid>(modes, m0, "test");
}

GridPtr random_grid(std::mt19937& rng, int n) {
  std::uniform_real_distribution<double> lm(-2.0, 3.0), uw(0.1, 2.0);
  std::vector<Mode> modes;
  double m0 = 1e300;
  for (int i = 0; i < n; ++i) {
    const double m = std::pow(10.0, lm(rng));
    modes.push_back({i, m, uw(rng)});
    m0 = std::min(m0, m);
  }
  return std::make_shared<SpectralGrid>(modes, m0 * 0.9, "random");
}

}  // namespace

TEST_CASE("dirichlet laplacian spectrum", "[spectral]") {
  auto g = build_dirichlet_laplacian(pi, 3);
  CHECK(eig(g) == std::vector<double>{1, 4, 9});
  CHECK(g->m0() == 1.0);
  g = build_dirichlet_laplacian(1.0, 1);
  CHECK(g->eigenvalue(0) == Catch::Approx(pi * pi).epsilon(1e-15));
  CHECK(g->m0() == Catch::Approx(pi * pi).epsilon(1e-15));
  g = build_dirichlet_laplacian(2 * pi, 2);
  CHECK(g->eigenvalue(0) == Catch::Approx(0.25).epsilon(1e-15));
  CHECK(g->eigenvalue(1) == Catch::Approx(1.0).epsilon(1e-15));
  CHECK(g->m0() == Catch::Approx(0.25).epsilon(1e-15));
  for (std::size_t j = 0; j < g->size(); ++j) CHECK(g->weight(j) == 1.0);
  CHECK(g->dirichlet_basis().has_value());
}

TEST_CASE("fractional powers", "[spectral]") {
  auto g = build_dirichlet_laplacian(pi, 3);
  auto h = build_fractional_power(*g, 0.5);
  CHECK(eig(h) == std::vector<double>{1, 2, 3});
  CHECK(eig(build_fractional_power(*g, 1.0)) == eig(g));
  auto p = build_fractional_power(*build_dirichlet_laplacian(1.0, 1), 0.5);
  CHECK(p->eigenvalue(0) == Catch::Approx(pi).epsilon(1e-15));
  CHECK(p->m0() == Catch::Approx(pi).epsilon(1e-15));

  std::mt19937 rng(7);
  auto r = random_grid(rng, 40);
  auto twice = build_fractional_power(*build_fractional_power(*r, 0.6), 0.5);
  auto once = build_fractional_power(*r, 0.3);
  for (std::size_t j = 0; j < r->size(); ++j) {
    CHECK(twice->eigenvalue(j) == Catch::Approx(once->eigenvalue(j)).epsilon(1e-14));
  }
}

TEST_CASE("harmonic oscillator", "[spectral]") {
  CHECK(eig(build_harmonic_oscillator(3)) == std::vector<double>{1, 3, 5});
  CHECK(eig(build_harmonic_oscillator(1)) == std::vector<double>{1});
  auto g = build_harmonic_oscillator(5);
  CHECK(g->m0() == 1.0);
  CHECK(g->eigenvalue(4) == 9.0);
}

TEST_CASE("shift", "[spectral]") {
  auto g = grid_of({1, 4}, {1, 1}, 1);
  CHECK(eig(shift(*g, 1.0)) == std::vector<double>{2, 5});
  CHECK(eig(shift(*g, 0.0)) == eig(g));
  auto q = grid_of({0.25, 1}, {1, 1}, 0.25);
  auto s = shift(*q, 0.75);
  CHECK(eig(s) == std::vector<double>{1, 1.75});
  CHECK(s->m0() == 1.0);

  std::mt19937 rng(3);
  auto r = random_grid(rng, 30);
  for (auto [c, d] : {std::pair{0.1, 0.2}, {0.3, 1.7}, {1e-3, 5.0}}) {
    auto a = shift(*shift(*r, c), d);
    auto b = shift(*r, c + d);
    CHECK(eig(a) == eig(b));
    CHECK(a->m0() == b->m0());
  }
}

TEST_CASE("spectral measure documents", "[spectral]") {
  const char* doc = R"({"schema_version": 1, "label": "1+xi on [0,1]", "m0": 1,
                        "total_weight": 1.0,
                        "modes": [[1, 0.25], [1.5, 0.5], [2, 0.25]]})";
  auto g = load_spectral_measure(doc);
  CHECK(eig(g) == std::vector<double>{1, 1.5, 2});
  CHECK(g->weight(0) == 0.25);
  CHECK(g->weight(1) == 0.5);
  CHECK(g->m0() == 1.0);
  CHECK(g->total_weight() == 1.0);

  auto round = load_spectral_measure(spectral_measure_document(*g));
  CHECK(eig(round) == eig(g));
  CHECK(round->label() == g->label());

  CHECK_THROWS_AS(load_spectral_measure(
                      R"({"schema_version":1,"label":"e","m0":1,"total_weight":0,"modes":[]})"),
                  Error);
  try {
    (void)load_spectral_measure(
        R"({"schema_version":1,"label":"x","m0":1,"total_weight":1,"modes":[[0.5,1]]})");
    FAIL("no throw");
  } catch (const ValidationError& e) {
    CHECK(e.index() == 0);
  }
  try {
    (void)load_spectral_measure(
        R"({"schema_version":1,"label":"x","m0":1,"total_weight":3,"modes":[[1,1],[2,1],[3,-1]]})");
    FAIL("no throw");
  } catch (const ValidationError& e) {
    CHECK(e.index() == 2);
  }
  // declared total weight must match
  CHECK_THROWS_AS(load_spectral_measure(
                      R"({"schema_version":1,"label":"x","m0":1,"total_weight":2,"modes":[[1,1]]})"),
                  Error);
}

TEST_CASE("constructor validation", "[spectral]") {
  CHECK_THROWS_AS(SpectralGrid({}, 1.0, "empty"), Error);
  CHECK_THROWS_AS(SpectralGrid({{0, 1.0, 1.0}}, 0.0, "m0"), Error);
  try {
    SpectralGrid({{0, 2.0, 1.0}, {1, 0.5, 1.0}}, 1.0, "below");
    FAIL("no throw");
  } catch (const ValidationError& e) {
    CHECK(e.index() == 1);
  }
}

TEST_CASE("fractional norms", "[spectral]") {
  auto g = grid_of({1, 4}, {1, 1}, 1);
  std::vector<double> v{1, 1};
  CHECK(norm_V(*g, v, {0.5}) == Catch::Approx(std::sqrt(5.0)).epsilon(1e-15));
  CHECK(norm_V(*g, v, {0.0}) == Catch::Approx(std::sqrt(2.0)).epsilon(1e-15));
  auto one = grid_of({4}, {1}, 4);
  CHECK(norm_V(*one, std::vector<double>{3}, {-0.5}) == Catch::Approx(1.5).epsilon(1e-15));

  std::mt19937 rng(11);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 20; ++trial) {
    auto r = random_grid(rng, 25);
    std::vector<double> x(r->size());
    for (double& xi : x) xi = nd(rng);
    for (double gam : {0.0, 0.25, 0.5, 1.0, 1.5}) {
      const double plus = norm_V(*r, x, {gam});
      const double minus = norm_V(*r, x, {-gam});
      CHECK(minus <= std::pow(r->m0(), -2 * gam) * plus * (1 + 1e-14));
      double brute = 0.0;
      for (std::size_t j = 0; j < r->size(); ++j) {
        brute += r->weight(j) * std::pow(r->eigenvalue(j), 2 * gam) * x[j] * x[j];
      }
      CHECK(plus * plus == Catch::Approx(brute).epsilon(1e-14));
    }
  }
}

TEST_CASE("sine synthesis", "[spectral]") {
  auto g = build_dirichlet_laplacian(pi, 3);
  std::vector<double> c{1.0, 0.0, 0.5};
  std::vector<double> x{0.3, 1.0, 2.5};
  const auto v = synthesize_dirichlet(*g, c, x);
  const double s = std::sqrt(2.0 / pi);
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(v[i] == Catch::Approx(s * (std::sin(x[i]) + 0.5 * std::sin(3 * x[i]))).epsilon(1e-14));
  }
}
