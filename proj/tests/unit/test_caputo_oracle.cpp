#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "fracwave/caputo_oracle.hpp"
#include "fracwave/errors.hpp"

using namespace fracwave;

namespace {

SampledSignal sample(double h, int M, double (*f)(double)) {
  SampledSignal s{h, std::vector<double>(M + 1)};
  for (int i = 0; i <= M; ++i) s.y[i] = f(h * i);
  return s;
}

GridPtr single(double lam) {
  return std::make_shared<SpectralGrid>(std::vector<Mode>{{1, lam, 1.0}}, lam, "single");
}

LinearProblem manufactured(double a, double lam, double p) {
  // u = 1 + t^p, p >= 2
  ClosedFormSource s;
  s.per_mode = {{{std::tgamma(p + 1) / std::tgamma(p + 1 - a), p - a}, {lam, 0.0}, {lam, p}}};
  return {single(lam), {1.0}, {0.0}, s, a};
}

}  // namespace

TEST_CASE("caputo of monomials and affine signals", "[oracle]") {
  const double a = 1.5, h = 1e-3;
  const auto sq = caputo(sample(h, 1000, [](double t) { return t * t; }), a, 0.0);
  CHECK(std::isnan(sq.y[0]));
  CHECK(std::isnan(sq.y[1]));
  const double exact = 2.0 / std::tgamma(3.0 - a);
  CHECK(std::abs(sq.y[1000] - exact) <= 1e-3 * exact);

  const auto aff = caputo(sample(h, 200, [](double t) { return 2.0 - 3.0 * t; }), a, -3.0);
  for (std::size_t i = 2; i < aff.y.size(); ++i) CHECK(std::abs(aff.y[i]) <= 1e-10);

  try {
    (void)caputo({h, {1.0, 2.0}}, a);
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InsufficientData);
  }
}

TEST_CASE("caputo of the Mittag-Leffler eigenfunction", "[oracle]") {
  const double a = 1.5, lam = 1.0, h = 5e-4;
  const int M = 2000;
  SampledSignal u{h, std::vector<double>(M + 1)};
  for (int i = 0; i <= M; ++i) u.y[i] = ml({a, 1, -lam * std::pow(h * i, a)});
  const auto d = caputo(u, a, 0.0);
  double worst = 0.0;
  for (int i = 200; i <= M; ++i) {
    worst = std::max(worst, std::abs(d.y[i] + lam * u.y[i]) / std::max(std::abs(u.y[i]), 1e-2));
  }
  CHECK(worst <= 5e-3);
}

TEST_CASE("consistency order on t^3", "[oracle]") {
  for (double a : {1.25, 1.5, 1.75}) {
    double prev = 0.0;
    for (int M : {250, 500, 1000, 2000}) {
      const double h = 1.0 / M;
      const auto d = caputo(sample(h, M, [](double t) { return t * t * t; }), a, 0.0);
      const double err = std::abs(d.y[M] - 6.0 / std::tgamma(4.0 - a));
      if (prev > 0.0) {
        INFO("alpha " << a << " M " << M);
        CHECK(std::log2(prev / err) >= 3.0 - a - 0.3);
      }
      prev = err;
    }
  }
}

TEST_CASE("Riemann-Liouville variant agrees", "[oracle]") {
  const double a = 1.4, h = 1e-3;
  const auto u = sample(h, 1000, [](double t) { return std::cos(t) + t * t * t; });
  const auto c1 = caputo(u, a, 0.0);
  const auto c2 = caputo_rl(u, a, 0.0);
  for (std::size_t i = 100; i < u.y.size(); i += 50) {
    CHECK(std::abs(c1.y[i] - c2.y[i]) <= 5e-3 * std::max(1.0, std::abs(c1.y[i])));
  }
}

TEST_CASE("linearity", "[oracle]") {
  const double a = 1.6, h = 2e-3;
  const auto f = sample(h, 300, [](double t) { return std::sin(3 * t); });
  const auto g = sample(h, 300, [](double t) { return std::exp(-t) * t; });
  SampledSignal s{h, f.y};
  for (std::size_t i = 0; i < s.y.size(); ++i) s.y[i] = 2 * f.y[i] - 0.5 * g.y[i];
  const auto cf = caputo(f, a, 3.0), cg = caputo(g, a, 1.0), cs = caputo(s, a, 5.5);
  const auto gf = gconv(0.3, f), gg = gconv(0.3, g), gs = gconv(0.3, s);
  for (std::size_t i = 2; i < s.y.size(); ++i) {
    CHECK(cs.y[i] == Catch::Approx(2 * cf.y[i] - 0.5 * cg.y[i]).margin(1e-9));
    CHECK(gs.y[i] == Catch::Approx(2 * gf.y[i] - 0.5 * gg.y[i]).margin(1e-13));
  }
}

TEST_CASE("fractional integrals", "[oracle][gconv]") {
  const double h = 1e-3;
  const int M = 1000;
  for (double g : {0.2, 0.5, 0.9}) {
    const auto one = gconv(g, sample(h, M, [](double) { return 1.0; }));
    CHECK(one.y[M] == Catch::Approx(1.0 / std::tgamma(g + 1)).epsilon(1e-12));
  }
  const auto zero = gconv(0.5, sample(h, M, [](double) { return 0.0; }));
  for (double v : zero.y) CHECK(v == 0.0);
  const auto lin = gconv(0.5, sample(h, M, [](double t) { return t; }));
  CHECK(std::abs(lin.y[M] - 1.0 / std::tgamma(2.5)) <= 1e-6 / std::tgamma(2.5));
  const auto pos = gconv(0.4, sample(h, M, [](double t) { return std::abs(std::sin(40 * t)); }));
  for (double v : pos.y) CHECK(v >= 0.0);
  // nonuniform nodes
  std::vector<double> t{0.0, 0.1, 0.15, 0.4, 1.0}, y{1, 1, 1, 1, 1};
  const auto nu = gconv(0.5, t, y);
  CHECK(nu.back() == Catch::Approx(1.0 / std::tgamma(1.5)).epsilon(1e-12));
}

TEST_CASE("solver residuals", "[oracle][residual]") {
  SECTION("zero problem") {
    const auto tr = resample_uniform({single(2.0), {0.0}, {0.0}, {}, 1.5}, 1.0, 100);
    const auto r = residual(tr);
    for (std::size_t k = 2; k < r.size(); ++k) CHECK(r[k] == 0.0);
  }
  SECTION("manufactured 1 + t^2") {
    const auto lv = residual_study(manufactured(1.5, 1.0, 2.0), 1.0, 5e-4, 1, 0.1);
    CHECK(lv.front().max_residual <= 2e-3);
  }
  SECTION("manufactured 1 + t^3 converges") {
    const auto lv = residual_study(manufactured(1.5, 1.0, 3.0), 1.0, 1e-3, 3, 0.1);
    for (std::size_t i = 1; i < lv.size(); ++i) CHECK(lv[i].order >= 1.0);
  }
  SECTION("homogeneous single mode") {
    const double lam = 4.0;
    const auto lv = residual_study({single(lam), {1.0}, {0.0}, {}, 1.5}, 1.0, 5e-4, 2, 0.1);
    CHECK(lv[0].max_residual <= 1e-2 * lam);
    CHECK(lv[1].order >= 1.0);
  }
  SECTION("graded trajectory is rejected") {
    const auto tr = solve_linear({single(1.0), {1.0}, {0.0}, {}, 1.5}, TimeGrid::graded(1, 50, 2));
    try {
      (void)residual(tr);
      FAIL("no throw");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Configuration);
    }
    const auto tu = solve_linear({single(1.0), {1.0}, {0.0}, {}, 1.5}, TimeGrid::uniform(1, 50));
    CHECK_THROWS_AS(residual(tu, Field(10, 1)), Error);
  }
}
