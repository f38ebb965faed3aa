#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "json.hpp"

#include "fracwave/errors.hpp"
#include "fracwave/linear_solver.hpp"
#include "support/hp_series.hpp"

using namespace fracwave;

namespace {

GridPtr single(double lam) {
  return std::make_shared<SpectralGrid>(std::vector<Mode>{{1, lam, 1.0}}, std::max(lam, 1e-300),
                                        "single");
}

// Source making 1 + t^2 exact on one mode.
ClosedFormSource one_plus_t2(double alpha, double lam) {
  ClosedFormSource s;
  s.per_mode = {{{2.0 / std::tgamma(3.0 - alpha), 2.0 - alpha}, {lam, 0.0}, {lam, 2.0}}};
  return s;
}

}  // namespace

TEST_CASE("time grids", "[linear]") {
  auto g = TimeGrid::graded(2.0, 4, 2.0);
  CHECK(g.nodes == std::vector<double>{0.0, 0.125, 0.5, 1.125, 2.0});
  CHECK(g.uniform_step() == 0.0);
  auto u = TimeGrid::uniform(1.0, 8);
  CHECK(u.uniform_step() == Catch::Approx(0.125));
  CHECK_THROWS_AS(TimeGrid::from_nodes({0.0, 0.5, 0.4}), Error);
  CHECK_THROWS_AS(TimeGrid::from_nodes({0.1, 0.5}), Error);
  CHECK(default_grading(1.5, 0.5) == Catch::Approx(8.0 / 3.0));
  CHECK(default_grading(1.9, 1.0) == 1.0 * std::max(1.0, 2.0 / 1.9));
}

TEST_CASE("homogeneous single-mode solutions are the kernels", "[linear]") {
  const double a = 1.5, lam = 2.0;
  const auto tg = TimeGrid::graded(1.0, 64, 2.0);
  auto tr = solve_linear({single(lam), {1.0}, {0.0}, {}, a}, tg);
  auto tr2 = solve_linear({single(lam), {0.0}, {1.0}, {}, a}, tg);
  for (std::size_t k = 0; k < tg.size(); ++k) {
    const double t = tg.nodes[k];
    const double z = -lam * std::pow(t, a);
    CHECK(tr.u(k, 0) == Catch::Approx(ml({a, 1, z})).epsilon(1e-14).margin(1e-15));
    CHECK(tr2.u(k, 0) == Catch::Approx(t * ml({a, 2, z})).epsilon(1e-14).margin(1e-15));
    CHECK(tr.dalpha(k, 0) == Catch::Approx(-lam * tr.u(k, 0)).margin(1e-15));
    if (t > 0) {
      CHECK(tr.du(k, 0) ==
            Catch::Approx(-lam * std::pow(t, a - 1) * ml({a, a, z})).epsilon(1e-13));
    }
  }
  auto free = solve_linear({single(1e-300), {0.0}, {1.0}, {}, a}, tg);
  for (std::size_t k = 0; k < tg.size(); ++k) {
    CHECK(free.u(k, 0) == Catch::Approx(tg.nodes[k]).epsilon(1e-14));
  }
}

TEST_CASE("manufactured 1 + t^2", "[linear]") {
  for (double a : {1.25, 1.5, 1.75}) {
    for (double lam : {1.0, 4.0, 100.0}) {
      LinearProblem p{single(lam), {1.0}, {0.0}, one_plus_t2(a, lam), a};
      LinearOptions o;
      o.want_d2u = true;
      const auto tg = TimeGrid::graded(1.0, 256, default_grading(a, 0.5));
      const auto tr = solve_linear(p, tg, o);
      for (std::size_t k = 0; k < tg.size(); ++k) {
        const double t = tg.nodes[k];
        INFO("a " << a << " lam " << lam << " t " << t);
        CHECK(std::abs(tr.u(k, 0) - (1 + t * t)) <= 1e-10 * (1 + t * t));
        CHECK(std::abs(tr.du(k, 0) - 2 * t) <= 1e-9);
        if (k > 0) CHECK(std::abs((*tr.d2u)(k, 0) - 2.0) <= 1e-8);
        CHECK(tr.dalpha(k, 0) + tr.au(k, 0) == Catch::Approx(tr.f(k, 0)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("wave limit", "[linear]") {
  const double lam = 4.0;
  const auto tg = TimeGrid::uniform(1.0, 200);
  double prev = 1e300;
  for (double a : {1.99, 1.999, 1.9999}) {
    const auto tr = solve_linear({single(lam), {1.0}, {0.5}, {}, a}, tg);
    double worst = 0.0;
    for (std::size_t k = 0; k < tg.size(); ++k) {
      const double t = tg.nodes[k];
      const double w = std::cos(2 * t) + std::sin(2 * t) / 2 * 0.5;
      worst = std::max(worst, std::abs(tr.u(k, 0) - w));
    }
    INFO("alpha " << a << " sup error " << worst);
    if (a == 1.999) CHECK(worst <= 5e-3);
    CHECK(worst < prev);
    prev = worst;
  }
}

TEST_CASE("superposition", "[linear]") {
  std::mt19937 rng(5);
  std::normal_distribution<double> nd;
  auto g = build_dirichlet_laplacian(3.0, 6);
  const auto tg = TimeGrid::graded(1.0, 40, 2.0);
  auto rnd = [&] {
    std::vector<double> v(6);
    for (double& x : v) x = nd(rng);
    return v;
  };
  auto src = [&] {
    ClosedFormSource s;
    s.per_mode.resize(6);
    for (auto& m : s.per_mode) m = {{nd(rng), 0.0}, {nd(rng), 1.3}};
    return s;
  };
  const auto u0a = rnd(), u1a = rnd(), u0b = rnd(), u1b = rnd();
  const auto fa = src(), fb = src();
  ClosedFormSource fsum;
  fsum.per_mode.resize(6);
  for (int j = 0; j < 6; ++j) {
    fsum.per_mode[j] = fa.per_mode[j];
    for (auto t : fb.per_mode[j]) fsum.per_mode[j].push_back(t);
  }
  std::vector<double> u0s(6), u1s(6);
  for (int j = 0; j < 6; ++j) {
    u0s[j] = u0a[j] + u0b[j];
    u1s[j] = u1a[j] + u1b[j];
  }
  const auto A = solve_linear({g, u0a, u1a, fa, 1.4}, tg);
  const auto B = solve_linear({g, u0b, u1b, fb, 1.4}, tg);
  const auto S = solve_linear({g, u0s, u1s, fsum, 1.4}, tg);
  for (std::size_t i = 0; i < S.u.data().size(); ++i) {
    const double sum = A.u.data()[i] + B.u.data()[i];
    CHECK(std::abs(S.u.data()[i] - sum) <= 1e-12 * std::max(1.0, std::abs(sum)));
    const double dsum = A.du.data()[i] + B.du.data()[i];
    CHECK(std::abs(S.du.data()[i] - dsum) <= 1e-12 * std::max(1.0, std::abs(dsum)));
  }
}

TEST_CASE("derivative fields agree with differences of u", "[linear]") {
  const double a = 1.6, lam = 3.0;
  const auto tg = TimeGrid::uniform(1.0, 1024);
  LinearOptions o;
  o.want_d2u = true;
  const auto tr = solve_linear({single(lam), {1.0}, {0.7}, {}, a}, tg, o);
  const double h = tg.uniform_step();
  for (std::size_t k = 16; k + 1 < tg.size(); k += 8) {
    const double fd = (tr.u(k + 1, 0) - tr.u(k - 1, 0)) / (2 * h);
    CHECK(std::abs(fd - tr.du(k, 0)) <= 1e-3 * std::max(1.0, std::abs(tr.du(k, 0))));
    const double fd2 = (tr.du(k + 1, 0) - tr.du(k - 1, 0)) / (2 * h);
    CHECK(std::abs(fd2 - (*tr.d2u)(k, 0)) <= 1e-3 * std::max(1.0, std::abs(fd2)));
  }
}

TEST_CASE("sampled sources", "[linear]") {
  const double a = 1.5, lam = 2.0;
  const auto tg = TimeGrid::uniform(1.0, 400);
  // f = 1 sampled vs closed form: the linear interpolant is exact.
  SampledSource s;
  s.values.assign(tg.size(), 1.0);
  ClosedFormSource c;
  c.per_mode = {{{1.0, 0.0}}};
  const auto ts = solve_linear({single(lam), {0.3}, {0.0}, s, a}, tg);
  const auto tc = solve_linear({single(lam), {0.3}, {0.0}, c, a}, tg);
  for (std::size_t k = 0; k < tg.size(); ++k) {
    CHECK(ts.u(k, 0) == Catch::Approx(tc.u(k, 0)).epsilon(1e-12).margin(1e-14));
    CHECK(ts.du(k, 0) == Catch::Approx(tc.du(k, 0)).epsilon(1e-12).margin(1e-14));
  }
  LinearOptions o;
  o.want_d2u = true;
  try {
    (void)solve_linear({single(lam), {0.3}, {0.0}, s, a}, tg, o);
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Capability);
  }
  s.differentiable = true;
  const auto td = solve_linear({single(lam), {0.3}, {0.0}, s, a}, tg, o);
  CHECK(td.d2u.has_value());
  CHECK(td.metadata.count("d2u"));
}

TEST_CASE("singular convolution", "[linear][convolution]") {
  const auto tg = TimeGrid::uniform(1.0, 100);
  std::vector<double> zero(tg.size(), 0.0), one(tg.size(), 1.0);
  CHECK(convolve_singular({1.5, 1.5, 1.0}, tg, zero, 100) == 0.0);
  // lam = 0: int_0^t g_alpha = t^alpha / Gamma(alpha + 1)
  CHECK(convolve_singular({1.5, 1.5, 0.0}, tg, one, 100) ==
        Catch::Approx(1.0 / std::tgamma(2.5)).epsilon(1e-14));
  // lam = 1: 1 - E_{1.5,1}(-1)
  CHECK(std::abs(convolve_singular({1.5, 1.5, 1.0}, tg, one, 100) -
                 (1.0 - testing::hp_ml_double({3, 2}, {1, 1}, {-1, 1}))) <= 1e-8);
  try {
    (void)convolve_singular({1.5, -0.5, 1.0}, tg, one, 100);
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SingularKernel);
  }
  const auto m = kernel_moments({1.5, 1.5, 2.0}, 0.2, 0.5);
  CHECK(m.m0 == Catch::Approx((ml({1.5, 1, -2 * std::pow(0.2, 1.5)}) -
                               ml({1.5, 1, -2 * std::pow(0.5, 1.5)})) / 2.0)
                    .epsilon(1e-13));
}

TEST_CASE("estimate left-hand sides", "[linear][estimate]") {
  const double a = 1.5;
  auto g = std::make_shared<SpectralGrid>(std::vector<Mode>{{1, 1.0, 1.0}, {2, 4.0, 1.0}}, 1.0,
                                          "two");
  const auto tg = TimeGrid::graded(1.0, 32, 2.0);
  const auto tr = solve_linear({g, {1.0, 1.0}, {0.0, 0.0}, {}, a}, tg);
  const auto es = estimate_lhs(tr, {0.5, 0.25, 0.25, false});
  CHECK(es.u_V_gamma_tilde[0] == Catch::Approx(std::sqrt(5.0)).epsilon(1e-15));

  const auto t1 = solve_linear({single(1.0), {1.0}, {0.0}, {}, a}, tg);
  const auto e1 = estimate_lhs(t1, {});
  for (std::size_t k = 1; k < tg.size(); ++k) {
    const double t = tg.nodes[k];
    CHECK(e1.du_L2[k] ==
          Catch::Approx(std::pow(t, a - 1) * ml({a, a, -std::pow(t, a)})).epsilon(1e-13));
  }

  const auto z = solve_linear({single(1.0), {0.0}, {0.0}, {}, a}, tg);
  const auto ez = estimate_lhs(z, {0.5, 0.25, 0.25, false});
  for (const auto& name : EstimateSeries::names()) {
    if (name == "d2u_V_theta") continue;
    for (double v : ez.series(name)) CHECK(v == 0.0);
  }
  try {
    (void)estimate_lhs(z, {0.5, 0.25, 0.25, true});
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Capability);
  }
}

TEST_CASE("trajectory export", "[linear][io]") {
  const auto tg = TimeGrid::uniform(1.0, 4);
  auto g = build_dirichlet_laplacian(3.141592653589793, 2);
  LinearProblem p{g, {1.0, 0.0}, {0.0, 0.0}, {}, 1.5, "export"};
  p.source_lp = 2.0;
  const auto tr = solve_linear(p, tg);
  const auto path = std::filesystem::temp_directory_path() / "fracwave_traj_test.csv";
  write_trajectory_csv(tr, path.string());
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "time,mode_id,u,du,dalpha,au");
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  CHECK(rows == 10);
  const auto meta = nlohmann::json::parse(trajectory_metadata_json(tr));
  CHECK(meta["alpha"] == 1.5);
  CHECK(meta["n_modes"] == 2);
  CHECK(meta["metadata"].contains("source_lp"));
  std::filesystem::remove(path);
}
