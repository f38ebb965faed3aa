#include <catch2/catch_amalgamated.hpp>

#include <functional>
#include <string>

#include "json.hpp"

#include "fracwave/config.hpp"
#include "fracwave/errors.hpp"

using namespace fracwave;
using nlohmann::json;

namespace {

std::string validation_message(const std::string& text) {
  try {
    (void)parse_run_config(text);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Validation);
    return e.what();
  }
  FAIL("no throw");
  return {};
}

}  // namespace

TEST_CASE("linear config with defaults", "[config]") {
  const auto c = parse_run_config(R"({
    "schema_version": 1, "kind": "linear", "alpha": 1.4,
    "operator": {"builtin": "dirichlet", "modes": 5},
    "u0": {"profile": "mode", "mode": 2, "amplitude": 3},
    "u1": [0.5]
  })");
  CHECK(c.kind == RunKind::Linear);
  CHECK(c.alpha == 1.4);
  REQUIRE(c.grid->size() == 5);
  CHECK(c.grid->eigenvalue(4) == Catch::Approx(25.0));
  CHECK(c.u0 == std::vector<double>{0, 3, 0, 0, 0});
  CHECK(c.u1 == std::vector<double>{0.5, 0, 0, 0, 0});
  CHECK(c.time.T == 1.0);
  CHECK(c.time.N == 128);

  const auto r = json::parse(c.resolved);
  CHECK(r["time"]["T"] == 1.0);
  CHECK(r["operator"]["resolved_modes"] == 5);
  CHECK(r["tolerances"]["ml_tol"].get<double>() == kDefaultMlTol);

  const auto tg = time_grid(c);
  CHECK(tg.nodes.size() == 129);
  const auto lp = linear_problem(c);
  CHECK(lp.alpha == 1.4);
}

TEST_CASE("operator variants", "[config]") {
  auto c = parse_run_config(R"({"schema_version":1,"kind":"linear","alpha":1.5,
    "operator":{"builtin":"harmonic","modes":3,"power":0.5,"shift":1}})");
  CHECK(c.grid->eigenvalue(0) == Catch::Approx(2.0));
  CHECK(c.grid->eigenvalue(2) == Catch::Approx(1.0 + std::sqrt(5.0)));
  c = parse_run_config(R"({"schema_version":1,"kind":"linear","alpha":1.5,
    "operator":{"builtin":"log-spectrum","lam_lo":0.01,"lam_hi":100,"per_decade":2},
    "u0":{"profile":"critical","kappa":1}})");
  CHECK(c.grid->size() == 9);
  CHECK(c.u0[0] == Catch::Approx(10.0));
}

TEST_CASE("manufactured source sets the data", "[config]") {
  const auto c = parse_run_config(R"({"schema_version":1,"kind":"residual","alpha":1.5,
    "operator":{"builtin":"single","lambda":1},
    "source":{"kind":"manufactured","mode":1,"solution":[{"coeff":1,"power":0},{"coeff":1,"power":2}]},
    "time":{"T":1,"uniform":true},
    "residual":{"h":0.0005,"t_min":0.1}})");
  CHECK(c.kind == RunKind::Residual);
  CHECK(c.u0 == std::vector<double>{1.0});
  CHECK(c.u1 == std::vector<double>{0.0});
  CHECK(c.residual.t_min == 0.1);
  const auto tr = solve_linear(linear_problem(c), TimeGrid::uniform(1.0, 64));
  CHECK(tr.u(64, 0) == Catch::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("semilinear config", "[config]") {
  const auto c = parse_run_config(R"({"schema_version":1,"kind":"semilinear","alpha":1.5,
    "operator":{"builtin":"single","lambda":1},"u0":[2],
    "nonlinearity":{"kind":"power","p":3,"coeff":-1},
    "solver":{"dt":0.002,"physical_space":false}})");
  REQUIRE(c.nonlinearity);
  CHECK(c.nonlinearity->f(2.0) == -8.0);
  CHECK(c.semilinear.dt == 0.002);
  const auto sp = semilinear_problem(c);
  CHECK(sp.u0 == std::vector<double>{2.0});
}

TEST_CASE("verification suites", "[config]") {
  auto c = parse_run_config(R"({"schema_version":1,"kind":"rates",
    "rates":{"alphas":[1.5],"N":128,"only":["du_from_u0"]}})");
  CHECK(c.rates.alphas == std::vector<double>{1.5});
  CHECK(c.rates.options.N == 128);
  CHECK(c.rates.only == std::vector<std::string>{"du_from_u0"});
  c = parse_run_config(R"({"schema_version":1,"kind":"kernel-ineq",
    "kernel_ineq":{"cases":[{"kind":"scaled","alpha":1.5,"alpha_prime":1,"b":0,"g":0,
      "lam":[0.001,1000,10],"t":[0.0001,1,10]}]}})");
  REQUIRE(c.kernel_ineq.size() == 1);
  CHECK(c.kernel_ineq[0].lams.size() == 10);
}

TEST_CASE("invalid documents name the field", "[config][errors]") {
  const json base = json::parse(R"({"schema_version":1,"kind":"linear","alpha":1.5,
    "operator":{"builtin":"dirichlet","modes":2},"time":{"T":1,"N":16}})");
  auto with = [&](const std::function<void(json&)>& edit) {
    json d = base;
    edit(d);
    return validation_message(d.dump());
  };
  CHECK_NOTHROW(parse_run_config(base.dump()));
  CHECK(validation_message("not json").find("JSON") != std::string::npos);
  CHECK(with([](json& d) { d.erase("schema_version"); }).find("schema_version") !=
        std::string::npos);
  CHECK(with([](json& d) { d["schema_version"] = 2; }).find("schema_version") !=
        std::string::npos);
  CHECK(with([](json& d) { d["alpah"] = 1.5; }).find("alpah") != std::string::npos);
  CHECK(with([](json& d) { d["kind"] = "nope"; }).find("kind") != std::string::npos);
  CHECK(with([](json& d) { d["alpha"] = "x"; }).find("alpha") != std::string::npos);
  CHECK(with([](json& d) { d["alpha"] = 2.5; }).find("alpha") != std::string::npos);
  CHECK(with([](json& d) { d["u0"] = {1, 2, 3}; }).find("u0") != std::string::npos);
  CHECK(with([](json& d) { d["time"]["grading"] = "steep"; }).find("time.grading") !=
        std::string::npos);
  CHECK(with([](json& d) { d["operator"]["modes"] = 0; }).find("operator.modes") !=
        std::string::npos);
  CHECK(with([](json& d) {
          d["kind"] = "residual";
          d["residual"] = {{"h", 0.3}};
        }).find("residual.h") != std::string::npos);
}
