#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <numbers>
#include <sstream>

#include "mastereq_cli/commands.hpp"
#include "mastereq_cli/config.hpp"
#include "mastereq_cli/csv.hpp"

using namespace mastereq;
using namespace mastereq::cli;

namespace {

std::filesystem::path tmp_dir() {
  std::filesystem::path dir = MASTEREQ_TEST_TMP;
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("settings from YAML") {
    auto s = parse_settings(R"(
problem:
  name: isomerization
  molecules: 40
controller:
  tol: 1.0e-5
  order: 2
  t_final: 3
estimate:
  mode: dual-norm
  component: 7
  eps_dual: 1.0e-4
output:
  csv: out.csv
)");
    finalize(s);
    CHECK(s.problem == "isomerization");
    CHECK(s.parameters.molecules == 40);
    CHECK(s.controller.tol == 1e-5);
    CHECK(s.controller.order == 2);
    CHECK(s.controller.t_final == 3.0);
    CHECK(*s.parameters.t_final == 3.0);
    CHECK(s.estimate.mode == EstimateMode::E2);
    CHECK(*s.estimate.component == 7);
    CHECK(s.output.csv == "out.csv");
    auto j = to_json(s);
    CHECK(j["problem"]["name"] == "isomerization");
    CHECK(j["controller"]["tol"] == 1e-5);
  }

  TEST_CASE("t_final defaults follow the problem") {
    auto s = parse_settings("problem: {name: tcell}\n");
    finalize(s);
    CHECK(s.controller.t_final == 30.0);
    auto t = parse_settings("{}");
    finalize(t);
    CHECK(t.controller.t_final == 10.0);
  }

  TEST_CASE("bad settings") {
    CHECK_THROWS_AS(parse_settings("controller: {tolerance: 1}\n"), ConfigError);
    CHECK_THROWS_AS(parse_settings("extra: 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_settings("controller: {tol: abc}\n"), ConfigError);
    CHECK_THROWS_AS(parse_settings("controller: [1, 2\n"), ConfigError);
    auto s = parse_settings("problem: {name: nothing}\n");
    CHECK_THROWS_AS(finalize(s), ConfigError);
    auto c = parse_settings("controller: {order: 3}\n");
    CHECK_THROWS_AS(finalize(c), ConfigError);
    auto custom = parse_settings("problem: {name: custom}\n");
    CHECK_THROWS_AS(finalize(custom), ConfigError);
    CHECK_THROWS_AS(load_settings(tmp_dir() / "missing.yaml"), ConfigError);
  }

  TEST_CASE("estimate names") {
    CHECK(parse_estimate("primal-only") == EstimateMode::E3);
    CHECK(parse_estimate("E3") == EstimateMode::E3);
    CHECK(parse_estimate("dual-norm") == EstimateMode::E2);
    CHECK(parse_estimate("e2") == EstimateMode::E2);
    CHECK(parse_estimate("Dual") == EstimateMode::E1);
    CHECK_THROWS_AS(parse_estimate("both"), ConfigError);
    for (auto m : {EstimateMode::E1, EstimateMode::E2, EstimateMode::E3})
      CHECK(parse_estimate(estimate_name(m)) == m);
  }

  TEST_CASE("empty record list gives only the header") {
    std::ostringstream out;
    write_records(out, {});
    CHECK(out.str() == std::string(kRecordHeader) + "\r\n");
    std::istringstream in(out.str());
    CHECK(parse_records(in).empty());
  }

  TEST_CASE("records round trip") {
    StepRecord a;
    a.step = 3;
    a.t = 0.1;
    a.dt = 1.0 / 3.0;
    a.krylov_dim = 12;
    a.rho_a_l1 = 1e-300;
    a.magnus_res_l1 = 2.5e-7;
    a.outflow = 0.0;
    a.space_size = 900;
    a.moan_niesen = 3.14159;
    StepRecord b = a;
    b.rejected = true;
    b.t = std::nextafter(1.0, 2.0);
    const auto file = tmp_dir() / "records.csv";
    emit_csv({a, b}, file);
    auto back = read_csv(file);
    REQUIRE(back.size() == 2);
    CHECK(back[0].dt == a.dt);
    CHECK(back[0].rho_a_l1 == a.rho_a_l1);
    CHECK(back[0].krylov_dim == 12);
    CHECK_FALSE(back[0].rejected);
    CHECK(back[1].rejected);
    CHECK(back[1].t == b.t);
  }

  TEST_CASE("malformed CSV") {
    std::istringstream wrong_header("a,b\r\n");
    CHECK_THROWS_AS(parse_records(wrong_header), ConfigError);
    std::istringstream short_row(std::string(kRecordHeader) + "\r\n1,2,3\r\n");
    CHECK_THROWS_AS(parse_records(short_row), ConfigError);
    std::istringstream bad_number(std::string(kRecordHeader) + "\r\n0,x,1,1,0,0,0,1,0,0\r\n");
    CHECK_THROWS_AS(parse_records(bad_number), ConfigError);
  }

  TEST_CASE("field quoting") {
    CHECK(quote_field("plain") == "plain");
    CHECK(quote_field("a,b") == "\"a,b\"");
    CHECK(quote_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
    auto f = split_line("x,\"a,b\",\"q\"\"q\"");
    REQUIRE(f.size() == 3);
    CHECK(f[1] == "a,b");
    CHECK(f[2] == "q\"q");
    CHECK(format_number(0.1) == "0.10000000000000001");
  }

  TEST_CASE("unwritable output") {
    CHECK_THROWS_AS(emit_csv({}, tmp_dir() / "no-such-dir" / "x.csv"), IoError);
    CHECK_THROWS_AS(write_json({}, tmp_dir() / "no-such-dir" / "x.json"), IoError);
  }

  TEST_CASE("Moan-Niesen diagnostic exceeds pi for N = 20") {
    auto s = parse_settings(R"(
problem: {name: isomerization, molecules: 20}
controller: {tol: 1.0e-3, t_final: 10, order: 4}
)");
    finalize(s);
    auto d = magnus_diagnostic(s);
    CHECK(d.steps_above_pi > 0);
    CHECK(d.max_value > std::numbers::pi);
    REQUIRE(d.run.linf_error);
    CHECK(*d.run.linf_error < 1e-3);
  }

  TEST_CASE("custom network") {
    auto s = parse_settings(R"(
problem: {name: custom}
controller: {tol: 1.0e-4, t_final: 2, order: 4}
network:
  species: [X]
  lower: [0]
  upper: [40]
  channels:
    - name: birth
      change: [1]
      rate: {kind: constant, coefficient: 5.0}
      factor: {offset: 1.0, scale: 0.5, function: sin}
    - name: death
      change: [-1]
      rate: {kind: linear, coefficient: 1.0, species: 0}
  initial:
    - {state: [0], probability: 1.0}
)");
    finalize(s);
    auto p = build_problem(s);
    CHECK(p.model.size() == 41);
    CHECK(p.model.time_dependent());
    auto r = solve(p, s);
    CHECK_FALSE(r.linf_error);
    CHECK(r.e3 <= 2e-4);
    CHECK(r.final_mass == doctest::Approx(1.0).epsilon(1e-3));

    auto load_bad = [] {
      auto bad = parse_settings(R"(
problem: {name: custom}
network:
  species: [X]
  lower: [0]
  upper: [4]
  channels:
    - {name: b, change: [1], rate: {kind: cubic}}
  initial:
    - {state: [0], probability: 1.0}
)");
      finalize(bad);
    };
    CHECK_THROWS_AS(load_bad(), ConfigError);
  }

  TEST_CASE("report JSON carries the estimates") {
    auto s = parse_settings("controller: {tol: 1.0e-3, order: 2}\n");
    finalize(s);
    auto r = solve(s);
    auto j = to_json(r);
    CHECK(j["estimate"] == estimate_name(EstimateMode::E3));
    CHECK(j["functional"].contains("E3_bound"));
    CHECK(j["steps"]["accepted"].get<Index>() == r.accepted_steps);
    REQUIRE(r.linf_error);
    CHECK(*r.linf_error <= 1e-3);
  }
}
