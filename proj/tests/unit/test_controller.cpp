#include <doctest.h>

#include <cmath>

#include "mastereq/controller.hpp"
#include "mastereq/problems.hpp"

using namespace mastereq;

namespace {

ControllerConfig config_for(const BenchmarkProblem& p, double tol, int order) {
  ControllerConfig cfg;
  cfg.tol = tol;
  cfg.t_final = p.t_final;
  cfg.order = order;
  return cfg;
}

double accepted_time(const RunResult& r) {
  double sum = 0.0;
  for (const auto& rec : r.records)
    if (!rec.rejected) sum += rec.dt;
  return sum;
}

}  // namespace

TEST_SUITE("controller") {
  TEST_CASE("step proposal") {
    ControllerConfig cfg;
    cfg.t_final = 10.0;
    CHECK(propose_dt_magnus(0.1, 0.0, 1e-3, 10.0, 2, cfg) == doctest::Approx(0.2));
    // residual exactly on budget: only the safety factor remains
    CHECK(propose_dt_magnus(0.1, 0.1 * 1e-4, 1e-3, 10.0, 2, cfg) == doctest::Approx(0.09));
    CHECK(propose_dt_magnus(0.1, 1.0, 1e-3, 10.0, 2, cfg) == doctest::Approx(0.025));
    CHECK(propose_dt_magnus(0.1, 1e-30, 1e-3, 10.0, 4, cfg) == doctest::Approx(0.2));
    // four times below budget at order 2 doubles the step before safety
    CHECK(propose_dt_magnus(0.1, 0.25e-5, 1e-3, 10.0, 2, cfg) == doctest::Approx(0.18));
    cfg.dt_max = 0.15;
    CHECK(propose_dt_magnus(0.1, 0.0, 1e-3, 10.0, 2, cfg) == doctest::Approx(0.15));
  }

  TEST_CASE("Arnoldi cap") {
    CHECK(cap_dt_arnoldi(1.0, 10, 40, 0.1) == doctest::Approx(0.4));
    CHECK(cap_dt_arnoldi(0.2, 10, 40, 0.1) == 0.2);
    CHECK(cap_dt_arnoldi(1.0, 40, 40, 0.1) == doctest::Approx(0.1));
    CHECK_THROWS_AS(cap_dt_arnoldi(1.0, 0, 40, 0.1), DimensionError);
    CHECK_THROWS_AS(cap_dt_arnoldi(1.0, 41, 40, 0.1), DimensionError);
  }

  TEST_CASE("configuration validation") {
    ControllerConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.order = 3;
    CHECK_THROWS_AS(cfg.validate(), ModelError);
    cfg = {};
    cfg.tol = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ModelError);
    cfg = {};
    cfg.dt_min = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ModelError);
    cfg = {};
    cfg.s_max = 1;
    CHECK_THROWS_AS(cfg.validate(), ModelError);
    cfg = {};
    cfg.fixed_dt = 2.0;
    CHECK_THROWS_AS(cfg.validate(), ModelError);
    cfg = {};
    CHECK(cfg.effective_eps_dual() == doctest::Approx(1e-2));
    CHECK(cfg.effective_dt_max() == cfg.t_final);
  }

  TEST_CASE("fixed steps with a loose tolerance") {
    auto two = two_state(1.0);
    auto cfg = config_for(two, 1.0, 4);
    cfg.fixed_dt = 0.1;
    cfg.dt_initial = 0.1;
    auto r = run(two.system(), cfg);
    CHECK(r.accepted_steps == 100);
    CHECK(r.rejected_steps == 0);
    CHECK(accepted_time(r) == doctest::Approx(10.0).epsilon(1e-12));
    auto exact = two.analytic(10.0);
    CHECK(std::abs(exact[0] - r.solution[0]) < 1e-3);
  }

  TEST_CASE("adaptive run covers the interval") {
    auto two = two_state(1.0);
    for (int order : {2, 4}) {
      auto r = run(two.system(), config_for(two, 1e-4, order));
      CHECK(accepted_time(r) == doctest::Approx(two.t_final).epsilon(1e-12));
      CHECK(static_cast<Index>(r.records.size()) == r.accepted_steps + r.rejected_steps);
      auto exact = two.analytic(two.t_final);
      CHECK(std::abs(exact[0] - r.solution[0]) <= 1e-4);
      CHECK(accurate_sum(r.solution) == doctest::Approx(1.0).epsilon(1e-6));
      for (double x : r.solution) CHECK(x >= -1e-6);
    }
  }

  TEST_CASE("runs are deterministic") {
    auto iso = isomerization({100, 0.3, true, std::nullopt});
    auto cfg = config_for(iso, 1e-5, 4);
    auto a = run(iso.system(), cfg);
    auto b = run(iso.system(), cfg);
    CHECK(a.solution == b.solution);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
      CHECK(a.records[i].dt == b.records[i].dt);
      CHECK(a.records[i].krylov_dim == b.records[i].krylov_dim);
    }
  }

  TEST_CASE("constant models skip the Magnus residual") {
    auto iso = isomerization({100, 0.3, false, std::nullopt});
    auto r = run(iso.system(), config_for(iso, 1e-6, 4));
    for (const auto& rec : r.records) CHECK(rec.magnus_res_l1 == 0.0);
    auto exact = iso.analytic(iso.t_final);
    double err = 0.0;
    for (std::size_t i = 0; i < exact.size(); ++i)
      err = std::max(err, std::abs(exact[i] - r.solution[i]));
    CHECK(err <= 1e-6);
  }

  TEST_CASE("accepted steps respect their budgets") {
    auto two = two_state(1.0);
    auto cfg = config_for(two, 1e-3, 2);
    auto r = run(two.system(), cfg);
    const double rate = cfg.tol / cfg.t_final;
    for (const auto& rec : r.records) {
      if (rec.rejected) continue;
      CHECK(rec.rho_a_l1 <= rate * rec.dt * (1 + 1e-9));
      CHECK(rec.magnus_res_l1 <= cfg.magnus_reject_factor * rate * rec.dt * (1 + 1e-9));
    }
  }

  TEST_CASE("Krylov dimension and step growth are capped") {
    auto iso = isomerization({400, 0.3, true, std::nullopt});
    auto cfg = config_for(iso, 1e-6, 4);
    cfg.s_max = 10;
    auto r = run(iso.system(), cfg);
    const StepRecord* prev = nullptr;
    bool limited = false;
    for (const auto& rec : r.records) {
      CHECK(rec.krylov_dim <= cfg.s_max);
      if (rec.rejected) continue;
      if (prev && rec.t + rec.dt < cfg.t_final - 1e-12) {
        CHECK(rec.dt <= prev->dt * static_cast<double>(cfg.s_max) / prev->krylov_dim * (1 + 1e-12));
      }
      if (rec.krylov_dim == cfg.s_max) limited = true;
      prev = &rec;
    }
    CHECK(limited);
  }

  TEST_CASE("step size underflow aborts") {
    auto iso = isomerization({50, 0.3, true, std::nullopt});
    auto cfg = config_for(iso, 1e-14, 4);
    cfg.s_max = 4;
    cfg.dt_initial = 0.5;
    cfg.dt_min = 0.4;
    CHECK_THROWS_AS(run(iso.system(), cfg), SolverAbort);
  }

  TEST_CASE("initial vector checks") {
    auto two = two_state(1.0);
    auto cfg = config_for(two, 1e-3, 2);
    System bad{two.model, std::nullopt, {0.7, 0.7}};
    CHECK_THROWS_AS(run(bad, cfg), ModelError);
    System wrong{two.model, std::nullopt, {1.0}};
    CHECK_THROWS_AS(run(wrong, cfg), DimensionError);
    cfg.estimate = EstimateMode::E2;
    CHECK_THROWS_AS(run(two.system(), cfg), ModelError);
  }

  TEST_CASE("projected run grows the state space") {
    TcellOptions o;
    o.t_final = 5.0;
    auto tc = tcell(o);
    auto cfg = config_for(tc, 1e-4, 4);
    auto r = run(tc.system(), cfg);
    CHECK(r.max_space_size > tc.model.size());
    CHECK(accurate_sum(r.solution) <= 1.0 + 1e-8);
    CHECK(r.ledger.e3() <= 2.0 * cfg.tol);
  }
}
