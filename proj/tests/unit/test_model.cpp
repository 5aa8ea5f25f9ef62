#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "helpers.hpp"
#include "mastereq/model.hpp"
#include "mastereq/problems.hpp"

using namespace mastereq;

namespace {

ReactionNetwork isomerization_network() {
  ReactionNetwork net;
  net.species = {"X", "Y"};
  net.channels = {
      {"X->Y", {-1, 1}, {RateLaw::Kind::Linear, 1.0, 0}, TimeFactor::constant()},
      {"Y->X", {1, -1}, {RateLaw::Kind::Linear, 1.0, 1}, TimeFactor::constant()},
  };
  return net;
}

Lattice conserved(int n) { return {{0, 0}, {n, n}, std::vector<int>{1, 1}, n}; }

double max_abs_colsum(const SparseMatrix& m) {
  double worst = 0.0;
  for (double s : m.column_sums()) worst = std::max(worst, std::abs(s));
  return worst;
}

}  // namespace

TEST_SUITE("model") {
  TEST_CASE("time functions") {
    auto s = TimeFunction::sine();
    CHECK(s(0.0) == 0.0);
    CHECK(s(std::numbers::pi / 2) == doctest::Approx(1.0));
    auto h = TimeFunction::by_name("hill");
    CHECK(h(0.0) == 1.0);
    CHECK(h(15.0) == doctest::Approx(0.5));
    CHECK_FALSE(h.antiderivative(1.0).has_value());
    CHECK_THROWS_AS(TimeFunction::by_name("cosh"), ModelError);

    TimeFactor shifted{1.0, -1.0, s};
    CHECK(shifted(std::numbers::pi / 2) == doctest::Approx(0.0));
    CHECK(TimeFactor::constant(2.5)(7.0) == 2.5);
  }

  TEST_CASE("antiderivative differentiates back") {
    auto f = TimeFunction::sinusoid(2.0, 0.3);
    const double eps = 1e-5;
    for (double t : {0.0, 0.7, 3.1, 9.9}) {
      double d = (*f.antiderivative(t + eps) - *f.antiderivative(t - eps)) / (2 * eps);
      CHECK(std::abs(d - f(t)) < 1e-8);
    }
  }

  TEST_CASE("reflected functions") {
    auto f = TimeFunction::sine();
    auto r = f.reflected(10.0);
    for (double s : {0.0, 1.5, 10.0}) CHECK(r(s) == doctest::Approx(f(10.0 - s)));
    auto h = TimeFunction::hill(15.0, 5.0).reflected(30.0);
    CHECK(h(30.0) == doctest::Approx(1.0));
    CHECK(h(15.0) == doctest::Approx(0.5));
  }

  TEST_CASE("enumerate isomerization gives N+1 states") {
    auto space = enumerate_states(isomerization_network(), {{2000, 0}}, conserved(2000));
    CHECK(space.size() == 2001);
    CHECK(space.state(0)[0] == 0);
    CHECK(space.state(2000)[0] == 2000);
    CHECK(*space.find(std::vector<int>{1150, 850}) == 1150);
  }

  TEST_CASE("single state without channels") {
    ReactionNetwork net;
    net.species = {"A"};
    Lattice box{{0}, {5}, std::nullopt, 0};
    auto space = enumerate_states(net, {{3}}, box);
    REQUIRE(space.size() == 1);
    CHECK(space.state(0)[0] == 3);
  }

  TEST_CASE("tcell grid has 900 states") {
    Lattice box{{0, 0}, {29, 29}, std::nullopt, 0};
    auto space = enumerate_states(tcell_network({}), {{10, 10}}, box);
    CHECK(space.size() == 900);
  }

  TEST_CASE("enumeration cap names the cap") {
    Lattice box{{0, 0}, {29, 29}, std::nullopt, 0};
    try {
      enumerate_states(tcell_network({}), {{10, 10}}, box, 100);
      FAIL("expected a ModelError");
    } catch (const ModelError& e) {
      CHECK(std::string(e.what()).find("100") != std::string::npos);
    }
  }

  TEST_CASE("initial state outside bounds") {
    Lattice box{{0, 0}, {3, 3}, std::nullopt, 0};
    CHECK_THROWS_AS(enumerate_states(isomerization_network(), {{4, 0}}, box), ModelError);
  }

  TEST_CASE("enumeration is deterministic") {
    Lattice box{{0, 0}, {20, 20}, std::nullopt, 0};
    auto a = enumerate_states(tcell_network({}), {{10, 10}}, box);
    auto b = enumerate_states(tcell_network({}), {{10, 10}}, box);
    CHECK(a == b);
  }

  TEST_CASE("isomerization generator entries") {
    const int n = 3;
    auto space = std::make_shared<const StateSpace>(
        enumerate_states(isomerization_network(), {{n, 0}}, conserved(n)));
    auto model = assemble(isomerization_network(), space);
    CHECK_FALSE(model.time_dependent());
    const auto& a = model.constant_part();
    for (int k = 0; k <= n; ++k) {
      CHECK(a.coeff(k, k) == -n);
      if (k > 0) CHECK(a.coeff(k - 1, k) == k);
      if (k < n) CHECK(a.coeff(k + 1, k) == n - k);
    }
    CHECK(max_abs_colsum(a) == 0.0);
  }

  TEST_CASE("jump leaving a one-state space keeps only the diagonal") {
    ReactionNetwork net;
    net.species = {"A"};
    net.channels = {{"decay", {-1}, {RateLaw::Kind::Linear, 2.0, 0}, TimeFactor::constant()}};
    auto space = std::make_shared<const StateSpace>(1, std::vector<std::vector<int>>{{4}});
    auto model = assemble(net, space);
    CHECK(model.size() == 1);
    CHECK(model.constant_part().coeff(0, 0) == -8.0);
  }

  TEST_CASE("two-state evaluation") {
    auto p = two_state(1.0);
    auto a0 = p.model.evaluate_at(0.0);
    CHECK(a0.coeff(0, 0) == -1.0);
    CHECK(a0.coeff(0, 1) == 1.0);
    CHECK(a0.coeff(1, 0) == 1.0);
    CHECK(a0.coeff(1, 1) == -1.0);
    auto a1 = p.model.evaluate_at(std::numbers::pi / 2);
    CHECK(a1.coeff(0, 0) == doctest::Approx(-2.0));
    CHECK(a1.coeff(1, 0) == doctest::Approx(2.0));
    CHECK(std::abs(a1.coeff(0, 1)) < 1e-15);
    CHECK(std::abs(a1.coeff(1, 1)) < 1e-15);
  }

  TEST_CASE("constant model evaluates to A_c") {
    auto p = isomerization({20, 0.7, false, std::nullopt});
    auto a = p.model.evaluate_at(3.3);
    CHECK(testing::max_abs_diff(a.to_dense(), p.model.constant_part().to_dense()) == 0.0);
  }

  TEST_CASE("negative propensity is rejected") {
    ReactionNetwork net;
    net.species = {"A"};
    net.channels = {{"bad", {1}, {RateLaw::Kind::Constant, -1.0}, TimeFactor::constant()}};
    auto space = std::make_shared<const StateSpace>(1, std::vector<std::vector<int>>{{0}});
    try {
      assemble(net, space);
      FAIL("expected a ModelError");
    } catch (const ModelError& e) {
      CHECK(std::string(e.what()).find("bad") != std::string::npos);
    }
  }

  TEST_CASE("full space column sums vanish and off-diagonals are nonnegative") {
    auto p = isomerization({200, 0.7, true, std::nullopt});
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> time(0.0, 10.0);
    for (int i = 0; i < 20; ++i) {
      auto a = p.model.evaluate_at(time(rng));
      CHECK(max_abs_colsum(a) <= 1e-12 * a.max_abs());
      for (Index j = 0; j < a.cols(); ++j)
        for (Index k = a.col_ptr()[j]; k < a.col_ptr()[j + 1]; ++k)
          if (a.row_idx()[k] != j) CHECK(a.values()[k] >= -1e-12);
    }
  }

  TEST_CASE("truncated column sums are nonpositive") {
    auto p = tcell({});
    for (double t : {0.0, 5.0, 14.0, 29.0}) {
      for (double s : p.model.column_sums_at(t)) CHECK(s <= 1e-12);
    }
    auto a = p.model.evaluate_at(7.0);
    auto direct = a.column_sums();
    auto fast = p.model.column_sums_at(7.0);
    CHECK(testing::max_abs_diff(direct, fast) < 1e-12);
  }

  TEST_CASE("tcell propensities") {
    auto net = tcell_network({});
    const std::vector<int> x{10, 10};
    CHECK(net.channels[2].rate(x) * net.channels[2].factor(0.0) == doctest::Approx(15.29703).epsilon(1e-6));
    const std::vector<int> y{3, 5};
    CHECK(net.channels[0].rate(y) == 3.0);
    CHECK(net.channels[1].rate(y) == 5.0);
    CHECK(net.channels[3].rate(y) == doctest::Approx(30.0 * 5 * (1.0 / 8 + 1.0 / 1005)));

    TcellOptions literal;
    literal.literal_primed_rate = true;
    auto lit = tcell_network(literal);
    CHECK(lit.channels[3].rate(y) == doctest::Approx(30.0 * 3 * (1.0 / 8 + 1.0 / 1005)));
  }

  TEST_CASE("adjoint model is the reversed transpose") {
    auto p = two_state(0.3);
    auto b = p.model.adjoint_reversed(10.0);
    for (double s : {0.0, 2.0, 7.5}) {
      auto lhs = b.evaluate_at(s).to_dense();
      auto rhs = p.model.evaluate_at(10.0 - s).transpose().to_dense();
      CHECK(testing::max_abs_diff(lhs, rhs) < 1e-14);
    }
  }
}
