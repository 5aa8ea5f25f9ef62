#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "helpers.hpp"
#include "mastereq/dense.hpp"
#include "mastereq/krylov.hpp"
#include "mastereq/problems.hpp"

using namespace mastereq;
using testing::max_abs_diff;

namespace {

Vector exact_apply(const SparseMatrix& omega, const Vector& p) {
  return dense_expm(omega.to_dense(), omega.rows()).multiply(p);
}

Vector unit(Index n, Index k) {
  Vector v(static_cast<std::size_t>(n), 0.0);
  v[static_cast<std::size_t>(k)] = 1.0;
  return v;
}

double diff_l1(const Vector& a, const Vector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s;
}

}  // namespace

TEST_SUITE("krylov") {
  TEST_CASE("diagonal operator breaks down at once") {
    auto omega = SparseMatrix::from_triplets(3, 3, {{0, 0, -2.0}, {1, 1, 3.0}, {2, 2, 1.0}});
    KrylovDecomposition d(unit(3, 0), 3);
    arnoldi_step(as_operator(omega), d);
    CHECK(d.dimension() == 1);
    CHECK(d.breakdown());
    CHECK(d.hessenberg()(0, 0) == -2.0);
    CHECK(norm1(generalized_residual(d)) == 0.0);
  }

  TEST_CASE("nilpotent operator") {
    auto omega = SparseMatrix::from_triplets(2, 2, {{0, 1, 1.0}});
    KrylovDecomposition d(Vector{0.0, 1.0}, 2);
    arnoldi_step(as_operator(omega), d);
    CHECK_FALSE(d.breakdown());
    CHECK(d.basis(1) == Vector{1.0, 0.0});
    arnoldi_step(as_operator(omega), d);
    CHECK(d.dimension() == 2);
    auto h = d.hessenberg();
    CHECK(h(0, 0) == 0.0);
    CHECK(h(1, 0) == 1.0);
    CHECK(h(1, 1) == 0.0);
    CHECK(d.breakdown());
  }

  TEST_CASE("full dimension makes the residual vanish") {
    std::mt19937_64 rng(3);
    auto omega = testing::random_generator(6, 0.5, rng);
    auto p = testing::random_probability(6, rng);
    auto r = expm_apply(as_operator(omega), p, 0.0, {.max_dim = 6, .fixed_dim = 6});
    CHECK(r.dimension <= 6);
    CHECK(r.residual_l1 < 1e-12);
    CHECK(max_abs_diff(r.value, exact_apply(omega, p)) < 1e-12);
  }

  TEST_CASE("zero operator") {
    SparseMatrix zero(3, 3);
    Vector p{0.2, 0.3, 0.5};
    auto r = expm_apply(as_operator(zero), p, 1e-10);
    CHECK(r.dimension == 1);
    CHECK(r.breakdown);
    CHECK(r.residual_l1 == 0.0);
    CHECK(max_abs_diff(r.value, p) < 1e-15);
  }

  TEST_CASE("eigenvector is propagated in one step") {
    auto omega = SparseMatrix::from_triplets(2, 2, {{0, 0, -1}, {1, 0, 1}, {0, 1, 1}, {1, 1, -1}});
    Vector p{1.0, -1.0};  // eigenvalue -2
    auto r = expm_apply(as_operator(omega), p, 1e-12);
    CHECK(r.dimension == 1);
    CHECK(r.value[0] == doctest::Approx(std::exp(-2.0)));
    CHECK(r.value[1] == doctest::Approx(-std::exp(-2.0)));
  }

  TEST_CASE("two-state step matches the dense exponential") {
    auto p = two_state(1.0);
    auto omega = p.model.constant_part().scaled(0.1);
    auto r = expm_apply(as_operator(omega), p.initial, 1e-14);
    CHECK(r.dimension <= 2);
    CHECK(max_abs_diff(r.value, exact_apply(omega, p.initial)) < 1e-12);
  }

  TEST_CASE("Arnoldi relation and orthonormality") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 5; ++trial) {
      const Index n = 30 + 15 * trial;
      auto omega = testing::random_generator(n, 0.1, rng);
      auto p = testing::random_probability(n, rng);
      KrylovDecomposition d(p, 12);
      const auto op = as_operator(omega);
      while (d.dimension() < 12 && !d.breakdown()) {
        arnoldi_step(op, d);
        const Index s = d.dimension();
        for (Index i = 0; i < s; ++i)
          for (Index j = 0; j < s; ++j)
            CHECK(std::abs(dot(d.basis(i), d.basis(j)) - (i == j ? 1.0 : 0.0)) < 1e-10);
        auto h = d.hessenberg();
        const double scale = omega.norm1() * d.beta();
        for (Index j = 0; j < s; ++j) {
          Vector lhs = spmv(omega, d.basis(j));
          Vector rhs(lhs.size(), 0.0);
          for (Index i = 0; i < s; ++i)
            for (std::size_t k = 0; k < rhs.size(); ++k) rhs[k] += h(i, j) * d.basis(i)[k];
          if (j == s - 1)
            for (std::size_t k = 0; k < rhs.size(); ++k) rhs[k] += d.subdiagonal() * d.next()[k];
          CHECK(max_abs_diff(lhs, rhs) <= 1e-10 * scale);
        }
      }
    }
  }

  TEST_CASE("value norm equals beta times |exp(H) e1|") {
    std::mt19937_64 rng(23);
    auto omega = testing::random_generator(40, 0.1, rng).scaled(0.3);
    auto p = testing::random_probability(40, rng);
    KrylovDecomposition d(p, 8);
    for (int i = 0; i < 8; ++i) arnoldi_step(as_operator(omega), d);
    auto r = expm_apply(as_operator(omega), p, 0.0, {.max_dim = 8, .fixed_dim = 8});
    auto e = dense_expm(d.hessenberg()).column(0);
    CHECK(std::abs(norm2(r.value) - d.beta() * norm2(e)) < 1e-12);
  }

  TEST_CASE("residual tracks the true error") {
    std::mt19937_64 rng(29);
    for (int trial = 0; trial < 5; ++trial) {
      auto omega = testing::random_generator(50, 0.1, rng);
      omega = omega.scaled(2.0 / omega.norm1());
      auto p = testing::random_probability(50, rng);
      auto r = expm_apply(as_operator(omega), p, 0.0, {.max_dim = 5, .fixed_dim = 5});
      const double err = diff_l1(r.value, exact_apply(omega, p));
      CHECK(r.residual_l1 >= 0.1 * err);
      CHECK(r.residual_l1 <= 10.0 * err);
    }
  }

  TEST_CASE("mass defect is bounded by the residual") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 10; ++trial) {
      auto omega = testing::random_generator(60, 0.08, rng);
      omega = omega.scaled(3.0 / omega.norm1());
      auto p = testing::random_probability(60, rng);
      auto r = expm_apply(as_operator(omega), p, 1e-6);
      CHECK(std::abs(accurate_sum(r.value) - accurate_sum(p)) <= 10.0 * r.residual_l1 + 1e-14);
    }
  }

  TEST_CASE("error decreases with the dimension") {
    std::mt19937_64 rng(37);
    for (int trial = 0; trial < 5; ++trial) {
      auto omega = testing::random_generator(40, 0.15, rng);
      omega = omega.scaled(5.0 / omega.norm1());
      auto p = testing::random_probability(40, rng);
      auto exact = exact_apply(omega, p);
      double previous = std::numeric_limits<double>::infinity();
      for (Index s = 2; s <= 20; s += 2) {
        auto r = expm_apply(as_operator(omega), p, 0.0, {.max_dim = s, .fixed_dim = s});
        Vector d(exact.size());
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = exact[i] - r.value[i];
        const double err = norm2(d);
        CHECK(err <= previous * (1.0 + 1e-8) + 1e-15);
        previous = err;
      }
    }
  }

  TEST_CASE("unreachable target is reported, not thrown") {
    std::mt19937_64 rng(41);
    auto omega = testing::random_generator(50, 0.2, rng).scaled(5.0);
    auto p = testing::random_probability(50, rng);
    auto r = expm_apply(as_operator(omega), p, 1e-14, {.max_dim = 3});
    CHECK(r.dimension == 3);
    CHECK_FALSE(r.converged);
    CHECK(r.residual_norm > 1e-14);
  }

  TEST_CASE("non-finite operator output") {
    LinearOperator bad = [](std::span<const double>, std::span<double> y) {
      y[0] = std::numeric_limits<double>::quiet_NaN();
    };
    KrylovDecomposition d(Vector{1.0, 0.0}, 2);
    CHECK_THROWS_AS(arnoldi_step(bad, d), NumericalError);
    CHECK_THROWS_AS(KrylovDecomposition(Vector{0.0, 0.0}, 2), NumericalError);
  }
}
