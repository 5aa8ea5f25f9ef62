#include "mastereq/magnus.hpp"

#include <array>
#include <cmath>
#include <random>

namespace mastereq {

namespace {

struct GaussRule {
  std::array<double, 5> nodes;
  std::array<double, 5> weights;
};

const GaussRule& gauss_rule(int n) {
  static const std::array<GaussRule, 5> rules = {{
      {{0.0}, {2.0}},
      {{-0.5773502691896257645, 0.5773502691896257645}, {1.0, 1.0}},
      {{-0.7745966692414833770, 0.0, 0.7745966692414833770},
       {0.5555555555555555556, 0.8888888888888888889, 0.5555555555555555556}},
      {{-0.8611363115940525752, -0.3399810435848562648, 0.3399810435848562648,
        0.8611363115940525752},
       {0.3478548451374538574, 0.6521451548625461426, 0.6521451548625461426,
        0.3478548451374538574}},
      {{-0.9061798459386639928, -0.5384693101056830910, 0.0, 0.5384693101056830910,
        0.9061798459386639928},
       {0.2369268850561890875, 0.4786286704993664680, 0.5688888888888888889,
        0.4786286704993664680, 0.2369268850561890875}},
  }};
  if (n < 1 || n > 5) throw ModelError("quadrature order must be between 1 and 5");
  return rules[static_cast<std::size_t>(n - 1)];
}

}  // namespace

std::size_t CommutatorCache::pair_index(std::size_t l1, std::size_t l2, std::size_t r) {
  // row-major over the strict upper triangle
  return l1 * r - l1 * (l1 + 1) / 2 + (l2 - l1 - 1);
}

CommutatorCache precompute_commutators(const PropensityModel& model) {
  CommutatorCache cache;
  const auto& a = model.varying_parts();
  for (const auto& al : a) cache.with_constant.push_back(commutator(al, model.constant_part()));
  for (std::size_t l1 = 0; l1 < a.size(); ++l1)
    for (std::size_t l2 = l1 + 1; l2 < a.size(); ++l2)
      cache.pairs.push_back(commutator(a[l1], a[l2]));
  return cache;
}

ScalarIntegrals scalar_integrals(const PropensityModel& model, double t, double dt,
                                 int quadrature_points) {
  if (!(dt > 0.0)) throw ModelError("scalar integrals need a positive step");
  const auto& factors = model.factors();
  ScalarIntegrals out{Vector(factors.size()), Vector(factors.size())};
  const GaussRule& rule = gauss_rule(quadrature_points);
  const double centre = t + 0.5 * dt;
  for (std::size_t l = 0; l < factors.size(); ++l) {
    if (auto m = factors[l].closed_form_moments(t, dt)) {
      out.g[l] = m->mean;
      out.h[l] = m->first_moment;
      continue;
    }
    double g = 0.0, h = 0.0;
    for (int i = 0; i < quadrature_points; ++i) {
      const double x = rule.nodes[static_cast<std::size_t>(i)];
      const double w = rule.weights[static_cast<std::size_t>(i)];
      const double f = factors[l](centre + 0.5 * dt * x);
      g += 0.5 * w * f;
      h += 0.25 * w * x * f;
    }
    out.g[l] = g;
    out.h[l] = h;
  }
  return out;
}

MagnusTerms build_theta(const PropensityModel& model, const CommutatorCache& cache, double t,
                        double dt, int order, int quadrature_points) {
  if (order != 2 && order != 4) throw ModelError("Magnus order must be 2 or 4");
  const std::size_t r = model.num_varying();
  if (cache.with_constant.size() != r || cache.pairs.size() != (r > 0 ? r * (r - 1) / 2 : 0))
    throw DimensionError("commutator cache does not match the model");

  MagnusTerms terms;
  terms.order = order;
  terms.t = t;
  terms.dt = dt;
  terms.coefficients = scalar_integrals(model, t, dt, quadrature_points);
  const Vector& g = terms.coefficients.g;
  const Vector& h = terms.coefficients.h;

  std::vector<ScaledMatrix> t2{{dt, &model.constant_part()}};
  for (std::size_t l = 0; l < r; ++l) t2.push_back({dt * g[l], &model.varying_parts()[l]});
  terms.theta2 = linear_combination(t2);

  const double dt2 = dt * dt;
  std::vector<ScaledMatrix> t4;
  for (std::size_t l = 0; l < r; ++l) t4.push_back({dt2 * h[l], &cache.with_constant[l]});
  for (std::size_t l1 = 0; l1 < r; ++l1)
    for (std::size_t l2 = l1 + 1; l2 < r; ++l2)
      t4.push_back({dt2 * (g[l2] * h[l1] - g[l1] * h[l2]),
                    &cache.pairs[CommutatorCache::pair_index(l1, l2, r)]});
  terms.theta4 = t4.empty() ? SparseMatrix(model.size(), model.size()) : linear_combination(t4);

  terms.omega = order == 4 && !t4.empty() ? terms.theta2 + terms.theta4 : terms.theta2;
  return terms;
}

Vector magnus_residual(const MagnusTerms& terms, std::span<const double> p) {
  return spmv(terms.theta4, p);
}

Vector step_doubling_defect(std::span<const double> full, std::span<const double> two_half) {
  if (full.size() != two_half.size()) throw DimensionError("step doubling: size mismatch");
  Vector d(full.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = (two_half[i] - full[i]) * (16.0 / 15.0);
  return d;
}

double moan_niesen_value(const SparseMatrix& m, int iterations) {
  const auto n = static_cast<std::size_t>(m.cols());
  if (n == 0 || m.nnz() == 0) return 0.0;
  // Deterministic start; the all-ones vector lies in the null space of
  // M^T for generators.
  std::mt19937_64 rng(0x5eed);
  std::uniform_real_distribution<double> dist(0.5, 1.5);
  Vector x(n), y(static_cast<std::size_t>(m.rows())), z(n);
  for (double& v : x) v = dist(rng);
  double lambda = 0.0;
  for (int k = 0; k < iterations; ++k) {
    double nx = norm2(x);
    if (nx == 0.0) return 0.0;
    for (double& v : x) v /= nx;
    m.multiply(x, y);
    m.multiply_transpose(y, z);
    lambda = dot(x, z);
    x.swap(z);
  }
  return std::sqrt(std::max(lambda, 0.0));
}

double moan_niesen_value(const PropensityModel& model, double t, double dt) {
  auto g = scalar_integrals(model, t, dt);
  std::vector<ScaledMatrix> terms{{dt, &model.constant_part()}};
  for (std::size_t l = 0; l < model.num_varying(); ++l)
    terms.push_back({dt * g.g[l], &model.varying_parts()[l]});
  return moan_niesen_value(linear_combination(terms));
}

}  // namespace mastereq
