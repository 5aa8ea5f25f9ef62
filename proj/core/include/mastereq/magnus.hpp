#pragma once

#include <span>
#include <vector>

#include "mastereq/linalg.hpp"
#include "mastereq/model.hpp"

namespace mastereq {

/// [A_l, A_c] for every varying term and [A_l1, A_l2] for every pair l1 < l2.
struct CommutatorCache {
  std::vector<SparseMatrix> with_constant;
  std::vector<SparseMatrix> pairs;

  std::size_t size() const { return with_constant.size() + pairs.size(); }
  /// Position of [A_l1, A_l2] in `pairs` for l1 < l2 < r.
  static std::size_t pair_index(std::size_t l1, std::size_t l2, std::size_t r);
};

CommutatorCache precompute_commutators(const PropensityModel& model);

struct ScalarIntegrals {
  Vector g;  ///< (1/dt) int_0^dt f_l(t + tau) dtau
  Vector h;  ///< (1/dt^2) int_{-dt/2}^{dt/2} tau f_l(t + dt/2 + tau) dtau
};

/// Gauss-Legendre with `quadrature_points` nodes (1..5) unless the time
/// function has closed-form moments.
ScalarIntegrals scalar_integrals(const PropensityModel& model, double t, double dt,
                                 int quadrature_points = 2);

struct MagnusTerms {
  int order = 2;
  double t = 0.0;
  double dt = 0.0;
  ScalarIntegrals coefficients;
  SparseMatrix theta2;
  /// Zero matrix for constant models.
  SparseMatrix theta4;
  /// theta2 for order 2, theta2 + theta4 for order 4.
  SparseMatrix omega;
};

MagnusTerms build_theta(const PropensityModel& model, const CommutatorCache& cache, double t,
                        double dt, int order, int quadrature_points = 2);

/// theta4 p, the leading omitted term of the second order scheme.
Vector magnus_residual(const MagnusTerms& terms, std::span<const double> p);

/// Local error estimate for the fourth order scheme from one full step and
/// two half steps: (two_half - full) * 16/15.
Vector step_doubling_defect(std::span<const double> full, std::span<const double> two_half);

/// Power-iteration estimate of |theta2|_2 (30 iterations on M^T M).
double moan_niesen_value(const SparseMatrix& theta2, int iterations = 30);
double moan_niesen_value(const PropensityModel& model, double t, double dt);

}  // namespace mastereq
