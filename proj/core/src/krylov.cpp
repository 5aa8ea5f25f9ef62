#include "mastereq/krylov.hpp"

#include <cmath>

namespace mastereq {

namespace {

void check_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) throw NumericalError("arnoldi: operator produced a non-finite value");
}

}  // namespace

LinearOperator as_operator(const SparseMatrix& m) {
  return [&m](std::span<const double> x, std::span<double> y) { m.multiply(x, y); };
}

KrylovDecomposition::KrylovDecomposition(std::span<const double> start, Index max_dim)
    : max_dim_(max_dim), h_(max_dim + 1, max_dim) {
  if (max_dim < 1) throw DimensionError("krylov: maximum dimension must be positive");
  beta_ = norm2(start);
  if (!(beta_ > 0.0)) throw NumericalError("krylov: start vector has zero norm");
  if (!std::isfinite(beta_)) throw NumericalError("krylov: start vector is not finite");
  Vector v(start.begin(), start.end());
  for (double& x : v) x /= beta_;
  basis_.push_back(std::move(v));
}

double KrylovDecomposition::subdiagonal() const {
  if (dim_ == 0) return 0.0;
  return h_(dim_, dim_ - 1);
}

Vector KrylovDecomposition::combine(std::span<const double> y) const {
  Vector out(basis_[0].size(), 0.0);
  for (Index j = 0; j < dim_; ++j) {
    const double c = y[static_cast<std::size_t>(j)];
    const Vector& v = basis_[static_cast<std::size_t>(j)];
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += c * v[i];
  }
  return out;
}

void arnoldi_step(const LinearOperator& omega, KrylovDecomposition& d) {
  if (d.breakdown_) throw NumericalError("arnoldi: extension after breakdown");
  if (d.dim_ >= d.max_dim_) throw DimensionError("arnoldi: maximum dimension reached");
  const Index j = d.dim_;
  const Vector& v = d.basis_[static_cast<std::size_t>(j)];
  Vector w(v.size(), 0.0);
  omega(v, w);
  check_finite(w);
  const double scale = norm2(w);

  for (int pass = 0; pass < 2; ++pass) {
    for (Index i = 0; i <= j; ++i) {
      const Vector& u = d.basis_[static_cast<std::size_t>(i)];
      double c = dot(u, w);
      d.h_(i, j) += c;
      for (std::size_t k = 0; k < w.size(); ++k) w[k] -= c * u[k];
    }
  }

  double h = norm2(w);
  d.dim_ = j + 1;
  if (h <= 1e-14 * scale || h == 0.0) {
    d.h_(j + 1, j) = 0.0;
    d.breakdown_ = true;
    d.basis_.emplace_back(v.size(), 0.0);
    return;
  }
  d.h_(j + 1, j) = h;
  for (double& x : w) x /= h;
  d.basis_.push_back(std::move(w));
}

Vector generalized_residual(const KrylovDecomposition& d) {
  Vector r(d.next().size(), 0.0);
  if (d.dimension() == 0 || d.breakdown()) return r;
  DenseMatrix e = dense_expm(d.hessenberg(), d.max_dimension());
  const double c = d.beta() * d.subdiagonal() * e(d.dimension() - 1, 0);
  const Vector& v = d.next();
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = c * v[i];
  return r;
}

KrylovResult expm_apply(const LinearOperator& omega, std::span<const double> p, double target,
                        const KrylovOptions& options) {
  const Index n = static_cast<Index>(p.size());
  Index limit = options.fixed_dim > 0 ? options.fixed_dim : options.max_dim;
  if (limit > n) limit = std::max<Index>(n, 1);
  KrylovDecomposition d(p, limit);
  auto measure = options.measure ? options.measure
                                 : ResidualMeasure([](std::span<const double> v) { return norm1(v); });

  KrylovResult result;
  DenseMatrix e;
  double coeff = 0.0;
  while (true) {
    arnoldi_step(omega, d);
    ++result.matvecs;
    const Index s = d.dimension();
    const bool last = d.breakdown() || s == limit;
    if (options.fixed_dim > 0 && !last) continue;
    e = dense_expm(d.hessenberg(), d.max_dimension());
    coeff = d.breakdown() ? 0.0 : d.beta() * d.subdiagonal() * std::abs(e(s - 1, 0));
    result.residual_norm = coeff == 0.0 ? 0.0 : coeff * measure(d.next());
    if (last || result.residual_norm <= target) break;
  }

  const Index s = d.dimension();
  Vector y(static_cast<std::size_t>(s));
  for (Index i = 0; i < s; ++i) y[static_cast<std::size_t>(i)] = d.beta() * e(i, 0);
  result.value = d.combine(y);
  result.dimension = s;
  result.breakdown = d.breakdown();
  result.converged = result.breakdown || result.residual_norm <= target;
  result.residual.assign(static_cast<std::size_t>(n), 0.0);
  if (!d.breakdown()) {
    const double c = d.beta() * d.subdiagonal() * e(s - 1, 0);
    const Vector& v = d.next();
    for (std::size_t i = 0; i < v.size(); ++i) result.residual[i] = c * v[i];
  }
  result.residual_l1 = norm1(result.residual);
  return result;
}

}  // namespace mastereq
