#pragma once

#include <functional>
#include <span>
#include <vector>

#include "mastereq/dense.hpp"
#include "mastereq/linalg.hpp"

namespace mastereq {

/// y = Omega x, with `y` sized by the caller.
using LinearOperator = std::function<void(std::span<const double> x, std::span<double> y)>;

/// Norm applied to the next basis vector v_{s+1} when sizing the residual.
using ResidualMeasure = std::function<double(std::span<const double> v)>;

LinearOperator as_operator(const SparseMatrix& m);

/// Arnoldi factorisation Omega V_s = V_s H_s + h_{s+1,s} v_{s+1} e_s^T.
class KrylovDecomposition {
 public:
  KrylovDecomposition(std::span<const double> start, Index max_dim);

  Index dimension() const { return dim_; }
  Index max_dimension() const { return max_dim_; }
  double beta() const { return beta_; }
  bool breakdown() const { return breakdown_; }

  const Vector& basis(Index i) const { return basis_[static_cast<std::size_t>(i)]; }
  /// v_{s+1}; zero after a happy breakdown.
  const Vector& next() const { return basis_[static_cast<std::size_t>(dim_)]; }
  double subdiagonal() const;
  /// Leading s x s block of the Hessenberg matrix.
  DenseMatrix hessenberg() const { return h_.block(dim_, dim_); }

  /// V_s y.
  Vector combine(std::span<const double> y) const;

 private:
  friend void arnoldi_step(const LinearOperator& omega, KrylovDecomposition& decomp);

  Index max_dim_;
  Index dim_ = 0;
  double beta_ = 0.0;
  bool breakdown_ = false;
  std::vector<Vector> basis_;
  DenseMatrix h_;
};

/// Extends the factorisation by one vector using modified Gram-Schmidt with
/// one reorthogonalisation pass. Sets the breakdown flag when the new
/// direction vanishes relative to |Omega v_s|.
void arnoldi_step(const LinearOperator& omega, KrylovDecomposition& decomp);

/// beta * h_{s+1,s} * [exp(H_s)]_{s,1} * v_{s+1}.
Vector generalized_residual(const KrylovDecomposition& decomp);

struct KrylovOptions {
  Index max_dim = 40;
  /// When positive, use exactly this many vectors (or fewer on breakdown)
  /// and skip the residual test.
  Index fixed_dim = 0;
  /// Measure for v_{s+1}; defaults to the l1 norm.
  ResidualMeasure measure;
};

struct KrylovResult {
  Vector value;
  Vector residual;
  /// beta * h * |[exp(H)]_{s,1}| * measure(v_{s+1})
  double residual_norm = 0.0;
  double residual_l1 = 0.0;
  Index dimension = 0;
  bool breakdown = false;
  bool converged = false;
  Index matvecs = 0;
};

/// Approximates exp(Omega) p, growing the subspace until the measured
/// generalised residual drops to `target`. Failing to reach the target
/// within max_dim is reported through `converged`, not thrown.
KrylovResult expm_apply(const LinearOperator& omega, std::span<const double> p, double target,
                        const KrylovOptions& options = {});

}  // namespace mastereq
