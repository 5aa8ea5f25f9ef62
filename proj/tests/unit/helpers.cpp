#include "helpers.hpp"

#include <algorithm>
#include <cmath>

namespace testing {

SparseMatrix random_generator(Index n, double density, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<mastereq::Triplet> t;
  for (Index j = 0; j < n; ++j) {
    double out = 0.0;
    for (Index i = 0; i < n; ++i) {
      if (i == j || u(rng) > density) continue;
      const double r = u(rng);
      t.push_back({i, j, r});
      out += r;
    }
    t.push_back({j, j, -out});
  }
  return SparseMatrix::from_triplets(n, n, std::move(t));
}

SparseMatrix random_zero_colsum(Index n, double density, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_real_distribution<double> v(-1.0, 1.0);
  std::vector<mastereq::Triplet> t;
  for (Index j = 0; j < n; ++j) {
    double sum = 0.0;
    for (Index i = 0; i < n; ++i) {
      if (i == j || u(rng) > density) continue;
      const double r = v(rng);
      t.push_back({i, j, r});
      sum += r;
    }
    t.push_back({j, j, -sum});
  }
  return SparseMatrix::from_triplets(n, n, std::move(t));
}

DenseMatrix random_dense(Index n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> v(-1.0, 1.0);
  DenseMatrix m(n, n);
  for (double& x : m.data()) x = v(rng);
  return m;
}

Vector random_probability(Index n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vector p(static_cast<std::size_t>(n));
  double s = 0.0;
  for (double& x : p) s += (x = u(rng));
  for (double& x : p) x /= s;
  return p;
}

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i)
    m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

double max_abs_diff(const Vector& a, const Vector& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace testing
