#pragma once

#include <random>

#include "mastereq/dense.hpp"
#include "mastereq/linalg.hpp"

namespace testing {

using mastereq::DenseMatrix;
using mastereq::Index;
using mastereq::SparseMatrix;
using mastereq::Vector;

/// Random CTMC generator: nonnegative off-diagonals with the given density,
/// diagonal chosen so that every column sums to zero.
SparseMatrix random_generator(Index n, double density, std::mt19937_64& rng);

/// Random matrix with zero column sums but entries of either sign.
SparseMatrix random_zero_colsum(Index n, double density, std::mt19937_64& rng);

DenseMatrix random_dense(Index n, std::mt19937_64& rng);

Vector random_probability(Index n, std::mt19937_64& rng);

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b);
double max_abs_diff(const Vector& a, const Vector& b);

}  // namespace testing
