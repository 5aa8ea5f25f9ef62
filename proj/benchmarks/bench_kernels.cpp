#include <benchmark/benchmark.h>

#include "mastereq/dense.hpp"
#include "mastereq/krylov.hpp"
#include "mastereq/magnus.hpp"
#include "mastereq/problems.hpp"

namespace {

using namespace mastereq;

const BenchmarkProblem& isomerization_problem() {
  static const BenchmarkProblem p = isomerization({2000, 1.0 / 3.0, true, std::nullopt});
  return p;
}

const BenchmarkProblem& tcell_problem() {
  static const BenchmarkProblem p = tcell();
  return p;
}

void BM_spmv(benchmark::State& state) {
  const auto& p = state.range(0) == 0 ? isomerization_problem() : tcell_problem();
  const SparseMatrix a = p.full_model.evaluate_at(1.0);
  Vector x(static_cast<std::size_t>(a.cols()), 1.0), y(x.size());
  for (auto _ : state) {
    a.multiply(x, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * a.nnz());
}
BENCHMARK(BM_spmv)->Arg(0)->Arg(1);

void BM_expm_apply(benchmark::State& state) {
  const auto& p = isomerization_problem();
  const SparseMatrix omega = p.model.evaluate_at(1.0).scaled(1e-3 * static_cast<double>(state.range(0)));
  for (auto _ : state) {
    auto r = expm_apply(as_operator(omega), p.initial, 1e-10);
    benchmark::DoNotOptimize(r.value.data());
  }
}
BENCHMARK(BM_expm_apply)->Arg(1)->Arg(10)->Arg(50);

void BM_dense_expm(benchmark::State& state) {
  const Index n = state.range(0);
  DenseMatrix h(n, n);
  for (Index i = 0; i < n; ++i) {
    h(i, i) = -2.0;
    if (i + 1 < n) {
      h(i + 1, i) = 1.0;
      h(i, i + 1) = 0.5;
    }
  }
  for (auto _ : state) benchmark::DoNotOptimize(dense_expm(h).data().data());
}
BENCHMARK(BM_dense_expm)->Arg(10)->Arg(20)->Arg(40);

void BM_build_theta(benchmark::State& state) {
  const auto& p = state.range(0) == 0 ? isomerization_problem() : tcell_problem();
  const PropensityModel& model = p.full_model;
  const CommutatorCache cache = precompute_commutators(model);
  for (auto _ : state) {
    auto terms = build_theta(model, cache, 1.0, 0.05, 4);
    benchmark::DoNotOptimize(terms.omega.values().data());
  }
}
BENCHMARK(BM_build_theta)->Arg(0)->Arg(1);

}  // namespace
