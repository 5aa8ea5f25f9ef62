#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mastereq/controller.hpp"
#include "mastereq/fsp.hpp"
#include "mastereq/model.hpp"

namespace mastereq {

struct BenchmarkProblem {
  std::string name;
  /// Model on the starting index set.
  PropensityModel model;
  /// Present when the problem runs with a finite state projection.
  std::optional<StateProjection> projection;
  Vector initial;
  /// Mass of the initial distribution outside the starting set.
  double initial_truncation = 0.0;
  double t_final = 10.0;
  /// Model on the complete (or universe) index set, used for dual solves
  /// and reference runs.
  PropensityModel full_model;
  /// Initial distribution on the full index set.
  Vector full_initial;
  /// Exact solution on the full index set, when known.
  std::function<Vector(double)> analytic;
  std::optional<Index> default_component;

  System system() const { return System{model, projection, initial, initial_truncation}; }
};

/// p(0) = (sigma, 1 - sigma), A(t) = A_c + sin(t) A_1.
BenchmarkProblem two_state(double sigma = 1.0);
/// First component of the closed-form two-state solution.
double two_state_first(double sigma, double t);

struct IsomerizationOptions {
  int molecules = 2000;
  double p0 = 1.0 / 3.0;
  bool time_varying = true;
  /// When set, start from the states whose initial probability is at least
  /// this value and let the projection adapt.
  std::optional<double> truncate_below;
};

BenchmarkProblem isomerization(const IsomerizationOptions& options);

struct TcellOptions {
  /// Use the birth rate of the second species exactly as printed, with the
  /// leading factor n instead of n'.
  bool literal_primed_rate = false;
  int start_upper = 29;
  int universe_upper = 59;
  double t_final = 30.0;
  double hill_half_time = 15.0;
  double hill_exponent = 5.0;
};

BenchmarkProblem tcell(const TcellOptions& options = {});
ReactionNetwork tcell_network(const TcellOptions& options = {});

/// Binomial(N, p) probabilities for k = 0..N via log-gamma.
Vector binomial_pmf(int n, double p);

/// Fine fixed-step solution of the T-cell problem on the universe
/// (fourth order Magnus, tight Krylov residual). Loaded from `cache` when it
/// holds a matching run, otherwise computed and written there.
Vector tcell_reference(const TcellOptions& options, double dt,
                       const std::filesystem::path& cache = {});
Vector tcell_fixed_step(const TcellOptions& options, double dt);

/// Initial probability mass on explicit states.
using InitialMass = std::vector<std::pair<std::vector<int>, double>>;

/// A user-defined network on the closure of its initial states inside
/// `lattice`. There is no closed form.
BenchmarkProblem network_problem(const std::string& name, const ReactionNetwork& network,
                                 const Lattice& lattice, const InitialMass& initial,
                                 double t_final);

/// Names accepted by make_problem.
std::vector<std::string> problem_names();

struct ProblemParameters {
  double sigma = 1.0;
  int molecules = 2000;
  double p0 = 1.0 / 3.0;
  std::optional<double> truncate_below;
  std::optional<double> t_final;
  bool literal_primed_rate = false;
};

/// Throws ModelError for an unknown name.
BenchmarkProblem make_problem(const std::string& name, const ProblemParameters& parameters = {});

}  // namespace mastereq
