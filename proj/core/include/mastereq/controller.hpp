#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "mastereq/adjoint.hpp"
#include "mastereq/fsp.hpp"
#include "mastereq/model.hpp"

namespace mastereq {

enum class EstimateMode { E1, E2, E3 };
enum class NormKind { L1, LInf };

struct ControllerConfig {
  double tol = 1e-3;
  double t_final = 1.0;
  int order = 4;
  Index s_max = 40;
  /// Attempt a state space reduction every this many accepted steps.
  int reduce_period = 10;
  double dt_initial = 1e-2;
  double dt_min = 1e-12;
  /// Non-positive means t_final.
  double dt_max = 0.0;
  double safety = 0.9;
  EstimateMode estimate = EstimateMode::E3;
  /// Non-positive means 10 * tol.
  double eps_dual = 0.0;
  /// Use the exponent 1/(m+1) instead of 1/m in the step proposal.
  bool classical_exponent = false;
  /// A step is rejected when its Magnus residual exceeds this multiple of
  /// the per-step budget.
  double magnus_reject_factor = 2.0;
  int max_expansions = 5;
  /// Drop threshold is tol * shrink_factor / |I1|.
  double shrink_factor = 1e-4;
  /// Total dropped mass per run is capped at this fraction of tol.
  double drop_budget_fraction = 0.05;
  /// Krylov target is krylov_factor * tol * dt / t_final. Zero selects
  /// 1 for order 2 and 0.1 for order 4 (the step doubling estimate must
  /// dominate the Krylov noise).
  double krylov_factor = 0.0;
  std::optional<double> fixed_dt;
  Index fixed_krylov_dim = 0;
  /// Propagate with a dense exponential of the Magnus matrix.
  bool dense_propagator = false;
  Index dense_max_order = 1024;
  int quadrature_points = 2;
  NormKind norm = NormKind::L1;
  bool moan_niesen = true;
  bool require_probability = true;

  double effective_dt_max() const { return dt_max > 0.0 ? dt_max : t_final; }
  double effective_eps_dual() const { return eps_dual > 0.0 ? eps_dual : 10.0 * tol; }
  void validate() const;
};

struct StepRecord {
  Index step = 0;
  double t = 0.0;
  double dt = 0.0;
  Index krylov_dim = 0;
  double rho_a_l1 = 0.0;
  double magnus_res_l1 = 0.0;
  double outflow = 0.0;
  Index space_size = 0;
  double moan_niesen = 0.0;
  bool rejected = false;
};

/// Propagated problem: a fixed model, or a projection that is reassembled
/// as the kept set changes.
struct System {
  PropensityModel model;
  std::optional<StateProjection> projection;
  Vector initial;
  /// Probability mass of the true initial value outside the starting set;
  /// enters the ledger as an initial perturbation.
  double initial_truncation = 0.0;
};

/// Weighting used by the ledger. Without a dual only E3 is available.
struct Accounting {
  ErrorFunctional functional;
  const DualTrajectory* dual = nullptr;
};

struct RunResult {
  Vector solution;
  std::shared_ptr<const StateSpace> space;
  ErrorLedger ledger;
  std::vector<StepRecord> records;
  Index matvecs = 0;
  Index accepted_steps = 0;
  Index rejected_steps = 0;
  Index max_space_size = 0;
};

/// Called once per attempted step, in order; `p` is the solution after an
/// accepted step and the unchanged solution after a rejection.
using StepCallback = std::function<void(const StepRecord&, std::span<const double> p)>;

RunResult run(const System& system, const ControllerConfig& config,
              const Accounting& accounting = {}, const StepCallback& callback = {});

/// Step proposal from the Magnus residual, with safety factor and clamps.
double propose_dt_magnus(double dt, double residual, double tol, double t_final, int order,
                         const ControllerConfig& config);

/// min(dt_magnus, (s_max / s) * dt).
double cap_dt_arnoldi(double dt_magnus, Index s, Index s_max, double dt);

}  // namespace mastereq
