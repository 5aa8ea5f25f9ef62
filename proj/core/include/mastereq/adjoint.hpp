#pragma once

#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "mastereq/linalg.hpp"
#include "mastereq/model.hpp"

namespace mastereq {

struct ControllerConfig;

/// Functional z^T e of the final error. `space` may be null when the
/// functional lives on an unlabelled index set.
struct ErrorFunctional {
  Vector z;
  std::shared_ptr<const StateSpace> space;

  static ErrorFunctional basis(Index size, Index component,
                               std::shared_ptr<const StateSpace> space = nullptr);
  double norm_inf() const { return mastereq::norm_inf(z); }
};

enum class DualMode { Full, Norm };

/// Dual solution q(t) sampled at the nodes of its own adaptive grid.
/// Node vectors are rescaled so that |q|_inf <= |z|_inf; the unscaled norms
/// are kept in `raw_norms`.
class DualTrajectory {
 public:
  DualTrajectory(DualMode mode, double z_norm, std::shared_ptr<const StateSpace> space);

  /// Nodes must be added in strictly increasing time.
  void add_node(double t, std::span<const double> q);

  DualMode mode() const { return mode_; }
  double z_norm() const { return z_norm_; }
  const std::shared_ptr<const StateSpace>& space() const { return space_; }
  const std::vector<double>& times() const { return times_; }
  const std::vector<double>& norms() const { return norms_; }
  const std::vector<double>& raw_norms() const { return raw_norms_; }
  std::size_t size() const { return times_.size(); }

  /// Max node norm over [t0, t1] including the bracketing nodes.
  double weight(double t0, double t1) const;
  double weight_at(double t) const { return weight(t, t); }
  /// Piecewise-linear interpolant; FULL mode only.
  Vector at(double t) const;

  Index matvecs = 0;
  Index steps = 0;
  double dual_error_bound = 0.0;

 private:
  std::pair<std::size_t, std::size_t> bracket(double t) const;

  DualMode mode_;
  double z_norm_;
  std::shared_ptr<const StateSpace> space_;
  std::vector<double> times_;
  std::vector<double> norms_;
  std::vector<double> raw_norms_;
  std::vector<Vector> vectors_;
};

/// Integrates dq/dt = -A(t)^T q, q(t_final) = z backwards in time as a
/// forward problem in s = t_final - t, controlling the local l-infinity
/// residual with tolerance `eps_dual`. `base` supplies Krylov and Magnus
/// settings.
DualTrajectory solve_dual(const PropensityModel& model, const ErrorFunctional& functional,
                          double t_final, double eps_dual, DualMode mode,
                          const ControllerConfig& base);

struct LedgerEntry {
  double t = 0.0;
  double dt = 0.0;
  double magnus = 0.0;   ///< norm of the Magnus defect
  double arnoldi = 0.0;  ///< norm of rho_A
  double outflow = 0.0;  ///< dt * outflow rate at the midpoint
  double dropped = 0.0;  ///< mass removed by state space reduction
  double e1 = 0.0;
  double e2 = 0.0;
  double e3 = 0.0;
};

/// Running totals of the three estimates: E1 (signed, dual weighted), E2
/// (dual norm weighted) and E3 (|z|_inf weighted).
class ErrorLedger {
 public:
  explicit ErrorLedger(double z_norm = 1.0, bool has_e2 = false, bool has_e1 = false)
      : z_norm_(z_norm), has_e1_(has_e1), has_e2_(has_e2) {}

  void add(const LedgerEntry& entry);

  double z_norm() const { return z_norm_; }
  bool has_e1() const { return has_e1_; }
  bool has_e2() const { return has_e2_; }
  double e1() const { return e1_; }
  double e2() const { return e2_; }
  double e3() const { return e3_; }
  const std::vector<LedgerEntry>& entries() const { return entries_; }

 private:
  double z_norm_;
  bool has_e1_;
  bool has_e2_;
  double e1_ = 0.0;
  double e2_ = 0.0;
  double e3_ = 0.0;
  std::vector<LedgerEntry> entries_;
};

/// Residual data of one accepted step on the primal index set.
struct StepContribution {
  double t = 0.0;
  double dt = 0.0;
  std::span<const double> magnus;   ///< estimate of (exact - numerical)
  std::span<const double> rho;      ///< generalised Krylov residual
  double outflow = 0.0;             ///< dt * |A_R p_mid|_1
  /// dt * A_R p_mid on dual indices (entries outside the dual space omitted)
  std::vector<std::pair<Index, double>> exit_flux;
  std::span<const double> dropped;  ///< entries removed at t
  double magnus_norm = 0.0;
  double rho_norm = 0.0;
  double dropped_norm = 0.0;
};

/// Adds one step to the ledger. `to_dual` maps primal indices to dual
/// indices (empty means identity). Throws ModelError if the ledger expects
/// E1 or E2 but the dual data does not support it.
void accumulate_step(ErrorLedger& ledger, const DualTrajectory* dual, const StepContribution& step,
                     std::span<const Index> to_dual = {});

/// q^T v with q on dual indices and v on primal indices.
double dual_dot(std::span<const double> q, std::span<const double> v,
                std::span<const Index> to_dual);

/// Half width eps = E3 / |z|_inf of the component-wise band p~ - eps <= p <= p~ + eps.
double component_bound(const ErrorLedger& ledger);
std::pair<Vector, Vector> component_band(const ErrorLedger& ledger, std::span<const double> p);

}  // namespace mastereq
