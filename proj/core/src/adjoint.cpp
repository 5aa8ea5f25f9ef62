#include "mastereq/adjoint.hpp"

#include <algorithm>
#include <cmath>

#include "mastereq/controller.hpp"

namespace mastereq {

ErrorFunctional ErrorFunctional::basis(Index size, Index component,
                                       std::shared_ptr<const StateSpace> space) {
  if (component < 0 || component >= size)
    throw DimensionError("functional component " + std::to_string(component) +
                         " outside 0.." + std::to_string(size - 1));
  ErrorFunctional f{Vector(static_cast<std::size_t>(size), 0.0), std::move(space)};
  f.z[static_cast<std::size_t>(component)] = 1.0;
  return f;
}

DualTrajectory::DualTrajectory(DualMode mode, double z_norm,
                               std::shared_ptr<const StateSpace> space)
    : mode_(mode), z_norm_(z_norm), space_(std::move(space)) {
  if (!(z_norm > 0.0)) throw ModelError("error functional must have a positive norm");
}

void DualTrajectory::add_node(double t, std::span<const double> q) {
  if (!times_.empty() && !(t > times_.back()))
    throw ModelError("dual nodes must be added in increasing time");
  const double raw = norm_inf(q);
  times_.push_back(t);
  raw_norms_.push_back(raw);
  norms_.push_back(std::min(raw, z_norm_));
  if (mode_ == DualMode::Full) {
    Vector v(q.begin(), q.end());
    if (raw > z_norm_)
      for (double& x : v) x *= z_norm_ / raw;
    vectors_.push_back(std::move(v));
  }
}

std::pair<std::size_t, std::size_t> DualTrajectory::bracket(double t) const {
  if (times_.empty()) throw ModelError("dual trajectory is empty");
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  if (it == times_.begin()) return {0, 0};
  if (it == times_.end()) return {times_.size() - 1, times_.size() - 1};
  auto hi = static_cast<std::size_t>(it - times_.begin());
  if (times_[hi - 1] == t) return {hi - 1, hi - 1};
  return {hi - 1, hi};
}

double DualTrajectory::weight(double t0, double t1) const {
  auto [lo, unused] = bracket(t0);
  auto [unused2, hi] = bracket(t1);
  (void)unused;
  (void)unused2;
  double w = 0.0;
  for (std::size_t i = lo; i <= hi; ++i) w = std::max(w, norms_[i]);
  return w;
}

Vector DualTrajectory::at(double t) const {
  if (mode_ != DualMode::Full) throw ModelError("dual vectors are only stored in FULL mode");
  auto [lo, hi] = bracket(t);
  if (lo == hi) return vectors_[lo];
  const double a = (t - times_[lo]) / (times_[hi] - times_[lo]);
  Vector q(vectors_[lo].size());
  for (std::size_t i = 0; i < q.size(); ++i)
    q[i] = (1.0 - a) * vectors_[lo][i] + a * vectors_[hi][i];
  return q;
}

DualTrajectory solve_dual(const PropensityModel& model, const ErrorFunctional& functional,
                          double t_final, double eps_dual, DualMode mode,
                          const ControllerConfig& base) {
  if (static_cast<Index>(functional.z.size()) != model.size())
    throw DimensionError("functional size differs from the dual model");
  ControllerConfig cfg = base;
  cfg.tol = eps_dual;
  cfg.t_final = t_final;
  cfg.estimate = EstimateMode::E3;
  cfg.norm = NormKind::LInf;
  cfg.require_probability = false;
  cfg.fixed_dt.reset();
  cfg.fixed_krylov_dim = 0;
  cfg.dense_propagator = false;
  cfg.moan_niesen = false;
  cfg.dt_max = std::min(cfg.dt_max > 0.0 ? cfg.dt_max : t_final, t_final);
  cfg.dt_initial = std::min(cfg.dt_initial, cfg.dt_max);

  System system{model.adjoint_reversed(t_final), std::nullopt, functional.z};
  DualTrajectory dual(mode, functional.norm_inf(), model.space());

  std::vector<std::pair<double, Vector>> nodes;
  auto keep = [&](double s, std::span<const double> q) {
    if (mode == DualMode::Full) {
      nodes.emplace_back(t_final - s, Vector(q.begin(), q.end()));
    } else {
      // only the norm is needed; store a one-entry vector with that value
      nodes.emplace_back(t_final - s, Vector{norm_inf(q)});
    }
  };
  keep(0.0, functional.z);
  RunResult r = run(system, cfg, Accounting{ErrorFunctional{}, nullptr},
                    [&](const StepRecord& rec, std::span<const double> q) {
                      if (!rec.rejected) keep(rec.t + rec.dt, q);
                    });
  for (auto it = nodes.rbegin(); it != nodes.rend(); ++it) {
    double t = std::max(it->first, 0.0);
    if (!dual.times().empty() && !(t > dual.times().back())) continue;
    dual.add_node(t, it->second);
  }
  dual.matvecs = r.matvecs;
  dual.steps = r.accepted_steps;
  dual.dual_error_bound = r.ledger.e3();
  return dual;
}

void ErrorLedger::add(const LedgerEntry& entry) {
  e1_ += entry.e1;
  e2_ += entry.e2;
  e3_ += entry.e3;
  entries_.push_back(entry);
}

double dual_dot(std::span<const double> q, std::span<const double> v,
                std::span<const Index> to_dual) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  if (to_dual.empty()) {
    if (q.size() != v.size()) throw DimensionError("dual vector size differs from primal");
    for (std::size_t i = 0; i < v.size(); ++i) s += q[i] * v[i];
    return s;
  }
  if (to_dual.size() != v.size()) throw DimensionError("index map size differs from primal");
  for (std::size_t i = 0; i < v.size(); ++i)
    if (to_dual[i] >= 0) s += q[static_cast<std::size_t>(to_dual[i])] * v[i];
  return s;
}

void accumulate_step(ErrorLedger& ledger, const DualTrajectory* dual, const StepContribution& step,
                     std::span<const Index> to_dual) {
  for (double x : {step.outflow, step.magnus_norm, step.rho_norm, step.dropped_norm})
    if (!std::isfinite(x) || x < 0.0) throw NumericalError("ledger: invalid step contribution");
  if ((ledger.has_e2() || ledger.has_e1()) && !dual)
    throw ModelError("ledger expects dual weighted estimates but no dual solution is available");
  if (ledger.has_e1() && dual->mode() != DualMode::Full)
    throw ModelError("the signed estimate needs the dual in FULL mode");

  LedgerEntry e;
  e.t = step.t;
  e.dt = step.dt;
  e.magnus = step.magnus_norm;
  e.arnoldi = step.rho_norm;
  e.outflow = step.outflow;
  e.dropped = step.dropped_norm;
  const double interval = step.magnus_norm + step.rho_norm + step.outflow;
  e.e3 = ledger.z_norm() * (interval + step.dropped_norm);
  if (ledger.has_e2()) {
    const double w = dual->weight(step.t, step.t + step.dt);
    const double w0 = dual->weight_at(step.t);
    e.e2 = w * interval + w0 * step.dropped_norm;
  }
  if (ledger.has_e1()) {
    double s = 0.0;
    if (!step.magnus.empty() || !step.rho.empty()) {
      Vector q = dual->at(step.t + step.dt);
      s += dual_dot(q, step.magnus, to_dual) + dual_dot(q, step.rho, to_dual);
    }
    if (!step.exit_flux.empty()) {
      Vector q = dual->at(step.t + 0.5 * step.dt);
      for (const auto& [i, v] : step.exit_flux) s += q[static_cast<std::size_t>(i)] * v;
    }
    if (!step.dropped.empty()) s += dual_dot(dual->at(step.t), step.dropped, to_dual);
    e.e1 = s;
  }
  ledger.add(e);
}

double component_bound(const ErrorLedger& ledger) { return ledger.e3() / ledger.z_norm(); }

std::pair<Vector, Vector> component_band(const ErrorLedger& ledger, std::span<const double> p) {
  const double eps = component_bound(ledger);
  Vector lo(p.begin(), p.end()), hi(p.begin(), p.end());
  for (double& x : lo) x -= eps;
  for (double& x : hi) x += eps;
  return {lo, hi};
}

}  // namespace mastereq
