#include "mastereq/controller.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mastereq/dense.hpp"
#include "mastereq/krylov.hpp"
#include "mastereq/magnus.hpp"

namespace mastereq {

namespace {

struct Propagation {
  Vector value;
  Vector rho;
  double rho_measure = 0.0;
  Index dimension = 0;
  bool converged = true;
  Index matvecs = 0;
};

// Mutable per-run state that changes whenever the kept set changes.
struct Workspace {
  std::optional<StateProjection> projection;
  PropensityModel model;
  CommutatorCache cache;
  std::vector<Index> to_dual;
};

std::string describe_abort(double dt, double t, double dt_min) {
  std::ostringstream msg;
  msg << "step size " << dt << " fell below the minimum " << dt_min << " at t = " << t;
  return msg.str();
}

}  // namespace

void ControllerConfig::validate() const {
  auto fail = [](const std::string& what) { throw ModelError("controller config: " + what); };
  if (!(tol > 0.0) || !std::isfinite(tol)) fail("tol must be positive");
  if (!(t_final > 0.0) || !std::isfinite(t_final)) fail("t_final must be positive");
  if (order != 2 && order != 4) fail("order must be 2 or 4");
  if (s_max < 2 || s_max > 64) fail("s_max must lie in [2, 64]");
  if (reduce_period < 1) fail("reduce_period must be positive");
  const double hi = effective_dt_max();
  if (!(dt_min > 0.0) || dt_min > dt_initial || dt_initial > hi || hi > t_final)
    fail("need 0 < dt_min <= dt_initial <= dt_max <= t_final");
  if (!(safety > 0.0) || safety > 1.0) fail("safety factor must lie in (0, 1]");
  if (!(magnus_reject_factor >= 1.0)) fail("magnus_reject_factor must be at least 1");
  if (max_expansions < 0) fail("max_expansions must be nonnegative");
  if (shrink_factor < 0.0 || drop_budget_fraction < 0.0) fail("shrink settings must be nonnegative");
  if (krylov_factor < 0.0) fail("krylov_factor must be nonnegative");
  if (fixed_dt && (!(*fixed_dt > 0.0) || *fixed_dt > t_final)) fail("fixed_dt must lie in (0, t_final]");
  if (fixed_krylov_dim < 0 || fixed_krylov_dim > s_max) fail("fixed_krylov_dim must lie in [0, s_max]");
  if (quadrature_points < 1 || quadrature_points > 5) fail("quadrature_points must lie in [1, 5]");
}

double propose_dt_magnus(double dt, double residual, double tol, double t_final, int order,
                         const ControllerConfig& config) {
  double proposal;
  if (!(residual > 0.0)) {
    proposal = 2.0 * dt;
  } else {
    const double exponent = 1.0 / (config.classical_exponent ? order + 1 : order);
    proposal = config.safety * std::pow(dt * (tol / t_final) / residual, exponent) * dt;
    proposal = std::clamp(proposal, 0.25 * dt, 2.0 * dt);
  }
  return std::clamp(proposal, config.dt_min, config.effective_dt_max());
}

double cap_dt_arnoldi(double dt_magnus, Index s, Index s_max, double dt) {
  if (s < 1 || s > s_max) throw DimensionError("cap_dt_arnoldi: need 1 <= s <= s_max");
  return std::min(dt_magnus, static_cast<double>(s_max) / static_cast<double>(s) * dt);
}

RunResult run(const System& system, const ControllerConfig& cfg, const Accounting& accounting,
              const StepCallback& callback) {
  cfg.validate();
  const double tf = cfg.t_final;
  const double tol = cfg.tol;
  const double budget_rate = tol / tf;
  const bool fixed = cfg.fixed_dt.has_value();
  const double dt_max = cfg.effective_dt_max();
  const double krylov_factor =
      cfg.krylov_factor > 0.0 ? cfg.krylov_factor : (cfg.order == 4 ? 0.1 : 1.0);
  const DualTrajectory* dual = accounting.dual;

  if (cfg.estimate == EstimateMode::E2 && !dual)
    throw ModelError("estimate E2 needs a dual solution");
  if (cfg.estimate == EstimateMode::E1 && (!dual || dual->mode() != DualMode::Full))
    throw ModelError("estimate E1 needs a dual solution stored in FULL mode");
  if (dual && cfg.norm != NormKind::L1)
    throw ModelError("dual weighted estimates require the l1 residual norm");

  Workspace ws;
  ws.projection = system.projection;
  ws.model = ws.projection ? ws.projection->assemble() : system.model;
  Vector p = system.initial;
  if (static_cast<Index>(p.size()) != ws.model.size())
    throw DimensionError("initial vector size differs from the model");
  if (cfg.require_probability) {
    const double mass = accurate_sum(p);
    const double low = p.empty() ? 0.0 : *std::min_element(p.begin(), p.end());
    if (low < -1e-12 || system.initial_truncation < 0.0 ||
        std::abs(mass + system.initial_truncation - 1.0) > 1e-12)
      throw ModelError("initial vector is not a probability vector");
  }

  const double z_norm = accounting.functional.z.empty() ? 1.0 : accounting.functional.norm_inf();
  RunResult result{Vector{}, nullptr,
                   ErrorLedger(z_norm, dual != nullptr, dual && dual->mode() == DualMode::Full),
                   {}, 0, 0, 0, 0};

  auto rebuild = [&] {
    ws.cache = precompute_commutators(ws.model);
    ws.to_dual.clear();
    if (dual && dual->space() && ws.model.space() && ws.model.space() != dual->space() &&
        !(*ws.model.space() == *dual->space()))
      ws.to_dual = index_map(*ws.model.space(), *dual->space());
    result.max_space_size = std::max(result.max_space_size, ws.model.size());
  };
  rebuild();
  if (system.initial_truncation > 0.0) {
    StepContribution c;
    c.dropped_norm = system.initial_truncation;
    accumulate_step(result.ledger, dual, c, ws.to_dual);
  }

  auto vec_norm = [&](std::span<const double> v) {
    return cfg.norm == NormKind::L1 ? norm1(v) : norm_inf(v);
  };
  auto interval_weight = [&](double t0, double t1) {
    return cfg.estimate == EstimateMode::E3 ? z_norm : dual->weight(t0, t1);
  };
  auto dual_on_primal = [&](double t) {
    Vector q = dual->at(t);
    if (ws.to_dual.empty()) return q;
    Vector out(ws.to_dual.size(), 0.0);
    for (std::size_t i = 0; i < out.size(); ++i)
      if (ws.to_dual[i] >= 0) out[i] = q[static_cast<std::size_t>(ws.to_dual[i])];
    return out;
  };

  auto propagate = [&](const SparseMatrix& omega, std::span<const double> v, double target,
                       const ResidualMeasure& measure) {
    Propagation out;
    if (cfg.dense_propagator) {
      DenseMatrix e = dense_expm(omega.to_dense(), std::max(cfg.dense_max_order, omega.rows()));
      out.value = e.multiply(v);
      out.rho.assign(v.size(), 0.0);
      return out;
    }
    if (norm2(v) == 0.0) {
      out.value.assign(v.size(), 0.0);
      out.rho.assign(v.size(), 0.0);
      return out;
    }
    KrylovOptions options{cfg.s_max, cfg.fixed_krylov_dim, measure};
    KrylovResult k;
    try {
      k = expm_apply(as_operator(omega), v, target, options);
    } catch (const NumericalError&) {
      // the projected exponential overflowed; a shorter step will cure it
      if (fixed) throw;
      out.value.assign(v.begin(), v.end());
      out.rho.assign(v.size(), 0.0);
      out.rho_measure = std::numeric_limits<double>::infinity();
      out.converged = false;
      return out;
    }
    out.value = std::move(k.value);
    out.rho = std::move(k.residual);
    out.rho_measure = k.residual_norm;
    out.dimension = k.dimension;
    out.converged = k.converged || cfg.fixed_krylov_dim > 0;
    out.matvecs = k.matvecs;
    return out;
  };

  int expansions = 0;
  auto try_expand = [&](Vector& v) {
    if (expansions >= cfg.max_expansions) return false;
    StateProjection grown = expand(*ws.projection);
    if (grown.size() == ws.projection->size()) return false;
    v = embed(v, *ws.projection->space(), *grown.space());
    ws.projection = std::move(grown);
    ws.model = ws.projection->assemble();
    rebuild();
    ++expansions;
    return true;
  };

  double t = 0.0;
  double dt = fixed ? *cfg.fixed_dt : cfg.dt_initial;
  Index accepted = 0;
  Index last_shrink = 0;
  double dropped_total = 0.0;
  const double t_eps = 1e-12 * tf;

  auto emit = [&](const StepRecord& rec) {
    result.records.push_back(rec);
    if (rec.rejected) ++result.rejected_steps;
    if (callback) callback(rec, p);
  };
  auto halve = [&](double h) {
    dt = 0.5 * h;
    expansions = 0;
    if (dt < cfg.dt_min) throw SolverAbort(describe_abort(dt, t, cfg.dt_min));
  };

  while (tf - t > t_eps) {
    const double remaining = tf - t;
    double h = std::min(dt, remaining);
    bool last = false;
    if (remaining - h <= std::max(t_eps, 1e-6 * h)) {
      h = remaining;
      last = true;
    }

    // 1. periodic reduction of the state space
    if (ws.projection && accepted > 0 && accepted % cfg.reduce_period == 0 &&
        last_shrink != accepted) {
      last_shrink = accepted;
      const double threshold =
          tol * cfg.shrink_factor / static_cast<double>(ws.projection->size());
      ShrinkResult sr = shrink(*ws.projection, p, threshold);
      if (sr.changed && dropped_total + sr.dropped_mass <= cfg.drop_budget_fraction * tol) {
        StepContribution c;
        c.t = t;
        c.dropped = sr.dropped;
        c.dropped_norm = sr.dropped_mass;
        accumulate_step(result.ledger, dual, c, ws.to_dual);
        dropped_total += sr.dropped_mass;
        ws.projection = sr.projection;
        p = std::move(sr.p);
        ws.model = ws.projection->assemble();
        rebuild();
      }
    }

    // 2. growth check before propagation
    const double w_int = interval_weight(t, t + h);
    if (ws.projection) {
      while (w_int * ws.projection->split_outflow_rate(p, t).first >= budget_rate)
        if (!try_expand(p)) break;
    }

    // 3. adaptive Krylov propagation
    MagnusTerms terms = build_theta(ws.model, ws.cache, t, h, cfg.order, cfg.quadrature_points);
    Vector q_end;
    ResidualMeasure measure;
    if (cfg.estimate == EstimateMode::E1) {
      q_end = dual_on_primal(t + h);
      measure = [&q_end](std::span<const double> v) { return std::abs(dot(q_end, v)); };
    } else {
      measure = [&, w_int](std::span<const double> v) { return w_int * vec_norm(v); };
    }
    const double target = krylov_factor * budget_rate * h;
    Propagation full = propagate(terms.omega, p, target, measure);
    result.matvecs += full.matvecs;

    StepRecord rec;
    rec.step = accepted;
    rec.t = t;
    rec.dt = h;
    rec.krylov_dim = full.dimension;
    rec.rho_a_l1 = norm1(full.rho);
    rec.space_size = ws.model.size();
    rec.moan_niesen = cfg.moan_niesen ? moan_niesen_value(terms.theta2) : 0.0;

    if (!full.converged && !fixed) {
      rec.rejected = true;
      emit(rec);
      halve(h);
      continue;
    }

    // growth check on the realised step
    double outflow = 0.0;
    if (ws.projection) {
      outflow = step_outflow_estimate(ws.model, p, full.value, t, h);
      rec.outflow = outflow;
      Vector mid(p.size());
      for (std::size_t i = 0; i < mid.size(); ++i) mid[i] = 0.5 * (p[i] + full.value[i]);
      // flux leaving the universe cannot be recovered by growing
      const double recoverable = ws.projection->split_outflow_rate(mid, t + 0.5 * h).first;
      if (w_int * recoverable >= budget_rate) {
        const bool can_grow = expansions < cfg.max_expansions;
        if (can_grow && try_expand(p)) {
          rec.rejected = true;
          emit(rec);
          continue;
        }
        if (!can_grow && !fixed) {
          rec.rejected = true;
          emit(rec);
          halve(h);
          continue;
        }
      }
    }

    // 4. Magnus residual and step proposal
    Vector defect;
    double dt_magnus = std::numeric_limits<double>::infinity();
    if (ws.model.time_dependent()) {
      if (cfg.order == 2) {
        defect = magnus_residual(terms, p);
        ++result.matvecs;
      } else if (!fixed) {
        MagnusTerms a = build_theta(ws.model, ws.cache, t, 0.5 * h, 4, cfg.quadrature_points);
        MagnusTerms b =
            build_theta(ws.model, ws.cache, t + 0.5 * h, 0.5 * h, 4, cfg.quadrature_points);
        Propagation first = propagate(a.omega, p, 0.5 * target, measure);
        Propagation second = propagate(b.omega, first.value, 0.5 * target, measure);
        result.matvecs += first.matvecs + second.matvecs;
        defect = step_doubling_defect(full.value, second.value);
      }
      double mag_measure = 0.0;
      if (!defect.empty()) {
        rec.magnus_res_l1 = norm1(defect);
        mag_measure = measure(defect);
      }
      if (!fixed) {
        if (mag_measure > cfg.magnus_reject_factor * budget_rate * h) {
          rec.rejected = true;
          emit(rec);
          dt = propose_dt_magnus(h, mag_measure, tol, tf, cfg.order, cfg);
          expansions = 0;
          if (dt >= h) dt = 0.5 * h;
          if (dt < cfg.dt_min) throw SolverAbort(describe_abort(dt, t, cfg.dt_min));
          continue;
        }
        dt_magnus = propose_dt_magnus(h, mag_measure, tol, tf, cfg.order, cfg);
      }
    }

    // 5. Arnoldi cap
    double dt_next;
    if (fixed) {
      dt_next = *cfg.fixed_dt;
    } else {
      dt_next = std::isinf(dt_magnus) ? dt_max : dt_magnus;
      if (!cfg.dense_propagator && full.dimension > 0)
        dt_next = cap_dt_arnoldi(dt_next, full.dimension, cfg.s_max, h);
      dt_next = std::clamp(dt_next, cfg.dt_min, dt_max);
    }

    StepContribution c;
    c.t = t;
    c.dt = h;
    c.magnus = defect;
    c.rho = full.rho;
    c.outflow = outflow;
    c.magnus_norm = defect.empty() ? 0.0 : vec_norm(defect);
    c.rho_norm = vec_norm(full.rho);
    if (result.ledger.has_e1() && ws.projection && outflow > 0.0) {
      Vector mid(p.size());
      for (std::size_t i = 0; i < mid.size(); ++i) mid[i] = 0.5 * (p[i] + full.value[i]);
      for (auto& [state, rate] : ws.projection->exit_flux(mid, t + 0.5 * h)) {
        if (!dual->space()) continue;
        if (auto k = dual->space()->find(state)) c.exit_flux.emplace_back(*k, h * rate);
      }
    }
    accumulate_step(result.ledger, dual, c, ws.to_dual);
    if (!std::isfinite(result.ledger.e3()))
      throw SolverAbort("error budget overflow at t = " + std::to_string(t));

    p = std::move(full.value);
    t = last ? tf : t + h;
    ++accepted;
    expansions = 0;
    emit(rec);
    dt = dt_next;
  }

  result.solution = std::move(p);
  result.space = ws.model.space();
  result.accepted_steps = accepted;
  return result;
}

}  // namespace mastereq
