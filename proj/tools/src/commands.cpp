#include "mastereq_cli/commands.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>

#include "mastereq/adjoint.hpp"
#include "mastereq/fsp.hpp"

namespace mastereq::cli {

namespace {

using Json = nlohmann::ordered_json;

Json optional_number(const std::optional<double>& v) {
  if (!v || !std::isfinite(*v)) return nullptr;
  return *v;
}

Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Vector on_full_space(const BenchmarkProblem& problem, const RunResult& result) {
  const auto& full = problem.full_model.space();
  if (!full || !result.space || result.space == full || *result.space == *full)
    return result.solution;
  return embed(result.solution, *result.space, *full);
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

RunReport solve(const BenchmarkProblem& problem, const Settings& settings,
                const std::string& command) {
  const ControllerConfig& cfg = settings.controller;
  RunReport report;
  report.command = command;
  report.problem = settings.problem;
  report.config = to_json(settings);
  report.estimate = settings.estimate.mode;

  const Index full_size = problem.full_model.size();
  report.component = settings.estimate.component.value_or(problem.default_component.value_or(0));
  if (report.component >= full_size)
    throw ConfigError("estimate.component " + std::to_string(report.component) +
                      " is outside the state space of size " + std::to_string(full_size));
  const ErrorFunctional functional =
      ErrorFunctional::basis(full_size, report.component, problem.full_model.space());

  ControllerConfig run_cfg = cfg;
  run_cfg.estimate = settings.estimate.mode;
  const double eps_dual =
      settings.estimate.eps_dual > 0.0 ? settings.estimate.eps_dual : cfg.effective_eps_dual();

  const auto start = std::chrono::steady_clock::now();
  std::optional<DualTrajectory> dual;
  if (settings.estimate.mode != EstimateMode::E3) {
    const DualMode mode =
        settings.estimate.mode == EstimateMode::E1 ? DualMode::Full : DualMode::Norm;
    dual = solve_dual(problem.full_model, functional, cfg.t_final, eps_dual, mode, cfg);
    report.dual_matvecs = dual->matvecs;
    report.dual_steps = dual->steps;
  }
  RunResult result = run(problem.system(), run_cfg, Accounting{functional, dual ? &*dual : nullptr});
  report.seconds = seconds_since(start);

  report.matvecs = result.matvecs;
  report.accepted_steps = result.accepted_steps;
  report.rejected_steps = result.rejected_steps;
  report.max_space_size = result.max_space_size;
  report.final_space_size = static_cast<Index>(result.solution.size());
  report.final_mass = accurate_sum(result.solution);
  report.e3 = result.ledger.e3();
  if (result.ledger.has_e2()) report.e2 = result.ledger.e2();
  if (result.ledger.has_e1()) report.e1 = result.ledger.e1();
  report.component_bound = component_bound(result.ledger);
  report.records = std::move(result.records);
  report.solution = on_full_space(problem, result);

  if (problem.analytic) {
    report.exact = problem.analytic(cfg.t_final);
    double linf = 0.0;
    for (std::size_t i = 0; i < report.exact.size(); ++i)
      linf = std::max(linf, std::abs(report.exact[i] - report.solution[i]));
    report.linf_error = linf;
    const auto k = static_cast<std::size_t>(report.component);
    report.component_error = report.exact[k] - report.solution[k];
  }
  return report;
}

RunReport solve(const Settings& settings) {
  return solve(build_problem(settings), settings);
}

Json to_json(const RunReport& r) {
  Json j;
  j["command"] = r.command;
  j["problem"] = r.problem;
  j["config"] = r.config;
  j["estimate"] = estimate_name(r.estimate);
  j["linf_error"] = optional_number(r.linf_error);
  j["functional"] = {{"component", r.component},
                     {"true_error", optional_number(r.component_error)},
                     {"E1_estimate", optional_number(r.e1)},
                     {"E2_bound", optional_number(r.e2)},
                     {"E3_bound", finite_or_null(r.e3)}};
  j["component_bound"] = finite_or_null(r.component_bound);
  j["matvecs"] = {{"primal", r.matvecs}, {"dual", r.dual_matvecs}, {"total", r.matvecs + r.dual_matvecs}};
  j["steps"] = {{"accepted", r.accepted_steps}, {"rejected", r.rejected_steps}, {"dual", r.dual_steps}};
  j["space"] = {{"max", r.max_space_size}, {"final", r.final_space_size}};
  j["final_mass"] = r.final_mass;
  j["seconds"] = r.seconds;
  j["records"] = r.records.size();
  return j;
}

std::vector<RunReport> compare_estimates(const Settings& settings) {
  const BenchmarkProblem problem = build_problem(settings);
  std::vector<RunReport> out;
  for (EstimateMode mode : {EstimateMode::E3, EstimateMode::E2, EstimateMode::E1}) {
    Settings s = settings;
    s.estimate.mode = mode;
    out.push_back(solve(problem, s, "compare-estimates"));
  }
  return out;
}

FspComparison fsp_compare(const Settings& settings) {
  const BenchmarkProblem problem = build_problem(settings);
  if (!problem.projection)
    throw ConfigError("fsp-compare needs a truncated problem (set problem.truncate_below)");
  Settings s = settings;
  s.controller.dense_propagator = true;
  // no state space reduction, so the loss of probability is pure outflow
  s.controller.drop_budget_fraction = 0.0;
  s.estimate.mode = EstimateMode::E3;

  FspComparison cmp;
  const ErrorFunctional functional = ErrorFunctional::basis(problem.model.size(), 0);
  double previous_loss = probability_loss(problem.initial);
  double cum_out = 0.0, cum_loss = 0.0;
  cmp.min_cumulative_ratio = std::numeric_limits<double>::infinity();
  auto on_step = [&](const StepRecord& rec, std::span<const double> p) {
    if (rec.rejected) return;
    const double loss = probability_loss(p);
    FspRow row{rec.step, rec.t, rec.dt, rec.outflow, loss - previous_loss, 0.0, 0.0, rec.space_size};
    previous_loss = loss;
    cum_out += row.outflow;
    cum_loss += row.loss;
    row.cumulative_outflow = cum_out;
    row.cumulative_loss = cum_loss;
    if (std::max(row.outflow, std::abs(row.loss)) > kFspNoiseFloor) {
      ++cmp.significant_steps;
      const double ratio = row.outflow / row.loss;
      if (row.loss > 0.0 && ratio >= 0.5 && ratio <= 5.0) ++cmp.steps_in_band;
    }
    if (cum_loss > kFspNoiseFloor)
      cmp.min_cumulative_ratio = std::min(cmp.min_cumulative_ratio, cum_out / cum_loss);
    cmp.rows.push_back(row);
  };

  const auto start = std::chrono::steady_clock::now();
  RunResult result = run(problem.system(), s.controller, Accounting{functional, nullptr}, on_step);

  RunReport& r = cmp.run;
  r.command = "fsp-compare";
  r.problem = s.problem;
  r.config = to_json(s);
  r.seconds = seconds_since(start);
  r.matvecs = result.matvecs;
  r.accepted_steps = result.accepted_steps;
  r.rejected_steps = result.rejected_steps;
  r.max_space_size = result.max_space_size;
  r.final_space_size = static_cast<Index>(result.solution.size());
  r.final_mass = accurate_sum(result.solution);
  r.e3 = result.ledger.e3();
  r.component_bound = component_bound(result.ledger);
  r.records = std::move(result.records);
  r.solution = on_full_space(problem, result);
  if (problem.analytic) {
    r.exact = problem.analytic(s.controller.t_final);
    double linf = 0.0;
    for (std::size_t i = 0; i < r.exact.size(); ++i)
      linf = std::max(linf, std::abs(r.exact[i] - r.solution[i]));
    r.linf_error = linf;
  }
  return cmp;
}

Json to_json(const FspComparison& c) {
  Json j = to_json(c.run);
  j["fsp"] = {{"significant_steps", c.significant_steps},
              {"steps_in_band", c.steps_in_band},
              {"min_cumulative_ratio", finite_or_null(c.min_cumulative_ratio)},
              {"cumulative_outflow", c.rows.empty() ? 0.0 : c.rows.back().cumulative_outflow},
              {"cumulative_loss", c.rows.empty() ? 0.0 : c.rows.back().cumulative_loss}};
  return j;
}

MagnusDiagnostic magnus_diagnostic(const Settings& settings) {
  Settings s = settings;
  s.controller.moan_niesen = true;
  MagnusDiagnostic d{solve(build_problem(s), s, "magnus-diagnostic"), 0, 0.0};
  for (const auto& rec : d.run.records) {
    if (rec.rejected) continue;
    d.max_value = std::max(d.max_value, rec.moan_niesen);
    if (rec.moan_niesen > std::numbers::pi) ++d.steps_above_pi;
  }
  return d;
}

ConvergenceStudy convergence(const Settings& settings) {
  const BenchmarkProblem problem = build_problem(settings);
  if (!problem.analytic) throw ConfigError("convergence needs a problem with a closed form");
  const Vector exact = problem.analytic(settings.controller.t_final);
  ConvergenceStudy study;
  for (int order : settings.convergence.orders) {
    std::vector<double> xs, ys;
    for (double dt : settings.convergence.dts) {
      ControllerConfig cfg = settings.controller;
      cfg.order = order;
      cfg.fixed_dt = dt;
      cfg.dt_initial = std::min(dt, cfg.t_final);
      cfg.dt_min = std::min(cfg.dt_min, cfg.dt_initial);
      cfg.estimate = EstimateMode::E3;
      RunResult r = run(problem.system(), cfg);
      Vector p = on_full_space(problem, r);
      double err = 0.0;
      for (std::size_t i = 0; i < exact.size(); ++i) err = std::max(err, std::abs(exact[i] - p[i]));
      ConvergenceRow row{order, dt, r.accepted_steps, r.matvecs, err, std::nullopt};
      if (!xs.empty() && err > 0.0 && std::exp(ys.back()) > 0.0)
        row.observed = (ys.back() - std::log(err)) / (xs.back() - std::log(dt));
      xs.push_back(std::log(dt));
      ys.push_back(std::log(err));
      study.rows.push_back(row);
    }
    const double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sx += xs[i];
      sy += ys[i];
      sxx += xs[i] * xs[i];
      sxy += xs[i] * ys[i];
    }
    const double denom = n * sxx - sx * sx;
    study.fitted_order[order] = denom != 0.0 ? (n * sxy - sx * sy) / denom : 0.0;
  }
  return study;
}

Json to_json(const ConvergenceStudy& study) {
  Json rows = Json::array();
  for (const auto& r : study.rows)
    rows.push_back({{"order", r.order},
                    {"dt", r.dt},
                    {"steps", r.steps},
                    {"matvecs", r.matvecs},
                    {"error", r.error},
                    {"observed_order", optional_number(r.observed)}});
  Json fitted = Json::object();
  for (const auto& [m, q] : study.fitted_order) fitted[std::to_string(m)] = finite_or_null(q);
  return {{"command", "convergence"}, {"rows", rows}, {"fitted_order", fitted}};
}

void write_json(const Json& j, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
  if (!out.flush()) throw IoError("failed writing " + path.string());
}

}  // namespace mastereq::cli
