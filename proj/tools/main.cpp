#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mastereq/error.hpp"
#include "mastereq_cli/commands.hpp"
#include "mastereq_cli/config.hpp"
#include "mastereq_cli/csv.hpp"

namespace cli = mastereq::cli;
using mastereq::Index;

namespace {

struct Overrides {
  std::string config;
  std::optional<std::string> problem;
  std::optional<double> tol;
  std::optional<double> t_final;
  std::optional<int> order;
  std::optional<std::string> estimate;
  std::optional<Index> component;
  std::optional<double> eps_dual;
  std::optional<int> molecules;
  std::optional<double> sigma;
  std::optional<double> p0;
  std::optional<double> truncate_below;
  std::optional<double> fixed_dt;
  std::optional<Index> fixed_krylov_dim;
  std::optional<Index> s_max;
  bool dense = false;
  std::optional<std::string> csv;
  std::optional<std::string> json;
};

void add_options(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config, "YAML configuration file");
  app->add_option("--problem", o.problem, "two-state, isomerization, isomerization-const or tcell");
  app->add_option("--tol", o.tol, "global tolerance");
  app->add_option("--t-final", o.t_final, "final time");
  app->add_option("--order", o.order, "Magnus order (2 or 4)");
  app->add_option("--estimate", o.estimate, "primal-only, dual-norm or dual");
  app->add_option("--functional-component", o.component, "basis functional index");
  app->add_option("--eps-dual", o.eps_dual, "dual tolerance");
  app->add_option("--molecules", o.molecules, "isomerization N");
  app->add_option("--sigma", o.sigma, "two-state initial value");
  app->add_option("--p0", o.p0, "isomerization initial fraction");
  app->add_option("--truncate-below", o.truncate_below, "start from a truncated state space");
  app->add_option("--fixed-dt", o.fixed_dt, "fixed step size");
  app->add_option("--fixed-krylov-dim", o.fixed_krylov_dim, "fixed Krylov dimension");
  app->add_option("--s-max", o.s_max, "maximum Krylov dimension");
  app->add_flag("--dense", o.dense, "propagate with a dense exponential");
  app->add_option("--csv", o.csv, "per-step CSV output");
  app->add_option("--json", o.json, "JSON report output");
}

cli::Settings resolve(const Overrides& o, const std::string& command) {
  cli::Settings s = o.config.empty() ? cli::Settings{} : cli::load_settings(o.config);
  if (o.problem) s.problem = *o.problem;
  if (o.tol) s.controller.tol = *o.tol;
  if (o.t_final) {
    s.controller.t_final = *o.t_final;
    s.parameters.t_final.reset();
    s.t_final_given = true;
  }
  if (o.order) s.controller.order = *o.order;
  if (o.estimate) s.estimate.mode = cli::parse_estimate(*o.estimate);
  if (o.component) s.estimate.component = *o.component;
  if (o.eps_dual) s.estimate.eps_dual = *o.eps_dual;
  if (o.molecules) s.parameters.molecules = *o.molecules;
  if (o.sigma) s.parameters.sigma = *o.sigma;
  if (o.p0) s.parameters.p0 = *o.p0;
  if (o.truncate_below) s.parameters.truncate_below = *o.truncate_below;
  if (o.fixed_dt) s.controller.fixed_dt = *o.fixed_dt;
  if (o.fixed_krylov_dim) s.controller.fixed_krylov_dim = *o.fixed_krylov_dim;
  if (o.s_max) s.controller.s_max = *o.s_max;
  if (o.dense) s.controller.dense_propagator = true;
  if (o.csv) s.output.csv = *o.csv;
  if (o.json) s.output.json = *o.json;
  if (s.output.csv.empty()) s.output.csv = s.problem + "-" + command + ".csv";
  if (s.output.json.empty()) s.output.json = s.problem + "-" + command + ".json";
  cli::finalize(s);
  return s;
}

std::string with_suffix(const std::string& path, const std::string& suffix) {
  const auto dot = path.find_last_of('.');
  const auto slash = path.find_last_of('/');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
    return path + "-" + suffix;
  return path.substr(0, dot) + "-" + suffix + path.substr(dot);
}

std::string fmt(double x) { return cli::format_number(x); }

void print_summary(const cli::RunReport& r) {
  std::printf("%s %s [%s]: steps %lld (+%lld rejected), matvecs %lld + %lld dual, %.3f s\n",
              r.command.c_str(), r.problem.c_str(), cli::estimate_name(r.estimate).c_str(),
              static_cast<long long>(r.accepted_steps), static_cast<long long>(r.rejected_steps),
              static_cast<long long>(r.matvecs), static_cast<long long>(r.dual_matvecs), r.seconds);
  if (r.linf_error) std::printf("  linf error       %.3e\n", *r.linf_error);
  if (r.component_error)
    std::printf("  error comp %-6lld %.3e\n", static_cast<long long>(r.component), *r.component_error);
  if (r.e1) std::printf("  E1 (estimate)    %.3e\n", *r.e1);
  if (r.e2) std::printf("  E2 (bound)       %.3e\n", *r.e2);
  std::printf("  E3 (bound)       %.3e\n", r.e3);
}

int dispatch(const std::string& command, const Overrides& o) {
  cli::Settings s = resolve(o, command);
  if (command == "run") {
    auto r = cli::solve(s);
    cli::emit_csv(r.records, s.output.csv);
    cli::write_json(cli::to_json(r), s.output.json);
    print_summary(r);
  } else if (command == "compare-estimates") {
    auto reports = cli::compare_estimates(s);
    nlohmann::ordered_json all = nlohmann::ordered_json::array();
    for (const auto& r : reports) {
      cli::emit_csv(r.records, with_suffix(s.output.csv, cli::estimate_name(r.estimate)));
      all.push_back(cli::to_json(r));
      print_summary(r);
    }
    cli::write_json(all, s.output.json);
  } else if (command == "fsp-compare") {
    auto c = cli::fsp_compare(s);
    cli::emit_csv(c.run.records, s.output.csv);
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : c.rows)
      rows.push_back({std::to_string(r.step), fmt(r.t), fmt(r.dt), fmt(r.outflow), fmt(r.loss),
                      fmt(r.cumulative_outflow), fmt(r.cumulative_loss),
                      std::to_string(r.space_size)});
    cli::write_table(with_suffix(s.output.csv, "loss"),
                     {"step", "t", "dt", "outflow", "loss", "cumulative_outflow",
                      "cumulative_loss", "space_size"},
                     rows);
    cli::write_json(cli::to_json(c), s.output.json);
    print_summary(c.run);
    std::printf("  outflow/loss in [0.5, 5]: %lld of %lld steps; min cumulative ratio %.4f\n",
                static_cast<long long>(c.steps_in_band), static_cast<long long>(c.significant_steps),
                c.min_cumulative_ratio);
  } else if (command == "magnus-diagnostic") {
    auto d = cli::magnus_diagnostic(s);
    cli::emit_csv(d.run.records, s.output.csv);
    auto j = cli::to_json(d.run);
    j["moan_niesen"] = {{"steps_above_pi", d.steps_above_pi}, {"max", d.max_value}};
    cli::write_json(j, s.output.json);
    print_summary(d.run);
    std::printf("  Moan-Niesen value above pi in %lld accepted steps (max %.3f)\n",
                static_cast<long long>(d.steps_above_pi), d.max_value);
  } else if (command == "convergence") {
    auto study = cli::convergence(s);
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : study.rows) {
      rows.push_back({std::to_string(r.order), fmt(r.dt), std::to_string(r.steps),
                      std::to_string(r.matvecs), fmt(r.error),
                      r.observed ? fmt(*r.observed) : std::string()});
      std::printf("m=%d dt=%-8g error %.3e", r.order, r.dt, r.error);
      if (r.observed) std::printf("  order %.3f", *r.observed);
      std::printf("\n");
    }
    for (const auto& [m, q] : study.fitted_order) std::printf("fitted order m=%d: %.3f\n", m, q);
    cli::write_table(s.output.csv, {"order", "dt", "steps", "matvecs", "error", "observed_order"},
                     rows);
    auto j = cli::to_json(study);
    j["config"] = cli::to_json(s);
    cli::write_json(j, s.output.json);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive Magnus-Krylov solver for chemical master equations"};
  app.require_subcommand(1);
  Overrides o;
  std::string chosen;
  const std::pair<const char*, const char*> commands[] = {
      {"run", "one solve"},
      {"compare-estimates", "the same problem under the three estimates"},
      {"fsp-compare", "outflow estimate against loss of probability, dense propagation"},
      {"magnus-diagnostic", "Moan-Niesen value per step"},
      {"convergence", "fixed-step order study"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    add_options(sub, o);
    sub->callback([&chosen, n = std::string(name)] { chosen = n; });
  }
  app.add_subcommand("list-problems", "print the built-in problem names")
      ->callback([&chosen] { chosen = "list-problems"; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (chosen == "list-problems") {
      for (const auto& n : mastereq::problem_names()) std::cout << n << '\n';
      return 0;
    }
    return dispatch(chosen, o);
  } catch (const cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n\n" << app.help();
    return 2;
  } catch (const cli::IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return 3;
  } catch (const mastereq::Error& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return 3;
  }
}
