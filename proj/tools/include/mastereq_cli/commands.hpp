#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mastereq/problems.hpp"
#include "mastereq_cli/config.hpp"

namespace mastereq::cli {

struct RunReport {
  std::string command;
  std::string problem;
  nlohmann::ordered_json config;
  EstimateMode estimate = EstimateMode::E3;
  /// Final-time l-infinity error against the closed form, when known.
  std::optional<double> linf_error;
  Index component = 0;
  std::optional<double> component_error;
  std::optional<double> e1;
  std::optional<double> e2;
  double e3 = 0.0;
  double component_bound = 0.0;
  Index matvecs = 0;
  Index dual_matvecs = 0;
  Index dual_steps = 0;
  Index accepted_steps = 0;
  Index rejected_steps = 0;
  Index max_space_size = 0;
  Index final_space_size = 0;
  double final_mass = 0.0;
  double seconds = 0.0;
  std::vector<StepRecord> records;
  /// Solution and closed form on the full index set (closed form may be empty).
  Vector solution;
  Vector exact;
};

nlohmann::ordered_json to_json(const RunReport& report);

/// One solve. The problem is passed in so several solves can share it.
RunReport solve(const BenchmarkProblem& problem, const Settings& settings,
                const std::string& command = "run");
RunReport solve(const Settings& settings);

/// The same problem under E3, E2 and E1 control.
std::vector<RunReport> compare_estimates(const Settings& settings);

struct FspRow {
  Index step = 0;
  double t = 0.0;
  double dt = 0.0;
  double outflow = 0.0;
  double loss = 0.0;
  double cumulative_outflow = 0.0;
  double cumulative_loss = 0.0;
  Index space_size = 0;
};

struct FspComparison {
  RunReport run;
  std::vector<FspRow> rows;
  /// Steps where the outflow estimate or the loss exceeds the noise floor.
  Index significant_steps = 0;
  /// Significant steps with outflow / loss in [0.5, 5].
  Index steps_in_band = 0;
  /// Smallest cumulative outflow / cumulative loss over steps with loss.
  double min_cumulative_ratio = 0.0;
};

inline constexpr double kFspNoiseFloor = 1e-12;

/// Exact dense propagation on a truncated problem; compares the outflow
/// estimate with the realised loss of probability step by step.
FspComparison fsp_compare(const Settings& settings);
nlohmann::ordered_json to_json(const FspComparison& comparison);

struct MagnusDiagnostic {
  RunReport run;
  Index steps_above_pi = 0;
  double max_value = 0.0;
};

MagnusDiagnostic magnus_diagnostic(const Settings& settings);

struct ConvergenceRow {
  int order = 2;
  double dt = 0.0;
  Index steps = 0;
  Index matvecs = 0;
  double error = 0.0;
  /// Observed order against the previous (coarser) step size.
  std::optional<double> observed;
};

struct ConvergenceStudy {
  std::vector<ConvergenceRow> rows;
  /// Least-squares slope of log(error) against log(dt), per order.
  std::map<int, double> fitted_order;
};

ConvergenceStudy convergence(const Settings& settings);
nlohmann::ordered_json to_json(const ConvergenceStudy& study);

/// Writes a JSON document; throws IoError.
void write_json(const nlohmann::ordered_json& j, const std::filesystem::path& path);

}  // namespace mastereq::cli
