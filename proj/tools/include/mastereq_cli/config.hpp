#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mastereq/controller.hpp"
#include "mastereq/problems.hpp"

namespace mastereq::cli {

/// Malformed configuration or flags. Maps to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Output file failure. Maps to exit code 3.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EstimateSettings {
  EstimateMode mode = EstimateMode::E3;
  std::optional<Index> component;
  /// Non-positive means 10 * tol.
  double eps_dual = 0.0;
};

struct OutputSettings {
  std::string csv;
  std::string json;
};

struct ConvergenceSettings {
  std::vector<double> dts{0.2, 0.1, 0.05, 0.025};
  std::vector<int> orders{2, 4};
};

/// Network read from the `network` table; used with problem name "custom".
struct NetworkSpec {
  ReactionNetwork network;
  Lattice lattice;
  InitialMass initial;
};

struct Settings {
  std::string problem = "two-state";
  ProblemParameters parameters;
  std::optional<NetworkSpec> network;
  ControllerConfig controller;
  /// Set when the controller t_final came from the file or a flag.
  bool t_final_given = false;
  EstimateSettings estimate;
  OutputSettings output;
  ConvergenceSettings convergence;
};

/// "primal-only"/"E3", "dual-norm"/"E2", "dual"/"E1".
EstimateMode parse_estimate(const std::string& name);
std::string estimate_name(EstimateMode mode);

/// Reads a YAML file with the tables problem, controller, estimate, output
/// and convergence. Unknown keys are rejected.
Settings load_settings(const std::filesystem::path& path);
Settings parse_settings(const std::string& yaml_text);

/// Fills t_final from the problem when it was not given and checks the
/// result.
void finalize(Settings& settings);

nlohmann::ordered_json to_json(const Settings& settings);

/// The problem named in the settings, or the custom network.
BenchmarkProblem build_problem(const Settings& settings);

}  // namespace mastereq::cli
