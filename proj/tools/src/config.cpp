#include "mastereq_cli/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace mastereq::cli {

namespace {

void check_keys(const YAML::Node& node, const std::string& table,
                const std::set<std::string>& allowed) {
  if (!node.IsMap()) throw ConfigError("'" + table + "' must be a table");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.contains(key)) throw ConfigError("unknown key '" + table + "." + key + "'");
  }
}

template <typename T>
void read(const YAML::Node& node, const char* key, T& out, const std::string& table) {
  if (!node[key]) return;
  try {
    out = node[key].as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError("bad value for '" + table + "." + key + "'");
  }
}

template <typename T>
void read(const YAML::Node& node, const char* key, std::optional<T>& out,
          const std::string& table) {
  if (!node[key]) return;
  T v{};
  read(node, key, v, table);
  out = v;
}

RateLaw parse_rate(const YAML::Node& n, const std::string& where) {
  check_keys(n, where, {"kind", "coefficient", "species", "other", "multiplier", "saturation"});
  RateLaw r;
  std::string kind = "linear";
  read(n, "kind", kind, where);
  if (kind == "constant") {
    r.kind = RateLaw::Kind::Constant;
  } else if (kind == "linear") {
    r.kind = RateLaw::Kind::Linear;
  } else if (kind == "bimolecular") {
    r.kind = RateLaw::Kind::Bimolecular;
  } else if (kind == "saturating") {
    r.kind = RateLaw::Kind::Saturating;
  } else {
    throw ConfigError("unknown rate kind '" + kind + "' in " + where);
  }
  read(n, "coefficient", r.coefficient, where);
  read(n, "species", r.species_a, where);
  read(n, "other", r.species_b, where);
  read(n, "multiplier", r.multiplier, where);
  read(n, "saturation", r.saturation, where);
  return r;
}

NetworkSpec parse_network(const YAML::Node& n) {
  check_keys(n, "network", {"species", "channels", "lower", "upper", "conservation", "initial"});
  NetworkSpec spec;
  read(n, "species", spec.network.species, "network");
  const int dim = spec.network.dimension();
  if (dim == 0) throw ConfigError("network.species is empty");
  auto check_dim = [dim](const std::vector<int>& v, const std::string& what) {
    if (static_cast<int>(v.size()) != dim)
      throw ConfigError(what + " needs one entry per species");
  };
  if (!n["channels"] || !n["channels"].IsSequence())
    throw ConfigError("network.channels must be a list");
  for (std::size_t i = 0; i < n["channels"].size(); ++i) {
    const YAML::Node c = n["channels"][i];
    const std::string where = "network.channels[" + std::to_string(i) + "]";
    check_keys(c, where, {"name", "change", "rate", "factor"});
    Channel ch;
    ch.name = "channel" + std::to_string(i);
    read(c, "name", ch.name, where);
    read(c, "change", ch.change, where);
    check_dim(ch.change, where + ".change");
    if (!c["rate"]) throw ConfigError(where + ".rate is missing");
    ch.rate = parse_rate(c["rate"], where + ".rate");
    const int ids[] = {ch.rate.species_a, ch.rate.species_b, ch.rate.multiplier};
    for (int id : ids)
      if (id >= dim) throw ConfigError(where + ".rate refers to a missing species");
    ch.factor = TimeFactor::constant();
    if (auto f = c["factor"]) {
      check_keys(f, where + ".factor", {"offset", "scale", "function"});
      read(f, "offset", ch.factor.offset, where + ".factor");
      read(f, "scale", ch.factor.scale, where + ".factor");
      if (f["function"]) {
        std::string fn;
        read(f, "function", fn, where + ".factor");
        try {
          ch.factor.basis = TimeFunction::by_name(fn);
        } catch (const ModelError& e) {
          throw ConfigError(e.what());
        }
      }
    }
    spec.network.channels.push_back(std::move(ch));
  }
  read(n, "lower", spec.lattice.lower, "network");
  read(n, "upper", spec.lattice.upper, "network");
  if (!spec.lattice.lower.empty()) check_dim(spec.lattice.lower, "network.lower");
  if (!spec.lattice.upper.empty()) check_dim(spec.lattice.upper, "network.upper");
  if (auto c = n["conservation"]) {
    check_keys(c, "network.conservation", {"weights", "total"});
    std::vector<int> w;
    read(c, "weights", w, "network.conservation");
    check_dim(w, "network.conservation.weights");
    spec.lattice.conservation_weights = w;
    read(c, "total", spec.lattice.conservation_total, "network.conservation");
  }
  if (!n["initial"] || !n["initial"].IsSequence() || n["initial"].size() == 0)
    throw ConfigError("network.initial must be a nonempty list");
  for (std::size_t i = 0; i < n["initial"].size(); ++i) {
    const YAML::Node e = n["initial"][i];
    const std::string where = "network.initial[" + std::to_string(i) + "]";
    check_keys(e, where, {"state", "probability"});
    std::vector<int> state;
    double mass = 1.0;
    read(e, "state", state, where);
    check_dim(state, where + ".state");
    read(e, "probability", mass, where);
    spec.initial.emplace_back(state, mass);
  }
  return spec;
}

Settings from_yaml(const YAML::Node& root) {
  Settings s;
  if (!root || root.IsNull()) return s;
  check_keys(root, "<root>",
             {"problem", "controller", "estimate", "output", "convergence", "network"});
  if (auto n = root["network"]) s.network = parse_network(n);

  if (auto n = root["problem"]) {
    check_keys(n, "problem",
               {"name", "sigma", "molecules", "p0", "truncate_below", "t_final",
                "literal_primed_rate"});
    read(n, "name", s.problem, "problem");
    read(n, "sigma", s.parameters.sigma, "problem");
    read(n, "molecules", s.parameters.molecules, "problem");
    read(n, "p0", s.parameters.p0, "problem");
    read(n, "truncate_below", s.parameters.truncate_below, "problem");
    read(n, "t_final", s.parameters.t_final, "problem");
    read(n, "literal_primed_rate", s.parameters.literal_primed_rate, "problem");
  }

  if (auto n = root["controller"]) {
    check_keys(n, "controller",
               {"tol", "t_final", "order", "s_max", "reduce_period", "dt_initial", "dt_min",
                "dt_max", "safety", "classical_exponent", "magnus_reject_factor",
                "max_expansions", "shrink_factor", "drop_budget_fraction", "krylov_factor",
                "fixed_dt", "fixed_krylov_dim", "dense_propagator", "dense_max_order",
                "quadrature_points", "moan_niesen"});
    auto& c = s.controller;
    const std::string t = "controller";
    read(n, "tol", c.tol, t);
    if (n["t_final"]) {
      read(n, "t_final", c.t_final, t);
      s.t_final_given = true;
    }
    read(n, "order", c.order, t);
    read(n, "s_max", c.s_max, t);
    read(n, "reduce_period", c.reduce_period, t);
    read(n, "dt_initial", c.dt_initial, t);
    read(n, "dt_min", c.dt_min, t);
    read(n, "dt_max", c.dt_max, t);
    read(n, "safety", c.safety, t);
    read(n, "classical_exponent", c.classical_exponent, t);
    read(n, "magnus_reject_factor", c.magnus_reject_factor, t);
    read(n, "max_expansions", c.max_expansions, t);
    read(n, "shrink_factor", c.shrink_factor, t);
    read(n, "drop_budget_fraction", c.drop_budget_fraction, t);
    read(n, "krylov_factor", c.krylov_factor, t);
    read(n, "fixed_dt", c.fixed_dt, t);
    read(n, "fixed_krylov_dim", c.fixed_krylov_dim, t);
    read(n, "dense_propagator", c.dense_propagator, t);
    read(n, "dense_max_order", c.dense_max_order, t);
    read(n, "quadrature_points", c.quadrature_points, t);
    read(n, "moan_niesen", c.moan_niesen, t);
  }

  if (auto n = root["estimate"]) {
    check_keys(n, "estimate", {"mode", "component", "eps_dual"});
    if (n["mode"]) {
      std::string mode;
      read(n, "mode", mode, "estimate");
      s.estimate.mode = parse_estimate(mode);
    }
    read(n, "component", s.estimate.component, "estimate");
    read(n, "eps_dual", s.estimate.eps_dual, "estimate");
  }

  if (auto n = root["output"]) {
    check_keys(n, "output", {"csv", "json"});
    read(n, "csv", s.output.csv, "output");
    read(n, "json", s.output.json, "output");
  }

  if (auto n = root["convergence"]) {
    check_keys(n, "convergence", {"dts", "orders"});
    read(n, "dts", s.convergence.dts, "convergence");
    read(n, "orders", s.convergence.orders, "convergence");
  }
  return s;
}

nlohmann::ordered_json number_or_null(std::optional<double> v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

EstimateMode parse_estimate(const std::string& name) {
  std::string n = name;
  std::transform(n.begin(), n.end(), n.begin(), [](unsigned char c) { return std::tolower(c); });
  if (n == "primal-only" || n == "e3") return EstimateMode::E3;
  if (n == "dual-norm" || n == "e2") return EstimateMode::E2;
  if (n == "dual" || n == "e1") return EstimateMode::E1;
  throw ConfigError("unknown estimate mode '" + name +
                    "' (expected primal-only, dual-norm or dual)");
}

std::string estimate_name(EstimateMode mode) {
  switch (mode) {
    case EstimateMode::E1:
      return "dual";
    case EstimateMode::E2:
      return "dual-norm";
    case EstimateMode::E3:
      return "primal-only";
  }
  return "primal-only";
}

Settings parse_settings(const std::string& yaml_text) {
  try {
    return from_yaml(YAML::Load(yaml_text));
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
}

Settings load_settings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_settings(text.str());
}

void finalize(Settings& s) {
  const auto names = problem_names();
  if (s.problem == "custom") {
    if (!s.network) throw ConfigError("problem 'custom' needs a network table");
  } else if (std::find(names.begin(), names.end(), s.problem) == names.end()) {
    throw ConfigError("unknown problem '" + s.problem + "'");
  }
  if (!s.t_final_given) {
    if (s.parameters.t_final) {
      s.controller.t_final = *s.parameters.t_final;
    } else {
      s.controller.t_final = s.problem == "tcell" ? TcellOptions{}.t_final : 10.0;
    }
  }
  s.parameters.t_final = s.controller.t_final;
  if (s.controller.fixed_dt) {
    s.controller.dt_initial = std::min(*s.controller.fixed_dt, s.controller.t_final);
    s.controller.dt_min = std::min(s.controller.dt_min, s.controller.dt_initial);
  }
  if (s.parameters.molecules < 1) throw ConfigError("problem.molecules must be positive");
  if (s.parameters.sigma < 0.0 || s.parameters.sigma > 1.0)
    throw ConfigError("problem.sigma must lie in [0, 1]");
  if (s.parameters.p0 < 0.0 || s.parameters.p0 > 1.0)
    throw ConfigError("problem.p0 must lie in [0, 1]");
  if (s.estimate.component && *s.estimate.component < 0)
    throw ConfigError("estimate.component must be nonnegative");
  if (s.convergence.dts.empty()) throw ConfigError("convergence.dts is empty");
  for (int m : s.convergence.orders)
    if (m != 2 && m != 4) throw ConfigError("convergence.orders entries must be 2 or 4");
  try {
    s.controller.validate();
  } catch (const ModelError& e) {
    throw ConfigError(e.what());
  }
}

nlohmann::ordered_json to_json(const Settings& s) {
  const auto& c = s.controller;
  nlohmann::ordered_json j;
  j["problem"] = {{"name", s.problem},
                  {"sigma", s.parameters.sigma},
                  {"molecules", s.parameters.molecules},
                  {"p0", s.parameters.p0},
                  {"truncate_below", number_or_null(s.parameters.truncate_below)},
                  {"t_final", number_or_null(s.parameters.t_final)},
                  {"literal_primed_rate", s.parameters.literal_primed_rate}};
  j["controller"] = {{"tol", c.tol},
                     {"t_final", c.t_final},
                     {"order", c.order},
                     {"s_max", c.s_max},
                     {"reduce_period", c.reduce_period},
                     {"dt_initial", c.dt_initial},
                     {"dt_min", c.dt_min},
                     {"dt_max", c.effective_dt_max()},
                     {"safety", c.safety},
                     {"classical_exponent", c.classical_exponent},
                     {"magnus_reject_factor", c.magnus_reject_factor},
                     {"max_expansions", c.max_expansions},
                     {"shrink_factor", c.shrink_factor},
                     {"drop_budget_fraction", c.drop_budget_fraction},
                     {"krylov_factor", c.krylov_factor},
                     {"fixed_dt", number_or_null(c.fixed_dt)},
                     {"fixed_krylov_dim", c.fixed_krylov_dim},
                     {"dense_propagator", c.dense_propagator},
                     {"dense_max_order", c.dense_max_order},
                     {"quadrature_points", c.quadrature_points},
                     {"moan_niesen", c.moan_niesen}};
  j["estimate"] = {{"mode", estimate_name(s.estimate.mode)},
                   {"component", s.estimate.component ? nlohmann::ordered_json(*s.estimate.component)
                                                      : nlohmann::ordered_json(nullptr)},
                   {"eps_dual", s.estimate.eps_dual > 0.0 ? s.estimate.eps_dual
                                                          : 10.0 * c.tol}};
  if (s.network) {
    nlohmann::ordered_json channels = nlohmann::ordered_json::array();
    for (const auto& ch : s.network->network.channels)
      channels.push_back({{"name", ch.name},
                          {"change", ch.change},
                          {"rate_kind", static_cast<int>(ch.rate.kind)},
                          {"coefficient", ch.rate.coefficient},
                          {"factor_offset", ch.factor.offset},
                          {"factor_scale", ch.factor.scale},
                          {"factor_function", ch.factor.basis ? ch.factor.basis->name() : ""}});
    nlohmann::ordered_json initial = nlohmann::ordered_json::array();
    for (const auto& [state, mass] : s.network->initial)
      initial.push_back({{"state", state}, {"probability", mass}});
    j["network"] = {{"species", s.network->network.species},
                    {"channels", channels},
                    {"lower", s.network->lattice.lower},
                    {"upper", s.network->lattice.upper},
                    {"initial", initial}};
  }
  j["output"] = {{"csv", s.output.csv}, {"json", s.output.json}};
  j["convergence"] = {{"dts", s.convergence.dts}, {"orders", s.convergence.orders}};
  return j;
}

BenchmarkProblem build_problem(const Settings& s) {
  if (s.problem != "custom") return make_problem(s.problem, s.parameters);
  if (!s.network) throw ConfigError("problem 'custom' needs a network table");
  try {
    return network_problem("custom", s.network->network, s.network->lattice, s.network->initial,
                           s.controller.t_final);
  } catch (const ModelError& e) {
    throw ConfigError(std::string("network: ") + e.what());
  }
}

}  // namespace mastereq::cli
