#include "mastereq/problems.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace mastereq {

namespace {

std::shared_ptr<const StateSpace> line_space(int n) {
  std::vector<std::vector<int>> states;
  for (int k = 0; k < n; ++k) states.push_back({k});
  return std::make_shared<const StateSpace>(1, std::move(states));
}

TimeFactor shifted_sine(double sign) { return {1.0, sign, TimeFunction::sine()}; }

}  // namespace

double two_state_first(double sigma, double t) {
  return 0.5 + 0.2 * std::cos(t) - 0.4 * std::sin(t) + (sigma - 0.7) * std::exp(-2.0 * t);
}

BenchmarkProblem two_state(double sigma) {
  if (!(sigma >= 0.0 && sigma <= 1.0)) throw ModelError("two-state: sigma must lie in [0, 1]");
  auto space = line_space(2);
  SparseMatrix ac = SparseMatrix::from_triplets(2, 2, {{0, 0, -1}, {1, 0, 1}, {0, 1, 1}, {1, 1, -1}});
  SparseMatrix a1 =
      SparseMatrix::from_triplets(2, 2, {{0, 0, -1}, {1, 0, 1}, {0, 1, -1}, {1, 1, 1}});
  PropensityModel model(ac, {a1}, {TimeFunction::sine()}, space);

  BenchmarkProblem p;
  p.name = "two-state";
  p.model = model;
  p.full_model = model;
  p.initial = {sigma, 1.0 - sigma};
  p.full_initial = p.initial;
  p.t_final = 10.0;
  p.analytic = [sigma](double t) {
    double x = two_state_first(sigma, t);
    return Vector{x, 1.0 - x};
  };
  p.default_component = 0;
  return p;
}

Vector binomial_pmf(int n, double p) {
  if (n < 0) throw ModelError("binomial: negative trial count");
  if (!(p >= 0.0 && p <= 1.0)) throw ModelError("binomial: probability outside [0, 1]");
  Vector out(static_cast<std::size_t>(n) + 1, 0.0);
  if (p == 0.0 || p == 1.0) {
    out[p == 0.0 ? 0 : static_cast<std::size_t>(n)] = 1.0;
    return out;
  }
  const double lp = std::log(p), lq = std::log1p(-p);
  const double lgn = std::lgamma(n + 1.0);
  for (int k = 0; k <= n; ++k)
    out[static_cast<std::size_t>(k)] =
        std::exp(lgn - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) + k * lp + (n - k) * lq);
  return out;
}

BenchmarkProblem isomerization(const IsomerizationOptions& o) {
  if (o.molecules < 1) throw ModelError("isomerization: need at least one molecule");
  if (!(o.p0 >= 0.0 && o.p0 <= 1.0)) throw ModelError("isomerization: p0 outside [0, 1]");
  const int n = o.molecules;

  ReactionNetwork net;
  net.species = {"X", "Y"};
  Channel forward{"X->Y", {-1, 1}, {RateLaw::Kind::Linear, 1.0, 0}, TimeFactor::constant()};
  Channel backward{"Y->X", {1, -1}, {RateLaw::Kind::Linear, 1.0, 1}, TimeFactor::constant()};
  if (o.time_varying) {
    forward.factor = shifted_sine(1.0);
    backward.factor = shifted_sine(-1.0);
  }
  net.channels = {forward, backward};

  Lattice lattice{{0, 0}, {n, n}, std::vector<int>{1, 1}, n};
  auto full = std::make_shared<const StateSpace>(
      enumerate_states(net, {{n, 0}}, lattice));

  BenchmarkProblem p;
  p.name = o.time_varying ? "isomerization" : "isomerization-const";
  p.full_model = assemble(net, full);
  p.full_initial = binomial_pmf(n, o.p0);
  p.t_final = 10.0;
  const double sigma = o.p0;
  p.analytic = [n, sigma, tv = o.time_varying](double t) {
    // constant rates: dp/dt = 1 - 2p
    double x = tv ? two_state_first(sigma, t) : 0.5 + (sigma - 0.5) * std::exp(-2.0 * t);
    return binomial_pmf(n, std::clamp(x, 0.0, 1.0));
  };
  p.default_component = o.time_varying ? 1150 : 1050;
  if (*p.default_component > n) p.default_component = n / 2;

  if (!o.truncate_below) {
    p.model = p.full_model;
    p.initial = p.full_initial;
    return p;
  }
  std::vector<std::vector<int>> kept;
  double outside = 0.0;
  for (Index k = 0; k < full->size(); ++k) {
    double v = p.full_initial[static_cast<std::size_t>(k)];
    auto s = full->state(k);
    if (v >= *o.truncate_below)
      kept.emplace_back(s.begin(), s.end());
    else
      outside += v;
  }
  if (kept.empty()) throw ModelError("isomerization: truncation removes every state");
  auto start = std::make_shared<const StateSpace>(2, std::move(kept));
  p.projection.emplace(net, lattice, start);
  p.model = p.projection->assemble();
  p.initial = embed(p.full_initial, *full, *start);
  p.initial_truncation = outside;
  return p;
}

ReactionNetwork tcell_network(const TcellOptions& o) {
  TimeFactor hill{0.0, 1.0, TimeFunction::hill(o.hill_half_time, o.hill_exponent)};
  ReactionNetwork net;
  net.species = {"n", "n'"};
  RateLaw birth{RateLaw::Kind::Saturating, 30.0, 0, 1, 0, 1000.0};
  RateLaw birth_primed{RateLaw::Kind::Saturating, 30.0, 1, 0, 1, 1000.0};
  if (o.literal_primed_rate) birth_primed.multiplier = 0;
  net.channels = {
      {"death", {-1, 0}, {RateLaw::Kind::Linear, 1.0, 0}, TimeFactor::constant()},
      {"death'", {0, -1}, {RateLaw::Kind::Linear, 1.0, 1}, TimeFactor::constant()},
      {"birth", {1, 0}, birth, hill},
      {"birth'", {0, 1}, birth_primed, hill},
  };
  return net;
}

BenchmarkProblem tcell(const TcellOptions& o) {
  if (o.start_upper < 10 || o.universe_upper < o.start_upper)
    throw ModelError("tcell: need 10 <= start_upper <= universe_upper");
  ReactionNetwork net = tcell_network(o);
  Lattice universe{{0, 0}, {o.universe_upper, o.universe_upper}, std::nullopt, 0};
  Lattice start_box{{0, 0}, {o.start_upper, o.start_upper}, std::nullopt, 0};
  const std::vector<int> origin{10, 10};
  auto full = std::make_shared<const StateSpace>(enumerate_states(net, {origin}, universe));
  auto start = std::make_shared<const StateSpace>(enumerate_states(net, {origin}, start_box));

  BenchmarkProblem p;
  p.name = "tcell";
  p.t_final = o.t_final;
  p.full_model = assemble(net, full);
  p.full_initial.assign(static_cast<std::size_t>(full->size()), 0.0);
  p.full_initial[static_cast<std::size_t>(*full->find(origin))] = 1.0;
  p.projection.emplace(net, universe, start);
  p.model = p.projection->assemble();
  p.initial.assign(static_cast<std::size_t>(start->size()), 0.0);
  p.initial[static_cast<std::size_t>(*start->find(origin))] = 1.0;
  p.default_component = *full->find(origin);
  return p;
}

Vector tcell_fixed_step(const TcellOptions& o, double dt) {
  BenchmarkProblem p = tcell(o);
  ControllerConfig cfg;
  cfg.t_final = p.t_final;
  cfg.tol = 1e-10;
  cfg.krylov_factor = 1.0;
  cfg.order = 4;
  cfg.s_max = 40;
  cfg.fixed_dt = dt;
  cfg.dt_initial = dt;
  cfg.dt_min = std::min(cfg.dt_min, dt);
  cfg.moan_niesen = false;
  return run(System{p.full_model, std::nullopt, p.full_initial}, cfg).solution;
}

Vector tcell_reference(const TcellOptions& o, double dt, const std::filesystem::path& cache) {
  std::ostringstream key;
  key << std::setprecision(17) << "tcell-reference v1 dt=" << dt << " t_final=" << o.t_final
      << " universe=" << o.universe_upper << " literal=" << o.literal_primed_rate
      << " hill=" << o.hill_half_time << "," << o.hill_exponent;
  if (!cache.empty()) {
    std::ifstream in(cache);
    std::string header;
    if (in && std::getline(in, header) && header == key.str()) {
      Vector v;
      double x;
      while (in >> x) v.push_back(x);
      const auto expected = static_cast<std::size_t>(o.universe_upper + 1) *
                            static_cast<std::size_t>(o.universe_upper + 1);
      if (v.size() == expected) return v;
    }
  }
  Vector v = tcell_fixed_step(o, dt);
  if (!cache.empty()) {
    if (cache.has_parent_path()) std::filesystem::create_directories(cache.parent_path());
    std::ofstream out(cache);
    if (!out) throw Error("cannot write reference cache " + cache.string());
    out << key.str() << '\n' << std::setprecision(17);
    for (double x : v) out << x << '\n';
  }
  return v;
}

BenchmarkProblem network_problem(const std::string& name, const ReactionNetwork& network,
                                 const Lattice& lattice, const InitialMass& initial,
                                 double t_final) {
  if (initial.empty()) throw ModelError("network problem: no initial states");
  if (!(t_final > 0.0)) throw ModelError("network problem: t_final must be positive");
  std::vector<std::vector<int>> seeds;
  for (const auto& [state, mass] : initial) {
    if (!(mass >= 0.0)) throw ModelError("network problem: negative initial probability");
    seeds.push_back(state);
  }
  auto space = std::make_shared<const StateSpace>(enumerate_states(network, seeds, lattice));
  BenchmarkProblem p;
  p.name = name;
  p.t_final = t_final;
  p.model = assemble(network, space);
  p.full_model = p.model;
  p.initial.assign(static_cast<std::size_t>(space->size()), 0.0);
  for (const auto& [state, mass] : initial)
    p.initial[static_cast<std::size_t>(*space->find(state))] += mass;
  p.full_initial = p.initial;
  p.default_component = *space->find(initial.front().first);
  return p;
}

std::vector<std::string> problem_names() {
  return {"two-state", "isomerization", "isomerization-const", "tcell"};
}

BenchmarkProblem make_problem(const std::string& name, const ProblemParameters& prm) {
  BenchmarkProblem p;
  if (name == "two-state") {
    p = two_state(prm.sigma);
  } else if (name == "isomerization" || name == "isomerization-const") {
    p = isomerization({prm.molecules, prm.p0, name == "isomerization", prm.truncate_below});
  } else if (name == "tcell") {
    TcellOptions o;
    o.literal_primed_rate = prm.literal_primed_rate;
    if (prm.t_final) o.t_final = *prm.t_final;
    p = tcell(o);
  } else {
    throw ModelError("unknown problem '" + name + "'");
  }
  if (prm.t_final) p.t_final = *prm.t_final;
  return p;
}

}  // namespace mastereq
