#include "mastereq/fsp.hpp"

#include <cmath>
#include <sstream>

namespace mastereq {

namespace {

bool jump(std::span<const int> x, const std::vector<int>& change, std::vector<int>& out) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = x[i] + change[i];
    if (out[i] < 0) return false;
  }
  return true;
}

}  // namespace

StateProjection::StateProjection(ReactionNetwork network, Lattice universe,
                                 std::shared_ptr<const StateSpace> space, Index cap)
    : network_(std::make_shared<const ReactionNetwork>(std::move(network))),
      universe_(std::move(universe)),
      space_(std::move(space)),
      cap_(cap) {
  if (!space_) throw ModelError("state projection needs a state space");
  if (space_->dimension() != network_->dimension())
    throw DimensionError("state projection: space and network dimensions differ");
  if (space_->size() > cap_)
    throw ModelError("state projection exceeds the cap of " + std::to_string(cap_) + " states");
}

StateProjection StateProjection::with_space(std::shared_ptr<const StateSpace> space,
                                            double extra_dropped) const {
  StateProjection copy = *this;
  if (space->size() > cap_)
    throw ModelError("state projection exceeds the cap of " + std::to_string(cap_) + " states");
  copy.space_ = std::move(space);
  copy.dropped_mass_ += extra_dropped;
  return copy;
}

std::vector<std::pair<std::vector<int>, double>> StateProjection::exit_flux(
    std::span<const double> p, double t) const {
  std::vector<std::pair<std::vector<int>, double>> out;
  std::vector<int> next(static_cast<std::size_t>(network_->dimension()));
  for (Index j = 0; j < space_->size(); ++j) {
    const double pj = p[static_cast<std::size_t>(j)];
    if (pj == 0.0) continue;
    auto x = space_->state(j);
    for (const auto& ch : network_->channels) {
      if (!jump(x, ch.change, next) || space_->contains(next)) continue;
      const double rate = ch.rate(x) * ch.factor(t);
      if (rate != 0.0) out.emplace_back(next, rate * pj);
    }
  }
  return out;
}

std::pair<double, double> StateProjection::split_outflow_rate(std::span<const double> p,
                                                             double t) const {
  double inside = 0.0, outside = 0.0;
  std::vector<int> next(static_cast<std::size_t>(network_->dimension()));
  for (Index j = 0; j < space_->size(); ++j) {
    const double pj = std::abs(p[static_cast<std::size_t>(j)]);
    if (pj == 0.0) continue;
    auto x = space_->state(j);
    for (const auto& ch : network_->channels) {
      if (!jump(x, ch.change, next) || space_->contains(next)) continue;
      const double rate = ch.rate(x) * ch.factor(t) * pj;
      (universe_.contains(next) ? inside : outside) += rate;
    }
  }
  return {inside, outside};
}

double outflow_rate(const PropensityModel& model, std::span<const double> p, double t) {
  if (static_cast<Index>(p.size()) != model.size())
    throw DimensionError("outflow rate: vector size differs from model");
  const Vector sums = model.column_sums_at(t);
  double rate = 0.0;
  for (std::size_t j = 0; j < sums.size(); ++j) rate -= sums[j] * std::abs(p[j]);
  if (rate < -1e-12) {
    std::ostringstream msg;
    msg << "outflow rate is negative (" << rate << "): generator has positive column sums";
    throw NumericalError(msg.str());
  }
  return std::max(rate, 0.0);
}

double step_outflow_estimate(const PropensityModel& model, std::span<const double> p_n,
                             std::span<const double> p_next, double t, double dt) {
  if (p_n.size() != p_next.size()) throw DimensionError("outflow estimate: size mismatch");
  Vector mid(p_n.size());
  for (std::size_t i = 0; i < mid.size(); ++i) mid[i] = 0.5 * (p_n[i] + p_next[i]);
  return dt * outflow_rate(model, mid, t + 0.5 * dt);
}

StateProjection expand(const StateProjection& projection) {
  const StateSpace& space = *projection.space();
  const auto& network = projection.network();
  std::vector<std::vector<int>> states = space.states();
  std::unordered_map<std::vector<int>, bool, StateHash> added;
  std::vector<int> next(static_cast<std::size_t>(network.dimension()));
  for (Index j = 0; j < space.size(); ++j) {
    auto x = space.state(j);
    for (const auto& ch : network.channels) {
      if (!jump(x, ch.change, next)) continue;
      if (!projection.universe().contains(next) || space.contains(next)) continue;
      if (ch.rate(x) == 0.0 || added.contains(next)) continue;
      added.emplace(next, true);
      states.push_back(next);
    }
  }
  if (added.empty()) return projection;
  if (static_cast<Index>(states.size()) > projection.cap())
    throw ModelError("state projection exceeds the cap of " + std::to_string(projection.cap()) +
                     " states");
  return projection.with_space(
      std::make_shared<const StateSpace>(space.dimension(), std::move(states)), 0.0);
}

ShrinkResult shrink(const StateProjection& projection, std::span<const double> p,
                    double threshold) {
  const StateSpace& space = *projection.space();
  if (static_cast<Index>(p.size()) != space.size())
    throw DimensionError("shrink: vector size differs from the projection");
  if (threshold < 0.0) throw ModelError("shrink: negative threshold");
  const auto& network = projection.network();
  const auto n = static_cast<std::size_t>(space.size());
  std::vector<char> keep(n, 0);
  std::vector<int> next(static_cast<std::size_t>(network.dimension()));
  for (std::size_t j = 0; j < n; ++j) {
    if (!(p[j] >= threshold)) continue;
    keep[j] = 1;
    auto x = space.state(static_cast<Index>(j));
    for (const auto& ch : network.channels) {
      if (!jump(x, ch.change, next) || ch.rate(x) == 0.0) continue;
      if (auto k = space.find(next)) keep[static_cast<std::size_t>(*k)] = 1;
    }
  }

  ShrinkResult out{projection, Vector(p.begin(), p.end()), Vector(n, 0.0), 0.0, false};
  std::vector<std::vector<int>> kept;
  for (std::size_t j = 0; j < n; ++j) {
    if (keep[j]) {
      kept.push_back(space.states()[j]);
    } else {
      out.dropped[j] = p[j];
      out.dropped_mass += std::abs(p[j]);
    }
  }
  if (kept.size() == n || kept.empty()) {
    std::fill(out.dropped.begin(), out.dropped.end(), 0.0);
    out.dropped_mass = 0.0;
    return out;
  }
  auto new_space = std::make_shared<const StateSpace>(space.dimension(), std::move(kept));
  out.p = embed(p, space, *new_space);
  out.projection = projection.with_space(new_space, out.dropped_mass);
  out.changed = true;
  return out;
}

double probability_loss(std::span<const double> p) { return 1.0 - accurate_sum(p); }

std::vector<Index> index_map(const StateSpace& from, const StateSpace& to) {
  std::vector<Index> map(static_cast<std::size_t>(from.size()), -1);
  for (Index i = 0; i < from.size(); ++i)
    if (auto k = to.find(from.state(i))) map[static_cast<std::size_t>(i)] = *k;
  return map;
}

Vector embed(std::span<const double> p, const StateSpace& from, const StateSpace& to) {
  if (static_cast<Index>(p.size()) != from.size())
    throw DimensionError("embed: vector size differs from the source space");
  Vector out(static_cast<std::size_t>(to.size()), 0.0);
  auto map = index_map(from, to);
  for (std::size_t i = 0; i < map.size(); ++i)
    if (map[i] >= 0) out[static_cast<std::size_t>(map[i])] = p[i];
  return out;
}

}  // namespace mastereq
