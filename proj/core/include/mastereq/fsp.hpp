#pragma once

#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "mastereq/model.hpp"

namespace mastereq {

/// The kept index set I1 of a finite state projection together with the
/// network it was built from and the admissible universe it may grow into.
class StateProjection {
 public:
  StateProjection(ReactionNetwork network, Lattice universe,
                  std::shared_ptr<const StateSpace> space, Index cap = kDefaultStateCap);

  const std::shared_ptr<const StateSpace>& space() const { return space_; }
  const ReactionNetwork& network() const { return *network_; }
  const Lattice& universe() const { return universe_; }
  Index cap() const { return cap_; }
  Index size() const { return space_->size(); }

  /// Total l1 mass removed by shrink operations so far.
  double dropped_mass() const { return dropped_mass_; }

  PropensityModel assemble() const { return mastereq::assemble(*network_, space_); }

  /// Flux A_R(t) p leaving I1, as (target state, rate) pairs.
  std::vector<std::pair<std::vector<int>, double>> exit_flux(std::span<const double> p,
                                                             double t) const;

  /// Outflow rate sum_j |p_j| * (rates leaving I1) split into the part that
  /// lands inside the universe (and can be recovered by expansion) and the
  /// part that leaves the universe.
  std::pair<double, double> split_outflow_rate(std::span<const double> p, double t) const;

  /// Same projection with a different kept set.
  StateProjection with_space(std::shared_ptr<const StateSpace> space, double extra_dropped) const;

 private:
  std::shared_ptr<const ReactionNetwork> network_;
  Lattice universe_;
  std::shared_ptr<const StateSpace> space_;
  Index cap_;
  double dropped_mass_ = 0.0;
};

/// |A_R(t) p|_1 through the column sum deficit of the truncated generator:
/// -sum_j colsum_j |p_j|. Throws NumericalError if a column sum is positive
/// enough to make the result negative beyond 1e-12.
double outflow_rate(const PropensityModel& model, std::span<const double> p, double t);

/// dt * outflow_rate((p_n + p_next)/2, t + dt/2).
double step_outflow_estimate(const PropensityModel& model, std::span<const double> p_n,
                             std::span<const double> p_next, double t, double dt);

/// Adds every exterior state of the universe reachable in one jump.
/// Returns the projection unchanged when nothing can be added.
StateProjection expand(const StateProjection& projection);

struct ShrinkResult {
  StateProjection projection;
  Vector p;            ///< solution on the new space
  Vector dropped;      ///< removed entries, on the old space
  double dropped_mass = 0.0;
  bool changed = false;
};

/// Removes states below `threshold` that are not one jump away from a state
/// at or above it.
ShrinkResult shrink(const StateProjection& projection, std::span<const double> p,
                    double threshold);

/// 1 - sum(p).
double probability_loss(std::span<const double> p);

/// Copies entries of `p` on `from` into the matching positions of `to`;
/// states missing from `to` are dropped, new states get zero.
Vector embed(std::span<const double> p, const StateSpace& from, const StateSpace& to);

/// Index in `to` for each state of `from`, or -1.
std::vector<Index> index_map(const StateSpace& from, const StateSpace& to);

}  // namespace mastereq
