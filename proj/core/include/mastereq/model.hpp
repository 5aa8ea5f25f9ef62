#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mastereq/linalg.hpp"

namespace mastereq {

/// Registered scalar time functions f(t) used by separable propensities.
///
/// Two families exist: sinusoids sin(w t + phi) with closed-form moments,
/// and the Hill decay 1 / (1 + (u / t_half)^n) of an affine argument
/// u = slope * t + shift, which is integrated by quadrature.
class TimeFunction {
 public:
  enum class Kind { Sinusoid, Hill };

  static TimeFunction sine() { return sinusoid(1.0, 0.0); }
  static TimeFunction sinusoid(double angular_frequency, double phase);
  static TimeFunction hill(double half_time, double exponent);
  /// "sin" or "hill" (half time 15, exponent 5).
  static TimeFunction by_name(std::string_view name);

  Kind kind() const { return kind_; }
  std::string name() const;

  double operator()(double t) const;

  bool has_closed_form() const { return kind_ == Kind::Sinusoid; }
  /// First antiderivative, when registered.
  std::optional<double> antiderivative(double t) const;

  struct Moments {
    double mean;         ///< (1/dt) * int_0^dt f(t + tau) dtau
    double first_moment; ///< (1/dt^2) * int_{-dt/2}^{dt/2} tau f(t + dt/2 + tau) dtau
  };
  /// Moments in closed form; empty for functions without one.
  std::optional<Moments> closed_form_moments(double t, double dt) const;

  /// The function s -> f(t_final - s).
  TimeFunction reflected(double t_final) const;

  bool operator==(const TimeFunction&) const = default;

 private:
  TimeFunction(Kind kind, double p0, double p1) : kind_(kind), p0_(p0), p1_(p1) {}

  Kind kind_ = Kind::Sinusoid;
  double p0_ = 1.0;  // sinusoid: angular frequency; hill: half time
  double p1_ = 0.0;  // sinusoid: phase; hill: exponent
  double slope_ = 1.0;
  double shift_ = 0.0;
};

/// Time dependence of one channel: offset + scale * basis(t).
struct TimeFactor {
  double offset = 1.0;
  double scale = 0.0;
  std::optional<TimeFunction> basis;

  static TimeFactor constant(double value = 1.0) { return {value, 0.0, std::nullopt}; }
  double operator()(double t) const { return offset + (basis ? scale * (*basis)(t) : 0.0); }
};

/// State-dependent part alpha(x) of a propensity.
struct RateLaw {
  enum class Kind {
    Constant,     ///< c
    Linear,       ///< c * x[a]
    Bimolecular,  ///< c * x[a] * x[b]
    Saturating,   ///< c * x[m] * (1/(x[a] + x[b]) + 1/(x[a] + saturation))
  };

  Kind kind = Kind::Constant;
  double coefficient = 0.0;
  int species_a = -1;
  int species_b = -1;
  int multiplier = -1;
  double saturation = 1000.0;

  double operator()(std::span<const int> state) const;
};

struct Channel {
  std::string name;
  std::vector<int> change;
  RateLaw rate;
  TimeFactor factor;
};

struct ReactionNetwork {
  std::vector<std::string> species;
  std::vector<Channel> channels;

  int dimension() const { return static_cast<int>(species.size()); }
};

/// Admissible region: per-species closed bounds and an optional linear
/// conservation law sum_i w_i x_i == total.
struct Lattice {
  std::vector<int> lower;
  std::vector<int> upper;
  std::optional<std::vector<int>> conservation_weights;
  long conservation_total = 0;

  bool contains(std::span<const int> state) const;
};

struct StateHash {
  std::size_t operator()(const std::vector<int>& v) const noexcept;
};

/// Ordered set of integer state vectors with a reverse lookup. States are
/// kept in lexicographic order so indices are reproducible.
class StateSpace {
 public:
  StateSpace() = default;
  StateSpace(int dimension, std::vector<std::vector<int>> states);

  int dimension() const { return dimension_; }
  Index size() const { return static_cast<Index>(states_.size()); }
  std::span<const int> state(Index i) const { return states_[static_cast<std::size_t>(i)]; }
  const std::vector<std::vector<int>>& states() const { return states_; }
  std::optional<Index> find(std::span<const int> state) const;
  bool contains(std::span<const int> state) const { return find(state).has_value(); }

  bool operator==(const StateSpace& other) const { return states_ == other.states_; }

 private:
  int dimension_ = 0;
  std::vector<std::vector<int>> states_;
  std::unordered_map<std::vector<int>, Index, StateHash> index_;
};

/// Default cap on enumerated states.
inline constexpr Index kDefaultStateCap = 2'000'000;

/// Breadth-first closure of `initial` under channel jumps with nonzero rate,
/// restricted to `lattice`. Throws ModelError when more than `cap` states
/// are found.
StateSpace enumerate_states(const ReactionNetwork& network,
                            const std::vector<std::vector<int>>& initial, const Lattice& lattice,
                            Index cap = kDefaultStateCap);

/// Separable generator A(t) = A_c + sum_l f_l(t) A_l.
class PropensityModel {
 public:
  PropensityModel() = default;
  PropensityModel(SparseMatrix constant, std::vector<SparseMatrix> varying,
                  std::vector<TimeFunction> factors,
                  std::shared_ptr<const StateSpace> space = nullptr);

  Index size() const { return constant_.rows(); }
  std::size_t num_varying() const { return varying_.size(); }
  bool time_dependent() const { return !varying_.empty(); }

  const SparseMatrix& constant_part() const { return constant_; }
  const std::vector<SparseMatrix>& varying_parts() const { return varying_; }
  const std::vector<TimeFunction>& factors() const { return factors_; }
  const std::shared_ptr<const StateSpace>& space() const { return space_; }

  SparseMatrix evaluate_at(double t) const;
  /// Column sums of A(t) without assembling it.
  Vector column_sums_at(double t) const;

  /// Generator of the adjoint problem in reversed time s = t_final - t:
  /// B(s) = A(t_final - s)^T.
  PropensityModel adjoint_reversed(double t_final) const;

 private:
  SparseMatrix constant_;
  std::vector<SparseMatrix> varying_;
  std::vector<TimeFunction> factors_;
  std::shared_ptr<const StateSpace> space_;
  Vector constant_colsums_;
  std::vector<Vector> varying_colsums_;
};

/// Builds the generator of `network` restricted to `space`. A jump whose
/// target lies outside the space contributes only its diagonal loss term,
/// which yields the truncated block with nonpositive column sums.
PropensityModel assemble(const ReactionNetwork& network, std::shared_ptr<const StateSpace> space);

}  // namespace mastereq
