#include "mastereq/model.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>

namespace mastereq {

namespace {

std::string format_state(std::span<const int> x) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << ')';
  return os.str();
}

// (sin x - x cos x) / (2 x^2), with a series near zero.
double sinusoid_moment_kernel(double x) {
  if (std::abs(x) < 0.1) {
    double x2 = x * x;
    return x * (1.0 / 6.0 - x2 / 60.0 + x2 * x2 / 1680.0 - x2 * x2 * x2 / 90720.0);
  }
  return (std::sin(x) - x * std::cos(x)) / (2.0 * x * x);
}

double sinc(double x) {
  if (std::abs(x) < 1e-4) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

}  // namespace

TimeFunction TimeFunction::sinusoid(double angular_frequency, double phase) {
  if (angular_frequency == 0.0) throw ModelError("sinusoid time function needs nonzero frequency");
  return {Kind::Sinusoid, angular_frequency, phase};
}

TimeFunction TimeFunction::hill(double half_time, double exponent) {
  if (!(half_time > 0.0)) throw ModelError("hill time function needs a positive half time");
  return {Kind::Hill, half_time, exponent};
}

TimeFunction TimeFunction::by_name(std::string_view name) {
  if (name == "sin") return sine();
  if (name == "hill") return hill(15.0, 5.0);
  throw ModelError("unknown time function '" + std::string(name) + "'");
}

std::string TimeFunction::name() const { return kind_ == Kind::Sinusoid ? "sin" : "hill"; }

double TimeFunction::operator()(double t) const {
  if (kind_ == Kind::Sinusoid) return std::sin(p0_ * t + p1_);
  double u = slope_ * t + shift_;
  return 1.0 / (1.0 + std::pow(u / p0_, p1_));
}

std::optional<double> TimeFunction::antiderivative(double t) const {
  if (kind_ != Kind::Sinusoid) return std::nullopt;
  return -std::cos(p0_ * t + p1_) / p0_;
}

std::optional<TimeFunction::Moments> TimeFunction::closed_form_moments(double t,
                                                                       double dt) const {
  if (kind_ != Kind::Sinusoid) return std::nullopt;
  const double centre = p0_ * (t + 0.5 * dt) + p1_;
  const double x = 0.5 * p0_ * dt;
  // int_{-a}^{a} tau sin(centre + w tau) dtau = cos(centre) * 2 (sin x - x cos x) / w^2
  return Moments{std::sin(centre) * sinc(x), std::cos(centre) * sinusoid_moment_kernel(x)};
}

TimeFunction TimeFunction::reflected(double t_final) const {
  TimeFunction r = *this;
  if (kind_ == Kind::Sinusoid) {
    r.p0_ = -p0_;
    r.p1_ = p0_ * t_final + p1_;
  } else {
    r.slope_ = -slope_;
    r.shift_ = slope_ * t_final + shift_;
  }
  return r;
}

double RateLaw::operator()(std::span<const int> x) const {
  auto at = [&](int i) {
    if (i < 0 || static_cast<std::size_t>(i) >= x.size())
      throw ModelError("rate law references species index " + std::to_string(i));
    return static_cast<double>(x[static_cast<std::size_t>(i)]);
  };
  switch (kind) {
    case Kind::Constant:
      return coefficient;
    case Kind::Linear:
      return coefficient * at(species_a);
    case Kind::Bimolecular:
      return coefficient * at(species_a) * at(species_b);
    case Kind::Saturating: {
      double m = at(multiplier);
      if (m == 0.0) return 0.0;
      double a = at(species_a);
      double total = a + at(species_b);
      double first = total > 0.0 ? 1.0 / total : 0.0;
      return coefficient * m * (first + 1.0 / (a + saturation));
    }
  }
  return 0.0;
}

bool Lattice::contains(std::span<const int> state) const {
  for (std::size_t i = 0; i < state.size(); ++i) {
    if (i < lower.size() && state[i] < lower[i]) return false;
    if (i < upper.size() && state[i] > upper[i]) return false;
  }
  if (conservation_weights) {
    long sum = 0;
    for (std::size_t i = 0; i < state.size(); ++i) sum += (*conservation_weights)[i] * state[i];
    if (sum != conservation_total) return false;
  }
  return true;
}

std::size_t StateHash::operator()(const std::vector<int>& v) const noexcept {
  std::size_t h = 1469598103934665603ull;
  for (int x : v) {
    h ^= static_cast<std::size_t>(static_cast<unsigned>(x)) + 0x9e3779b97f4a7c15ull + (h << 6) +
         (h >> 2);
  }
  return h;
}

StateSpace::StateSpace(int dimension, std::vector<std::vector<int>> states)
    : dimension_(dimension), states_(std::move(states)) {
  std::sort(states_.begin(), states_.end());
  if (std::adjacent_find(states_.begin(), states_.end()) != states_.end())
    throw ModelError("state space contains duplicate states");
  index_.reserve(states_.size());
  for (std::size_t i = 0; i < states_.size(); ++i) {
    if (static_cast<int>(states_[i].size()) != dimension_)
      throw DimensionError("state " + format_state(states_[i]) + " has wrong dimension");
    index_.emplace(states_[i], static_cast<Index>(i));
  }
}

std::optional<Index> StateSpace::find(std::span<const int> state) const {
  auto it = index_.find(std::vector<int>(state.begin(), state.end()));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

StateSpace enumerate_states(const ReactionNetwork& network,
                            const std::vector<std::vector<int>>& initial, const Lattice& lattice,
                            Index cap) {
  const int dim = network.dimension();
  std::unordered_map<std::vector<int>, bool, StateHash> seen;
  std::deque<std::vector<int>> queue;
  std::vector<std::vector<int>> found;
  auto visit = [&](std::vector<int> s) {
    if (seen.contains(s)) return;
    if (static_cast<Index>(found.size()) >= cap)
      throw ModelError("state enumeration exceeded the cap of " + std::to_string(cap) +
                       " states");
    seen.emplace(s, true);
    found.push_back(s);
    queue.push_back(std::move(s));
  };
  for (const auto& s : initial) {
    if (static_cast<int>(s.size()) != dim)
      throw DimensionError("initial state " + format_state(s) + " has wrong dimension");
    if (!lattice.contains(s))
      throw ModelError("initial state " + format_state(s) + " lies outside the bounds");
    visit(s);
  }
  std::vector<int> next(static_cast<std::size_t>(dim));
  while (!queue.empty()) {
    std::vector<int> s = std::move(queue.front());
    queue.pop_front();
    for (const auto& ch : network.channels) {
      bool negative = false;
      for (int i = 0; i < dim; ++i) {
        next[static_cast<std::size_t>(i)] =
            s[static_cast<std::size_t>(i)] + ch.change[static_cast<std::size_t>(i)];
        negative |= next[static_cast<std::size_t>(i)] < 0;
      }
      if (negative || !lattice.contains(next)) continue;
      if (ch.rate(s) == 0.0) continue;
      visit(next);
    }
  }
  return StateSpace(dim, std::move(found));
}

PropensityModel::PropensityModel(SparseMatrix constant, std::vector<SparseMatrix> varying,
                                 std::vector<TimeFunction> factors,
                                 std::shared_ptr<const StateSpace> space)
    : constant_(std::move(constant)),
      varying_(std::move(varying)),
      factors_(std::move(factors)),
      space_(std::move(space)) {
  if (varying_.size() != factors_.size())
    throw ModelError("propensity model: one time function per varying matrix required");
  if (!constant_.square()) throw DimensionError("propensity model: A_c must be square");
  for (const auto& m : varying_)
    if (m.rows() != constant_.rows() || m.cols() != constant_.cols())
      throw DimensionError("propensity model: A_l shape differs from A_c");
  if (space_ && space_->size() != constant_.rows())
    throw DimensionError("propensity model: state space size differs from matrix size");
  constant_colsums_ = constant_.column_sums();
  for (const auto& m : varying_) varying_colsums_.push_back(m.column_sums());
}

SparseMatrix PropensityModel::evaluate_at(double t) const {
  std::vector<ScaledMatrix> terms{{1.0, &constant_}};
  for (std::size_t l = 0; l < varying_.size(); ++l) terms.push_back({factors_[l](t), &varying_[l]});
  return linear_combination(terms);
}

Vector PropensityModel::column_sums_at(double t) const {
  Vector sums = constant_colsums_;
  for (std::size_t l = 0; l < varying_.size(); ++l) {
    double f = factors_[l](t);
    for (std::size_t j = 0; j < sums.size(); ++j) sums[j] += f * varying_colsums_[l][j];
  }
  return sums;
}

PropensityModel PropensityModel::adjoint_reversed(double t_final) const {
  std::vector<SparseMatrix> varying;
  std::vector<TimeFunction> factors;
  for (std::size_t l = 0; l < varying_.size(); ++l) {
    varying.push_back(varying_[l].transpose());
    factors.push_back(factors_[l].reflected(t_final));
  }
  return PropensityModel(constant_.transpose(), std::move(varying), std::move(factors), space_);
}

PropensityModel assemble(const ReactionNetwork& network, std::shared_ptr<const StateSpace> space) {
  if (!space) throw ModelError("assemble: no state space");
  const int dim = network.dimension();
  if (space->dimension() != dim) throw DimensionError("assemble: state dimension mismatch");

  std::vector<TimeFunction> bases;
  for (const auto& ch : network.channels) {
    if (ch.factor.basis && ch.factor.scale != 0.0 &&
        std::find(bases.begin(), bases.end(), *ch.factor.basis) == bases.end())
      bases.push_back(*ch.factor.basis);
  }

  std::vector<Triplet> constant;
  std::vector<std::vector<Triplet>> varying(bases.size());
  std::vector<int> next(static_cast<std::size_t>(dim));
  const Index n = space->size();
  for (Index j = 0; j < n; ++j) {
    auto x = space->state(j);
    for (const auto& ch : network.channels) {
      bool negative = false;
      for (int i = 0; i < dim; ++i) {
        next[static_cast<std::size_t>(i)] =
            x[static_cast<std::size_t>(i)] + ch.change[static_cast<std::size_t>(i)];
        negative |= next[static_cast<std::size_t>(i)] < 0;
      }
      if (negative) continue;
      double alpha = ch.rate(x);
      if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
        std::ostringstream msg;
        msg << "channel '" << ch.name << "' has invalid propensity " << alpha << " at state "
            << format_state(x);
        throw ModelError(msg.str());
      }
      if (alpha == 0.0) continue;
      auto target = space->find(next);
      auto emit = [&](std::vector<Triplet>& out, double weight) {
        if (weight == 0.0) return;
        out.push_back({j, j, -weight * alpha});
        if (target) out.push_back({*target, j, weight * alpha});
      };
      emit(constant, ch.factor.offset);
      if (ch.factor.basis && ch.factor.scale != 0.0) {
        auto l = static_cast<std::size_t>(
            std::find(bases.begin(), bases.end(), *ch.factor.basis) - bases.begin());
        emit(varying[l], ch.factor.scale);
      }
    }
  }

  std::vector<SparseMatrix> varying_matrices;
  for (auto& t : varying) varying_matrices.push_back(SparseMatrix::from_triplets(n, n, std::move(t)));
  return PropensityModel(SparseMatrix::from_triplets(n, n, std::move(constant)),
                         std::move(varying_matrices), std::move(bases), std::move(space));
}

}  // namespace mastereq
