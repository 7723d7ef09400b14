#pragma once

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <variant>

#include "statgames/discrete.hpp"
#include "statgames/gaussian.hpp"

namespace statgames {

enum class Instance { discrete, gaussian };

/// An object of the channel category: a finite space or R^n.
using Object = std::variant<discrete::FiniteSpace, gaussian::Euclidean>;
/// A coparameterized channel of either instance.
using Channel = std::variant<discrete::CoparKernel, gaussian::GaussChannel>;
/// A state (prior) of either instance.
using State = std::variant<discrete::Dist, gaussian::GaussState>;
/// An observation: an outcome index or a real vector.
using Point = std::variant<std::size_t, Eigen::VectorXd>;

Instance instance_of(const Object& o);
Instance instance_of(const Channel& c);
Instance instance_of(const State& s);
Instance instance_of(const Point& p);
const char* to_string(Instance i);
std::string describe(const Object& o);

Object dom(const Channel& c);
Object out(const Channel& c);
Object copar(const Channel& c);
Side side(const Channel& c);
Object space_of(const State& s);

/// Identity channel with unit coparameter.
Channel identity_channel(const Object& x, Side side = Side::left);
/// Same channel with the coparameter marginalized (unit coparameter, same side).
Channel discard(const Channel& c);
/// Pushforward through the channel with its coparameter discarded.
State push(const Channel& c, const State& s);
/// Horizontal (copy-) composite g after f.
Channel copy_compose(const Channel& g, const Channel& f);
Channel tensor(const Channel& a, const Channel& b);
/// Exact Bayesian inversion; opposite handedness.
Channel invert(const Channel& c, const State& prior);

State product(const State& a, const State& b);
/// Marginals of a joint state on first ⊗ second.
std::pair<State, State> split(const State& joint, const Object& first, const Object& second);
/// Observation on first ⊗ second made of one observation on each factor.
Point pair_points(const Point& a, const Point& b, const Object& second);

/// A coparameterized Bayesian lens: a forward channel X -> M⊗Y and a
/// prior-indexed backward family Y -> X⊗M.
///
/// Only simple lenses are representable: every backward channel produced is
/// checked against the forward channel (same coparameter, diagonal types) and
/// a mismatch raises ShapeError at evaluation time.
class BayesLens {
 public:
  using Backward = std::function<Channel(const State&)>;

  BayesLens(Channel fwd, Backward bwd);

  const Channel& fwd() const noexcept { return fwd_; }
  Channel bwd(const State& prior) const;
  bool simple() const noexcept { return true; }

  Object dom() const { return statgames::dom(fwd_); }
  Object out() const { return statgames::out(fwd_); }
  Object copar() const { return statgames::copar(fwd_); }
  Instance instance() const { return instance_of(fwd_); }

 private:
  Channel fwd_;
  std::shared_ptr<const Backward> bwd_;
};

BayesLens identity_lens(const Object& x);
/// (c, c^dagger): backward at pi is the exact inversion of c at pi.
BayesLens exact_lens(const Channel& c);
/// Optic composite "d after c".
BayesLens lens_compose(const BayesLens& d, const BayesLens& c);
/// Parallel product; the backward at a joint prior uses its two marginals.
BayesLens lens_tensor(const BayesLens& a, const BayesLens& b);

/// Reindexing along a channel: family(pi, ...) becomes family(push(c, pi), ...).
template <class Family>
auto reindex(Family family, Channel c) {
  return [family = std::move(family), c = std::move(c)](const State& pi, auto&&... rest) {
    return family(push(c, pi), std::forward<decltype(rest)>(rest)...);
  };
}

/// Largest entrywise gap between the backward channel of lens_compose(d, c) at
/// pi and the exact inversion of the copy-composite forward channel, over
/// observations of positive pushforward mass.
double buco_residual(const BayesLens& c, const BayesLens& d, const State& pi);

/// Largest entrywise gap between two channels of the same shape; discrete
/// rows are restricted to those with ref mass > 0 when ref is given.
double channel_distance(const Channel& a, const Channel& b, const State* ref = nullptr);

}  // namespace statgames
