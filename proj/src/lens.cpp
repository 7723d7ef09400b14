#include "statgames/lens.hpp"

#include <algorithm>
#include <cmath>

namespace statgames {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

using discrete::CoparKernel;
using discrete::Dist;
using discrete::FiniteKernel;
using discrete::FiniteSpace;
using gaussian::Euclidean;
using gaussian::GaussChannel;
using gaussian::GaussState;

[[noreturn]] void mismatch(const char* what) {
  throw ShapeError(std::string(what) + ": discrete and Gaussian arguments cannot be mixed");
}

}  // namespace

Instance instance_of(const Object& o) {
  return std::holds_alternative<FiniteSpace>(o) ? Instance::discrete : Instance::gaussian;
}
Instance instance_of(const Channel& c) {
  return std::holds_alternative<CoparKernel>(c) ? Instance::discrete : Instance::gaussian;
}
Instance instance_of(const State& s) {
  return std::holds_alternative<Dist>(s) ? Instance::discrete : Instance::gaussian;
}
Instance instance_of(const Point& p) {
  return std::holds_alternative<std::size_t>(p) ? Instance::discrete : Instance::gaussian;
}

const char* to_string(Instance i) { return i == Instance::discrete ? "discrete" : "gaussian"; }

std::string describe(const Object& o) {
  return std::visit(overloaded{[](const FiniteSpace& s) { return s.describe(); },
                               [](const Euclidean& e) { return "R^" + std::to_string(e.dim); }},
                    o);
}

Object dom(const Channel& c) {
  return std::visit(overloaded{[](const CoparKernel& k) -> Object { return k.dom(); },
                               [](const GaussChannel& g) -> Object { return Euclidean{g.dom_dim()}; }},
                    c);
}

Object out(const Channel& c) {
  return std::visit(overloaded{[](const CoparKernel& k) -> Object { return k.out(); },
                               [](const GaussChannel& g) -> Object { return Euclidean{g.out_dim()}; }},
                    c);
}

Object copar(const Channel& c) {
  return std::visit(overloaded{[](const CoparKernel& k) -> Object { return k.copar(); },
                               [](const GaussChannel& g) -> Object { return Euclidean{g.copar_dim()}; }},
                    c);
}

Side side(const Channel& c) {
  return std::visit([](const auto& k) { return k.side(); }, c);
}

Object space_of(const State& s) {
  return std::visit(overloaded{[](const Dist& d) -> Object { return d.space(); },
                               [](const GaussState& g) -> Object { return Euclidean{g.dim()}; }},
                    s);
}

Channel identity_channel(const Object& x, Side side) {
  return std::visit(
      overloaded{[&](const FiniteSpace& s) -> Channel { return discrete::lift(FiniteKernel::identity(s), side); },
                 [&](const Euclidean& e) -> Channel {
                   return gaussian::g_lift(GaussChannel::identity(e.dim), side);
                 }},
      x);
}

Channel discard(const Channel& c) {
  return std::visit(overloaded{[](const CoparKernel& k) -> Channel {
                                 return discrete::lift(discrete::discard_coparam(k), k.side());
                               },
                               [](const GaussChannel& g) -> Channel {
                                 return gaussian::g_lift(gaussian::g_discard_coparam(g), g.side());
                               }},
                    c);
}

State push(const Channel& c, const State& s) {
  return std::visit(overloaded{[](const CoparKernel& k, const Dist& d) -> State { return discrete::push(k, d); },
                               [](const GaussChannel& g, const GaussState& x) -> State {
                                 return gaussian::g_push(gaussian::g_discard_coparam(g), x);
                               },
                               [](const auto&, const auto&) -> State { mismatch("push"); }},
                    c, s);
}

Channel copy_compose(const Channel& g, const Channel& f) {
  return std::visit(overloaded{[](const CoparKernel& a, const CoparKernel& b) -> Channel {
                                 return discrete::copy_compose_copar(a, b);
                               },
                               [](const GaussChannel& a, const GaussChannel& b) -> Channel {
                                 return gaussian::g_copy_compose(a, b);
                               },
                               [](const auto&, const auto&) -> Channel { mismatch("copy_compose"); }},
                    g, f);
}

Channel tensor(const Channel& a, const Channel& b) {
  return std::visit(
      overloaded{[](const CoparKernel& x, const CoparKernel& y) -> Channel { return discrete::tensor(x, y); },
                 [](const GaussChannel& x, const GaussChannel& y) -> Channel { return gaussian::g_tensor(x, y); },
                 [](const auto&, const auto&) -> Channel { mismatch("tensor"); }},
      a, b);
}

Channel invert(const Channel& c, const State& prior) {
  return std::visit(overloaded{[](const CoparKernel& k, const Dist& d) -> Channel {
                                 return discrete::bayes_invert(k, d).backward;
                               },
                               [](const GaussChannel& g, const GaussState& s) -> Channel {
                                 return gaussian::g_invert(g, s);
                               },
                               [](const auto&, const auto&) -> Channel { mismatch("invert"); }},
                    c, prior);
}

State product(const State& a, const State& b) {
  return std::visit(
      overloaded{[](const Dist& x, const Dist& y) -> State { return discrete::product(x, y); },
                 [](const GaussState& x, const GaussState& y) -> State { return gaussian::g_product(x, y); },
                 [](const auto&, const auto&) -> State { mismatch("product"); }},
      a, b);
}

std::pair<State, State> split(const State& joint, const Object& first, const Object& second) {
  if (instance_of(joint) != instance_of(first) || instance_of(first) != instance_of(second)) mismatch("split");
  if (const auto* d = std::get_if<Dist>(&joint)) {
    const auto& a = std::get<FiniteSpace>(first);
    const auto& b = std::get<FiniteSpace>(second);
    return {discrete::marginal(*d, a, b, true), discrete::marginal(*d, a, b, false)};
  }
  const auto& g = std::get<GaussState>(joint);
  const auto n1 = std::get<Euclidean>(first).dim, n2 = std::get<Euclidean>(second).dim;
  if (n1 + n2 != g.dim()) throw ShapeError("split: joint Gaussian has the wrong dimension");
  return {gaussian::g_marginal(g, 0, n1), gaussian::g_marginal(g, n1, n2)};
}

Point pair_points(const Point& a, const Point& b, const Object& second) {
  if (instance_of(a) != instance_of(b) || instance_of(b) != instance_of(second)) mismatch("pair_points");
  if (const auto* i = std::get_if<std::size_t>(&a)) {
    return *i * std::get<FiniteSpace>(second).size() + std::get<std::size_t>(b);
  }
  const auto& u = std::get<Eigen::VectorXd>(a);
  const auto& v = std::get<Eigen::VectorXd>(b);
  Eigen::VectorXd w(u.size() + v.size());
  w << u, v;
  return w;
}

// ------------------------------------------------------------------ BayesLens

BayesLens::BayesLens(Channel fwd, Backward bwd)
    : fwd_(std::move(fwd)), bwd_(std::make_shared<const Backward>(std::move(bwd))) {
  if (statgames::side(fwd_) != Side::left) throw ShapeError("lens forward channels carry a left coparameter");
}

Channel BayesLens::bwd(const State& prior) const {
  if (!(space_of(prior) == dom())) {
    throw ShapeError("lens backward: prior lives on " + describe(space_of(prior)) + ", expected " +
                     describe(dom()));
  }
  Channel back = (*bwd_)(prior);
  if (instance_of(back) != instance()) mismatch("lens backward");
  if (statgames::side(back) != Side::right || !(statgames::dom(back) == out()) ||
      !(statgames::out(back) == dom()) || !(statgames::copar(back) == copar())) {
    throw ShapeError("non-simple lens: backward channel " + describe(statgames::dom(back)) + " -> " +
                     describe(statgames::out(back)) + " with coparameter " + describe(statgames::copar(back)) +
                     " does not mirror the forward channel");
  }
  return back;
}

BayesLens identity_lens(const Object& x) {
  Channel back = identity_channel(x, Side::right);
  return BayesLens(identity_channel(x, Side::left), [back](const State&) { return back; });
}

BayesLens exact_lens(const Channel& c) {
  return BayesLens(c, [c](const State& pi) { return invert(c, pi); });
}

BayesLens lens_compose(const BayesLens& d, const BayesLens& c) {
  if (d.instance() != c.instance()) mismatch("lens_compose");
  if (!(d.dom() == c.out())) {
    throw ShapeError("lens_compose: " + describe(c.out()) + " does not match " + describe(d.dom()));
  }
  Channel fwd = copy_compose(d.fwd(), c.fwd());
  return BayesLens(std::move(fwd), [d, c](const State& pi) {
    const State mid = push(c.fwd(), pi);
    return copy_compose(c.bwd(pi), d.bwd(mid));
  });
}

BayesLens lens_tensor(const BayesLens& a, const BayesLens& b) {
  if (a.instance() != b.instance()) mismatch("lens_tensor");
  return BayesLens(tensor(a.fwd(), b.fwd()), [a, b](const State& omega) {
    const auto [wa, wb] = split(omega, a.dom(), b.dom());
    return tensor(a.bwd(wa), b.bwd(wb));
  });
}

double channel_distance(const Channel& a, const Channel& b, const State* ref) {
  if (instance_of(a) != instance_of(b)) mismatch("channel_distance");
  if (const auto* ka = std::get_if<CoparKernel>(&a)) {
    const auto& kb = std::get<CoparKernel>(b);
    if (!(ka->dom() == kb.dom()) || !(ka->copar() == kb.copar()) || !(ka->out() == kb.out())) {
      throw ShapeError("channel_distance: kernel shapes differ");
    }
    const Dist* weights = ref ? std::get_if<Dist>(ref) : nullptr;
    double worst = 0.0;
    for (std::size_t x = 0; x < ka->dom().size(); ++x) {
      if (weights && (*weights)[x] <= 0.0) continue;
      for (std::size_t m = 0; m < ka->copar().size(); ++m)
        for (std::size_t y = 0; y < ka->out().size(); ++y)
          worst = std::max(worst, std::abs((*ka)(x, m, y) - kb(x, m, y)));
    }
    return worst;
  }
  return gaussian::max_abs_diff(std::get<GaussChannel>(a), std::get<GaussChannel>(b));
}

double buco_residual(const BayesLens& c, const BayesLens& d, const State& pi) {
  const BayesLens composite = lens_compose(d, c);
  const Channel optic = composite.bwd(pi);
  const Channel exact = invert(composite.fwd(), pi);
  const State evidence = push(composite.fwd(), pi);
  return channel_distance(optic, exact, &evidence);
}

}  // namespace statgames
