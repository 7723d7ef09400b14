#pragma once

#include "oracles.hpp"
#include "statgames/loss.hpp"

namespace fixture {

using namespace statgames;

inline discrete::FiniteKernel kernel(const Eigen::MatrixXd& m) {
  return discrete::FiniteKernel(discrete::FiniteSpace::range(static_cast<std::size_t>(m.rows())),
                                discrete::FiniteSpace::range(static_cast<std::size_t>(m.cols())), m);
}

inline Channel forward(const Eigen::MatrixXd& m) { return discrete::lift(kernel(m)); }

inline State dist(const Eigen::VectorXd& p) {
  return discrete::Dist(discrete::FiniteSpace::range(static_cast<std::size_t>(p.size())), p);
}

/// Discrete lens with a fixed backward kernel Y -> X, whatever the prior.
inline BayesLens fixed_lens(const Eigen::MatrixXd& fwd, const Eigen::MatrixXd& bwd) {
  const Channel back = discrete::lift(kernel(bwd), Side::right);
  return BayesLens(forward(fwd), [back](const State&) { return back; });
}

/// Scalar-or-vector Gaussian lens with a fixed backward channel.
inline BayesLens fixed_gauss_lens(const gaussian::GaussChannel& fwd, const gaussian::GaussChannel& bwd) {
  const Channel back = bwd;
  return BayesLens(fwd, [back](const State&) { return back; });
}

inline Eigen::MatrixXd m1(double v) { return Eigen::MatrixXd::Constant(1, 1, v); }
inline Eigen::VectorXd v1(double v) { return Eigen::VectorXd::Constant(1, v); }

}  // namespace fixture
