#pragma once

#include <functional>
#include <optional>
#include <string_view>

#include "statgames/lens.hpp"

namespace statgames {

enum class LossModel { KL, MLE, FE, LFE };

const char* to_string(LossModel m);
std::optional<LossModel> parse_loss_model(std::string_view name);

/// A state-dependent effect: (prior on X, observation in Y) -> [0, +inf].
///
/// Gaussian log-densities can be negative, so the sign is not enforced; the
/// discrete losses built here are nonnegative.
class LossFn {
 public:
  using Eval = std::function<double(const State&, const Point&)>;

  LossFn(Object prior_space, Object obs_space, Eval eval);

  static LossFn zero(Object prior_space, Object obs_space);

  const Object& prior_space() const noexcept { return prior_; }
  const Object& obs_space() const noexcept { return obs_; }

  /// Checks both arguments against the declared spaces, then evaluates.
  double operator()(const State& prior, const Point& obs) const;

 private:
  Object prior_;
  Object obs_;
  std::shared_ptr<const Eval> eval_;
};

/// Pointwise sum with +inf absorbing.
LossFn loss_add(const LossFn& a, const LossFn& b);
/// Pointwise a - b; +inf - +inf is taken as 0 (equal infinities).
LossFn loss_sub(const LossFn& a, const LossFn& b);

/// KL from the lens's posterior to the exact posterior at y.
LossFn kl_loss(const BayesLens& l);
/// -log of the pushforward density at y.
LossFn mle_loss(const BayesLens& l);
/// kl_loss + mle_loss.
LossFn fe_loss(const BayesLens& l);
/// KL(q, prior ⊗ counting/Lebesgue) - E_q[log p(m, y | x)], q the lens posterior.
LossFn fe_joint_form(const BayesLens& l);
/// Energy at the posterior mean minus the posterior entropy (Gaussian only).
LossFn lfe_loss(const BayesLens& l);
LossFn model_loss(LossModel m, const BayesLens& l);

struct EnergyEntropy {
  double energy;
  double entropy;
};

/// E_q[-log p(m, y | x) - log pi(x)] and S[q] for q = bwd(pi)(y).
EnergyEntropy energy_entropy_decomp(const BayesLens& l, const State& pi, const Point& y);

/// Energy at the posterior mean and S[q]; their difference is the LFE value.
EnergyEntropy laplace_energy_entropy(const BayesLens& l, const State& pi, const Point& y);

/// Hessian in (x, m) of the Laplacian energy
///   E(x, m; y) = -log p(m, y | x) - log pi(x),
/// which is constant for affine-Gaussian channels.
Eigen::MatrixXd laplace_hessian(const BayesLens& l, const State& pi);
/// Inverse of laplace_hessian; y only fixes the expansion point.
Eigen::MatrixXd laplace_sigma(const BayesLens& l, const State& pi, const Point& y);
/// 1/2 tr(Sigma_q H) for the lens posterior q at (pi, y).
double laplace_gap(const BayesLens& l, const State& pi, const Point& y);

/// Posterior q = bwd(pi)(y) as a discrete row or a Gaussian state.
State posterior(const BayesLens& l, const State& pi, const Point& y);

/// E_{N(mean, cov)}[f] by 2n symmetric sigma points; exact for quadratic f.
double gauss_expectation(const gaussian::GaussState& s, const std::function<double(const Eigen::VectorXd&)>& f);

/// Loss of the composite game "d after c":
///   (pi, z) -> Ld(c pi, z) + E_{y ~ bwd_d(c pi)(z)}[Lc(pi, y)].
LossFn loss_compose(const LossFn& Ld, const LossFn& Lc, const BayesLens& d, const BayesLens& c);

/// K(d, c) = loss_compose(L(d), L(c)) - L(d after c) for a loss model.
LossFn laxness_witness(LossModel m, const BayesLens& d, const BayesLens& c);

/// Closed-form laxator of c ⊗ d at the joint prior omega and observation (y, y2),
/// so that L(c ⊗ d)(omega, (y, y2)) = L(c)(omega_X, y) + L(d)(omega_X', y2) + laxator.
double laxator(LossModel m, const BayesLens& c, const BayesLens& d, const State& omega, const Point& y,
               const Point& y2);

}  // namespace statgames
