#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "statgames/discrete.hpp"
#include "statgames/errors.hpp"

namespace statgames::gaussian {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

inline constexpr double kSymTol = 1e-10;
inline constexpr double kPsdTol = 1e-10;

/// R^dim, the object a Gaussian channel lives between.
struct Euclidean {
  Index dim = 0;
  friend bool operator==(const Euclidean&, const Euclidean&) = default;
};

/// Gaussian measure N(mean, cov).  The covariance is symmetrized and
/// eigenvalues in [-1e-10, 0) are clamped to zero; anything more negative is
/// rejected.
class GaussState {
 public:
  GaussState(VectorXd mean, MatrixXd cov);

  static GaussState standard(Index dim);

  Index dim() const noexcept { return mean_.size(); }
  const VectorXd& mean() const noexcept { return mean_; }
  const MatrixXd& cov() const noexcept { return cov_; }

 private:
  VectorXd mean_;
  MatrixXd cov_;
};

/// Affine-Gaussian channel x -> N(A x + b, noise).
///
/// The codomain is split into a coparameter block of `copar_dim` and an output
/// block; with Side::left the coparameter comes first.
class GaussChannel {
 public:
  GaussChannel(MatrixXd A, VectorXd b, MatrixXd noise, Index copar_dim = 0, Side side = Side::left);

  static GaussChannel identity(Index dim);
  static GaussChannel constant(Index dom_dim, const GaussState& value);

  Index dom_dim() const noexcept { return A_.cols(); }
  Index cod_dim() const noexcept { return A_.rows(); }
  Index copar_dim() const noexcept { return copar_dim_; }
  Index out_dim() const noexcept { return A_.rows() - copar_dim_; }
  Side side() const noexcept { return side_; }
  Index copar_offset() const noexcept { return side_ == Side::left ? 0 : out_dim(); }
  Index out_offset() const noexcept { return side_ == Side::left ? copar_dim_ : 0; }

  const MatrixXd& A() const noexcept { return A_; }
  const VectorXd& b() const noexcept { return b_; }
  const MatrixXd& noise() const noexcept { return noise_; }

  /// Law of the full codomain at input x.
  GaussState apply(const VectorXd& x) const;
  /// Codomain vector assembled from coparameter and output parts.
  VectorXd assemble(const VectorXd& copar, const VectorXd& out) const;

 private:
  MatrixXd A_;
  VectorXd b_;
  MatrixXd noise_;
  Index copar_dim_;
  Side side_;
};

/// Pushforward over the full codomain: N(A m + b, A S A^T + noise).
GaussState g_push(const GaussChannel& c, const GaussState& s);
/// Law of (x, codomain) under prior s, as one stacked Gaussian.
GaussState g_joint(const GaussChannel& c, const GaussState& s);

GaussChannel g_discard_coparam(const GaussChannel& c);
GaussChannel g_lift(const GaussChannel& c, Side side = Side::left);
/// Ordinary composite d . c on the output blocks, coparameters discarded.
GaussChannel g_compose(const GaussChannel& d, const GaussChannel& c);

/// Copy-composite: one channel from c's domain whose law is the joint of c's
/// codomain and d's codomain (d fed with c's output block).  Left layout is
/// [c.copar; c.out; d.copar; d.out] with coparameter of size c.cod + d.copar;
/// the right layout is the mirror [d.out; d.copar; c.out; c.copar].
GaussChannel g_copy_compose(const GaussChannel& d, const GaussChannel& c);

/// Parallel product; left layout [M1; M2; B1; B2], right [B1; B2; M1; M2].
GaussChannel g_tensor(const GaussChannel& c1, const GaussChannel& c2);

/// Conjugate Bayesian inversion with respect to a Gaussian prior.  The result
/// maps the output block to (x, copar) with the opposite handedness.
/// Throws SingularityError when the output covariance or the posterior
/// covariance is singular.
GaussChannel g_invert(const GaussChannel& c, const GaussState& prior);

double g_kl(const GaussState& p, const GaussState& q);
double g_entropy(const GaussState& s);
double g_logpdf(const GaussState& s, const VectorXd& x);

GaussState g_product(const GaussState& a, const GaussState& b);
GaussState g_marginal(const GaussState& s, Index offset, Index dim);

/// log det of a symmetric positive-definite matrix; `block` names it in errors.
double logdet_spd(const MatrixXd& m, const std::string& block);
/// Inverse of a symmetric positive-definite matrix; `block` names it in errors.
MatrixXd inverse_spd(const MatrixXd& m, const std::string& block);

/// Largest entrywise difference between the parameters of two channels.
double max_abs_diff(const GaussChannel& a, const GaussChannel& b);

}  // namespace statgames::gaussian
