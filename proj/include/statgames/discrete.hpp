#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "statgames/errors.hpp"

namespace statgames {

/// Position of the coparameter inside a coparameterized codomain.
/// `left` is M ⊗ B (forward channels), `right` is B ⊗ M (backward channels).
enum class Side { left, right };

constexpr Side opposite(Side s) noexcept { return s == Side::left ? Side::right : Side::left; }

namespace discrete {

/// Normalization tolerance for distributions and kernel rows.
inline constexpr double kNormTol = 1e-12;
/// Default tolerance for entrywise comparisons.
inline constexpr double kCompareTol = 1e-9;

/// A finite set of labelled outcomes.
///
/// Product spaces remember their two factors so that coparameter bracketing
/// such as (M ⊗ B) ⊗ N survives composition.  Outcomes of a product are laid
/// out row-major, so every bracketing of the same factors shares one index
/// layout; `flatten()` exposes the atomic factors and equality is defined on
/// the flattened form with unit factors dropped.
class FiniteSpace {
 public:
  explicit FiniteSpace(std::vector<std::string> labels);

  static FiniteSpace unit();
  /// Outcomes labelled "0", "1", ..., "n-1".
  static FiniteSpace range(std::size_t n);
  static FiniteSpace product(const FiniteSpace& a, const FiniteSpace& b);

  std::size_t size() const noexcept { return labels_.size(); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const std::string& label(std::size_t i) const { return labels_.at(i); }
  std::optional<std::size_t> find(std::string_view label) const;

  bool is_unit() const noexcept { return unit_; }
  bool is_product() const noexcept { return !factors_.empty(); }
  /// The two immediate factors of a product space (empty when atomic).
  const std::vector<FiniteSpace>& factors() const noexcept { return factors_; }
  /// Atomic, non-unit factors in left-to-right order.
  std::vector<FiniteSpace> flatten() const;
  std::vector<std::size_t> factor_sizes() const;
  /// Bracketed structure, e.g. "((2 x 3) x 4)".
  std::string describe() const;

  friend bool operator==(const FiniteSpace& a, const FiniteSpace& b);

 private:
  FiniteSpace() = default;

  std::vector<std::string> labels_;
  std::vector<FiniteSpace> factors_;
  bool unit_ = false;
};

/// A probability distribution on a finite space.
class Dist {
 public:
  Dist(FiniteSpace space, Eigen::VectorXd mass);

  static Dist point(FiniteSpace space, std::size_t index);
  static Dist uniform(FiniteSpace space);

  const FiniteSpace& space() const noexcept { return space_; }
  const Eigen::VectorXd& mass() const noexcept { return mass_; }
  double operator[](std::size_t i) const { return mass_(static_cast<Eigen::Index>(i)); }
  std::size_t size() const noexcept { return space_.size(); }

 private:
  FiniteSpace space_;
  Eigen::VectorXd mass_;
};

/// Row-stochastic matrix: rows indexed by the domain, columns by the codomain.
class FiniteKernel {
 public:
  FiniteKernel(FiniteSpace dom, FiniteSpace cod, Eigen::MatrixXd rows);

  static FiniteKernel identity(const FiniteSpace& space);
  /// The unique kernel into the unit space.
  static FiniteKernel discard(const FiniteSpace& space);
  /// Diagonal copy a -> (a, a).
  static FiniteKernel copy(const FiniteSpace& space);
  static FiniteKernel constant(const FiniteSpace& dom, const Dist& value);

  const FiniteSpace& dom() const noexcept { return dom_; }
  const FiniteSpace& cod() const noexcept { return cod_; }
  const Eigen::MatrixXd& rows() const noexcept { return rows_; }
  double operator()(std::size_t a, std::size_t b) const {
    return rows_(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
  }
  Dist row(std::size_t a) const;

 private:
  FiniteSpace dom_;
  FiniteSpace cod_;
  Eigen::MatrixXd rows_;
};

/// A kernel dom -> copar ⊗ out (left) or dom -> out ⊗ copar (right).
class CoparKernel {
 public:
  CoparKernel(FiniteSpace dom, FiniteSpace copar, FiniteSpace out, Eigen::MatrixXd rows,
              Side side = Side::left);

  const FiniteSpace& dom() const noexcept { return joint_.dom(); }
  const FiniteSpace& copar() const noexcept { return copar_; }
  const FiniteSpace& out() const noexcept { return out_; }
  Side side() const noexcept { return side_; }
  /// The underlying kernel into the product codomain.
  const FiniteKernel& joint() const noexcept { return joint_; }

  std::size_t column(std::size_t m, std::size_t b) const noexcept {
    return side_ == Side::left ? m * out_.size() + b : b * copar_.size() + m;
  }
  /// f(m, b | a).
  double operator()(std::size_t a, std::size_t m, std::size_t b) const {
    return joint_(a, column(m, b));
  }

 private:
  FiniteSpace copar_;
  FiniteSpace out_;
  Side side_;
  FiniteKernel joint_;
};

/// A map into [0, +inf]; the discrete form of an effect B -> I.
class Effect {
 public:
  Effect(FiniteSpace space, Eigen::VectorXd values);

  static Effect zero(const FiniteSpace& space);
  static Effect constant(const FiniteSpace& space, double value);

  const FiniteSpace& space() const noexcept { return space_; }
  const Eigen::VectorXd& values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_(static_cast<Eigen::Index>(i)); }

 private:
  FiniteSpace space_;
  Eigen::VectorXd values_;
};

/// Outcomes of strictly positive mass under some reference distribution.
struct SupportMask {
  FiniteSpace space;
  std::vector<bool> supported;

  bool operator[](std::size_t i) const { return supported.at(i); }
  std::size_t count() const;
};

struct Inversion {
  CoparKernel backward;
  SupportMask support;
};

// Extended nonnegative reals: +inf absorbs under addition and 0 * inf = 0.
double ext_add(double x, double y);
double ext_mul(double weight, double value);

/// Kleisli application: (k pi)(b) = sum_a k(b|a) pi(a).
Dist push(const FiniteKernel& k, const Dist& pi);
Dist push(const CoparKernel& k, const Dist& pi);  // coparameter discarded

/// Chapman-Kolmogorov composite d . c.
FiniteKernel compose(const FiniteKernel& d, const FiniteKernel& c);

/// Joint channel a -> (b, z) with mass d(z|b) c(b|a); coparameter is c's codomain.
CoparKernel copy_compose(const FiniteKernel& d, const FiniteKernel& c);

/// Horizontal composite of coparameterized kernels.
///   left:  f: A -> M⊗B, g: B -> N⊗C  gives  A -> ((M⊗B)⊗N) ⊗ C
///   right: f: A -> B⊗M, g: B -> C⊗N  gives  A -> C ⊗ (N⊗(B⊗M))
CoparKernel copy_compose_copar(const CoparKernel& g, const CoparKernel& f);

/// Marginalize the coparameter away.
FiniteKernel discard_coparam(const CoparKernel& f);

/// View an ordinary kernel as one with unit coparameter.
CoparKernel lift(const FiniteKernel& k, Side side = Side::left);

/// Forget coparameter bracketing and unit factors: same entries, flattened spaces.
CoparKernel flatten_copar(const CoparKernel& f);

/// Parallel product (a, a') -> (b, b').
FiniteKernel tensor(const FiniteKernel& k1, const FiniteKernel& k2);
/// (A⊗A') -> (M⊗M') ⊗ (B⊗B') (or the right-handed mirror).
CoparKernel tensor(const CoparKernel& f1, const CoparKernel& f2);

/// Product distribution on a ⊗ b.
Dist product(const Dist& a, const Dist& b);
/// Marginal of a distribution on a two-factor product space.
Dist marginal_first(const Dist& joint);
Dist marginal_second(const Dist& joint);
/// Marginal over an explicit split of the index space (outer x inner), when the
/// space does not carry factor metadata.
Dist marginal(const Dist& joint, const FiniteSpace& outer, const FiniteSpace& inner, bool keep_outer);

/// Coparameterized Bayes rule.  For f: A -> M⊗B and a prior on A, the backward
/// channel B -> A⊗M (opposite handedness) has rho(a, m | b) p(b) = f(m, b | a) pi(a).
/// Rows with p(b) = 0 are uniform and flagged in the support mask.
Inversion bayes_invert(const CoparKernel& f, const Dist& pi);
Inversion bayes_invert(const FiniteKernel& f, const Dist& pi);

/// Pointwise extended-real sum on a shared space.
Effect effect_add(const Effect& g, const Effect& h);
/// Monoidal sum C(A,I) x C(B,I) -> C(A⊗B,I): (a, b) -> g(a) + h(b).
Effect effect_tensor_sum(const Effect& g, const Effect& h);
/// Expectation of g along k: result(a) = sum_b g(b) k(b|a).
Effect effect_precompose(const Effect& g, const FiniteKernel& k);

/// Entrywise equality of rows at every domain point with ref(a) > 0.
bool almost_sure_eq(const FiniteKernel& k1, const FiniteKernel& k2, const Dist& ref,
                    double tol = kCompareTol);
bool almost_sure_eq(const CoparKernel& k1, const CoparKernel& k2, const Dist& ref,
                    double tol = kCompareTol);

/// Relative entropy sum p log(p/q) with 0 log 0 = 0 and p log(p/0) = +inf.
double kl_divergence(const Eigen::VectorXd& p, const Eigen::VectorXd& q);
double kl_divergence(const Dist& p, const Dist& q);
/// Shannon entropy in nats.
double entropy(const Eigen::VectorXd& p);

/// Row of the joint codomain of a coparameterized kernel as a distribution.
Dist row(const CoparKernel& k, std::size_t a);

}  // namespace discrete
}  // namespace statgames
