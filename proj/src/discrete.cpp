#include "statgames/discrete.hpp"

#include <cmath>
#include <limits>
#include <algorithm>
#include <numeric>
#include <sstream>
#include <unordered_set>

namespace statgames::discrete {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

void require_same(const FiniteSpace& a, const FiniteSpace& b, const char* what) {
  if (!(a == b)) {
    throw ShapeError(std::string(what) + ": expected space " + a.describe() + ", got " +
                     b.describe());
  }
}

void validate_rows(const FiniteSpace& dom, const FiniteSpace& cod, const Eigen::MatrixXd& rows) {
  if (rows.rows() != idx(dom.size()) || rows.cols() != idx(cod.size())) {
    std::ostringstream os;
    os << "kernel matrix is " << rows.rows() << "x" << rows.cols() << ", expected "
       << dom.size() << "x" << cod.size();
    throw ShapeError(os.str());
  }
  for (Eigen::Index a = 0; a < rows.rows(); ++a) {
    double total = 0.0;
    for (Eigen::Index b = 0; b < rows.cols(); ++b) {
      const double v = rows(a, b);
      if (!std::isfinite(v) || v < 0.0) {
        std::ostringstream os;
        os << "row " << a << " (" << dom.label(static_cast<std::size_t>(a))
           << "): entry " << b << " is " << v << ", expected a finite nonnegative number";
        throw ValidationError(os.str());
      }
      total += v;
    }
    if (std::abs(total - 1.0) > kNormTol) {
      std::ostringstream os;
      os.precision(17);
      os << "row " << a << " (" << dom.label(static_cast<std::size_t>(a)) << ") sums to "
         << total << ", not 1";
      throw ValidationError(os.str());
    }
  }
}

std::size_t column_of(Side side, std::size_t m, std::size_t b, std::size_t ncopar, std::size_t nout) {
  return side == Side::left ? m * nout + b : b * ncopar + m;
}

FiniteSpace fold_product(const std::vector<FiniteSpace>& parts) {
  if (parts.empty()) return FiniteSpace::unit();
  FiniteSpace acc = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) acc = FiniteSpace::product(acc, parts[i]);
  return acc;
}

}  // namespace

// ---------------------------------------------------------------- FiniteSpace

FiniteSpace::FiniteSpace(std::vector<std::string> labels) : labels_(std::move(labels)) {
  if (labels_.empty()) throw ValidationError("a finite space needs at least one outcome");
  std::unordered_set<std::string> seen;
  for (const auto& l : labels_) {
    if (!seen.insert(l).second) throw ValidationError("duplicate outcome label '" + l + "'");
  }
}

FiniteSpace FiniteSpace::unit() {
  FiniteSpace s;
  s.labels_ = {"*"};
  s.unit_ = true;
  return s;
}

FiniteSpace FiniteSpace::range(std::size_t n) {
  std::vector<std::string> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = std::to_string(i);
  return FiniteSpace(std::move(labels));
}

FiniteSpace FiniteSpace::product(const FiniteSpace& a, const FiniteSpace& b) {
  FiniteSpace s;
  s.labels_.reserve(a.size() * b.size());
  for (const auto& la : a.labels_) {
    for (const auto& lb : b.labels_) s.labels_.push_back("(" + la + "," + lb + ")");
  }
  s.factors_ = {a, b};
  return s;
}

std::optional<std::size_t> FiniteSpace::find(std::string_view label) const {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] == label) return i;
  }
  return std::nullopt;
}

std::vector<FiniteSpace> FiniteSpace::flatten() const {
  if (unit_) return {};
  if (factors_.empty()) return {*this};
  std::vector<FiniteSpace> out;
  for (const auto& f : factors_) {
    auto sub = f.flatten();
    out.insert(out.end(), sub.begin(), sub.end());
  }
  return out;
}

std::vector<std::size_t> FiniteSpace::factor_sizes() const {
  std::vector<std::size_t> sizes;
  for (const auto& f : flatten()) sizes.push_back(f.size());
  return sizes;
}

std::string FiniteSpace::describe() const {
  if (unit_) return "I";
  if (factors_.empty()) return std::to_string(size());
  return "(" + factors_[0].describe() + " x " + factors_[1].describe() + ")";
}

bool operator==(const FiniteSpace& a, const FiniteSpace& b) {
  if (a.size() != b.size()) return false;
  const auto fa = a.flatten();
  const auto fb = b.flatten();
  if (fa.size() != fb.size()) return false;
  for (std::size_t i = 0; i < fa.size(); ++i) {
    if (fa[i].labels_ != fb[i].labels_) return false;
  }
  return true;
}

// ----------------------------------------------------------------------- Dist

Dist::Dist(FiniteSpace space, Eigen::VectorXd mass) : space_(std::move(space)), mass_(std::move(mass)) {
  if (mass_.size() != idx(space_.size())) {
    throw ShapeError("distribution has " + std::to_string(mass_.size()) + " entries for a space of size " +
                     std::to_string(space_.size()));
  }
  for (Eigen::Index i = 0; i < mass_.size(); ++i) {
    if (!std::isfinite(mass_(i)) || mass_(i) < 0.0) {
      throw ValidationError("mass of outcome '" + space_.label(static_cast<std::size_t>(i)) +
                            "' is negative or not finite");
    }
  }
  if (std::abs(mass_.sum() - 1.0) > kNormTol) {
    std::ostringstream os;
    os.precision(17);
    os << "distribution sums to " << mass_.sum() << ", not 1";
    throw ValidationError(os.str());
  }
}

Dist Dist::point(FiniteSpace space, std::size_t index) {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(idx(space.size()));
  m(idx(index)) = 1.0;
  return Dist(std::move(space), std::move(m));
}

Dist Dist::uniform(FiniteSpace space) {
  const auto n = idx(space.size());
  return Dist(std::move(space), Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n)));
}

// --------------------------------------------------------------- FiniteKernel

FiniteKernel::FiniteKernel(FiniteSpace dom, FiniteSpace cod, Eigen::MatrixXd rows)
    : dom_(std::move(dom)), cod_(std::move(cod)), rows_(std::move(rows)) {
  validate_rows(dom_, cod_, rows_);
}

FiniteKernel FiniteKernel::identity(const FiniteSpace& space) {
  const auto n = idx(space.size());
  return FiniteKernel(space, space, Eigen::MatrixXd::Identity(n, n));
}

FiniteKernel FiniteKernel::discard(const FiniteSpace& space) {
  return FiniteKernel(space, FiniteSpace::unit(), Eigen::MatrixXd::Ones(idx(space.size()), 1));
}

FiniteKernel FiniteKernel::copy(const FiniteSpace& space) {
  const auto n = space.size();
  Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(idx(n), idx(n * n));
  for (std::size_t a = 0; a < n; ++a) rows(idx(a), idx(a * n + a)) = 1.0;
  return FiniteKernel(space, FiniteSpace::product(space, space), std::move(rows));
}

FiniteKernel FiniteKernel::constant(const FiniteSpace& dom, const Dist& value) {
  Eigen::MatrixXd rows = value.mass().transpose().replicate(idx(dom.size()), 1);
  return FiniteKernel(dom, value.space(), std::move(rows));
}

Dist FiniteKernel::row(std::size_t a) const { return Dist(cod_, rows_.row(idx(a)).transpose()); }

// ---------------------------------------------------------------- CoparKernel

CoparKernel::CoparKernel(FiniteSpace dom, FiniteSpace copar, FiniteSpace out, Eigen::MatrixXd rows,
                         Side side)
    : copar_(std::move(copar)),
      out_(std::move(out)),
      side_(side),
      joint_(std::move(dom),
             side == Side::left ? FiniteSpace::product(copar_, out_) : FiniteSpace::product(out_, copar_),
             std::move(rows)) {}

Dist row(const CoparKernel& k, std::size_t a) { return k.joint().row(a); }

// --------------------------------------------------------------------- Effect

Effect::Effect(FiniteSpace space, Eigen::VectorXd values)
    : space_(std::move(space)), values_(std::move(values)) {
  if (values_.size() != idx(space_.size())) throw ShapeError("effect size does not match its space");
  for (Eigen::Index i = 0; i < values_.size(); ++i) {
    if (std::isnan(values_(i)) || values_(i) < 0.0) {
      throw ValidationError("effect value at '" + space_.label(static_cast<std::size_t>(i)) +
                            "' is not in [0, +inf]");
    }
  }
}

Effect Effect::zero(const FiniteSpace& space) { return constant(space, 0.0); }

Effect Effect::constant(const FiniteSpace& space, double value) {
  return Effect(space, Eigen::VectorXd::Constant(idx(space.size()), value));
}

std::size_t SupportMask::count() const {
  return static_cast<std::size_t>(std::count(supported.begin(), supported.end(), true));
}

// ------------------------------------------------------------------ algebra

double ext_add(double x, double y) {
  if (x == kInf || y == kInf) return kInf;
  return x + y;
}

double ext_mul(double weight, double value) {
  if (weight == 0.0) return 0.0;
  return weight * value;
}

Dist push(const FiniteKernel& k, const Dist& pi) {
  require_same(k.dom(), pi.space(), "push");
  return Dist(k.cod(), k.rows().transpose() * pi.mass());
}

Dist push(const CoparKernel& k, const Dist& pi) { return push(discard_coparam(k), pi); }

FiniteKernel compose(const FiniteKernel& d, const FiniteKernel& c) {
  require_same(d.dom(), c.cod(), "compose");
  return FiniteKernel(c.dom(), d.cod(), c.rows() * d.rows());
}

CoparKernel copy_compose(const FiniteKernel& d, const FiniteKernel& c) {
  require_same(d.dom(), c.cod(), "copy_compose");
  const std::size_t na = c.dom().size(), nb = c.cod().size(), nz = d.cod().size();
  Eigen::MatrixXd rows(idx(na), idx(nb * nz));
  for (std::size_t a = 0; a < na; ++a)
    for (std::size_t b = 0; b < nb; ++b)
      for (std::size_t z = 0; z < nz; ++z) rows(idx(a), idx(b * nz + z)) = d(b, z) * c(a, b);
  return CoparKernel(c.dom(), c.cod(), d.cod(), std::move(rows), Side::left);
}

CoparKernel copy_compose_copar(const CoparKernel& g, const CoparKernel& f) {
  require_same(g.dom(), f.out(), "copy_compose_copar");
  if (g.side() != f.side()) throw ShapeError("copy_compose_copar: coparameter sides differ");
  const std::size_t na = f.dom().size(), nm = f.copar().size(), nb = f.out().size();
  const std::size_t nn = g.copar().size(), nc = g.out().size();
  const std::size_t ncopar = nm * nb * nn;
  Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(idx(na), idx(ncopar * nc));

  if (f.side() == Side::left) {
    // copar index ((m, b), n), column (copar, c)
    for (std::size_t a = 0; a < na; ++a)
      for (std::size_t m = 0; m < nm; ++m)
        for (std::size_t b = 0; b < nb; ++b) {
          const double fw = f(a, m, b);
          if (fw == 0.0) continue;
          for (std::size_t n = 0; n < nn; ++n)
            for (std::size_t c = 0; c < nc; ++c)
              rows(idx(a), idx((((m * nb) + b) * nn + n) * nc + c)) = g(b, n, c) * fw;
        }
    auto copar = FiniteSpace::product(FiniteSpace::product(f.copar(), f.out()), g.copar());
    return CoparKernel(f.dom(), std::move(copar), g.out(), std::move(rows), Side::left);
  }

  // copar index (n, (b, m)), column (c, copar)
  for (std::size_t a = 0; a < na; ++a)
    for (std::size_t m = 0; m < nm; ++m)
      for (std::size_t b = 0; b < nb; ++b) {
        const double fw = f(a, m, b);
        if (fw == 0.0) continue;
        for (std::size_t n = 0; n < nn; ++n)
          for (std::size_t c = 0; c < nc; ++c)
            rows(idx(a), idx(c * ncopar + (n * nb + b) * nm + m)) = g(b, n, c) * fw;
      }
  auto copar = FiniteSpace::product(g.copar(), FiniteSpace::product(f.out(), f.copar()));
  return CoparKernel(f.dom(), std::move(copar), g.out(), std::move(rows), Side::right);
}

FiniteKernel discard_coparam(const CoparKernel& f) {
  const std::size_t na = f.dom().size(), nm = f.copar().size(), nb = f.out().size();
  Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(idx(na), idx(nb));
  for (std::size_t a = 0; a < na; ++a)
    for (std::size_t m = 0; m < nm; ++m)
      for (std::size_t b = 0; b < nb; ++b) rows(idx(a), idx(b)) += f(a, m, b);
  return FiniteKernel(f.dom(), f.out(), std::move(rows));
}

CoparKernel lift(const FiniteKernel& k, Side side) {
  return CoparKernel(k.dom(), FiniteSpace::unit(), k.cod(), k.rows(), side);
}

CoparKernel flatten_copar(const CoparKernel& f) {
  return CoparKernel(f.dom(), fold_product(f.copar().flatten()), f.out(), f.joint().rows(), f.side());
}

FiniteKernel tensor(const FiniteKernel& k1, const FiniteKernel& k2) {
  Eigen::MatrixXd rows(k1.rows().rows() * k2.rows().rows(), k1.rows().cols() * k2.rows().cols());
  for (Eigen::Index a = 0; a < k1.rows().rows(); ++a)
    for (Eigen::Index a2 = 0; a2 < k2.rows().rows(); ++a2)
      for (Eigen::Index b = 0; b < k1.rows().cols(); ++b)
        for (Eigen::Index b2 = 0; b2 < k2.rows().cols(); ++b2)
          rows(a * k2.rows().rows() + a2, b * k2.rows().cols() + b2) = k1.rows()(a, b) * k2.rows()(a2, b2);
  return FiniteKernel(FiniteSpace::product(k1.dom(), k2.dom()), FiniteSpace::product(k1.cod(), k2.cod()),
                      std::move(rows));
}

CoparKernel tensor(const CoparKernel& f1, const CoparKernel& f2) {
  if (f1.side() != f2.side()) throw ShapeError("tensor: coparameter sides differ");
  const std::size_t na = f1.dom().size(), na2 = f2.dom().size();
  const std::size_t nm = f1.copar().size(), nm2 = f2.copar().size();
  const std::size_t nb = f1.out().size(), nb2 = f2.out().size();
  auto copar = FiniteSpace::product(f1.copar(), f2.copar());
  auto out = FiniteSpace::product(f1.out(), f2.out());
  Eigen::MatrixXd rows(idx(na * na2), idx(nm * nm2 * nb * nb2));
  for (std::size_t a = 0; a < na; ++a)
    for (std::size_t a2 = 0; a2 < na2; ++a2)
      for (std::size_t m = 0; m < nm; ++m)
        for (std::size_t m2 = 0; m2 < nm2; ++m2)
          for (std::size_t b = 0; b < nb; ++b)
            for (std::size_t b2 = 0; b2 < nb2; ++b2)
              rows(idx(a * na2 + a2), idx(column_of(f1.side(), m * nm2 + m2, b * nb2 + b2, nm * nm2, nb * nb2))) =
                  f1(a, m, b) * f2(a2, m2, b2);
  return CoparKernel(FiniteSpace::product(f1.dom(), f2.dom()), std::move(copar), std::move(out), std::move(rows),
                     f1.side());
}

Dist product(const Dist& a, const Dist& b) {
  Eigen::VectorXd m(idx(a.size() * b.size()));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) m(idx(i * b.size() + j)) = a[i] * b[j];
  return Dist(FiniteSpace::product(a.space(), b.space()), std::move(m));
}

Dist marginal(const Dist& joint, const FiniteSpace& outer, const FiniteSpace& inner, bool keep_outer) {
  if (outer.size() * inner.size() != joint.size()) {
    throw ShapeError("marginal: split " + outer.describe() + " x " + inner.describe() +
                     " does not match a space of size " + std::to_string(joint.size()));
  }
  const std::size_t no = outer.size(), ni = inner.size();
  Eigen::VectorXd m = Eigen::VectorXd::Zero(idx(keep_outer ? no : ni));
  for (std::size_t i = 0; i < no; ++i)
    for (std::size_t j = 0; j < ni; ++j) m(idx(keep_outer ? i : j)) += joint[i * ni + j];
  return Dist(keep_outer ? outer : inner, std::move(m));
}

Dist marginal_first(const Dist& joint) {
  const auto& f = joint.space().factors();
  if (f.size() != 2) throw ShapeError("marginal_first: distribution is not on a product space");
  return marginal(joint, f[0], f[1], true);
}

Dist marginal_second(const Dist& joint) {
  const auto& f = joint.space().factors();
  if (f.size() != 2) throw ShapeError("marginal_second: distribution is not on a product space");
  return marginal(joint, f[0], f[1], false);
}

Inversion bayes_invert(const CoparKernel& f, const Dist& pi) {
  require_same(f.dom(), pi.space(), "bayes_invert");
  const std::size_t na = f.dom().size(), nm = f.copar().size(), nb = f.out().size();

  Eigen::VectorXd evidence = Eigen::VectorXd::Zero(idx(nb));
  for (std::size_t a = 0; a < na; ++a)
    for (std::size_t m = 0; m < nm; ++m)
      for (std::size_t b = 0; b < nb; ++b) evidence(idx(b)) += f(a, m, b) * pi[a];

  const Side back = opposite(f.side());
  Eigen::MatrixXd rows = Eigen::MatrixXd::Constant(idx(nb), idx(na * nm), 1.0 / static_cast<double>(na * nm));
  SupportMask mask{f.out(), std::vector<bool>(nb, false)};
  for (std::size_t b = 0; b < nb; ++b) {
    if (evidence(idx(b)) <= 0.0) continue;
    mask.supported[b] = true;
    double total = 0.0;
    for (std::size_t a = 0; a < na; ++a)
      for (std::size_t m = 0; m < nm; ++m) {
        const double v = f(a, m, b) * pi[a] / evidence(idx(b));
        rows(idx(b), idx(column_of(back, m, a, nm, na))) = v;
        total += v;
      }
    // evidence(b) is the exact row total, so this only removes summation-order roundoff
    rows.row(idx(b)) /= total;
  }
  return {CoparKernel(f.out(), f.copar(), f.dom(), std::move(rows), back), std::move(mask)};
}

Inversion bayes_invert(const FiniteKernel& f, const Dist& pi) { return bayes_invert(lift(f), pi); }

Effect effect_add(const Effect& g, const Effect& h) {
  require_same(g.space(), h.space(), "effect_add");
  Eigen::VectorXd v(g.values().size());
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = ext_add(g.values()(i), h.values()(i));
  return Effect(g.space(), std::move(v));
}

Effect effect_tensor_sum(const Effect& g, const Effect& h) {
  const std::size_t ng = g.space().size(), nh = h.space().size();
  Eigen::VectorXd v(idx(ng * nh));
  for (std::size_t i = 0; i < ng; ++i)
    for (std::size_t j = 0; j < nh; ++j) v(idx(i * nh + j)) = ext_add(g[i], h[j]);
  return Effect(FiniteSpace::product(g.space(), h.space()), std::move(v));
}

Effect effect_precompose(const Effect& g, const FiniteKernel& k) {
  require_same(k.cod(), g.space(), "effect_precompose");
  Eigen::VectorXd v = Eigen::VectorXd::Zero(k.rows().rows());
  for (Eigen::Index a = 0; a < k.rows().rows(); ++a) {
    double acc = 0.0;
    for (Eigen::Index b = 0; b < k.rows().cols(); ++b) acc = ext_add(acc, ext_mul(k.rows()(a, b), g.values()(b)));
    v(a) = acc;
  }
  return Effect(k.dom(), std::move(v));
}

bool almost_sure_eq(const FiniteKernel& k1, const FiniteKernel& k2, const Dist& ref, double tol) {
  require_same(k1.dom(), k2.dom(), "almost_sure_eq");
  require_same(k1.cod(), k2.cod(), "almost_sure_eq");
  require_same(k1.dom(), ref.space(), "almost_sure_eq");
  for (std::size_t a = 0; a < ref.size(); ++a) {
    if (ref[a] <= 0.0) continue;
    if ((k1.rows().row(idx(a)) - k2.rows().row(idx(a))).cwiseAbs().maxCoeff() > tol) return false;
  }
  return true;
}

bool almost_sure_eq(const CoparKernel& k1, const CoparKernel& k2, const Dist& ref, double tol) {
  require_same(k1.dom(), k2.dom(), "almost_sure_eq");
  require_same(k1.copar(), k2.copar(), "almost_sure_eq");
  require_same(k1.out(), k2.out(), "almost_sure_eq");
  require_same(k1.dom(), ref.space(), "almost_sure_eq");
  for (std::size_t a = 0; a < ref.size(); ++a) {
    if (ref[a] <= 0.0) continue;
    for (std::size_t m = 0; m < k1.copar().size(); ++m)
      for (std::size_t b = 0; b < k1.out().size(); ++b)
        if (std::abs(k1(a, m, b) - k2(a, m, b)) > tol) return false;
  }
  return true;
}

double kl_divergence(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  if (p.size() != q.size()) throw ShapeError("kl_divergence: size mismatch");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p(i) == 0.0) continue;
    if (q(i) == 0.0) return kInf;
    acc += p(i) * (std::log(p(i)) - std::log(q(i)));
  }
  // roundoff can leave a tiny negative value for p == q
  return std::max(acc, 0.0);
}

double kl_divergence(const Dist& p, const Dist& q) {
  require_same(p.space(), q.space(), "kl_divergence");
  return kl_divergence(p.mass(), q.mass());
}

double entropy(const Eigen::VectorXd& p) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i)
    if (p(i) > 0.0) acc -= p(i) * std::log(p(i));
  return acc;
}

}  // namespace statgames::discrete
