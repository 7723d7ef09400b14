#include "statgames/loss.hpp"

#include <cctype>
#include <cmath>
#include <limits>
#include <numbers>

namespace statgames {

namespace {

using discrete::CoparKernel;
using discrete::Dist;
using discrete::FiniteSpace;
using discrete::ext_add;
using discrete::ext_mul;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using gaussian::GaussChannel;
using gaussian::GaussState;

constexpr double kInf = std::numeric_limits<double>::infinity();

double neg_log(double p) { return p > 0.0 ? -std::log(p) : kInf; }

std::size_t obs_index(const Point& y, const FiniteSpace& space) {
  const auto* i = std::get_if<std::size_t>(&y);
  if (!i) throw ShapeError("expected a discrete observation");
  if (*i >= space.size()) throw ShapeError("observation index " + std::to_string(*i) + " out of range");
  return *i;
}

const VectorXd& obs_vector(const Point& y, Eigen::Index dim) {
  const auto* v = std::get_if<VectorXd>(&y);
  if (!v) throw ShapeError("expected a real-vector observation");
  if (v->size() != dim) throw ShapeError("observation has dimension " + std::to_string(v->size()));
  return *v;
}

bool point_fits(const Point& y, const Object& space) {
  if (instance_of(y) != instance_of(space)) return false;
  if (const auto* i = std::get_if<std::size_t>(&y)) return *i < std::get<FiniteSpace>(space).size();
  return std::get<VectorXd>(y).size() == std::get<gaussian::Euclidean>(space).dim;
}

// E_{r ~ N(shift, spread)}[-log N(r; 0, cov)]
double expected_nll(const MatrixXd& cov, const VectorXd& shift, const MatrixXd& spread) {
  const MatrixXd inv = gaussian::inverse_spd(cov, "density covariance");
  const double k = static_cast<double>(cov.rows());
  return 0.5 * (k * std::log(2.0 * std::numbers::pi) + gaussian::logdet_spd(cov, "density covariance") +
                shift.dot(inv * shift) + (inv * spread).trace());
}

// E_{x ~ N(mean, spread)}[-log target(x)]
double expected_nll(const GaussState& target, const VectorXd& mean, const MatrixXd& spread) {
  return expected_nll(target.cov(), mean - target.mean(), spread);
}

void require_supported(double mass, std::size_t y) {
  if (!(mass > 0.0)) throw SupportError("observation " + std::to_string(y) + " has zero pushforward mass");
}

// q(x, m) at observation y, indexed x * |M| + m.
VectorXd bwd_row(const CoparKernel& b, std::size_t y) { return b.joint().rows().row(static_cast<Eigen::Index>(y)).transpose(); }

// Embedding of (x, m) into the forward codomain residual r = cod - A x - b.
MatrixXd residual_jacobian(const GaussChannel& f) {
  const Eigen::Index nx = f.dom_dim(), nm = f.copar_dim();
  MatrixXd J = MatrixXd::Zero(f.cod_dim(), nx + nm);
  J.leftCols(nx) = -f.A();
  J.block(f.copar_offset(), nx, nm, nm) = MatrixXd::Identity(nm, nm);
  return J;
}

struct GaussTerms {
  double likelihood;  // E_q[-log p(m, y | x)]
  double prior;       // E_q[-log pi(x)]
  double entropy;     // S[q]
};

GaussTerms gauss_terms(const GaussChannel& f, const GaussState& pi, const GaussState& q, const VectorXd& y) {
  const Eigen::Index nx = f.dom_dim(), nm = f.copar_dim();
  const MatrixXd J = residual_jacobian(f);
  const VectorXd shift = f.assemble(q.mean().segment(nx, nm), y) - f.A() * q.mean().head(nx) - f.b();
  GaussTerms t{};
  t.likelihood = expected_nll(f.noise(), shift, J * q.cov() * J.transpose());
  t.prior = expected_nll(pi, q.mean().head(nx), q.cov().topLeftCorner(nx, nx));
  t.entropy = gaussian::g_entropy(q);
  return t;
}

}  // namespace

const char* to_string(LossModel m) {
  switch (m) {
    case LossModel::KL: return "KL";
    case LossModel::MLE: return "MLE";
    case LossModel::FE: return "FE";
    case LossModel::LFE: return "LFE";
  }
  return "?";
}

std::optional<LossModel> parse_loss_model(std::string_view name) {
  std::string up(name);
  for (auto& ch : up) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  if (up == "KL") return LossModel::KL;
  if (up == "MLE") return LossModel::MLE;
  if (up == "FE") return LossModel::FE;
  if (up == "LFE") return LossModel::LFE;
  return std::nullopt;
}

// ------------------------------------------------------------------ LossFn

LossFn::LossFn(Object prior_space, Object obs_space, Eval eval)
    : prior_(std::move(prior_space)), obs_(std::move(obs_space)), eval_(std::make_shared<const Eval>(std::move(eval))) {
  if (instance_of(prior_) != instance_of(obs_)) throw ShapeError("loss spaces belong to different instances");
}

LossFn LossFn::zero(Object prior_space, Object obs_space) {
  return LossFn(std::move(prior_space), std::move(obs_space), [](const State&, const Point&) { return 0.0; });
}

double LossFn::operator()(const State& prior, const Point& obs) const {
  if (!(space_of(prior) == prior_)) {
    throw ShapeError("loss: prior lives on " + describe(space_of(prior)) + ", expected " + describe(prior_));
  }
  if (!point_fits(obs, obs_)) throw ShapeError("loss: observation does not belong to " + describe(obs_));
  return (*eval_)(prior, obs);
}

LossFn loss_add(const LossFn& a, const LossFn& b) {
  if (!(a.prior_space() == b.prior_space()) || !(a.obs_space() == b.obs_space())) {
    throw ShapeError("loss_add: losses live on different spaces");
  }
  return LossFn(a.prior_space(), a.obs_space(),
                [a, b](const State& pi, const Point& y) { return ext_add(a(pi, y), b(pi, y)); });
}

LossFn loss_sub(const LossFn& a, const LossFn& b) {
  if (!(a.prior_space() == b.prior_space()) || !(a.obs_space() == b.obs_space())) {
    throw ShapeError("loss_sub: losses live on different spaces");
  }
  return LossFn(a.prior_space(), a.obs_space(), [a, b](const State& pi, const Point& y) {
    const double x = a(pi, y), z = b(pi, y);
    if (std::isinf(x) && std::isinf(z) && (x > 0) == (z > 0)) return 0.0;
    return x - z;
  });
}

// ------------------------------------------------------------------ loss models

State posterior(const BayesLens& l, const State& pi, const Point& y) {
  const Channel back = l.bwd(pi);
  if (const auto* k = std::get_if<CoparKernel>(&back)) return discrete::row(*k, obs_index(y, k->dom()));
  const auto& g = std::get<GaussChannel>(back);
  return g.apply(obs_vector(y, g.dom_dim()));
}

LossFn kl_loss(const BayesLens& l) {
  return LossFn(l.dom(), l.out(), [l](const State& pi, const Point& y) {
    if (l.instance() == Instance::discrete) {
      const auto& f = std::get<CoparKernel>(l.fwd());
      const auto& p = std::get<Dist>(pi);
      const std::size_t j = obs_index(y, f.out());
      require_supported(discrete::push(f, p)[j], j);
      const auto exact = discrete::bayes_invert(f, p).backward;
      return discrete::kl_divergence(bwd_row(std::get<CoparKernel>(l.bwd(pi)), j), bwd_row(exact, j));
    }
    const auto& f = std::get<GaussChannel>(l.fwd());
    const VectorXd& v = obs_vector(y, f.out_dim());
    const GaussChannel exact = gaussian::g_invert(f, std::get<GaussState>(pi));
    return gaussian::g_kl(std::get<GaussChannel>(l.bwd(pi)).apply(v), exact.apply(v));
  });
}

LossFn mle_loss(const BayesLens& l) {
  return LossFn(l.dom(), l.out(), [l](const State& pi, const Point& y) {
    if (l.instance() == Instance::discrete) {
      const auto& f = std::get<CoparKernel>(l.fwd());
      return neg_log(discrete::push(f, std::get<Dist>(pi))[obs_index(y, f.out())]);
    }
    const auto& f = std::get<GaussChannel>(l.fwd());
    const GaussState ev = gaussian::g_push(gaussian::g_discard_coparam(f), std::get<GaussState>(pi));
    return -gaussian::g_logpdf(ev, obs_vector(y, f.out_dim()));
  });
}

LossFn fe_loss(const BayesLens& l) { return loss_add(kl_loss(l), mle_loss(l)); }

LossFn fe_joint_form(const BayesLens& l) {
  return LossFn(l.dom(), l.out(), [l](const State& pi, const Point& y) {
    if (l.instance() == Instance::discrete) {
      const auto& f = std::get<CoparKernel>(l.fwd());
      const auto& p = std::get<Dist>(pi);
      const std::size_t j = obs_index(y, f.out());
      const VectorXd q = bwd_row(std::get<CoparKernel>(l.bwd(pi)), j);
      const std::size_t nm = f.copar().size();
      double divergence = 0.0, expected_log = 0.0;
      for (std::size_t x = 0; x < f.dom().size(); ++x) {
        for (std::size_t m = 0; m < nm; ++m) {
          const double w = q(static_cast<Eigen::Index>(x * nm + m));
          if (w <= 0.0) continue;
          divergence = ext_add(divergence, p[x] > 0.0 ? w * std::log(w / p[x]) : kInf);
          expected_log = ext_add(expected_log, ext_mul(w, neg_log(f(x, m, j))));
        }
      }
      return ext_add(divergence, expected_log);
    }
    const auto& f = std::get<GaussChannel>(l.fwd());
    const auto& p = std::get<GaussState>(pi);
    const VectorXd& v = obs_vector(y, f.out_dim());
    const GaussState q = std::get<GaussChannel>(l.bwd(pi)).apply(v);
    const GaussTerms t = gauss_terms(f, p, q, v);
    const double divergence = t.prior - t.entropy;
    return divergence + t.likelihood;
  });
}

EnergyEntropy energy_entropy_decomp(const BayesLens& l, const State& pi, const Point& y) {
  if (!(space_of(pi) == l.dom())) throw ShapeError("energy_entropy_decomp: prior does not match the lens domain");
  if (l.instance() == Instance::discrete) {
    const auto& f = std::get<CoparKernel>(l.fwd());
    const auto& p = std::get<Dist>(pi);
    const std::size_t j = obs_index(y, f.out());
    const VectorXd q = bwd_row(std::get<CoparKernel>(l.bwd(pi)), j);
    const std::size_t nm = f.copar().size();
    double energy = 0.0;
    for (std::size_t x = 0; x < f.dom().size(); ++x)
      for (std::size_t m = 0; m < nm; ++m)
        energy = ext_add(energy, ext_mul(q(static_cast<Eigen::Index>(x * nm + m)),
                                         ext_add(neg_log(f(x, m, j)), neg_log(p[x]))));
    return {energy, discrete::entropy(q)};
  }
  const auto& f = std::get<GaussChannel>(l.fwd());
  const VectorXd& v = obs_vector(y, f.out_dim());
  const GaussState q = std::get<GaussChannel>(l.bwd(pi)).apply(v);
  const GaussTerms t = gauss_terms(f, std::get<GaussState>(pi), q, v);
  return {t.likelihood + t.prior, t.entropy};
}

EnergyEntropy laplace_energy_entropy(const BayesLens& l, const State& pi, const Point& y) {
  if (l.instance() != Instance::gaussian) throw InstanceError("LFE is defined for Gaussian lenses only");
  if (!(space_of(pi) == l.dom())) throw ShapeError("laplace_energy_entropy: prior does not match the lens domain");
  const auto& f = std::get<GaussChannel>(l.fwd());
  const auto& p = std::get<GaussState>(pi);
  const VectorXd& v = obs_vector(y, f.out_dim());
  const GaussState q = std::get<GaussChannel>(l.bwd(pi)).apply(v);
  const Eigen::Index nx = f.dom_dim(), nm = f.copar_dim();
  const VectorXd x = q.mean().head(nx);
  const GaussState lik(f.A() * x + f.b(), f.noise());
  const double energy = -gaussian::g_logpdf(lik, f.assemble(q.mean().segment(nx, nm), v)) - gaussian::g_logpdf(p, x);
  return {energy, gaussian::g_entropy(q)};
}

LossFn lfe_loss(const BayesLens& l) {
  if (l.instance() != Instance::gaussian) throw InstanceError("LFE is defined for Gaussian lenses only");
  return LossFn(l.dom(), l.out(), [l](const State& pi, const Point& y) {
    const auto [energy, entropy] = laplace_energy_entropy(l, pi, y);
    return energy - entropy;
  });
}

LossFn model_loss(LossModel m, const BayesLens& l) {
  switch (m) {
    case LossModel::KL: return kl_loss(l);
    case LossModel::MLE: return mle_loss(l);
    case LossModel::FE: return fe_loss(l);
    case LossModel::LFE: return lfe_loss(l);
  }
  throw InstanceError("unknown loss model");
}

// ------------------------------------------------------------------ Laplace

MatrixXd laplace_hessian(const BayesLens& l, const State& pi) {
  if (l.instance() != Instance::gaussian) throw InstanceError("the Laplace approximation needs a Gaussian lens");
  const auto& f = std::get<GaussChannel>(l.fwd());
  const auto& p = std::get<GaussState>(pi);
  if (p.dim() != f.dom_dim()) throw ShapeError("laplace_hessian: prior dimension does not match the lens");
  const MatrixXd J = residual_jacobian(f);
  MatrixXd H = J.transpose() * gaussian::inverse_spd(f.noise(), "channel noise") * J;
  H.topLeftCorner(f.dom_dim(), f.dom_dim()) += gaussian::inverse_spd(p.cov(), "prior");
  return 0.5 * (H + H.transpose());
}

MatrixXd laplace_sigma(const BayesLens& l, const State& pi, const Point& y) {
  obs_vector(y, std::get<gaussian::Euclidean>(l.out()).dim);
  return gaussian::inverse_spd(laplace_hessian(l, pi), "energy Hessian");
}

double laplace_gap(const BayesLens& l, const State& pi, const Point& y) {
  const MatrixXd H = laplace_hessian(l, pi);
  const State post = posterior(l, pi, y);
  const auto& q = std::get<GaussState>(post);
  return 0.5 * (q.cov() * H).trace();
}

// ------------------------------------------------------------------ composition

double gauss_expectation(const GaussState& s, const std::function<double(const VectorXd&)>& f) {
  const Eigen::Index n = s.dim();
  if (n == 0) return f(s.mean());
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(s.cov());
  const MatrixXd L = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  const double scale = std::sqrt(static_cast<double>(n));
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    acc += f(s.mean() + scale * L.col(i));
    acc += f(s.mean() - scale * L.col(i));
  }
  return acc / (2.0 * static_cast<double>(n));
}

LossFn loss_compose(const LossFn& Ld, const LossFn& Lc, const BayesLens& d, const BayesLens& c) {
  if (d.instance() != c.instance()) throw ShapeError("loss_compose: lenses belong to different instances");
  if (!(d.dom() == c.out())) throw ShapeError("loss_compose: lenses do not compose");
  if (!(Ld.prior_space() == d.dom()) || !(Ld.obs_space() == d.out()) || !(Lc.prior_space() == c.dom()) ||
      !(Lc.obs_space() == c.out())) {
    throw ShapeError("loss_compose: loss spaces do not match the lenses");
  }
  return LossFn(c.dom(), d.out(), [Ld, Lc, d, c](const State& pi, const Point& z) {
    const State mid = push(c.fwd(), pi);
    const double outer = Ld(mid, z);
    const Channel back = d.bwd(mid);
    double inner = 0.0;
    if (const auto* k = std::get_if<CoparKernel>(&back)) {
      const std::size_t j = obs_index(z, k->dom());
      for (std::size_t y = 0; y < k->out().size(); ++y) {
        double w = 0.0;
        for (std::size_t n = 0; n < k->copar().size(); ++n) w += (*k)(j, n, y);
        if (w > 0.0) inner = ext_add(inner, ext_mul(w, Lc(pi, Point{y})));
      }
    } else {
      const auto& g = std::get<GaussChannel>(back);
      const GaussState law = g.apply(obs_vector(z, g.dom_dim()));
      const GaussState ys = gaussian::g_marginal(law, g.out_offset(), g.out_dim());
      inner = gauss_expectation(ys, [&](const VectorXd& y) { return Lc(pi, Point{y}); });
    }
    return ext_add(outer, inner);
  });
}

LossFn laxness_witness(LossModel m, const BayesLens& d, const BayesLens& c) {
  return loss_sub(loss_compose(model_loss(m, d), model_loss(m, c), d, c), model_loss(m, lens_compose(d, c)));
}

// ------------------------------------------------------------------ laxators

namespace {

double discrete_laxator(LossModel m, const BayesLens& c, const BayesLens& d, const Dist& omega, std::size_t y,
                        std::size_t y2) {
  const auto& f1 = std::get<CoparKernel>(c.fwd());
  const auto& f2 = std::get<CoparKernel>(d.fwd());
  const auto [s1, s2] = split(omega, c.dom(), d.dom());
  const auto& w1 = std::get<Dist>(s1);
  const auto& w2 = std::get<Dist>(s2);
  const std::size_t n1 = f1.dom().size(), n2 = f2.dom().size();
  const auto l1 = discrete::discard_coparam(f1);
  const auto l2 = discrete::discard_coparam(f2);

  double p_prod_1 = 0.0, p_prod_2 = 0.0, p_joint = 0.0;
  for (std::size_t x = 0; x < n1; ++x) p_prod_1 += w1[x] * l1(x, y);
  for (std::size_t x = 0; x < n2; ++x) p_prod_2 += w2[x] * l2(x, y2);
  for (std::size_t x = 0; x < n1; ++x)
    for (std::size_t x2 = 0; x2 < n2; ++x2) p_joint += omega[x * n2 + x2] * l1(x, y) * l2(x2, y2);
  const double p_prod = p_prod_1 * p_prod_2;
  if (!(p_prod > 0.0)) throw SupportError("laxator: observation pair has zero pushforward mass");

  if (m == LossModel::MLE) return p_joint > 0.0 ? std::log(p_prod) - std::log(p_joint) : kInf;
  if (!(p_joint > 0.0)) throw SupportError("laxator: observation pair has zero mass under the joint prior");

  const Channel c1 = c.bwd(s1), c2 = d.bwd(s2);
  const auto& b1 = std::get<CoparKernel>(c1);
  const auto& b2 = std::get<CoparKernel>(c2);
  auto x_marginal = [](const CoparKernel& b, std::size_t obs) {
    VectorXd q = VectorXd::Zero(static_cast<Eigen::Index>(b.out().size()));
    for (std::size_t x = 0; x < b.out().size(); ++x)
      for (std::size_t mm = 0; mm < b.copar().size(); ++mm) q(static_cast<Eigen::Index>(x)) += b(obs, mm, x);
    return q;
  };
  const VectorXd q1 = x_marginal(b1, y), q2 = x_marginal(b2, y2);
  double ratio = 0.0;
  for (std::size_t x = 0; x < n1; ++x) {
    for (std::size_t x2 = 0; x2 < n2; ++x2) {
      const double w = q1(static_cast<Eigen::Index>(x)) * q2(static_cast<Eigen::Index>(x2));
      if (w <= 0.0) continue;
      const double joint = omega[x * n2 + x2];
      ratio = ext_add(ratio, joint > 0.0 ? w * (std::log(w1[x] * w2[x2]) - std::log(joint)) : kInf);
    }
  }
  if (m == LossModel::FE) return ratio;
  return ext_add(ratio, std::log(p_joint) - std::log(p_prod));
}

GaussState output_law(const GaussChannel& f, const GaussState& s) {
  return gaussian::g_push(gaussian::g_discard_coparam(f), s);
}

double gaussian_laxator(LossModel m, const BayesLens& c, const BayesLens& d, const GaussState& omega,
                        const VectorXd& y, const VectorXd& y2) {
  const auto& f1 = std::get<GaussChannel>(c.fwd());
  const auto& f2 = std::get<GaussChannel>(d.fwd());
  const auto [s1, s2] = split(omega, c.dom(), d.dom());
  const auto& w1 = std::get<GaussState>(s1);
  const auto& w2 = std::get<GaussState>(s2);
  const Eigen::Index n1 = f1.dom_dim(), n2 = f2.dom_dim();
  const Eigen::Index o1 = f1.out_dim(), o2 = f2.out_dim();

  const GaussState q1 = std::get<GaussChannel>(c.bwd(s1)).apply(y);
  const GaussState q2 = std::get<GaussChannel>(d.bwd(s2)).apply(y2);
  if (m == LossModel::LFE) {
    VectorXd mu(n1 + n2);
    mu << q1.mean().head(n1), q2.mean().head(n2);
    return gaussian::g_logpdf(w1, mu.head(n1)) + gaussian::g_logpdf(w2, mu.tail(n2)) - gaussian::g_logpdf(omega, mu);
  }

  // observation law under the joint prior, with both channels fed in parallel
  const GaussChannel g1 = gaussian::g_discard_coparam(f1), g2 = gaussian::g_discard_coparam(f2);
  MatrixXd A = MatrixXd::Zero(o1 + o2, n1 + n2), N = MatrixXd::Zero(o1 + o2, o1 + o2);
  A.topLeftCorner(o1, n1) = g1.A();
  A.bottomRightCorner(o2, n2) = g2.A();
  N.topLeftCorner(o1, o1) = g1.noise();
  N.bottomRightCorner(o2, o2) = g2.noise();
  VectorXd b(o1 + o2), yy(o1 + o2);
  b << g1.b(), g2.b();
  yy << y, y2;
  const GaussState joint_law(A * omega.mean() + b, A * omega.cov() * A.transpose() + N);
  const double log_joint = gaussian::g_logpdf(joint_law, yy);
  const double log_prod = gaussian::g_logpdf(output_law(f1, w1), y) + gaussian::g_logpdf(output_law(f2, w2), y2);
  if (m == LossModel::MLE) return log_prod - log_joint;

  VectorXd mu(n1 + n2);
  mu << q1.mean().head(n1), q2.mean().head(n2);
  MatrixXd S = MatrixXd::Zero(n1 + n2, n1 + n2);
  S.topLeftCorner(n1, n1) = q1.cov().topLeftCorner(n1, n1);
  S.bottomRightCorner(n2, n2) = q2.cov().topLeftCorner(n2, n2);
  const double ratio = expected_nll(omega, mu, S) - expected_nll(w1, mu.head(n1), S.topLeftCorner(n1, n1)) -
                       expected_nll(w2, mu.tail(n2), S.bottomRightCorner(n2, n2));
  if (m == LossModel::FE) return ratio;
  return ratio + log_joint - log_prod;
}

}  // namespace

double laxator(LossModel m, const BayesLens& c, const BayesLens& d, const State& omega, const Point& y,
               const Point& y2) {
  if (c.instance() != d.instance() || instance_of(omega) != c.instance()) {
    throw ShapeError("laxator: arguments belong to different instances");
  }
  const Object joint = c.instance() == Instance::discrete
                           ? Object{FiniteSpace::product(std::get<FiniteSpace>(c.dom()), std::get<FiniteSpace>(d.dom()))}
                           : Object{gaussian::Euclidean{std::get<gaussian::Euclidean>(c.dom()).dim +
                                                        std::get<gaussian::Euclidean>(d.dom()).dim}};
  if (!(space_of(omega) == joint)) throw ShapeError("laxator: joint prior does not live on the product domain");
  if (!point_fits(y, c.out()) || !point_fits(y2, d.out())) throw ShapeError("laxator: observation out of range");
  if (c.instance() == Instance::discrete) {
    if (m == LossModel::LFE) throw InstanceError("LFE is defined for Gaussian lenses only");
    return discrete_laxator(m, c, d, std::get<Dist>(omega), std::get<std::size_t>(y), std::get<std::size_t>(y2));
  }
  return gaussian_laxator(m, c, d, std::get<GaussState>(omega), std::get<VectorXd>(y), std::get<VectorXd>(y2));
}

}  // namespace statgames
