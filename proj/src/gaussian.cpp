#include "statgames/gaussian.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <utility>

namespace statgames::gaussian {

namespace {

using Block = std::pair<Index, Index>;  // (offset, size)

/// Selection matrix stacking the given row blocks of a vector of length `total`.
MatrixXd gather(const std::vector<Block>& blocks, Index total) {
  Index rows = 0;
  for (const auto& [off, n] : blocks) rows += n;
  MatrixXd P = MatrixXd::Zero(rows, total);
  Index r = 0;
  for (const auto& [off, n] : blocks) {
    P.block(r, off, n, n).setIdentity();
    r += n;
  }
  return P;
}

MatrixXd symmetrized(const MatrixXd& m) { return 0.5 * (m + m.transpose()); }

/// Symmetric PSD check with clamping of roundoff-size negative eigenvalues.
MatrixXd repaired_psd(const MatrixXd& m, const char* what) {
  if (m.rows() != m.cols()) throw ShapeError(std::string(what) + " is not square");
  if (!m.allFinite()) throw ValidationError(std::string(what) + " has non-finite entries");
  if (m.size() == 0) return m;
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSymTol) {
    std::ostringstream os;
    os << what << " is not symmetric (max asymmetry " << asym << ")";
    throw ValidationError(os.str());
  }
  MatrixXd s = symmetrized(m);
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(s);
  const double lo = eig.eigenvalues().minCoeff();
  if (lo < -kPsdTol) {
    std::ostringstream os;
    os << what << " is not positive semidefinite (min eigenvalue " << lo << ")";
    throw ValidationError(os.str());
  }
  if (lo < 0.0) {
    const VectorXd clamped = eig.eigenvalues().cwiseMax(0.0);
    s = eig.eigenvectors() * clamped.asDiagonal() * eig.eigenvectors().transpose();
    s = symmetrized(s);
  }
  return s;
}

Eigen::LLT<MatrixXd> factor_spd(const MatrixXd& m, const std::string& block) {
  if (m.rows() != m.cols()) throw ShapeError(block + " is not square");
  Eigen::LLT<MatrixXd> llt(m);
  bool ok = llt.info() == Eigen::Success;
  if (ok && m.rows() > 0) {
    const VectorXd d = llt.matrixLLT().diagonal();
    const double scale = std::max(1.0, m.diagonal().cwiseAbs().maxCoeff());
    ok = d.minCoeff() > 0.0 && d.minCoeff() * d.minCoeff() > 1e-13 * scale;
  }
  if (!ok) throw SingularityError("singular covariance in " + block);
  return llt;
}

}  // namespace

// ----------------------------------------------------------------- GaussState

GaussState::GaussState(VectorXd mean, MatrixXd cov) : mean_(std::move(mean)) {
  if (!mean_.allFinite()) throw ValidationError("Gaussian mean has non-finite entries");
  if (cov.rows() != mean_.size()) {
    throw ShapeError("covariance is " + std::to_string(cov.rows()) + "x" + std::to_string(cov.cols()) +
                     " for a mean of dimension " + std::to_string(mean_.size()));
  }
  cov_ = repaired_psd(cov, "covariance");
}

GaussState GaussState::standard(Index dim) {
  return GaussState(VectorXd::Zero(dim), MatrixXd::Identity(dim, dim));
}

// --------------------------------------------------------------- GaussChannel

GaussChannel::GaussChannel(MatrixXd A, VectorXd b, MatrixXd noise, Index copar_dim, Side side)
    : A_(std::move(A)), b_(std::move(b)), copar_dim_(copar_dim), side_(side) {
  if (A_.rows() < 1 || A_.cols() < 1) throw ShapeError("Gaussian channel needs positive dimensions");
  if (b_.size() != A_.rows()) throw ShapeError("offset dimension does not match the rows of A");
  if (noise.rows() != A_.rows()) throw ShapeError("noise dimension does not match the rows of A");
  if (copar_dim_ < 0 || copar_dim_ > A_.rows()) throw ShapeError("coparameter block exceeds the codomain");
  if (!A_.allFinite() || !b_.allFinite()) throw ValidationError("Gaussian channel has non-finite entries");
  noise_ = repaired_psd(noise, "noise");
}

GaussChannel GaussChannel::identity(Index dim) {
  return GaussChannel(MatrixXd::Identity(dim, dim), VectorXd::Zero(dim), MatrixXd::Zero(dim, dim));
}

GaussChannel GaussChannel::constant(Index dom_dim, const GaussState& value) {
  return GaussChannel(MatrixXd::Zero(value.dim(), dom_dim), value.mean(), value.cov());
}

GaussState GaussChannel::apply(const VectorXd& x) const {
  if (x.size() != dom_dim()) throw ShapeError("channel input has the wrong dimension");
  return GaussState(A_ * x + b_, noise_);
}

VectorXd GaussChannel::assemble(const VectorXd& copar, const VectorXd& out) const {
  if (copar.size() != copar_dim() || out.size() != out_dim()) {
    throw ShapeError("codomain parts have the wrong dimensions");
  }
  VectorXd v(cod_dim());
  v.segment(copar_offset(), copar_dim()) = copar;
  v.segment(out_offset(), out_dim()) = out;
  return v;
}

// ------------------------------------------------------------------- algebra

GaussState g_push(const GaussChannel& c, const GaussState& s) {
  if (s.dim() != c.dom_dim()) throw ShapeError("g_push: state dimension does not match the channel domain");
  return GaussState(c.A() * s.mean() + c.b(), symmetrized(c.A() * s.cov() * c.A().transpose() + c.noise()));
}

GaussState g_joint(const GaussChannel& c, const GaussState& s) {
  if (s.dim() != c.dom_dim()) throw ShapeError("g_joint: state dimension does not match the channel domain");
  const Index n = s.dim(), k = c.cod_dim();
  VectorXd mean(n + k);
  mean << s.mean(), c.A() * s.mean() + c.b();
  MatrixXd cov(n + k, n + k);
  const MatrixXd cross = c.A() * s.cov();
  cov.topLeftCorner(n, n) = s.cov();
  cov.bottomLeftCorner(k, n) = cross;
  cov.topRightCorner(n, k) = cross.transpose();
  cov.bottomRightCorner(k, k) = c.A() * s.cov() * c.A().transpose() + c.noise();
  return GaussState(std::move(mean), symmetrized(cov));
}

GaussChannel g_discard_coparam(const GaussChannel& c) {
  const Index off = c.out_offset(), n = c.out_dim();
  return GaussChannel(c.A().middleRows(off, n), c.b().segment(off, n), c.noise().block(off, off, n, n));
}

GaussChannel g_lift(const GaussChannel& c, Side side) {
  if (c.copar_dim() != 0) throw ShapeError("g_lift: channel already has a coparameter");
  return GaussChannel(c.A(), c.b(), c.noise(), 0, side);
}

GaussChannel g_compose(const GaussChannel& d, const GaussChannel& c) {
  const GaussChannel cd = g_discard_coparam(c);
  const GaussChannel dd = g_discard_coparam(d);
  if (dd.dom_dim() != cd.cod_dim()) throw ShapeError("g_compose: dimension mismatch");
  return GaussChannel(dd.A() * cd.A(), dd.A() * cd.b() + dd.b(),
                      symmetrized(dd.A() * cd.noise() * dd.A().transpose() + dd.noise()));
}

GaussChannel g_copy_compose(const GaussChannel& d, const GaussChannel& c) {
  if (d.dom_dim() != c.out_dim()) throw ShapeError("g_copy_compose: d's domain must match c's output block");
  if (d.side() != c.side()) throw ShapeError("g_copy_compose: coparameter sides differ");
  const Index kc = c.cod_dim(), kd = d.cod_dim();

  // joint over [cod_c; cod_d]
  const MatrixXd select = gather({{c.out_offset(), c.out_dim()}}, kc);
  const MatrixXd feed = d.A() * select;  // cod_c -> mean of cod_d
  MatrixXd A(kc + kd, c.dom_dim());
  A << c.A(), feed * c.A();
  VectorXd b(kc + kd);
  b << c.b(), feed * c.b() + d.b();
  MatrixXd noise(kc + kd, kc + kd);
  noise.topLeftCorner(kc, kc) = c.noise();
  noise.bottomLeftCorner(kd, kc) = feed * c.noise();
  noise.topRightCorner(kc, kd) = (feed * c.noise()).transpose();
  noise.bottomRightCorner(kd, kd) = feed * c.noise() * feed.transpose() + d.noise();

  const Index copar = kc + d.copar_dim();
  if (c.side() == Side::left) return GaussChannel(A, b, symmetrized(noise), copar, Side::left);
  const MatrixXd P = gather({{kc, kd}, {0, kc}}, kc + kd);
  return GaussChannel(P * A, P * b, symmetrized(P * noise * P.transpose()), copar, Side::right);
}

GaussChannel g_tensor(const GaussChannel& c1, const GaussChannel& c2) {
  if (c1.side() != c2.side()) throw ShapeError("g_tensor: coparameter sides differ");
  const Index k1 = c1.cod_dim(), k2 = c2.cod_dim(), n1 = c1.dom_dim(), n2 = c2.dom_dim();
  MatrixXd A = MatrixXd::Zero(k1 + k2, n1 + n2);
  A.topLeftCorner(k1, n1) = c1.A();
  A.bottomRightCorner(k2, n2) = c2.A();
  VectorXd b(k1 + k2);
  b << c1.b(), c2.b();
  MatrixXd noise = MatrixXd::Zero(k1 + k2, k1 + k2);
  noise.topLeftCorner(k1, k1) = c1.noise();
  noise.bottomRightCorner(k2, k2) = c2.noise();

  const std::vector<Block> copars{{c1.copar_offset(), c1.copar_dim()}, {k1 + c2.copar_offset(), c2.copar_dim()}};
  const std::vector<Block> outs{{c1.out_offset(), c1.out_dim()}, {k1 + c2.out_offset(), c2.out_dim()}};
  std::vector<Block> order = c1.side() == Side::left ? copars : outs;
  const auto& rest = c1.side() == Side::left ? outs : copars;
  order.insert(order.end(), rest.begin(), rest.end());
  const MatrixXd P = gather(order, k1 + k2);
  return GaussChannel(P * A, P * b, P * noise * P.transpose(), c1.copar_dim() + c2.copar_dim(), c1.side());
}

GaussChannel g_invert(const GaussChannel& c, const GaussState& prior) {
  if (prior.dim() != c.dom_dim()) throw ShapeError("g_invert: prior dimension does not match the channel domain");
  const GaussState joint = g_joint(c, prior);
  const Index n = c.dom_dim(), total = joint.dim();
  const Side back = opposite(c.side());

  // u = the backward codomain in its own layout, y = the observed output block
  const Block xs{0, n}, ms{n + c.copar_offset(), c.copar_dim()};
  const MatrixXd U = back == Side::right ? gather({xs, ms}, total) : gather({ms, xs}, total);
  const MatrixXd Y = gather({{n + c.out_offset(), c.out_dim()}}, total);

  const MatrixXd Suu = U * joint.cov() * U.transpose();
  const MatrixXd Suy = U * joint.cov() * Y.transpose();
  const MatrixXd Syy = Y * joint.cov() * Y.transpose();
  const auto llt = factor_spd(Syy, "output block");
  const MatrixXd gain = llt.solve(Suy.transpose()).transpose();
  const MatrixXd post = symmetrized(Suu - gain * Suy.transpose());
  if (post.size() > 0) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(post);
    const double scale = std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
    if (eig.eigenvalues().minCoeff() <= 1e-12 * scale) {
      throw SingularityError("singular covariance in posterior block (x, coparameter)");
    }
  }
  const VectorXd offset = U * joint.mean() - gain * (Y * joint.mean());
  return GaussChannel(gain, offset, post, c.copar_dim(), back);
}

double logdet_spd(const MatrixXd& m, const std::string& block) {
  const auto llt = factor_spd(m, block);
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

MatrixXd inverse_spd(const MatrixXd& m, const std::string& block) {
  const auto llt = factor_spd(m, block);
  return symmetrized(llt.solve(MatrixXd::Identity(m.rows(), m.cols())));
}

double g_kl(const GaussState& p, const GaussState& q) {
  if (p.dim() != q.dim()) throw ShapeError("g_kl: dimension mismatch");
  const auto lq = factor_spd(q.cov(), "second argument of KL");
  double logdet_p = 0.0;
  try {
    logdet_p = logdet_spd(p.cov(), "first argument of KL");
  } catch (const SingularityError&) {
    return std::numeric_limits<double>::infinity();
  }
  const VectorXd diff = q.mean() - p.mean();
  const double trace = lq.solve(p.cov()).trace();
  const double maha = diff.dot(lq.solve(diff));
  const double logdet_q = 2.0 * lq.matrixLLT().diagonal().array().log().sum();
  const double kl = 0.5 * (trace + maha - static_cast<double>(p.dim()) + logdet_q - logdet_p);
  return std::max(kl, 0.0);
}

double g_entropy(const GaussState& s) {
  const double k = static_cast<double>(s.dim());
  return 0.5 * (k * std::log(2.0 * std::numbers::pi * std::numbers::e) + logdet_spd(s.cov(), "entropy"));
}

double g_logpdf(const GaussState& s, const VectorXd& x) {
  if (x.size() != s.dim()) throw ShapeError("g_logpdf: point has the wrong dimension");
  const auto llt = factor_spd(s.cov(), "density");
  const VectorXd diff = x - s.mean();
  const double k = static_cast<double>(s.dim());
  const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  return -0.5 * (k * std::log(2.0 * std::numbers::pi) + logdet + diff.dot(llt.solve(diff)));
}

GaussState g_product(const GaussState& a, const GaussState& b) {
  VectorXd mean(a.dim() + b.dim());
  mean << a.mean(), b.mean();
  MatrixXd cov = MatrixXd::Zero(mean.size(), mean.size());
  cov.topLeftCorner(a.dim(), a.dim()) = a.cov();
  cov.bottomRightCorner(b.dim(), b.dim()) = b.cov();
  return GaussState(std::move(mean), std::move(cov));
}

GaussState g_marginal(const GaussState& s, Index offset, Index dim) {
  if (offset < 0 || dim < 0 || offset + dim > s.dim()) throw ShapeError("g_marginal: block out of range");
  return GaussState(s.mean().segment(offset, dim), s.cov().block(offset, offset, dim, dim));
}

double max_abs_diff(const GaussChannel& a, const GaussChannel& b) {
  if (a.dom_dim() != b.dom_dim() || a.cod_dim() != b.cod_dim() || a.copar_dim() != b.copar_dim()) {
    throw ShapeError("max_abs_diff: channel shapes differ");
  }
  double d = (a.A() - b.A()).cwiseAbs().maxCoeff();
  d = std::max(d, (a.b() - b.b()).cwiseAbs().maxCoeff());
  d = std::max(d, (a.noise() - b.noise()).cwiseAbs().maxCoeff());
  return d;
}

}  // namespace statgames::gaussian
