#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>

// Brute-force references, written without the library.
namespace oracle {

inline Eigen::VectorXd push(const Eigen::MatrixXd& k, const Eigen::VectorXd& pi) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(k.cols());
  for (Eigen::Index a = 0; a < k.rows(); ++a)
    for (Eigen::Index b = 0; b < k.cols(); ++b) out(b) += k(a, b) * pi(a);
  return out;
}

inline Eigen::MatrixXd compose(const Eigen::MatrixXd& d, const Eigen::MatrixXd& c) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(c.rows(), d.cols());
  for (Eigen::Index a = 0; a < c.rows(); ++a)
    for (Eigen::Index b = 0; b < c.cols(); ++b)
      for (Eigen::Index z = 0; z < d.cols(); ++z) out(a, z) += c(a, b) * d(b, z);
  return out;
}

inline double kl(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p(i) == 0.0) continue;
    if (q(i) == 0.0) return std::numeric_limits<double>::infinity();
    s += p(i) * std::log(p(i) / q(i));
  }
  return s;
}

inline double entropy(const Eigen::VectorXd& p) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i)
    if (p(i) > 0.0) s -= p(i) * std::log(p(i));
  return s;
}

/// Posterior over x at observation y for a plain kernel and prior.
inline Eigen::VectorXd bayes(const Eigen::MatrixXd& k, const Eigen::VectorXd& pi, Eigen::Index y) {
  Eigen::VectorXd q(k.rows());
  for (Eigen::Index a = 0; a < k.rows(); ++a) q(a) = k(a, y) * pi(a);
  return q / q.sum();
}

inline Eigen::MatrixXd random_stochastic(Eigen::Index n, Eigen::Index m, unsigned seed) {
  std::srand(seed);
  Eigen::MatrixXd k = (Eigen::MatrixXd::Random(n, m).array() + 1.05).matrix();
  for (Eigen::Index a = 0; a < n; ++a) k.row(a) /= k.row(a).sum();
  return k;
}

inline Eigen::VectorXd random_simplex(Eigen::Index n, unsigned seed) {
  std::srand(seed);
  Eigen::VectorXd v = (Eigen::VectorXd::Random(n).array() + 1.05).matrix();
  return v / v.sum();
}

}  // namespace oracle
