#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "statgames/errors.hpp"

using namespace statgames;
using namespace fixture;
using Eigen::MatrixXd;

TEST(Lens, ExactDiscreteBackwardIsBayes) {
  const MatrixXd m = oracle::random_stochastic(3, 3, 101);
  const Eigen::VectorXd pi = oracle::random_simplex(3, 102);
  const BayesLens l = exact_lens(forward(m));
  const auto back = std::get<discrete::CoparKernel>(l.bwd(dist(pi)));
  for (Eigen::Index y = 0; y < 3; ++y) {
    const Eigen::VectorXd q = oracle::bayes(m, pi, y);
    for (Eigen::Index x = 0; x < 3; ++x)
      EXPECT_NEAR(back(static_cast<std::size_t>(y), 0, static_cast<std::size_t>(x)), q(x), 1e-15);
  }
}

TEST(Lens, ExactIdentityIsIdentityLens) {
  const Object X = discrete::FiniteSpace::range(3);
  const State pi = dist(oracle::random_simplex(3, 103));
  EXPECT_LT(channel_distance(exact_lens(identity_channel(X)).bwd(pi), identity_lens(X).bwd(pi)), 1e-15);
}

TEST(Lens, ExactGaussianScalar) {
  const BayesLens l = exact_lens(gaussian::GaussChannel(m1(1.0), v1(0.0), m1(1.0)));
  const auto back = std::get<gaussian::GaussChannel>(l.bwd(gaussian::GaussState::standard(1)));
  EXPECT_NEAR(back.A()(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(back.b()(0), 0.0, 1e-15);
  EXPECT_NEAR(back.noise()(0, 0), 0.5, 1e-15);
}

TEST(Lens, ComposeWithIdentityKeepsForward) {
  const MatrixXd m = oracle::random_stochastic(2, 3, 104);
  const BayesLens c = exact_lens(forward(m));
  const BayesLens l = lens_compose(identity_lens(c.out()), c);
  const auto f = std::get<discrete::CoparKernel>(l.fwd());
  EXPECT_LT((discrete::discard_coparam(f).rows() - m).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(f.copar().size(), 3u);
}

TEST(Lens, BucoDiscrete) {
  for (unsigned s = 0; s < 50; ++s) {
    const BayesLens c = exact_lens(forward(oracle::random_stochastic(3, 4, 3 * s + 1)));
    const BayesLens d = exact_lens(forward(oracle::random_stochastic(4, 2, 3 * s + 2)));
    EXPECT_LT(buco_residual(c, d, dist(oracle::random_simplex(3, 3 * s + 3))), 1e-9);
  }
}

TEST(Lens, BucoIdentity) {
  const Object X = discrete::FiniteSpace::range(3);
  EXPECT_LT(buco_residual(identity_lens(X), identity_lens(X), dist(oracle::random_simplex(3, 105))), 1e-15);
}

TEST(Lens, BucoGaussian) {
  const gaussian::GaussChannel c((MatrixXd(2, 1) << 1.0, 0.4).finished(), Eigen::Vector2d(0.0, 1.0),
                                 (MatrixXd(2, 2) << 1.0, 0.2, 0.2, 0.5).finished());
  const gaussian::GaussChannel d((MatrixXd(1, 2) << -0.7, 0.3).finished(), v1(0.5), m1(0.8));
  const gaussian::GaussState pi(v1(0.3), m1(2.0));
  EXPECT_LT(buco_residual(exact_lens(c), exact_lens(d), pi), 1e-8);
}

TEST(Lens, BucoFailsForInexactLenses) {
  const MatrixXd m = oracle::random_stochastic(2, 2, 106);
  const BayesLens c = fixed_lens(m, MatrixXd::Constant(2, 2, 0.5));
  const BayesLens d = exact_lens(forward(oracle::random_stochastic(2, 2, 107)));
  EXPECT_GT(buco_residual(c, d, dist(oracle::random_simplex(2, 108))), 1e-3);
}

TEST(Lens, TensorAtProductPriorIsExact) {
  const Channel f1 = forward(oracle::random_stochastic(2, 3, 109)), f2 = forward(oracle::random_stochastic(3, 2, 110));
  const State p1 = dist(oracle::random_simplex(2, 111)), p2 = dist(oracle::random_simplex(3, 112));
  const BayesLens t = lens_tensor(exact_lens(f1), exact_lens(f2));
  const State omega = product(p1, p2);
  EXPECT_LT(channel_distance(t.bwd(omega), invert(t.fwd(), omega), &omega), 1e-14);
}

TEST(Lens, NonSimpleBackwardRejected) {
  const Channel wrong = discrete::lift(kernel(oracle::random_stochastic(3, 2, 113)), Side::right);
  const BayesLens l(forward(oracle::random_stochastic(2, 2, 114)), [wrong](const State&) { return wrong; });
  EXPECT_THROW(l.bwd(dist(Eigen::Vector2d(0.5, 0.5))), ShapeError);
}

TEST(Lens, RightSidedForwardRejected) {
  const Channel right = discrete::lift(kernel(MatrixXd::Identity(2, 2)), Side::right);
  EXPECT_THROW(exact_lens(right), ShapeError);
}

TEST(Lens, ComposeShapeMismatchThrows) {
  const BayesLens c = exact_lens(forward(oracle::random_stochastic(2, 3, 115)));
  const BayesLens d = exact_lens(forward(oracle::random_stochastic(2, 2, 116)));
  EXPECT_THROW(lens_compose(d, c), ShapeError);
  EXPECT_THROW(lens_compose(exact_lens(gaussian::GaussChannel::identity(1)), c), ShapeError);
}

TEST(Lens, PriorOnWrongSpaceThrows) {
  const BayesLens c = exact_lens(forward(oracle::random_stochastic(2, 3, 117)));
  EXPECT_THROW(c.bwd(dist(oracle::random_simplex(3, 118))), ShapeError);
}
