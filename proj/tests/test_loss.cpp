#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"
#include "statgames/errors.hpp"

using namespace statgames;
using namespace fixture;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

const double kPi = std::acos(-1.0);

double kl_oracle(const MatrixXd& fwd, const MatrixXd& bwd, const VectorXd& pi, Eigen::Index y) {
  return oracle::kl(bwd.row(y).transpose(), oracle::bayes(fwd, pi, y));
}

double mle_oracle(const MatrixXd& fwd, const VectorXd& pi, Eigen::Index y) {
  return -std::log(oracle::push(fwd, pi)(y));
}

}  // namespace

TEST(Loss, ParseLossModel) {
  EXPECT_EQ(parse_loss_model("kl"), LossModel::KL);
  EXPECT_EQ(parse_loss_model("Fe"), LossModel::FE);
  EXPECT_EQ(parse_loss_model("LFE"), LossModel::LFE);
  EXPECT_FALSE(parse_loss_model("elbo").has_value());
  EXPECT_STREQ(to_string(LossModel::MLE), "MLE");
}

TEST(Loss, KlOfExactLensIsZero) {
  const BayesLens l = exact_lens(forward(oracle::random_stochastic(3, 4, 201)));
  const State pi = dist(oracle::random_simplex(3, 202));
  for (std::size_t y = 0; y < 4; ++y) EXPECT_NEAR(kl_loss(l)(pi, y), 0.0, 1e-15);
}

TEST(Loss, KlBernoulliExample) {
  const MatrixXd fwd = (MatrixXd(2, 2) << 0.75, 0.25, 0.25, 0.75).finished();
  const BayesLens l = fixed_lens(fwd, MatrixXd::Constant(2, 2, 0.5));
  const double v = kl_loss(l)(dist(Eigen::Vector2d(0.5, 0.5)), std::size_t{0});
  EXPECT_NEAR(v, 0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0), 1e-15);
  EXPECT_NEAR(v, 0.1438, 1e-4);
}

TEST(Loss, KlMatchesOracle) {
  const MatrixXd fwd = oracle::random_stochastic(3, 2, 203), bwd = oracle::random_stochastic(2, 3, 204);
  const VectorXd pi = oracle::random_simplex(3, 205);
  for (Eigen::Index y = 0; y < 2; ++y)
    EXPECT_NEAR(kl_loss(fixed_lens(fwd, bwd))(dist(pi), static_cast<std::size_t>(y)), kl_oracle(fwd, bwd, pi, y),
                1e-14);
}

TEST(Loss, KlInfiniteWhenBackwardLeavesSupport) {
  const MatrixXd fwd = (MatrixXd(2, 2) << 1.0, 0.0, 0.5, 0.5).finished();
  const BayesLens l = fixed_lens(fwd, MatrixXd::Constant(2, 2, 0.5));
  EXPECT_TRUE(std::isinf(kl_loss(l)(dist(Eigen::Vector2d(0.5, 0.5)), std::size_t{1})));
}

TEST(Loss, KlUnsupportedObservationThrows) {
  const MatrixXd fwd = (MatrixXd(2, 2) << 1.0, 0.0, 1.0, 0.0).finished();
  EXPECT_THROW(kl_loss(exact_lens(forward(fwd)))(dist(Eigen::Vector2d(0.5, 0.5)), std::size_t{1}), SupportError);
}

TEST(Loss, KlGaussianExample) {
  const gaussian::GaussChannel fwd(MatrixXd::Zero(1, 1), v1(0.0), m1(1.0));
  const gaussian::GaussChannel bwd(MatrixXd::Zero(1, 1), v1(1.0), m1(1.0), 0, Side::right);
  EXPECT_NEAR(kl_loss(fixed_gauss_lens(fwd, bwd))(gaussian::GaussState::standard(1), VectorXd(v1(0.3))), 0.5, 1e-15);
}

TEST(Loss, MleExamples) {
  const MatrixXd unif = MatrixXd::Constant(2, 4, 0.25);
  for (std::size_t y = 0; y < 4; ++y)
    EXPECT_NEAR(mle_loss(exact_lens(forward(unif)))(dist(Eigen::Vector2d(0.3, 0.7)), y), std::log(4.0), 1e-15);
  const MatrixXd bern = (MatrixXd(2, 2) << 0.75, 0.25, 0.75, 0.25).finished();
  const double v = mle_loss(exact_lens(forward(bern)))(dist(Eigen::Vector2d(0.5, 0.5)), std::size_t{1});
  EXPECT_NEAR(v, -std::log(0.25), 1e-15);
  EXPECT_NEAR(v, 1.3863, 1e-4);
  const BayesLens g = exact_lens(gaussian::GaussChannel(MatrixXd::Zero(1, 1), v1(0.0), m1(1.0)));
  EXPECT_NEAR(mle_loss(g)(gaussian::GaussState::standard(1), VectorXd(v1(0.0))), 0.5 * std::log(2.0 * kPi), 1e-15);
}

TEST(Loss, MleMatchesOracle) {
  const MatrixXd fwd = oracle::random_stochastic(4, 3, 206);
  const VectorXd pi = oracle::random_simplex(4, 207);
  for (Eigen::Index y = 0; y < 3; ++y)
    EXPECT_NEAR(mle_loss(exact_lens(forward(fwd)))(dist(pi), static_cast<std::size_t>(y)), mle_oracle(fwd, pi, y),
                1e-14);
}

TEST(Loss, FeOfExactLensIsMle) {
  const BayesLens l = exact_lens(forward(oracle::random_stochastic(3, 3, 208)));
  const State pi = dist(oracle::random_simplex(3, 209));
  for (std::size_t y = 0; y < 3; ++y) EXPECT_NEAR(fe_loss(l)(pi, y), mle_loss(l)(pi, y), 1e-15);
}

TEST(Loss, FeJointFormMatchesFe) {
  for (unsigned s = 0; s < 100; ++s) {
    const MatrixXd fwd = oracle::random_stochastic(3, 4, 4 * s + 1), bwd = oracle::random_stochastic(4, 3, 4 * s + 2);
    const VectorXd pi = oracle::random_simplex(3, 4 * s + 3);
    const BayesLens l = fixed_lens(fwd, bwd);
    for (std::size_t y = 0; y < 4; ++y) {
      const double fe = kl_oracle(fwd, bwd, pi, static_cast<Eigen::Index>(y)) +
                        mle_oracle(fwd, pi, static_cast<Eigen::Index>(y));
      EXPECT_NEAR(fe_loss(l)(dist(pi), y), fe, 1e-12);
      EXPECT_NEAR(fe_joint_form(l)(dist(pi), y), fe, 1e-9);
    }
  }
}

TEST(Loss, FeJointFormPointMassPrior) {
  const MatrixXd fwd = oracle::random_stochastic(3, 2, 210);
  const BayesLens l = exact_lens(forward(fwd));
  const State pi = discrete::Dist::point(discrete::FiniteSpace::range(3), 1);
  for (std::size_t y = 0; y < 2; ++y) {
    EXPECT_NEAR(fe_joint_form(l)(pi, y), -std::log(fwd(1, static_cast<Eigen::Index>(y))), 1e-12);
    EXPECT_NEAR(fe_joint_form(l)(pi, y), fe_loss(l)(pi, y), 1e-12);
  }
}

TEST(Loss, EnergyEntropyDiscrete) {
  const MatrixXd fwd = oracle::random_stochastic(3, 3, 211), bwd = oracle::random_stochastic(3, 3, 212);
  const VectorXd pi = oracle::random_simplex(3, 213);
  const BayesLens l = fixed_lens(fwd, bwd);
  for (std::size_t y = 0; y < 3; ++y) {
    const EnergyEntropy ee = energy_entropy_decomp(l, dist(pi), y);
    EXPECT_NEAR(ee.entropy, oracle::entropy(bwd.row(static_cast<Eigen::Index>(y)).transpose()), 1e-14);
    double energy = 0.0;
    for (Eigen::Index x = 0; x < 3; ++x)
      energy -= bwd(static_cast<Eigen::Index>(y), x) * (std::log(fwd(x, static_cast<Eigen::Index>(y))) + std::log(pi(x)));
    EXPECT_NEAR(ee.energy, energy, 1e-14);
    EXPECT_NEAR(ee.energy - ee.entropy, fe_loss(l)(dist(pi), y), 1e-9);
  }
}

TEST(Loss, EnergyEntropyGaussianScalar) {
  const gaussian::GaussChannel fwd(m1(1.5), v1(0.5), m1(0.64));
  const gaussian::GaussChannel bwd(m1(0.3), v1(0.1), m1(0.4), 0, Side::right);
  const BayesLens l = fixed_gauss_lens(fwd, bwd);
  const gaussian::GaussState pi = gaussian::GaussState::standard(1);
  const VectorXd y = v1(1.0);
  const EnergyEntropy ee = energy_entropy_decomp(l, pi, y);
  // q = N(0.4, 0.4); energy = E_q[(y - 1.5x - 0.5)^2 / (2 * 0.64) + x^2 / 2] + log(2 pi) / 2 + log(2 pi 0.64) / 2
  const double mq = 0.4, vq = 0.4;
  const double resid = (1.0 - 1.5 * mq - 0.5);
  const double energy = (resid * resid + 2.25 * vq) / (2 * 0.64) + (mq * mq + vq) / 2 + 0.5 * std::log(2 * kPi) +
                        0.5 * std::log(2 * kPi * 0.64);
  EXPECT_NEAR(ee.energy, energy, 1e-12);
  EXPECT_NEAR(ee.entropy, 0.5 * std::log(2 * kPi * std::exp(1.0) * vq), 1e-14);
  EXPECT_NEAR(ee.energy - ee.entropy, fe_loss(l)(pi, y), 1e-9);
  EXPECT_NEAR(fe_joint_form(l)(pi, y), fe_loss(l)(pi, y), 1e-9);
}

TEST(Loss, LfeRejectsDiscrete) {
  EXPECT_THROW(lfe_loss(exact_lens(forward(MatrixXd::Identity(2, 2)))), InstanceError);
}

TEST(Loss, LaplaceScalar) {
  const BayesLens l = exact_lens(gaussian::GaussChannel(m1(1.0), v1(0.0), m1(1.0)));
  const gaussian::GaussState pi = gaussian::GaussState::standard(1);
  EXPECT_NEAR(laplace_hessian(l, pi)(0, 0), 2.0, 1e-15);
  EXPECT_NEAR(laplace_sigma(l, pi, VectorXd(v1(0.7)))(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(laplace_gap(l, pi, VectorXd(v1(0.7))), 0.5, 1e-14);
  EXPECT_NEAR(fe_loss(l)(pi, VectorXd(v1(0.7))) - lfe_loss(l)(pi, VectorXd(v1(0.7))), 0.5, 1e-12);
}

TEST(Loss, LaplaceBlockDiagonal) {
  const MatrixXd A = Eigen::Vector2d(1.0, 2.0).asDiagonal();
  const MatrixXd N = Eigen::Vector2d(1.0, 0.5).asDiagonal();
  const BayesLens l = exact_lens(gaussian::GaussChannel(A, VectorXd::Zero(2), N));
  const gaussian::GaussState pi(VectorXd::Zero(2), Eigen::Vector2d(1.0, 3.0).asDiagonal());
  const MatrixXd S = laplace_sigma(l, pi, VectorXd::Zero(2));
  EXPECT_NEAR(S(0, 1), 0.0, 1e-15);
  EXPECT_NEAR(S(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(S(1, 1), 1.0 / (1.0 / 3.0 + 8.0), 1e-15);
}

TEST(Loss, LaplaceGapVanishesInDeterministicLimit) {
  const gaussian::GaussChannel fwd(m1(1.0), v1(0.0), m1(1.0));
  const gaussian::GaussChannel bwd(m1(0.5), v1(0.0), m1(1e-10), 0, Side::right);
  const BayesLens l = fixed_gauss_lens(fwd, bwd);
  const gaussian::GaussState pi = gaussian::GaussState::standard(1);
  const VectorXd y = v1(0.4);
  EXPECT_NEAR(laplace_gap(l, pi, y), 1e-10, 1e-20);
  EXPECT_NEAR(fe_loss(l)(pi, y) - lfe_loss(l)(pi, y), laplace_gap(l, pi, y), 1e-8);
}

TEST(Loss, ComposeWithZeroIsReindexed) {
  const MatrixXd cm = oracle::random_stochastic(3, 2, 214), dm = oracle::random_stochastic(2, 3, 215);
  const BayesLens c = exact_lens(forward(cm)), d = fixed_lens(dm, oracle::random_stochastic(3, 2, 216));
  const LossFn L = loss_compose(kl_loss(d), LossFn::zero(c.dom(), c.out()), d, c);
  const VectorXd pi = oracle::random_simplex(3, 217);
  for (std::size_t z = 0; z < 3; ++z) EXPECT_NEAR(L(dist(pi), z), kl_loss(d)(dist(oracle::push(cm, pi)), z), 1e-15);
}

TEST(Loss, ComposeKlOfExactLensesIsZero) {
  const BayesLens c = exact_lens(forward(oracle::random_stochastic(3, 2, 218)));
  const BayesLens d = exact_lens(forward(oracle::random_stochastic(2, 3, 219)));
  const LossFn L = loss_compose(kl_loss(d), kl_loss(c), d, c);
  const State pi = dist(oracle::random_simplex(3, 220));
  for (std::size_t z = 0; z < 3; ++z) EXPECT_NEAR(L(pi, z), 0.0, 1e-14);
}

TEST(Loss, ComposeMatchesEnumeration) {
  for (unsigned s = 0; s < 20; ++s) {
    const MatrixXd cf = oracle::random_stochastic(3, 2, 6 * s + 1), cb = oracle::random_stochastic(2, 3, 6 * s + 2);
    const MatrixXd df = oracle::random_stochastic(2, 4, 6 * s + 3), db = oracle::random_stochastic(4, 2, 6 * s + 4);
    const VectorXd pi = oracle::random_simplex(3, 6 * s + 5);
    const BayesLens c = fixed_lens(cf, cb), d = fixed_lens(df, db);
    const LossFn L = loss_compose(kl_loss(d), mle_loss(c), d, c);
    const VectorXd cpi = oracle::push(cf, pi);
    for (Eigen::Index z = 0; z < 4; ++z) {
      double ref = kl_oracle(df, db, cpi, z);
      for (Eigen::Index y = 0; y < 2; ++y) ref += db(z, y) * mle_oracle(cf, pi, y);
      EXPECT_NEAR(L(dist(pi), static_cast<std::size_t>(z)), ref, 1e-13);
    }
  }
}

TEST(Loss, MleWitnessIsExpectedBackwardMle) {
  const MatrixXd cf = oracle::random_stochastic(3, 3, 221), df = oracle::random_stochastic(3, 2, 222);
  const BayesLens c = exact_lens(forward(cf)), d = exact_lens(forward(df));
  const VectorXd pi = oracle::random_simplex(3, 223);
  const VectorXd cpi = oracle::push(cf, pi);
  const LossFn K = laxness_witness(LossModel::MLE, d, c);
  for (Eigen::Index z = 0; z < 2; ++z) {
    const VectorXd q = oracle::bayes(df, cpi, z);
    double ref = 0.0;
    for (Eigen::Index y = 0; y < 3; ++y) ref += q(y) * mle_oracle(cf, pi, y);
    EXPECT_NEAR(K(dist(pi), static_cast<std::size_t>(z)), ref, 1e-13);
    EXPECT_GE(ref, 0.0);
  }
}

TEST(Loss, KlWitnessVanishesForExactLenses) {
  const BayesLens c = exact_lens(forward(oracle::random_stochastic(2, 3, 224)));
  const BayesLens d = exact_lens(forward(oracle::random_stochastic(3, 3, 225)));
  const LossFn K = laxness_witness(LossModel::KL, d, c);
  for (std::size_t z = 0; z < 3; ++z) EXPECT_NEAR(K(dist(oracle::random_simplex(2, 226)), z), 0.0, 1e-14);
}

TEST(Loss, LaxatorsVanishAtProductPrior) {
  const BayesLens c = exact_lens(forward(oracle::random_stochastic(2, 2, 227)));
  const BayesLens d = exact_lens(forward(oracle::random_stochastic(2, 3, 228)));
  const State omega = product(dist(oracle::random_simplex(2, 229)), dist(oracle::random_simplex(2, 230)));
  for (LossModel m : {LossModel::KL, LossModel::MLE, LossModel::FE})
    EXPECT_NEAR(laxator(m, c, d, omega, std::size_t{1}, std::size_t{2}), 0.0, 1e-12);
}

TEST(Loss, MleLaxatorMatchesEnumeration) {
  const MatrixXd cm = oracle::random_stochastic(2, 2, 231), dm = oracle::random_stochastic(2, 2, 232);
  const BayesLens c = exact_lens(forward(cm)), d = exact_lens(forward(dm));
  const Eigen::Vector4d w(0.4, 0.1, 0.05, 0.45);
  const discrete::FiniteSpace X = discrete::FiniteSpace::range(2);
  const State omega = discrete::Dist(discrete::FiniteSpace::product(X, X), w);
  for (Eigen::Index y = 0; y < 2; ++y)
    for (Eigen::Index y2 = 0; y2 < 2; ++y2) {
      double joint = 0.0, pc = 0.0, pd = 0.0;
      for (Eigen::Index x = 0; x < 2; ++x)
        for (Eigen::Index x2 = 0; x2 < 2; ++x2) {
          const double o = w(x * 2 + x2);
          joint += o * cm(x, y) * dm(x2, y2);
          pc += o * cm(x, y);
          pd += o * dm(x2, y2);
        }
      EXPECT_NEAR(laxator(LossModel::MLE, c, d, omega, static_cast<std::size_t>(y), static_cast<std::size_t>(y2)),
                  std::log(pc * pd) - std::log(joint), 1e-13);
    }
}

TEST(Loss, LaxatorContract) {
  const MatrixXd cm = oracle::random_stochastic(2, 3, 233), dm = oracle::random_stochastic(3, 2, 234);
  const BayesLens c = fixed_lens(cm, oracle::random_stochastic(3, 2, 235));
  const BayesLens d = fixed_lens(dm, oracle::random_stochastic(2, 3, 236));
  const BayesLens t = lens_tensor(c, d);
  const VectorXd w = oracle::random_simplex(6, 237);
  const State omega = discrete::Dist(discrete::FiniteSpace::product(discrete::FiniteSpace::range(2),
                                                                     discrete::FiniteSpace::range(3)),
                                     w);
  const auto [mx, mx2] = split(omega, c.dom(), d.dom());
  for (LossModel m : {LossModel::KL, LossModel::MLE, LossModel::FE}) {
    const double whole = model_loss(m, t)(omega, pair_points(std::size_t{2}, std::size_t{1}, d.out()));
    const double parts = model_loss(m, c)(mx, std::size_t{2}) + model_loss(m, d)(mx2, std::size_t{1});
    EXPECT_NEAR(whole, parts + laxator(m, c, d, omega, std::size_t{2}, std::size_t{1}), 1e-12) << to_string(m);
  }
}

TEST(Loss, AddAndSubtract) {
  const Object X = discrete::FiniteSpace::range(2);
  const double inf = std::numeric_limits<double>::infinity();
  const LossFn a(X, X, [](const State&, const Point&) { return 1.5; });
  const LossFn b(X, X, [inf](const State&, const Point&) { return inf; });
  const State pi = dist(Eigen::Vector2d(0.5, 0.5));
  EXPECT_DOUBLE_EQ(loss_add(a, a)(pi, std::size_t{0}), 3.0);
  EXPECT_TRUE(std::isinf(loss_add(a, b)(pi, std::size_t{0})));
  EXPECT_DOUBLE_EQ(loss_sub(b, b)(pi, std::size_t{0}), 0.0);
  EXPECT_THROW(a(pi, std::size_t{5}), ShapeError);
}
