#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "statgames/errors.hpp"
#include "statgames/games.hpp"

using namespace statgames;
using namespace fixture;
using Eigen::MatrixXd;

namespace {

LossFn constant_loss(const BayesLens& l, double v) {
  return LossFn(l.dom(), l.out(), [v](const State&, const Point&) { return v; });
}

}  // namespace

TEST(Games, LossSpacesMustMatchLens) {
  const BayesLens l = exact_lens(forward(oracle::random_stochastic(2, 3, 301)));
  const Object X = discrete::FiniteSpace::range(2);
  EXPECT_THROW(make_game(l, LossFn::zero(X, X)), ShapeError);
  EXPECT_NO_THROW(make_game(l, kl_loss(l)));
}

TEST(Games, HorizontalCompositeOfZeroLosses) {
  const BayesLens c = exact_lens(forward(oracle::random_stochastic(2, 3, 302)));
  const BayesLens d = exact_lens(forward(oracle::random_stochastic(3, 2, 303)));
  const GameRef g = game_hcompose(make_game(d, LossFn::zero(d.dom(), d.out())), make_game(c, LossFn::zero(c.dom(), c.out())));
  EXPECT_EQ(g->loss(dist(Eigen::Vector2d(0.3, 0.7)), std::size_t{1}), 0.0);
}

TEST(Games, HorizontalCompositeOfExactKlGames) {
  const BayesLens c = exact_lens(forward(oracle::random_stochastic(3, 3, 304)));
  const BayesLens d = exact_lens(forward(oracle::random_stochastic(3, 2, 305)));
  const GameRef g = game_hcompose(make_game(d, kl_loss(d)), make_game(c, kl_loss(c)));
  for (std::size_t z = 0; z < 2; ++z) EXPECT_NEAR(g->loss(dist(oracle::random_simplex(3, 306)), z), 0.0, 1e-14);
}

TEST(Games, HorizontalCompositeMatchesFormula) {
  const MatrixXd cf = oracle::random_stochastic(2, 3, 307), cb = oracle::random_stochastic(3, 2, 308);
  const MatrixXd df = oracle::random_stochastic(3, 2, 309), db = oracle::random_stochastic(2, 3, 310);
  const BayesLens c = fixed_lens(cf, cb), d = fixed_lens(df, db);
  const GameRef g = game_hcompose(make_game(d, mle_loss(d)), make_game(c, mle_loss(c)));
  const Eigen::VectorXd pi = oracle::random_simplex(2, 311);
  const Eigen::VectorXd cpi = oracle::push(cf, pi);
  const Eigen::VectorXd p = oracle::push(cf, pi);
  for (Eigen::Index z = 0; z < 2; ++z) {
    double ref = -std::log(oracle::push(df, cpi)(z));
    for (Eigen::Index y = 0; y < 3; ++y) ref += db(z, y) * -std::log(p(y));
    EXPECT_NEAR(g->loss(dist(pi), static_cast<std::size_t>(z)), ref, 1e-13);
  }
}

TEST(Games, VerticalCompositeOfConstants) {
  const BayesLens l = exact_lens(forward(oracle::random_stochastic(2, 2, 312)));
  const GameRef g0 = make_game(l, constant_loss(l, 0.75));
  const GameRef g1 = make_game(l, constant_loss(l, 0.25));
  const GameRef g2 = make_game(l, constant_loss(l, 0.0));
  const std::vector<Probe> probes{{dist(Eigen::Vector2d(0.5, 0.5)), std::size_t{0}}};
  const TwoCellWitness w1(g0, g1, constant_loss(l, 0.5), probes);
  const TwoCellWitness w2(g1, g2, constant_loss(l, 0.25), probes);
  const TwoCellWitness w = game_vcompose(w2, w1);
  EXPECT_DOUBLE_EQ(w.K()(probes[0].prior, probes[0].obs), 0.75);
  EXPECT_EQ(w.from(), g0);
  EXPECT_EQ(w.to(), g2);
  EXPECT_THROW(game_vcompose(w1, w2), CompositionError);
  EXPECT_THROW(TwoCellWitness(g0, g1, constant_loss(l, 0.1), probes), ValidationError);
  EXPECT_NO_THROW(TwoCellWitness::identity(g0, probes));
}

TEST(Games, SectionClassification) {
  std::vector<LensPair> pairs;
  std::vector<std::vector<Probe>> probes;
  for (unsigned s = 0; s < 5; ++s) {
    pairs.push_back({exact_lens(forward(oracle::random_stochastic(3, 2, 10 * s + 1))),
                     exact_lens(forward(oracle::random_stochastic(2, 3, 10 * s + 2)))});
    probes.push_back({{dist(oracle::random_simplex(2, 10 * s + 3)), std::size_t{0}},
                      {dist(oracle::random_simplex(2, 10 * s + 4)), std::size_t{1}}});
  }
  const SectionReport kl = section_check(LossModel::KL, pairs, probes);
  EXPECT_EQ(kl.classification, Classification::strict);
  EXPECT_EQ(kl.n_probes, 10u);
  const SectionReport mle = section_check(LossModel::MLE, pairs, probes);
  EXPECT_EQ(mle.classification, Classification::lax);
  EXPECT_GT(mle.worst_abs_K, 0.0);
}
