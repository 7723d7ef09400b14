#include <gtest/gtest.h>

#include "statgames/errors.hpp"
#include "statgames/harness.hpp"

using namespace statgames;
using namespace statgames::harness;

TEST(Harness, TrialSeedsAreStableAndDistinct) {
  EXPECT_EQ(trial_seed(42, "buco", 3), trial_seed(42, "buco", 3));
  EXPECT_NE(trial_seed(42, "buco", 3), trial_seed(42, "buco", 4));
  EXPECT_NE(trial_seed(42, "buco", 3), trial_seed(42, "chain-rule", 3));
  EXPECT_NE(trial_seed(42, "buco", 3), trial_seed(43, "buco", 3));
}

TEST(Harness, RngRanges) {
  Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniform(-2.0, 3.0);
    EXPECT_GE(u, -2.0);
    EXPECT_LT(u, 3.0);
    const std::size_t k = rng.index(2, 5);
    EXPECT_GE(k, 2u);
    EXPECT_LE(k, 5u);
  }
  const Eigen::VectorXd s = rng.simplex(6);
  EXPECT_NEAR(s.sum(), 1.0, 1e-15);
  EXPECT_GT(s.minCoeff(), 0.0);
}

TEST(Harness, GeneratorsProduceValidObjects) {
  Rng rng(11);
  const auto k = gen_kernel(rng, discrete::FiniteSpace::range(4), discrete::FiniteSpace::range(3), true);
  EXPECT_LT((k.rows().rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-14);
  const Eigen::MatrixXd S = gen_spd(rng, 3);
  EXPECT_GT(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(S).eigenvalues().minCoeff(), 0.0);
  EXPECT_EQ(gen_kernel(5, 3, 2).rows(), gen_kernel(5, 3, 2).rows());
}

TEST(Harness, ValidateRejectsBadConfig) {
  SuiteConfig cfg{.suite = "buco"};
  cfg.trials = 0;
  EXPECT_THROW(validate(cfg), ShapeError);
  cfg.trials = 1;
  cfg.tolerance = -1.0;
  EXPECT_THROW(validate(cfg), ShapeError);
}

TEST(Harness, SuiteRegistry) {
  EXPECT_TRUE(is_suite("buco"));
  EXPECT_TRUE(is_suite("laplace"));
  EXPECT_FALSE(is_suite("nonsense"));
  EXPECT_EQ(suite_names().size(), 12u);
}

TEST(Harness, RunsAreDeterministic) {
  SuiteConfig cfg{.suite = "fe-sum", .trials = 10, .seed = 9};
  const SuiteReport a = run_suite(cfg), b = run_suite(cfg);
  EXPECT_EQ(to_json(a, false), to_json(b, false));
  EXPECT_TRUE(a.ok());
  EXPECT_GT(a.checks, 0u);
}

TEST(Harness, EverySuitePassesOnBothInstances) {
  for (const auto& name : suite_names())
    for (Instance inst : {Instance::discrete, Instance::gaussian}) {
      SuiteConfig cfg{.suite = name, .trials = 5, .seed = 1, .instance = inst};
      const SuiteReport r = run_suite(cfg);
      EXPECT_TRUE(r.ok()) << summary_line(r);
    }
}

TEST(Harness, ReportsSerialize) {
  SuiteConfig cfg{.suite = "buco", .trials = 2};
  const SuiteReport r = run_suite(cfg);
  const std::string j = to_json(r);
  EXPECT_NE(j.find("\"suite\""), std::string::npos);
  EXPECT_NE(j.find("inputs-digest"), std::string::npos);
  const std::string csv = to_csv({r});
  EXPECT_EQ(csv.rfind("suite", 0), 0u);
}
