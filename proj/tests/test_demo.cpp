#include <gtest/gtest.h>

#include <cmath>

#include "statgames/demo.hpp"

using namespace statgames;
using namespace statgames::demo;

TEST(Demo, EvidenceClosedForm) {
  const Model m;
  const double v = m.a * m.a + m.sigma * m.sigma;
  const double ref = 0.5 * std::log(2.0 * std::acos(-1.0) * v) + (m.y - m.b) * (m.y - m.b) / (2.0 * v);
  EXPECT_NEAR(neg_log_evidence(m), ref, 1e-15);
}

TEST(Demo, ExactParamsHaveZeroKl) {
  const Model m;
  const double v = m.a * m.a + m.sigma * m.sigma;
  const Params exact{m.a / v, -m.a * m.b / v, std::log(m.sigma * m.sigma / v)};
  const Row r = evaluate(m, exact, 0);
  EXPECT_NEAR(r.kl, 0.0, 1e-14);
  EXPECT_NEAR(r.fe, neg_log_evidence(m), 1e-14);
  EXPECT_NEAR(r.fe, r.kl + r.mle, 1e-12);
}

TEST(Demo, DeterministicPerSeed) {
  Config cfg;
  cfg.steps = 200;
  cfg.seed = 3;
  EXPECT_EQ(to_csv(run(Model{}, cfg)), to_csv(run(Model{}, cfg)));
  Config other = cfg;
  other.seed = 4;
  EXPECT_NE(to_csv(run(Model{}, cfg)), to_csv(run(Model{}, other)));
}

TEST(Demo, ConvergesMonotonically) {
  const Result r = run(Model{}, Config{});
  ASSERT_FALSE(r.diverged);
  for (std::size_t i = 1; i < r.rows.size(); ++i) EXPECT_LE(r.rows[i].fe, r.rows[i - 1].fe + 1e-6);
  EXPECT_LT(r.rows.back().kl, 1e-2);
  EXPECT_LT(std::abs(r.rows.back().fe - r.neg_log_evidence), 1e-2);
}

TEST(Demo, ZeroStepsWritesInitialRow) {
  Config cfg;
  cfg.steps = 0;
  const Result r = run(Model{}, cfg);
  EXPECT_EQ(r.rows.size(), 1u);
  EXPECT_EQ(to_csv(r).rfind("step,fe,kl,mle,gain,offset,logvar", 0), 0u);
}
