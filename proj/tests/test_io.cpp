#include <gtest/gtest.h>

#include "statgames/errors.hpp"
#include "statgames/io.hpp"

using namespace statgames;
using namespace statgames::io;

namespace {

std::string data(const char* name) { return std::string(STATGAMES_DATA) + "/" + name; }

}  // namespace

TEST(Io, DetectKinds) {
  EXPECT_EQ(detect(load_json(data("weather.json"))), Kind::kernel);
  EXPECT_EQ(detect(load_json(data("weather_prior.json"))), Kind::dist);
  EXPECT_EQ(detect(load_json(data("gauss_prior.json"))), Kind::gauss_state);
  EXPECT_EQ(detect(load_json(data("bernoulli.json"))), Kind::lens);
}

TEST(Io, ParseKernelWithCoparameter) {
  const auto k = std::get<discrete::CoparKernel>(parse_channel(load_json(data("weather.json"))));
  EXPECT_EQ(k.copar().size(), 2u);
  EXPECT_EQ(k.out().size(), 2u);
  EXPECT_DOUBLE_EQ(k(0, 0, 0), 0.6);
  EXPECT_DOUBLE_EQ(k(1, 1, 1), 0.6);
}

TEST(Io, ParseLensAndPoint) {
  const BayesLens l = parse_lens(load_json(data("bernoulli.json")));
  const Point y = parse_point("1", l.out());
  EXPECT_EQ(std::get<std::size_t>(y), 1u);
  EXPECT_THROW(parse_point("7", l.out()), ParseError);
  const BayesLens g = parse_lens(load_json(data("gauss_latent.json")));
  EXPECT_EQ(std::get<Eigen::VectorXd>(parse_point("0.2,-1", g.out())).size(), 2);
  EXPECT_THROW(parse_point("0.2", g.out()), ParseError);
}

TEST(Io, TabulatedBackward) {
  const BayesLens l = parse_lens(load_json(data("tabulated.json")));
  const discrete::FiniteSpace X = std::get<discrete::FiniteSpace>(l.dom());
  EXPECT_NO_THROW(l.bwd(discrete::Dist::uniform(X)));
  EXPECT_THROW(l.bwd(discrete::Dist(X, Eigen::Vector2d(0.2, 0.8))), SupportError);
}

TEST(Io, RejectsNonStochasticRows) {
  EXPECT_THROW(parse_channel(load_json(data("bad_kernel.json"))), ValidationError);
}

TEST(Io, SyntaxErrorsCarryPosition) {
  try {
    parse_channel(Json::parse("{}"));
    FAIL();
  } catch (const ParseError&) {
  }
  const std::string path = ::testing::TempDir() + "/broken.json";
  FILE* f = std::fopen(path.c_str(), "w");
  std::fputs("{\n  \"dom\": [1,\n", f);
  std::fclose(f);
  try {
    load_json(path);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line"), std::string::npos);
  }
}

TEST(Io, ChannelRoundTrip) {
  const Channel c = parse_channel(load_json(data("weather.json")));
  const Channel back = parse_channel(to_json(c));
  EXPECT_LT(channel_distance(c, back), 1e-17);
  const State s = parse_state(load_json(data("gauss_prior.json")));
  const State parsed = parse_state(to_json(s));
  const auto& g = std::get<gaussian::GaussState>(parsed);
  EXPECT_DOUBLE_EQ(g.cov()(0, 1), 0.3);
}
