#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <string>
#include <sys/wait.h>

namespace {

struct Outcome {
  int code;
  std::string out;
};

Outcome cli(const std::string& args) {
  const std::string dir = ::testing::TempDir() + "/statgames-cli";
  std::filesystem::create_directories(dir);
  const std::string cmd = "STATGAMES_REPORT_DIR=" + dir + " " + STATGAMES_CLI + " " + args + " 2>&1";
  FILE* p = popen(cmd.c_str(), "r");
  std::string out;
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), buf.size(), p)) out += buf.data();
  const int status = pclose(p);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string data(const char* name) { return std::string(STATGAMES_DATA) + "/" + name; }

}  // namespace

TEST(Cli, VerifyPasses) {
  const Outcome r = cli("verify --suite buco,fe-sum --trials 5 --seed 1");
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_TRUE(std::filesystem::exists(::testing::TempDir() + "/statgames-cli/verify-report.json"));
}

TEST(Cli, UnknownSuiteExitsTwo) {
  const Outcome r = cli("verify --suite nonsense");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("buco"), std::string::npos);
}

TEST(Cli, BadArgumentsExitTwo) {
  EXPECT_EQ(cli("verify --trials banana").code, 2);
  EXPECT_EQ(cli("verify --max-dim 1").code, 2);
}

TEST(Cli, EvalLoss) {
  const Outcome r = cli("eval-loss --model " + data("bernoulli.json") + " --loss MLE --obs 1");
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("1.3862943"), std::string::npos) << r.out;
}

TEST(Cli, EvalLossErrors) {
  EXPECT_EQ(cli("eval-loss --model " + data("bad_kernel.json") + " --loss KL --obs x").code, 2);
  EXPECT_EQ(cli("eval-loss --model " + data("weather.json") + " --loss LFE --obs wet").code, 2);
  EXPECT_EQ(cli("eval-loss --model " + data("bernoulli.json") + " --loss KL --obs 9").code, 2);
  EXPECT_EQ(cli("eval-loss --model " + data("tabulated.json") + " --loss KL --obs 1 --prior " + data("weather_prior.json")).code, 2);
}

TEST(Cli, Demo) {
  const Outcome r = cli("demo --steps 50 --seed 2");
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_TRUE(std::filesystem::exists(::testing::TempDir() + "/statgames-cli/demo.csv"));
}

TEST(Cli, Inspect) {
  EXPECT_EQ(cli("inspect --model " + data("gauss_latent.json")).code, 0);
  EXPECT_EQ(cli("inspect --model " + data("bad_kernel.json")).code, 2);
}

TEST(Cli, MissingTabulatedPriorExitsOne) {
  EXPECT_EQ(cli("eval-loss --model " + data("tabulated.json") + " --loss KL --obs 1 --prior " + data("skewed_prior.json")).code, 1);
}
