#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "crbm_cli_test";

int run(const std::string& args) {
  std::string cmd = std::string(CRBM_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string p(const fs::path& x) { return x.string(); }

// One small end-to-end pipeline shared by the tests below.
class Pipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    fs::remove_all(kRoot);
    fs::create_directories(kRoot);
    std::ofstream(kRoot / "cfg.json") << R"({"batch_size": 50, "epochs": 2, "mc_steps": 2, "hidden_units": 4})";
    std::ofstream(kRoot / "grid.json") << R"({"learning_rate": [0.01, 0.02], "hidden_units": [4]})";
    for (const char* run_dir : {"a", "b"}) {
      auto d = kRoot / run_dir;
      ASSERT_EQ(run("synth --subjects 200 --visits 7 --seed 7 --out " + p(d / "synth")), 0);
      ASSERT_EQ(run("split --data " + p(d / "synth/cohort.csv") + " --schema " + p(d / "synth/schema.json") +
                    " --seed 3 --out " + p(d / "split")),
                0);
      std::string common = " --schema " + p(d / "synth/schema.json") + " --config " + p(kRoot / "cfg.json");
      ASSERT_EQ(run("train --data " + p(d / "split/train.csv") + common +
                    " --model 3mo --imputer-epochs 2 --seed 1 --out " + p(d / "m3")),
                0);
      ASSERT_EQ(run("train --data " + p(d / "split/train.csv") + common + " --model 6mo --seed 2 --out " + p(d / "m6")),
                0);
      ASSERT_EQ(run("sweep --train " + p(d / "split/train.csv") + " --val " + p(d / "split/val.csv") + common +
                    " --grid " + p(kRoot / "grid.json") + " --endpoints " + p(d / "synth/endpoints.json") +
                    " --model 6mo --eval-mc-steps 2 --workers 2 --seed 5 --out " + p(d / "sweep")),
                0);
      ASSERT_EQ(run("twins --data " + p(d / "split/test.csv") + " --schema " + p(d / "synth/schema.json") +
                    " --model3 " + p(d / "m3/model_3mo.crbm") + " --model6 " + p(d / "m6/model_6mo.crbm") +
                    " --n 4 --mc-steps 3 --seed 9 --out " + p(d / "twins")),
                0);
      ASSERT_EQ(run("evaluate --data " + p(d / "split/test.csv") + " --schema " + p(d / "synth/schema.json") +
                    " --twins " + p(d / "twins/twins.csv") + " --endpoints " + p(d / "synth/endpoints.json") +
                    " --trials 3 --seed 4 --out " + p(d / "eval")),
                0);
    }
  }
};

}  // namespace

TEST_F(Pipeline, EveryCsvIsReproducible) {
  std::size_t compared = 0;
  for (const auto& e : fs::recursive_directory_iterator(kRoot / "a")) {
    if (e.path().extension() != ".csv") continue;
    auto twin = kRoot / "b" / fs::relative(e.path(), kRoot / "a");
    ASSERT_TRUE(fs::exists(twin)) << twin;
    EXPECT_EQ(slurp(e.path()), slurp(twin)) << e.path();
    ++compared;
  }
  EXPECT_GE(compared, 15u);
}

TEST_F(Pipeline, OutputsAndManifests) {
  auto a = kRoot / "a";
  for (auto d : {"synth", "split", "m3", "m6", "sweep", "twins", "eval"}) EXPECT_TRUE(fs::exists(a / d / "manifest.json")) << d;
  for (auto f : {"split/train.csv", "split/val.csv", "split/test.csv", "m3/training_log.csv",
                 "sweep/metrics.csv", "sweep/model_6mo.crbm", "eval/calibration.csv", "eval/moments.csv",
                 "eval/discriminator.csv", "eval/progression.csv", "eval/calibration.svg"})
    EXPECT_TRUE(fs::exists(a / f)) << f;
  auto cohort = slurp(a / "synth/cohort.csv");
  EXPECT_EQ(cohort.rfind("subject_id,study_id,visit_month,", 0), 0u);
  auto twins = slurp(a / "twins/twins.csv");
  EXPECT_NE(twins.find("twin_index,source_subject_id,seed"), std::string::npos);
}

TEST_F(Pipeline, TwinCountDefaultsToOneHundred) {
  auto d = kRoot / "a";
  ASSERT_EQ(run("twins --data " + p(d / "split/test.csv") + " --schema " + p(d / "synth/schema.json") + " --model3 " +
                p(d / "m3/model_3mo.crbm") + " --model6 " + p(d / "m6/model_6mo.crbm") +
                " --months 0 --mc-steps 1 --out " + p(kRoot / "default_n")),
            0);
  auto twins = slurp(kRoot / "default_n/twins.csv");
  EXPECT_NE(twins.find("-t99,"), std::string::npos);
  EXPECT_EQ(twins.find("-t100,"), std::string::npos);
  auto manifest = slurp(kRoot / "default_n/manifest.json");
  EXPECT_NE(manifest.find("\"n\": 100"), std::string::npos);
}

TEST_F(Pipeline, SelectedSixMonthConfigIsAccepted) {
  std::ofstream(kRoot / "six.json")
      << R"({"batch_size": 100, "learning_rate": 0.032, "beta_std": 0.15, "adversary_weight": 0, "hidden_units": 32})";
  auto d = kRoot / "a";
  EXPECT_EQ(run("train --data " + p(d / "split/val.csv") + " --schema " + p(d / "synth/schema.json") + " --config " +
                p(kRoot / "six.json") + " --epochs 1 --mc-steps 1 --model 6mo --out " + p(kRoot / "six")),
            0);
  auto m = slurp(kRoot / "six/manifest.json");
  EXPECT_NE(m.find("\"learning_rate\": 0.032"), std::string::npos);
  EXPECT_NE(m.find("\"hidden_units\": 32"), std::string::npos);
}

TEST(Cli, UsageErrorsExitTwo) {
  auto dir = kRoot / "errors";
  EXPECT_EQ(run("synth --subjects 0 --out " + p(dir)), 2);
  EXPECT_EQ(run("synth --subjects 10 --out /proc/no/such/dir"), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run(""), 2);
  ASSERT_EQ(run("synth --subjects 20 --seed 1 --out " + p(dir / "s")), 0);
  EXPECT_EQ(run("split --data " + p(dir / "s/cohort.csv") + " --schema " + p(dir / "s/schema.json") +
                " --ratios 0.5,0.2,0.2 --out " + p(dir / "bad")),
            2);
  EXPECT_EQ(run("twins --data " + p(dir / "s/cohort.csv") + " --schema " + p(dir / "s/schema.json") +
                " --model3 missing.crbm --model6 missing.crbm --out " + p(dir / "tw")),
            2);
  EXPECT_EQ(run("train --data " + p(dir / "s/cohort.csv") + " --schema " + p(dir / "s/schema.json") +
                " --learning-rate -1 --out " + p(dir / "tr")),
            2);
  EXPECT_EQ(run("--version"), 0);
  EXPECT_EQ(run("synth --help"), 0);
}

TEST(Cli, DivergenceExitsOne) {
  auto dir = kRoot / "diverge";
  ASSERT_EQ(run("synth --subjects 30 --seed 2 --out " + p(dir / "s")), 0);
  EXPECT_EQ(run("train --data " + p(dir / "s/cohort.csv") + " --schema " + p(dir / "s/schema.json") +
                " --model 6mo --learning-rate 1e300 --epochs 3 --mc-steps 1 --hidden 4 --out " + p(dir / "t")),
            1);
}
