// Drives the installed binary end to end and checks the exit-code contract:
// 0 success, 1 user error, 2 internal error.

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

int run_cli(const std::string& args, std::string* out = nullptr) {
  static int counter = 0;
  fs::path cap = fs::path(::testing::TempDir()) / ("cli_capture_" +
                                                   std::to_string(counter++) + ".txt");
  std::string cmd = std::string(GREENDC_BIN) + " " + args + " > " + cap.string() + " 2>&1";
  int status = std::system(cmd.c_str());
  if (out) *out = slurp(cap);
  if (status == -1 || !WIFEXITED(status)) return -1;
  return WEXITSTATUS(status);
}

// One generated workspace shared by the suite: traces, a cluster, a scenario.
class CliFlow : public ::testing::Test {
protected:
  static void SetUpTestSuite() {
    dir_ = new fs::path(fs::path(::testing::TempDir()) / "cli_ws");
    fs::create_directories(*dir_);
    int rc = run_cli("gen-traces --out " + dir_->string() +
                     " --seed 11 --horizon 144 --days 4 --jobs 8 --cluster-capacity 12");
    ASSERT_EQ(rc, 0);
    std::ofstream(*dir_ / "cluster.csv")
        << "host_id,machine_class,cores,idle_watts,full_watts,cpu_capacity\n"
           "h1,small,4,70,150,4\n"
           "h2,small,4,70,150,4\n"
           "h3,mid,8,90,190,5\n";
    std::ofstream(*dir_ / "day.toml") << "name = cli-day\n"
                                         "cluster = cluster.csv\n"
                                         "interactive = interactive.csv\n"
                                         "batch = batch.csv\n"
                                         "solar = solar_autumn.csv\n"
                                         "dt_s = 300\n"
                                         "horizon = 144\n"
                                         "seed = 11\n";
  }

  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }

  static std::string ws(const std::string& rel) { return (*dir_ / rel).string(); }

  static fs::path* dir_;
};

fs::path* CliFlow::dir_ = nullptr;

}  // namespace

TEST(Cli, BadInvocationsAreUserErrors) {
  EXPECT_EQ(run_cli(""), 1);               // a subcommand is required
  EXPECT_EQ(run_cli("frobnicate"), 1);     // unknown subcommand
  EXPECT_EQ(run_cli("run"), 1);            // missing scenario argument
  EXPECT_EQ(run_cli("gen-traces"), 1);     // missing --out
  EXPECT_EQ(run_cli("--help"), 0);
}

TEST_F(CliFlow, GenTracesWritesTheThreeFiles) {
  EXPECT_TRUE(fs::exists(ws("interactive.csv")));
  EXPECT_TRUE(fs::exists(ws("batch.csv")));
  EXPECT_TRUE(fs::exists(ws("solar_autumn.csv")));

  std::string out;
  int rc = run_cli("gen-traces --out " + ws("summer") + " --season summer --days 3", &out);
  EXPECT_EQ(rc, 0);
  EXPECT_TRUE(fs::exists(ws("summer/solar_summer.csv")));

  EXPECT_EQ(run_cli("gen-traces --out " + ws("bad") + " --season winter"), 1);
}

TEST_F(CliFlow, ValidateAcceptsTheWorkspaceScenario) {
  std::string out;
  int rc = run_cli("validate " + ws("day.toml"), &out);
  EXPECT_EQ(rc, 0) << out;
  EXPECT_NE(out.find(": ok ("), std::string::npos) << out;
}

TEST_F(CliFlow, ValidateReportsBrokenScenarios) {
  std::ofstream(ws("broken.toml")) << "cluster = missing.csv\n"
                                      "interactive = interactive.csv\n"
                                      "batch = batch.csv\n"
                                      "solar = solar_autumn.csv\n";
  std::string out;
  int rc = run_cli("validate " + ws("broken.toml"), &out);
  EXPECT_EQ(rc, 1);
  EXPECT_NE(out.find("error"), std::string::npos) << out;
}

TEST_F(CliFlow, RunWritesReportsUnderTheOutRoot) {
  std::string out;
  int rc = run_cli("run " + ws("day.toml") + " --out " + ws("runs"), &out);
  ASSERT_EQ(rc, 0) << out;
  ASSERT_TRUE(fs::exists(ws("runs/cli-day/summary.json"))) << out;
  EXPECT_TRUE(fs::exists(ws("runs/cli-day/intervals.csv")));
  EXPECT_NE(out.find("energy"), std::string::npos);

  auto j = nlohmann::json::parse(slurp(ws("runs/cli-day/summary.json")));
  EXPECT_EQ(j["policy"], "gsa");
  EXPECT_EQ(j["horizon"].get<int>(), 144);
}

TEST_F(CliFlow, SetOverridesFeedTheRun) {
  int rc = run_cli("run " + ws("day.toml") + " --set policy=hs --set name=cli-hs --out " +
                   ws("runs"));
  ASSERT_EQ(rc, 0);
  auto j = nlohmann::json::parse(slurp(ws("runs/cli-hs/summary.json")));
  EXPECT_EQ(j["policy"], "hs");

  EXPECT_EQ(run_cli("run " + ws("day.toml") + " --set policy=nonsense --out " + ws("runs2")),
            1);
}

TEST_F(CliFlow, DuplicateOutputDirsAreRejectedUpFront) {
  int rc = run_cli("run " + ws("day.toml") + " " + ws("day.toml") + " --out " + ws("dup"));
  EXPECT_EQ(rc, 1);
  EXPECT_FALSE(fs::exists(ws("dup/cli-day/summary.json")));
}

TEST_F(CliFlow, CompareDiffsTwoSummaries) {
  ASSERT_EQ(run_cli("run " + ws("day.toml") + " --out " + ws("cmp_a")), 0);
  ASSERT_EQ(run_cli("run " + ws("day.toml") + " --set policy=hs --out " + ws("cmp_b")), 0);

  std::string out;
  int rc = run_cli("compare " + ws("cmp_a/cli-day/summary.json") + " " +
                       ws("cmp_b/cli-day/summary.json"),
                   &out);
  EXPECT_EQ(rc, 0) << out;
  EXPECT_NE(out.find("brown_kwh"), std::string::npos);
  EXPECT_NE(out.find("gsa"), std::string::npos);
  EXPECT_NE(out.find("hs"), std::string::npos);

  // A shorter run has a different shape; refusing beats a misleading table.
  ASSERT_EQ(run_cli("run " + ws("day.toml") + " --set horizon=72 --out " + ws("cmp_c")), 0);
  rc = run_cli("compare " + ws("cmp_a/cli-day/summary.json") + " " +
                   ws("cmp_c/cli-day/summary.json"),
               &out);
  EXPECT_EQ(rc, 1);
  EXPECT_NE(out.find("horizon"), std::string::npos) << out;
}

TEST_F(CliFlow, TrainSolarPrintsFitQuality) {
  std::string out;
  int rc = run_cli("train-solar " + ws("solar_autumn.csv"), &out);
  EXPECT_EQ(rc, 0) << out;
  EXPECT_NE(out.find("holdout r2"), std::string::npos);

  EXPECT_EQ(run_cli("train-solar " + ws("nonexistent.csv")), 1);
}
