#include "proglstm/io.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <string>

using namespace proglstm;
namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(PROGLSTM_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

class Cli : public ::testing::Test {
protected:
  static void SetUpTestSuite() {
    dir_ = testsupport::scratch_dir("cli");
    ASSERT_EQ(run("gen-model --seed 5 --input-dim 20 --hidden-dim 8 --actions 4 --out " +
                  p("model")),
              0);
    ASSERT_EQ(run("gen-data --seed 6 --input-dim 20 --frames 12 --sequences 2 --out " +
                  p("data.bin")),
              0);
    ASSERT_EQ(run("decompose --model " + p("model") + " --nz 28 --steps 8 --out " + p("exact")),
              0);
    ASSERT_EQ(run("decompose --model " + p("model") + " --nz 6 --steps 12 --out " + p("sparse")),
              0);
  }
  static std::string p(const std::string& name) { return (dir_ / name).string(); }
  static fs::path dir_;
};

fs::path Cli::dir_;

} // namespace

TEST_F(Cli, MissingOutIsAUsageError) {
  EXPECT_EQ(run("gen-model --seed 1"), 2);
  EXPECT_EQ(run("no-such-command"), 2);
  EXPECT_EQ(run(""), 2);
}

TEST_F(Cli, MissingInputIsADataError) {
  EXPECT_EQ(run("decompose --model " + p("nope") + " --nz 2 --steps 2 --out " + p("x")), 3);
  EXPECT_EQ(run("infer --approx " + p("sparse") + " --data " + p("nope.bin") +
                " --steps 1 --out " + p("x.csv")),
            3);
}

TEST_F(Cli, BadArgumentsAreUsageErrors) {
  EXPECT_EQ(run("decompose --model " + p("model") + " --nz 99 --steps 2 --out " + p("x")), 2);
  EXPECT_EQ(run("infer --approx " + p("sparse") + " --data " + p("data.bin") + " --out " +
                p("x.csv")),
            2);
}

TEST_F(Cli, InfeasibleGridExitsWithFour) {
  const auto cfg = dir_ / "tiny.cfg";
  io::write_text(cfg, "mac_budget = 8\n");
  EXPECT_EQ(run("dse --model " + p("model") + " --data " + p("data.bin") +
                " --nz 4 --steps 2 --platform " + cfg.string() + " --out " + p("dse.csv")),
            4);
}

TEST_F(Cli, ExactProfileReportsZeroKl) {
  ASSERT_EQ(run("profile-qor --model " + p("model") + " --approx " + p("exact") + " --data " +
                p("data.bin") + " --out " + p("q.json") + " --csv " + p("q.csv")),
            0);
  const auto csv = io::read_text(p("q.csv"));
  const auto last = csv.substr(csv.rfind('\n', csv.size() - 2) + 1);
  const double median = std::stod(last.substr(last.find(',') + 1));
  EXPECT_LT(median, 1e-9);
}

TEST_F(Cli, RooflineRowForAHalfOpPerBytePoint) {
  const auto cfg = dir_ / "wide.cfg";
  io::write_text(cfg, "bandwidth = 4e9\nbytes_per_weight = 8\n");
  ASSERT_EQ(run("roofline --input-dim 1 --hidden-dim 2 --nz 3 --steps 5 --t-r 2 --t-c 3 "
                "--platform " +
                cfg.string() + " --out " + p("r.csv") + " --ceilings-out " + p("c.csv")),
            0);
  const auto csv = io::read_text(p("r.csv"));
  EXPECT_NE(csv.find("approx,3,5,2,3,240,480,0.5,4,2,"), std::string::npos) << csv;
  EXPECT_NE(io::read_text(p("c.csv")).find("bandwidth,,,,4,"), std::string::npos);
}

TEST_F(Cli, PlatformComesFromTheEnvironment) {
  const auto cfg = dir_ / "env.cfg";
  io::write_text(cfg, "bandwidth = 1e9\n");
  const std::string args = "roofline --input-dim 4 --hidden-dim 4 --nz 2 --steps 2 --out ";
  ASSERT_EQ(run(args + p("r_default.csv")), 0);
  ASSERT_EQ(std::system(("PROGLSTM_PLATFORM=" + cfg.string() + " " + PROGLSTM_CLI + " " + args +
                         p("r_env.csv") + " >/dev/null")
                            .c_str()),
            0);
  EXPECT_NE(io::read_text(p("r_default.csv")), io::read_text(p("r_env.csv")));
}

TEST_F(Cli, OneFilePerCommandIsReproducible) {
  const std::string base = "--model " + p("model") + " --approx " + p("sparse") + " --data " +
                           p("data.bin");
  for (int i = 0; i < 2; ++i) {
    const std::string s = std::to_string(i);
    ASSERT_EQ(run("infer --approx " + p("sparse") + " --data " + p("data.bin") +
                  " --time-budget 1e-6 --out " + p("t" + s + ".csv")),
              0);
    ASSERT_EQ(run("compare-baseline " + base + " --fractions 0.01,0.5 --count 5 --out " +
                  p("cb" + s + ".csv")),
              0);
    ASSERT_EQ(run("dse --model " + p("model") + " --data " + p("data.bin") +
                  " --nz 4,8 --steps 2,4 --latency-budget 1 --out " + p("d" + s + ".csv") +
                  " --json " + p("d" + s + ".json") + " --select-out " + p("s" + s + ".json")),
              0);
  }
  for (const char* stem : {"t", "cb", "d", "s"}) {
    const std::string ext = std::string(stem) == "s" ? ".json" : ".csv";
    EXPECT_EQ(io::read_text(p(std::string(stem) + "0" + ext)),
              io::read_text(p(std::string(stem) + "1" + ext)))
        << stem;
  }
}
