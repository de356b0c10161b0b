#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "cli.hpp"
#include "io.hpp"
#include "json.hpp"

namespace {

namespace fs = std::filesystem;
using ifa::cli::read_text;

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    root_ = fs::temp_directory_path() / (std::string("ifa_cli_") + info->name());
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  std::string path(const std::string& name) const { return (root_ / name).string(); }

  int run(std::vector<std::string> args) {
    out_.str("");
    err_.str("");
    return ifa::cli::run(args, out_, err_);
  }

  int simulate(const std::string& dir, const std::string& extra_n = "100", const std::string& seed = "7") {
    return run({"--command", "simulate", "--n", extra_n, "--j", "10", "--seed", seed, "--output-dir", path(dir)});
  }

  fs::path root_;
  std::ostringstream out_;
  std::ostringstream err_;
};

int count_lines(const std::string& text) {
  int lines = 0;
  for (const char c : text) lines += c == '\n';
  return lines;
}

TEST_F(Cli, SimulateShape) {
  ASSERT_EQ(simulate("sim"), 0) << err_.str();
  const std::string csv = read_text(path("sim/data.csv"));
  EXPECT_EQ(count_lines(csv), 101);
  const std::string header = csv.substr(0, csv.find('\n'));
  EXPECT_EQ(std::count(header.begin(), header.end(), ','), 9);
  EXPECT_TRUE(fs::exists(path("sim/truth.json")));
  EXPECT_TRUE(fs::exists(path("sim/manifest.json")));
}

TEST_F(Cli, SimulateIsByteReproducible) {
  ASSERT_EQ(simulate("a"), 0);
  ASSERT_EQ(simulate("b"), 0);
  for (const char* f : {"data.csv", "truth.json", "manifest.json"}) {
    EXPECT_EQ(read_text(path(std::string("a/") + f)), read_text(path(std::string("b/") + f))) << f;
  }
}

TEST_F(Cli, ManifestHashTracksSpec) {
  ASSERT_EQ(simulate("a"), 0);
  ASSERT_EQ(simulate("b", "101"), 0);
  ASSERT_EQ(simulate("c", "100", "8"), 0);
  const auto hash = [&](const std::string& dir) {
    return nlohmann::json::parse(read_text(path(dir + "/manifest.json")))["spec_hash"].get<std::string>();
  };
  EXPECT_NE(hash("a"), hash("b"));
  EXPECT_NE(hash("a"), hash("c"));
  EXPECT_EQ(nlohmann::json::parse(read_text(path("c/manifest.json")))["seed"], 8);
}

TEST_F(Cli, SvdFitExitsZero) {
  ASSERT_EQ(simulate("sim"), 0);
  EXPECT_EQ(run({"--command", "fit", "--estimator", "svd", "--input", path("sim/data.csv"), "--output-dir",
                 path("fit")}),
            0)
      << err_.str();
  for (const char* f : {"fit.json", "trajectory.csv", "timing.json", "manifest.json"}) {
    EXPECT_TRUE(fs::exists(path(std::string("fit/") + f))) << f;
  }
}

TEST_F(Cli, EmRejectsManyFactors) {
  ASSERT_EQ(simulate("sim"), 0);
  EXPECT_EQ(run({"--command", "fit", "--estimator", "em", "--k", "5", "--input", path("sim/data.csv"),
                 "--output-dir", path("fit")}),
            2);
  EXPECT_NE(err_.str().find("stem"), std::string::npos);
  EXPECT_NE(err_.str().find("sa"), std::string::npos);
}

TEST_F(Cli, InvalidCombinationsAreUsageErrors) {
  ASSERT_EQ(simulate("sim"), 0);
  EXPECT_EQ(run({"--command", "fit", "--estimator", "em", "--model", "gpc", "--link", "probit", "--input",
                 path("sim/data.csv"), "--output-dir", path("fit")}),
            2);
  EXPECT_EQ(run({"--command", "fit", "--estimator", "bogus", "--input", path("sim/data.csv")}), 2);
  EXPECT_EQ(run({"--command", "fit", "--estimator", "cjmle"}), 2);
  EXPECT_EQ(run({"--no-such-flag"}), 2);
}

TEST_F(Cli, MalformedCellNamesRowAndColumn) {
  ifa::cli::write_text(path("bad.csv"), "a,b,c\n0,1,0\n1,x,0\n");
  EXPECT_EQ(run({"--command", "fit", "--input", path("bad.csv"), "--output-dir", path("fit")}), 2);
  EXPECT_NE(err_.str().find("row 2"), std::string::npos) << err_.str();
  EXPECT_NE(err_.str().find("column 2"), std::string::npos) << err_.str();
}

TEST_F(Cli, IterationLimitExitsThreeWithOutputs) {
  ASSERT_EQ(simulate("sim"), 0);
  EXPECT_EQ(run({"--command", "fit", "--estimator", "cjmle", "--max-iters", "1", "--input", path("sim/data.csv"),
                 "--output-dir", path("fit")}),
            3);
  EXPECT_TRUE(fs::exists(path("fit/fit.json")));
  EXPECT_FALSE(err_.str().empty());
}

TEST_F(Cli, FitIsReproducible) {
  ASSERT_EQ(simulate("sim"), 0);
  for (const char* dir : {"f1", "f2"}) {
    ASSERT_EQ(run({"--command", "fit", "--estimator", "stem", "--total-iters", "30", "--burn-in", "10", "--seed",
                   "3", "--input", path("sim/data.csv"), "--output-dir", path(dir)}),
              0)
        << err_.str();
  }
  EXPECT_EQ(read_text(path("f1/fit.json")), read_text(path("f2/fit.json")));
  EXPECT_EQ(read_text(path("f1/trajectory.csv")), read_text(path("f2/trajectory.csv")));
}

TEST_F(Cli, EvaluateTruthAgainstItself) {
  ASSERT_EQ(simulate("sim"), 0);
  ASSERT_EQ(run({"--command", "evaluate", "--truth", path("sim/truth.json"), "--input", path("sim/truth.json"),
                 "--output-dir", path("eval")}),
            0)
      << err_.str();
  const auto report = nlohmann::json::parse(read_text(path("eval/report.json")));
  EXPECT_EQ(report["prob_mse"].get<double>(), 0.0);
  EXPECT_LT(report["aligned_loading_loss"].get<double>(), 1e-20);
  EXPECT_EQ(report["q_loading_loss"].get<double>(), 0.0);
  const std::string csv = read_text(path("eval/report.csv"));
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "label,n,j,k,prob_mse,aligned_loading_loss,q_loading_loss,mean_theta_correlation");
  EXPECT_EQ(count_lines(csv), 2);
}

TEST_F(Cli, EvaluateDimensionMismatch) {
  ASSERT_EQ(simulate("a"), 0);
  ASSERT_EQ(simulate("b", "120"), 0);
  EXPECT_EQ(run({"--command", "evaluate", "--truth", path("a/truth.json"), "--input", path("b/truth.json"),
                 "--output-dir", path("eval")}),
            2);
}

TEST_F(Cli, PairedSvdAndCjmleRows) {
  ASSERT_EQ(simulate("sim", "300"), 0);
  ASSERT_EQ(run({"--command", "fit", "--estimator", "svd", "--input", path("sim/data.csv"), "--output-dir",
                 path("svd")}),
            0);
  ASSERT_EQ(run({"--command", "fit", "--estimator", "cjmle", "--input", path("sim/data.csv"), "--output-dir",
                 path("cjmle")}),
            0)
      << err_.str();
  std::vector<std::string> rows;
  for (const char* est : {"svd", "cjmle"}) {
    ASSERT_EQ(run({"--command", "evaluate", "--truth", path("sim/truth.json"), "--input",
                   path(std::string(est) + "/fit.json"), "--output-dir", path(std::string("eval_") + est)}),
              0);
    const std::string csv = read_text(path(std::string("eval_") + est + "/report.csv"));
    rows.push_back(csv.substr(csv.find('\n') + 1));
  }
  EXPECT_EQ(rows[0].rfind("svd,300,10,1,", 0), 0u) << rows[0];
  EXPECT_EQ(rows[1].rfind("cjmle,300,10,1,", 0), 0u) << rows[1];
}

TEST_F(Cli, ConfigFileOverridesFlags) {
  ifa::cli::write_text(path("run.cfg"), "# overrides\nseed = 11\nn = 50\n");
  ASSERT_EQ(run({"--command", "simulate", "--seed", "1", "--n", "100", "--j", "5", "--config", path("run.cfg"),
                 "--output-dir", path("sim")}),
            0)
      << err_.str();
  EXPECT_EQ(count_lines(read_text(path("sim/data.csv"))), 51);
  EXPECT_EQ(nlohmann::json::parse(read_text(path("sim/manifest.json")))["seed"], 11);
  ifa::cli::write_text(path("bad.cfg"), "seed 11\n");
  EXPECT_EQ(run({"--command", "simulate", "--config", path("bad.cfg")}), 2);
}

TEST_F(Cli, WorkerEnvironmentVariable) {
  ASSERT_EQ(simulate("sim"), 0);
  ::setenv("IFA_WORKERS", "2", 1);
  const int code = run({"--command", "fit", "--estimator", "svd", "--input", path("sim/data.csv"), "--output-dir",
                        path("fit")});
  const auto timing = nlohmann::json::parse(read_text(path("fit/timing.json")));
  ::setenv("IFA_WORKERS", "lots", 1);
  const int bad = run({"--command", "fit", "--estimator", "svd", "--input", path("sim/data.csv"), "--output-dir",
                       path("fit2")});
  ::unsetenv("IFA_WORKERS");
  EXPECT_EQ(code, 0);
  EXPECT_EQ(timing["workers"], 2);
  EXPECT_EQ(bad, 2);
}

TEST_F(Cli, UnwritableOutputDirectory) {
  ifa::cli::write_text(path("file"), "x");
  EXPECT_EQ(run({"--command", "simulate", "--output-dir", path("file/sub")}), 2);
}

}  // namespace
