#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cli.hpp"
#include "gsum/io.hpp"

namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("gsum_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  std::string put(const std::string& name, const std::string& content) const {
    gsum::write_file_atomic(path(name), content);
    return path(name);
  }
  int run(std::vector<std::string> args) {
    out_.str("");
    err_.str("");
    return gsum::cli::run(args, out_, err_);
  }

  fs::path dir_;
  std::ostringstream out_;
  std::ostringstream err_;
};

const char* kUniform2 = R"({"atoms":[{"x":-0.05,"p":0.5},{"x":0.05,"p":0.5}]})";

}  // namespace

TEST_F(CliTest, CoupleIsReproducible) {
  const auto dist = put("u2.json", kUniform2);
  ASSERT_EQ(run({"couple", "--dist", dist, "--samples", "20000", "--out", path("a.json")}), 0) << err_.str();
  ASSERT_EQ(run({"couple", "--dist", dist, "--samples", "2e4", "--out", path("b.json"), "--threads", "3"}), 0);
  EXPECT_EQ(gsum::read_text_file(path("a.json")), gsum::read_text_file(path("b.json")));
  const auto rep = nlohmann::json::parse(gsum::read_text_file(path("a.json")));
  EXPECT_EQ(rep["command"], "couple");
  EXPECT_EQ(rep["provenance"]["seed"], 7);
  EXPECT_TRUE(rep["verdicts"].is_object());
}

TEST_F(CliTest, MissingRequiredFlagLeavesNoOutput) {
  EXPECT_EQ(run({"couple", "--out", path("r.json")}), 2);
  EXPECT_FALSE(fs::exists(path("r.json")));
  EXPECT_EQ(run({"nonsense"}), 2);
}

TEST_F(CliTest, MalformedInputReportsLine) {
  const auto bad = put("bad.json", "{\n\"atoms\": [\n{\"x\": oops}\n]}\n");
  EXPECT_EQ(run({"couple", "--dist", bad, "--out", path("r.json")}), 2);
  EXPECT_NE(err_.str().find("bad.json:3:"), std::string::npos) << err_.str();
  EXPECT_FALSE(fs::exists(path("r.json")));
}

TEST_F(CliTest, RefusesToOverwriteInput) {
  const auto dist = put("u2.json", kUniform2);
  EXPECT_EQ(run({"couple", "--dist", dist, "--out", dist}), 2);
  EXPECT_EQ(gsum::read_text_file(dist), kUniform2);
}

TEST_F(CliTest, DecomposeDeltaPasses) {
  const auto dist = put("d.json", R"({"atoms":[{"x":0,"p":1}]})");
  EXPECT_EQ(run({"decompose", "--dist", dist, "--steps", "64", "--samples", "2000", "--compare-steps", "16"}), 0)
      << err_.str();
  const auto rep = nlohmann::json::parse(out_.str());
  for (const auto& v : rep["verdicts"]) EXPECT_EQ(v["status"], "pass") << v.dump();
}

TEST_F(CliTest, OrderstatsCsvTable) {
  ASSERT_EQ(run({"orderstats", "--n", "16,64", "--reps", "100", "--out", path("t.csv")}), 0) << err_.str();
  std::istringstream csv(gsum::read_text_file(path("t.csv")));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "n,reps,moment_sum,stderr,ratio");
  int rows = 0;
  while (std::getline(csv, line)) ++rows;
  EXPECT_EQ(rows, 2);
}

TEST_F(CliTest, MinimaxAndSteinhaus) {
  const auto pts = put("p.csv", "1,0\n-1,0\n0,2\n0,-2\n");
  EXPECT_EQ(run({"minimax", "--points", pts}), 0) << err_.str();
  const auto iv = put("i.json", R"({"intervals":[[-1.5,-0.2],[-0.3,1.5]]})");
  EXPECT_EQ(run({"steinhaus", "--intervals", iv}), 0) << err_.str();
  const auto tiny = put("t.json", R"({"intervals":[[0,0.1]]})");
  EXPECT_EQ(run({"steinhaus", "--intervals", tiny}), 2);
}

TEST_F(CliTest, VersionFlag) {
  EXPECT_EQ(run({"--version"}), 0);
  EXPECT_FALSE(out_.str().empty());
}
