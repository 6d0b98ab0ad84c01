#include "cli.hpp"
#include "esci/experiments.hpp"
#include "esci/report_io.hpp"
#include "esci/scenarios.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace esci::cli {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> csv_rows(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(p));
  for (std::string line; std::getline(in, line);) {
    if (line.starts_with("#")) continue;
    std::vector<std::string> cells;
    std::istringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
    rows.push_back(std::move(cells));
  }
  return rows;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("esci_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "esci");
    out_.str("");
    err_.str("");
    return run(args, out_, err_);
  }

  fs::path write_file(const std::string& name, const std::string& text) {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }

  fs::path dir_;
  std::ostringstream out_;
  std::ostringstream err_;
};

TEST_F(CliTest, DemoEllipseDefaults) {
  const fs::path out = dir_ / "demo";
  ASSERT_EQ(run_cli({"demo-ellipse", "--out", out.string()}), kExitOk) << err_.str();
  for (const char* f : {"ellipses.csv", "fused_pairs.json", "config.txt", "summary.json"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
  const auto rows = csv_rows(out / "ellipses.csv");
  ASSERT_FALSE(rows.empty());
  EXPECT_EQ(rows[0], (std::vector<std::string>{"algorithm", "f", "structure_id", "point", "x", "y"}));
  std::set<std::string> combos;
  std::set<std::string> structures;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    combos.insert(rows[i][0] + ":" + rows[i][1]);
    structures.insert(rows[i][2]);
  }
  EXPECT_EQ(combos, (std::set<std::string>{"CSCI:-", "ESCI:inv_trace", "ESCI:inv_det", "ESCI:trace_info"}));
  EXPECT_EQ(structures.size(), 10u);
  EXPECT_TRUE(slurp(out / "ellipses.csv").starts_with("# command=demo-ellipse seed=1 config="));
}

TEST_F(CliTest, DemoEllipseSingleStructure) {
  const fs::path out = dir_ / "one";
  ASSERT_EQ(run_cli({"demo-ellipse", "--structures", "1", "--out", out.string()}), kExitOk) << err_.str();
  std::set<std::string> structures;
  const auto rows = csv_rows(out / "ellipses.csv");
  for (std::size_t i = 1; i < rows.size(); ++i) structures.insert(rows[i][2]);
  EXPECT_EQ(structures, std::set<std::string>{"0"});
  EXPECT_NE(slurp(out / "fused_pairs.json").find("a={4}"), std::string::npos);
}

TEST_F(CliTest, DemoEllipseIsByteIdenticalAcrossRuns) {
  ASSERT_EQ(run_cli({"demo-ellipse", "--seed", "5", "--out", (dir_ / "a").string()}), kExitOk);
  ASSERT_EQ(run_cli({"demo-ellipse", "--seed", "5", "--out", (dir_ / "b").string()}), kExitOk);
  for (const char* f : {"ellipses.csv", "fused_pairs.json", "summary.json"}) {
    const std::string a = slurp(dir_ / "a" / f);
    std::string b = slurp(dir_ / "b" / f);
    if (std::string(f) == "summary.json") {
      // Only the output paths differ.
      const std::string from = (dir_ / "b").string();
      const std::string to = (dir_ / "a").string();
      for (auto pos = b.find(from); pos != std::string::npos; pos = b.find(from, pos)) b.replace(pos, from.size(), to);
    }
    EXPECT_EQ(a, b) << f;
  }
}

TEST_F(CliTest, TrackIsReproducible) {
  const std::vector<std::string> base{"track", "--runs", "1", "--seed", "7", "--threads", "1", "--out"};
  auto args = base;
  args.push_back((dir_ / "a").string());
  ASSERT_EQ(run_cli(args), kExitOk) << err_.str();
  args.back() = (dir_ / "b").string();
  ASSERT_EQ(run_cli(args), kExitOk) << err_.str();
  EXPECT_EQ(slurp(dir_ / "a" / "rmse.csv"), slurp(dir_ / "b" / "rmse.csv"));
  EXPECT_EQ(slurp(dir_ / "a" / "trajectory.csv"), slurp(dir_ / "b" / "trajectory.csv"));
  const auto rows = csv_rows(dir_ / "a" / "rmse.csv");
  EXPECT_EQ(rows[0], (std::vector<std::string>{"step", "algorithm", "f", "structure_id", "rmse"}));
  EXPECT_EQ(rows.size(), 1u + 100u * 6u);
  const auto cost = csv_rows(dir_ / "a" / "cost.csv");
  EXPECT_EQ(cost[0], (std::vector<std::string>{"trigger_time", "algorithm", "inversions", "optimizer_iters", "wall_ns"}));
  EXPECT_GT(cost.size(), 100u);
}

TEST_F(CliTest, RobotReportsEveryStructure) {
  ASSERT_EQ(run_cli({"robot", "--structures", "20", "--runs", "1", "--algorithms", "esci", "--importance", "inv_trace",
                     "--out", dir_.string()}),
            kExitOk)
      << err_.str();
  std::set<std::string> ids;
  const auto rows = csv_rows(dir_ / "rmse.csv");
  for (std::size_t i = 1; i < rows.size(); ++i) ids.insert(rows[i][3]);
  EXPECT_EQ(ids.size(), 20u);
  EXPECT_NE(slurp(dir_ / "summary.json").find("\"structures\""), std::string::npos);
}

TEST_F(CliTest, ConsistencyWritesVerdict) {
  ASSERT_EQ(run_cli({"consistency", "--runs", "20000", "--out", dir_.string()}), kExitOk) << err_.str();
  EXPECT_NE(out_.str().find("consistent: yes"), std::string::npos) << out_.str();
  ASSERT_EQ(run_cli({"consistency", "--runs", "20000", "--scale", "0.1", "--out", dir_.string()}), kExitOk);
  EXPECT_NE(out_.str().find("consistent: no"), std::string::npos) << out_.str();
}

std::string demo_pairs_json() {
  std::string text = "[";
  for (const auto& p : scenarios::demo_pairs()) text += experiments::pair_to_json(p) + ",";
  text.back() = ']';
  return text;
}

TEST_F(CliTest, FuseDemoPairsMatchesClosedForm) {
  const fs::path in = write_file("pairs.json", demo_pairs_json());
  ASSERT_EQ(run_cli({"fuse", in.string(), "--order", "4,2,1,3", "--batches", "2,2"}), kExitOk) << err_.str();
  const auto fused = experiments::pairs_from_json("[" + out_.str() + "]");
  ASSERT_EQ(fused.size(), 1u);
  const EstimatePair expected = fusion::esci_closed_form(scenarios::demo_pairs(), fusion::ImportanceKind::InvTrace);
  EXPECT_LE(testing::pair_deviation(fused[0], expected), 1e-12);
}

TEST_F(CliTest, FuseSinglePairEchoes) {
  const EstimatePair p = scenarios::demo_pairs()[2];
  const fs::path in = write_file("one.json", "[" + experiments::pair_to_json(p) + "]");
  for (const char* alg : {"esci", "csci", "cbci"}) {
    ASSERT_EQ(run_cli({"fuse", in.string(), "--algorithms", alg}), kExitOk) << err_.str();
    const auto fused = experiments::pairs_from_json("[" + out_.str() + "]");
    EXPECT_LE(testing::pair_deviation(fused[0], p), 1e-15) << alg;
  }
}

TEST_F(CliTest, FuseRejectsBadInput) {
  const fs::path bad = write_file("bad.json", R"([{"x": [0, 0], "P": [[1, 2], [2, 1]]}])");
  EXPECT_EQ(run_cli({"fuse", bad.string()}), kExitInvalidInput);
  EXPECT_NE(err_.str().find("not positive definite"), std::string::npos) << err_.str();
  const fs::path junk = write_file("junk.json", "{");
  EXPECT_EQ(run_cli({"fuse", junk.string()}), kExitInvalidInput);
  const fs::path ok = write_file("ok.json", demo_pairs_json());
  EXPECT_EQ(run_cli({"fuse", ok.string(), "--order", "1,1,2,3"}), kExitInvalidInput);
  EXPECT_EQ(run_cli({"fuse", ok.string(), "--importance", "inv_trace,inv_det"}), kExitInvalidInput);
  EXPECT_EQ(run_cli({"fuse", (dir_ / "missing.json").string()}), kExitInvalidInput);
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run_cli({}), kExitInvalidInput);
  EXPECT_EQ(run_cli({"bogus"}), kExitInvalidInput);
  EXPECT_EQ(run_cli({"track", "--runs", "zero"}), kExitInvalidInput);
  EXPECT_EQ(run_cli({"track", "--runs", "0", "--out", dir_.string()}), kExitInvalidInput);
  EXPECT_EQ(run_cli({"track", "--algorithms", "nope", "--out", dir_.string()}), kExitInvalidInput);
  EXPECT_EQ(run_cli({"track", "--trigger", "sometimes", "--out", dir_.string()}), kExitInvalidInput);
  EXPECT_EQ(run_cli({"--help"}), kExitOk);
  EXPECT_NE(out_.str().find("demo-ellipse"), std::string::npos);
}

TEST_F(CliTest, FlagsOverrideConfigOverridesDefaults) {
  const fs::path cfg = write_file("run.cfg",
                                  "seed = 9\n"
                                  "runs = 2\n"
                                  "algorithms = esci\n"
                                  "importance = inv_det\n"
                                  "tracking.horizon = 5\n");
  ASSERT_EQ(run_cli({"track", "--config", cfg.string(), "--seed", "3", "--out", dir_.string()}), kExitOk)
      << err_.str();
  const std::string effective = slurp(dir_ / "config.txt");
  EXPECT_NE(effective.find("seed = 3"), std::string::npos) << effective;
  EXPECT_NE(effective.find("runs = 2"), std::string::npos) << effective;
  EXPECT_NE(effective.find("tracking.horizon = 5"), std::string::npos) << effective;
  const auto rows = csv_rows(dir_ / "rmse.csv");
  ASSERT_EQ(rows.size(), 1u + 5u);
  EXPECT_EQ(rows[1][2], "inv_det");
  EXPECT_TRUE(slurp(dir_ / "rmse.csv").starts_with("# command=track seed=3 "));
}

}  // namespace
}  // namespace esci::cli
