#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "cli.hpp"
#include "prob/checkpoint.hpp"
#include "prob/io.hpp"
#include "prob/protocol.hpp"

namespace fs = std::filesystem;
using namespace prob;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("prob_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    BenchmarkConfig c;
    c.dataset.train_scenes = 16;
    c.dataset.test_scenes = 8;
    c.train.epochs = 2;
    c.train.lr_drop_epoch = 1;
    c.train.finetune_epochs = 1;
    c.exemplars_per_class = 1;
    c.exemplar_budget = 6;
    c.tau_list = {0.8, 1.3};
    config_ = file("config.json");
    write_file_atomic(config_, nlohmann::json(c).dump(2));
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string file(const std::string& name) const { return (dir_ / name).string(); }

  int run(std::vector<std::string> args, const std::string& out_dir = "out") {
    std::vector<std::string> full{"prob", "--config", config_, "--out", file(out_dir), "--quiet"};
    full.insert(full.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& a : full) argv.push_back(a.c_str());
    out_.str("");
    err_.str("");
    return cli::run_cli(static_cast<int>(argv.size()), argv.data(), out_, err_);
  }

  fs::path dir_;
  std::string config_;
  std::ostringstream out_, err_;
};

}  // namespace

TEST_F(CliTest, UsageErrorsExitTwo) {
  EXPECT_EQ(run({"frobnicate"}), 2);
  EXPECT_EQ(run({"eval"}), 2);  // --checkpoint is required
  EXPECT_EQ(run({"gradcheck", "--configs", "many"}), 2);
}

TEST_F(CliTest, HelpExitsZero) { EXPECT_EQ(run({"--help"}), 0); }

TEST_F(CliTest, BadConfigExitsTwo) {
  write_file_atomic(config_, R"({"config_version": 9})");
  EXPECT_EQ(run({"generate"}), 2);
  write_file_atomic(config_, R"({"train": {"lr": -1}})");
  EXPECT_EQ(run({"generate"}), 2);
}

TEST_F(CliTest, GenerateIsDeterministic) {
  ASSERT_EQ(run({"generate"}, "a"), 0);
  ASSERT_EQ(run({"generate"}, "b"), 0);
  EXPECT_EQ(read_file(file("a/dataset.jsonl")), read_file(file("b/dataset.jsonl")));
}

TEST_F(CliTest, TrainEvalRoundTrip) {
  ASSERT_EQ(run({"generate"}), 0);
  const std::string ds = file("out/dataset.jsonl");
  ASSERT_EQ(run({"train", "--task", "0", "--dataset", ds}), 0) << err_.str();
  const std::string ck = file("out/checkpoint_task0.json");
  const std::string trained_report = read_file(file("out/report_task0.json"));

  // Loading and re-serializing a checkpoint is byte-stable.
  EXPECT_EQ(serialize_checkpoint(load_checkpoint(ck)), read_file(ck));

  ASSERT_EQ(run({"eval", "--checkpoint", ck, "--dataset", ds}, "eval"), 0) << err_.str();
  EXPECT_EQ(read_file(file("eval/report_task0.json")), trained_report);

  // Task 1 needs its predecessor.
  EXPECT_EQ(run({"train", "--task", "1", "--dataset", ds}, "t1"), 1);
  ASSERT_EQ(run({"train", "--task", "1", "--dataset", ds, "--checkpoint", ck, "--exemplars",
                 file("out/exemplars_task0.json")},
                "t1"),
            0)
      << err_.str();
  const auto report = nlohmann::json::parse(read_file(file("t1/report_task1.json")));
  EXPECT_EQ(report.at("task"), 1);
  EXPECT_FALSE(report.at("map_prev").is_null());
}

TEST_F(CliTest, CheckpointVersionMismatchExitsOne) {
  ASSERT_EQ(run({"train", "--task", "0"}), 0) << err_.str();
  const std::string ck = file("out/checkpoint_task0.json");
  auto j = nlohmann::json::parse(read_file(ck));
  j["config_version"] = 2;
  write_file_atomic(ck, j.dump());
  EXPECT_EQ(run({"eval", "--checkpoint", ck}), 1);
  EXPECT_NE(err_.str().find("config_version"), std::string::npos) << err_.str();
}

TEST_F(CliTest, BenchmarkIsReproducible) {
  ASSERT_EQ(run({"benchmark"}, "a"), 0) << err_.str();
  ASSERT_EQ(run({"benchmark"}, "b"), 0) << err_.str();
  for (const char* name : {"summary.csv", "tasks.svg", "report_task0.json", "report_task1.json"}) {
    EXPECT_EQ(read_file(file(std::string("a/") + name)), read_file(file(std::string("b/") + name))) << name;
  }
  const std::string csv = read_file(file("a/summary.csv"));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}

TEST_F(CliTest, MultiSeedBenchmarkAddsMeanAndStd) {
  ASSERT_EQ(run({"benchmark", "--seeds", "1,2"}), 0) << err_.str();
  const std::string csv = read_file(file("out/summary.csv"));
  EXPECT_NE(csv.find(",mean\n"), std::string::npos);
  EXPECT_NE(csv.find(",std\n"), std::string::npos);
  EXPECT_TRUE(fs::exists(file("out/report_seed2_task1.json")));
}

TEST_F(CliTest, SweepAndReport) {
  ASSERT_EQ(run({"train", "--task", "0"}), 0) << err_.str();
  const std::string ck = file("out/checkpoint_task0.json");
  ASSERT_EQ(run({"sweep", "--checkpoint", ck}, "s1"), 0) << err_.str();
  ASSERT_EQ(run({"sweep", "--checkpoint", ck}, "s2"), 0) << err_.str();
  EXPECT_EQ(read_file(file("s1/sweep.svg")), read_file(file("s2/sweep.svg")));
  const std::string csv = read_file(file("s1/sweep.csv"));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  EXPECT_EQ(run({"sweep", "--checkpoint", ck, "--taus", "1,-2"}, "s3"), 2);

  ASSERT_EQ(run({"report", "--input", file("out/report_task0.json"), file("s1/sweep.json")}, "r"), 0) << err_.str();
  const std::string svg = read_file(file("r/pr_task0.svg"));
  EXPECT_NE(svg.find("<svg"), std::string::npos);
  EXPECT_EQ(svg.find("nan"), std::string::npos);
  EXPECT_TRUE(fs::exists(file("r/report_summary.csv")));
  EXPECT_TRUE(fs::exists(file("r/sweep.svg")));
}

TEST_F(CliTest, GradcheckPasses) {
  EXPECT_EQ(run({"gradcheck", "--configs", "3"}), 0) << err_.str();
  EXPECT_EQ(run({"gradcheck", "--configs", "1", "--tolerance", "0"}), 1);
}
