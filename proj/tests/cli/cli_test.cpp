#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "sats/checkpoint.hpp"
#include "sats/image_io.hpp"
#include "sats/trainer.hpp"
#include "sats_cli/benchmark_io.hpp"
#include "sats_cli/cli.hpp"
#include "sats_cli/config.hpp"
#include "support/temp_dir.hpp"

namespace sats::cli {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;

struct Result {
  int code;
  std::string out, err;
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "sats");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    std::ofstream(dir_ / "tiny.cfg") << "# small enough for unit tests\n"
                                        "image_size = 16\ntrain_count = 4\nval_count = 3\n"
                                        "iterations = 4   # per stage\npretrain_steps = 2\ncrop_size = 16\n"
                                        "hidden1 = 4\nhidden2 = 4\nfeatures = 4\n";
    cfg_ = (dir_ / "tiny.cfg").string();
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  Result gen(const std::string& out) { return run_cli({"--config", cfg_, "gen-data", "--out", path(out)}); }

  TempDir dir_;
  std::string cfg_;
};

TEST(Config, ParsesCommentsAndOverrides) {
  const auto kv = parse_key_values("a = 1 # trailing\n\n# full line\nb=two\n", "t");
  EXPECT_EQ(kv.at("a"), "1");
  EXPECT_EQ(kv.at("b"), "two");
  EXPECT_THROW(parse_key_values("a = 1\na = 2\n", "t"), ValidationError);
  EXPECT_THROW(parse_key_values("novalue\n", "t"), ValidationError);

  ExperimentConfig cfg;
  apply_setting(cfg, "shift_gain", "1, 0.5, 2");
  EXPECT_EQ(cfg.bench.shift.gain, (std::array<double, 3>{1.0, 0.5, 2.0}));
  apply_setting(cfg, "head_classes", "0,1");
  EXPECT_EQ(cfg.stage.head_classes, (std::vector<int>{0, 1}));
  EXPECT_THROW(apply_setting(cfg, "iterations", "12x"), ValidationError);
  EXPECT_THROW(apply_setting(cfg, "colour", "red"), ValidationError);
}

TEST(Config, TextRoundTrip) {
  ExperimentConfig cfg;
  cfg.seed = 17;
  cfg.stage.pseudo.tau1 = 0.3;
  cfg.bench.shift.bias = {1.5, -2.0, 0.0};
  cfg.stage.head_classes = {0, 2};
  ExperimentConfig back;
  for (const auto& [k, v] : parse_key_values(to_text(cfg), "t")) apply_setting(back, k, v);
  EXPECT_EQ(to_text(back), to_text(cfg));
}

TEST_F(CliTest, NoSubcommandIsUsageError) { EXPECT_EQ(run_cli({}).code, kExitUsage); }

TEST_F(CliTest, HelpExitsZero) { EXPECT_EQ(run_cli({"--help"}).code, kExitOk); }

TEST_F(CliTest, GenDataWritesThreeSplits) {
  const Result r = gen("data");
  ASSERT_EQ(r.code, kExitOk) << r.err;
  for (const char* split : {"source", "target_train", "target_val"}) {
    EXPECT_TRUE(fs::is_directory(dir_ / "data" / split)) << split;
  }
  const Benchmark b = load_benchmark(dir_ / "data");
  EXPECT_EQ(b.source.size(), 4u);
  EXPECT_EQ(b.target_val.size(), 3u);
  EXPECT_NE(r.out.find("head classes"), std::string::npos);
  for (const auto& entry : fs::directory_iterator(dir_.path())) {
    EXPECT_EQ(entry.path().filename().string().find(".tmp"), std::string::npos);
  }
}

TEST_F(CliTest, GenDataIsBitwiseRepeatable) {
  ASSERT_EQ(gen("a").code, kExitOk);
  ASSERT_EQ(gen("b").code, kExitOk);
  for (const auto& entry : fs::recursive_directory_iterator(dir_ / "a")) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), dir_ / "a");
    EXPECT_EQ(slurp(entry.path()), slurp(dir_ / "b" / rel)) << rel;
  }
}

TEST_F(CliTest, GenDataRejectsClosedSet) {
  const Result r = run_cli({"--config", cfg_, "gen-data", "--out", path("x")});
  ASSERT_EQ(r.code, kExitOk);
  std::ofstream(dir_ / "closed.cfg") << "num_private = 0\n";
  const Result bad = run_cli({"--config", path("closed.cfg"), "gen-data", "--out", path("y")});
  EXPECT_EQ(bad.code, kExitUsage);
  EXPECT_NE(bad.err.find("num_private"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir_ / "y"));
}

TEST_F(CliTest, BadFlagValuesAreUsageErrors) {
  EXPECT_EQ(run_cli({"--tau1", "1.5", "gen-data", "--out", path("z")}).code, kExitUsage);
  EXPECT_EQ(run_cli({"--iterations", "abc", "gen-data"}).code, kExitUsage);
  EXPECT_EQ(run_cli({"--config", path("missing.cfg"), "gen-data"}).code, kExitUsage);
}

TEST_F(CliTest, Stage2WithoutDetectorIsUsageError) {
  ASSERT_EQ(gen("data").code, kExitOk);
  const Result r = run_cli({"--config", cfg_, "train", "stage2", "--data", path("data"), "--out", path("s2")});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("--detector"), std::string::npos);
  const Result missing = run_cli({"--config", cfg_, "train", "stage2", "--data", path("data"), "--detector",
                                  path("none.ckpt"), "--out", path("s2")});
  EXPECT_EQ(missing.code, kExitUsage);
  EXPECT_NE(missing.err.find("none.ckpt"), std::string::npos);
}

TEST_F(CliTest, ZeroIterationsWritesInitialParams) {
  ASSERT_EQ(gen("data").code, kExitOk);
  const Result r = run_cli(
      {"--config", cfg_, "--iterations", "0", "train", "stage1", "--data", path("data"), "--out", path("s1")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const ExperimentConfig cfg = load_config(cfg_);
  StageConfig stage = cfg.stage;
  stage.seed = cfg.seed;
  EXPECT_EQ(load_checkpoint(dir_ / "s1" / "model.ckpt"), initial_network(stage, 3));
  EXPECT_EQ(slurp(dir_ / "s1" / "train_log.csv"), "iteration,loss_source,loss_target,q_mean,unknown_fraction,wall_ms\n");
}

TEST_F(CliTest, FullPipeline) {
  ASSERT_EQ(gen("data").code, kExitOk);
  const std::vector<std::string> common{"--config", cfg_};
  auto with = [&](std::vector<std::string> extra) {
    std::vector<std::string> args = common;
    args.insert(args.end(), extra.begin(), extra.end());
    return run_cli(args);
  };

  Result r = with({"train", "stage1", "--data", path("data"), "--out", path("s1")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("final L_S"), std::string::npos);
  EXPECT_NE(r.err.find("[stage1]"), std::string::npos);
  // Header plus one row per iteration.
  const std::string log = slurp(dir_ / "s1" / "train_log.csv");
  EXPECT_EQ(std::count(log.begin(), log.end(), '\n'), 5);

  r = with({"infer-unk", "--data", path("data"), "--detector", path("s1/model.ckpt"), "--out", path("unk")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_TRUE(fs::exists(dir_ / "unk" / "labels" / "t0000.png"));

  r = with({"train", "stage2", "--data", path("data"), "--unk-dir", path("unk"), "--dump-masks", "--out",
            path("s2")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  // Detector and used mask for each of 4 iterations x 2 crops.
  EXPECT_EQ(std::distance(fs::directory_iterator(dir_ / "s2" / "masks"), fs::directory_iterator{}), 16);

  // The same run from the detector checkpoint gives the same model.
  r = with({"train", "stage2", "--data", path("data"), "--detector", path("s1/model.ckpt"), "--out", path("s2b")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(slurp(dir_ / "s2" / "model.ckpt"), slurp(dir_ / "s2b" / "model.ckpt"));

  r = with({"eval", "--data", path("data"), "--checkpoint", path("s2/model.ckpt"), "--out", path("ev")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("H-Score"), std::string::npos);
  EXPECT_EQ(slurp(dir_ / "ev" / "metrics.csv").rfind("class,iou\n", 0), 0u);
  EXPECT_NE(slurp(dir_ / "ev" / "metrics.svg").find("<svg"), std::string::npos);

  r = with({"eval", "--data", path("data"), "--checkpoint", path("missing.ckpt"), "--out", path("ev2")});
  EXPECT_EQ(r.code, kExitUsage);
}

TEST_F(CliTest, InferUnkRejectsClosedSetHead) {
  ASSERT_EQ(gen("data").code, kExitOk);
  save_checkpoint(NetworkParams::initialize({4, 4, 4}, 3, 1), dir_ / "closed.ckpt");
  const Result r = run_cli(
      {"--config", cfg_, "infer-unk", "--data", path("data"), "--detector", path("closed.ckpt"), "--out", path("u")});
  EXPECT_EQ(r.code, kExitUsage);
}

TEST_F(CliTest, EvalRejectsEmptyValidationSet) {
  std::ofstream(dir_ / "noval.cfg") << "image_size = 16\ntrain_count = 2\nval_count = 0\n";
  ASSERT_EQ(run_cli({"--config", path("noval.cfg"), "gen-data", "--out", path("data")}).code, kExitOk);
  save_checkpoint(expand_head(NetworkParams::initialize({4, 4, 4}, 3, 1)), dir_ / "m.ckpt");
  const Result r = run_cli({"eval", "--data", path("data"), "--checkpoint", path("m.ckpt"), "--out", path("e")});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("empty"), std::string::npos);
}

TEST_F(CliTest, SweepDeduplicatesAndValidates) {
  ASSERT_EQ(gen("data").code, kExitOk);
  Result r = run_cli({"--config", cfg_, "--iterations", "1", "sweep-tau1", "--data", path("data"), "--values",
                      "0.3,0.5,0.3,0.7", "--out", path("sw")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.err.find("duplicate"), std::string::npos);
  const std::string csv = slurp(dir_ / "sw" / "sweep_tau1.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);  // header + 3 rows

  r = run_cli({"--config", cfg_, "sweep-tau1", "--data", path("data"), "--values", "0.5,1.2", "--out", path("s")});
  EXPECT_EQ(r.code, kExitUsage);
  r = run_cli({"--config", cfg_, "sweep-tau1", "--data", path("data"), "--values", "0.5,0.5", "--out", path("s")});
  EXPECT_EQ(r.code, kExitUsage);
}

TEST_F(CliTest, ReportWritesAblationTable) {
  const Result r =
      run_cli({"--config", cfg_, "--iterations", "2", "report", "--seeds", "4", "--out", path("rep")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const std::string csv = slurp(dir_ / "rep" / "ablation.csv");
  for (const char* cfg : {"A", "B", "C", "D"}) {
    EXPECT_NE(csv.find(std::string("4,") + cfg + ","), std::string::npos) << csv;
    EXPECT_NE(csv.find(std::string("mean,") + cfg + ","), std::string::npos) << csv;
  }
}

}  // namespace
}  // namespace sats::cli
