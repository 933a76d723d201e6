#include <algorithm>
#include <chrono>
#include <filesystem>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "neucrowd/io_util.hpp"
#include "neucrowd_cli/cli.hpp"
#include "test_util.hpp"

namespace neucrowd {
namespace {

namespace fs = std::filesystem;

struct CliRun {
  int code = 0;
  std::string out;
  std::string err;
};

CliRun run(std::vector<std::string> args) {
  std::ostringstream out, err;
  CliRun r;
  r.code = cli::run_subcommand(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::vector<std::string> small_generate(const fs::path& dir, const std::string& seed) {
  return {"generate", "--out", dir.string(), "--seed", seed, "--sizes", "50,20,20",
          "--features", "20", "-q"};
}

const std::vector<std::string> kSmokeSets{"--set", "batch_size=8", "epochs=2", "embedding_dim=4",
                                          "hidden_dims=8"};

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

TEST(Cli, GenerateIsByteIdentical) {
  testing::TempDir dir("cli");
  ASSERT_EQ(run(small_generate(dir.path() / "a", "1")).code, cli::kExitOk);
  ASSERT_EQ(run(small_generate(dir.path() / "b", "1")).code, cli::kExitOk);
  for (const char* f : {"train.csv", "validation.csv", "test.csv", "manifest.json", "stats.json"}) {
    EXPECT_EQ(read_file(dir.path() / "a" / f), read_file(dir.path() / "b" / f)) << f;
  }
  const auto stats = nlohmann::json::parse(read_file(dir.path() / "a" / "stats.json"));
  EXPECT_TRUE(stats.contains("train"));
}

TEST(Cli, TrainOnMissingDataLeavesNoOutput) {
  testing::TempDir dir("cli");
  const fs::path out = dir.path() / "run";
  const CliRun r = run({"train", "--data", (dir.path() / "missing").string(), "--out", out.string()});
  EXPECT_NE(r.code, cli::kExitOk);
  EXPECT_FALSE(fs::exists(out));
  EXPECT_NE(r.err.find("\"error\""), std::string::npos);
}

TEST(Cli, UnknownSubcommandIsUsageError) {
  EXPECT_EQ(run({"frobnicate"}).code, cli::kExitUsage);
  EXPECT_EQ(run({}).code, cli::kExitUsage);
}

TEST(Cli, BadOverrideNamesKey) {
  testing::TempDir dir("cli");
  const CliRun r = run({"generate", "--out", dir.path().string(), "--seed", "1", "--set",
                     "hard_fraction=0"});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_NE(r.err.find("hard_fraction"), std::string::npos);
}

TEST(Cli, TrainEvalPipeline) {
  testing::TempDir dir("cli");
  const fs::path data = dir.path() / "data";
  const fs::path model = dir.path() / "model";
  ASSERT_EQ(run(small_generate(data, "2")).code, cli::kExitOk);
  const auto train_args = with({"train", "--data", data.string(), "--out", model.string(), "-q",
                                "--ablate", "SN", "--dump-safety"},
                               kSmokeSets);
  ASSERT_EQ(run(train_args).code, cli::kExitOk);
  for (const char* f : {"srl.ckpt.json", "sampler.ckpt.json", "history.jsonl", "config.resolved"}) {
    EXPECT_TRUE(fs::exists(model / f)) << f;
  }
  EXPECT_NE(read_file(model / "config.resolved").find("use_sn = false"), std::string::npos);
  EXPECT_TRUE(fs::exists(model / "safety" / "epoch_00000.json"));

  const fs::path metrics = dir.path() / "metrics.json";
  ASSERT_EQ(run({"eval", "--checkpoint", (model / "srl.ckpt.json").string(), "--data",
                 data.string(), "--out", metrics.string(), "-q"})
                .code,
            cli::kExitOk);
  const auto doc = nlohmann::json::parse(read_file(metrics));
  EXPECT_GE(doc["accuracy"].get<double>(), 0.0);
  EXPECT_LE(doc["auc"].get<double>(), 1.0);
  EXPECT_EQ(doc["model"], "NeuCrowd-SN");

  // Same inputs, same bytes.
  const fs::path again = dir.path() / "again";
  ASSERT_EQ(run(with({"train", "--data", data.string(), "--out", again.string(), "-q", "--ablate",
                      "SN"},
                     kSmokeSets))
                .code,
            cli::kExitOk);
  EXPECT_EQ(read_file(model / "srl.ckpt.json"), read_file(again / "srl.ckpt.json"));
  EXPECT_EQ(read_file(model / "history.jsonl"), read_file(again / "history.jsonl"));
}

TEST(Cli, AblateSmokeUnderOneMinute) {
  testing::TempDir dir("cli");
  const fs::path data = dir.path() / "data";
  ASSERT_EQ(run(small_generate(data, "3")).code, cli::kExitOk);
  const auto start = std::chrono::steady_clock::now();
  const CliRun r = run(with({"ablate", "--data", data.string(), "--seeds", "1,2", "--out",
                          (dir.path() / "abl").string(), "--baseline", "-q"},
                         kSmokeSets));
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_LT(seconds, 60.0);
  const std::string csv = read_file(dir.path() / "abl" / "ablation.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 9);
  EXPECT_TRUE(fs::exists(dir.path() / "abl" / "majority_vote.json"));
}

}  // namespace
}  // namespace neucrowd
