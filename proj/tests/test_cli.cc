// Copyright 2026 The LAD Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "lad/cli.h"

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "lad/config.h"
#include "lad/trainer.h"
#include "test_util.h"

namespace lad {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun Lad(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = RunCli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

// Small dataset, narrow nets, a handful of iterations.
fs::path WriteTinyConfig(const fs::path& dir) {
  ExperimentConfig c;
  c.dataset.num_train = 16;
  c.dataset.num_val = 6;
  c.dataset.image_size = 16;
  c.dataset.seed = 3;
  c.dataset_dir = (dir / "data").string();
  c.teacher_net.base_width = 8;
  c.student_net.base_width = 8;
  c.train.iterations = 4;
  c.train.batch_size = 2;
  c.train.eval_every = 2;
  c.eval.num_images = 4;
  c.eval.saliency_draws = 1;
  c.out_dir = (dir / "runs").string();
  WriteJsonFile(dir / "config.json", ToJson(c));
  return dir / "config.json";
}

TEST(CliTest, UsageErrors) {
  EXPECT_EQ(Lad({}).code, kExitUsage);
  EXPECT_EQ(Lad({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(Lad({"train"}).code, kExitUsage);
  EXPECT_EQ(Lad({"train", "wizard"}).code, kExitUsage);
  EXPECT_EQ(Lad({"train", "teacher", "--alpha", "abc"}).code, kExitUsage);
  EXPECT_EQ(Lad({"eval"}).code, kExitUsage);
  CliRun help = Lad({"--help"});
  EXPECT_EQ(help.code, kExitOk);
  EXPECT_NE(help.out.find("sweep-alpha"), std::string::npos);
}

TEST(CliTest, GenDataIsRepeatable) {
  const fs::path dir = TempDir("gen");
  const fs::path config = WriteTinyConfig(dir);
  ASSERT_EQ(Lad({"gen-data", "--config", config.string(), "--out", (dir / "a").string()}).code,
            kExitOk);
  ASSERT_EQ(Lad({"gen-data", "--config", config.string(), "--out", (dir / "b").string()}).code,
            kExitOk);
  ASSERT_TRUE(fs::exists(dir / "a" / "manifest.json"));
  EXPECT_EQ(JsonHash(ReadJsonFile(dir / "a" / "manifest.json")),
            JsonHash(ReadJsonFile(dir / "b" / "manifest.json")));
  EXPECT_EQ(Slurp(dir / "a" / "images" / "00003.png"), Slurp(dir / "b" / "images" / "00003.png"));
}

TEST(CliTest, GenDataUnwritableDirectory) {
  const fs::path dir = TempDir("gen_bad");
  const fs::path config = WriteTinyConfig(dir);
  std::ofstream(dir / "blocker") << "x";
  CliRun r = Lad({"gen-data", "--config", config.string(), "--out", (dir / "blocker" / "d").string()});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("blocker"), std::string::npos) << r.err;
}

TEST(CliTest, MissingConfigOrDataset) {
  EXPECT_EQ(Lad({"gen-data", "--config", "/nonexistent/config.json"}).code, kExitUsage);
  const fs::path dir = TempDir("nodata");
  const fs::path config = WriteTinyConfig(dir);
  CliRun r = Lad({"train", "baseline", "--config", config.string()});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("manifest"), std::string::npos) << r.err;
}

class CliPipelineTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new fs::path(fs::temp_directory_path() / "lad_test_cli_pipeline");
    fs::remove_all(*dir_);
    fs::create_directories(*dir_);
    config_ = new fs::path(WriteTinyConfig(*dir_));
    ASSERT_EQ(Lad({"gen-data", "--config", config_->string()}).code, kExitOk);
  }
  static void TearDownTestSuite() {
    delete config_;
    delete dir_;
  }
  static std::string Config() { return config_->string(); }
  static fs::path Runs() { return *dir_ / "runs"; }

  static fs::path* dir_;
  static fs::path* config_;
};

fs::path* CliPipelineTest::dir_ = nullptr;
fs::path* CliPipelineTest::config_ = nullptr;

TEST_F(CliPipelineTest, TrainTeacherRecordsFlags) {
  CliRun r = Lad({"train", "teacher", "--config", Config(), "--alpha", "0.01", "--name", "t1"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  Json m = ReadJsonFile(Runs() / "t1.manifest.json");
  EXPECT_EQ(m.at("train").at("alpha").get<double>(), 0.01);
  EXPECT_EQ(m.at("mode"), "teacher");
  EXPECT_TRUE(fs::exists(Runs() / "t1.weights"));
  EXPECT_TRUE(fs::exists(Runs() / "t1.metrics.jsonl"));
  EXPECT_TRUE(fs::exists(Runs() / "t1.config.json"));

  ASSERT_EQ(Lad({"train", "teacher", "--config", Config(), "--clean-label", "--no-consistency",
                 "--independent-copies", "--one-directional", "--lambda", "0.5", "--name", "t2"})
                .code,
            kExitOk);
  Json t = ReadJsonFile(Runs() / "t2.manifest.json").at("train");
  EXPECT_EQ(t.at("alpha").get<double>(), 0.0);
  EXPECT_FALSE(t.at("class_wise_noising").get<bool>());
  EXPECT_FALSE(t.at("dual_path").get<bool>());
  EXPECT_FALSE(t.at("shared_weights").get<bool>());
  EXPECT_EQ(t.at("consistency_form"), "one_directional");
  EXPECT_EQ(t.at("lambda_consistency").get<double>(), 0.5);
}

TEST_F(CliPipelineTest, StudentNeedsTeacherCheckpoint) {
  EXPECT_EQ(Lad({"train", "student", "--config", Config()}).code, kExitUsage);
  EXPECT_EQ(Lad({"train", "student", "--config", Config(), "--teacher-checkpoint",
                 (Runs() / "nope").string()})
                .code,
            kExitUsage);
  ASSERT_EQ(Lad({"train", "teacher", "--config", Config(), "--name", "t3"}).code, kExitOk);
  CliRun r = Lad({"train", "student", "--config", Config(), "--teacher-checkpoint",
                  (Runs() / "t3").string(), "--name", "s3"});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(ReadJsonFile(Runs() / "s3.manifest.json").at("mode"), "student");
}

TEST_F(CliPipelineTest, SavedConfigReproducesRun) {
  ASSERT_EQ(Lad({"train", "baseline", "--config", Config(), "--seed", "4", "--name", "b4"}).code,
            kExitOk);
  ASSERT_EQ(Lad({"train", "baseline", "--config", (Runs() / "b4.config.json").string(), "--name",
                 "b4again"})
                .code,
            kExitOk);
  EXPECT_NEAR(LoadCheckpoint(Runs() / "b4").final_val_miou,
              LoadCheckpoint(Runs() / "b4again").final_val_miou, 1e-6);
  // A checkpoint manifest is itself an accepted config.
  ASSERT_EQ(Lad({"train", "baseline", "--config", (Runs() / "b4.manifest.json").string(), "--out",
                 Runs().string(), "--name", "b4manifest"})
                .code,
            kExitOk);
  EXPECT_NEAR(LoadCheckpoint(Runs() / "b4").final_val_miou,
              LoadCheckpoint(Runs() / "b4manifest").final_val_miou, 1e-6);
}

TEST_F(CliPipelineTest, EvalReportMatchesMetrics) {
  ASSERT_EQ(Lad({"train", "baseline", "--config", Config(), "--name", "b"}).code, kExitOk);
  CliRun r = Lad({"eval", "--checkpoint", (Runs() / "b").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  Json report = ReadJsonFile(Runs() / "report.json");
  ASSERT_TRUE(report.is_array());
  const Json& row = report.back().at("rows").at(0);
  const std::vector<IterationRecord> metrics = LoadMetrics(Runs() / "b");
  EXPECT_EQ(row.at("student_miou").get<double>(), *metrics.back().val_miou);
  EXPECT_EQ(row.at("student_miou").get<double>(), LoadCheckpoint(Runs() / "b").final_val_miou);
  EXPECT_TRUE(report.back().at("provenance").contains("config_hash"));
  EXPECT_TRUE(fs::exists(Runs() / "report.txt"));
}

TEST_F(CliPipelineTest, UntrainedNetNearChance) {
  ASSERT_EQ(Lad({"train", "baseline", "--config", Config(), "--iterations", "0", "--name", "b0"})
                .code,
            kExitOk);
  ASSERT_EQ(Lad({"eval", "--checkpoint", (Runs() / "b0").string()}).code, kExitOk);
  const double miou =
      ReadJsonFile(Runs() / "report.json").back().at("rows").at(0).at("student_miou").get<double>();
  // Background covers most pixels, so an untrained net that happens to favor
  // a shape class sits far below 1/C; only the upper side is meaningful.
  EXPECT_GE(miou, 0.0);
  EXPECT_LE(miou, 1.0 / 5 + 0.15);
}

TEST_F(CliPipelineTest, StabilityAndShortcut) {
  ASSERT_EQ(Lad({"train", "teacher", "--config", Config(), "--name", "t5"}).code, kExitOk);
  const std::string ckpt = (Runs() / "t5").string();
  ASSERT_EQ(Lad({"stability", "--checkpoint", ckpt, "-m", "1"}).code, kExitOk);
  Json row = ReadJsonFile(Runs() / "report.json").back().at("rows").at(0);
  EXPECT_EQ(row.at("kl_mean").get<double>(), 0.0);
  ASSERT_EQ(Lad({"stability", "--checkpoint", ckpt}).code, kExitOk);
  row = ReadJsonFile(Runs() / "report.json").back().at("rows").at(0);
  EXPECT_GT(row.at("kl_mean").get<double>(), 0.0);
  EXPECT_EQ(row.at("m"), 3);
  ASSERT_EQ(Lad({"shortcut", "--checkpoint", ckpt, "--num-images", "3", "--draws", "1"}).code,
            kExitOk);
  row = ReadJsonFile(Runs() / "report.json").back().at("rows").at(0);
  EXPECT_EQ(row.at("per_image_saliency_ratio").size(), 3u);

  ASSERT_EQ(Lad({"train", "baseline", "--config", Config(), "--iterations", "0", "--name", "b5"})
                .code,
            kExitOk);
  EXPECT_EQ(Lad({"shortcut", "--checkpoint", (Runs() / "b5").string()}).code, kExitUsage);
  EXPECT_EQ(Lad({"stability", "--checkpoint", (Runs() / "b5").string()}).code, kExitUsage);
}

TEST_F(CliPipelineTest, ClassCountMismatch) {
  ASSERT_EQ(Lad({"train", "baseline", "--config", Config(), "--iterations", "0", "--name", "b6"})
                .code,
            kExitOk);
  const fs::path other = *dir_ / "four_classes";
  ExperimentConfig c = ExperimentConfigFromJson(ReadJsonFile(Config()));
  c.dataset.num_classes = 4;
  WriteJsonFile(*dir_ / "four.json", ToJson(c));
  ASSERT_EQ(Lad({"gen-data", "--config", (*dir_ / "four.json").string(), "--out", other.string()})
                .code,
            kExitOk);
  CliRun r = Lad({"eval", "--checkpoint", (Runs() / "b6").string(), "--dataset", other.string()});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("classes"), std::string::npos) << r.err;
}

TEST_F(CliPipelineTest, SweepCoversGrid) {
  const fs::path out = *dir_ / "sweep";
  CliRun r = Lad({"sweep-alpha", "--config", Config(), "--iterations", "1", "--out", out.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  Json report = ReadJsonFile(out / "report.json").back();
  const Json& rows = report.at("rows");
  EXPECT_EQ(rows.size(), 10u);
  for (const Json& row : rows) {
    Checkpoint t = LoadCheckpoint(row.at("teacher_checkpoint").get<std::string>());
    Checkpoint s = LoadCheckpoint(row.at("student_checkpoint").get<std::string>());
    EXPECT_EQ(row.at("teacher_miou").get<double>(), t.final_val_miou);
    EXPECT_EQ(row.at("student_miou").get<double>(), s.final_val_miou);
    EXPECT_EQ(t.config.alpha, row.at("alpha").get<double>());
    EXPECT_EQ(t.config.class_wise_noising, row.at("class_wise_noising").get<bool>());
  }
  EXPECT_TRUE(fs::exists(out / "sweep.svg"));
  EXPECT_TRUE(fs::exists(out / "sweep.txt"));
  EXPECT_NE(Slurp(out / "sweep.svg").find("<svg"), std::string::npos);
  EXPECT_EQ(Lad({"sweep-alpha", "--config", Config(), "--alphas", "0.1,-1"}).code, kExitUsage);
}

}  // namespace
}  // namespace lad
