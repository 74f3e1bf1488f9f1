// Copyright 2026 The splatphys Authors.
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

#include "cli.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "splatphys/dataset.hpp"
#include "splatphys/trainer.hpp"

namespace splatphys::cli {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code;
  std::string out, err;
};

Outcome invoke(std::initializer_list<std::string> args) {
  std::vector<std::string> storage{"splatphys"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& s : storage) argv.push_back(s.c_str());
  std::ostringstream out, err;
  const int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::path(::testing::TempDir()) / ("splatphys_cli_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path small_dataset(const std::string& name) {
  const fs::path dir = scratch(name);
  const Outcome o = invoke({"generate", "--recipe", "two_materials", "--frames", "6",
                            "--resolution", "24x24", "--out", dir.string()});
  EXPECT_EQ(o.code, kExitOk) << o.err;
  return dir;
}

TEST(CliTest, SelftestPassesAndIsRepeatable) {
  const Outcome a = invoke({"selftest"});
  EXPECT_EQ(a.code, kExitOk) << a.out;
  EXPECT_EQ(a.out.find("FAIL"), std::string::npos);
  EXPECT_EQ(invoke({"selftest"}).out, a.out);
}

TEST(CliTest, MissingConfigIsUsageError) {
  const Outcome o = invoke({"train", "--config", "missing.cfg", "--data", "d", "--out", "o"});
  EXPECT_EQ(o.code, kExitUsage);
  EXPECT_NE(o.err.find("Usage"), std::string::npos);
}

TEST(CliTest, UnknownFlagPrintsUsage) {
  const Outcome o = invoke({"selftest", "--frobnicate"});
  EXPECT_EQ(o.code, kExitUsage);
  EXPECT_NE(o.err.find("frobnicate"), std::string::npos);
  EXPECT_NE(o.err.find("Usage"), std::string::npos);
}

TEST(CliTest, MissingSubcommandIsUsageError) {
  EXPECT_EQ(invoke({}).code, kExitUsage);
  EXPECT_EQ(invoke({"fly"}).code, kExitUsage);
}

TEST(CliTest, HelpExitsCleanly) {
  const Outcome o = invoke({"--help"});
  EXPECT_EQ(o.code, kExitOk);
  EXPECT_NE(o.out.find("selftest"), std::string::npos);
}

TEST(CliTest, BadValuesAreUsageErrors) {
  const fs::path out = scratch("bad");
  EXPECT_EQ(invoke({"generate", "--resolution", "64by64", "--out", out.string()}).code,
            kExitUsage);
  EXPECT_EQ(invoke({"generate", "--recipe", "teapot", "--out", out.string()}).code, kExitUsage);
  EXPECT_EQ(invoke({"generate", "--frames", "1", "--out", out.string()}).code, kExitUsage);
  EXPECT_EQ(invoke({"train", "--data", out.string(), "--out", out.string(), "--no-mpm",
                    "--no-vfd"})
                .code,
            kExitUsage);
  EXPECT_EQ(invoke({"evaluate", "--data", out.string()}).code, kExitUsage);
}

TEST(CliTest, GenerateKeepsTheSplitProportion) {
  const fs::path dir = scratch("split");
  ASSERT_EQ(invoke({"generate", "--recipe", "translating_cube", "--frames", "20",
                    "--resolution", "16x12", "--out", dir.string()})
                .code,
            kExitOk);
  const Dataset d = load_dataset(dir);
  EXPECT_EQ(d.train_frame_count, 15);
  EXPECT_EQ(d.extrapolate_frame_count, 5);
  EXPECT_EQ(d.width(), 16);
  EXPECT_EQ(d.height(), 12);
}

TEST(CliTest, EvaluatePerfectLabelsGivesUnitScores) {
  const fs::path dir = small_dataset("perfect");
  const Dataset d = load_dataset(dir);
  const fs::path labels = dir / "truth.txt";
  {
    std::ofstream f(labels);
    // Shifted ids: scoring matches clusters to classes.
    for (int l : d.labels) f << l + 5 << '\n';
  }
  const fs::path csv = scratch("perfect_csv") / "metrics.csv";
  const Outcome o = invoke({"evaluate", "--data", dir.string(), "--labels", labels.string(),
                            "--out", csv.string()});
  ASSERT_EQ(o.code, kExitOk) << o.err;
  EXPECT_EQ(slurp(csv),
            "scene,task,psnr,ssim,miou,f1,precision,recall\n"
            "two_materials,segmentation,,,1.000000,1.000000,1.000000,1.000000\n");
}

TEST(CliTest, EvaluateRejectsWrongLabelCount) {
  const fs::path dir = small_dataset("short");
  const fs::path labels = dir / "short.txt";
  std::ofstream(labels) << "0\n1\n";
  EXPECT_EQ(invoke({"evaluate", "--data", dir.string(), "--labels", labels.string()}).code,
            kExitUsage);
}

TEST(CliTest, TrainExtrapolateSegmentChain) {
  const fs::path data = small_dataset("chain");
  const fs::path cfg = scratch("chain_cfg.json");
  std::ofstream(cfg) << R"({"static_iterations": 3, "iterations": 2,
                            "model": {"position_frequencies": 1}})";
  const fs::path run = scratch("chain_run");
  const Outcome t = invoke({"train", "--data", data.string(), "--config", cfg.string(),
                            "--out", run.string(), "--seed", "4", "--k", "3"});
  ASSERT_EQ(t.code, kExitOk) << t.err;
  for (const char* f : {"checkpoint.json", "history.csv", "loss.png", "config.json"}) {
    EXPECT_TRUE(fs::exists(run / f)) << f;
  }
  const TrainConfig effective = load_train_config(run / "config.json");
  EXPECT_EQ(effective.seed, 4u);
  EXPECT_EQ(effective.model.velocity.motion_patterns, 3);

  const std::string ckpt = (run / "checkpoint.json").string();
  const fs::path ex = scratch("chain_ex");
  ASSERT_EQ(invoke({"extrapolate", "--data", data.string(), "--checkpoint", ckpt, "--out",
                    ex.string()})
                .code,
            kExitOk);
  EXPECT_TRUE(fs::exists(ex / "extrapolation.csv"));
  EXPECT_TRUE(fs::exists(ex / "cam_00" / "frame_005.png"));

  const fs::path seg = scratch("chain_seg");
  ASSERT_EQ(invoke({"segment", "--data", data.string(), "--checkpoint", ckpt, "--out",
                    seg.string()})
                .code,
            kExitOk);
  EXPECT_TRUE(fs::exists(seg / "labels.txt"));
  EXPECT_TRUE(fs::exists(seg / "cam_00.png"));

  const Outcome e = invoke({"evaluate", "--data", data.string(), "--checkpoint", ckpt});
  ASSERT_EQ(e.code, kExitOk) << e.err;
  EXPECT_NE(e.out.find("two_materials,extrapolation,"), std::string::npos);
  EXPECT_NE(e.out.find("two_materials,segmentation,"), std::string::npos);
}

TEST(CliTest, CheckpointForAnotherSceneIsRejected) {
  const fs::path a = small_dataset("mismatch_a");
  const fs::path b = scratch("mismatch_b");
  ASSERT_EQ(invoke({"generate", "--recipe", "translating_cube", "--frames", "4",
                    "--resolution", "16x16", "--out", b.string()})
                .code,
            kExitOk);
  const fs::path cfg = scratch("mismatch_cfg.json");
  std::ofstream(cfg) << R"({"static_iterations": 1, "iterations": 0})";
  const fs::path run = scratch("mismatch_run");
  ASSERT_EQ(invoke({"train", "--data", a.string(), "--config", cfg.string(), "--out",
                    run.string()})
                .code,
            kExitOk);
  EXPECT_EQ(invoke({"extrapolate", "--data", b.string(), "--checkpoint",
                    (run / "checkpoint.json").string(), "--out", scratch("mm").string()})
                .code,
            kExitUsage);
}

}  // namespace
}  // namespace splatphys::cli
