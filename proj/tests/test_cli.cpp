// Copyright 2026 The DualField Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dualfield/checkpoint.hpp"
#include "dualfield/image_io.hpp"
#include "dualfield/renderer.hpp"
#include "test_util.hpp"

// After the project headers: httplib pulls in <resolv.h>, whose `_res`
// macro collides with Eigen parameter names.
#include "httplib.h"
#include "json.hpp"

#ifndef DUALFIELD_CLI
#error "DUALFIELD_CLI must point at the dualfield executable"
#endif

namespace dualfield {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code = -1;
  std::string output;
};

Result run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " + DUALFIELD_CLI + " " + args + " 2>&1";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), buf.size(), pipe)) r.output += buf.data();
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int count_lines(const fs::path& p) {
  std::ifstream in(p);
  int n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

// Shared tiny scene so each test does not regenerate it.
class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = testing::scratch_dir("cli");
    const Result g = run("gen-scene --out " + (dir_ / "scene").string() +
                         " --views 4 --size 16 --samples 32");
    ASSERT_EQ(g.code, 0) << g.output;
  }
  static std::string scene() { return (dir_ / "scene").string(); }
  static std::string small() { return " --set field.resolution=8 --set trainer.batch_size=128"; }
  static fs::path dir_;
};
fs::path Cli::dir_;

TEST_F(Cli, UsageErrorsExitWithOne) {
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("frobnicate").code, 1);
  EXPECT_EQ(run("train-static --bogus").code, 1);
  EXPECT_EQ(run("train-static --out x.ckpt").code, 1);  // no --data
  EXPECT_EQ(run("eval --original " + scene()).code, 1);
  EXPECT_EQ(run("train-static --set idu.nope=1 --print-config").code, 1);
  EXPECT_EQ(run("--help").code, 0);
}

TEST_F(Cli, TrainStaticWritesCheckpointAndLog) {
  const auto ckpt = dir_ / "a.ckpt";
  const Result r = run("train-static --data " + scene() + " --iters 20 --out " + ckpt.string() +
                       small());
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("static PSNR"), std::string::npos);
  EXPECT_TRUE(fs::exists(ckpt));
  EXPECT_EQ(count_lines(dir_ / "a.csv"), 21);

  const auto again = dir_ / "b.ckpt";
  ASSERT_EQ(run("train-static --data " + scene() + " --iters 20 --out " + again.string() + small())
                .code,
            0);
  EXPECT_EQ(slurp(ckpt), slurp(again));

  const auto zero = dir_ / "zero.ckpt";
  ASSERT_EQ(run("train-static --data " + scene() + " --iters 0 --out " + zero.string() + small())
                .code,
            0);
  const DualFieldModel init(GridResolution{8, 8, 8});
  EXPECT_TRUE(load_checkpoint(zero).static_field == init.static_field);
}

TEST_F(Cli, ConfigPrecedenceAndStablePrint) {
  const auto cfg = dir_ / "run.toml";
  std::ofstream(cfg) << "[idu]\nn = 5\ntotal_iterations = 100\n[backend]\nendpoint = \"http://cfg:1\"\n";
  const Result a = run("edit --config " + cfg.string() + " --set idu.n=7 --iters 300 --print-config");
  const Result b = run("edit --config " + cfg.string() + " --set idu.n=7 --iters 300 --print-config");
  ASSERT_EQ(a.code, 0) << a.output;
  EXPECT_EQ(a.output, b.output);
  EXPECT_NE(a.output.find("\nn = 7\n"), std::string::npos);
  EXPECT_NE(a.output.find("total_iterations = 300\n"), std::string::npos);
  EXPECT_NE(a.output.find("endpoint = \"http://cfg:1\"\n"), std::string::npos);

  // The environment only fills in an endpoint nobody set.
  const Result env = run("edit --print-config", "DUALFIELD_ENDPOINT=http://env:2");
  EXPECT_NE(env.output.find("endpoint = \"http://env:2\"\n"), std::string::npos) << env.output;
  const Result cfg_wins = run("edit --config " + cfg.string() + " --print-config",
                              "DUALFIELD_ENDPOINT=http://env:2");
  EXPECT_NE(cfg_wins.output.find("endpoint = \"http://cfg:1\"\n"), std::string::npos);

  const Result paper = run("train-static --paper-scale --print-config");
  EXPECT_NE(paper.output.find("iterations = 30000\n"), std::string::npos);
}

TEST_F(Cli, EditWithUnreachableServiceExitsTwoAndNamesUrl) {
  const auto ckpt = dir_ / "s.ckpt";
  ASSERT_EQ(run("train-static --data " + scene() + " --iters 5 --out " + ckpt.string() + small())
                .code,
            0);
  httplib::Server probe;
  const std::string url = "http://127.0.0.1:" + std::to_string(probe.bind_to_any_port("127.0.0.1"));
  const Result r = run("edit --data " + scene() + " --ckpt " + ckpt.string() + " --out " +
                       (dir_ / "down").string() + " --prompt 'make it red' --backend http" +
                       " --endpoint " + url + " --iters 10" + small());
  EXPECT_EQ(r.code, 2) << r.output;
  EXPECT_NE(r.output.find(url), std::string::npos) << r.output;
}

TEST_F(Cli, AblationFlagsShowInTrace) {
  const auto ckpt = dir_ / "abl.ckpt";
  ASSERT_EQ(run("train-static --data " + scene() + " --iters 10 --out " + ckpt.string() + small())
                .code,
            0);
  const auto out = dir_ / "abl";
  const Result r = run("edit --data " + scene() + " --ckpt " + ckpt.string() + " --out " +
                       out.string() + " --prompt 'make it red' --iters 80 --no-sa --no-cci" +
                       small() + " --set renderer.n_samples=16 --set trainer.n_samples=16");
  ASSERT_EQ(r.code, 0) << r.output;
  std::ifstream in(out / "rounds.csv");
  std::string header;
  std::getline(in, header);
  int rows = 0;
  for (std::string line; std::getline(in, line); ++rows) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string x; std::getline(ss, x, ',');) f.push_back(x);
    ASSERT_GE(f.size(), 10u);
    EXPECT_EQ(f[3], "1");  // gamma
    EXPECT_EQ(f[4], "0");  // retreated
    EXPECT_EQ(f[9], "1;1;1;1");
  }
  EXPECT_EQ(rows, 8);
  EXPECT_EQ(count_lines(out / "train_log.csv"), 81);
  for (int i = 0; i < 4; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%03d.png", i);
    EXPECT_TRUE(fs::exists(out / "edited" / name));
  }
  EXPECT_TRUE(fs::exists(out / "edit.ckpt"));

  // The retreated render is the static field's render.
  const auto renders = dir_ / "g0";
  ASSERT_EQ(run("render --ckpt " + (out / "edit.ckpt").string() + " --data " + scene() +
                " --gamma 0 --out " + renders.string())
                .code,
            0);
  const DualFieldModel model = load_checkpoint(out / "edit.ckpt");
  const EditDataset data = load_dataset(scene());
  RenderOptions ro;
  ro.n_samples = 64;
  for (const auto& v : data.views) {
    const Image expect = quantize_8bit(render_static_only(model, v.pose, ro));
    EXPECT_TRUE(read_png(renders / (v.name + ".png")) == expect) << v.name;
  }
}

TEST_F(Cli, EvalOnIdenticalSets) {
  const std::string images = scene() + "/images";
  const auto report = dir_ / "report.json";
  const Result r = run("eval --original " + images + " --edited " + images + " --out " +
                       report.string() + " --csv " + (dir_ / "report.csv").string());
  ASSERT_EQ(r.code, 0) << r.output;
  const auto j = nlohmann::json::parse(slurp(report));
  EXPECT_EQ(j["ssim"].get<double>(), 1.0);
  EXPECT_EQ(j["psnr"].get<double>(), 99.0);
  EXPECT_TRUE(j["c_t2i"].is_null());
  EXPECT_EQ(j["per_view"].size(), 4u);
  EXPECT_EQ(count_lines(dir_ / "report.csv"), 5);
}

}  // namespace
}  // namespace dualfield
