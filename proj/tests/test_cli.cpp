#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "emx/json_io.hpp"

namespace fs = std::filesystem;
using emx::json;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

/// Runs the CLI through the shell; stderr is discarded.
Run emx_run(const std::string& args, const std::string& env = "") {
  std::string cmd = env + (env.empty() ? "" : " ") + "'" + EMX_CLI_PATH + "' " + args + " 2>/dev/null";
  Run r;
  FILE* p = ::popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  int status = ::pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

class Cli : public ::testing::Test {
 protected:
  static fs::path dir;
  static fs::path data;
  static fs::path model;

  static void SetUpTestSuite() {
    dir = fs::temp_directory_path() / "emx_cli_tests";
    fs::remove_all(dir);
    fs::create_directories(dir);
    data = dir / "beer";
    model = dir / "beer.model";
    ASSERT_EQ(emx_run("synth --name beer --out " + q(data)).code, 0);
    ASSERT_EQ(emx_run("train --dataset " + q(data) + " --out " + q(model) + " --seed 7 --epochs 400").code, 0);
  }

  static std::string common() { return "--dataset " + q(data) + " --matcher " + q(model) + " --s-min 100 --s-max 200"; }
};

fs::path Cli::dir;
fs::path Cli::data;
fs::path Cli::model;

}  // namespace

TEST_F(Cli, SynthWritesTables) {
  for (const char* f : {"tableA.csv", "tableB.csv", "train.csv", "valid.csv", "test.csv"}) {
    EXPECT_TRUE(fs::exists(data / f)) << f;
  }
  auto r = emx_run("synth --name restaurants --out " + q(dir / "rest"));
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(json::parse(r.out)["candidates"], 946);
  EXPECT_EQ(emx_run("synth --name nope --out " + q(dir / "x")).code, 2);
}

TEST_F(Cli, TrainIsDeterministic) {
  auto other = dir / "again.model";
  auto r = emx_run("train --dataset " + q(data) + " --out " + q(other) + " --seed 7 --epochs 400");
  ASSERT_EQ(r.code, 0);
  auto j = json::parse(r.out);
  EXPECT_TRUE(j["validation_f1"].is_number());
  EXPECT_EQ(slurp(other), slurp(model));
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(emx_run("train --dataset " + q(dir / "missing") + " --out " + q(dir / "m") + " --seed 1").code, 2);
  EXPECT_EQ(emx_run("train --dataset " + q(data) + " --out " + q(dir / "m")).code, 2);  // no seed
  EXPECT_EQ(emx_run("explain " + common() + " --pair-id 0").code, 2);                  // no seed
  EXPECT_EQ(emx_run("explain " + common() + " --pair-id 99999 --seed 1").code, 2);
  EXPECT_EQ(emx_run("explain " + common() + " --pair-id 0 --seed 1 --ablate sideways").code, 2);
  EXPECT_EQ(emx_run("explain --dataset " + q(data) + " --pair-id 0 --seed 1").code, 2);  // no matcher
  EXPECT_EQ(emx_run("frobnicate").code, 2);
  EXPECT_EQ(emx_run("").code, 2);
}

TEST_F(Cli, ExplainPrintsBothSides) {
  auto r = emx_run("explain " + common() + " --pair-id 3 --seed 1");
  ASSERT_EQ(r.code, 0);
  auto j = json::parse(r.out);
  ASSERT_EQ(j["explanations"].size(), 2u);
  EXPECT_EQ(j["explanations"][0]["side"], "a");
  EXPECT_EQ(j["explanations"][1]["side"], "b");
  EXPECT_EQ(j["pair_id"], "test-3");
  EXPECT_EQ(j["explainer"], "lemon");
  EXPECT_EQ(emx_run("explain " + common() + " --pair-id test-3 --seed 1").out, r.out);
}

TEST_F(Cli, AblationsMapToConfig) {
  auto r = emx_run("explain " + common() + " --pair-id 5 --seed 2 --ablate no-potential");
  ASSERT_EQ(r.code, 0);
  auto j = json::parse(r.out);
  for (const auto& e : j["explanations"]) {
    for (const auto& en : e["entries"]) EXPECT_EQ(en["p"].get<double>(), 0.0);
  }
  auto joint = json::parse(emx_run("explain " + common() + " --pair-id 5 --seed 2 --ablate no-dual").out);
  ASSERT_EQ(joint["explanations"].size(), 1u);
  EXPECT_EQ(joint["explanations"][0]["side"], "joint");
  EXPECT_EQ(joint["config"]["K"], 5);
  auto fixed = json::parse(emx_run("explain " + common() + " --pair-id 5 --seed 2 --ablate granularity=2").out);
  for (const auto& e : fixed["explanations"]) EXPECT_EQ(e["granularity"], 2);
  auto lime = json::parse(emx_run("explain " + common() + " --pair-id 5 --seed 2 --explainer lime").out);
  EXPECT_EQ(lime["explainer"], "lime");
}

TEST_F(Cli, HtmlAndRender) {
  auto html = dir / "p.html";
  auto js = dir / "p.json";
  auto r = emx_run("explain " + common() + " --pair-id 1 --seed 1 --html " + q(html) + " --out " + q(js));
  ASSERT_EQ(r.code, 0);
  auto text = slurp(html);
  EXPECT_EQ(text.rfind("<!DOCTYPE html>", 0), 0u);
  EXPECT_NE(text.find("</html>"), std::string::npos);
  EXPECT_NE(text.find("data-side=\"a\""), std::string::npos);

  auto again = dir / "q.html";
  auto rr = emx_run("render --in " + q(js) + " --out " + q(again));
  ASSERT_EQ(rr.code, 0);
  EXPECT_EQ(slurp(again), text);
  EXPECT_NE(rr.out.find("test-1"), std::string::npos);
}

TEST_F(Cli, SeedFromEnvironment) {
  auto flag = emx_run("explain " + common() + " --pair-id 2 --seed 4");
  auto env = emx_run("explain " + common() + " --pair-id 2", "EM_EXPLAIN_SEED=4");
  ASSERT_EQ(env.code, 0);
  EXPECT_EQ(env.out, flag.out);
}

TEST_F(Cli, ConfigFile) {
  auto cfg = dir / "cfg.json";
  std::ofstream(cfg) << R"({"seed": 4, "explain": {"K": 3, "ablate": ["no-dual"]}})";
  auto r = emx_run("--config " + q(cfg) + " explain " + common() + " --pair-id 2");
  ASSERT_EQ(r.code, 0);
  auto j = json::parse(r.out);
  EXPECT_EQ(j["config"]["K"], 3);
  EXPECT_EQ(j["config"]["seed"], 4);
  EXPECT_EQ(j["explanations"].size(), 1u);
  std::ofstream(dir / "bad.json") << "{not json";
  EXPECT_EQ(emx_run("--config " + q(dir / "bad.json") + " explain " + common() + " --pair-id 2").code, 2);
}

TEST_F(Cli, MatcherFailuresExitThree) {
  const std::string base = "explain --dataset " + q(data) + " --pair-id 0 --seed 1 --s-min 50 --s-max 50";
  EXPECT_EQ(emx_run(base + " --matcher-cmd 'exit 0'").code, 3);
  EXPECT_EQ(emx_run(base + " --matcher-cmd \"'" + std::string(EMX_FAKE_MATCHER_PATH) + "' --mode bad-handshake\"").code, 3);
  EXPECT_EQ(emx_run(base + " --matcher-cmd \"'" + std::string(EMX_FAKE_MATCHER_PATH) + "' --mode error\"").code, 3);
  EXPECT_EQ(emx_run(base + " --matcher-url http://127.0.0.1:1 --matcher-timeout-ms 1000").code, 3);
  auto ok = emx_run(base + " --matcher-cmd \"'" + std::string(EMX_FAKE_MATCHER_PATH) + "' --model '" + model.string() +
                    "'\"");
  ASSERT_EQ(ok.code, 0);
  auto local = emx_run(base + " --matcher " + q(model));
  auto a = json::parse(ok.out), b = json::parse(local.out);
  EXPECT_EQ(a["explanations"], b["explanations"]);
  EXPECT_EQ(b["matcher"]["threshold_defaulted"], false);
}

TEST_F(Cli, DefaultedThresholdIsFlagged) {
  auto r = emx_run("explain --dataset " + q(data) + " --pair-id 0 --seed 1 --s-min 50 --s-max 50 --matcher-cmd \"'" +
                   std::string(EMX_FAKE_MATCHER_PATH) + "' --mode no-threshold\"");
  ASSERT_EQ(r.code, 0);
  auto j = json::parse(r.out);
  EXPECT_EQ(j["matcher"]["threshold_defaulted"], true);
  EXPECT_EQ(j["matcher"]["threshold"], 0.5);
}

TEST_F(Cli, EvaluateOutputsIgnoreWorkerCount) {
  for (const char* metric : {"cf1", "pe", "stability"}) {
    std::string out1 = (dir / ("w1_" + std::string(metric))).string();
    std::string out8 = (dir / ("w8_" + std::string(metric))).string();
    const std::string args = "evaluate " + common() + " --seed 3 --metric " + metric + " --class both --n 5";
    auto r1 = emx_run(args + " --workers 1 --out '" + out1 + "'");
    auto r8 = emx_run(args + " --workers 8 --out '" + out8 + "'");
    ASSERT_EQ(r1.code, 0) << metric;
    ASSERT_EQ(r8.code, 0) << metric;
    EXPECT_EQ(r1.out, r8.out) << metric;
    auto j1 = json::parse(slurp(fs::path(out1) / (std::string(metric) + ".json")));
    auto j8 = json::parse(slurp(fs::path(out8) / (std::string(metric) + ".json")));
    EXPECT_EQ(j1, j8) << metric;
    EXPECT_EQ(slurp(fs::path(out1) / (std::string(metric) + ".csv")), slurp(fs::path(out8) / (std::string(metric) + ".csv")));
    auto rows = json::parse(r1.out);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0]["class"], "match");
    EXPECT_EQ(rows[1]["class"], "nonmatch");
    EXPECT_EQ(j1["dataset_hash"].get<std::string>().size() > 0, true);
  }
}

TEST_F(Cli, EvaluateSweep) {
  auto r = emx_run("evaluate " + common() +
                   " --seed 3 --metric sweep --axis K --values 1,3 --class match --n 3 --seeds 1,2");
  ASSERT_EQ(r.code, 0);
  auto rows = json::parse(r.out);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1]["value"], 3);
  EXPECT_EQ(emx_run("evaluate " + common() + " --seed 3 --metric bogus --n 2").code, 2);
}
