#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rldp_cli/cli.hpp"
#include "rldp_cli/config.hpp"

using namespace rldp;
using namespace rldp::cli;
namespace fs = std::filesystem;

namespace {

const char* kSmallConfig = R"({
  "domain": {"kind": "interval", "lo": -1.0, "hi": 1.0},
  "oblique": {"kind": "normal"},
  "coefficients": {"kind": "constant", "b": [0.0], "sigma": [[1.0]]},
  "T": 1.0,
  "x0": [0.0],
  "events": {
    "ball": {"id": "stay", "reference": {"kind": "constant", "point": [0.0]}, "radius": 0.5},
    "complements": {"id": "exit", "tubes": [{"reference": {"kind": "constant", "point": [0.0]}, "radius": 0.5}]}
  },
  "eps_ladder": [0.5, 0.35],
  "mc": {"n_samples": 500, "n_steps": 100},
  "seed": 3,
  "threads": 1,
  "rate": {"segments": 16, "max_segments": 32},
  "hjb": {"cells": 40, "refine": false},
  "stopping": {"steps": 3},
  "simulate": {"eps": 0.5, "n_steps": 100},
  "testfn": {"eps": 0.5, "rho": 0.5, "n_samples": 64}
})";

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("rldp_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write_config(const std::string& body, const std::string& name = "config.json") {
    auto p = dir_ / name;
    std::ofstream(p) << body;
    return p.string();
  }
  int run_sub(const std::string& sub, const std::string& cfg, const std::string& out) {
    Options o;
    o.config = cfg;
    o.out = (dir_ / out).string();
    log_.str("");
    err_.str("");
    return run(sub, o, log_, err_);
  }
  static std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
  }

  fs::path dir_;
  std::ostringstream log_, err_;
};

}  // namespace

TEST_F(CliTest, SimulateWritesPathCsv) {
  auto cfg = write_config(kSmallConfig);
  EXPECT_EQ(run_sub("simulate", cfg, "sim"), kOk) << err_.str();
  auto csv = slurp(dir_ / "sim" / "path.csv");
  EXPECT_FALSE(csv.empty());
  int lines = 0;
  for (char c : csv) lines += c == '\n';
  EXPECT_EQ(lines, 102);  // header plus 101 nodes
}

TEST_F(CliTest, ManifestReferencesEveryOutput) {
  auto cfg = write_config(kSmallConfig);
  ASSERT_EQ(run_sub("hjb", cfg, "hjb"), kOk) << err_.str();
  auto m = nlohmann::json::parse(slurp(dir_ / "hjb" / "manifest.json"));
  std::set<std::string> listed;
  for (const auto& f : m["outputs"]) listed.insert(f["file"].get<std::string>());
  for (const auto& entry : fs::directory_iterator(dir_ / "hjb")) {
    auto name = entry.path().filename().string();
    if (name != "manifest.json") {
      EXPECT_TRUE(listed.count(name)) << name;
    }
  }
  EXPECT_EQ(m["config_hash"], hex64(fnv1a64(slurp(cfg))));
  EXPECT_EQ(m["seed"], 3);
  EXPECT_TRUE(m.contains("versions"));
  EXPECT_TRUE(m.contains("timestamp"));
}

TEST_F(CliTest, NonDecreasingLadderNamesField) {
  std::string body = kSmallConfig;
  body.replace(body.find("[0.5, 0.35]"), 11, "[0.35, 0.5]");
  auto cfg = write_config(body);
  EXPECT_EQ(run_sub("simulate", cfg, "bad"), kError);
  EXPECT_NE(err_.str().find("eps_ladder"), std::string::npos) << err_.str();
}

TEST_F(CliTest, ParseErrorReportsLineAndColumn) {
  auto cfg = write_config("{\n  \"domain\": {\"kind\": \"interval\",,}\n}\n");
  EXPECT_EQ(run_sub("simulate", cfg, "bad"), kError);
  EXPECT_NE(err_.str().find("line 2"), std::string::npos) << err_.str();
  EXPECT_NE(err_.str().find("column"), std::string::npos) << err_.str();
}

TEST_F(CliTest, UnknownBuiltInRejected) {
  std::string body = kSmallConfig;
  body.replace(body.find("\"kind\": \"normal\""), 16, "\"kind\": \"skew\"");
  auto cfg = write_config(body);
  EXPECT_EQ(run_sub("simulate", cfg, "bad"), kError);
  EXPECT_NE(err_.str().find("oblique.kind"), std::string::npos) << err_.str();
}

TEST_F(CliTest, MissingFieldNamed) {
  try {
    parse_config(R"({"domain": {"kind": "disk", "center": [0, 0]}, "x0": [0, 0]})");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("domain.radius"), std::string::npos) << e.what();
  }
}

TEST_F(CliTest, UnknownSubcommand) {
  auto cfg = write_config(kSmallConfig);
  EXPECT_EQ(run_sub("plot", cfg, "x"), kError);
}

TEST_F(CliTest, SameSeedSameBytes) {
  auto cfg = write_config(kSmallConfig);
  ASSERT_EQ(run_sub("estimate", cfg, "a"), kOk) << err_.str();
  ASSERT_EQ(run_sub("estimate", cfg, "b"), kOk) << err_.str();
  EXPECT_EQ(slurp(dir_ / "a" / "estimate.json"), slurp(dir_ / "b" / "estimate.json"));
  auto ma = nlohmann::json::parse(slurp(dir_ / "a" / "manifest.json"));
  auto mb = nlohmann::json::parse(slurp(dir_ / "b" / "manifest.json"));
  EXPECT_EQ(ma["content_hash"], mb["content_hash"]);
}

TEST_F(CliTest, SeedOverrideChangesEstimate) {
  auto cfg = write_config(kSmallConfig);
  Options o;
  o.config = cfg;
  o.out = (dir_ / "s").string();
  o.seed = 77;
  ASSERT_EQ(run("estimate", o, log_, err_), kOk) << err_.str();
  auto m = nlohmann::json::parse(slurp(dir_ / "s" / "manifest.json"));
  EXPECT_EQ(m["seed"], 77);
}

TEST_F(CliTest, StoppingAndRateRun) {
  auto cfg = write_config(kSmallConfig);
  EXPECT_EQ(run_sub("stopping", cfg, "st"), kOk) << err_.str();
  EXPECT_TRUE(fs::exists(dir_ / "st" / "stopping.json"));
  EXPECT_EQ(run_sub("rate", cfg, "rt"), kOk) << err_.str();
  auto r = nlohmann::json::parse(slurp(dir_ / "rt" / "rate.json"));
  EXPECT_FALSE(r.empty());
}

TEST_F(CliTest, BundledConfigsParse) {
  for (const char* name : {"exit_1d.json", "disk_2d.json"}) {
    auto rc = load_config(std::string(RLDP_CONFIG_DIR) + "/" + name);
    EXPECT_FALSE(rc.exp.eps_ladder.empty()) << name;
    EXPECT_TRUE(rc.exp.ball.has_value()) << name;
  }
}

TEST(CliHash, Fnv1aKnownValues) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(hex64(fnv1a64("a")), "af63dc4c8601ec8c");
}
