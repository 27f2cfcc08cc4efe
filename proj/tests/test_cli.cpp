#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

const char* kConfig = R"({"model": {"family": "separable_s", "delta": {"level": 0.05, "amplitude": 0.02, "decay": 0.5},
  "sigma": {"level": 0.4, "amplitude": 0.1, "decay": 0.5}},
  "params": {"rho": 0.1, "K": 1.0, "payoff_kind": "floating"},
  "state0": {"x": 0.7, "s": 1.0, "y": 0.8},
  "meshes": {"n_s": 30, "n_y": 30, "ladder_depth": 2},
  "mc": {"n_paths": 2000, "dt": 0.002, "horizon": 60, "monitoring": "bridge"},
  "verify": {"n_samples": 500}})";

class Cli : public ::testing::Test {
 protected:
  fs::path dir;

  void SetUp() override {
    dir = fs::temp_directory_path() /
          ("mdd_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }

  fs::path write(const std::string& name, const std::string& text) {
    const fs::path p = dir / name;
    std::ofstream(p, std::ios::binary) << text;
    return p;
  }

  static std::string read(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  int run(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + " " + MDD_CLI_PATH + " " + args + " >" + (dir / "stdout").string() + " 2>" +
                            (dir / "stderr").string();
    const int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  }

  std::string run_to_file(const std::string& cmd, const fs::path& cfg, const std::string& name,
                          const std::string& extra = "", const std::string& env = "") {
    const fs::path out = dir / name;
    EXPECT_EQ(run("--config " + cfg.string() + " --out " + out.string() + " " + extra + " " + cmd, env), 0)
        << read(dir / "stderr");
    return read(out);
  }
};

}  // namespace

TEST_F(Cli, EveryCommandIsByteReproducible) {
  const auto cfg = write("c.json", kConfig);
  for (const char* cmd : {"price", "boundary", "gstar", "verify", "mc-check"}) {
    const std::string a = run_to_file(cmd, cfg, std::string(cmd) + "_a");
    const std::string b = run_to_file(cmd, cfg, std::string(cmd) + "_b", "", "MDD_THREADS=2");
    EXPECT_FALSE(a.empty()) << cmd;
    EXPECT_EQ(a, b) << cmd;
    EXPECT_NE(a.find("config_hash"), std::string::npos) << cmd;
  }
}

TEST_F(Cli, SeedOverrideChangesMonteCarloAndHash) {
  const auto cfg = write("c.json", kConfig);
  const auto a = json::parse(run_to_file("mc-check", cfg, "a", "--seed 5"));
  const auto b = json::parse(run_to_file("mc-check", cfg, "b", "--seed 6"));
  const auto c = json::parse(run_to_file("mc-check", cfg, "c", "--seed 5"));
  EXPECT_EQ(a, c);
  EXPECT_NE(a["mean"], b["mean"]);
  EXPECT_NE(a["config_hash"], b["config_hash"]);
  EXPECT_EQ(a["seed"], 5);
}

TEST_F(Cli, HashIgnoresFormattingAndKeyOrder) {
  const auto c1 = write("c1.json", kConfig);
  auto j = json::parse(kConfig);
  const auto c2 = write("c2.json", j.dump(4));
  const auto a = json::parse(run_to_file("gstar", c1, "a"));
  const auto b = json::parse(run_to_file("gstar", c2, "b"));
  EXPECT_EQ(a["config_hash"], b["config_hash"]);
  j["params"]["K"] = 1.1;
  const auto c3 = write("c3.json", j.dump());
  const auto c = json::parse(run_to_file("gstar", c3, "c"));
  EXPECT_NE(a["config_hash"], c["config_hash"]);
}

TEST_F(Cli, CsvIsLocaleIndependent) {
  auto j = json::parse(kConfig);
  j["output"] = {{"format", "csv"}, {"boundary_rows", 8}};
  const auto cfg = write("c.json", j.dump());
  const std::string a = run_to_file("boundary", cfg, "a.csv");
  const std::string b = run_to_file("boundary", cfg, "b.csv", "", "LC_ALL=de_DE.UTF-8 LC_NUMERIC=de_DE.UTF-8");
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.find('\r'), std::string::npos);
  EXPECT_EQ(a.rfind("# config_hash=", 0), 0u);
  const auto nl = a.find('\n');
  const auto nl2 = a.find('\n', nl + 1);
  EXPECT_EQ(a.substr(nl + 1, nl2 - nl - 1), "s,y,b,region_index,constraint_margin");
  std::istringstream rows(a.substr(nl2 + 1));
  std::string line;
  int n = 0;
  while (std::getline(rows, line)) {
    ++n;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 4) << line;
  }
  EXPECT_EQ(n, 31 * 8);
}

TEST_F(Cli, ConfigErrorWritesNoFile) {
  auto j = json::parse(kConfig);
  j["params"]["bogus"] = 1;
  const auto cfg = write("bad.json", j.dump());
  const fs::path out = dir / "out.json";
  EXPECT_EQ(run("--config " + cfg.string() + " --out " + out.string() + " price"), 3);
  EXPECT_FALSE(fs::exists(out));
  EXPECT_FALSE(fs::exists(dir / "out.json.partial"));
  const auto err = json::parse(read(dir / "stderr"));
  EXPECT_EQ(err["error"]["code"], "ConfigError");
}

TEST_F(Cli, ModelErrorWritesNoFile) {
  auto j = json::parse(kConfig);
  j["meshes"]["s_min"] = 2.0;
  j["meshes"]["s_max"] = 5.0;
  const auto cfg = write("bad.json", j.dump());
  const fs::path out = dir / "out.json";
  EXPECT_NE(run("--config " + cfg.string() + " --out " + out.string() + " price"), 0);
  EXPECT_FALSE(fs::exists(out));
  const auto err = json::parse(read(dir / "stderr"));
  EXPECT_TRUE(err.contains("error"));
}

TEST_F(Cli, ErrorGoesToStdoutWithoutOut) {
  const auto cfg = write("bad.json", "{not json");
  EXPECT_EQ(run("--config " + cfg.string() + " gstar"), 3);
  const auto err = json::parse(read(dir / "stdout"));
  EXPECT_EQ(err["error"]["code"], "ConfigError");
}

TEST_F(Cli, PriceDocument) {
  const auto cfg = write("c.json", kConfig);
  const auto p = json::parse(run_to_file("price", cfg, "p.json"));
  EXPECT_EQ(p["branch"], "region1");
  EXPECT_GT(p["value"].get<double>(), 0.0);
  EXPECT_TRUE(p["diagnostics_summary"].contains("generator"));
  EXPECT_GT(p["g_star"].get<double>(), 1.0);
}
