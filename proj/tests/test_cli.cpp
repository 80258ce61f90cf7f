#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "locallearn/json_io.hpp"

namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("locallearn_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(LOCALLEARN_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST(Cli, UnknownConfigKeyExitsWithTwo) {
  const auto d = scratch("badkey");
  write(d / "c.json", R"({"command":"rules list","colour":"red"})");
  EXPECT_EQ(run_cli("--config " + (d / "c.json").string() + " --out " + d.string()), 2);
}

TEST(Cli, UnknownParameterExitsWithTwo) {
  const auto d = scratch("badparam");
  write(d / "c.json", R"({"command":"channel table8","params":{"Q":3}})");
  EXPECT_EQ(run_cli("--config " + (d / "c.json").string() + " --out " + d.string()), 2);
}

TEST(Cli, WrongParameterTypeExitsWithTwo) {
  const auto d = scratch("badtype");
  write(d / "c.json", R"({"command":"boolean census","params":{"n":"three"}})");
  EXPECT_EQ(run_cli("--config " + (d / "c.json").string() + " --out " + d.string()), 2);
}

TEST(Cli, MalformedJsonExitsWithTwo) {
  const auto d = scratch("badjson");
  write(d / "c.json", "{not json");
  EXPECT_EQ(run_cli("--config " + (d / "c.json").string()), 2);
}

TEST(Cli, BadFlagsExitWithTwo) {
  EXPECT_EQ(run_cli("boolean census --no-such-flag 1"), 2);
  EXPECT_EQ(run_cli("channel run --alg SGD --out " + scratch("badalg").string()), 2);
  EXPECT_EQ(run_cli("reproduce ac99 --out " + scratch("badac").string()), 2);
  EXPECT_EQ(run_cli("reproduce --budget huge --out " + scratch("badbudget").string()), 2);
}

TEST(Cli, RuntimeFailureExitsWithOne) {
  const auto d = scratch("runtime");
  EXPECT_EQ(run_cli("ssh analyze --family csv --file /nonexistent.csv --out " + d.string()), 1);
  EXPECT_EQ(run_cli("moments predict --rule oja --out " + d.string()), 1);
}

TEST(Cli, ManifestRecordsSeedAndConfigHash) {
  const auto d = scratch("manifest");
  ASSERT_EQ(run_cli("rules list --seed 42 --out " + d.string()), 0);
  const auto m = locallearn::read_json_file((d / "manifest.json").string());
  EXPECT_EQ(m.at("seed"), 42);
  EXPECT_EQ(m.at("command"), "rules list");
  EXPECT_EQ(m.at("config_hash").get<std::string>().size(), 16u);
  EXPECT_EQ(m.at("outputs")[0].at("file"), "rules.csv");
}

TEST(Cli, ConfigAndFlagsAgree) {
  const auto a = scratch("cfg_a"), b = scratch("cfg_b");
  write(a / "c.json", R"({"command":"channel run","seed":7,"params":{"alg":"PWGB","W":49,"trials":20}})");
  ASSERT_EQ(run_cli("--config " + (a / "c.json").string() + " --out " + (a / "run").string()), 0);
  ASSERT_EQ(run_cli("channel run --alg PWGB --W 49 --trials 20 --seed 7 --out " + (b / "run").string()), 0);
  EXPECT_EQ(slurp(a / "run" / "trials.csv"), slurp(b / "run" / "trials.csv"));
  const auto ma = locallearn::read_json_file((a / "run" / "manifest.json").string());
  const auto mb = locallearn::read_json_file((b / "run" / "manifest.json").string());
  EXPECT_EQ(ma.at("config_hash"), mb.at("config_hash"));
}

TEST(Cli, CsvOutputIsDeterministicAcrossThreadCounts) {
  const auto a = scratch("det_a"), b = scratch("det_b");
  ASSERT_EQ(run_cli("boolean census --n 2 --restarts 16 --threads 1 --out " + a.string()), 0);
  ASSERT_EQ(run_cli("boolean census --n 2 --restarts 16 --threads 3 --out " + b.string()), 0);
  EXPECT_EQ(slurp(a / "census.csv"), slurp(b / "census.csv"));
  EXPECT_EQ(slurp(a / "census_functions.csv"), slurp(b / "census_functions.csv"));
  EXPECT_FALSE(slurp(a / "census.csv").empty());
}

TEST(Cli, EveryCommandProducesOutput) {
  const auto d = scratch("all");
  const std::vector<std::pair<std::string, std::string>> cases{
      {"rules classify --rule oja", "classification.json"},
      {"rules transform --rule simple_hebb --from unit", "transform.json"},
      {"moments compute --m 40", "moments.json"},
      {"moments predict --rule delta --epochs 4 --m 40", "trajectory.csv"},
      {"simulate --rule oja --epochs 2 --m 40", "simulation.csv"},
      {"ssh analyze", "report.json"},
      {"ssh verify --datasets 10", "verdicts.csv"},
      {"deep-targets train --sizes 12,4,12 --bits 12 --clusters 3 --per-cluster 5 --test-per-cluster 2 --epochs 2",
       "checkpoint.json"},
      {"channel run --alg PALR --W 36 --trials 3", "trials.csv"},
      {"channel scale --alg PWGRK --axis K --sizes 2,4,8 --fixed-W 64 --trials 20", "points.csv"},
      {"channel table8", "table8.md"},
      {"hopfield store --memories +-+-,++--", "weights.csv"},
      {"hopfield orient --memories +-+-,++--", "edges.csv"},
      {"hopfield commute --exhaustive-n 2", "commutation.json"},
      {"hopfield uniqueness --n 3", "uniqueness.json"},
      {"reproduce ac4", "acceptance.csv"},
  };
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const fs::path out = d / std::to_string(i);
    ASSERT_EQ(run_cli(cases[i].first + " --out " + out.string()), 0) << cases[i].first;
    EXPECT_TRUE(fs::exists(out / cases[i].second)) << cases[i].first;
    EXPECT_TRUE(fs::exists(out / "manifest.json")) << cases[i].first;
  }
}

TEST(Cli, RuleFileIsAccepted) {
  const auto d = scratch("rulefile");
  write(d / "r.json", R"({"name":"mine","terms":[{"coeff":1,"nT":0,"nPost":1,"nPre":1,"nW":0,"postMode":"output"}]})");
  ASSERT_EQ(run_cli("rules classify --rule " + (d / "r.json").string() + " --out " + d.string()), 0);
  const auto j = locallearn::read_json_file((d / "classification.json").string());
  EXPECT_EQ(j.at("name"), "mine");
  write(d / "bad.json", R"({"name":"mine","terms":[{"coef":1}]})");
  EXPECT_EQ(run_cli("rules classify --rule " + (d / "bad.json").string() + " --out " + d.string()), 2);
}

TEST(Cli, ManifestConfigRegeneratesArtifacts) {
  const auto a = scratch("regen_a"), b = scratch("regen_b");
  ASSERT_EQ(run_cli("ssh verify --datasets 15 --seed 3 --out " + a.string()), 0);
  const auto m = locallearn::read_json_file((a / "manifest.json").string());
  write(b / "c.json", m.at("config").dump());
  ASSERT_EQ(run_cli("--config " + (b / "c.json").string() + " --out " + (b / "run").string()), 0);
  EXPECT_EQ(slurp(a / "verdicts.csv"), slurp(b / "run" / "verdicts.csv"));
  EXPECT_EQ(slurp(a / "trajectories.csv"), slurp(b / "run" / "trajectories.csv"));
  const auto m2 = locallearn::read_json_file((b / "run" / "manifest.json").string());
  EXPECT_EQ(m.at("outputs"), m2.at("outputs"));
}

TEST(Cli, SimulateHeader) {
  const auto d = scratch("simheader");
  ASSERT_EQ(run_cli("simulate --n 2 --m 20 --epochs 1 --out " + d.string()), 0);
  const std::string csv = slurp(d / "simulation.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\r')), "epoch,norm,angle_to_centroid,w_0,w_1");
}
