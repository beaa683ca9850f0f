#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "antsel/errors.hpp"
#include "antsel/experiment.hpp"

using namespace antsel;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json small_config() {
  return json{{"name", "tiny"},
              {"channel_source", {{"type", "iid_rayleigh"}}},
              {"K", 2},
              {"M", 8},
              {"L", 2},
              {"rho_db", -5.0},
              {"n_sweep", {2, 4}},
              {"strategies", {"convex", "power", "random", "exhaustive"}},
              {"random_draws", 10},
              {"seed", 3}};
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("antsel_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(ANTSEL_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, ParsesFieldsAndDefaults) {
  const auto c = parse_scenario_config(small_config());
  EXPECT_EQ(c.name, "tiny");
  EXPECT_EQ(c.K, 2u);
  EXPECT_EQ(c.strategies.size(), 4u);
  EXPECT_NEAR(c.rho_linear(), 0.31622776601683794, 1e-15);
  EXPECT_EQ(c.effective_sweep(), (std::vector<std::size_t>{2, 4, 8}));
  EXPECT_EQ(c.normalization, NormalizationMode::Joint);
}

TEST(Config, RejectsUnknownKeysAtEveryLevel) {
  auto top = small_config();
  top["rho"] = 1;
  EXPECT_THROW(parse_scenario_config(top), ConfigError);

  auto nested = small_config();
  nested["channel_source"] = {{"type", "synthetic"},
                              {"geometry", {{"kind", "linear"}}},
                              {"scene", {{"clusters", 3}}}};
  try {
    parse_scenario_config(nested);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "channel_source.scene.clusters");
  }
}

TEST(Config, NamedFieldErrors) {
  auto bad_n = small_config();
  bad_n["n_sweep"] = {1, 4};
  try {
    parse_scenario_config(bad_n);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "n_sweep");
  }
  auto bad_strategy = small_config();
  bad_strategy["strategies"] = {"convex", "greedy"};
  EXPECT_THROW(parse_scenario_config(bad_strategy), ConfigError);
  auto dup = small_config();
  dup["strategies"] = {"convex", "convex"};
  EXPECT_THROW(parse_scenario_config(dup), ConfigError);
  auto bad_norm = small_config();
  bad_norm["normalization"] = "none";
  EXPECT_THROW(parse_scenario_config(bad_norm), ConfigError);
  auto comma = small_config();
  comma["name"] = "a,b";
  EXPECT_THROW(parse_scenario_config(comma), ConfigError);
}

TEST(Config, DefaultGrid) {
  EXPECT_EQ(default_n_grid(4, 10), (std::vector<std::size_t>{4, 5, 6, 7, 8, 9, 10}));
  const auto g = default_n_grid(4, 128);
  EXPECT_EQ(g.size(), 16u);
  EXPECT_EQ(g.front(), 4u);
  EXPECT_EQ(g.back(), 128u);
  EXPECT_TRUE(std::is_sorted(g.begin(), g.end()));
}

TEST(Metrics, GainVsRandom) {
  EXPECT_NEAR(gain_vs_random(1.1, 1.0), 10.0, 1e-12);
  EXPECT_EQ(gain_vs_random(2.5, 2.5), 0.0);
  EXPECT_THROW(gain_vs_random(1.0, 0.0), DomainError);
}

TEST(Metrics, N90) {
  const std::size_t K = 4, M = 64;
  const std::vector<std::size_t> ns{K, M / 4, M / 2, M};
  EXPECT_EQ(n90(ns, std::vector<double>{0.5, 0.85, 0.92, 1.0}, 1.0), M / 2);
  EXPECT_EQ(n90(ns, std::vector<double>{3.0, 3.0, 3.0, 3.0}, 3.0), K);
}

TEST(PerUserRate, InterferenceFreeEnvelope) {
  const double rho = std::pow(10.0, -5.0 / 10.0);
  EXPECT_NEAR(std::log2(1.0 + rho * 128), 5.37, 0.01);
  EXPECT_NEAR(std::log2(1.0 + rho * 4), 1.18, 0.01);
}

TEST(PerUserRate, FullArrayIidApproachesInterferenceFree) {
  ScenarioConfig c;
  c.K = 4;
  c.M = 128;
  c.L = 161;
  c.seed = 1;
  const auto channel = build_channel(c);
  const auto r = dpc_sum_capacity(channel, SelectionMask::all(128), c.rho_linear());
  EXPECT_NEAR(r.mean / 4.0, std::log2(1.0 + c.rho_linear() * 128), 0.1);
}

TEST(Sweep, RowsOrderedAndConsistent) {
  const auto c = parse_scenario_config(small_config());
  const auto r = run_scenario(c);
  ASSERT_EQ(r.rows.size(), 12u);
  const std::vector<Strategy> order{Strategy::Convex, Strategy::Power, Strategy::Random,
                                    Strategy::Exhaustive};
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    EXPECT_EQ(r.rows[i].strategy, order[i / 3]);
    EXPECT_EQ(r.rows[i].N, (std::vector<std::size_t>{2, 4, 8})[i % 3]);
    EXPECT_LE(r.rows[i].zf_mean, r.rows[i].dpc_mean + 1e-9);
    if (r.rows[i].strategy == Strategy::Random) {
      EXPECT_EQ(r.rows[i].dpc_gain_pct, 0.0);
      EXPECT_EQ(r.rows[i].zf_gain_pct, 0.0);
    }
    EXPECT_EQ(r.rows[i].wall_ms, 0.0);
  }
  // Every strategy agrees at N = M.
  for (std::size_t s = 1; s < 4; ++s)
    EXPECT_NEAR(r.rows[2].dpc_mean, r.rows[3 * s + 2].dpc_mean, 1e-12);
  EXPECT_TRUE(sanity_violations(r).empty());
  ASSERT_EQ(r.n90.size(), 4u);
  for (const auto& e : r.n90) EXPECT_LE(e.dpc, 8u);
}

TEST(Sweep, ThreadsDoNotChangeOutput) {
  const auto c = parse_scenario_config(small_config());
  RunOptions one, four;
  four.threads = 4;
  EXPECT_EQ(format_sweep_csv(run_scenario(c, one)), format_sweep_csv(run_scenario(c, four)));
}

TEST(Csv, HeaderOnlyForEmptySweep) {
  SweepResult empty;
  EXPECT_EQ(format_sweep_csv(empty), std::string(kSweepCsvHeader) + "\n");
  EXPECT_EQ(format_selection_trace(empty), std::string(kTraceCsvHeader) + "\n");
}

TEST(Csv, RoundTripAtFullPrecision) {
  SweepResult r;
  r.scenario = "rt";
  SweepRow row;
  row.scenario = "rt";
  row.strategy = Strategy::Power;
  row.N = 17;
  row.dpc_mean = 1.0 / 3.0;
  row.zf_mean = std::nextafter(2.0, 3.0);
  row.dpc_gain_pct = -1e-300;
  row.zf_gain_pct = 12345.678901234567;
  row.iters = 42;
  row.wall_ms = 0.0;
  r.rows.push_back(row);
  const auto parsed = parse_sweep_csv(format_sweep_csv(r));
  ASSERT_EQ(parsed.size(), 1u);
  EXPECT_EQ(parsed[0].scenario, "rt");
  EXPECT_EQ(parsed[0].strategy, Strategy::Power);
  EXPECT_EQ(parsed[0].N, 17u);
  EXPECT_EQ(parsed[0].dpc_mean, row.dpc_mean);
  EXPECT_EQ(parsed[0].zf_mean, row.zf_mean);
  EXPECT_EQ(parsed[0].dpc_gain_pct, row.dpc_gain_pct);
  EXPECT_EQ(parsed[0].zf_gain_pct, row.zf_gain_pct);
  EXPECT_EQ(parsed[0].iters, 42u);
}

TEST(Csv, TraceForFullArrayListsEveryAntenna) {
  const auto r = run_scenario(parse_scenario_config(small_config()));
  std::istringstream in(format_selection_trace(r));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, kTraceCsvHeader);
  std::map<std::string, std::vector<int>> full;
  while (std::getline(in, line)) {
    std::stringstream ls(line);
    std::string strategy, n, idx;
    std::getline(ls, strategy, ',');
    std::getline(ls, n, ',');
    std::getline(ls, idx, ',');
    if (n == "8") full[strategy].push_back(std::stoi(idx));
  }
  ASSERT_EQ(full.size(), 4u);
  for (const auto& [strategy, idx] : full)
    EXPECT_EQ(idx, (std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8})) << strategy;
}

TEST(Cli, RunIsByteIdenticalAcrossInvocations) {
  const auto dir = scratch_dir("cli_run");
  std::ofstream(dir / "c.json") << small_config().dump(2);
  ASSERT_EQ(run_cli("run --config " + (dir / "c.json").string() + " --out-dir " +
                    (dir / "a").string()),
            0);
  ASSERT_EQ(run_cli("run --config " + (dir / "c.json").string() + " --out-dir " +
                    (dir / "b").string() + " --threads 2"),
            0);
  for (const char* f : {"sweep.csv", "selection_trace.csv", "n90.csv"}) {
    const auto a = read_file(dir / "a" / f);
    EXPECT_FALSE(a.empty());
    EXPECT_EQ(a, read_file(dir / "b" / f)) << f;
  }
  EXPECT_EQ(read_file(dir / "a" / "sweep.csv").rfind(kSweepCsvHeader, 0), 0u);
}

TEST(Cli, ExitCodes) {
  const auto dir = scratch_dir("cli_codes");
  auto bad = small_config();
  bad["typo"] = true;
  std::ofstream(dir / "bad.json") << bad.dump();
  EXPECT_EQ(run_cli("run --config " + (dir / "bad.json").string() + " --out-dir " +
                    (dir / "o").string()),
            2);

  std::ofstream(dir / "garbage.ctf1", std::ios::binary) << "not a channel file at all";
  EXPECT_EQ(run_cli("inspect --channel " + (dir / "garbage.ctf1").string()), 3);

  auto file_cfg = small_config();
  file_cfg["channel_source"] = {{"type", "file"}, {"path", "garbage.ctf1"}};
  std::ofstream(dir / "file.json") << file_cfg.dump();
  EXPECT_EQ(run_cli("run --config " + (dir / "file.json").string() + " --out-dir " +
                    (dir / "o").string()),
            3);

  ASSERT_EQ(run_cli("gen-channel --config " + (dir / "bad.json").string() + " --out " +
                    (dir / "x.ctf1").string()),
            2);
  auto good = small_config();
  std::ofstream(dir / "good.json") << good.dump();
  ASSERT_EQ(run_cli("gen-channel --config " + (dir / "good.json").string() + " --out " +
                    (dir / "ok.ctf1").string()),
            0);
  EXPECT_EQ(run_cli("inspect --channel " + (dir / "ok.ctf1").string()), 0);

  // Truncate a valid file.
  const auto bytes = read_file(dir / "ok.ctf1");
  std::ofstream(dir / "short.ctf1", std::ios::binary) << bytes.substr(0, bytes.size() - 5);
  EXPECT_EQ(run_cli("inspect --channel " + (dir / "short.ctf1").string()), 3);
}
