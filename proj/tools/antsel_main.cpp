// Command-line front end: run sweeps, generate channel files, inspect them.
//
// Exit codes: 0 success, 1 output I/O failure, 2 configuration error,
// 3 channel-format error, 4 numeric/singularity error.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>

#include "antsel/channel.hpp"
#include "antsel/errors.hpp"
#include "antsel/experiment.hpp"

namespace {

enum ExitCode : int {
  kOk = 0,
  kIoFailure = 1,
  kConfigError = 2,
  kChannelError = 3,
  kNumericError = 4,
};

int exit_code_for(const antsel::Error& e) {
  using antsel::ErrorKind;
  switch (e.kind()) {
    case ErrorKind::Format:
    case ErrorKind::Dimension:
    case ErrorKind::DegenerateInput:
      return kChannelError;
    case ErrorKind::Numeric:
    case ErrorKind::Singularity:
      return kNumericError;
    case ErrorKind::Io:
      return kIoFailure;
    default:
      return kConfigError;
  }
}

int fail(const antsel::Error& e, int code) {
  std::cerr << "antsel: " << antsel::to_string(e.kind()) << ": " << e.what() << '\n';
  return code;
}

antsel::ChannelTensor load_configured_channel(const antsel::ScenarioConfig& config) {
  try {
    return antsel::build_channel(config);
  } catch (const antsel::IoError& e) {
    // An unreadable channel file is a channel problem, not an output failure.
    throw antsel::FormatError(e.what(), 0);
  }
}

int cmd_run(const std::string& config_path, const std::string& out_dir,
            std::optional<std::uint64_t> seed, std::size_t threads, bool timing) {
  antsel::ScenarioConfig config;
  try {
    config = antsel::load_scenario_config(config_path);
    if (seed) config.seed = *seed;
  } catch (const antsel::Error& e) {
    return fail(e, kConfigError);
  }

  antsel::SweepResult result;
  try {
    const auto channel = load_configured_channel(config);
    antsel::RunOptions options;
    options.threads = threads;
    options.record_timing = timing;
    result = antsel::run_scenario(config, channel, options);
  } catch (const antsel::Error& e) {
    return fail(e, exit_code_for(e));
  }

  for (const auto& issue : antsel::sanity_violations(result)) {
    std::cerr << "antsel: warning: " << issue << '\n';
  }

  try {
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);
    antsel::emit_csv(result, dir / "sweep.csv");
    antsel::emit_selection_trace(result, dir / "selection_trace.csv");
    antsel::emit_n90(result, dir / "n90.csv");
  } catch (const antsel::Error& e) {
    return fail(e, kIoFailure);
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "antsel: " << e.what() << '\n';
    return kIoFailure;
  }

  for (const auto& e : result.n90) {
    std::cout << result.scenario << ' ' << antsel::to_string(e.strategy)
              << ": n90 DPC=" << e.dpc << " ZF=" << e.zf << '\n';
  }
  return kOk;
}

int cmd_gen_channel(const std::string& config_path, const std::string& out,
                    std::optional<std::uint64_t> seed) {
  antsel::ScenarioConfig config;
  try {
    config = antsel::load_scenario_config(config_path);
    if (seed) config.seed = *seed;
  } catch (const antsel::Error& e) {
    return fail(e, kConfigError);
  }
  try {
    const auto channel = load_configured_channel(config);
    antsel::save_channel(channel, out);
    std::cout << "wrote " << out << " (K=" << channel.users() << " M=" << channel.antennas()
              << " L=" << channel.subcarriers() << ")\n";
  } catch (const antsel::Error& e) {
    return fail(e, exit_code_for(e));
  }
  return kOk;
}

int cmd_inspect(const std::string& path) {
  try {
    const auto channel = antsel::load_channel(path);
    const auto power = antsel::per_antenna_avg_power(channel);
    std::printf("K=%zu M=%zu L=%zu\n", channel.users(), channel.antennas(),
                channel.subcarriers());
    std::printf("mean_power=%.6g\n", channel.mean_power());
    std::printf("per_antenna_power_spread_db=%.3f\n", antsel::power_spread_db(power));
  } catch (const antsel::IoError& e) {
    return fail(e, kChannelError);
  } catch (const antsel::Error& e) {
    return fail(e, kChannelError);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transmit antenna selection for multi-user massive MIMO-OFDM"};
  app.require_subcommand(1);

  std::string config_path, out_dir, out_file, channel_path;
  std::uint64_t seed_value = 0;
  std::size_t threads = 1;
  bool timing = false;

  auto* run = app.add_subcommand("run", "Run an antenna-selection sweep");
  run->add_option("--config", config_path, "Scenario JSON file")->required();
  run->add_option("--out-dir", out_dir, "Output directory")->required();
  auto* run_seed = run->add_option("--seed", seed_value, "Override the scenario seed");
  run->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  run->add_flag("--timing", timing, "Record wall-clock time in the wall_ms column");

  auto* gen = app.add_subcommand("gen-channel", "Generate a channel and write CTF1");
  gen->add_option("--config", config_path, "Scenario JSON file")->required();
  gen->add_option("--out", out_file, "Output .ctf1 file")->required();
  auto* gen_seed = gen->add_option("--seed", seed_value, "Override the scenario seed");

  auto* inspect = app.add_subcommand("inspect", "Print dimensions and power spread");
  inspect->add_option("--channel", channel_path, "CTF1 file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  if (*run) {
    return cmd_run(config_path, out_dir,
                   run_seed->count() ? std::optional(seed_value) : std::nullopt, threads,
                   timing);
  }
  if (*gen) {
    return cmd_gen_channel(config_path, out_file,
                           gen_seed->count() ? std::optional(seed_value) : std::nullopt);
  }
  return cmd_inspect(channel_path);
}
