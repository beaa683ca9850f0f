#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "antsel/channel.hpp"
#include "antsel/rate.hpp"
#include "antsel/selection.hpp"

namespace antsel {

struct IidRayleighSource {};

struct SyntheticSource {
  ArrayGeometry geometry;
  SyntheticSceneConfig scene;
  SyntheticModelParams model;
};

struct FileSource {
  std::filesystem::path path;
};

using ChannelSource = std::variant<IidRayleighSource, SyntheticSource, FileSource>;

struct ScenarioConfig {
  std::string name = "scenario";
  ChannelSource channel_source = IidRayleighSource{};
  std::size_t K = 4;
  std::size_t M = 64;
  std::size_t L = 16;
  double rho_db = -5.0;
  /// Empty means the default grid. M is always part of the effective sweep.
  std::vector<std::size_t> n_sweep;
  std::vector<Strategy> strategies = {Strategy::Convex, Strategy::Power,
                                      Strategy::Random};
  std::size_t random_draws = 200;
  std::uint64_t seed = 0;
  NormalizationMode normalization = NormalizationMode::Joint;
  DpcOptions dpc;
  ConvexSolverParams convex;

  double rho_linear() const;
  /// Sorted, deduplicated sweep including M.
  std::vector<std::size_t> effective_sweep() const;
  void validate() const;
};

/// Every integer from K to M when M <= 32, otherwise 16 evenly spaced values
/// from K to M inclusive.
std::vector<std::size_t> default_n_grid(std::size_t K, std::size_t M);

/// Parses a scenario document; unknown keys are rejected. Relative file
/// paths are resolved against `base_dir`.
ScenarioConfig parse_scenario_config(const nlohmann::json& doc,
                                     const std::filesystem::path& base_dir = {});
ScenarioConfig load_scenario_config(const std::filesystem::path& path);

/// Generates or loads the configured channel and applies the configured
/// normalization.
ChannelTensor build_channel(const ScenarioConfig& config);

struct SweepRow {
  std::string scenario;
  Strategy strategy = Strategy::Convex;
  std::size_t N = 0;
  double dpc_mean = 0.0;
  double zf_mean = 0.0;
  double dpc_gain_pct = 0.0;
  double zf_gain_pct = 0.0;
  std::size_t iters = 0;
  double wall_ms = 0.0;
  /// Equal-power objective of the selection (mean over draws for Random).
  double log_det = 0.0;
  double log_det_stderr = 0.0;
  double dpc_stderr = 0.0;
  double zf_stderr = 0.0;
};

struct N90Entry {
  Strategy strategy = Strategy::Convex;
  std::size_t dpc = 0;
  std::size_t zf = 0;
};

struct TraceEntry {
  Strategy strategy = Strategy::Convex;
  std::size_t N = 0;
  std::vector<std::size_t> indices;  // 0-based, sorted
};

struct SweepResult {
  std::string scenario;
  std::vector<SweepRow> rows;  // ordered by strategy (config order), then N
  std::vector<N90Entry> n90;
  std::vector<TraceEntry> traces;
};

struct RunOptions {
  std::size_t threads = 1;
  /// When false the wall_ms column is written as 0 so output is reproducible
  /// byte for byte.
  bool record_timing = false;
};

SweepResult run_scenario(const ScenarioConfig& config, const RunOptions& options = {});
SweepResult run_scenario(const ScenarioConfig& config, const ChannelTensor& channel,
                         const RunOptions& options = {});

/// 100 (adaptive - baseline) / baseline.
double gain_vs_random(double adaptive, double baseline);

/// Smallest sampled N whose rate reaches 90% of `full_rate`.
std::size_t n90(std::span<const std::size_t> ns, std::span<const double> rates,
                double full_rate);

/// Cross-strategy ordering checks on the equal-power objective: exhaustive
/// >= convex and convex >= random mean - 3 standard errors. Returns one
/// message per violation.
std::vector<std::string> sanity_violations(const SweepResult& result);

inline constexpr const char* kSweepCsvHeader =
    "scenario,strategy,N,dpc_mean_bpshz,zf_mean_bpshz,dpc_gain_pct,zf_gain_pct,iters,"
    "wall_ms";
inline constexpr const char* kTraceCsvHeader = "strategy,N,antenna_index";
inline constexpr const char* kN90CsvHeader = "scenario,strategy,n90_dpc,n90_zf";

std::string format_sweep_csv(const SweepResult& result);
std::string format_selection_trace(const SweepResult& result);
std::string format_n90_csv(const SweepResult& result);

void emit_csv(const SweepResult& result, const std::filesystem::path& path);
void emit_selection_trace(const SweepResult& result, const std::filesystem::path& path);
void emit_n90(const SweepResult& result, const std::filesystem::path& path);

/// Reads rows back from sweep CSV text (header required).
std::vector<SweepRow> parse_sweep_csv(const std::string& text);

}  // namespace antsel
