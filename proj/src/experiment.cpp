#include "antsel/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <sstream>
#include <thread>

#include "antsel/errors.hpp"
#include "antsel/random.hpp"

namespace antsel {
namespace {

/// Runs task(i) for i in [0, count) on up to `threads` workers. The first
/// failure in index order is rethrown so errors do not depend on scheduling.
template <typename Task>
void parallel_for(std::size_t count, std::size_t threads, Task task) {
  std::vector<std::exception_ptr> errors(count);
  auto run = [&](std::size_t i) {
    try {
      task(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) run(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) run(i);
      });
    }
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out << text;
  if (!out) throw IoError(path.string(), "write failed");
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
      .count();
}

}  // namespace

ChannelTensor build_channel(const ScenarioConfig& config) {
  ChannelTensor raw = std::visit(
      [&](const auto& src) -> ChannelTensor {
        using T = std::decay_t<decltype(src)>;
        if constexpr (std::is_same_v<T, IidRayleighSource>) {
          return gen_iid_rayleigh(config.K, config.M, config.L, config.seed);
        } else if constexpr (std::is_same_v<T, SyntheticSource>) {
          auto scene = src.scene;
          scene.bandwidth_subcarriers = config.L;
          scene.seed = config.seed;
          return gen_synthetic(src.geometry, scene, config.K, src.model);
        } else {
          return load_channel(src.path);
        }
      },
      config.channel_source);
  if (raw.users() != config.K || raw.antennas() != config.M ||
      raw.subcarriers() != config.L) {
    throw ConfigError("channel_source",
                      "channel has K=" + std::to_string(raw.users()) +
                          " M=" + std::to_string(raw.antennas()) +
                          " L=" + std::to_string(raw.subcarriers()) +
                          ", configuration expects K=" + std::to_string(config.K) +
                          " M=" + std::to_string(config.M) + " L=" +
                          std::to_string(config.L));
  }
  return normalize(raw, config.normalization);
}

double gain_vs_random(double adaptive, double baseline) {
  if (!(baseline > 0.0)) throw DomainError("random baseline must be positive");
  return 100.0 * (adaptive - baseline) / baseline;
}

std::size_t n90(std::span<const std::size_t> ns, std::span<const double> rates,
                double full_rate) {
  if (ns.size() != rates.size() || ns.empty()) {
    throw PreconditionError("n90 needs matching, nonempty N and rate lists");
  }
  const double threshold = 0.9 * full_rate;
  std::size_t best = ns.back();
  bool found = false;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    if (rates[i] >= threshold && (!found || ns[i] < best)) {
      best = ns[i];
      found = true;
    }
  }
  return best;
}

SweepResult run_scenario(const ScenarioConfig& config, const RunOptions& options) {
  config.validate();
  return run_scenario(config, build_channel(config), options);
}

SweepResult run_scenario(const ScenarioConfig& config, const ChannelTensor& channel,
                         const RunOptions& options) {
  config.validate();
  const double rho = config.rho_linear();
  const auto sweep = config.effective_sweep();

  // Random baselines first: they are shared by every strategy's gain column.
  std::vector<RandomBaseline> baselines(sweep.size());
  std::vector<double> baseline_ms(sweep.size(), 0.0);
  parallel_for(sweep.size(), options.threads, [&](std::size_t i) {
    const auto start = std::chrono::steady_clock::now();
    baselines[i] = random_baseline(channel, sweep[i], rho, config.random_draws,
                                   derive_seed(config.seed, sweep[i]), config.dpc);
    baseline_ms[i] = elapsed_ms(start);
  });

  struct Cell {
    SweepRow row;
    TraceEntry trace;
  };
  const std::size_t cells = config.strategies.size() * sweep.size();
  std::vector<Cell> out(cells);
  parallel_for(cells, options.threads, [&](std::size_t c) {
    const Strategy strategy = config.strategies[c / sweep.size()];
    const std::size_t si = c % sweep.size();
    const std::size_t n = sweep[si];
    const auto& base = baselines[si];

    Cell& cell = out[c];
    SweepRow& row = cell.row;
    row.scenario = config.name;
    row.strategy = strategy;
    row.N = n;
    cell.trace.strategy = strategy;
    cell.trace.N = n;

    if (strategy == Strategy::Random) {
      row.dpc_mean = base.dpc_mean;
      row.zf_mean = base.zf_mean.value_or(0.0);
      row.dpc_stderr = base.dpc_stderr;
      row.zf_stderr = base.zf_stderr.value_or(0.0);
      row.log_det = base.log_det_mean;
      row.log_det_stderr = base.log_det_stderr;
      row.wall_ms = baseline_ms[si];
      cell.trace.indices = base.first_mask.indices();
    } else {
      const auto start = std::chrono::steady_clock::now();
      SelectionMask mask;
      SolverStats stats;
      if (strategy == Strategy::Convex) {
        auto sel = select_convex(channel, n, rho, config.convex);
        mask = std::move(sel.mask);
        stats = sel.stats;
      } else if (strategy == Strategy::Power) {
        mask = select_power(channel, n);
      } else {
        auto sel = select_exhaustive(channel, n, rho);
        mask = std::move(sel.mask);
        stats.iterations = sel.evaluated;
      }
      const auto report = evaluate_selection(channel, mask, rho, strategy, stats, config.dpc);
      row.dpc_mean = report.dpc.mean;
      row.zf_mean = report.zf ? report.zf->mean : 0.0;
      row.iters = stats.iterations;
      row.log_det = equal_power_log_det(channel, mask, rho).mean;
      row.wall_ms = elapsed_ms(start);
      cell.trace.indices = mask.indices();
    }
    row.dpc_gain_pct =
        strategy == Strategy::Random ? 0.0 : gain_vs_random(row.dpc_mean, base.dpc_mean);
    row.zf_gain_pct = (strategy == Strategy::Random || !base.zf_mean)
                          ? 0.0
                          : gain_vs_random(row.zf_mean, *base.zf_mean);
    if (!options.record_timing) row.wall_ms = 0.0;
  });

  SweepResult result;
  result.scenario = config.name;
  for (auto& cell : out) {
    result.rows.push_back(std::move(cell.row));
    result.traces.push_back(std::move(cell.trace));
  }
  for (std::size_t s = 0; s < config.strategies.size(); ++s) {
    std::vector<double> dpc(sweep.size()), zf(sweep.size());
    for (std::size_t i = 0; i < sweep.size(); ++i) {
      dpc[i] = result.rows[s * sweep.size() + i].dpc_mean;
      zf[i] = result.rows[s * sweep.size() + i].zf_mean;
    }
    N90Entry entry;
    entry.strategy = config.strategies[s];
    entry.dpc = n90(sweep, dpc, dpc.back());
    entry.zf = n90(sweep, zf, zf.back());
    result.n90.push_back(entry);
  }
  return result;
}

std::vector<std::string> sanity_violations(const SweepResult& result) {
  std::vector<std::string> issues;
  auto find = [&](Strategy s, std::size_t n) -> const SweepRow* {
    for (const auto& r : result.rows)
      if (r.strategy == s && r.N == n) return &r;
    return nullptr;
  };
  for (const auto& r : result.rows) {
    if (r.zf_mean > r.dpc_mean + 1e-9) {
      issues.push_back(std::string(to_string(r.strategy)) + " N=" + std::to_string(r.N) +
                       ": ZF rate exceeds DPC capacity");
    }
    if (r.strategy != Strategy::Convex) continue;
    if (const auto* ex = find(Strategy::Exhaustive, r.N);
        ex && ex->log_det < r.log_det - 1e-9) {
      issues.push_back("N=" + std::to_string(r.N) +
                       ": exhaustive objective below convex objective");
    }
    if (const auto* rnd = find(Strategy::Random, r.N);
        // The slack absorbs rounding in the draw average when every draw is
        // the same mask (N = M).
        rnd && r.log_det < rnd->log_det - 3.0 * rnd->log_det_stderr - 1e-9) {
      issues.push_back("N=" + std::to_string(r.N) +
                       ": convex objective below random mean by more than 3 sigma");
    }
  }
  return issues;
}

std::string format_sweep_csv(const SweepResult& result) {
  std::string s = kSweepCsvHeader;
  s += '\n';
  for (const auto& r : result.rows) {
    s += r.scenario;
    s += ',';
    s += to_string(r.strategy);
    s += ',' + std::to_string(r.N);
    s += ',' + format_double(r.dpc_mean);
    s += ',' + format_double(r.zf_mean);
    s += ',' + format_double(r.dpc_gain_pct);
    s += ',' + format_double(r.zf_gain_pct);
    s += ',' + std::to_string(r.iters);
    s += ',' + format_double(r.wall_ms);
    s += '\n';
  }
  return s;
}

std::string format_selection_trace(const SweepResult& result) {
  std::string s = kTraceCsvHeader;
  s += '\n';
  for (const auto& t : result.traces) {
    for (std::size_t m : t.indices) {
      s += std::string(to_string(t.strategy)) + ',' + std::to_string(t.N) + ',' +
           std::to_string(m + 1) + '\n';
    }
  }
  return s;
}

std::string format_n90_csv(const SweepResult& result) {
  std::string s = kN90CsvHeader;
  s += '\n';
  for (const auto& e : result.n90) {
    s += result.scenario + ',' + std::string(to_string(e.strategy)) + ',' +
         std::to_string(e.dpc) + ',' + std::to_string(e.zf) + '\n';
  }
  return s;
}

void emit_csv(const SweepResult& result, const std::filesystem::path& path) {
  write_text(path, format_sweep_csv(result));
}

void emit_selection_trace(const SweepResult& result, const std::filesystem::path& path) {
  write_text(path, format_selection_trace(result));
}

void emit_n90(const SweepResult& result, const std::filesystem::path& path) {
  write_text(path, format_n90_csv(result));
}

std::vector<SweepRow> parse_sweep_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kSweepCsvHeader) {
    throw DomainError("sweep CSV: missing or unexpected header");
  }
  std::vector<SweepRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string item;
    while (std::getline(ls, item, ',')) f.push_back(item);
    if (f.size() != 9) throw DomainError("sweep CSV: expected 9 fields in \"" + line + "\"");
    SweepRow r;
    r.scenario = f[0];
    const auto s = parse_strategy(f[1]);
    if (!s) throw DomainError("sweep CSV: unknown strategy " + f[1]);
    r.strategy = *s;
    r.N = std::stoul(f[2]);
    r.dpc_mean = std::stod(f[3]);
    r.zf_mean = std::stod(f[4]);
    r.dpc_gain_pct = std::stod(f[5]);
    r.zf_gain_pct = std::stod(f[6]);
    r.iters = std::stoul(f[7]);
    r.wall_ms = std::stod(f[8]);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace antsel
