#include "antsel/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "antsel/errors.hpp"
#include "antsel/random.hpp"

namespace antsel {
namespace {

void check_count(std::size_t n, std::size_t m, const char* who) {
  if (n < 1 || n > m) {
    throw PreconditionError(std::string(who) + " needs 1 <= N <= M (N=" +
                            std::to_string(n) + ", M=" + std::to_string(m) + ")");
  }
}

struct MeanAccumulator {
  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t count = 0;

  void add(double v) {
    sum += v;
    sum_sq += v * v;
    ++count;
  }
  double mean() const { return sum / static_cast<double>(count); }
  double stderr_of_mean() const {
    if (count < 2) return 0.0;
    const double m = mean();
    const double var =
        std::max(0.0, (sum_sq - static_cast<double>(count) * m * m) /
                          static_cast<double>(count - 1));
    return std::sqrt(var / static_cast<double>(count));
  }
};

}  // namespace

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::Convex: return "convex";
    case Strategy::Power: return "power";
    case Strategy::Random: return "random";
    case Strategy::Exhaustive: return "exhaustive";
  }
  return "unknown";
}

std::optional<Strategy> parse_strategy(std::string_view name) {
  for (auto s : {Strategy::Convex, Strategy::Power, Strategy::Random, Strategy::Exhaustive})
    if (to_string(s) == name) return s;
  return std::nullopt;
}

SelectionMask select_power(std::span<const double> antenna_power, std::size_t n) {
  const std::size_t M = antenna_power.size();
  check_count(n, M, "select_power");
  std::vector<std::size_t> order(M);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return antenna_power[a] > antenna_power[b];
  });
  order.resize(n);
  return SelectionMask::from_indices(M, order);
}

SelectionMask select_power(const ChannelTensor& tensor, std::size_t n) {
  return select_power(per_antenna_avg_power(tensor), n);
}

SelectionMask select_random(std::size_t m, std::size_t n, std::uint64_t seed) {
  check_count(n, m, "select_random");
  std::vector<std::size_t> pool(m);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  auto rng = make_stream(seed, 0);
  // Partial Fisher-Yates: the first n slots form a uniform n-subset.
  for (std::size_t i = 0; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, m - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(n);
  return SelectionMask::from_indices(m, pool);
}

RandomBaseline random_baseline(const ChannelTensor& tensor, std::size_t n, double rho,
                               std::size_t draws, std::uint64_t seed,
                               const DpcOptions& dpc) {
  check_count(n, tensor.antennas(), "random_baseline");
  if (draws < 1) throw PreconditionError("random_baseline needs draws >= 1");
  const bool with_zf = n >= tensor.users();
  MeanAccumulator dpc_acc, zf_acc, logdet_acc;
  RandomBaseline out;
  out.draws = draws;
  for (std::size_t d = 0; d < draws; ++d) {
    const auto mask = select_random(tensor.antennas(), n, derive_seed(seed, d));
    if (d == 0) out.first_mask = mask;
    dpc_acc.add(dpc_sum_capacity(tensor, mask, rho, dpc).mean);
    logdet_acc.add(equal_power_log_det(tensor, mask, rho).mean);
    if (with_zf) zf_acc.add(zf_sum_rate(tensor, mask, rho).mean);
  }
  out.dpc_mean = dpc_acc.mean();
  out.dpc_stderr = dpc_acc.stderr_of_mean();
  out.log_det_mean = logdet_acc.mean();
  out.log_det_stderr = logdet_acc.stderr_of_mean();
  if (with_zf) {
    out.zf_mean = zf_acc.mean();
    out.zf_stderr = zf_acc.stderr_of_mean();
  }
  return out;
}

double binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  k = std::min(k, n - k);
  double c = 1.0;
  for (std::size_t i = 1; i <= k; ++i) {
    c = c * static_cast<double>(n - k + i) / static_cast<double>(i);
  }
  return std::round(c);
}

ExhaustiveSelection select_exhaustive(const ChannelTensor& tensor, std::size_t n,
                                      double rho) {
  const std::size_t M = tensor.antennas();
  check_count(n, M, "select_exhaustive");
  const double subsets = binomial(M, n);
  if (subsets > kExhaustiveLimit) throw CombinatorialGuardError(subsets);

  std::vector<std::size_t> combo(n);
  std::iota(combo.begin(), combo.end(), std::size_t{0});
  std::vector<double> weights(M, 0.0);

  ExhaustiveSelection best;
  best.objective = -std::numeric_limits<double>::infinity();
  while (true) {
    std::fill(weights.begin(), weights.end(), 0.0);
    for (std::size_t m : combo) weights[m] = 1.0;
    const double value = equal_power_log_det(tensor, weights, rho).mean;
    ++best.evaluated;
    // Strict comparison keeps the lexicographically first maximizer.
    if (value > best.objective) {
      best.objective = value;
      best.mask = SelectionMask::from_indices(M, combo);
    }

    // Next combination in lexicographic order.
    std::size_t i = n;
    while (i > 0 && combo[i - 1] == M - n + (i - 1)) --i;
    if (i == 0) break;
    ++combo[i - 1];
    for (std::size_t j = i; j < n; ++j) combo[j] = combo[j - 1] + 1;
  }
  return best;
}

SelectionReport evaluate_selection(const ChannelTensor& tensor, const SelectionMask& mask,
                                   double rho, Strategy strategy, const SolverStats& stats,
                                   const DpcOptions& dpc) {
  SelectionReport report;
  report.mask = mask;
  report.strategy = strategy;
  report.solver_stats = stats;
  report.dpc = dpc_sum_capacity(tensor, mask, rho, dpc);
  if (mask.count() >= tensor.users()) report.zf = zf_sum_rate(tensor, mask, rho);
  return report;
}

}  // namespace antsel
