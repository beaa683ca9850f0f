#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "antsel/channel.hpp"
#include "antsel/rate.hpp"

namespace antsel {

enum class Strategy { Convex, Power, Random, Exhaustive };

std::string_view to_string(Strategy s);
std::optional<Strategy> parse_strategy(std::string_view name);

struct SolverStats {
  std::size_t iterations = 0;
  double gradient_norm = 0.0;
  double wall_ms = 0.0;
  bool converged = true;
};

/// Projected gradient ascent settings for the relaxed selection problem.
struct ConvexSolverParams {
  std::size_t max_iters = 2000;
  double gradient_tol = 1e-6;    // on the projected-gradient norm
  double initial_step = 1.0;
  double step_shrink = 0.5;
  double armijo = 1e-4;
  double projection_tol = 1e-10;  // on the sum constraint
};

/// Fractional selection weights in [0,1] summing to target_n.
struct RelaxedDelta {
  std::vector<double> values;
  std::size_t target_n = 0;
  double objective = 0.0;  // mean relaxed log-det, bps/Hz
};

struct ConvexSelection {
  SelectionMask mask;
  RelaxedDelta relaxed;
  SolverStats stats;
  /// Relaxed objective after every accepted iterate, starting with the
  /// initial point.
  std::vector<double> trace;
};

struct ObjectiveAndGradient {
  double value = 0.0;
  std::vector<double> gradient;
};

/// Mean equal-power log-det and its gradient with respect to the selection
/// weights: d/d delta_i = rho/(L ln 2) sum_l h_{l,i}^H (I + rho H_l Delta H_l^H)^-1 h_{l,i}.
ObjectiveAndGradient relaxed_objective_and_gradient(const ChannelTensor& tensor,
                                                    std::span<const double> delta,
                                                    double rho);

/// Euclidean projection onto {0 <= x_i <= 1, sum x_i = target} by bisection on
/// the shift.
std::vector<double> project_capped_simplex(std::span<const double> v, double target,
                                           double tol = 1e-10);

/// Rounds relaxed weights to the `n` largest, breaking ties by higher
/// per-antenna power and then lower index.
SelectionMask round_relaxed(std::span<const double> values, std::size_t n,
                            std::span<const double> antenna_power);

ConvexSelection select_convex(const ChannelTensor& tensor, std::size_t n, double rho,
                              const ConvexSolverParams& params = {});

/// Top-n antennas by average received power over users and subcarriers.
SelectionMask select_power(const ChannelTensor& tensor, std::size_t n);
SelectionMask select_power(std::span<const double> antenna_power, std::size_t n);

/// Uniformly random n-subset of m antennas.
SelectionMask select_random(std::size_t m, std::size_t n, std::uint64_t seed);

struct RandomBaseline {
  double dpc_mean = 0.0;
  double dpc_stderr = 0.0;
  std::optional<double> zf_mean;
  std::optional<double> zf_stderr;
  /// Step-1 (equal power) objective over the same draws.
  double log_det_mean = 0.0;
  double log_det_stderr = 0.0;
  std::size_t draws = 0;
  SelectionMask first_mask;
};

/// Average DPC and ZF rates over `draws` random masks; ZF is skipped when n < K.
RandomBaseline random_baseline(const ChannelTensor& tensor, std::size_t n, double rho,
                               std::size_t draws, std::uint64_t seed,
                               const DpcOptions& dpc = {});

inline constexpr double kExhaustiveLimit = 1e6;

double binomial(std::size_t n, std::size_t k);

struct ExhaustiveSelection {
  SelectionMask mask;
  double objective = 0.0;
  std::size_t evaluated = 0;
};

/// Best n-subset by the equal-power log-det; ties go to the lexicographically
/// smallest index set. Refuses more than 10^6 subsets.
ExhaustiveSelection select_exhaustive(const ChannelTensor& tensor, std::size_t n,
                                      double rho);

struct SelectionReport {
  SelectionMask mask;
  Strategy strategy = Strategy::Convex;
  RateResult dpc;
  std::optional<RateResult> zf;
  SolverStats solver_stats;
};

SelectionReport evaluate_selection(const ChannelTensor& tensor, const SelectionMask& mask,
                                   double rho, Strategy strategy,
                                   const SolverStats& stats = {},
                                   const DpcOptions& dpc = {});

}  // namespace antsel
