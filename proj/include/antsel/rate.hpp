#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "antsel/channel.hpp"

namespace antsel {

/// Which antennas (and RF chains) are switched on.
class SelectionMask {
 public:
  SelectionMask() = default;
  explicit SelectionMask(std::vector<bool> active);

  static SelectionMask all(std::size_t antennas);
  /// Mask of `antennas` elements with the given 0-based indices active.
  static SelectionMask from_indices(std::size_t antennas,
                                    std::span<const std::size_t> indices);

  std::size_t size() const noexcept { return active_.size(); }
  std::size_t count() const noexcept { return count_; }
  bool operator[](std::size_t m) const { return active_[m]; }

  /// Sorted 0-based indices of the active antennas.
  std::vector<std::size_t> indices() const;
  /// 0/1 weights, the diagonal of the selection matrix.
  std::vector<double> weights() const;

  friend bool operator==(const SelectionMask&, const SelectionMask&) = default;

 private:
  std::vector<bool> active_;
  std::size_t count_ = 0;
};

enum class AllocationKind { DpcPower, ZfSnr };
enum class Scheme { DPC, ZF };

/// Per-subcarrier per-user allocation, stored subcarrier-major (L x K).
struct PowerAllocation {
  AllocationKind kind = AllocationKind::DpcPower;
  std::size_t users = 0;
  double rho = 0.0;
  std::vector<double> values;

  double at(std::size_t l, std::size_t i) const { return values[l * users + i]; }
};

struct RateResult {
  Scheme scheme = Scheme::DPC;
  std::vector<double> per_subcarrier;  // bps/Hz
  double mean = 0.0;                   // bps/Hz
  PowerAllocation allocation;
  /// False when some subcarrier hit the iteration cap before the capacity
  /// increment dropped below tolerance; the best iterate is returned.
  bool converged = true;
  std::size_t iterations = 0;  // summed over subcarriers
};

struct WaterfillResult {
  std::vector<double> powers;
  double water_level = 0.0;
};

/// Maximizes sum_i log2(1 + g_i p_i) subject to sum_i p_i = budget, p >= 0.
/// Exact active-set solution over the sorted inverse gains.
WaterfillResult waterfill(std::span<const double> gains, double budget);

struct DpcOptions {
  std::size_t max_iters = 500;
  double tol = 1e-8;  // bps/Hz
};

/// Downlink sum capacity per subcarrier, max over diagonal P with trace 1 of
/// log2 det(I + rho K P H Delta H^H), by sum-power iterative waterfilling on
/// the dual uplink.
RateResult dpc_sum_capacity(const ChannelTensor& tensor, const SelectionMask& mask,
                            double rho, const DpcOptions& options = {});

/// DPC capacity of a single K x K Gram matrix H Delta H^H.
struct GramCapacity {
  double capacity = 0.0;
  std::vector<double> powers;
  bool converged = true;
  std::size_t iterations = 0;
};
GramCapacity dpc_capacity_from_gram(const Eigen::MatrixXcd& gram, double rho,
                                    const DpcOptions& options = {});

/// Zero-forcing sum rate with optimal per-user SNR allocation.
RateResult zf_sum_rate(const ChannelTensor& tensor, const SelectionMask& mask,
                       double rho);

struct LogDetValue {
  std::vector<double> per_subcarrier;
  double mean = 0.0;
};

/// (1/L) sum_l log2 det(I + rho H_l Delta H_l^H) for a binary or relaxed
/// (fractional, in [0,1]) selection.
LogDetValue equal_power_log_det(const ChannelTensor& tensor,
                                std::span<const double> delta, double rho);
LogDetValue equal_power_log_det(const ChannelTensor& tensor,
                                const SelectionMask& mask, double rho);

enum class SnrScheme { ZF, SingleUser };

/// Received SNR per (subcarrier, user), L x K. ZF assigns every user
/// rho K / Tr{(H Delta H^H)^-1}; SingleUser gives rho ||h_k||^2 over the
/// active antennas.
Eigen::MatrixXd per_user_received_snr(const ChannelTensor& tensor,
                                      const SelectionMask& mask, double rho,
                                      SnrScheme scheme);

/// H_l diag(delta) H_l^H (K x K).
Eigen::MatrixXcd weighted_gram(const ConstSubcarrierView& h,
                               std::span<const double> delta);

/// Gram conditioning above this is treated as singular by the ZF routines.
inline constexpr double kMaxGramCondition = 1e12;

}  // namespace antsel
