#include "antsel/channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "antsel/errors.hpp"
#include "antsel/random.hpp"

namespace antsel {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Dimension: return "dimension error";
    case ErrorKind::Format: return "format error";
    case ErrorKind::DegenerateInput: return "degenerate input";
    case ErrorKind::Domain: return "domain error";
    case ErrorKind::Precondition: return "precondition error";
    case ErrorKind::Numeric: return "numeric error";
    case ErrorKind::Singularity: return "singularity error";
    case ErrorKind::Configuration: return "configuration error";
    case ErrorKind::CombinatorialGuard: return "combinatorial guard";
    case ErrorKind::Io: return "I/O error";
  }
  return "error";
}

ChannelTensor::ChannelTensor(std::size_t users, std::size_t antennas,
                             std::size_t subcarriers, std::vector<cplx> entries,
                             std::string meta)
    : users_(users),
      antennas_(antennas),
      subcarriers_(subcarriers),
      entries_(std::move(entries)),
      meta_(std::move(meta)) {
  if (users == 0 || antennas == 0 || subcarriers == 0) {
    throw DimensionError("channel dimensions must be positive, got K=" +
                         std::to_string(users) + " M=" + std::to_string(antennas) +
                         " L=" + std::to_string(subcarriers));
  }
  if (entries_.size() != users * antennas * subcarriers) {
    throw DimensionError("channel entry count " + std::to_string(entries_.size()) +
                         " does not match K*M*L = " +
                         std::to_string(users * antennas * subcarriers));
  }
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (!std::isfinite(entries_[i].real()) || !std::isfinite(entries_[i].imag())) {
      throw NumericError("non-finite channel entry at index " + std::to_string(i));
    }
  }
}

double ChannelTensor::mean_power() const {
  double sum = 0.0;
  for (const auto& h : entries_) sum += std::norm(h);
  return sum / static_cast<double>(entries_.size());
}

bool operator==(const ChannelTensor& a, const ChannelTensor& b) {
  return a.users_ == b.users_ && a.antennas_ == b.antennas_ &&
         a.subcarriers_ == b.subcarriers_ && a.entries_ == b.entries_;
}

ChannelTensor gen_iid_rayleigh(std::size_t users, std::size_t antennas,
                               std::size_t subcarriers, std::uint64_t seed) {
  if (users == 0 || antennas == 0 || subcarriers == 0) {
    throw DimensionError("gen_iid_rayleigh: all dimensions must be >= 1");
  }
  std::vector<cplx> entries(users * antennas * subcarriers);
  // One stream per (subcarrier, user) row keeps slices independent of
  // evaluation order.
  for (std::size_t l = 0; l < subcarriers; ++l) {
    for (std::size_t k = 0; k < users; ++k) {
      auto rng = make_stream(seed, l * users + k);
      std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
      cplx* row = entries.data() + (l * users + k) * antennas;
      for (std::size_t m = 0; m < antennas; ++m) {
        const double re = gauss(rng);
        const double im = gauss(rng);
        row[m] = cplx(re, im);
      }
    }
  }
  return ChannelTensor(users, antennas, subcarriers, std::move(entries),
                       "iid_rayleigh seed=" + std::to_string(seed));
}

std::vector<double> per_user_mean_power(const ChannelTensor& tensor) {
  const std::size_t K = tensor.users(), M = tensor.antennas(),
                    L = tensor.subcarriers();
  std::vector<double> power(K, 0.0);
  for (std::size_t l = 0; l < L; ++l)
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t m = 0; m < M; ++m) power[k] += std::norm(tensor(k, m, l));
  for (auto& p : power) p /= static_cast<double>(M * L);
  return power;
}

ChannelTensor normalize(const ChannelTensor& tensor, NormalizationMode mode) {
  const std::size_t K = tensor.users(), M = tensor.antennas(),
                    L = tensor.subcarriers();
  std::vector<double> scale(K);
  if (mode == NormalizationMode::Joint) {
    const double mean = tensor.mean_power();
    if (!(mean > 0.0)) {
      throw DegenerateInputError("cannot normalize an all-zero channel");
    }
    std::fill(scale.begin(), scale.end(), 1.0 / std::sqrt(mean));
  } else {
    const auto user_power = per_user_mean_power(tensor);
    for (std::size_t k = 0; k < K; ++k) {
      if (!(user_power[k] > 0.0)) {
        throw DegenerateInputError("user " + std::to_string(k) +
                                   " has an all-zero channel; per-user "
                                   "normalization is undefined");
      }
      scale[k] = 1.0 / std::sqrt(user_power[k]);
    }
  }

  std::vector<cplx> entries(tensor.entries().begin(), tensor.entries().end());
  for (std::size_t l = 0; l < L; ++l)
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t m = 0; m < M; ++m) entries[(l * K + k) * M + m] *= scale[k];

  return ChannelTensor(K, M, L, std::move(entries), tensor.meta());
}

std::vector<double> per_antenna_avg_power(const ChannelTensor& tensor) {
  const std::size_t K = tensor.users(), M = tensor.antennas(),
                    L = tensor.subcarriers();
  std::vector<double> power(M, 0.0);
  for (std::size_t l = 0; l < L; ++l)
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t m = 0; m < M; ++m) power[m] += std::norm(tensor(k, m, l));
  const double denom = static_cast<double>(K * L);
  for (auto& p : power) p /= denom;
  return power;
}

double power_spread_db(std::span<const double> powers) {
  if (powers.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(powers.begin(), powers.end());
  if (*lo <= 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(*hi / *lo);
}

}  // namespace antsel
