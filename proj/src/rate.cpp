#include "antsel/rate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "antsel/errors.hpp"

namespace antsel {
namespace {

double log2_det_hpd(const Eigen::MatrixXcd& a) {
  Eigen::LLT<Eigen::MatrixXcd> llt(a);
  if (llt.info() != Eigen::Success) {
    throw NumericError("log-det argument is not positive definite");
  }
  double sum = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) sum += std::log(llt.matrixLLT()(i, i).real());
  return 2.0 * sum / std::log(2.0);
}

void check_mask(const ChannelTensor& tensor, const SelectionMask& mask) {
  if (mask.size() != tensor.antennas()) {
    throw PreconditionError("mask length " + std::to_string(mask.size()) +
                            " does not match M=" + std::to_string(tensor.antennas()));
  }
  if (mask.count() == 0) throw PreconditionError("selection mask has no active antenna");
}

void check_rho(double rho) {
  if (!(rho > 0.0) || !std::isfinite(rho)) {
    throw DomainError("rho must be finite and positive");
  }
}

double finite_or_throw(double v, const char* what) {
  if (!std::isfinite(v)) throw NumericError(std::string(what) + " is not finite");
  return v;
}

/// Inverse of a Hermitian positive-definite Gram matrix, refusing
/// ill-conditioned ones.
Eigen::MatrixXcd checked_gram_inverse(const Eigen::MatrixXcd& gram, std::size_t l) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(gram, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  const double cond = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  if (!(cond <= kMaxGramCondition)) throw SingularityError(l, cond);
  const auto n = gram.rows();
  return gram.llt().solve(Eigen::MatrixXcd::Identity(n, n));
}

}  // namespace

// ---------------------------------------------------------------------------

SelectionMask::SelectionMask(std::vector<bool> active) : active_(std::move(active)) {
  count_ = static_cast<std::size_t>(std::count(active_.begin(), active_.end(), true));
}

SelectionMask SelectionMask::all(std::size_t antennas) {
  return SelectionMask(std::vector<bool>(antennas, true));
}

SelectionMask SelectionMask::from_indices(std::size_t antennas,
                                          std::span<const std::size_t> indices) {
  std::vector<bool> active(antennas, false);
  for (std::size_t m : indices) {
    if (m >= antennas) {
      throw PreconditionError("antenna index " + std::to_string(m) + " out of range");
    }
    active[m] = true;
  }
  return SelectionMask(std::move(active));
}

std::vector<std::size_t> SelectionMask::indices() const {
  std::vector<std::size_t> out;
  out.reserve(count_);
  for (std::size_t m = 0; m < active_.size(); ++m)
    if (active_[m]) out.push_back(m);
  return out;
}

std::vector<double> SelectionMask::weights() const {
  std::vector<double> w(active_.size());
  for (std::size_t m = 0; m < active_.size(); ++m) w[m] = active_[m] ? 1.0 : 0.0;
  return w;
}

// ---------------------------------------------------------------------------

WaterfillResult waterfill(std::span<const double> gains, double budget) {
  if (gains.empty()) throw DomainError("waterfill needs at least one channel");
  if (!(budget > 0.0) || !std::isfinite(budget)) {
    throw DomainError("waterfill budget must be finite and positive");
  }
  const std::size_t n = gains.size();
  std::vector<double> inverse(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(gains[i] > 0.0) || !std::isfinite(gains[i])) {
      throw DomainError("waterfill gain " + std::to_string(i) +
                        " must be finite and positive");
    }
    inverse[i] = 1.0 / gains[i];
  }
  std::vector<double> sorted = inverse;
  std::sort(sorted.begin(), sorted.end());

  // The active set is a prefix of the sorted inverse gains; the largest
  // prefix whose water level clears its last floor is optimal.
  // Forward partial sums, so a tiny floor is not lost next to a huge one.
  std::vector<double> prefix(n + 1, 0.0);
  std::partial_sum(sorted.begin(), sorted.end(), prefix.begin() + 1);
  double level = 0.0;
  for (std::size_t k = n; k >= 1; --k) {
    level = (budget + prefix[k]) / static_cast<double>(k);
    if (level > sorted[k - 1]) break;
  }

  WaterfillResult result;
  result.water_level = level;
  result.powers.resize(n);
  for (std::size_t i = 0; i < n; ++i) result.powers[i] = std::max(0.0, level - inverse[i]);
  return result;
}

// ---------------------------------------------------------------------------

Eigen::MatrixXcd weighted_gram(const ConstSubcarrierView& h,
                               std::span<const double> delta) {
  const Eigen::Map<const Eigen::VectorXd> w(delta.data(),
                                            static_cast<Eigen::Index>(delta.size()));
  Eigen::MatrixXcd g = h * w.cast<cplx>().asDiagonal() * h.adjoint();
  // Enforce exact Hermitian symmetry.
  return 0.5 * (g + g.adjoint());
}

GramCapacity dpc_capacity_from_gram(const Eigen::MatrixXcd& gram, double rho,
                                    const DpcOptions& options) {
  const auto K = gram.rows();
  const double snr = rho * static_cast<double>(K);
  const Eigen::MatrixXcd identity = Eigen::MatrixXcd::Identity(K, K);

  // log2 det(I + snr D^1/2 G D^1/2), equal to log2 det(I + snr D G).
  auto capacity = [&](const Eigen::VectorXd& p) {
    const Eigen::VectorXcd s = (snr * p).cwiseSqrt().cast<cplx>();
    Eigen::MatrixXcd a = s.asDiagonal() * gram * s.asDiagonal();
    a += identity;
    return log2_det_hpd(0.5 * (a + a.adjoint()));
  };

  Eigen::VectorXd p = Eigen::VectorXd::Constant(K, 1.0 / static_cast<double>(K));
  double current = finite_or_throw(capacity(p), "DPC capacity");

  GramCapacity out;
  out.converged = false;
  std::size_t iter = 0;
  std::vector<double> gains;
  std::vector<Eigen::Index> users;
  while (iter < options.max_iters) {
    ++iter;
    // Effective single-user gains with the other users' covariance fixed:
    // h_j (I + sum_{i != j} snr p_i h_i^H h_i)^-1 h_j^H via Sherman-Morrison
    // on the K x K push-through form (I + G D)^-1 G.
    const Eigen::MatrixXcd lhs =
        identity + gram * (snr * p).cast<cplx>().asDiagonal();
    const Eigen::MatrixXcd solved = lhs.partialPivLu().solve(gram);
    gains.clear();
    users.clear();
    for (Eigen::Index j = 0; j < K; ++j) {
      const double a = solved(j, j).real();
      const double denom = 1.0 - snr * p(j) * a;
      const double g = snr * a / denom;
      if (g > 0.0 && std::isfinite(g)) {
        gains.push_back(g);
        users.push_back(j);
      }
    }
    if (gains.empty()) throw NumericError("DPC iteration produced no usable gain");
    const auto wf = waterfill(gains, 1.0);
    Eigen::VectorXd update = Eigen::VectorXd::Zero(K);
    for (std::size_t i = 0; i < users.size(); ++i) update(users[i]) = wf.powers[i];

    // Averaging with the previous iterate guarantees convergence.
    const double w = 1.0 / static_cast<double>(K);
    const Eigen::VectorXd next = w * update + (1.0 - w) * p;
    const double value = finite_or_throw(capacity(next), "DPC capacity");
    const double increment = value - current;
    if (value >= current) {
      p = next;
      current = value;
    }
    if (std::abs(increment) < options.tol) {
      out.converged = true;
      break;
    }
  }
  out.capacity = current;
  out.powers.assign(p.data(), p.data() + K);
  out.iterations = iter;
  if (options.max_iters == 0) out.converged = false;
  return out;
}

RateResult dpc_sum_capacity(const ChannelTensor& tensor, const SelectionMask& mask,
                            double rho, const DpcOptions& options) {
  check_mask(tensor, mask);
  check_rho(rho);
  const std::size_t K = tensor.users(), L = tensor.subcarriers();
  const auto delta = mask.weights();

  RateResult r;
  r.scheme = Scheme::DPC;
  r.allocation.kind = AllocationKind::DpcPower;
  r.allocation.users = K;
  r.allocation.rho = rho;
  r.allocation.values.resize(L * K);
  r.per_subcarrier.resize(L);
  for (std::size_t l = 0; l < L; ++l) {
    const auto cap = dpc_capacity_from_gram(weighted_gram(tensor.subcarrier(l), delta),
                                            rho, options);
    r.per_subcarrier[l] = cap.capacity;
    std::copy(cap.powers.begin(), cap.powers.end(), r.allocation.values.begin() + l * K);
    r.converged = r.converged && cap.converged;
    r.iterations += cap.iterations;
  }
  r.mean = std::accumulate(r.per_subcarrier.begin(), r.per_subcarrier.end(), 0.0) /
           static_cast<double>(L);
  return r;
}

RateResult zf_sum_rate(const ChannelTensor& tensor, const SelectionMask& mask,
                       double rho) {
  check_mask(tensor, mask);
  check_rho(rho);
  const std::size_t K = tensor.users(), L = tensor.subcarriers();
  if (mask.count() < K) {
    throw PreconditionError("zero-forcing needs N >= K active antennas (N=" +
                            std::to_string(mask.count()) + ", K=" + std::to_string(K) +
                            ")");
  }
  const auto delta = mask.weights();
  const double snr = rho * static_cast<double>(K);

  RateResult r;
  r.scheme = Scheme::ZF;
  r.allocation.kind = AllocationKind::ZfSnr;
  r.allocation.users = K;
  r.allocation.rho = rho;
  r.allocation.values.resize(L * K);
  r.per_subcarrier.resize(L);
  std::vector<double> penalty(K), gains(K);
  for (std::size_t l = 0; l < L; ++l) {
    const auto inv = checked_gram_inverse(weighted_gram(tensor.subcarrier(l), delta), l);
    for (std::size_t i = 0; i < K; ++i) {
      penalty[i] = inv(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)).real();
      gains[i] = snr / penalty[i];
    }
    // With q_i = Q_i c_i the constraint becomes sum q_i = 1.
    const auto wf = waterfill(gains, 1.0);
    double rate = 0.0;
    for (std::size_t i = 0; i < K; ++i) {
      const double q = wf.powers[i] / penalty[i];
      r.allocation.values[l * K + i] = q;
      rate += std::log2(1.0 + snr * q);
    }
    r.per_subcarrier[l] = finite_or_throw(rate, "ZF rate");
  }
  r.mean = std::accumulate(r.per_subcarrier.begin(), r.per_subcarrier.end(), 0.0) /
           static_cast<double>(L);
  return r;
}

LogDetValue equal_power_log_det(const ChannelTensor& tensor,
                                std::span<const double> delta, double rho) {
  check_rho(rho);
  if (delta.size() != tensor.antennas()) {
    throw DomainError("selection weights have length " + std::to_string(delta.size()) +
                      ", expected M=" + std::to_string(tensor.antennas()));
  }
  for (std::size_t m = 0; m < delta.size(); ++m) {
    if (!(delta[m] >= 0.0 && delta[m] <= 1.0)) {
      throw DomainError("selection weight " + std::to_string(m) + " outside [0, 1]");
    }
  }
  const std::size_t K = tensor.users(), L = tensor.subcarriers();
  const auto n = static_cast<Eigen::Index>(K);
  LogDetValue out;
  out.per_subcarrier.resize(L);
  for (std::size_t l = 0; l < L; ++l) {
    Eigen::MatrixXcd a = rho * weighted_gram(tensor.subcarrier(l), delta);
    a += Eigen::MatrixXcd::Identity(n, n);
    out.per_subcarrier[l] = log2_det_hpd(a);
  }
  out.mean = std::accumulate(out.per_subcarrier.begin(), out.per_subcarrier.end(), 0.0) /
             static_cast<double>(L);
  return out;
}

LogDetValue equal_power_log_det(const ChannelTensor& tensor, const SelectionMask& mask,
                                double rho) {
  if (mask.size() != tensor.antennas()) {
    throw PreconditionError("mask length does not match M");
  }
  const auto w = mask.weights();
  return equal_power_log_det(tensor, std::span<const double>(w), rho);
}

Eigen::MatrixXd per_user_received_snr(const ChannelTensor& tensor,
                                      const SelectionMask& mask, double rho,
                                      SnrScheme scheme) {
  check_mask(tensor, mask);
  check_rho(rho);
  const std::size_t K = tensor.users(), L = tensor.subcarriers();
  const auto delta = mask.weights();
  Eigen::MatrixXd snr(static_cast<Eigen::Index>(L), static_cast<Eigen::Index>(K));
  if (scheme == SnrScheme::ZF) {
    if (mask.count() < K) {
      throw PreconditionError("zero-forcing needs N >= K active antennas");
    }
    for (std::size_t l = 0; l < L; ++l) {
      const auto inv = checked_gram_inverse(weighted_gram(tensor.subcarrier(l), delta), l);
      const double value = rho * static_cast<double>(K) / inv.trace().real();
      snr.row(static_cast<Eigen::Index>(l)).setConstant(value);
    }
  } else {
    for (std::size_t l = 0; l < L; ++l) {
      for (std::size_t k = 0; k < K; ++k) {
        double energy = 0.0;
        for (std::size_t m = 0; m < tensor.antennas(); ++m)
          if (mask[m]) energy += std::norm(tensor(k, m, l));
        snr(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(k)) = rho * energy;
      }
    }
  }
  return snr;
}

}  // namespace antsel
