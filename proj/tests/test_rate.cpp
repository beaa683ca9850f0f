#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "antsel/errors.hpp"
#include "antsel/rate.hpp"
#include "oracles.hpp"

using namespace antsel;

namespace {

ChannelTensor identity_channel(std::size_t K) {
  std::vector<cplx> e(K * K, 0.0);
  for (std::size_t k = 0; k < K; ++k) e[k * K + k] = 1.0;
  return ChannelTensor(K, K, 1, e);
}

/// Permutes users and antennas of a tensor.
ChannelTensor permuted(const ChannelTensor& t, const std::vector<std::size_t>& users,
                       const std::vector<std::size_t>& antennas) {
  std::vector<cplx> e;
  for (std::size_t l = 0; l < t.subcarriers(); ++l)
    for (std::size_t k = 0; k < t.users(); ++k)
      for (std::size_t m = 0; m < t.antennas(); ++m) e.push_back(t(users[k], antennas[m], l));
  return ChannelTensor(t.users(), t.antennas(), t.subcarriers(), e);
}

}  // namespace

// ---------------------------------------------------------------------------
// waterfill

TEST(Waterfill, ClosedFormTwoChannels) {
  const std::vector<double> g{4.0, 1.0};
  const auto wf = waterfill(g, 1.0);
  EXPECT_NEAR(wf.powers[0], 0.875, 1e-15);
  EXPECT_NEAR(wf.powers[1], 0.125, 1e-15);
  EXPECT_NEAR(wf.water_level, 1.125, 1e-15);
  EXPECT_NEAR(oracle::waterfill_objective(g, wf.powers), std::log2(4.5) + std::log2(1.125),
              1e-14);
  EXPECT_NEAR(oracle::waterfill_objective(g, wf.powers), 2.3399, 1e-4);
}

TEST(Waterfill, SingleChannelTakesBudget) {
  const std::vector<double> g{3.7};
  EXPECT_DOUBLE_EQ(waterfill(g, 2.5).powers[0], 2.5);
}

TEST(Waterfill, WeakChannelShutOff) {
  const std::vector<double> g{10.0, 0.01};
  const auto wf = waterfill(g, 0.5);
  EXPECT_DOUBLE_EQ(wf.powers[0], 0.5);
  EXPECT_DOUBLE_EQ(wf.powers[1], 0.0);
  EXPECT_NEAR(wf.water_level, 0.6, 1e-15);
}

TEST(Waterfill, DomainErrors) {
  EXPECT_THROW(waterfill(std::vector<double>{1.0, 0.0}, 1.0), DomainError);
  EXPECT_THROW(waterfill(std::vector<double>{1.0, -2.0}, 1.0), DomainError);
  EXPECT_THROW(waterfill(std::vector<double>{1.0}, 0.0), DomainError);
  EXPECT_THROW(waterfill(std::vector<double>{}, 1.0), DomainError);
}

TEST(Waterfill, KktAndGridOracleOnRandomGains) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> size(1, 6);
  std::uniform_real_distribution<double> log_gain(-2.0, 2.0);
  std::uniform_real_distribution<double> log_budget(-1.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> g(static_cast<std::size_t>(size(rng)));
    for (auto& v : g) v = std::pow(10.0, log_gain(rng));
    const double budget = std::pow(10.0, log_budget(rng));
    const auto wf = waterfill(g, budget);
    const double sum = std::accumulate(wf.powers.begin(), wf.powers.end(), 0.0);
    EXPECT_NEAR(sum, budget, 1e-12 * budget);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double p = wf.powers[i];
      EXPECT_GE(p, 0.0);
      EXPECT_LT(std::abs(p * (1.0 / g[i] + p - wf.water_level)), 1e-9 * budget);
      // Inactive channels have floors above the water level.
      if (p == 0.0) EXPECT_GE(1.0 / g[i], wf.water_level - 1e-12);
    }
    const auto grid = oracle::waterfill_grid(g, budget, 1e-4);
    EXPECT_GE(oracle::waterfill_objective(g, wf.powers),
              oracle::waterfill_objective(g, grid) - 1e-9);
    EXPECT_NEAR(oracle::waterfill_objective(g, wf.powers),
                oracle::waterfill_objective(g, grid), 1e-3);
  }
}

// ---------------------------------------------------------------------------
// DPC

TEST(Dpc, SingleUserClosedForm) {
  const auto t = gen_iid_rayleigh(1, 6, 3, 5);
  const double rho = 0.7;
  const auto r = dpc_sum_capacity(t, SelectionMask::all(6), rho);
  for (std::size_t l = 0; l < 3; ++l) {
    double energy = 0.0;
    for (std::size_t m = 0; m < 6; ++m) energy += std::norm(t(0, m, l));
    EXPECT_NEAR(r.per_subcarrier[l], std::log2(1.0 + rho * energy), 1e-12);
    EXPECT_NEAR(r.allocation.at(l, 0), 1.0, 1e-15);
  }
  EXPECT_TRUE(r.converged);
}

TEST(Dpc, IdentityChannelEqualSplit) {
  for (std::size_t K : {2u, 3u, 5u}) {
    const double rho = 1.3;
    const auto r = dpc_sum_capacity(identity_channel(K), SelectionMask::all(K), rho);
    EXPECT_NEAR(r.mean, static_cast<double>(K) * std::log2(1.0 + rho), 1e-12);
    for (std::size_t i = 0; i < K; ++i)
      EXPECT_NEAR(r.allocation.at(0, i), 1.0 / static_cast<double>(K), 1e-12);
  }
}

TEST(Dpc, TwoUserMatchesGridOracle) {
  const auto t = gen_iid_rayleigh(2, 3, 1, 42);
  const double rho = std::pow(10.0, -0.5);
  const auto mask = SelectionMask::all(3);
  const auto gram = weighted_gram(t.subcarrier(0), mask.weights());
  const auto grid = oracle::dpc_two_user_grid(gram(0, 0).real(), gram(1, 1).real(),
                                              gram(0, 1), rho, 1e-4);
  const auto r = dpc_sum_capacity(t, mask, rho);
  EXPECT_NEAR(r.mean, grid.capacity, 1e-3);
  EXPECT_GE(r.mean, grid.capacity - 1e-6) << r.mean - grid.capacity;
  EXPECT_NEAR(r.allocation.at(0, 0) + r.allocation.at(0, 1), 1.0, 1e-9);
}

TEST(Dpc, AllocationSumsToOneAndBeatsEqualPower) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto t = gen_iid_rayleigh(4, 12, 3, seed);
    const auto mask = SelectionMask::from_indices(12, std::vector<std::size_t>{0, 2, 3, 5, 7, 11});
    const double rho = 0.3 + 0.2 * static_cast<double>(seed);
    const auto r = dpc_sum_capacity(t, mask, rho);
    const auto equal = equal_power_log_det(t, mask, rho);
    for (std::size_t l = 0; l < 3; ++l) {
      double sum = 0.0;
      for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_GE(r.allocation.at(l, i), 0.0);
        sum += r.allocation.at(l, i);
      }
      EXPECT_NEAR(sum, 1.0, 1e-9);
      EXPECT_GE(r.per_subcarrier[l], equal.per_subcarrier[l] - 1e-12);
    }
  }
}

TEST(Dpc, InvariantUnderUserAndAntennaPermutation) {
  const auto t = gen_iid_rayleigh(3, 8, 2, 77);
  const std::vector<std::size_t> users{2, 0, 1};
  const std::vector<std::size_t> antennas{7, 3, 1, 0, 6, 2, 5, 4};
  const auto p = permuted(t, users, antennas);
  const auto a = dpc_sum_capacity(t, SelectionMask::all(8), 0.5);
  const auto b = dpc_sum_capacity(p, SelectionMask::all(8), 0.5);
  EXPECT_NEAR(a.mean, b.mean, 1e-7);
}

TEST(Dpc, Preconditions) {
  const auto t = gen_iid_rayleigh(2, 4, 1, 1);
  EXPECT_THROW(dpc_sum_capacity(t, SelectionMask(std::vector<bool>(4, false)), 1.0),
               PreconditionError);
  EXPECT_THROW(dpc_sum_capacity(t, SelectionMask::all(3), 1.0), PreconditionError);
  EXPECT_THROW(dpc_sum_capacity(t, SelectionMask::all(4), 0.0), DomainError);
}

TEST(Dpc, IterationCapFlagsNonConvergence) {
  const auto t = gen_iid_rayleigh(4, 6, 1, 3);
  DpcOptions opts;
  opts.max_iters = 1;
  opts.tol = 1e-15;
  const auto r = dpc_sum_capacity(t, SelectionMask::all(6), 2.0, opts);
  EXPECT_FALSE(r.converged);
  EXPECT_GE(r.mean, equal_power_log_det(t, SelectionMask::all(6), 2.0).mean - 1e-12);
}

// ---------------------------------------------------------------------------
// ZF

TEST(Zf, OrthonormalRows) {
  // rho K = 1 with K = 2.
  const auto r = zf_sum_rate(identity_channel(2), SelectionMask::all(2), 0.5);
  EXPECT_NEAR(r.mean, 2.0 * std::log2(1.5), 1e-12);
  EXPECT_NEAR(r.mean, 1.1699, 1e-4);
  EXPECT_NEAR(r.allocation.at(0, 0), 0.5, 1e-15);
}

TEST(Zf, SingleUserEqualsDpc) {
  const auto t = gen_iid_rayleigh(1, 5, 4, 9);
  const auto zf = zf_sum_rate(t, SelectionMask::all(5), 0.4);
  const auto dpc = dpc_sum_capacity(t, SelectionMask::all(5), 0.4);
  for (std::size_t l = 0; l < 4; ++l) {
    double energy = 0.0;
    for (std::size_t m = 0; m < 5; ++m) energy += std::norm(t(0, m, l));
    EXPECT_NEAR(zf.allocation.at(l, 0), energy, 1e-10);
    EXPECT_NEAR(zf.per_subcarrier[l], dpc.per_subcarrier[l], 1e-12);
  }
}

TEST(Zf, NeverExceedsDpc) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto t = gen_iid_rayleigh(2, 4, 1, seed == 0 ? 7 : seed);
    const double rho = 0.1 * static_cast<double>(seed + 1);
    const auto mask = SelectionMask::all(4);
    EXPECT_LE(zf_sum_rate(t, mask, rho).mean, dpc_sum_capacity(t, mask, rho).mean + 1e-9);
  }
}

TEST(Zf, ConstraintHolds) {
  const auto t = gen_iid_rayleigh(3, 9, 2, 31);
  const auto mask = SelectionMask::all(9);
  const auto r = zf_sum_rate(t, mask, 0.8);
  for (std::size_t l = 0; l < 2; ++l) {
    const Eigen::MatrixXcd inv = weighted_gram(t.subcarrier(l), mask.weights()).inverse();
    double sum = 0.0;
    for (std::size_t i = 0; i < 3; ++i)
      sum += r.allocation.at(l, i) * inv(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)).real();
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }
}

TEST(Zf, Errors) {
  const auto t = gen_iid_rayleigh(3, 6, 2, 1);
  EXPECT_THROW(zf_sum_rate(t, SelectionMask::from_indices(6, std::vector<std::size_t>{0, 1}), 1.0),
               PreconditionError);
  // Two identical users on subcarrier 1 make the Gram matrix singular there.
  std::vector<cplx> e(t.entries().begin(), t.entries().end());
  for (std::size_t m = 0; m < 6; ++m) e[(1 * 3 + 1) * 6 + m] = e[(1 * 3 + 0) * 6 + m];
  const ChannelTensor singular(3, 6, 2, e);
  try {
    zf_sum_rate(singular, SelectionMask::all(6), 1.0);
    FAIL() << "expected singularity";
  } catch (const SingularityError& err) {
    EXPECT_EQ(err.subcarrier(), 1u);
  }
}

// ---------------------------------------------------------------------------
// equal-power log-det

TEST(LogDet, ClosedForms) {
  const std::size_t K = 3;
  const auto t = identity_channel(K);
  const double rho = 0.9;
  EXPECT_DOUBLE_EQ(equal_power_log_det(t, std::vector<double>(K, 0.0), rho).mean, 0.0);
  EXPECT_NEAR(equal_power_log_det(t, std::vector<double>(K, 1.0), rho).mean,
              3.0 * std::log2(1.0 + rho), 1e-12);
  EXPECT_NEAR(equal_power_log_det(t, std::vector<double>(K, 0.5), rho).mean,
              3.0 * std::log2(1.0 + 0.5 * rho), 1e-12);
  EXPECT_THROW(equal_power_log_det(t, std::vector<double>{0.2, 1.1, 0.0}, rho), DomainError);
  EXPECT_THROW(equal_power_log_det(t, std::vector<double>{0.2, -0.1, 0.0}, rho), DomainError);
}

TEST(LogDet, MatchesEliminationDeterminant) {
  const auto t = gen_iid_rayleigh(3, 7, 2, 13);
  const std::vector<double> delta{0.1, 0.9, 0.5, 1.0, 0.0, 0.3, 0.7};
  const double rho = 1.7;
  const auto v = equal_power_log_det(t, delta, rho);
  for (std::size_t l = 0; l < 2; ++l) {
    std::vector<cplx> a(9, 0.0);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) {
        cplx s = i == j ? 1.0 : 0.0;
        for (std::size_t m = 0; m < 7; ++m) s += rho * delta[m] * t(i, m, l) * std::conj(t(j, m, l));
        a[i * 3 + j] = s;
      }
    EXPECT_NEAR(v.per_subcarrier[l], std::log2(oracle::determinant(a, 3).real()), 1e-12);
  }
}

TEST(LogDet, SupersetMonotone) {
  std::mt19937_64 rng(5);
  const auto t = gen_iid_rayleigh(3, 12, 4, 8);
  std::bernoulli_distribution coin(0.5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<bool> small(12), big(12);
    for (std::size_t m = 0; m < 12; ++m) {
      small[m] = coin(rng);
      big[m] = small[m] || coin(rng);
    }
    EXPECT_LE(equal_power_log_det(t, SelectionMask(small), 0.6).mean,
              equal_power_log_det(t, SelectionMask(big), 0.6).mean + 1e-12);
  }
}

TEST(LogDet, ConcaveAlongSegments) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto t = gen_iid_rayleigh(2, 8, 2, 19);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> a(8), b(8);
    for (auto& v : a) v = u(rng);
    for (auto& v : b) v = u(rng);
    auto f = [&](double s) {
      std::vector<double> d(8);
      for (std::size_t m = 0; m < 8; ++m) d[m] = (1 - s) * a[m] + s * b[m];
      return equal_power_log_det(t, d, 2.0).mean;
    };
    const double h = 0.05;
    for (double s = h; s < 1.0 - h / 2; s += h) {
      EXPECT_LE(f(s + h) - 2 * f(s) + f(s - h), 1e-9);
    }
  }
}

// ---------------------------------------------------------------------------
// received SNR

TEST(ReceivedSnr, OrthonormalAndSingleUser) {
  const double rho = 0.8;
  const auto z = per_user_received_snr(identity_channel(2), SelectionMask::all(2), rho,
                                       SnrScheme::ZF);
  EXPECT_NEAR(z(0, 0), rho, 1e-14);
  EXPECT_NEAR(z(0, 1), rho, 1e-14);

  const auto t = gen_iid_rayleigh(1, 4, 2, 3);
  const auto zf = per_user_received_snr(t, SelectionMask::all(4), rho, SnrScheme::ZF);
  const auto su = per_user_received_snr(t, SelectionMask::all(4), rho, SnrScheme::SingleUser);
  for (std::size_t l = 0; l < 2; ++l) {
    double energy = 0.0;
    for (std::size_t m = 0; m < 4; ++m) energy += std::norm(t(0, m, l));
    EXPECT_NEAR(zf(static_cast<Eigen::Index>(l), 0), rho * energy, 1e-12);
    EXPECT_NEAR(su(static_cast<Eigen::Index>(l), 0), rho * energy, 1e-12);
  }
}

TEST(ReceivedSnr, FavorablePropagationLimit) {
  // i.i.d. Rayleigh, K=4, N=64: the mean ZF SNR approaches rho N.
  const double rho = std::pow(10.0, -0.5);
  double total = 0.0;
  const int seeds = 100;
  for (int s = 0; s < seeds; ++s) {
    const auto t = gen_iid_rayleigh(4, 64, 32, static_cast<std::uint64_t>(s));
    total += per_user_received_snr(t, SelectionMask::all(64), rho, SnrScheme::ZF).mean();
  }
  const double mean = total / seeds;
  EXPECT_NEAR(mean, rho * 64.0, 0.1 * rho * 64.0);
}
