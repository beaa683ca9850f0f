// Relaxed antenna selection: maximize the mean equal-power log-det over the
// capped simplex {0 <= delta <= 1, sum delta = N}, then keep the N largest.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "antsel/errors.hpp"
#include "antsel/selection.hpp"

namespace antsel {
namespace {

double clamped_sum(std::span<const double> v, double shift) {
  double s = 0.0;
  for (double x : v) s += std::clamp(x - shift, 0.0, 1.0);
  return s;
}

}  // namespace

ObjectiveAndGradient relaxed_objective_and_gradient(const ChannelTensor& tensor,
                                                    std::span<const double> delta,
                                                    double rho) {
  const std::size_t K = tensor.users(), M = tensor.antennas(), L = tensor.subcarriers();
  if (delta.size() != M) throw DomainError("selection weights must have length M");
  if (!(rho > 0.0)) throw DomainError("rho must be positive");
  const auto n = static_cast<Eigen::Index>(K);

  ObjectiveAndGradient out;
  out.gradient.assign(M, 0.0);
  double total = 0.0;
  for (std::size_t l = 0; l < L; ++l) {
    const auto h = tensor.subcarrier(l);
    Eigen::MatrixXcd a = rho * weighted_gram(h, delta);
    a += Eigen::MatrixXcd::Identity(n, n);
    Eigen::LLT<Eigen::MatrixXcd> llt(a);
    if (llt.info() != Eigen::Success) throw NumericError("relaxed objective: LLT failed");
    double logdet = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) logdet += std::log(llt.matrixLLT()(i, i).real());
    total += 2.0 * logdet;

    const Eigen::MatrixXcd x = llt.solve(Eigen::MatrixXcd(h));
    for (std::size_t m = 0; m < M; ++m) {
      const auto col = static_cast<Eigen::Index>(m);
      out.gradient[m] += h.col(col).dot(x.col(col)).real();
    }
  }
  const double scale = 1.0 / (static_cast<double>(L) * std::log(2.0));
  out.value = total * scale;
  for (auto& g : out.gradient) g *= rho * scale;
  return out;
}

std::vector<double> project_capped_simplex(std::span<const double> v, double target,
                                           double tol) {
  const auto n = static_cast<double>(v.size());
  if (!(target >= 0.0 && target <= n)) {
    throw DomainError("capped-simplex target outside [0, size]");
  }
  std::vector<double> out(v.size());
  if (target == n) {
    std::fill(out.begin(), out.end(), 1.0);
    return out;
  }
  if (target == 0.0) {
    std::fill(out.begin(), out.end(), 0.0);
    return out;
  }
  const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
  double lo = *mn - 1.0;  // sum = n
  double hi = *mx;        // sum = 0
  double shift = 0.5 * (lo + hi);
  for (int iter = 0; iter < 200; ++iter) {
    shift = 0.5 * (lo + hi);
    const double s = clamped_sum(v, shift);
    if (std::abs(s - target) <= tol) break;
    if (s > target) {
      lo = shift;
    } else {
      hi = shift;
    }
  }
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::clamp(v[i] - shift, 0.0, 1.0);
  return out;
}

SelectionMask round_relaxed(std::span<const double> values, std::size_t n,
                            std::span<const double> antenna_power) {
  const std::size_t M = values.size();
  if (n > M) throw PreconditionError("cannot select more antennas than available");
  std::vector<std::size_t> order(M);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (values[a] != values[b]) return values[a] > values[b];
    if (antenna_power[a] != antenna_power[b]) return antenna_power[a] > antenna_power[b];
    return a < b;
  });
  order.resize(n);
  return SelectionMask::from_indices(M, order);
}

ConvexSelection select_convex(const ChannelTensor& tensor, std::size_t n, double rho,
                              const ConvexSolverParams& params) {
  const auto start = std::chrono::steady_clock::now();
  const std::size_t M = tensor.antennas();
  if (n < 1 || n > M) {
    throw PreconditionError("select_convex needs 1 <= N <= M (N=" + std::to_string(n) +
                            ", M=" + std::to_string(M) + ")");
  }
  const double target = static_cast<double>(n);

  ConvexSelection out;
  std::vector<double> x(M, target / static_cast<double>(M));
  auto current = relaxed_objective_and_gradient(tensor, x, rho);
  out.trace.push_back(current.value);

  std::vector<double> probe(M);
  double pg_norm = 0.0;
  bool converged = false;
  std::size_t iter = 0;
  for (; iter < params.max_iters; ++iter) {
    for (std::size_t m = 0; m < M; ++m) probe[m] = x[m] + current.gradient[m];
    const auto unit_step = project_capped_simplex(probe, target, params.projection_tol);
    pg_norm = 0.0;
    for (std::size_t m = 0; m < M; ++m) pg_norm += (unit_step[m] - x[m]) * (unit_step[m] - x[m]);
    pg_norm = std::sqrt(pg_norm);
    if (pg_norm < params.gradient_tol) {
      converged = true;
      break;
    }

    // Armijo backtracking along the projection arc.
    double step = params.initial_step;
    bool accepted = false;
    std::vector<double> candidate;
    ObjectiveAndGradient next;
    while (step > 1e-14) {
      for (std::size_t m = 0; m < M; ++m) probe[m] = x[m] + step * current.gradient[m];
      candidate = project_capped_simplex(probe, target, params.projection_tol);
      double slope = 0.0;
      for (std::size_t m = 0; m < M; ++m) slope += current.gradient[m] * (candidate[m] - x[m]);
      next = relaxed_objective_and_gradient(tensor, candidate, rho);
      if (next.value >= current.value + params.armijo * slope) {
        accepted = true;
        break;
      }
      step *= params.step_shrink;
    }
    if (!accepted) break;  // no representable ascent left
    x = std::move(candidate);
    current = std::move(next);
    out.trace.push_back(current.value);
  }

  out.relaxed.values = x;
  out.relaxed.target_n = n;
  out.relaxed.objective = current.value;
  out.mask = round_relaxed(x, n, per_antenna_avg_power(tensor));
  out.stats.iterations = iter;
  out.stats.gradient_norm = pg_norm;
  out.stats.converged = converged;
  out.stats.wall_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - start)
                          .count();
  return out;
}

}  // namespace antsel
