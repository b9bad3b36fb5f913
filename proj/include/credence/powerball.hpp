#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <stdexcept>

#include "credence/dataset.hpp"
#include "credence/rng.hpp"

namespace credence {

inline constexpr int powerball_pool = 69;  // white balls drawn 5 at a time
inline constexpr int powerball_picks = 5;

/// Synthetic bin-classification dataset: each ticket draws 5 distinct
/// values from 1..69, sorts them, and contributes two rows -- the value
/// in sorted position 1 labeled 0 and the value in sorted position 3
/// labeled 1. Labels are balanced by construction.
inline Dataset synthesize_powerball(std::size_t n_tickets, std::uint64_t seed) {
  if (n_tickets < 1) throw std::invalid_argument("synthesize_powerball: n_tickets must be >= 1");
  Rng rng(seed);

  Dataset ds;
  ds.features = Matrix(2 * n_tickets, 1);
  ds.labels = Vec(2 * n_tickets);
  ds.feature_names = {"value"};

  std::array<int, powerball_pool> pool{};
  for (std::size_t t = 0; t < n_tickets; ++t) {
    for (int i = 0; i < powerball_pool; ++i) pool[static_cast<std::size_t>(i)] = i + 1;
    std::array<int, powerball_picks> ticket{};
    for (int i = 0; i < powerball_picks; ++i) {
      const auto j = static_cast<std::size_t>(rng.uniform_int(i, powerball_pool - 1));
      std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
      ticket[static_cast<std::size_t>(i)] = pool[static_cast<std::size_t>(i)];
    }
    std::sort(ticket.begin(), ticket.end());
    ds.features(2 * t, 0) = ticket[0];      // sorted position 1
    (*ds.labels)[2 * t] = 0.0;
    ds.features(2 * t + 1, 0) = ticket[2];  // sorted position 3
    (*ds.labels)[2 * t + 1] = 1.0;
  }
  return ds;
}

namespace detail {

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  // exact in int64 for everything this file needs (n <= 69)
  std::int64_t result = 1;
  for (int i = 1; i <= k; ++i) {
    result = result * (n - k + i) / i;
  }
  return static_cast<double>(result);
}

}  // namespace detail

/// Exact pmf of the value at sorted position `position` (1-based) of 5
/// distinct uniform draws from 1..69. Index the result by value; entry 0
/// is unused and zero.
inline std::array<double, powerball_pool + 1> powerball_position_pmf(int position) {
  if (position < 1 || position > powerball_picks) {
    throw std::invalid_argument("powerball_position_pmf: position must lie in 1..5");
  }
  const double total = detail::binomial(powerball_pool, powerball_picks);
  std::array<double, powerball_pool + 1> pmf{};
  for (int k = 1; k <= powerball_pool; ++k) {
    pmf[static_cast<std::size_t>(k)] = detail::binomial(k - 1, position - 1) *
                                       detail::binomial(powerball_pool - k,
                                                        powerball_picks - position) /
                                       total;
  }
  return pmf;
}

/// Accuracy of the Bayes-optimal classifier distinguishing sorted
/// position 1 from sorted position 3 under equal class priors:
/// (1/2) * sum_k max(P1(k), P3(k)). Strictly below 1 because the two
/// distributions overlap.
inline double bayes_optimal_accuracy() {
  const auto p1 = powerball_position_pmf(1);
  const auto p3 = powerball_position_pmf(3);
  double acc = 0.0;
  for (int k = 1; k <= powerball_pool; ++k) {
    acc += std::max(p1[static_cast<std::size_t>(k)], p3[static_cast<std::size_t>(k)]);
  }
  return 0.5 * acc;
}

}  // namespace credence
