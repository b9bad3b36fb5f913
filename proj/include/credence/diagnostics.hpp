#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "credence/dataset.hpp"
#include "credence/linalg.hpp"
#include "credence/sample_set.hpp"

namespace credence {

struct HpdInterval {
  double low = 0.0;
  double high = 0.0;
  double mass = 0.0;
};

/// Highest posterior density interval: the shortest contiguous window
/// over the sorted draws containing ceil(mass * n) of them. Assumes a
/// unimodal posterior; for multimodal draws this returns a single
/// interval and can overcover. Ties break toward the lowest start.
inline HpdInterval hpd(std::span<const double> draws, double mass) {
  if (draws.size() < 10) throw std::invalid_argument("hpd: need at least 10 draws");
  if (!(mass > 0.0 && mass < 1.0)) throw std::invalid_argument("hpd: mass must lie in (0,1)");

  Vec sorted(draws.begin(), draws.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  std::size_t window = static_cast<std::size_t>(
      std::ceil(mass * static_cast<double>(n)));
  window = std::clamp<std::size_t>(window, 1, n);

  std::size_t best_start = 0;
  double best_width = sorted[window - 1] - sorted[0];
  for (std::size_t start = 1; start + window <= n; ++start) {
    const double width = sorted[start + window - 1] - sorted[start];
    if (width < best_width) {
      best_width = width;
      best_start = start;
    }
  }
  return {sorted[best_start], sorted[best_start + window - 1], mass};
}

enum class PpcStatistic { Mean, Variance };

struct PpcResult {
  double observed_stat = 0.0;
  double replicated_quantile = 0.0;  // in [0,1]; near 0 or 1 flags misfit
};

/// A generator of replicated datasets: for posterior draw `i`, return
/// the data the fitted model would produce. Randomness is owned by the
/// closure so the caller controls seeding.
using ReplicateGenerator = std::function<Vec(std::size_t)>;

namespace detail {

inline double ppc_statistic(std::span<const double> values, PpcStatistic stat) {
  return stat == PpcStatistic::Mean ? mean(values) : variance(values);
}

}  // namespace detail

/// Posterior predictive check: computes the statistic on the observed
/// data (first feature column) and locates it within the distribution
/// of the same statistic over `n_draws` replicated datasets. Ties are
/// split mid-rank so discrete statistics stay calibrated.
inline PpcResult posterior_predictive_check(const ReplicateGenerator& replicate,
                                            std::size_t n_draws, const Dataset& observed,
                                            PpcStatistic stat) {
  if (n_draws < 100) {
    throw std::invalid_argument("posterior_predictive_check: need at least 100 posterior draws");
  }
  if (observed.n_rows() == 0) {
    throw std::invalid_argument("posterior_predictive_check: observed data is empty");
  }
  Vec observed_values(observed.n_rows());
  for (std::size_t i = 0; i < observed_values.size(); ++i) {
    observed_values[i] = observed.features(i, 0);
  }
  const double observed_stat = detail::ppc_statistic(observed_values, stat);

  std::size_t below = 0, equal = 0;
  for (std::size_t i = 0; i < n_draws; ++i) {
    const Vec replicated = replicate(i);
    const double rep_stat = detail::ppc_statistic(replicated, stat);
    if (rep_stat < observed_stat) {
      ++below;
    } else if (rep_stat == observed_stat) {
      ++equal;
    }
  }
  const double quantile = (static_cast<double>(below) + 0.5 * static_cast<double>(equal)) /
                          static_cast<double>(n_draws);
  return {observed_stat, quantile};
}

struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  double accuracy() const {
    return total() == 0 ? 0.0 : static_cast<double>(tp + tn) / static_cast<double>(total());
  }
  /// False positive rate fp / (fp + tn); 0 when no negatives.
  double fpr() const {
    const std::size_t negatives = fp + tn;
    return negatives == 0 ? 0.0 : static_cast<double>(fp) / static_cast<double>(negatives);
  }
  /// False negative rate fn / (fn + tp); 0 when no positives.
  double fnr() const {
    const std::size_t positives = fn + tp;
    return positives == 0 ? 0.0 : static_cast<double>(fn) / static_cast<double>(positives);
  }
};

/// Standard counts at the threshold; prediction is positive when the
/// probability is >= threshold, the positive class is label 1.
inline ConfusionMatrix confusion(std::span<const double> predictions,
                                 std::span<const double> labels, double threshold = 0.5) {
  if (predictions.size() != labels.size()) {
    throw std::invalid_argument("confusion: predictions/labels length mismatch");
  }
  ConfusionMatrix m;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const bool predicted = predictions[i] >= threshold;
    const bool actual = labels[i] == 1.0;
    if (predicted && actual) {
      ++m.tp;
    } else if (predicted && !actual) {
      ++m.fp;
    } else if (!predicted && !actual) {
      ++m.tn;
    } else {
      ++m.fn;
    }
  }
  return m;
}

/// Effective sample size by the initial-positive-sequence rule: sum
/// autocorrelation pairs (rho_{2m} + rho_{2m+1}) while they stay
/// positive. Returns 1 (minimal sentinel) for degenerate chains.
inline double effective_sample_size(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 2) return 1.0;
  const double m = mean(values);
  Vec centered(n);
  for (std::size_t i = 0; i < n; ++i) centered[i] = values[i] - m;

  auto autocovariance = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) s += centered[i] * centered[i + lag];
    return s / static_cast<double>(n);
  };

  const double gamma0 = autocovariance(0);
  if (!(gamma0 > 0.0)) return 1.0;

  // tau = -1 + 2 * sum of positive pair sums, starting with rho_0 + rho_1
  double tau = 0.0;
  for (std::size_t lag = 0; lag + 1 < n; lag += 2) {
    const double pair = (autocovariance(lag) + autocovariance(lag + 1)) / gamma0;
    if (pair <= 0.0) break;
    tau += 2.0 * pair;
  }
  tau -= 1.0;
  tau = std::max(tau, 1.0);
  const double ess = static_cast<double>(n) / tau;
  return std::max(ess, 1.0);
}

struct ChainStats {
  double acceptance_rate = 0.0;
  double mean_accept_stat = 0.0;
  std::size_t divergence_count = 0;
  Vec mean;  // constrained coordinates
  Vec stddev;
  Vec ess;
};

inline ChainStats chain_stats(const SampleSet& samples) {
  if (samples.n_draws() < 100) {
    throw std::invalid_argument("chain_stats: need at least 100 draws");
  }
  ChainStats cs;
  std::size_t accepted = 0;
  double accept_stat_sum = 0.0;
  for (const DrawStats& s : samples.stats()) {
    accepted += s.accepted ? 1 : 0;
    cs.divergence_count += s.divergent ? 1 : 0;
    accept_stat_sum += s.accept_stat;
  }
  const double n = static_cast<double>(samples.n_draws());
  cs.acceptance_rate = static_cast<double>(accepted) / n;
  cs.mean_accept_stat = accept_stat_sum / n;
  cs.mean.resize(samples.dim());
  cs.stddev.resize(samples.dim());
  cs.ess.resize(samples.dim());
  for (std::size_t j = 0; j < samples.dim(); ++j) {
    const Vec column = samples.constrained_column(j);
    cs.mean[j] = mean(column);
    cs.stddev[j] = stddev(column);
    cs.ess[j] = effective_sample_size(column);
  }
  return cs;
}

}  // namespace credence
