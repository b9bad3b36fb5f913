#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "credence/dual_averaging.hpp"
#include "credence/gradients.hpp"
#include "credence/hmc.hpp"
#include "credence/model.hpp"
#include "credence/rng.hpp"
#include "credence/sample_set.hpp"

namespace credence {

struct NutsConfig {
  double target_accept = 0.8;
  std::size_t max_tree_depth = 10;
  std::size_t n_samples = 1000;
  std::size_t n_warmup = 1000;
  std::uint64_t seed = 0;
  double init_step_size = 1.0;
};

/// True when the momentum `r` points back toward `theta_from`, i.e.
/// r . (theta_to - theta_from) < 0.
inline bool uturn_between(std::span<const double> theta_from, std::span<const double> theta_to,
                          std::span<const double> momentum) {
  double s = 0.0;
  for (std::size_t i = 0; i < momentum.size(); ++i) {
    s += momentum[i] * (theta_to[i] - theta_from[i]);
  }
  return s < 0.0;
}

namespace detail {

constexpr double nuts_divergence_threshold = 1000.0;  // nats below the slice level

struct NutsTree {
  PhasePoint minus;
  PhasePoint plus;
  Vec sample{};          // reservoir pick among slice-valid leaves
  double sample_log_density = 0.0;
  double sample_joint = 0.0;
  std::size_t n_valid = 0;
  bool no_stop = true;
  bool divergent = false;
  double alpha_sum = 0.0;
  std::size_t n_alpha = 0;
};

class NutsKernel {
 public:
  NutsKernel(const LogDensityModel& model, double log_u, double joint_start, Rng& rng)
      : model_(model), log_u_(log_u), joint_start_(joint_start), rng_(rng) {}

  /// Builds a balanced subtree of 2^depth leapfrog steps in direction
  /// `direction` starting from `state`.
  NutsTree build(const PhasePoint& state, int direction, std::size_t depth, double eps) {
    if (depth == 0) {
      return leaf_step(state, direction, eps);
    }
    NutsTree first = build(state, direction, depth - 1, eps);
    if (!first.no_stop) return first;

    NutsTree second = direction == -1 ? build(first.minus, direction, depth - 1, eps)
                                      : build(first.plus, direction, depth - 1, eps);
    NutsTree merged{direction == -1 ? std::move(second.minus) : std::move(first.minus),
                    direction == -1 ? std::move(first.plus) : std::move(second.plus)};
    merged.divergent = first.divergent || second.divergent;
    merged.alpha_sum = first.alpha_sum + second.alpha_sum;
    merged.n_alpha = first.n_alpha + second.n_alpha;
    merged.n_valid = first.n_valid + second.n_valid;
    // uniform pick over valid leaves of the combined subtree
    const bool take_second =
        merged.n_valid > 0 &&
        rng_.uniform() * static_cast<double>(merged.n_valid) < static_cast<double>(second.n_valid);
    const NutsTree& chosen = take_second ? second : first;
    merged.sample = chosen.sample;
    merged.sample_log_density = chosen.sample_log_density;
    merged.sample_joint = chosen.sample_joint;
    merged.no_stop = second.no_stop && !subtree_uturn(merged);
    return merged;
  }

 private:
  NutsTree leaf_step(const PhasePoint& state, int direction, double eps) {
    PhasePoint next = state;
    double log_density = -std::numeric_limits<double>::infinity();
    double joint = -std::numeric_limits<double>::infinity();
    bool failed = false;
    try {
      next = leapfrog(model_, state, direction == -1 ? -eps : eps);
      log_density = transformed_log_density(model_, next.position);
      joint = joint_log_density(log_density, next.momentum);
    } catch (const NumericError&) {
      failed = true;
    }

    NutsTree tree{next, next};
    if (failed || !std::isfinite(joint)) {
      tree.divergent = true;
      tree.no_stop = false;
      tree.n_alpha = 1;  // alpha contribution 0
      return tree;
    }
    tree.sample = next.position;
    tree.sample_log_density = log_density;
    tree.sample_joint = joint;
    tree.n_valid = log_u_ <= joint ? 1 : 0;
    tree.divergent = joint < log_u_ - nuts_divergence_threshold;
    tree.no_stop = !tree.divergent;
    tree.alpha_sum = std::exp(std::min(0.0, joint - joint_start_));
    tree.n_alpha = 1;
    return tree;
  }

  static bool subtree_uturn(const NutsTree& tree) {
    return uturn_between(tree.minus.position, tree.plus.position, tree.minus.momentum) ||
           uturn_between(tree.minus.position, tree.plus.position, tree.plus.momentum);
  }

  const LogDensityModel& model_;
  double log_u_;
  double joint_start_;
  Rng& rng_;
};

struct NutsIterationResult {
  Vec position;
  double log_density = 0.0;
  DrawStats stats;
};

inline NutsIterationResult nuts_iteration(const LogDensityModel& model, const Vec& zeta,
                                          double log_density, double eps,
                                          std::size_t max_tree_depth, Rng& rng) {
  Vec momentum(zeta.size());
  for (double& r : momentum) r = rng.normal();
  const double joint_start = joint_log_density(log_density, momentum);
  // slice variable in log space: log u = log p(theta, r) - Exponential(1)
  const double log_u = joint_start - rng.exponential();

  NutsKernel kernel(model, log_u, joint_start, rng);
  PhasePoint minus(zeta, momentum);
  PhasePoint plus(zeta, momentum);

  NutsIterationResult result;
  result.position = zeta;
  result.log_density = log_density;
  std::size_t n_valid = 1;  // the initial state always satisfies the slice
  double sample_joint = joint_start;
  double alpha_sum = 0.0;
  std::size_t n_alpha = 0;
  bool divergent = false;

  std::size_t n_doublings = 0;
  for (std::size_t depth = 0; depth <= max_tree_depth; ++depth) {
    const int direction = rng.uniform() < 0.5 ? -1 : 1;
    NutsTree tree = kernel.build(direction == -1 ? minus : plus, direction, depth, eps);
    ++n_doublings;
    alpha_sum += tree.alpha_sum;
    n_alpha += tree.n_alpha;
    divergent = divergent || tree.divergent;
    if (direction == -1) {
      minus = tree.minus;
    } else {
      plus = tree.plus;
    }
    if (!tree.no_stop) break;
    // the new subtree ran to completion: merge its candidates into the
    // trajectory-wide uniform pick
    const std::size_t total = n_valid + tree.n_valid;
    if (total > 0 &&
        rng.uniform() * static_cast<double>(total) < static_cast<double>(tree.n_valid)) {
      result.position = tree.sample;
      result.log_density = tree.sample_log_density;
      sample_joint = tree.sample_joint;
    }
    n_valid = total;
    if (uturn_between(minus.position, plus.position, minus.momentum) ||
        uturn_between(minus.position, plus.position, plus.momentum)) {
      break;
    }
  }

  result.stats.tree_depth = static_cast<std::uint32_t>(n_doublings);
  result.stats.divergent = divergent;
  result.stats.accepted = result.position != zeta;
  result.stats.accept_stat = n_alpha > 0 ? alpha_sum / static_cast<double>(n_alpha) : 0.0;
  result.stats.energy_error = std::abs(sample_joint - joint_start);
  return result;
}

/// Doubles or halves eps until the one-step acceptance probability
/// crosses 1/2; gives dual averaging a sane starting point.
inline double find_reasonable_step_size(const LogDensityModel& model, const Vec& zeta,
                                        double init_eps, Rng& rng) {
  double eps = init_eps;
  const double log_density = transformed_log_density(model, zeta);
  Vec momentum(zeta.size());
  for (double& r : momentum) r = rng.normal();
  const double joint_start = joint_log_density(log_density, momentum);

  auto log_ratio_at = [&](double step) {
    try {
      const PhasePoint next = leapfrog(model, PhasePoint(zeta, momentum), step);
      const double joint =
          joint_log_density(transformed_log_density(model, next.position), next.momentum);
      return std::isfinite(joint) ? joint - joint_start
                                  : -std::numeric_limits<double>::infinity();
    } catch (const NumericError&) {
      return -std::numeric_limits<double>::infinity();
    }
  };

  double log_ratio = log_ratio_at(eps);
  const double direction = log_ratio > std::log(0.5) ? 1.0 : -1.0;
  for (int i = 0; i < 50; ++i) {
    if (direction * log_ratio <= direction * std::log(0.5)) break;
    eps *= direction > 0.0 ? 2.0 : 0.5;
    log_ratio = log_ratio_at(eps);
  }
  return eps;
}

}  // namespace detail

/// No-U-Turn sampler: slice-sampled trajectory length via tree doubling,
/// dual-averaging step-size adaptation during warmup. The next state is
/// drawn uniformly from the slice-valid states of the trajectory.
inline SampleSet nuts(const LogDensityModel& model, const NutsConfig& cfg) {
  if (!(cfg.target_accept > 0.0 && cfg.target_accept < 1.0)) {
    throw std::invalid_argument("NutsConfig: target_accept must lie in (0,1)");
  }
  if (cfg.n_samples < 1) throw std::invalid_argument("NutsConfig: n_samples must be >= 1");
  if (!(cfg.init_step_size > 0.0)) {
    throw std::invalid_argument("NutsConfig: init_step_size must be > 0");
  }

  Rng root(cfg.seed);
  Rng init_rng = root.substream("init");
  Rng draw_rng = root.substream("draws");

  Vec zeta = detail::initial_point(model, init_rng);
  double log_density = transformed_log_density(model, zeta);

  double eps = cfg.init_step_size;
  if (cfg.n_warmup > 0) {
    eps = detail::find_reasonable_step_size(model, zeta, cfg.init_step_size, init_rng);
  }
  DualAveraging adapter(cfg.target_accept, eps);

  SampleSet samples(model.dim());
  samples.reserve(cfg.n_samples);

  const std::size_t total = cfg.n_warmup + cfg.n_samples;
  for (std::size_t iter = 0; iter < total; ++iter) {
    detail::NutsIterationResult result =
        detail::nuts_iteration(model, zeta, log_density, eps, cfg.max_tree_depth, draw_rng);
    zeta = result.position;
    log_density = result.log_density;
    if (iter < cfg.n_warmup) {
      adapter.update(result.stats.accept_stat);
      eps = iter + 1 == cfg.n_warmup ? adapter.adapted_step_size() : adapter.step_size();
    } else {
      samples.add_draw(zeta, model.transform().inverse(zeta), log_density, result.stats);
    }
  }
  return samples;
}

/// Final adapted step size for a given warmup acceptance history; the
/// same dual-averaging update the NUTS warmup applies in place.
inline double adapt_step_size(std::span<const double> accept_history, double target_accept,
                              double init_step_size = 1.0) {
  DualAveraging adapter(target_accept, init_step_size);
  for (const double a : accept_history) adapter.update(a);
  return adapter.adapted_step_size();
}

}  // namespace credence
