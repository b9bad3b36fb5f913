#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "credence/gradients.hpp"
#include "credence/model.hpp"
#include "credence/rng.hpp"
#include "credence/sample_set.hpp"

namespace credence {

/// Position-momentum pair in unconstrained coordinates.
struct PhasePoint {
  Vec position;
  Vec momentum;

  PhasePoint(Vec pos, Vec mom) : position(std::move(pos)), momentum(std::move(mom)) {
    if (position.size() != momentum.size()) {
      throw std::invalid_argument("PhasePoint: position/momentum length mismatch");
    }
  }
};

struct HmcConfig {
  double step_size = 0.1;
  std::size_t n_leapfrog = 10;
  std::size_t n_samples = 1000;
  std::size_t n_warmup = 0;
  std::uint64_t seed = 0;
};

namespace detail {

// Identity mass matrix throughout: H(theta, r) = -L(theta) + r.r/2.
inline double joint_log_density(double log_density, std::span<const double> momentum) {
  return log_density - 0.5 * squared_norm(momentum);
}

}  // namespace detail

/// One leapfrog step: half-step momentum, full-step position, half-step
/// momentum. Deterministic; negate `eps` to integrate backward in time.
inline PhasePoint leapfrog(const LogDensityModel& model, const PhasePoint& state, double eps,
                           const GradientEngine& engine = {}) {
  Vec momentum = state.momentum;
  Vec position = state.position;
  Vec grad = grad_log_density(engine, model, position);
  axpy(0.5 * eps, grad, momentum);
  axpy(eps, momentum, position);
  grad = grad_log_density(engine, model, position);
  axpy(0.5 * eps, grad, momentum);
  return PhasePoint(std::move(position), std::move(momentum));
}

inline SampleSet hmc(const LogDensityModel& model, const HmcConfig& cfg) {
  if (!(cfg.step_size > 0.0)) throw std::invalid_argument("HmcConfig: step_size must be > 0");
  if (cfg.n_leapfrog < 1) throw std::invalid_argument("HmcConfig: n_leapfrog must be >= 1");
  if (cfg.n_samples < 1) throw std::invalid_argument("HmcConfig: n_samples must be >= 1");

  Rng root(cfg.seed);
  Rng init_rng = root.substream("init");
  Rng draw_rng = root.substream("draws");
  const GradientEngine engine;

  Vec zeta = detail::initial_point(model, init_rng);
  double log_density = transformed_log_density(model, zeta);

  SampleSet samples(model.dim());
  samples.reserve(cfg.n_samples);

  const std::size_t total = cfg.n_warmup + cfg.n_samples;
  for (std::size_t iter = 0; iter < total; ++iter) {
    Vec momentum(model.dim());
    for (double& r : momentum) r = draw_rng.normal();
    const double h_start = detail::joint_log_density(log_density, momentum);

    PhasePoint state(zeta, momentum);
    bool divergent = false;
    double proposal_log_density = log_density;
    for (std::size_t step = 0; step < cfg.n_leapfrog; ++step) {
      try {
        state = leapfrog(model, state, cfg.step_size, engine);
      } catch (const NumericError&) {
        divergent = true;
        break;
      }
      proposal_log_density = transformed_log_density(model, state.position);
      if (!std::isfinite(detail::joint_log_density(proposal_log_density, state.momentum))) {
        divergent = true;
        break;
      }
    }

    DrawStats stats;
    if (divergent) {
      stats.divergent = true;
      stats.accept_stat = 0.0;
      stats.energy_error = std::numeric_limits<double>::infinity();
    } else {
      const double h_end = detail::joint_log_density(proposal_log_density, state.momentum);
      const double log_alpha = h_end - h_start;
      stats.accept_stat = std::exp(std::min(0.0, log_alpha));
      stats.energy_error = std::abs(h_end - h_start);
      if (std::log(draw_rng.uniform_pos()) < log_alpha) {
        stats.accepted = true;
        zeta = state.position;
        log_density = proposal_log_density;
        // proposal momentum is negated on acceptance to preserve
        // time-reversibility; it is resampled next iteration either way
      }
    }
    if (iter >= cfg.n_warmup) {
      samples.add_draw(zeta, model.transform().inverse(zeta), log_density, stats);
    }
  }
  return samples;
}

}  // namespace credence
