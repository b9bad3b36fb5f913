#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "credence/model.hpp"
#include "credence/rng.hpp"
#include "credence/sample_set.hpp"

namespace credence {

/// Random-walk Metropolis-Hastings configuration. The Gaussian proposal
/// is symmetric, so the proposal ratio cancels from the acceptance
/// probability. `proposal_scale` is the per-dimension proposal standard
/// deviation (a single entry broadcasts).
struct MhConfig {
  Vec proposal_scale{1.0};
  std::size_t n_samples = 1000;
  std::size_t n_warmup = 0;
  std::uint64_t seed = 0;
};

inline SampleSet metropolis_hastings(const LogDensityModel& model, const MhConfig& cfg) {
  if (cfg.n_samples < 1) throw std::invalid_argument("MhConfig: n_samples must be >= 1");
  if (cfg.proposal_scale.empty() ||
      (cfg.proposal_scale.size() != 1 && cfg.proposal_scale.size() != model.dim())) {
    throw std::invalid_argument("MhConfig: proposal_scale must be scalar or dim-length");
  }
  for (const double s : cfg.proposal_scale) {
    if (!(s > 0.0)) throw std::invalid_argument("MhConfig: proposal_scale must be > 0");
  }

  Vec scale(model.dim());
  for (std::size_t i = 0; i < scale.size(); ++i) {
    scale[i] = cfg.proposal_scale.size() == 1 ? cfg.proposal_scale[0] : cfg.proposal_scale[i];
  }

  Rng root(cfg.seed);
  Rng init_rng = root.substream("init");
  Rng draw_rng = root.substream("draws");

  Vec zeta = detail::initial_point(model, init_rng);
  double log_density = transformed_log_density(model, zeta);

  SampleSet samples(model.dim());
  samples.reserve(cfg.n_samples);
  Vec proposal(model.dim());

  const std::size_t total = cfg.n_warmup + cfg.n_samples;
  for (std::size_t iter = 0; iter < total; ++iter) {
    for (std::size_t i = 0; i < proposal.size(); ++i) {
      proposal[i] = zeta[i] + scale[i] * draw_rng.normal();
    }
    const double proposal_log_density = transformed_log_density(model, proposal);
    // symmetric q: log alpha = log pi(candidate) - log pi(current)
    const double log_alpha = proposal_log_density - log_density;
    const bool accept = std::log(draw_rng.uniform_pos()) < log_alpha;
    if (accept) {
      zeta = proposal;
      log_density = proposal_log_density;
    }
    if (iter >= cfg.n_warmup) {
      DrawStats stats;
      stats.accepted = accept;
      stats.accept_stat = std::exp(std::min(0.0, log_alpha));
      samples.add_draw(zeta, model.transform().inverse(zeta), log_density, stats);
    }
  }
  return samples;
}

}  // namespace credence
