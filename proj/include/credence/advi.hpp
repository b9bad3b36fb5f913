#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "credence/errors.hpp"
#include "credence/gradients.hpp"
#include "credence/linalg.hpp"
#include "credence/model.hpp"
#include "credence/rng.hpp"

namespace credence {

enum class VariationalFamily { MeanField, FullRank };

/// Gaussian variational family q(zeta) = N(mu, L L^T) with L the
/// (non-unique) Cholesky factor: lower triangular, diagonal entries of
/// either sign, so Sigma = L L^T is positive semidefinite by
/// construction and no explicit constraint is needed. Mean-field keeps
/// L diagonal.
struct VariationalState {
  Vec mu;
  Matrix l_factor;
  VariationalFamily family = VariationalFamily::MeanField;

  std::size_t dim() const { return mu.size(); }

  static VariationalState initial(std::size_t dim, VariationalFamily family,
                                  double init_scale = 0.1) {
    VariationalState state;
    state.mu = Vec(dim, 0.0);
    state.l_factor = Matrix::identity(dim, init_scale);
    state.family = family;
    return state;
  }
};

struct AdviConfig {
  std::size_t n_mc_samples = 10;
  double base_step = 0.1;
  double step_decay = 0.7;  // Robbins-Monro exponent, valid in (0.5, 1]
  std::size_t n_iterations = 1000;
  std::size_t elbo_check_every = 10;
  std::uint64_t seed = 0;
};

namespace detail {

inline void check_state(const VariationalState& state) {
  const std::size_t k = state.dim();
  if (state.l_factor.rows() != k || state.l_factor.cols() != k) {
    throw std::invalid_argument("VariationalState: l_factor must be dim x dim");
  }
  for (std::size_t i = 0; i < k; ++i) {
    if (state.l_factor(i, i) == 0.0) {
      throw NumericError("VariationalState: degenerate family, L has a zero diagonal entry");
    }
    if (state.family == VariationalFamily::MeanField) {
      for (std::size_t j = 0; j < i; ++j) {
        if (state.l_factor(i, j) != 0.0) {
          throw std::invalid_argument("VariationalState: mean-field L must be diagonal");
        }
      }
    }
  }
}

}  // namespace detail

/// Draws eta ~ N(0, I) and maps it through the elliptical
/// standardization inverse zeta = mu + L eta. Returns both vectors.
inline std::pair<Vec, Vec> sample_standardized(const VariationalState& state, Rng& rng) {
  detail::check_state(state);
  Vec eta(state.dim());
  for (double& e : eta) e = rng.normal();
  Vec zeta = lower_tri_matvec(state.l_factor, eta);
  for (std::size_t i = 0; i < zeta.size(); ++i) zeta[i] += state.mu[i];
  return {std::move(eta), std::move(zeta)};
}

/// Entropy of the Gaussian family: (K/2)(1 + log 2 pi) + sum_k log|L_kk|.
inline double gaussian_entropy(const VariationalState& state) {
  detail::check_state(state);
  const double k = static_cast<double>(state.dim());
  double log_det = 0.0;
  for (std::size_t i = 0; i < state.dim(); ++i) {
    log_det += std::log(std::abs(state.l_factor(i, i)));
  }
  return 0.5 * k * (1.0 + std::log(2.0 * std::numbers::pi)) + log_det;
}

/// Monte Carlo ELBO: the average transformed log density over n_mc
/// standardized draws plus the exact entropy term.
inline double elbo_estimate(const LogDensityModel& model, const VariationalState& state,
                            std::size_t n_mc, Rng& rng) {
  if (n_mc < 1) throw std::invalid_argument("elbo_estimate: n_mc must be >= 1");
  detail::check_state(state);
  double sum = 0.0;
  std::size_t n_finite = 0;
  for (std::size_t s = 0; s < n_mc; ++s) {
    const auto [eta, zeta] = sample_standardized(state, rng);
    const double value = transformed_log_density(model, zeta);
    if (std::isfinite(value)) ++n_finite;
    sum += value;
  }
  if (n_finite == 0) {
    throw NumericError("elbo_estimate: all Monte Carlo draws had non-finite density");
  }
  return sum / static_cast<double>(n_mc) + gaussian_entropy(state);
}

struct ElboGradients {
  Vec grad_mu;
  Matrix grad_l;  // lower triangle, diagonal-only for mean-field
};

/// Monte Carlo gradient of the ELBO with respect to (mu, L), sharing
/// one set of eta draws between the two estimates:
///   grad_mu ~ E[ g(zeta) ],   grad_L ~ E[ g(zeta) eta^T ] + d/dL entropy,
/// where g is the gradient of the transformed log density at
/// zeta = mu + L eta and the entropy contribution is 1/L_kk on the
/// diagonal ((L^{-1})^T restricted to the lower triangle).
inline ElboGradients elbo_gradients(const LogDensityModel& model, const VariationalState& state,
                                    std::size_t n_mc, Rng& rng) {
  if (n_mc < 1) throw std::invalid_argument("elbo_gradients: n_mc must be >= 1");
  detail::check_state(state);
  const std::size_t k = state.dim();
  const GradientEngine engine;

  ElboGradients out;
  out.grad_mu = Vec(k, 0.0);
  out.grad_l = Matrix(k, k, 0.0);

  const double inv_n = 1.0 / static_cast<double>(n_mc);
  for (std::size_t s = 0; s < n_mc; ++s) {
    const auto [eta, zeta] = sample_standardized(state, rng);
    const Vec g = grad_log_density(engine, model, zeta);  // throws NumericError off-support
    for (std::size_t i = 0; i < k; ++i) {
      out.grad_mu[i] += inv_n * g[i];
      if (state.family == VariationalFamily::MeanField) {
        out.grad_l(i, i) += inv_n * g[i] * eta[i];
      } else {
        for (std::size_t j = 0; j <= i; ++j) out.grad_l(i, j) += inv_n * g[i] * eta[j];
      }
    }
  }
  for (std::size_t i = 0; i < k; ++i) {
    out.grad_l(i, i) += 1.0 / state.l_factor(i, i);
  }
  return out;
}

struct AdviResult {
  VariationalState state;
  std::vector<std::pair<std::size_t, double>> elbo_trace;  // (iteration, elbo)
  bool aborted = false;
  std::string diagnostic;
};

/// Stochastic ELBO ascent with the Robbins-Monro schedule
/// step_t = base_step / (1 + t)^decay (decay in (0.5, 1], so the step
/// sums diverge while their squares converge). A non-finite ELBO or
/// gradient aborts the run and returns the last state that produced a
/// finite ELBO.
inline AdviResult run_advi(const LogDensityModel& model, VariationalFamily family,
                           const AdviConfig& cfg) {
  if (cfg.n_mc_samples < 1) throw std::invalid_argument("AdviConfig: n_mc_samples must be >= 1");
  if (!(cfg.base_step > 0.0)) throw std::invalid_argument("AdviConfig: base_step must be > 0");
  if (!(cfg.step_decay > 0.5 && cfg.step_decay <= 1.0)) {
    throw std::invalid_argument("AdviConfig: step_decay must lie in (0.5, 1]");
  }
  if (cfg.elbo_check_every < 1) {
    throw std::invalid_argument("AdviConfig: elbo_check_every must be >= 1");
  }

  Rng root(cfg.seed);
  Rng grad_rng = root.substream("gradients");
  Rng elbo_rng = root.substream("elbo");

  AdviResult result;
  result.state = VariationalState::initial(model.dim(), family);
  VariationalState last_good = result.state;

  const std::size_t k = model.dim();
  for (std::size_t t = 0; t < cfg.n_iterations; ++t) {
    ElboGradients grads;
    try {
      grads = elbo_gradients(model, result.state, cfg.n_mc_samples, grad_rng);
    } catch (const NumericError& err) {
      result.state = last_good;
      result.aborted = true;
      result.diagnostic = std::string("gradient failure at iteration ") + std::to_string(t) +
                          ": " + err.what();
      return result;
    }
    if (!all_finite(grads.grad_mu) || !all_finite(grads.grad_l.data())) {
      result.state = last_good;
      result.aborted = true;
      result.diagnostic = "non-finite gradient at iteration " + std::to_string(t);
      return result;
    }

    const double step = cfg.base_step / std::pow(1.0 + static_cast<double>(t), cfg.step_decay);
    axpy(step, grads.grad_mu, result.state.mu);
    if (family == VariationalFamily::MeanField) {
      for (std::size_t i = 0; i < k; ++i) {
        result.state.l_factor(i, i) += step * grads.grad_l(i, i);
      }
    } else {
      for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
          result.state.l_factor(i, j) += step * grads.grad_l(i, j);
        }
      }
    }

    if ((t + 1) % cfg.elbo_check_every == 0 || t + 1 == cfg.n_iterations) {
      double elbo;
      try {
        elbo = elbo_estimate(model, result.state, cfg.n_mc_samples, elbo_rng);
      } catch (const NumericError& err) {
        elbo = std::numeric_limits<double>::quiet_NaN();
        (void)err;
      }
      if (!std::isfinite(elbo)) {
        result.state = last_good;
        result.aborted = true;
        result.diagnostic = "non-finite ELBO at iteration " + std::to_string(t + 1);
        return result;
      }
      result.elbo_trace.emplace_back(t + 1, elbo);
      last_good = result.state;
    }
  }
  return result;
}

}  // namespace credence
