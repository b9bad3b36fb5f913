#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "credence/dataset.hpp"
#include "credence/linalg.hpp"
#include "credence/model.hpp"
#include "credence/transform.hpp"

namespace credence {

enum class ConjugateKind { BetaBernoulli, DirichletCategorical, GammaPoisson };

/// Closed-form posterior from the discrete conjugate families, used as
/// ground truth against the samplers and ADVI.
///
/// Parameter layout: Beta {alpha, beta}; Dirichlet {alpha_1..alpha_K};
/// Gamma {shape, rate} (shape-rate, not shape-scale).
struct ConjugatePosterior {
  ConjugateKind kind;
  Vec params;

  /// Posterior mean of the modeled quantity (simplex mean for Dirichlet).
  Vec mean() const {
    switch (kind) {
      case ConjugateKind::BetaBernoulli:
        return {params[0] / (params[0] + params[1])};
      case ConjugateKind::GammaPoisson:
        return {params[0] / params[1]};
      case ConjugateKind::DirichletCategorical: {
        const double total = std::accumulate(params.begin(), params.end(), 0.0);
        Vec m(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) m[i] = params[i] / total;
        return m;
      }
    }
    throw std::logic_error("ConjugatePosterior: unknown kind");
  }

  Vec variance() const {
    switch (kind) {
      case ConjugateKind::BetaBernoulli: {
        const double a = params[0], b = params[1], s = a + b;
        return {a * b / (s * s * (s + 1.0))};
      }
      case ConjugateKind::GammaPoisson:
        return {params[0] / (params[1] * params[1])};
      case ConjugateKind::DirichletCategorical: {
        const double total = std::accumulate(params.begin(), params.end(), 0.0);
        Vec v(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
          v[i] = params[i] * (total - params[i]) / (total * total * (total + 1.0));
        }
        return v;
      }
    }
    throw std::logic_error("ConjugatePosterior: unknown kind");
  }

  /// Density of component `i`. Beta and Gamma have a single component;
  /// for Dirichlet this is the Beta(alpha_i, alpha_0 - alpha_i) marginal.
  double marginal_density(std::size_t i, double x) const {
    switch (kind) {
      case ConjugateKind::BetaBernoulli:
        if (i != 0) throw std::invalid_argument("marginal_density: Beta has one component");
        return beta_density(params[0], params[1], x);
      case ConjugateKind::GammaPoisson: {
        if (i != 0) throw std::invalid_argument("marginal_density: Gamma has one component");
        const double shape = params[0], rate = params[1];
        if (x <= 0.0) return 0.0;
        return std::exp(shape * std::log(rate) - std::lgamma(shape) +
                        (shape - 1.0) * std::log(x) - rate * x);
      }
      case ConjugateKind::DirichletCategorical: {
        if (i >= params.size()) throw std::invalid_argument("marginal_density: index out of range");
        const double total = std::accumulate(params.begin(), params.end(), 0.0);
        return beta_density(params[i], total - params[i], x);
      }
    }
    throw std::logic_error("ConjugatePosterior: unknown kind");
  }

  double density(double x) const { return marginal_density(0, x); }

 private:
  static double beta_density(double a, double b, double x) {
    if (x <= 0.0 || x >= 1.0) return 0.0;
    return std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                    (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x));
  }
};

/// Beta(a0 + heads, b0 + tails). The prior hyperparameters act as
/// pseudo-counts (a0 - 1 prior successes), so the uniform Beta(1,1)
/// prior with h heads and t tails reproduces the closed-form coin
/// posterior exactly.
inline ConjugatePosterior beta_bernoulli_posterior(double alpha0, double beta0,
                                                   std::uint64_t heads, std::uint64_t tails) {
  if (!(alpha0 > 0.0 && beta0 > 0.0)) {
    throw std::invalid_argument("beta_bernoulli_posterior: hyperparameters must be > 0");
  }
  return {ConjugateKind::BetaBernoulli,
          {alpha0 + static_cast<double>(heads), beta0 + static_cast<double>(tails)}};
}

inline ConjugatePosterior dirichlet_categorical_posterior(std::span<const double> alpha0,
                                                          std::span<const std::uint64_t> counts) {
  if (alpha0.size() != counts.size()) {
    throw std::invalid_argument("dirichlet_categorical_posterior: length mismatch");
  }
  Vec params(alpha0.size());
  for (std::size_t i = 0; i < alpha0.size(); ++i) {
    if (!(alpha0[i] > 0.0)) {
      throw std::invalid_argument("dirichlet_categorical_posterior: alphas must be > 0");
    }
    params[i] = alpha0[i] + static_cast<double>(counts[i]);
  }
  return {ConjugateKind::DirichletCategorical, std::move(params)};
}

inline ConjugatePosterior gamma_poisson_posterior(double alpha0, double beta0,
                                                  std::uint64_t total_events,
                                                  std::uint64_t n_intervals) {
  if (!(alpha0 > 0.0 && beta0 > 0.0)) {
    throw std::invalid_argument("gamma_poisson_posterior: hyperparameters must be > 0");
  }
  return {ConjugateKind::GammaPoisson,
          {alpha0 + static_cast<double>(total_events), beta0 + static_cast<double>(n_intervals)}};
}

/// Beta-Bernoulli log joint over p in (0,1), sampled through the
/// log-odds transform.
inline LogDensityModel beta_bernoulli_model(double alpha0, double beta0, std::uint64_t heads,
                                            std::uint64_t tails) {
  if (!(alpha0 > 0.0 && beta0 > 0.0)) {
    throw std::invalid_argument("beta_bernoulli_model: hyperparameters must be > 0");
  }
  const double a = alpha0 + static_cast<double>(heads);
  const double b = beta0 + static_cast<double>(tails);
  return LogDensityModel(
      1,
      [a, b]<class S>(std::span<const S> theta) -> S {
        using std::log;
        const double p = ad::value_of(theta[0]);
        if (!(p > 0.0 && p < 1.0)) return S(-std::numeric_limits<double>::infinity());
        return (a - 1.0) * log(theta[0]) + (b - 1.0) * log(S(1.0) - theta[0]);
      },
      make_logit_transform(1));
}

/// Gamma-Poisson log joint over the rate lambda > 0, sampled through the
/// log transform.
inline LogDensityModel gamma_poisson_model(double alpha0, double beta0, std::uint64_t total_events,
                                           std::uint64_t n_intervals) {
  if (!(alpha0 > 0.0 && beta0 > 0.0)) {
    throw std::invalid_argument("gamma_poisson_model: hyperparameters must be > 0");
  }
  const double shape = alpha0 + static_cast<double>(total_events);
  const double rate = beta0 + static_cast<double>(n_intervals);
  return LogDensityModel(
      1,
      [shape, rate]<class S>(std::span<const S> theta) -> S {
        using std::log;
        if (!(ad::value_of(theta[0]) > 0.0)) return S(-std::numeric_limits<double>::infinity());
        return (shape - 1.0) * log(theta[0]) - rate * theta[0];
      },
      make_log_transform(1));
}

/// Dirichlet-Categorical posterior in its Gamma representation: K
/// independent Gamma(alpha_k + c_k, 1) coordinates theta, so that
/// theta / sum(theta) is exactly Dirichlet(alpha + c). Constrained draws
/// live in R+^K; normalize with dirichlet_from_gamma to land on the
/// simplex. This keeps the transform elementwise (log) instead of
/// requiring a simplex map.
inline LogDensityModel dirichlet_categorical_model(Vec alpha0, std::vector<std::uint64_t> counts) {
  if (alpha0.size() != counts.size()) {
    throw std::invalid_argument("dirichlet_categorical_model: length mismatch");
  }
  if (alpha0.empty()) throw std::invalid_argument("dirichlet_categorical_model: empty alphas");
  Vec shapes(alpha0.size());
  for (std::size_t i = 0; i < alpha0.size(); ++i) {
    if (!(alpha0[i] > 0.0)) {
      throw std::invalid_argument("dirichlet_categorical_model: alphas must be > 0");
    }
    shapes[i] = alpha0[i] + static_cast<double>(counts[i]);
  }
  const std::size_t dim = shapes.size();
  return LogDensityModel(
      dim,
      [shapes]<class S>(std::span<const S> theta) -> S {
        using std::log;
        S total = S(0.0);
        for (std::size_t i = 0; i < theta.size(); ++i) {
          if (!(ad::value_of(theta[i]) > 0.0)) {
            return S(-std::numeric_limits<double>::infinity());
          }
          total += (shapes[i] - 1.0) * log(theta[i]) - theta[i];
        }
        return total;
      },
      make_log_transform(dim));
}

inline Vec dirichlet_from_gamma(std::span<const double> gamma_point) {
  double total = 0.0;
  for (const double g : gamma_point) total += g;
  Vec simplex(gamma_point.size());
  for (std::size_t i = 0; i < simplex.size(); ++i) simplex[i] = gamma_point[i] / total;
  return simplex;
}

struct ConjugateModelSpec {
  ConjugateKind kind;
  Vec prior;  // Beta/Gamma: {a, b}; Dirichlet: alphas
};

/// Builds the sampler-ready log joint for a conjugate likelihood from
/// raw observations (single feature column: Bernoulli outcomes in
/// {0,1}, Poisson counts per interval, or category indices 0..K-1).
inline LogDensityModel as_log_density_model(const ConjugateModelSpec& spec, const Dataset& data) {
  if (data.n_rows() > 0 && data.n_features() != 1) {
    throw std::invalid_argument("as_log_density_model: expected a single observation column");
  }
  switch (spec.kind) {
    case ConjugateKind::BetaBernoulli: {
      if (spec.prior.size() != 2) {
        throw std::invalid_argument("as_log_density_model: Beta prior needs {alpha, beta}");
      }
      std::uint64_t heads = 0, tails = 0;
      for (std::size_t i = 0; i < data.n_rows(); ++i) {
        const double y = data.features(i, 0);
        if (y == 1.0) {
          ++heads;
        } else if (y == 0.0) {
          ++tails;
        } else {
          throw std::invalid_argument("as_log_density_model: Bernoulli outcomes must be 0 or 1");
        }
      }
      return beta_bernoulli_model(spec.prior[0], spec.prior[1], heads, tails);
    }
    case ConjugateKind::GammaPoisson: {
      if (spec.prior.size() != 2) {
        throw std::invalid_argument("as_log_density_model: Gamma prior needs {shape, rate}");
      }
      std::uint64_t events = 0;
      for (std::size_t i = 0; i < data.n_rows(); ++i) {
        const double y = data.features(i, 0);
        if (y < 0.0 || y != std::floor(y)) {
          throw std::invalid_argument("as_log_density_model: Poisson counts must be integers >= 0");
        }
        events += static_cast<std::uint64_t>(y);
      }
      return gamma_poisson_model(spec.prior[0], spec.prior[1], events, data.n_rows());
    }
    case ConjugateKind::DirichletCategorical: {
      if (spec.prior.empty()) {
        throw std::invalid_argument("as_log_density_model: Dirichlet prior needs alphas");
      }
      std::vector<std::uint64_t> counts(spec.prior.size(), 0);
      for (std::size_t i = 0; i < data.n_rows(); ++i) {
        const double y = data.features(i, 0);
        if (y < 0.0 || y != std::floor(y) || y >= static_cast<double>(counts.size())) {
          throw std::invalid_argument("as_log_density_model: category index out of range");
        }
        ++counts[static_cast<std::size_t>(y)];
      }
      return dirichlet_categorical_model(spec.prior, counts);
    }
  }
  throw std::invalid_argument("as_log_density_model: unsupported kind");
}

}  // namespace credence
