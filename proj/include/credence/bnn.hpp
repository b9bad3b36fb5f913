#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "credence/advi.hpp"
#include "credence/dataset.hpp"
#include "credence/diagnostics.hpp"
#include "credence/linalg.hpp"
#include "credence/model.hpp"
#include "credence/rng.hpp"
#include "credence/sample_set.hpp"

namespace credence {

enum class Activation { Tanh, Logistic };

/// Fully connected binary classifier: tanh (or logistic) hidden layers,
/// one logistic output unit, independent N(0, prior_std^2) priors on
/// every weight and bias. `input_log_transform` maps each input
/// through log(1 + x), which keeps the always-queried value 0 finite.
struct BnnArchitecture {
  std::size_t input_dim = 1;
  std::vector<std::size_t> hidden_layers{5};
  Activation activation = Activation::Tanh;
  double prior_std = 1.0;
  bool input_log_transform = false;

  void validate() const {
    if (input_dim < 1) throw std::invalid_argument("BnnArchitecture: input_dim must be >= 1");
    for (const std::size_t h : hidden_layers) {
      if (h < 1) throw std::invalid_argument("BnnArchitecture: layer sizes must be >= 1");
    }
    if (!(prior_std > 0.0)) throw std::invalid_argument("BnnArchitecture: prior_std must be > 0");
  }

  /// [input_dim, hidden..., 1]
  std::vector<std::size_t> layer_sizes() const {
    std::vector<std::size_t> sizes{input_dim};
    sizes.insert(sizes.end(), hidden_layers.begin(), hidden_layers.end());
    sizes.push_back(1);
    return sizes;
  }

  std::size_t n_layers() const { return hidden_layers.size() + 1; }

  /// Flat packing: layer by layer, unit-major weights then biases.
  std::size_t n_weights() const {
    const auto sizes = layer_sizes();
    std::size_t total = 0;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
      total += sizes[l] * sizes[l + 1] + sizes[l + 1];
    }
    return total;
  }

  /// Coarse tag for reporting: first layer "input", last "output",
  /// anything between "hidden".
  std::string layer_tag(std::size_t layer) const {
    if (layer == 0) return "input";
    if (layer + 1 == n_layers()) return "output";
    return "hidden";
  }

  /// Layer owning flat weight index `i`.
  std::size_t layer_of_weight(std::size_t i) const {
    const auto sizes = layer_sizes();
    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
      offset += sizes[l] * sizes[l + 1] + sizes[l + 1];
      if (i < offset) return l;
    }
    throw std::invalid_argument("BnnArchitecture: weight index out of range");
  }
};

/// All layer weights and biases in the architecture's flat packing.
struct WeightVector {
  Vec flat;
};

namespace detail {

template <class S>
S bnn_preactivation(const BnnArchitecture& arch, std::span<const S> weights,
                    std::span<const double> x) {
  using std::tanh;
  const auto sizes = arch.layer_sizes();
  std::vector<S> current;
  current.reserve(sizes[0]);
  for (const double xi : x) {
    current.push_back(S(arch.input_log_transform ? std::log1p(xi) : xi));
  }

  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const std::size_t fan_in = sizes[l];
    const std::size_t fan_out = sizes[l + 1];
    const std::size_t bias_offset = offset + fan_in * fan_out;
    std::vector<S> next;
    next.reserve(fan_out);
    for (std::size_t u = 0; u < fan_out; ++u) {
      S a = weights[bias_offset + u];
      for (std::size_t j = 0; j < fan_in; ++j) {
        a += weights[offset + u * fan_in + j] * current[j];
      }
      if (l + 2 < sizes.size()) {
        next.push_back(arch.activation == Activation::Tanh ? tanh(a) : logistic(a));
      } else {
        next.push_back(a);  // output unit stays on the logit scale
      }
    }
    current = std::move(next);
    offset = bias_offset + fan_out;
  }
  return current[0];
}

}  // namespace detail

/// Deterministic forward pass; returns the output-class probability.
inline double bnn_forward(const BnnArchitecture& arch, const WeightVector& weights,
                          std::span<const double> x) {
  arch.validate();
  if (x.size() != arch.input_dim) throw std::invalid_argument("bnn_forward: input dim mismatch");
  if (weights.flat.size() != arch.n_weights()) {
    throw std::invalid_argument("bnn_forward: weight vector length mismatch");
  }
  return logistic(detail::bnn_preactivation<double>(arch, weights.flat, x));
}

/// Bernoulli likelihood plus Gaussian weight prior as a LogDensityModel
/// over the flat weight vector (identity transform, weights are
/// unconstrained).
///
/// Identical (row, label) pairs are grouped and their log-likelihood
/// terms weighted by multiplicity; the sum is unchanged and repeated
/// query values (integer-valued datasets) evaluate once per distinct row.
inline LogDensityModel bnn_log_joint(const BnnArchitecture& arch, const Dataset& data) {
  arch.validate();
  if (!data.labels) throw std::invalid_argument("bnn_log_joint: dataset has no labels");
  if (!data.labels_are_binary()) {
    throw std::invalid_argument("bnn_log_joint: labels must be binary 0/1");
  }
  if (data.n_features() != arch.input_dim) {
    throw std::invalid_argument("bnn_log_joint: feature count does not match input_dim");
  }

  std::map<std::pair<Vec, double>, double> grouped;
  for (std::size_t i = 0; i < data.n_rows(); ++i) {
    Vec row(data.features.row(i).begin(), data.features.row(i).end());
    grouped[{std::move(row), (*data.labels)[i]}] += 1.0;
  }
  struct Group {
    Vec x;
    double y;
    double count;
  };
  std::vector<Group> groups;
  groups.reserve(grouped.size());
  for (const auto& [key, count] : grouped) groups.push_back({key.first, key.second, count});

  const std::size_t n_w = arch.n_weights();
  const double prior_var = arch.prior_std * arch.prior_std;
  const double prior_norm = -0.5 * static_cast<double>(n_w) *
                            std::log(2.0 * std::numbers::pi * prior_var);

  return LogDensityModel(
      n_w,
      [arch, groups = std::move(groups), prior_var, prior_norm]<class S>(
          std::span<const S> w) -> S {
        S total = S(prior_norm);
        for (const auto& g : groups) {
          const S a = detail::bnn_preactivation<S>(arch, w, g.x);
          // y*a - softplus(a) == y log p + (1-y) log(1-p) for p = logistic(a)
          total += g.count * (g.y * a - softplus(a));
        }
        S prior = S(0.0);
        for (const S& wi : w) prior += wi * wi;
        total += (-0.5 / prior_var) * prior;
        return total;
      },
      make_identity_transform(n_w));
}

struct PredictiveSummary {
  double mean_prob = 0.0;
  double std_prob = 0.0;
  double hpd_low = 0.0;
  double hpd_high = 0.0;
};

/// Weight draws as a matrix, one row per posterior draw.
inline Matrix draws_from(const SampleSet& samples) {
  Matrix m(samples.n_draws(), samples.dim());
  for (std::size_t i = 0; i < samples.n_draws(); ++i) {
    const auto row = samples.constrained_draw(i);
    for (std::size_t j = 0; j < samples.dim(); ++j) m(i, j) = row[j];
  }
  return m;
}

/// Synthesizes weight draws from a fitted variational state.
inline Matrix draws_from(const VariationalState& state, std::size_t n, Rng& rng) {
  Matrix m(n, state.dim());
  for (std::size_t i = 0; i < n; ++i) {
    const auto [eta, zeta] = sample_standardized(state, rng);
    for (std::size_t j = 0; j < state.dim(); ++j) m(i, j) = zeta[j];
  }
  return m;
}

namespace detail {

/// Picks n_draws row indices: evenly strided when enough draws are
/// available, resampled with replacement otherwise.
inline std::vector<std::size_t> select_draw_indices(std::size_t available, std::size_t n_draws,
                                                    Rng& rng) {
  if (available == 0) throw std::invalid_argument("posterior_predictive: no posterior draws");
  if (n_draws == 0) throw std::invalid_argument("posterior_predictive: n_draws must be >= 1");
  std::vector<std::size_t> indices(n_draws);
  if (n_draws <= available) {
    for (std::size_t i = 0; i < n_draws; ++i) indices[i] = i * available / n_draws;
  } else {
    for (std::size_t i = 0; i < n_draws; ++i) {
      indices[i] = static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<std::int64_t>(available) - 1));
    }
  }
  return indices;
}

inline PredictiveSummary summarize_probs(std::span<const double> probs, double hpd_mass) {
  PredictiveSummary s;
  s.mean_prob = mean(probs);
  s.std_prob = stddev(probs);
  if (probs.size() >= 10) {
    const HpdInterval interval = hpd(probs, hpd_mass);
    s.hpd_low = interval.low;
    s.hpd_high = interval.high;
  } else {
    s.hpd_low = *std::min_element(probs.begin(), probs.end());
    s.hpd_high = *std::max_element(probs.begin(), probs.end());
  }
  return s;
}

}  // namespace detail

/// Per query row: forward-evaluates n_draws posterior weight draws and
/// summarizes the resulting probabilities (mean, spread, 90% HPD by
/// default).
inline std::vector<PredictiveSummary> posterior_predictive(const BnnArchitecture& arch,
                                                           const Matrix& weight_draws,
                                                           const Matrix& x_new,
                                                           std::size_t n_draws, Rng& rng,
                                                           double hpd_mass = 0.9) {
  arch.validate();
  if (weight_draws.cols() != arch.n_weights()) {
    throw std::invalid_argument("posterior_predictive: draw matrix width != weight count");
  }
  if (x_new.cols() != arch.input_dim) {
    throw std::invalid_argument("posterior_predictive: query dim mismatch");
  }
  const std::vector<std::size_t> indices =
      detail::select_draw_indices(weight_draws.rows(), n_draws, rng);

  std::vector<PredictiveSummary> out;
  out.reserve(x_new.rows());
  Vec probs(indices.size());
  for (std::size_t q = 0; q < x_new.rows(); ++q) {
    const auto x = x_new.row(q);
    for (std::size_t d = 0; d < indices.size(); ++d) {
      probs[d] = logistic(
          detail::bnn_preactivation<double>(arch, weight_draws.row(indices[d]), x));
    }
    out.push_back(detail::summarize_probs(probs, hpd_mass));
  }
  return out;
}

struct BoundaryGrid {
  Matrix points;                            // one row per grid node
  std::vector<PredictiveSummary> summaries;  // aligned with points
};

/// Uniform grid over [lo, hi] (per axis; 1- and 2-input models only)
/// with the posterior predictive evaluated at every node.
inline BoundaryGrid decision_boundary_grid(const BnnArchitecture& arch,
                                           const Matrix& weight_draws, double lo, double hi,
                                           std::size_t resolution, std::size_t n_draws,
                                           Rng& rng) {
  arch.validate();
  if (arch.input_dim > 2) {
    throw std::invalid_argument("decision_boundary_grid: only 1D and 2D inputs supported");
  }
  if (resolution < 2) throw std::invalid_argument("decision_boundary_grid: resolution must be >= 2");

  const double step = (hi - lo) / static_cast<double>(resolution - 1);
  BoundaryGrid grid;
  if (arch.input_dim == 1) {
    grid.points = Matrix(resolution, 1);
    for (std::size_t i = 0; i < resolution; ++i) {
      grid.points(i, 0) = lo + static_cast<double>(i) * step;
    }
  } else {
    grid.points = Matrix(resolution * resolution, 2);
    for (std::size_t i = 0; i < resolution; ++i) {
      for (std::size_t j = 0; j < resolution; ++j) {
        grid.points(i * resolution + j, 0) = lo + static_cast<double>(i) * step;
        grid.points(i * resolution + j, 1) = lo + static_cast<double>(j) * step;
      }
    }
  }
  grid.summaries = posterior_predictive(arch, weight_draws, grid.points, n_draws, rng);
  return grid;
}

struct WeightSummary {
  std::string layer;
  std::size_t index = 0;
  double mean = 0.0;
  double stddev = 0.0;
  double hpd_low = 0.0;
  double hpd_high = 0.0;
};

/// Per-weight posterior location and spread, tagged by layer.
inline std::vector<WeightSummary> weight_posterior_summary(const BnnArchitecture& arch,
                                                           const Matrix& weight_draws,
                                                           double hpd_mass = 0.9) {
  arch.validate();
  if (weight_draws.cols() != arch.n_weights()) {
    throw std::invalid_argument("weight_posterior_summary: draw matrix width != weight count");
  }
  std::vector<WeightSummary> out;
  out.reserve(weight_draws.cols());
  Vec column(weight_draws.rows());
  for (std::size_t j = 0; j < weight_draws.cols(); ++j) {
    for (std::size_t i = 0; i < weight_draws.rows(); ++i) column[i] = weight_draws(i, j);
    WeightSummary s;
    s.layer = arch.layer_tag(arch.layer_of_weight(j));
    s.index = j;
    s.mean = mean(column);
    s.stddev = stddev(column);
    if (column.size() >= 10) {
      const HpdInterval interval = hpd(column, hpd_mass);
      s.hpd_low = interval.low;
      s.hpd_high = interval.high;
    } else {
      s.hpd_low = *std::min_element(column.begin(), column.end());
      s.hpd_high = *std::max_element(column.begin(), column.end());
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace credence
