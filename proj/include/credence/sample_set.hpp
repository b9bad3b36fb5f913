#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "credence/errors.hpp"
#include "credence/linalg.hpp"
#include "credence/model.hpp"
#include "credence/rng.hpp"

namespace credence {

/// Per-draw sampler metadata. `accept_stat` is the realized Metropolis
/// acceptance probability (for NUTS, the mean acceptance statistic over
/// the trajectory, the quantity step-size adaptation targets).
struct DrawStats {
  bool accepted = false;
  std::uint32_t tree_depth = 0;
  bool divergent = false;
  double energy_error = 0.0;
  double accept_stat = 0.0;
  std::uint32_t chain_id = 0;
};

/// Posterior draws in both coordinate systems plus per-draw metadata.
/// `log_densities` holds the transformed log density the sampler
/// targeted (Jacobian term included).
class SampleSet {
 public:
  SampleSet() : dim_(0) {}
  explicit SampleSet(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t n_draws() const { return log_densities_.size(); }

  void reserve(std::size_t n) {
    unconstrained_.reserve(n * dim_);
    constrained_.reserve(n * dim_);
    log_densities_.reserve(n);
    stats_.reserve(n);
  }

  void add_draw(std::span<const double> zeta, std::span<const double> theta,
                double log_density, const DrawStats& stats) {
    if (zeta.size() != dim_ || theta.size() != dim_) {
      throw std::invalid_argument("SampleSet: draw dimension mismatch");
    }
    if (!std::isfinite(log_density)) {
      throw NumericError("SampleSet: non-finite log density recorded");
    }
    unconstrained_.insert(unconstrained_.end(), zeta.begin(), zeta.end());
    constrained_.insert(constrained_.end(), theta.begin(), theta.end());
    log_densities_.push_back(log_density);
    stats_.push_back(stats);
  }

  std::span<const double> draw(std::size_t i) const {
    return std::span<const double>(unconstrained_.data() + i * dim_, dim_);
  }
  std::span<const double> constrained_draw(std::size_t i) const {
    return std::span<const double>(constrained_.data() + i * dim_, dim_);
  }

  Vec column(std::size_t j) const {
    Vec out(n_draws());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = unconstrained_[i * dim_ + j];
    return out;
  }
  Vec constrained_column(std::size_t j) const {
    Vec out(n_draws());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = constrained_[i * dim_ + j];
    return out;
  }

  const Vec& log_densities() const { return log_densities_; }
  const std::vector<DrawStats>& stats() const { return stats_; }

  bool operator==(const SampleSet& other) const {
    return dim_ == other.dim_ && unconstrained_ == other.unconstrained_ &&
           constrained_ == other.constrained_ && log_densities_ == other.log_densities_ &&
           stats_equal(other);
  }

 private:
  bool stats_equal(const SampleSet& other) const {
    if (stats_.size() != other.stats_.size()) return false;
    for (std::size_t i = 0; i < stats_.size(); ++i) {
      const DrawStats& a = stats_[i];
      const DrawStats& b = other.stats_[i];
      const bool energy_same = (a.energy_error == b.energy_error) ||
                               (std::isnan(a.energy_error) && std::isnan(b.energy_error));
      if (a.accepted != b.accepted || a.tree_depth != b.tree_depth ||
          a.divergent != b.divergent || !energy_same || a.accept_stat != b.accept_stat ||
          a.chain_id != b.chain_id) {
        return false;
      }
    }
    return true;
  }

  std::size_t dim_;
  Vec unconstrained_;  // row-major n x dim
  Vec constrained_;
  Vec log_densities_;
  std::vector<DrawStats> stats_;
};

/// Post-hoc single-threaded concatenation of independently run chains,
/// tagging each draw with its chain id.
inline SampleSet merge_chains(std::span<const SampleSet> chains) {
  if (chains.empty()) throw std::invalid_argument("merge_chains: no chains");
  SampleSet merged(chains[0].dim());
  for (std::size_t c = 0; c < chains.size(); ++c) {
    if (chains[c].dim() != merged.dim()) {
      throw std::invalid_argument("merge_chains: dimension mismatch across chains");
    }
    for (std::size_t i = 0; i < chains[c].n_draws(); ++i) {
      DrawStats s = chains[c].stats()[i];
      s.chain_id = static_cast<std::uint32_t>(c);
      merged.add_draw(chains[c].draw(i), chains[c].constrained_draw(i),
                      chains[c].log_densities()[i], s);
    }
  }
  return merged;
}

namespace detail {

/// Standard-Gaussian initialization in unconstrained coordinates,
/// redrawn until the density is finite (at most 100 attempts).
inline Vec initial_point(const LogDensityModel& model, Rng& rng) {
  for (int attempt = 0; attempt < 100; ++attempt) {
    Vec zeta(model.dim());
    for (double& z : zeta) z = rng.normal();
    if (std::isfinite(transformed_log_density(model, zeta))) return zeta;
  }
  throw NumericError("sampler initialization: no finite-density point in 100 draws");
}

}  // namespace detail

}  // namespace credence
