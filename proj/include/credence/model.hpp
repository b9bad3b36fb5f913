#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "credence/ad.hpp"
#include "credence/linalg.hpp"
#include "credence/transform.hpp"

namespace credence {

enum class Space { Constrained, Unconstrained };

/// A parameter vector tagged with the coordinate space it lives in.
/// Entries are validated to be finite on construction.
struct ParamPoint {
  Vec values;
  Space space;

  ParamPoint(Vec v, Space s) : values(std::move(v)), space(s) {
    if (!all_finite(values)) {
      throw std::invalid_argument("ParamPoint: entries must be finite");
    }
  }

  std::size_t size() const { return values.size(); }
};

inline ParamPoint constrained(Vec v) { return ParamPoint(std::move(v), Space::Constrained); }
inline ParamPoint unconstrained(Vec v) { return ParamPoint(std::move(v), Space::Unconstrained); }

/// The target density every sampler and ADVI consumes: an unnormalized
/// log joint log p(x, theta) over constrained parameters (data is closed
/// over at construction) plus the transform to unconstrained space.
///
/// The log joint is stored twice, instantiated from one generic functor:
/// a plain double path and an ad::Var path for the gradient engine.
/// Evaluations outside the support must return -infinity, never NaN.
/// Models carry no mutable state, so concurrent read-only evaluation
/// from multiple chains is safe.
class LogDensityModel {
 public:
  template <class F>
  LogDensityModel(std::size_t dim, F log_joint_fn, Transform transform)
      : dim_(dim),
        transform_(std::move(transform)),
        log_joint_(log_joint_fn),
        log_joint_ad_(log_joint_fn) {
    if (dim == 0) throw std::invalid_argument("LogDensityModel: dim must be positive");
    if (transform_.dim() != dim) {
      throw std::invalid_argument("LogDensityModel: transform dimension mismatch");
    }
  }

  std::size_t dim() const { return dim_; }
  const Transform& transform() const { return transform_; }

  double log_joint(std::span<const double> theta) const {
    check_dim(theta.size());
    const double v = log_joint_(theta);
    return std::isnan(v) ? -std::numeric_limits<double>::infinity() : v;
  }

  ad::Var log_joint_ad(std::span<const ad::Var> theta) const {
    check_dim(theta.size());
    return log_joint_ad_(theta);
  }

 private:
  void check_dim(std::size_t n) const {
    if (n != dim_) throw std::invalid_argument("LogDensityModel: dimension mismatch");
  }

  std::size_t dim_;
  Transform transform_;
  std::function<double(std::span<const double>)> log_joint_;
  std::function<ad::Var(std::span<const ad::Var>)> log_joint_ad_;
};

/// log p(x, T^{-1}(zeta)) + log|det J_{T^{-1}}(zeta)| -- the density all
/// samplers target in unconstrained coordinates.
inline double transformed_log_density(const LogDensityModel& model,
                                      std::span<const double> zeta) {
  if (zeta.size() != model.dim()) {
    throw std::invalid_argument("transformed_log_density: dimension mismatch");
  }
  const Vec theta = model.transform().inverse(zeta);
  const double lj = model.log_joint(theta);
  if (!std::isfinite(lj)) return -std::numeric_limits<double>::infinity();
  return lj + model.transform().log_abs_det_jacobian_inverse(zeta);
}

inline double transformed_log_density(const LogDensityModel& model, const ParamPoint& zeta) {
  if (zeta.space != Space::Unconstrained) {
    throw std::invalid_argument("transformed_log_density: point must be unconstrained");
  }
  return transformed_log_density(model, std::span<const double>(zeta.values));
}

/// Posterior density of the heads probability for h heads and t tails
/// under a uniform prior: ((h+t+1)! / (h! t!)) r^h (1-r)^t. Factorials
/// go through lgamma so large counts do not overflow.
inline double coin_posterior_density(double r, std::uint64_t heads, std::uint64_t tails) {
  if (!(r >= 0.0 && r <= 1.0)) {
    throw std::invalid_argument("coin_posterior_density: r must lie in [0,1]");
  }
  const double h = static_cast<double>(heads);
  const double t = static_cast<double>(tails);
  double log_density = std::lgamma(h + t + 2.0) - std::lgamma(h + 1.0) - std::lgamma(t + 1.0);
  if (heads > 0) log_density += h * std::log(r);      // -inf at r = 0, exp gives 0
  if (tails > 0) log_density += t * std::log1p(-r);
  return std::exp(log_density);
}

}  // namespace credence
