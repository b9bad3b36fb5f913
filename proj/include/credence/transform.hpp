#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "credence/ad.hpp"
#include "credence/linalg.hpp"

namespace credence {

/// Per-coordinate change of variables between a constrained parameter
/// space and the unconstrained reals.
///
///   Identity:  zeta = theta                (theta in R)
///   Log:       zeta = log(theta)           (theta > 0)
///   Logit:     zeta = log(theta/(1-theta)) (theta in (0,1))
enum class ElementTransform { Identity, Log, Logit };

/// Invertible map T with theta = T^{-1}(zeta) applied elementwise, plus
/// the log absolute determinant of the inverse-map Jacobian. The inverse
/// and Jacobian paths are generic over the scalar type so the gradient
/// engine can trace them.
class Transform {
 public:
  explicit Transform(std::vector<ElementTransform> kinds) : kinds_(std::move(kinds)) {}

  std::size_t dim() const { return kinds_.size(); }
  const std::vector<ElementTransform>& kinds() const { return kinds_; }

  Vec forward(std::span<const double> theta) const {
    check_dim(theta.size());
    Vec zeta(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) {
      switch (kinds_[i]) {
        case ElementTransform::Identity:
          zeta[i] = theta[i];
          break;
        case ElementTransform::Log:
          zeta[i] = std::log(theta[i]);
          break;
        case ElementTransform::Logit:
          zeta[i] = std::log(theta[i]) - std::log1p(-theta[i]);
          break;
      }
    }
    return zeta;
  }

  Vec inverse(std::span<const double> zeta) const {
    return inverse_generic<double>(zeta);
  }

  double log_abs_det_jacobian_inverse(std::span<const double> zeta) const {
    return log_abs_det_jacobian_inverse_generic<double>(zeta);
  }

  template <class S>
  std::vector<S> inverse_generic(std::span<const S> zeta) const {
    using std::exp;
    check_dim(zeta.size());
    std::vector<S> theta;
    theta.reserve(zeta.size());
    for (std::size_t i = 0; i < zeta.size(); ++i) {
      switch (kinds_[i]) {
        case ElementTransform::Identity:
          theta.push_back(zeta[i]);
          break;
        case ElementTransform::Log:
          theta.push_back(exp(zeta[i]));
          break;
        case ElementTransform::Logit:
          theta.push_back(logistic(zeta[i]));
          break;
      }
    }
    return theta;
  }

  template <class S>
  S log_abs_det_jacobian_inverse_generic(std::span<const S> zeta) const {
    check_dim(zeta.size());
    S total = S(0.0);
    for (std::size_t i = 0; i < zeta.size(); ++i) {
      switch (kinds_[i]) {
        case ElementTransform::Identity:
          break;
        case ElementTransform::Log:
          // d/dzeta exp(zeta) = exp(zeta), so log|J| accumulates zeta.
          total += zeta[i];
          break;
        case ElementTransform::Logit:
          // log sigma(z) + log sigma(-z), written via softplus for stability.
          total += -softplus(-zeta[i]) - softplus(zeta[i]);
          break;
      }
    }
    return total;
  }

 private:
  void check_dim(std::size_t n) const {
    if (n != kinds_.size()) {
      throw std::invalid_argument("Transform: dimension mismatch");
    }
  }

  std::vector<ElementTransform> kinds_;
};

inline Transform make_identity_transform(std::size_t dim) {
  return Transform(std::vector<ElementTransform>(dim, ElementTransform::Identity));
}

/// Elementwise theta = exp(zeta) for positive-constrained parameters;
/// log|det J_inv| = sum_i zeta_i.
inline Transform make_log_transform(std::size_t dim) {
  if (dim < 1) throw std::invalid_argument("make_log_transform: dim must be >= 1");
  return Transform(std::vector<ElementTransform>(dim, ElementTransform::Log));
}

/// Elementwise theta = logistic(zeta) for (0,1)-constrained parameters.
inline Transform make_logit_transform(std::size_t dim) {
  if (dim < 1) throw std::invalid_argument("make_logit_transform: dim must be >= 1");
  return Transform(std::vector<ElementTransform>(dim, ElementTransform::Logit));
}

}  // namespace credence
