#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "credence/ad.hpp"
#include "credence/errors.hpp"
#include "credence/linalg.hpp"
#include "credence/model.hpp"

namespace credence {

enum class GradientMode { Analytic, FiniteDifference };

/// Computes grad_zeta [log p(x, T^{-1}(zeta)) + log|det J_{T^{-1}}(zeta)|].
///
/// Analytic mode records the model's elementary operations on a per-call
/// tape and reverse-accumulates; FiniteDifference mode runs central
/// differences with a per-coordinate step max(fd_step, fd_step*|zeta_i|).
struct GradientEngine {
  GradientMode mode = GradientMode::Analytic;
  double fd_step = 1e-5;
};

namespace detail {

inline Vec grad_analytic(const LogDensityModel& model, std::span<const double> zeta) {
  ad::Tape tape;
  tape.reserve(64 + 8 * model.dim());
  std::vector<ad::Var> zeta_vars;
  zeta_vars.reserve(zeta.size());
  for (const double z : zeta) zeta_vars.push_back(ad::leaf(tape, z));

  const std::vector<ad::Var> theta_vars =
      model.transform().inverse_generic<ad::Var>(zeta_vars);
  const ad::Var density =
      model.log_joint_ad(theta_vars) +
      model.transform().log_abs_det_jacobian_inverse_generic<ad::Var>(zeta_vars);

  const std::vector<double> adj = tape.adjoints(density.index());
  Vec grad(zeta.size());
  for (std::size_t i = 0; i < zeta.size(); ++i) {
    grad[i] = adj[static_cast<std::size_t>(zeta_vars[i].index())];
  }
  return grad;
}

inline Vec grad_finite_difference(const LogDensityModel& model, std::span<const double> zeta,
                                  double fd_step) {
  Vec point(zeta.begin(), zeta.end());
  Vec grad(zeta.size());
  for (std::size_t i = 0; i < zeta.size(); ++i) {
    const double h = std::max(fd_step, fd_step * std::abs(point[i]));
    const double saved = point[i];
    point[i] = saved + h;
    const double up = transformed_log_density(model, point);
    point[i] = saved - h;
    const double down = transformed_log_density(model, point);
    point[i] = saved;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

}  // namespace detail

inline Vec grad_log_density(const GradientEngine& engine, const LogDensityModel& model,
                            std::span<const double> zeta) {
  if (engine.fd_step <= 0.0) throw std::invalid_argument("GradientEngine: fd_step must be > 0");
  if (zeta.size() != model.dim()) {
    throw std::invalid_argument("grad_log_density: dimension mismatch");
  }
  if (!std::isfinite(transformed_log_density(model, zeta))) {
    std::string msg = "grad_log_density: non-finite density at zeta = [";
    for (std::size_t i = 0; i < zeta.size(); ++i) {
      msg += (i ? ", " : "") + std::to_string(zeta[i]);
    }
    throw NumericError(msg + "]");
  }
  return engine.mode == GradientMode::Analytic
             ? detail::grad_analytic(model, zeta)
             : detail::grad_finite_difference(model, zeta, engine.fd_step);
}

inline Vec grad_log_density(const GradientEngine& engine, const LogDensityModel& model,
                            const ParamPoint& zeta) {
  if (zeta.space != Space::Unconstrained) {
    throw std::invalid_argument("grad_log_density: point must be unconstrained");
  }
  return grad_log_density(engine, model, std::span<const double>(zeta.values));
}

struct GradientCheckReport {
  double max_rel_error = 0.0;
  bool pass = false;
};

/// Compares the analytic gradient against central finite differences,
/// componentwise. Components with |g| < 1e-8 are compared absolutely.
/// Failures (including non-finite evaluations) are reported, not thrown.
inline GradientCheckReport check_gradient(const LogDensityModel& model,
                                          std::span<const double> zeta, double tol) {
  GradientCheckReport report;
  try {
    const Vec analytic = grad_log_density({GradientMode::Analytic, 1e-5}, model, zeta);
    const Vec fd = grad_log_density({GradientMode::FiniteDifference, 1e-5}, model, zeta);
    for (std::size_t i = 0; i < analytic.size(); ++i) {
      if (!std::isfinite(analytic[i]) || !std::isfinite(fd[i])) {
        report.max_rel_error = std::numeric_limits<double>::infinity();
        report.pass = false;
        return report;
      }
      const double scale = std::abs(fd[i]);
      const double err = scale < 1e-8 ? std::abs(analytic[i] - fd[i])
                                      : std::abs(analytic[i] - fd[i]) / scale;
      report.max_rel_error = std::max(report.max_rel_error, err);
    }
    report.pass = report.max_rel_error <= tol;
  } catch (const std::exception&) {
    report.max_rel_error = std::numeric_limits<double>::infinity();
    report.pass = false;
  }
  return report;
}

inline GradientCheckReport check_gradient(const LogDensityModel& model, const ParamPoint& zeta,
                                          double tol) {
  return check_gradient(model, std::span<const double>(zeta.values), tol);
}

}  // namespace credence
