#pragma once

#include <cmath>
#include <stdexcept>

namespace credence {

/// Dual-averaging (primal-dual) step-size adaptation driving the average
/// acceptance statistic toward a target value. Call update() once per
/// warmup iteration with the realized acceptance statistic; read
/// step_size() during warmup and adapted_step_size() once warmup ends.
///
/// Shrinkage target mu = log(10 * eps0); gamma = 0.05, t0 = 10,
/// kappa = 0.75.
class DualAveraging {
 public:
  DualAveraging(double target_accept, double init_step_size, double gamma = 0.05,
                double t0 = 10.0, double kappa = 0.75)
      : target_(target_accept),
        gamma_(gamma),
        t0_(t0),
        kappa_(kappa),
        mu_(std::log(10.0 * init_step_size)),
        log_step_(std::log(init_step_size)),
        log_step_avg_(0.0),
        h_avg_(0.0),
        iteration_(0) {
    if (!(target_accept > 0.0 && target_accept < 1.0)) {
      throw std::invalid_argument("DualAveraging: target_accept must lie in (0,1)");
    }
    if (!(init_step_size > 0.0)) {
      throw std::invalid_argument("DualAveraging: init_step_size must be > 0");
    }
  }

  void update(double accept_stat) {
    ++iteration_;
    const double m = static_cast<double>(iteration_);
    const double eta = 1.0 / (m + t0_);
    h_avg_ = (1.0 - eta) * h_avg_ + eta * (target_ - accept_stat);
    log_step_ = mu_ - std::sqrt(m) / gamma_ * h_avg_;
    const double w = std::pow(m, -kappa_);
    log_step_avg_ = w * log_step_ + (1.0 - w) * log_step_avg_;
  }

  /// Current (exploring) step size; use while warmup is running.
  double step_size() const { return std::exp(log_step_); }

  /// Averaged step size; freeze to this value at warmup end.
  double adapted_step_size() const {
    return iteration_ == 0 ? std::exp(log_step_) : std::exp(log_step_avg_);
  }

  std::size_t iterations() const { return iteration_; }

 private:
  double target_;
  double gamma_;
  double t0_;
  double kappa_;
  double mu_;
  double log_step_;
  double log_step_avg_;
  double h_avg_;
  std::size_t iteration_;
};

}  // namespace credence
