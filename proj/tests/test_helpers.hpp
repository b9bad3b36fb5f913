#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>

#include "credence/linalg.hpp"

namespace credence::testing {

/// Composite Simpson quadrature; n is the (even) number of subintervals.
inline double simpson(const std::function<double(double)>& f, double a, double b,
                      std::size_t n = 1 << 14) {
  if (n % 2 == 1) ++n;
  const double h = (b - a) / static_cast<double>(n);
  double sum = f(a) + f(b);
  for (std::size_t i = 1; i < n; ++i) {
    sum += f(a + static_cast<double>(i) * h) * (i % 2 == 1 ? 4.0 : 2.0);
  }
  return sum * h / 3.0;
}

/// E[f(Z)] for Z ~ N(mu, sigma^2) by quadrature over mu +- 12 sigma.
inline double gaussian_expectation(const std::function<double(double)>& f, double mu,
                                   double sigma, std::size_t n = 1 << 14) {
  const double lo = mu - 12.0 * sigma;
  const double hi = mu + 12.0 * sigma;
  const double norm = 1.0 / (sigma * std::sqrt(2.0 * M_PI));
  return simpson(
      [&](double z) {
        const double u = (z - mu) / sigma;
        return f(z) * norm * std::exp(-0.5 * u * u);
      },
      lo, hi, n);
}

inline double sample_correlation(std::span<const double> x, std::span<const double> y) {
  const double mx = mean(x);
  const double my = mean(y);
  double cxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) cxy += (x[i] - mx) * (y[i] - my);
  cxy /= static_cast<double>(x.size() - 1);
  return cxy / (stddev(x) * stddev(y));
}

}  // namespace credence::testing
