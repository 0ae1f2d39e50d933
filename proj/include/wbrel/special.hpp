#pragma once

#include <array>
#include <cmath>
#include <numbers>

#include "wbrel/errors.hpp"

namespace wbrel {

namespace detail {

// Lanczos approximation, g = 7, nine terms (Godfrey's coefficients).
inline constexpr double lanczos_g = 7.0;
inline constexpr std::array<double, 9> lanczos_coef = {
    0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
    771.32342877765313,      -176.61502916214059,   12.507343278686905,
    -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};

inline double log_gamma_lanczos(double x) {
  // Valid for x >= 0.5.
  const double z = x - 1.0;
  double a = lanczos_coef[0];
  for (std::size_t i = 1; i < lanczos_coef.size(); ++i) a += lanczos_coef[i] / (z + static_cast<double>(i));
  const double t = z + lanczos_g + 0.5;
  return 0.5 * std::log(2.0 * std::numbers::pi) + (z + 0.5) * std::log(t) - t + std::log(a);
}

}  // namespace detail

/// ln Gamma(x) for x > 0.
inline double log_gamma_fn(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("log_gamma_fn: argument must be positive and finite");
  if (x < 0.5) return detail::log_gamma_lanczos(x + 1.0) - std::log(x);
  return detail::log_gamma_lanczos(x);
}

/// Digamma psi(x) for x > 0: recurrence up to x >= 10, then the asymptotic series.
inline double digamma_fn(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("digamma_fn: argument must be positive and finite");
  double shift = 0.0;
  while (x < 10.0) {
    shift -= 1.0 / x;
    x += 1.0;
  }
  const double r = 1.0 / (x * x);
  const double series = r * (1.0 / 12 - r * (1.0 / 120 - r * (1.0 / 252 - r * (1.0 / 240 - r / 132))));
  return shift + std::log(x) - 0.5 / x - series;
}

/// log(1 - exp(-x)) for x > 0 without cancellation at either end.
inline double log1mexp(double x) {
  if (x <= 0.0) return -INFINITY;
  if (x < std::numbers::ln2) return std::log(-std::expm1(-x));
  return std::log1p(-std::exp(-x));
}

}  // namespace wbrel
