#pragma once

// Scalar special functions for the Gamma family: log-gamma and the
// derivatives psi^{(n)}(x) = d^n/dx^n log Gamma(x).
//
// Convention: polygamma(1, x) is the digamma and polygamma(2, x) the
// trigamma, i.e. the order counts derivatives of log Gamma.  This is the
// off-by-one relative of the usual library convention where "order 1"
// already means the trigamma.

#include <cmath>
#include <stdexcept>
#include <string>

namespace onestep {

inline double log_gamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x))
    throw std::domain_error("log_gamma: x must be positive and finite");
  return std::lgamma(x);
}

namespace detail {

// Asymptotic expansions with Bernoulli-number coefficients, valid for
// large x; callers shift up with the recurrences first.

inline double digamma_asymptotic(double x) {
  const double x2 = 1.0 / (x * x);
  // psi(x) ~ ln x - 1/(2x) - sum B_{2k} / (2k x^{2k})
  double series = x2 * (-1.0 / 12.0 +
                  x2 * (1.0 / 120.0 +
                  x2 * (-1.0 / 252.0 +
                  x2 * (1.0 / 240.0 +
                  x2 * (-1.0 / 132.0 +
                  x2 * (691.0 / 32760.0 +
                  x2 * (-1.0 / 12.0)))))));
  return std::log(x) - 0.5 / x + series;
}

inline double trigamma_asymptotic(double x) {
  const double x2 = 1.0 / (x * x);
  // psi'(x) ~ 1/x + 1/(2x^2) + sum B_{2k} / x^{2k+1}
  double series = (1.0 / x) * x2 * (1.0 / 6.0 +
                  x2 * (-1.0 / 30.0 +
                  x2 * (1.0 / 42.0 +
                  x2 * (-1.0 / 30.0 +
                  x2 * (5.0 / 66.0 +
                  x2 * (-691.0 / 2730.0))))));
  return 1.0 / x + 0.5 * x2 + series;
}

constexpr double kShiftThreshold = 10.0;

}  // namespace detail

inline double digamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x))
    throw std::domain_error("digamma: x must be positive and finite");
  double shift = 0.0;
  while (x < detail::kShiftThreshold) {
    shift -= 1.0 / x;  // psi(x) = psi(x+1) - 1/x
    x += 1.0;
  }
  return detail::digamma_asymptotic(x) + shift;
}

inline double trigamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x))
    throw std::domain_error("trigamma: x must be positive and finite");
  double shift = 0.0;
  while (x < detail::kShiftThreshold) {
    shift += 1.0 / (x * x);  // psi'(x) = psi'(x+1) + 1/x^2
    x += 1.0;
  }
  return detail::trigamma_asymptotic(x) + shift;
}

// Order is the derivative order of log Gamma: 1 -> digamma, 2 -> trigamma.
inline double polygamma(int order, double x) {
  switch (order) {
    case 1:
      return digamma(x);
    case 2:
      return trigamma(x);
    default:
      throw std::domain_error("polygamma: unsupported order " +
                              std::to_string(order));
  }
}

}  // namespace onestep
