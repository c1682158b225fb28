#pragma once

// Quadrature evaluation of the Wendland integral definition. This is a test
// oracle for WendlandKernel::profile and deliberately shares no code with it.

#include <cmath>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "uniterp/error.hpp"

namespace uniterp {

namespace detail {

inline double wendland_integral(int m, int n, double r) {
  auto integrand = [m, n, r](double s) {
    return s * std::pow(1.0 - s, m) * std::pow(s * s - r * r, n - 1);
  };
  // Boost's Kronrod error estimate is pessimistic for smooth integrands, so
  // convergence is judged against an independent Gauss-Legendre rule.
  const double value =
      boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, r, 1.0, 15, 1e-9);
  const double check = boost::math::quadrature::gauss<double, 30>::integrate(integrand, r, 1.0);
  if (!std::isfinite(value) || !(std::abs(value - check) <= 1e-12)) {
    throw NumericError("Wendland quadrature did not converge");
  }
  return value;
}

}  // namespace detail

/// phi_{m,n}(r) / phi_{m,n}(0) by adaptive Gauss-Kronrod quadrature of
/// int_r^1 s (1-s)^m (s^2 - r^2)^(n-1) ds. Zero for r >= 1.
inline double reference_eval(int m, int n, double r) {
  if (m < 1 || n < 1) {
    throw DomainError("reference_eval needs m, n >= 1");
  }
  if (r < 0.0) {
    throw DomainError("reference_eval needs r >= 0");
  }
  if (r >= 1.0) {
    return 0.0;
  }
  return detail::wendland_integral(m, n, r) / detail::wendland_integral(m, n, 0.0);
}

}  // namespace uniterp
