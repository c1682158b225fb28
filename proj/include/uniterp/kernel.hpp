#pragma once

#include <cmath>
#include <string>
#include <string_view>

#include "uniterp/error.hpp"

namespace uniterp {

/// Compactly supported Wendland kernel phi_{m,n} from the family that is
/// positive definite on R^3 (m = n + 2), normalized so that phi(0) = 1.
///
/// `order` n selects the smoothness C^{2n}; `eps` is the shape parameter,
/// the reciprocal of the support radius in point coordinates.
class WendlandKernel {
public:
  WendlandKernel(int order, double eps) : order_(order), eps_(eps) {
    if (order < 1 || order > 3) {
      throw DomainError("Wendland order must be 1, 2 or 3, got " + std::to_string(order));
    }
    if (!(eps > 0.0) || !std::isfinite(eps)) {
      throw DomainError("shape parameter must be positive and finite");
    }
  }

  int order() const noexcept { return order_; }
  double eps() const noexcept { return eps_; }
  double support_radius() const noexcept { return 1.0 / eps_; }

  // Exponent m of the (1 - r)^m factor in the integral definition.
  int power() const noexcept { return order_ + 2; }

  /// Closed polynomial form in the scaled radius r = eps * dist.
  static double profile(int order, double r) noexcept {
    if (r >= 1.0) {
      return 0.0;
    }
    const double s = 1.0 - r;
    const double s2 = s * s;
    const double s4 = s2 * s2;
    switch (order) {
      case 1:
        return s4 * (4.0 * r + 1.0);
      case 2:
        return s4 * s2 * ((35.0 * r + 18.0) * r + 3.0) / 3.0;
      default:
        return s4 * s4 * (((32.0 * r + 25.0) * r + 8.0) * r + 1.0);
    }
  }

  double operator()(double dist) const { return eval(dist); }

  double eval(double dist) const {
    if (dist < 0.0 || std::isnan(dist)) {
      throw DomainError("kernel distance must be nonnegative");
    }
    return profile(order_, eps_ * dist);
  }

  // Hot-loop variant for callers that already know dist >= 0.
  double eval_unchecked(double dist) const noexcept { return profile(order_, eps_ * dist); }

  /// "c2" | "c4" | "c6".
  std::string id() const { return "c" + std::to_string(2 * order_); }

private:
  int order_;
  double eps_;
};

inline double eval(const WendlandKernel& kernel, double dist) { return kernel.eval(dist); }

inline int kernel_order_from_id(std::string_view id) {
  if (id == "c2") return 1;
  if (id == "c4") return 2;
  if (id == "c6") return 3;
  throw ArgumentError("unknown kernel id '" + std::string(id) + "' (expected c2, c4 or c6)");
}

inline WendlandKernel kernel_from_id(std::string_view id, double eps) {
  return WendlandKernel(kernel_order_from_id(id), eps);
}

}  // namespace uniterp
