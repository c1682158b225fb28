#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "uniterp/error.hpp"
#include "uniterp/nodes.hpp"
#include "uniterp/types.hpp"

namespace uniterp {

/// Values of the Legendre polynomials P_0..P_degree at x, by the three-term
/// recurrence (k+1) P_{k+1} = (2k+1) x P_k - k P_{k-1}.
inline void legendre_values(double x, int degree, double* out) {
  out[0] = 1.0;
  if (degree >= 1) out[1] = x;
  for (int k = 1; k < degree; ++k) {
    out[k + 1] = ((2.0 * k + 1.0) * x * out[k] - k * out[k - 1]) / (k + 1.0);
  }
}

inline double legendre(int degree, double x) {
  std::vector<double> v(static_cast<std::size_t>(degree) + 1);
  legendre_values(x, degree, v.data());
  return v.back();
}

inline std::int64_t binomial(std::int64_t n, std::int64_t k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::int64_t r = 1;
  for (std::int64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

/// floor(scale * N^(1/d)), nudged so exact d-th powers are not lost to
/// rounding in pow().
inline int degree_from_points(Index n, Index d, double scale) {
  if (n < 1 || d < 1) throw ArgumentError("degree_from_points needs N, d >= 1");
  if (!(scale > 0.0)) throw ArgumentError("degree scale must be positive");
  const double root = std::pow(static_cast<double>(n), 1.0 / static_cast<double>(d));
  const double x = scale * root;
  return static_cast<int>(std::floor(x + 1e-9 * std::max(1.0, x)));
}

/// Default C(d) in l = floor(C N^(1/d)): 0.8 in 2D, 1 otherwise.
inline double default_degree_scale(Index d) { return d == 2 ? 0.8 : 1.0; }

/// Total-degree tensor-product Legendre basis with an affine map of a box
/// onto [-1, 1]^d.
///
/// Multi-indices are ordered by total degree, then by decreasing exponent of
/// the first variable, then the second, and so on: for d = 2, l = 2 the order
/// is 00, 10, 01, 20, 11, 02.
class TotalDegreeBasis {
public:
  TotalDegreeBasis(Index dim, int degree, Eigen::RowVectorXd lo, Eigen::RowVectorXd hi)
      : dim_(dim), degree_(degree), lo_(std::move(lo)), hi_(std::move(hi)) {
    if (dim < 1) throw ArgumentError("basis dimension must be >= 1");
    if (degree < 0) throw ArgumentError("polynomial degree must be >= 0");
    if (lo_.size() != dim || hi_.size() != dim) throw ShapeError("rescale box has wrong dimension");
    for (Index k = 0; k < dim; ++k) {
      if (!(hi_(k) >= lo_(k))) throw DomainError("rescale box has hi < lo");
    }
    std::vector<int> current(static_cast<std::size_t>(dim), 0);
    for (int total = 0; total <= degree; ++total) enumerate(0, total, current);
  }

  Index dim() const noexcept { return dim_; }
  int degree() const noexcept { return degree_; }
  Index size() const noexcept { return static_cast<Index>(indices_.size() / static_cast<std::size_t>(dim_)); }
  const Eigen::RowVectorXd& lower() const noexcept { return lo_; }
  const Eigen::RowVectorXd& upper() const noexcept { return hi_; }

  /// Exponent of variable k in basis function j.
  int exponent(Index j, Index k) const {
    return indices_[static_cast<std::size_t>(j * dim_ + k)];
  }

  std::vector<int> multi_index(Index j) const {
    auto first = indices_.begin() + static_cast<std::ptrdiff_t>(j * dim_);
    return {first, first + static_cast<std::ptrdiff_t>(dim_)};
  }

  /// Affine map of coordinate k onto [-1, 1]; degenerate axes map to 0.
  double rescale(Index k, double x) const {
    const double width = hi_(k) - lo_(k);
    if (width == 0.0) return 0.0;
    return (2.0 * x - (hi_(k) + lo_(k))) / width;
  }

private:
  void enumerate(Index k, int remaining, std::vector<int>& current) {
    if (k == dim_ - 1) {
      current[static_cast<std::size_t>(k)] = remaining;
      indices_.insert(indices_.end(), current.begin(), current.end());
      return;
    }
    for (int e = remaining; e >= 0; --e) {
      current[static_cast<std::size_t>(k)] = e;
      enumerate(k + 1, remaining - e, current);
    }
  }

  Index dim_;
  int degree_;
  Eigen::RowVectorXd lo_;
  Eigen::RowVectorXd hi_;
  std::vector<int> indices_;
};

/// Basis of the given degree whose rescale box is the bounding box of `points`.
inline TotalDegreeBasis build_basis(const PointSet& points, int degree) {
  if (points.size() < 1) throw ArgumentError("build_basis needs a nonempty point set");
  return TotalDegreeBasis(points.dim(), degree, points.lower_bounds(), points.upper_bounds());
}

/// K x M matrix of basis evaluations at the rows of `points` (rescaled first).
/// Points outside the fitting box are extrapolated.
template <typename Rows>
Matrix vandermonde(const TotalDegreeBasis& basis, const Rows& points) {
  if (points.cols() != basis.dim()) {
    throw ShapeError("vandermonde: points have dimension " + std::to_string(points.cols()) +
                     ", basis has " + std::to_string(basis.dim()));
  }
  const Index n = points.rows();
  const Index d = basis.dim();
  const Index m = basis.size();
  const int deg = basis.degree();
  Matrix v(n, m);
  // table(k, e) = P_e(xhat_k) for the current point
  std::vector<double> table(static_cast<std::size_t>(d * (deg + 1)));
  for (Index i = 0; i < n; ++i) {
    for (Index k = 0; k < d; ++k) {
      legendre_values(basis.rescale(k, points(i, k)), deg, table.data() + k * (deg + 1));
    }
    for (Index j = 0; j < m; ++j) {
      double prod = 1.0;
      for (Index k = 0; k < d; ++k) prod *= table[static_cast<std::size_t>(k * (deg + 1) + basis.exponent(j, k))];
      v(i, j) = prod;
    }
  }
  return v;
}

inline Matrix vandermonde(const TotalDegreeBasis& basis, const PointSet& points) {
  return vandermonde(basis, points.coords());
}

}  // namespace uniterp
