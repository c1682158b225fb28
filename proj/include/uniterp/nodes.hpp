#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <memory>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "uniterp/error.hpp"
#include "uniterp/grid.hpp"
#include "uniterp/types.hpp"

namespace uniterp {

enum class DomainTag { interval, disk, ball, sphere, hemisphere, torus, custom };

inline std::string_view to_string(DomainTag tag) {
  switch (tag) {
    case DomainTag::interval: return "interval";
    case DomainTag::disk: return "disk";
    case DomainTag::ball: return "ball";
    case DomainTag::sphere: return "sphere";
    case DomainTag::hemisphere: return "hemisphere";
    case DomainTag::torus: return "torus";
    case DomainTag::custom: return "custom";
  }
  return "custom";
}

inline DomainTag domain_from_string(std::string_view s) {
  for (auto tag : {DomainTag::interval, DomainTag::disk, DomainTag::ball, DomainTag::sphere,
                   DomainTag::hemisphere, DomainTag::torus, DomainTag::custom}) {
    if (to_string(tag) == s) return tag;
  }
  throw ArgumentError("unknown domain tag '" + std::string(s) + "'");
}

struct GeometryStats {
  double q;  // minimum pairwise distance
  double w;  // maximum pairwise distance
};

namespace detail {

// Exact minimum pairwise distance by a sweep along the first coordinate.
// Returns +inf for fewer than two points.
inline std::pair<double, std::pair<Index, Index>> min_pair_distance(const PointMatrix& x) {
  const Index n = x.rows();
  double best = std::numeric_limits<double>::infinity();
  std::pair<Index, Index> where{-1, -1};
  if (n < 2) return {best, where};
  std::vector<Index> order(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(), [&](Index a, Index b) { return x(a, 0) < x(b, 0); });
  for (std::size_t a = 0; a < order.size(); ++a) {
    const Index i = order[a];
    for (std::size_t b = a + 1; b < order.size(); ++b) {
      const Index j = order[b];
      if (x(j, 0) - x(i, 0) >= best) break;
      const double d = (x.row(i) - x.row(j)).norm();
      if (d < best) {
        best = d;
        where = {i, j};
      }
    }
  }
  return {best, where};
}

// Maximum pairwise distance. Candidate pairs are pruned with the
// triangle inequality through the centroid.
inline double max_pair_distance(const PointMatrix& x) {
  const Index n = x.rows();
  if (n < 2) return 0.0;
  const Eigen::RowVectorXd centroid = x.colwise().mean();
  std::vector<std::pair<double, Index>> radial(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) radial[static_cast<std::size_t>(i)] = {(x.row(i) - centroid).norm(), i};
  std::sort(radial.begin(), radial.end(), [](auto& a, auto& b) { return a.first > b.first; });
  double best = 0.0;
  for (std::size_t a = 0; a < radial.size(); ++a) {
    if (2.0 * radial[a].first <= best) break;
    for (std::size_t b = a + 1; b < radial.size(); ++b) {
      if (radial[a].first + radial[b].first <= best) break;
      best = std::max(best, (x.row(radial[a].second) - x.row(radial[b].second)).norm());
    }
  }
  return best;
}

}  // namespace detail

/// Immutable set of N distinct points in d dimensions.
///
/// The separation distance q (raw minimum pairwise distance, not half of it)
/// is computed at construction and doubles as the distinctness check. The
/// largest pairwise distance w is computed on first use.
class PointSet {
public:
  PointSet() : cache_(std::make_shared<DiamCache>()) {}

  explicit PointSet(PointMatrix coords, DomainTag tag = DomainTag::custom)
      : coords_(std::move(coords)), tag_(tag), cache_(std::make_shared<DiamCache>()) {
    if (coords_.rows() < 1 || coords_.cols() < 1) {
      throw ShapeError("point set must have at least one point and one dimension");
    }
    if (!coords_.allFinite()) {
      throw DomainError("point coordinates must be finite");
    }
    if (tag_ == DomainTag::sphere || tag_ == DomainTag::hemisphere) {
      if (coords_.cols() != 3) throw ShapeError("sphere/hemisphere points must be 3D");
      for (Index i = 0; i < coords_.rows(); ++i) {
        if (std::abs(coords_.row(i).norm() - 1.0) > 1e-12) {
          throw DomainError("point " + std::to_string(i) + " is not on the unit sphere");
        }
      }
    }
    auto [q, where] = detail::min_pair_distance(coords_);
    if (coords_.rows() >= 2 && !(q > 0.0)) {
      throw DegenerateInputError("duplicate points " + std::to_string(where.first) + " and " +
                                 std::to_string(where.second));
    }
    sep_ = q;
  }

  Index size() const noexcept { return coords_.rows(); }
  Index dim() const noexcept { return coords_.cols(); }
  DomainTag domain() const noexcept { return tag_; }
  const PointMatrix& coords() const noexcept { return coords_; }
  auto point(Index i) const { return coords_.row(i); }

  double separation() const noexcept { return sep_; }

  double diameter() const {
    std::call_once(cache_->once, [this] { cache_->value = detail::max_pair_distance(coords_); });
    return cache_->value;
  }

  Eigen::RowVectorXd lower_bounds() const { return coords_.colwise().minCoeff(); }
  Eigen::RowVectorXd upper_bounds() const { return coords_.colwise().maxCoeff(); }

private:
  struct DiamCache {
    std::once_flag once;
    double value = 0.0;
  };

  PointMatrix coords_;
  DomainTag tag_ = DomainTag::custom;
  double sep_ = std::numeric_limits<double>::infinity();
  std::shared_ptr<DiamCache> cache_;
};

inline GeometryStats geometry_stats(const PointSet& points) {
  if (points.size() < 2) throw ArgumentError("geometry_stats needs at least two points");
  return {points.separation(), points.diameter()};
}

// ---------------------------------------------------------------------------
// Generators

/// Chebyshev extrema on [-1, 1], ascending. Uses the sine form so that the
/// set is exactly symmetric and contains 0 for odd N.
inline PointSet chebyshev_lobatto(Index n) {
  if (n < 2) throw ArgumentError("chebyshev_lobatto needs N >= 2");
  PointMatrix x(n, 1);
  const double m = static_cast<double>(n - 1);
  for (Index k = 0; k < n; ++k) {
    x(k, 0) = std::sin(std::numbers::pi * (2.0 * static_cast<double>(k) - m) / (2.0 * m));
  }
  return PointSet(std::move(x), DomainTag::interval);
}

/// Kosloff-Tal-Ezer map x -> asin(alpha x) / asin(alpha), applied coordinatewise.
inline PointSet kte_map(const PointSet& points, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ArgumentError("KTE alpha must lie in (0, 1)");
  if ((points.coords().array().abs() > 1.0).any()) {
    throw DomainError("KTE map expects coordinates in [-1, 1]");
  }
  const double denom = std::asin(alpha);
  PointMatrix y = points.coords().unaryExpr([&](double v) { return std::asin(alpha * v) / denom; });
  return PointSet(std::move(y), points.domain());
}

/// Fibonacci-like nodes on the upper unit hemisphere, clustered toward the
/// equator by the exponent `q_cluster` > 1.
inline PointSet hemisphere_fibonacci(Index n, double q_cluster) {
  if (n < 2) throw ArgumentError("hemisphere_fibonacci needs N >= 2");
  if (!(q_cluster > 1.0)) throw ArgumentError("clustering exponent must be > 1");
  const double golden = (std::sqrt(5.0) - 1.0) / 2.0;
  PointMatrix x(n, 3);
  for (Index k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(n - 1);
    const double z = 1.0 - std::pow(1.0 - t, q_cluster);
    const double azimuth = 2.0 * std::numbers::pi * golden * static_cast<double>(k);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    x.row(k) << r * std::cos(azimuth), r * std::sin(azimuth), z;
  }
  return PointSet(std::move(x), DomainTag::hemisphere);
}

/// Generalized spiral points on the unit sphere (Rakhmanov-Saff-Zhou).
inline PointSet sphere_spiral(Index n) {
  if (n < 2) throw ArgumentError("sphere_spiral needs N >= 2");
  PointMatrix x(n, 3);
  const double nn = static_cast<double>(n);
  double theta = 0.0;
  for (Index k = 0; k < n; ++k) {
    const double z = -1.0 + 2.0 * static_cast<double>(k) / (nn - 1.0);
    if (k == 0 || k == n - 1) {
      theta = 0.0;
      x.row(k) << 0.0, 0.0, (k == 0 ? -1.0 : 1.0);
      continue;
    }
    theta = std::fmod(theta + 3.6 / std::sqrt(nn * (1.0 - z * z)), 2.0 * std::numbers::pi);
    const double r = std::sqrt(1.0 - z * z);
    x.row(k) << r * std::cos(theta), r * std::sin(theta), z;
  }
  return PointSet(std::move(x), DomainTag::sphere);
}

namespace detail {

// Portable uniform double in [0, 1) from a 64-bit engine.
inline double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline Index domain_dim(DomainTag tag) {
  switch (tag) {
    case DomainTag::interval: return 1;
    case DomainTag::disk: return 2;
    case DomainTag::ball: return 3;
    default: throw ArgumentError("dart throwing supports interval, disk and ball only");
  }
}

class DartBoard {
public:
  DartBoard(Index dim, double cell) : dim_(dim), grid_(dim, cell) {}

  bool clear_of(const Eigen::RowVectorXd& p, double radius) const {
    bool ok = true;
    grid_.for_each_near(p, radius, [&](Index j) {
      if ((pts_[static_cast<std::size_t>(j)] - p).norm() < radius) ok = false;
      return ok;
    });
    return ok;
  }

  void add(const Eigen::RowVectorXd& p) {
    grid_.insert(static_cast<Index>(pts_.size()), p);
    pts_.push_back(p);
  }

  Index size() const { return static_cast<Index>(pts_.size()); }

  PointMatrix matrix() const {
    PointMatrix out(size(), dim_);
    for (Index i = 0; i < size(); ++i) out.row(i) = pts_[static_cast<std::size_t>(i)];
    return out;
  }

private:
  Index dim_;
  HashGrid grid_;
  std::vector<Eigen::RowVectorXd> pts_;
};

inline Eigen::RowVectorXd random_unit_vector(Index dim, std::mt19937_64& rng) {
  // Marsaglia-style rejection from the cube keeps the draw portable.
  Eigen::RowVectorXd v(dim);
  for (;;) {
    for (Index k = 0; k < dim; ++k) v(k) = 2.0 * unit_uniform(rng) - 1.0;
    const double n2 = v.squaredNorm();
    if (n2 > 1e-6 && n2 <= 1.0) return v / std::sqrt(n2);
  }
}

}  // namespace detail

/// Seeded Poisson-disk sampling of [-1,1], the unit disk or the unit ball.
///
/// Boundary nodes are placed first at spacing 0.75h; interior candidates are
/// drawn uniformly and kept when at least h away from every accepted point.
/// Sampling stops after `max_misses` consecutive rejections.
inline PointSet dart_throw(DomainTag domain, double h, std::uint64_t seed, Index max_misses = 4000) {
  if (!(h > 0.0)) throw ArgumentError("dart_throw needs h > 0");
  const Index dim = detail::domain_dim(domain);
  const double hb = 0.75 * h;
  std::mt19937_64 rng(seed);
  detail::DartBoard board(dim, h);

  // Boundary.
  if (domain == DomainTag::interval) {
    if (2.0 < hb) throw GenerationError("h too large for the interval");
    board.add(Eigen::RowVectorXd::Constant(1, -1.0));
    board.add(Eigen::RowVectorXd::Constant(1, 1.0));
  } else if (domain == DomainTag::disk) {
    if (hb > 2.0) throw GenerationError("h too large for the unit disk");
    // Largest count whose chord is still >= 0.75h.
    Index nb = std::max<Index>(2, static_cast<Index>(std::floor(std::numbers::pi / std::asin(std::min(1.0, hb / 2.0)))));
    while (nb > 2 && 2.0 * std::sin(std::numbers::pi / static_cast<double>(nb)) < hb) --nb;
    const double offset = 2.0 * std::numbers::pi * detail::unit_uniform(rng);
    for (Index k = 0; k < nb; ++k) {
      const double t = offset + 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(nb);
      Eigen::RowVectorXd p(2);
      p << std::cos(t), std::sin(t);
      board.add(p);
    }
  } else {
    Index misses = 0;
    while (misses < max_misses) {
      Eigen::RowVectorXd p = detail::random_unit_vector(3, rng);
      if (board.clear_of(p, hb)) {
        board.add(p);
        misses = 0;
      } else {
        ++misses;
      }
    }
  }
  const Index boundary_count = board.size();

  Index misses = 0;
  Eigen::RowVectorXd p(dim);
  while (misses < max_misses) {
    for (Index k = 0; k < dim; ++k) p(k) = 2.0 * detail::unit_uniform(rng) - 1.0;
    if (p.squaredNorm() > 1.0) continue;  // outside the domain, not a miss
    if (board.clear_of(p, h)) {
      board.add(p);
      misses = 0;
    } else {
      ++misses;
    }
  }
  if (board.size() == 0 || (board.size() == boundary_count && boundary_count < 2)) {
    throw GenerationError("dart throwing placed no points");
  }
  return PointSet(board.matrix(), domain);
}

/// Spacing h that makes dart_throw produce roughly `n` points, from the
/// random-sequential-adsorption jamming densities in 1, 2 and 3 dimensions.
inline double dart_spacing_for_count(DomainTag domain, Index n) {
  if (n < 2) throw ArgumentError("target count must be >= 2");
  const double nn = static_cast<double>(n);
  switch (detail::domain_dim(domain)) {
    case 1: return 2.0 * 0.7476 / nn;
    case 2: return std::sqrt(4.0 * 0.547 / nn);  // area pi, disk area pi h^2 / 4
    default: return std::cbrt(8.0 * 0.384 / nn);  // volume 4pi/3, ball volume pi h^3 / 6
  }
}

// ---------------------------------------------------------------------------
// Point files: "d N" header, then N rows of d coordinates at 17 digits.

inline void write_points(std::ostream& os, const PointMatrix& x) {
  os << x.cols() << ' ' << x.rows() << '\n';
  char buf[40];
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index k = 0; k < x.cols(); ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", x(i, k));
      if (k) os << ' ';
      os << buf;
    }
    os << '\n';
  }
}

inline void write_points(const std::string& path, const PointSet& points) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot open '" + path + "' for writing");
  write_points(os, points.coords());
  if (!os) throw FormatError("write to '" + path + "' failed");
}

inline PointMatrix read_point_matrix(std::istream& is) {
  long d = 0;
  long n = 0;
  if (!(is >> d >> n) || d < 1 || n < 1) throw FormatError("point file header must be 'd N' with d, N >= 1");
  PointMatrix x(n, d);
  for (long i = 0; i < n; ++i) {
    for (long k = 0; k < d; ++k) {
      if (!(is >> x(i, k))) {
        throw FormatError("point file truncated at point " + std::to_string(i));
      }
    }
  }
  std::string extra;
  if (is >> extra) throw FormatError("trailing data after " + std::to_string(n) + " points");
  return x;
}

inline PointSet read_points(const std::string& path, DomainTag tag = DomainTag::custom) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open point file '" + path + "'");
  return PointSet(read_point_matrix(is), tag);
}

}  // namespace uniterp
