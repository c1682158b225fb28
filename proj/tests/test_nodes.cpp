#include <cmath>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "uniterp/nodes.hpp"

using namespace uniterp;

namespace {

// O(N^2) scan, independent of the sweep used by PointSet.
std::pair<double, double> brute_stats(const PointMatrix& x) {
  double q = std::numeric_limits<double>::infinity();
  double w = 0.0;
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = i + 1; j < x.rows(); ++j) {
      const double r = (x.row(i) - x.row(j)).norm();
      q = std::min(q, r);
      w = std::max(w, r);
    }
  }
  return {q, w};
}

}  // namespace

TEST(ChebyshevLobatto, SmallSets) {
  const PointSet x2 = chebyshev_lobatto(2);
  EXPECT_EQ(x2.coords()(0, 0), -1.0);
  EXPECT_EQ(x2.coords()(1, 0), 1.0);

  const PointSet x3 = chebyshev_lobatto(3);
  EXPECT_EQ(x3.coords()(0, 0), -1.0);
  EXPECT_EQ(x3.coords()(1, 0), 0.0);
  EXPECT_EQ(x3.coords()(2, 0), 1.0);

  const PointSet x5 = chebyshev_lobatto(5);
  const double h = std::sqrt(2.0) / 2.0;
  const double expect[] = {-1.0, -h, 0.0, h, 1.0};
  for (int k = 0; k < 5; ++k) EXPECT_NEAR(x5.coords()(k, 0), expect[k], 1e-15);
  EXPECT_NEAR(x5.separation(), 1.0 - h, 1e-15);

  EXPECT_THROW(chebyshev_lobatto(1), ArgumentError);
}

TEST(ChebyshevLobatto, AscendingAndCosineValues) {
  const PointSet x = chebyshev_lobatto(33);
  for (Index k = 0; k < 33; ++k) {
    EXPECT_NEAR(x.coords()(k, 0), -std::cos(std::numbers::pi * k / 32.0), 1e-15);
    if (k > 0) EXPECT_LT(x.coords()(k - 1, 0), x.coords()(k, 0));
  }
}

TEST(KteMap, FixedPointsAndSmallAlpha) {
  PointMatrix m(4, 1);
  m << -1.0, 0.0, 0.5, 1.0;
  const PointSet x(m);
  const PointSet y = kte_map(x, 0.9);
  EXPECT_EQ(y.coords()(0, 0), -1.0);
  EXPECT_EQ(y.coords()(1, 0), 0.0);
  EXPECT_EQ(y.coords()(3, 0), 1.0);
  EXPECT_NEAR(kte_map(x, 1e-4).coords()(2, 0), 0.5, 1e-6);
  EXPECT_THROW(kte_map(x, 0.0), ArgumentError);
  EXPECT_THROW(kte_map(x, 1.0), ArgumentError);
}

TEST(HemisphereFibonacci, EquatorPoleAndNorm) {
  const PointSet x = hemisphere_fibonacci(400, 1.5);
  EXPECT_EQ(x.coords()(0, 2), 0.0);
  EXPECT_NEAR(x.coords()(399, 0), 0.0, 1e-15);
  EXPECT_NEAR(x.coords()(399, 1), 0.0, 1e-15);
  EXPECT_EQ(x.coords()(399, 2), 1.0);
  for (Index k = 0; k < x.size(); ++k) {
    EXPECT_NEAR(x.point(k).squaredNorm(), 1.0, 1e-14);
    EXPECT_GE(x.coords()(k, 2), 0.0);
  }
  EXPECT_THROW(hemisphere_fibonacci(10, 1.0), ArgumentError);
}

TEST(HemisphereFibonacci, NearUniformZAsClusteringVanishes) {
  const Index n = 200;
  const PointSet x = hemisphere_fibonacci(n, 1.001);
  double worst = 0.0;
  for (Index k = 1; k < n; ++k) {
    worst = std::max(worst, std::abs(x.coords()(k, 2) - x.coords()(k - 1, 2) - 1.0 / (n - 1)));
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(SphereSpiral, PolesNormAndQuasiUniformity) {
  const PointSet two = sphere_spiral(2);
  EXPECT_EQ(two.coords()(0, 2), -1.0);
  EXPECT_EQ(two.coords()(1, 2), 1.0);
  EXPECT_NEAR(two.separation(), 2.0, 1e-15);

  const Index n = 1000;
  const PointSet x = sphere_spiral(n);
  EXPECT_EQ(x.domain(), DomainTag::sphere);
  for (Index k = 0; k < n; ++k) EXPECT_NEAR(x.point(k).norm(), 1.0, 1e-12);
  const auto [q, w] = brute_stats(x.coords());
  EXPECT_EQ(x.separation(), q);
  const double c = std::sqrt(4.0 * std::numbers::pi / n);
  EXPECT_GE(q, 0.5 * c);
  EXPECT_LE(q, 2.0 * c);
}

TEST(DartThrow, SpacingContainmentAndDeterminism) {
  for (DomainTag tag : {DomainTag::interval, DomainTag::disk, DomainTag::ball}) {
    const double h = tag == DomainTag::interval ? 0.02 : (tag == DomainTag::disk ? 0.08 : 0.2);
    const PointSet x = dart_throw(tag, h, 11);
    const auto [q, w] = brute_stats(x.coords());
    EXPECT_GE(q, 0.75 * h * (1 - 1e-12)) << to_string(tag);
    EXPECT_NEAR(x.separation(), q, 0.0);
    for (Index i = 0; i < x.size(); ++i) EXPECT_LE(x.point(i).norm(), 1.0 + 1e-15);
    const PointSet again = dart_throw(tag, h, 11);
    EXPECT_EQ(again.coords(), x.coords());
    EXPECT_NE(dart_throw(tag, h, 12).coords(), x.coords());
  }
  EXPECT_THROW(dart_throw(DomainTag::sphere, 0.1, 1), ArgumentError);
  EXPECT_THROW(dart_throw(DomainTag::disk, -0.1, 1), ArgumentError);
}

TEST(DartThrow, CountHeuristicLandsNearTarget) {
  for (Index n : {500, 2000}) {
    const PointSet x = dart_throw(DomainTag::disk, dart_spacing_for_count(DomainTag::disk, n), 3);
    EXPECT_GT(x.size(), n * 0.7);
    EXPECT_LT(x.size(), n * 1.3);
  }
}

TEST(GeometryStats, Examples) {
  PointMatrix a(3, 1);
  a << -1, 0, 1;
  const GeometryStats s1 = geometry_stats(PointSet(a));
  EXPECT_EQ(s1.q, 1.0);
  EXPECT_EQ(s1.w, 2.0);

  PointMatrix b(4, 2);
  b << 0, 0, 1, 0, 0, 1, 1, 1;
  const GeometryStats s2 = geometry_stats(PointSet(b));
  EXPECT_EQ(s2.q, 1.0);
  EXPECT_NEAR(s2.w, std::sqrt(2.0), 1e-15);
}

TEST(GeometryStats, MatchesBruteForceOnRandomSets) {
  std::mt19937_64 rng(42);
  for (int d = 1; d <= 3; ++d) {
    PointMatrix x(300, d);
    for (Index i = 0; i < x.rows(); ++i)
      for (int k = 0; k < d; ++k) x(i, k) = detail::unit_uniform(rng) * 3.0 - 1.0;
    const PointSet p(x);
    const auto [q, w] = brute_stats(x);
    EXPECT_EQ(p.separation(), q);
    EXPECT_EQ(p.diameter(), w);
  }
}

TEST(PointSet, RejectsDuplicatesAndOffSphere) {
  PointMatrix dup(3, 2);
  dup << 0, 0, 1, 1, 0, 0;
  EXPECT_THROW(PointSet{dup}, DegenerateInputError);
  PointMatrix off(1, 3);
  off << 1.0, 1e-5, 0.0;
  EXPECT_THROW(PointSet(off, DomainTag::sphere), DomainError);
}

TEST(PointIo, RoundTripIsBitExact) {
  const PointSet x = dart_throw(DomainTag::disk, 0.1, 5);
  std::stringstream ss;
  write_points(ss, x.coords());
  const PointMatrix back = read_point_matrix(ss);
  EXPECT_EQ(back, x.coords());

  std::stringstream bad("2 2\n0 0\n1\n");
  EXPECT_THROW(read_point_matrix(bad), FormatError);
}
