#pragma once

#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "uniterp/error.hpp"
#include "uniterp/types.hpp"

namespace uniterp {

/// Uniform background grid for fixed-radius neighbor queries. Cells are
/// cubes of side `cell`; only occupied cells are stored (hashed).
class HashGrid {
public:
  HashGrid(Index dim, double cell) : dim_(dim), cell_(cell) {
    if (dim < 1) throw ShapeError("grid dimension must be >= 1");
    if (!(cell > 0.0) || !std::isfinite(cell)) throw ArgumentError("grid cell size must be positive");
  }

  template <typename Rows>
  static HashGrid build(const Rows& points, double cell) {
    HashGrid grid(points.cols(), cell);
    grid.cells_.reserve(static_cast<std::size_t>(points.rows()) * static_cast<std::size_t>(grid.dim_));
    for (Index i = 0; i < points.rows(); ++i) grid.insert(i, points.row(i));
    return grid;
  }

  template <typename Row>
  void insert(Index id, const Row& p) {
    if (p.size() != dim_) throw ShapeError("grid insert: dimension mismatch");
    const std::size_t slot = ids_.size();
    ids_.push_back(id);
    std::uint64_t h = kSeed;
    for (Index k = 0; k < dim_; ++k) {
      const auto c = cell_of(p(k));
      cells_.push_back(c);
      h = mix(h, c);
    }
    buckets_[h].push_back(slot);
  }

  /// Calls visit(id) for every inserted point whose cell touches the ball of
  /// the given radius around p. Candidates still need a distance check.
  /// Stops early when visit returns false.
  template <typename Row, typename Visit>
  void for_each_near(const Row& p, double radius, Visit&& visit) const {
    if (p.size() != dim_) throw ShapeError("grid query: dimension mismatch");
    if (ids_.empty()) return;
    const auto reach = static_cast<std::int64_t>(std::ceil(radius / cell_));
    std::vector<std::int64_t> lo(static_cast<std::size_t>(dim_));
    std::vector<std::int64_t> cur(static_cast<std::size_t>(dim_));
    for (Index k = 0; k < dim_; ++k) {
      lo[static_cast<std::size_t>(k)] = cell_of(p(k)) - reach;
      cur[static_cast<std::size_t>(k)] = lo[static_cast<std::size_t>(k)];
    }
    const std::int64_t span = 2 * reach + 1;
    for (;;) {
      std::uint64_t h = kSeed;
      for (auto c : cur) h = mix(h, c);
      if (auto it = buckets_.find(h); it != buckets_.end()) {
        for (std::size_t slot : it->second) {
          if (same_cell(slot, cur) && !visit(ids_[slot])) return;
        }
      }
      // Odometer increment over the (2 reach + 1)^d block of cells.
      std::size_t k = 0;
      for (; k < cur.size(); ++k) {
        if (++cur[k] < lo[k] + span) break;
        cur[k] = lo[k];
      }
      if (k == cur.size()) return;
    }
  }

  Index dim() const noexcept { return dim_; }
  double cell() const noexcept { return cell_; }

private:
  static constexpr std::uint64_t kSeed = 0x9e3779b97f4a7c15ULL;

  static std::uint64_t mix(std::uint64_t h, std::int64_t c) {
    std::uint64_t x = h ^ (static_cast<std::uint64_t>(c) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
    x ^= x >> 31;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    return x;
  }

  std::int64_t cell_of(double v) const { return static_cast<std::int64_t>(std::floor(v / cell_)); }

  bool same_cell(std::size_t slot, const std::vector<std::int64_t>& cell) const {
    const std::size_t base = slot * static_cast<std::size_t>(dim_);
    for (std::size_t k = 0; k < cell.size(); ++k) {
      if (cells_[base + k] != cell[k]) return false;
    }
    return true;
  }

  Index dim_;
  double cell_;
  std::vector<Index> ids_;
  std::vector<std::int64_t> cells_;  // cell coordinates per slot, dim_ each
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> buckets_;
};

}  // namespace uniterp
