#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "uniterp/error.hpp"
#include "uniterp/grid.hpp"
#include "uniterp/kernel.hpp"
#include "uniterp/nodes.hpp"
#include "uniterp/types.hpp"

namespace uniterp {

using SparseColMajor = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
using SparseRowMajor = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;

/// Symmetric sparse matrix stored as its lower triangle (diagonal
/// included) in compressed-row form.
class SparseSymmetric {
public:
  SparseSymmetric() = default;
  explicit SparseSymmetric(SparseRowMajor lower) : lower_(std::move(lower)) {
    lower_.makeCompressed();
  }

  Index n() const noexcept { return lower_.rows(); }
  // Stored (lower-triangle) nonzeros.
  Index nnz() const noexcept { return lower_.nonZeros(); }
  const SparseRowMajor& lower() const noexcept { return lower_; }

  double coeff(Index i, Index j) const {
    return i >= j ? lower_.coeff(i, j) : lower_.coeff(j, i);
  }

  Vector multiply(const Vector& x) const {
    if (x.size() != n()) throw ShapeError("SparseSymmetric::multiply: size mismatch");
    return lower_.selfadjointView<Eigen::Lower>() * x;
  }

  Matrix to_dense() const {
    Matrix lo = Matrix(lower_);
    Matrix full = lo + lo.transpose();
    full.diagonal() = lo.diagonal();
    return full;
  }

  bool is_identity() const {
    if (nnz() != n()) return false;
    for (Index i = 0; i < n(); ++i) {
      if (lower_.coeff(i, i) != 1.0) return false;
    }
    return true;
  }

  double max_abs() const {
    double m = 0.0;
    for (Index k = 0; k < lower_.outerSize(); ++k) {
      for (SparseRowMajor::InnerIterator it(lower_, k); it; ++it) m = std::max(m, std::abs(it.value()));
    }
    return m;
  }

private:
  SparseRowMajor lower_;
};

/// Kernel Gramian A_ij = phi(eps |x_i - x_j|) over all pairs inside the
/// support radius, found with a background grid whose cell is the radius.
inline SparseSymmetric assemble_gramian(const PointSet& points, const WendlandKernel& kernel) {
  const Index n = points.size();
  const double radius = kernel.support_radius();
  std::vector<Eigen::Triplet<double, int>> trips;
  trips.reserve(static_cast<std::size_t>(n));
  if (radius <= points.separation()) {
    for (Index i = 0; i < n; ++i) trips.emplace_back(static_cast<int>(i), static_cast<int>(i), 1.0);
  } else {
    const PointMatrix& x = points.coords();
    const HashGrid grid = HashGrid::build(x, radius);
    std::vector<std::pair<int, double>> row;
    for (Index i = 0; i < n; ++i) {
      row.clear();
      grid.for_each_near(x.row(i), radius, [&](Index j) {
        if (j < i) {
          const double dist = (x.row(i) - x.row(j)).norm();
          if (dist < radius) {
            const double v = kernel.eval_unchecked(dist);
            if (v != 0.0) row.emplace_back(static_cast<int>(j), v);
          }
        }
        return true;
      });
      std::sort(row.begin(), row.end());
      for (auto [j, v] : row) trips.emplace_back(static_cast<int>(i), j, v);
      trips.emplace_back(static_cast<int>(i), static_cast<int>(i), 1.0);
    }
  }
  SparseRowMajor lower(n, n);
  lower.setFromTriplets(trips.begin(), trips.end());
  return SparseSymmetric(std::move(lower));
}

/// Rectangular kernel matrix between evaluation points (rows) and centers.
template <typename Rows>
SparseRowMajor assemble_cross(const Rows& eval_points, const PointSet& centers, const WendlandKernel& kernel) {
  if (eval_points.cols() != centers.dim()) throw ShapeError("assemble_cross: dimension mismatch");
  const Index ne = eval_points.rows();
  const double radius = kernel.support_radius();
  const PointMatrix& x = centers.coords();
  const HashGrid grid = HashGrid::build(x, radius);
  std::vector<Eigen::Triplet<double, int>> trips;
  std::vector<std::pair<int, double>> row;
  for (Index i = 0; i < ne; ++i) {
    row.clear();
    const Eigen::RowVectorXd p = eval_points.row(i);
    grid.for_each_near(p, radius, [&](Index j) {
      const double dist = (p - x.row(j)).norm();
      if (dist < radius) {
        const double v = kernel.eval_unchecked(dist);
        if (v != 0.0) row.emplace_back(static_cast<int>(j), v);
      }
      return true;
    });
    std::sort(row.begin(), row.end());
    for (auto [j, v] : row) trips.emplace_back(static_cast<int>(i), j, v);
  }
  SparseRowMajor out(ne, centers.size());
  out.setFromTriplets(trips.begin(), trips.end());
  out.makeCompressed();
  return out;
}

inline SparseRowMajor assemble_cross(const PointSet& eval_points, const PointSet& centers, const WendlandKernel& kernel) {
  return assemble_cross(eval_points.coords(), centers, kernel);
}

// ---------------------------------------------------------------------------
// Reverse Cuthill-McKee ordering

/// order[k] = original index placed at position k.
template <typename SymPattern>
std::vector<int> reverse_cuthill_mckee(const SymPattern& full) {
  const int n = static_cast<int>(full.rows());
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  for (int k = 0; k < full.outerSize(); ++k) {
    for (typename SymPattern::InnerIterator it(full, k); it; ++it) {
      const int i = static_cast<int>(it.row());
      const int j = static_cast<int>(it.col());
      if (i != j) adj[static_cast<std::size_t>(i)].push_back(j);
    }
  }
  std::vector<int> degree(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    auto& a = adj[static_cast<std::size_t>(i)];
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
    degree[static_cast<std::size_t>(i)] = static_cast<int>(a.size());
  }
  for (auto& a : adj) {
    std::stable_sort(a.begin(), a.end(), [&](int u, int v) { return degree[static_cast<std::size_t>(u)] < degree[static_cast<std::size_t>(v)]; });
  }

  std::vector<int> level(static_cast<std::size_t>(n), -1);
  // BFS from `root` over unvisited nodes; returns the last node of the deepest level.
  auto farthest = [&](int root, const std::vector<char>& done) {
    std::fill(level.begin(), level.end(), -1);
    std::queue<int> queue;
    queue.push(root);
    level[static_cast<std::size_t>(root)] = 0;
    int last = root;
    while (!queue.empty()) {
      const int u = queue.front();
      queue.pop();
      const int lu = level[static_cast<std::size_t>(u)];
      const int ll = level[static_cast<std::size_t>(last)];
      if (lu > ll || (lu == ll && degree[static_cast<std::size_t>(u)] < degree[static_cast<std::size_t>(last)])) last = u;
      for (int v : adj[static_cast<std::size_t>(u)]) {
        if (!done[static_cast<std::size_t>(v)] && level[static_cast<std::size_t>(v)] < 0) {
          level[static_cast<std::size_t>(v)] = lu + 1;
          queue.push(v);
        }
      }
    }
    return std::pair{last, level[static_cast<std::size_t>(last)]};
  };

  std::vector<char> done(static_cast<std::size_t>(n), 0);
  std::vector<int> order;
  order.reserve(static_cast<std::size_t>(n));
  std::vector<int> by_degree(static_cast<std::size_t>(n));
  std::iota(by_degree.begin(), by_degree.end(), 0);
  std::stable_sort(by_degree.begin(), by_degree.end(), [&](int u, int v) { return degree[static_cast<std::size_t>(u)] < degree[static_cast<std::size_t>(v)]; });

  for (int seed : by_degree) {
    if (done[static_cast<std::size_t>(seed)]) continue;
    // Pseudo-peripheral start node.
    int start = seed;
    int depth = -1;
    for (int pass = 0; pass < 4; ++pass) {
      auto [far, d] = farthest(start, done);
      if (d <= depth) break;
      depth = d;
      start = far;
    }
    std::queue<int> queue;
    queue.push(start);
    done[static_cast<std::size_t>(start)] = 1;
    while (!queue.empty()) {
      const int u = queue.front();
      queue.pop();
      order.push_back(u);
      for (int v : adj[static_cast<std::size_t>(u)]) {
        if (!done[static_cast<std::size_t>(v)]) {
          done[static_cast<std::size_t>(v)] = 1;
          queue.push(v);
        }
      }
    }
  }
  std::reverse(order.begin(), order.end());
  return order;
}

/// Ordering functor in the form SimplicialLLT expects. Eigen treats the
/// returned permutation as the inverse one, so perm.indices()(k) is the
/// original index that ends up at position k.
template <typename StorageIndex>
struct RcmOrdering {
  using PermutationType = Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, StorageIndex>;

  template <typename MatrixType>
  void operator()(const MatrixType& mat, PermutationType& perm) {
    const std::vector<int> order = reverse_cuthill_mckee(mat);
    perm.resize(static_cast<Index>(order.size()));
    for (std::size_t k = 0; k < order.size(); ++k) perm.indices()(static_cast<Index>(k)) = static_cast<StorageIndex>(order[k]);
  }
};

// ---------------------------------------------------------------------------
// Cholesky

/// P A P^T = L L^T with L sparse lower triangular and P a fill-reducing
/// (reverse Cuthill-McKee) symmetric permutation.
class CholeskyFactor {
public:
  using Permutation = Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int>;

  CholeskyFactor(SparseColMajor l, Permutation p) : l_(std::move(l)), p_(std::move(p)) {}

  Index n() const noexcept { return l_.rows(); }
  const SparseColMajor& L() const noexcept { return l_; }
  const Permutation& P() const noexcept { return p_; }
  Index nnz() const noexcept { return l_.nonZeros(); }

  Matrix permute(const Matrix& x) const { return p_ * x; }
  Matrix unpermute(const Matrix& x) const { return p_.transpose() * x; }

  /// A^{-1} b through the factor.
  Matrix solve(const Matrix& b) const;

private:
  SparseColMajor l_;
  Permutation p_;
};

inline CholeskyFactor cholesky(const SparseSymmetric& a) {
  if (a.n() == 0) throw ShapeError("cholesky of an empty matrix");
  SparseColMajor lower(a.lower());
  Eigen::SimplicialLLT<SparseColMajor, Eigen::Lower, RcmOrdering<int>> llt;
  llt.compute(lower);
  if (llt.info() != Eigen::Success) {
    throw NotSpdError("Gramian is not numerically positive definite (duplicate points or extreme conditioning)");
  }
  SparseColMajor l = llt.matrixL();
  l.makeCompressed();
  for (Index j = 0; j < l.outerSize(); ++j) {
    const int start = l.outerIndexPtr()[j];
    if (start >= l.outerIndexPtr()[j + 1] || l.innerIndexPtr()[start] != j || !(l.valuePtr()[start] > 0.0)) {
      throw NotSpdError("non-positive pivot in Cholesky factor");
    }
  }
  return CholeskyFactor(std::move(l), llt.permutationP());
}

namespace detail {

// Diagonal of column j of a compressed lower-triangular CSC matrix; it is the
// first stored entry when present.
inline double lower_diag(const SparseColMajor& l, Index j) {
  const int start = l.outerIndexPtr()[j];
  const int stop = l.outerIndexPtr()[j + 1];
  if (start < stop && l.innerIndexPtr()[start] == j) return l.valuePtr()[start];
  return 0.0;
}

}  // namespace detail

/// Solves L X = B for sparse lower-triangular L (compressed CSC).
inline Matrix solve_lower(const SparseColMajor& l, const Matrix& rhs) {
  if (rhs.rows() != l.rows()) throw ShapeError("solve_lower: dimension mismatch");
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  RowMat x = rhs;
  const int* outer = l.outerIndexPtr();
  const int* inner = l.innerIndexPtr();
  const double* val = l.valuePtr();
  for (Index j = 0; j < l.cols(); ++j) {
    const double diag = detail::lower_diag(l, j);
    if (diag == 0.0) throw SingularFactorError("zero diagonal in triangular factor");
    x.row(j) /= diag;
    for (int p = outer[j] + 1; p < outer[j + 1]; ++p) x.row(inner[p]) -= val[p] * x.row(j);
  }
  return x;
}

/// Solves L^T X = B for sparse lower-triangular L (compressed CSC).
inline Matrix solve_upper(const SparseColMajor& l, const Matrix& rhs) {
  if (rhs.rows() != l.rows()) throw ShapeError("solve_upper: dimension mismatch");
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  RowMat x = rhs;
  const int* outer = l.outerIndexPtr();
  const int* inner = l.innerIndexPtr();
  const double* val = l.valuePtr();
  for (Index j = l.cols() - 1; j >= 0; --j) {
    const double diag = detail::lower_diag(l, j);
    if (diag == 0.0) throw SingularFactorError("zero diagonal in triangular factor");
    for (int p = outer[j] + 1; p < outer[j + 1]; ++p) x.row(j) -= val[p] * x.row(inner[p]);
    x.row(j) /= diag;
  }
  return x;
}

/// Solves R X = B for dense upper-triangular R.
inline Matrix solve_upper(const Matrix& r, const Matrix& rhs) {
  if (r.rows() != r.cols() || rhs.rows() != r.rows()) throw ShapeError("solve_upper: dimension mismatch");
  for (Index i = 0; i < r.rows(); ++i) {
    if (r(i, i) == 0.0) throw SingularFactorError("zero diagonal in triangular factor");
  }
  return r.triangularView<Eigen::Upper>().solve(rhs);
}

inline Matrix CholeskyFactor::solve(const Matrix& b) const {
  return unpermute(solve_upper(l_, solve_lower(l_, permute(b))));
}

// ---------------------------------------------------------------------------
// QR

/// ulp(x): spacing of doubles at magnitude x.
inline double ulp(double x) {
  x = std::abs(x);
  if (x == 0.0) return std::numeric_limits<double>::denorm_min();
  return std::nextafter(x, std::numeric_limits<double>::infinity()) - x;
}

/// Householder QR of an N x M matrix, plain or column-pivoted, possibly
/// truncated to a numerical rank. Q is kept in factored (Householder) form.
class QRFactor {
public:
  Index rows() const noexcept { return packed_.rows(); }
  Index cols() const noexcept { return packed_.cols(); }
  Index rank() const noexcept { return rank_; }
  double tolerance() const noexcept { return tau_; }
  double r_norm_inf() const noexcept { return r_norm_inf_; }
  bool pivoted() const noexcept { return pivoted_; }

  /// pivots()[k] = original column of column k of R (identity when unpivoted).
  const std::vector<Index>& pivots() const noexcept { return pivots_; }

  /// Full diagonal of R (min(N, M) entries).
  Vector r_diagonal() const { return packed_.diagonal(); }

  /// Leading rank x rank block of R.
  Matrix r() const { return packed_.topLeftCorner(rank_, rank_).triangularView<Eigen::Upper>(); }

  /// First `rank` columns of Q, materialized.
  Matrix thin_q() const {
    Matrix q = Matrix::Identity(rows(), rank_);
    householder().applyThisOnTheLeft(q);
    return q;
  }

  /// First `rank` entries of Q^T g.
  Vector apply_qt(const Vector& g) const {
    if (g.size() != rows()) throw ShapeError("QRFactor::apply_qt: size mismatch");
    Vector t = g;
    householder().transpose().applyThisOnTheLeft(t);
    return t.head(rank_);
  }

  /// g - Q~ Q~^T g, formed by reflections rather than by subtracting B d,
  /// so it stays orthogonal to the retained columns even when d is huge.
  Vector residual(const Vector& g) const {
    if (g.size() != rows()) throw ShapeError("QRFactor::residual: size mismatch");
    Vector t = g;
    householder().transpose().applyThisOnTheLeft(t);
    t.head(rank_).setZero();
    householder().applyThisOnTheLeft(t);
    return t;
  }

  /// Reduced solution R~^{-1} Q~^T g in pivoted order (length rank).
  Vector solve_reduced(const Vector& g) const {
    Vector t = apply_qt(g);
    return packed_.topLeftCorner(rank_, rank_).triangularView<Eigen::Upper>().solve(t);
  }

  /// Least-squares solution of length M: the reduced solution scattered
  /// through the pivots, zeros at truncated columns.
  Vector solve(const Vector& g) const {
    const Vector reduced = solve_reduced(g);
    Vector full = Vector::Zero(cols());
    for (Index k = 0; k < rank_; ++k) full(pivots_[static_cast<std::size_t>(k)]) = reduced(k);
    return full;
  }

  /// Number of leading |R_kk| above the tolerance.
  Index leading_rank() const {
    const Index k = std::min(rows(), cols());
    Index r = 0;
    while (r < k && std::abs(packed_(r, r)) > tau_) ++r;
    return r;
  }

  bool any_diagonal_below_tolerance() const {
    const Index k = std::min(rows(), cols());
    for (Index i = 0; i < k; ++i) {
      if (!(std::abs(packed_(i, i)) > tau_)) return true;
    }
    return k < cols();
  }

private:
  friend QRFactor qr(Matrix b);
  friend QRFactor cpqr_truncated(Matrix b);

  Eigen::HouseholderSequence<Matrix, Vector> householder() const {
    return Eigen::HouseholderSequence<Matrix, Vector>(packed_, hcoeffs_).setLength(std::min(rows(), cols()));
  }

  void finish() {
    const Index k = std::min(rows(), cols());
    r_norm_inf_ = 0.0;
    for (Index i = 0; i < k; ++i) {
      r_norm_inf_ = std::max(r_norm_inf_, packed_.row(i).tail(cols() - i).cwiseAbs().sum());
    }
    tau_ = static_cast<double>(std::max(rows(), cols())) * ulp(r_norm_inf_);
  }

  Matrix packed_;
  Vector hcoeffs_;
  std::vector<Index> pivots_;
  Index rank_ = 0;
  double tau_ = 0.0;
  double r_norm_inf_ = 0.0;
  bool pivoted_ = false;
};

/// Reduced Householder QR; rank is recorded as min(N, M) with no truncation.
inline QRFactor qr(Matrix b) {
  if (b.rows() < 1 || b.cols() < 1) throw ShapeError("qr of an empty matrix");
  QRFactor f;
  {
    Eigen::HouseholderQR<Eigen::Ref<Matrix>> dec(b);
    f.hcoeffs_ = dec.hCoeffs();
  }
  f.packed_ = std::move(b);
  f.pivots_.resize(static_cast<std::size_t>(f.cols()));
  std::iota(f.pivots_.begin(), f.pivots_.end(), Index{0});
  f.rank_ = std::min(f.rows(), f.cols());
  f.finish();
  return f;
}

/// Column-pivoted QR truncated at tau = max(N, M) * ulp(||R||_inf): the rank
/// is the number of leading |R_kk| greater than tau.
inline QRFactor cpqr_truncated(Matrix b) {
  if (b.rows() < 1 || b.cols() < 1) throw ShapeError("qr of an empty matrix");
  QRFactor f;
  {
    Eigen::ColPivHouseholderQR<Eigen::Ref<Matrix>> dec(b);
    f.hcoeffs_ = dec.hCoeffs();
    const auto& idx = dec.colsPermutation().indices();
    f.pivots_.resize(static_cast<std::size_t>(idx.size()));
    for (Index k = 0; k < idx.size(); ++k) f.pivots_[static_cast<std::size_t>(k)] = idx(k);
  }
  f.packed_ = std::move(b);
  f.pivoted_ = true;
  f.finish();
  f.rank_ = f.leading_rank();
  return f;
}

// ---------------------------------------------------------------------------
// Condition number

struct CondEstimate {
  double value = 1.0;
  double lambda_max = 1.0;
  double lambda_min = 1.0;
  bool approximate = false;   // iteration cap hit and no dense fallback
  bool dense = false;         // dense eigensolve was used
};

/// 2-norm condition number of an SPD matrix: power iteration for the
/// largest eigenvalue, inverse iteration through the Cholesky factor for
/// the smallest. Falls back to a dense eigensolve for n <= dense_limit when
/// either iteration fails to settle.
inline CondEstimate cond_estimate(const SparseSymmetric& a, const CholeskyFactor& factor,
                                  int max_iter = 600, Index dense_limit = 2000) {
  const Index n = a.n();
  if (factor.n() != n) throw ShapeError("cond_estimate: factor does not match matrix");
  CondEstimate est;
  if (a.is_identity()) return est;

  std::mt19937_64 rng(0x5eed);
  auto start = [&] {
    Vector v(n);
    for (Index i = 0; i < n; ++i) v(i) = 1.0 + 0.5 * detail::unit_uniform(rng);
    return Vector(v.normalized());
  };

  auto iterate = [&](auto&& apply, double& rq) {
    Vector v = start();
    rq = 0.0;
    for (int it = 0; it < max_iter; ++it) {
      Vector w = apply(v);
      const double next = v.dot(w);
      const double wn = w.norm();
      if (!(wn > 0.0) || !std::isfinite(wn)) return false;
      const double resid = (w - next * v).norm();
      v = w / wn;
      if (it > 2 && (std::abs(next - rq) <= 1e-10 * std::abs(next) || resid <= 1e-3 * std::abs(next))) {
        rq = next;
        return true;
      }
      rq = next;
    }
    return false;
  };

  double top = 0.0;
  double inv = 0.0;
  const bool ok_top = iterate([&](const Vector& v) { return a.multiply(v); }, top);
  const bool ok_inv = iterate([&](const Vector& v) { return Vector(factor.solve(v)); }, inv);
  if ((!ok_top || !ok_inv) && n <= dense_limit) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(a.to_dense(), Eigen::EigenvaluesOnly);
    est.lambda_min = eig.eigenvalues()(0);
    est.lambda_max = eig.eigenvalues()(n - 1);
    est.value = est.lambda_max / est.lambda_min;
    est.dense = true;
    return est;
  }
  est.lambda_max = top;
  est.lambda_min = 1.0 / inv;
  est.value = top * inv;
  est.approximate = !(ok_top && ok_inv);
  return est;
}

}  // namespace uniterp
