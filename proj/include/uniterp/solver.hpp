#pragma once

#include <chrono>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "uniterp/error.hpp"
#include "uniterp/kernel.hpp"
#include "uniterp/nodes.hpp"
#include "uniterp/polynomial.hpp"
#include "uniterp/sparse_linalg.hpp"
#include "uniterp/types.hpp"

namespace uniterp {

enum class FitMode { diag, hybrid, rank_deficient };

inline std::string_view to_string(FitMode mode) {
  switch (mode) {
    case FitMode::diag: return "diag";
    case FitMode::hybrid: return "hybrid";
    case FitMode::rank_deficient: return "rank_deficient";
  }
  return "diag";
}

inline FitMode fit_mode_from_string(std::string_view s) {
  if (s == "diag") return FitMode::diag;
  if (s == "hybrid") return FitMode::hybrid;
  if (s == "rank_deficient") return FitMode::rank_deficient;
  throw FormatError("unknown fit mode '" + std::string(s) + "'");
}

struct FitOptions {
  bool estimate_cond = false;
};

struct FitReport {
  FitMode mode = FitMode::diag;
  double q = 0.0;
  double w = 0.0;
  double support = 0.0;
  Index nnz_a = 0;   // stored lower-triangle nonzeros of A
  Index nnz_l = 0;
  Index rank = 0;    // numerical rank of P (diag) or B
  Index cols = 0;    // M
  double cond = 1.0;
  bool cond_approximate = false;
  bool dense_gramian = false;  // support >= w
  double interp_residual = 0.0;  // max_k |s(x_k) - y_k|
  double moment_residual = 0.0;  // ||P^T c||_inf
  double t_assemble = 0.0;
  double t_factor = 0.0;
  double t_solve = 0.0;
};

/// s(x) = sum_k c_k phi(eps |x - x_k|) + sum_j d_j p_j(xhat).
class UnifiedInterpolant {
public:
  UnifiedInterpolant(PointSet centers, WendlandKernel kernel, TotalDegreeBasis basis, Vector c, Vector d,
                     FitMode mode, FitReport report = {})
      : centers_(std::move(centers)),
        kernel_(kernel),
        basis_(std::move(basis)),
        c_(std::move(c)),
        d_(std::move(d)),
        mode_(mode),
        report_(report) {
    if (c_.size() != centers_.size()) throw ShapeError("kernel coefficient count must equal N");
    if (d_.size() != basis_.size()) throw ShapeError("polynomial coefficient count must equal M");
    if (basis_.dim() != centers_.dim()) throw ShapeError("basis and centers differ in dimension");
  }

  const PointSet& centers() const noexcept { return centers_; }
  const WendlandKernel& kernel() const noexcept { return kernel_; }
  const TotalDegreeBasis& basis() const noexcept { return basis_; }
  const Vector& c() const noexcept { return c_; }
  const Vector& d() const noexcept { return d_; }
  FitMode mode() const noexcept { return mode_; }
  const FitReport& report() const noexcept { return report_; }

private:
  PointSet centers_;
  WendlandKernel kernel_;
  TotalDegreeBasis basis_;
  Vector c_;
  Vector d_;
  FitMode mode_;
  FitReport report_;
};

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

inline constexpr Index kEvalChunk = 2048;

// P_e d in row chunks so that large evaluation sets never hold all of P_e.
template <typename Rows>
Vector polynomial_part(const TotalDegreeBasis& basis, const Vector& d, const Rows& x) {
  Vector out(x.rows());
  for (Index start = 0; start < x.rows(); start += kEvalChunk) {
    const Index len = std::min(kEvalChunk, x.rows() - start);
    out.segment(start, len) = vandermonde(basis, x.middleRows(start, len)) * d;
  }
  return out;
}

}  // namespace detail

/// Values P_e d of a polynomial expansion alone.
inline Vector evaluate_polynomial(const TotalDegreeBasis& basis, const Vector& d, const PointSet& xe) {
  if (xe.dim() != basis.dim()) throw ShapeError("evaluate: dimension mismatch");
  if (d.size() != basis.size()) throw ShapeError("evaluate: coefficient count mismatch");
  return detail::polynomial_part(basis, d, xe.coords());
}

/// s|_Xe = A_e c + P_e d.
inline Vector evaluate(const UnifiedInterpolant& model, const PointMatrix& xe) {
  if (xe.cols() != model.centers().dim()) {
    throw ShapeError("evaluate: points have dimension " + std::to_string(xe.cols()) + ", model has " +
                     std::to_string(model.centers().dim()));
  }
  Vector s = detail::polynomial_part(model.basis(), model.d(), xe);
  if (!model.c().isZero(0.0)) s += assemble_cross(xe, model.centers(), model.kernel()) * model.c();
  return s;
}

inline Vector evaluate(const UnifiedInterpolant& model, const PointSet& xe) { return evaluate(model, xe.coords()); }

/// Factorizations behind one fit, reusable across right-hand sides.
///
/// diag: QR of P. hybrid / rank_deficient: P A P^T = L L^T, B = L^{-1} P
/// (rows in factor order) and the QR of B, pivoted and truncated for
/// rank_deficient. S = B^T B is never formed.
class InterpolationSystem {
public:
  /// Polynomial-limit system. Requires support radius < q. Falls back to a
  /// truncated column-pivoted QR when P is numerically rank deficient.
  static InterpolationSystem prepare_diag(const PointSet& x, const WendlandKernel& kernel,
                                          const TotalDegreeBasis& basis) {
    check_inputs(x, basis);
    if (!(kernel.support_radius() < x.separation())) {
      throw ArgumentError("diagonal fit requires support radius below the separation distance");
    }
    InterpolationSystem sys(x, kernel, basis, FitMode::diag);
    auto t0 = detail::Clock::now();
    sys.p_ = vandermonde(basis, x);
    sys.report_.t_assemble = detail::seconds_since(t0);
    sys.report_.nnz_a = x.size();
    t0 = detail::Clock::now();
    sys.qr_ = qr(sys.p_);
    if (sys.qr_->any_diagonal_below_tolerance()) sys.qr_ = cpqr_truncated(sys.p_);
    sys.report_.t_factor = detail::seconds_since(t0);
    sys.report_.rank = sys.qr_->rank();
    return sys;
  }

  /// Hybrid system. Throws RankDeficientError when the unpivoted R of B has
  /// a diagonal entry at or below max(N, M) ulp(||R||_inf).
  static InterpolationSystem prepare_hybrid(const PointSet& x, const WendlandKernel& kernel,
                                            const TotalDegreeBasis& basis, FitOptions opts = {}) {
    InterpolationSystem sys = prepare_factor(x, kernel, basis, FitMode::hybrid, opts);
    sys.factor_qr(false);
    return sys;
  }

  /// Hybrid system with a truncated column-pivoted QR of B.
  static InterpolationSystem prepare_rank_deficient(const PointSet& x, const WendlandKernel& kernel,
                                                    const TotalDegreeBasis& basis, FitOptions opts = {}) {
    InterpolationSystem sys = prepare_factor(x, kernel, basis, FitMode::rank_deficient, opts);
    sys.factor_qr(true);
    return sys;
  }

  /// diag when support < q, else hybrid, else rank_deficient on a rank
  /// failure (reusing the Cholesky factor and B).
  static InterpolationSystem prepare_auto(const PointSet& x, const WendlandKernel& kernel,
                                          const TotalDegreeBasis& basis, FitOptions opts = {}) {
    check_inputs(x, basis);
    if (kernel.support_radius() < x.separation()) return prepare_diag(x, kernel, basis);
    InterpolationSystem sys = prepare_factor(x, kernel, basis, FitMode::hybrid, opts);
    try {
      sys.factor_qr(false);
    } catch (const RankDeficientError&) {
      sys.mode_ = FitMode::rank_deficient;
      sys.report_.mode = FitMode::rank_deficient;
      sys.factor_qr(true);
    }
    return sys;
  }

  FitMode mode() const noexcept { return mode_; }
  const FitReport& report() const noexcept { return report_; }
  const QRFactor& qr_factor() const { return *qr_; }
  const std::optional<SparseSymmetric>& gramian() const noexcept { return a_; }
  const std::optional<CholeskyFactor>& cholesky_factor() const noexcept { return chol_; }
  const Matrix& vandermonde_matrix() const noexcept { return p_; }

  UnifiedInterpolant solve(const Vector& y) const {
    if (y.size() != x_.size()) {
      throw ShapeError("data vector has length " + std::to_string(y.size()) + ", expected " +
                       std::to_string(x_.size()));
    }
    FitReport report = report_;
    const auto t0 = detail::Clock::now();
    Vector c;
    Vector d;
    if (mode_ == FitMode::diag) {
      d = qr_->solve(y);
      c = qr_->residual(y);
    } else {
      const Vector g = solve_lower(chol_->L(), chol_->permute(y));
      d = qr_->solve(g);
      c = chol_->unpermute(solve_upper(chol_->L(), qr_->residual(g)));
    }
    report.t_solve = detail::seconds_since(t0);

    Vector at_sites = p_ * d;
    at_sites += a_ ? a_->multiply(c) : c;
    report.interp_residual = (at_sites - y).cwiseAbs().maxCoeff();
    report.moment_residual = (p_.transpose() * c).cwiseAbs().maxCoeff();
    return UnifiedInterpolant(x_, kernel_, basis_, std::move(c), std::move(d), mode_, report);
  }

private:
  InterpolationSystem(const PointSet& x, const WendlandKernel& kernel, const TotalDegreeBasis& basis, FitMode mode)
      : x_(x), kernel_(kernel), basis_(basis), mode_(mode) {
    report_.mode = mode;
    report_.q = x.separation();
    report_.support = kernel.support_radius();
    report_.cols = basis.size();
    if (x.size() >= 2) {
      report_.w = x.diameter();
      report_.dense_gramian = report_.support >= report_.w;
    }
  }

  static void check_inputs(const PointSet& x, const TotalDegreeBasis& basis) {
    if (basis.dim() != x.dim()) throw ShapeError("basis and points differ in dimension");
  }

  static InterpolationSystem prepare_factor(const PointSet& x, const WendlandKernel& kernel,
                                            const TotalDegreeBasis& basis, FitMode mode, FitOptions opts) {
    check_inputs(x, basis);
    InterpolationSystem sys(x, kernel, basis, mode);
    auto t0 = detail::Clock::now();
    sys.a_ = assemble_gramian(x, kernel);
    sys.p_ = vandermonde(basis, x);
    sys.report_.t_assemble = detail::seconds_since(t0);
    sys.report_.nnz_a = sys.a_->nnz();

    t0 = detail::Clock::now();
    sys.chol_ = cholesky(*sys.a_);
    sys.report_.nnz_l = sys.chol_->nnz();
    sys.b_ = solve_lower(sys.chol_->L(), sys.chol_->permute(sys.p_));
    sys.report_.t_factor = detail::seconds_since(t0);
    if (opts.estimate_cond) {
      const CondEstimate ce = cond_estimate(*sys.a_, *sys.chol_);
      sys.report_.cond = ce.value;
      sys.report_.cond_approximate = ce.approximate;
    }
    return sys;
  }

  void factor_qr(bool truncate) {
    const auto t0 = detail::Clock::now();
    if (truncate) {
      qr_ = cpqr_truncated(b_);
    } else {
      qr_ = qr(b_);
      if (qr_->any_diagonal_below_tolerance()) {
        const Index detected = qr_->leading_rank();
        report_.t_factor += detail::seconds_since(t0);
        throw RankDeficientError("B = L^{-1} P is numerically rank deficient (rank " + std::to_string(detected) +
                                     " < " + std::to_string(b_.cols()) + "); use the rank-deficient fit",
                                 detected, b_.cols());
      }
    }
    report_.rank = qr_->rank();
    report_.t_factor += detail::seconds_since(t0);
  }

  PointSet x_;
  WendlandKernel kernel_;
  TotalDegreeBasis basis_;
  FitMode mode_;
  FitReport report_;
  Matrix p_;
  Matrix b_;
  std::optional<SparseSymmetric> a_;
  std::optional<CholeskyFactor> chol_;
  std::optional<QRFactor> qr_;
};

inline UnifiedInterpolant fit_diag(const PointSet& x, const Vector& y, const WendlandKernel& kernel,
                                   const TotalDegreeBasis& basis) {
  return InterpolationSystem::prepare_diag(x, kernel, basis).solve(y);
}

inline UnifiedInterpolant fit_hybrid(const PointSet& x, const Vector& y, const WendlandKernel& kernel,
                                     const TotalDegreeBasis& basis, FitOptions opts = {}) {
  return InterpolationSystem::prepare_hybrid(x, kernel, basis, opts).solve(y);
}

inline UnifiedInterpolant fit_rank_deficient(const PointSet& x, const Vector& y, const WendlandKernel& kernel,
                                             const TotalDegreeBasis& basis, FitOptions opts = {}) {
  return InterpolationSystem::prepare_rank_deficient(x, kernel, basis, opts).solve(y);
}

inline UnifiedInterpolant fit_auto(const PointSet& x, const Vector& y, const WendlandKernel& kernel,
                                   const TotalDegreeBasis& basis, FitOptions opts = {}) {
  return InterpolationSystem::prepare_auto(x, kernel, basis, opts).solve(y);
}

/// Polynomial least squares alone: d from a rank-aware QR solve of P d ~ y.
struct PolyFit {
  Vector d;
  Index rank = 0;
  double t_factor = 0.0;
  double t_solve = 0.0;
};

inline PolyFit fit_pls(const PointSet& x, const Vector& y, const TotalDegreeBasis& basis) {
  if (basis.dim() != x.dim()) throw ShapeError("basis and points differ in dimension");
  if (y.size() != x.size()) throw ShapeError("data vector length must equal N");
  PolyFit out;
  auto t0 = detail::Clock::now();
  Matrix p = vandermonde(basis, x);
  QRFactor f = qr(p);
  if (f.any_diagonal_below_tolerance()) f = cpqr_truncated(std::move(p));
  out.t_factor = detail::seconds_since(t0);
  t0 = detail::Clock::now();
  out.d = f.solve(y);
  out.rank = f.rank();
  out.t_solve = detail::seconds_since(t0);
  return out;
}

/// Dense oracle: solves [[A, P_E], [P_E^T, 0]] [c; d_E] = [y; 0] by LU with
/// partial pivoting, where P_E holds the selected basis columns (all when
/// `columns` is empty). A is built by brute force over all pairs. The
/// returned d has length M with zeros outside the selection.
inline std::pair<Vector, Vector> direct_saddle_solve(const PointSet& x, const Vector& y, const WendlandKernel& kernel,
                                                     const TotalDegreeBasis& basis,
                                                     std::span<const Index> columns = {}) {
  if (basis.dim() != x.dim()) throw ShapeError("basis and points differ in dimension");
  const Index n = x.size();
  if (y.size() != n) throw ShapeError("data vector length must equal N");
  std::vector<Index> cols(columns.begin(), columns.end());
  if (cols.empty()) {
    cols.resize(static_cast<std::size_t>(basis.size()));
    for (Index j = 0; j < basis.size(); ++j) cols[static_cast<std::size_t>(j)] = j;
  }
  const Index m = static_cast<Index>(cols.size());
  const Matrix p = vandermonde(basis, x);
  Matrix block = Matrix::Zero(n + m, n + m);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j <= i; ++j) {
      const double v = kernel.eval((x.point(i) - x.point(j)).norm());
      block(i, j) = v;
      block(j, i) = v;
    }
  }
  for (Index k = 0; k < m; ++k) {
    const Index col = cols[static_cast<std::size_t>(k)];
    if (col < 0 || col >= basis.size()) throw ArgumentError("direct_saddle_solve: column index out of range");
    block.block(0, n + k, n, 1) = p.col(col);
    block.block(n + k, 0, 1, n) = p.col(col).transpose();
  }
  Vector rhs = Vector::Zero(n + m);
  rhs.head(n) = y;
  Eigen::PartialPivLU<Matrix> lu(block);
  const double rcond = lu.rcond();
  Vector sol = lu.solve(rhs);
  if (!(rcond > 1e-16) || !sol.allFinite()) {
    throw NumericError("saddle-point matrix is singular to working precision");
  }
  Vector d = Vector::Zero(basis.size());
  for (Index k = 0; k < m; ++k) d(cols[static_cast<std::size_t>(k)]) = sol(n + k);
  return {sol.head(n), d};
}

}  // namespace uniterp
