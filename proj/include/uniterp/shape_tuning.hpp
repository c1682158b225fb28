#pragma once

#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "uniterp/error.hpp"
#include "uniterp/kernel.hpp"
#include "uniterp/nodes.hpp"
#include "uniterp/sparse_linalg.hpp"

namespace uniterp {

enum class ShapeKind { fixed_support, fixed_condition, explicit_eps };

struct ShapeStrategy {
  ShapeKind kind = ShapeKind::explicit_eps;
  double target_cond = 0.0;   // K_t, fixed_support / fixed_condition
  double explicit_eps = 0.0;  // explicit_eps

  static ShapeStrategy fixed_support(double kt) { return {ShapeKind::fixed_support, kt, 0.0}; }
  static ShapeStrategy fixed_condition(double kt) { return {ShapeKind::fixed_condition, kt, 0.0}; }
  static ShapeStrategy fixed_eps(double eps) { return {ShapeKind::explicit_eps, 0.0, eps}; }

  void validate() const {
    if (kind == ShapeKind::explicit_eps) {
      if (!(explicit_eps > 0.0)) throw ArgumentError("explicit shape parameter must be positive");
    } else if (!(target_cond > 1.0)) {
      throw ArgumentError("target condition number must exceed 1");
    }
  }
};

struct TuneOptions {
  double tolerance = 0.1;        // in log10(cond)
  double bracket_rel = 1e-3;     // relative bracket width in eps
  int max_probes = 40;
};

struct TuneResult {
  double eps = 0.0;
  double cond = 1.0;
  double log_error = 0.0;  // log10(cond) - log10(K_t)
  int probes = 0;
  bool dense_gramian = false;  // support 1/eps >= w
  bool approximate = false;    // cond estimate hit its iteration cap
};

/// log10 cond(A(eps)), +inf when A(eps) is not numerically SPD.
inline double log10_cond_at(const PointSet& x, int order, double eps, bool* approximate = nullptr) {
  const WendlandKernel kernel(order, eps);
  const SparseSymmetric a = assemble_gramian(x, kernel);
  if (a.is_identity()) return 0.0;
  try {
    const CholeskyFactor f = cholesky(a);
    const CondEstimate ce = cond_estimate(a, f);
    if (approximate) *approximate = ce.approximate;
    if (!(ce.value > 0.0) || !std::isfinite(ce.value)) return std::numeric_limits<double>::infinity();
    return std::log10(ce.value);
  } catch (const NotSpdError&) {
    return std::numeric_limits<double>::infinity();
  }
}

/// Shape parameter giving cond(A(eps)) ~ K_t, by bisection in log(eps) on
/// f(eps) = log10 cond(A(eps)) - log10 K_t. Starts from eps = 2/q, where A
/// is the identity, and halves eps until f changes sign.
inline TuneResult solve_eps_for_cond(const PointSet& x, int order, double target_cond, TuneOptions opts = {}) {
  if (!(target_cond > 1.0)) throw TuningError("target condition number must exceed 1");
  if (x.size() < 2) throw TuningError("shape tuning needs at least two points");
  const double goal = std::log10(target_cond);
  const double q = x.separation();
  const double w = x.diameter();

  TuneResult res;
  double best_seen = 0.0;
  auto probe = [&](double eps, bool& approx) {
    ++res.probes;
    const double f = log10_cond_at(x, order, eps, &approx) - goal;
    if (std::isfinite(f)) best_seen = std::max(best_seen, f + goal);
    return f;
  };
  auto finish = [&](double eps, double f, bool approx) {
    res.eps = eps;
    res.log_error = f;
    res.cond = std::pow(10.0, f + goal);
    res.dense_gramian = 1.0 / eps >= w;
    res.approximate = approx;
    return res;
  };
  auto unreachable = [&](const std::string& why) {
    std::ostringstream msg;
    msg << "target condition number " << target_cond << " unreachable: " << why
        << " (achievable range found: 1 to " << std::pow(10.0, best_seen) << ")";
    return TuningError(msg.str());
  };

  double hi = 2.0 / q;  // support q/2: identity Gramian, f = -goal
  if (std::abs(goal) <= opts.tolerance) {
    throw unreachable("cond is exactly 1 in the diagonal regime and the target is within tolerance of 1");
  }
  double f_hi = -goal;
  double lo = hi;
  double f_lo = f_hi;
  bool approx = false;
  while (f_lo <= 0.0) {
    if (res.probes >= opts.max_probes) throw unreachable("no sign change before the probe limit");
    hi = lo;
    f_hi = f_lo;
    lo = hi / 2.0;
    f_lo = probe(lo, approx);
    if (std::abs(f_lo) <= opts.tolerance) return finish(lo, f_lo, approx);
  }

  while (res.probes < opts.max_probes && hi / lo - 1.0 > opts.bracket_rel) {
    const double mid = std::sqrt(lo * hi);
    const double f = probe(mid, approx);
    if (std::abs(f) <= opts.tolerance) return finish(mid, f, approx);
    if (f > 0.0) {
      lo = mid;
      f_lo = f;
    } else {
      hi = mid;
      f_hi = f;
    }
  }
  // Bracket collapsed without meeting the tolerance: take the closer side.
  const bool take_hi = !std::isfinite(f_lo) || std::abs(f_hi) <= std::abs(f_lo);
  const double eps = take_hi ? hi : lo;
  const double f = take_hi ? f_hi : f_lo;
  if (!std::isfinite(f) || std::abs(f) > 2.5 * opts.tolerance) {
    throw unreachable("cond(eps) jumps across the target (loss of positive definiteness)");
  }
  return finish(eps, f, approx);
}

/// Per-set shape parameters for a coarse-to-fine node sequence.
/// fixed_support tunes on the largest set and reuses that eps everywhere;
/// fixed_condition tunes every set; explicit_eps broadcasts the constant.
inline std::vector<double> apply_strategy(const ShapeStrategy& strategy, const std::vector<PointSet>& sequence,
                                          int order, TuneOptions opts = {}) {
  strategy.validate();
  std::vector<double> eps(sequence.size(), strategy.explicit_eps);
  if (sequence.empty() || strategy.kind == ShapeKind::explicit_eps) return eps;

  auto tune = [&](std::size_t i) {
    try {
      return solve_eps_for_cond(sequence[i], order, strategy.target_cond, opts).eps;
    } catch (const TuningError& e) {
      throw TuningError("node set " + std::to_string(i) + " (N=" + std::to_string(sequence[i].size()) +
                        "): " + e.what());
    }
  };

  if (strategy.kind == ShapeKind::fixed_support) {
    std::size_t finest = 0;
    for (std::size_t i = 1; i < sequence.size(); ++i) {
      if (sequence[i].size() > sequence[finest].size()) finest = i;
    }
    const double e = tune(finest);
    std::fill(eps.begin(), eps.end(), e);
  } else {
    for (std::size_t i = 0; i < sequence.size(); ++i) eps[i] = tune(i);
  }
  return eps;
}

}  // namespace uniterp
