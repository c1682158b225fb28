#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "uniterp/error.hpp"
#include "uniterp/kernel.hpp"
#include "uniterp/model_io.hpp"
#include "uniterp/nodes.hpp"
#include "uniterp/polynomial.hpp"
#include "uniterp/shape_tuning.hpp"
#include "uniterp/solver.hpp"

namespace uniterp {

// ---------------------------------------------------------------------------
// Target functions

struct TargetFunction {
  std::string id;
  Index dim;
  std::function<double(const Eigen::RowVectorXd&)> evaluator;
  std::string smoothness_note;

  double operator()(const Eigen::RowVectorXd& x) const { return evaluator(x); }

  Vector sample(const PointMatrix& x) const {
    if (x.cols() != dim) {
      throw ShapeError("target '" + id + "' is " + std::to_string(dim) + "-dimensional, points are " +
                       std::to_string(x.cols()) + "-dimensional");
    }
    Vector y(x.rows());
    for (Index i = 0; i < x.rows(); ++i) y(i) = evaluator(x.row(i));
    return y;
  }
  Vector sample(const PointSet& x) const { return sample(x.coords()); }
};

inline const std::vector<TargetFunction>& target_registry() {
  static const std::vector<TargetFunction> registry = {
      {"abs1", 1, [](const Eigen::RowVectorXd& p) { return std::abs(p(0)); }, "C^0, kink at 0"},
      {"runge1", 1, [](const Eigen::RowVectorXd& p) { return 1.0 / (1.0 + 25.0 * p(0) * p(0)); }, "analytic"},
      {"radial32_2d", 2,
       [](const Eigen::RowVectorXd& p) { return std::pow(p(0) * p(0) + p(1) * p(1), 1.5); }, "C^1"},
      {"expridge_2d", 2,
       [](const Eigen::RowVectorXd& p) {
         const double s = p(0) + p(1);
         return std::exp(s * s / 0.2);
       },
       "analytic"},
      {"radial32_3d", 3,
       [](const Eigen::RowVectorXd& p) { return std::pow(p(0) * p(0) + p(1) * p(1) + p(2) * p(2), 1.5); }, "C^1"},
      {"expridge_3d", 3,
       [](const Eigen::RowVectorXd& p) {
         const double s = p(0) + p(1) + p(2);
         return std::exp(s * s / 0.8);
       },
       "analytic"},
      {"c1_surface", 3,
       [](const Eigen::RowVectorXd& p) {
         return p(0) * p(0) * std::abs(p(0)) + p(1) * p(1) * std::abs(p(1)) + p(2) * p(2) * std::abs(p(2));
       },
       "C^1 on the sphere, hemisphere and torus"},
  };
  return registry;
}

inline const TargetFunction& registry_lookup(std::string_view id) {
  for (const auto& t : target_registry()) {
    if (t.id == id) return t;
  }
  throw ArgumentError("unknown target function '" + std::string(id) + "'");
}

/// ||s - f||_2 / ||f||_2.
inline double rel_l2_error(const Vector& s_vals, const Vector& f_vals) {
  if (s_vals.size() != f_vals.size()) throw ShapeError("rel_l2_error: length mismatch");
  const double denom = f_vals.norm();
  if (!(denom > 0.0)) throw NumericError("rel_l2_error: reference values have zero norm");
  return (s_vals - f_vals).norm() / denom;
}

// ---------------------------------------------------------------------------
// Study configuration

/// Flat key=value study description. Lists are comma separated; '#'
/// starts a comment. Keys:
///
///   target        registry id (required)
///   kernel        c2 | c4 | c6                          (default c2)
///   nodes         chebyshev | interval | disk | ball | sphere | hemisphere | files
///   sizes         node counts per set (generators)
///   degrees       explicit polynomial degree per set
///   degree_scale  C in l = floor(C N^(1/d))            (default 0.8 in 2D, else 1)
///   files         node files (nodes = files)
///   domain        domain tag for node files            (default custom)
///   alpha         Kosloff-Tal-Ezer parameter for chebyshev nodes
///   qcluster      hemisphere clustering exponent       (default 1.5)
///   seed          base seed for dart throwing           (default 1)
///   strategy      eps | fs | fc                         (default eps)
///   eps           shape parameter for strategy = eps
///   cond          target condition number for fs / fc
///   modes         subset of pls, diag, unified          (default all three)
///   eval          auto | <point file>                   (default auto)
///   eval_n        evaluation set size for eval = auto
///   output        CSV path
struct StudyConfig {
  std::string target;
  std::string kernel = "c2";
  std::string nodes = "chebyshev";
  std::vector<Index> sizes;
  std::vector<int> degrees;
  std::optional<double> degree_scale;
  std::vector<std::string> files;
  std::string domain = "custom";
  std::optional<double> alpha;
  double qcluster = 1.5;
  std::uint64_t seed = 1;
  std::string strategy = "eps";
  double eps = 0.0;
  double cond = 0.0;
  std::vector<std::string> modes = {"pls", "diag", "unified"};
  std::string eval = "auto";
  std::optional<Index> eval_n;
  std::string output;

  // Key/value pairs in file order, echoed into the CSV header.
  std::vector<std::pair<std::string, std::string>> entries;

  ShapeStrategy shape_strategy() const {
    if (strategy == "eps") return ShapeStrategy::fixed_eps(eps);
    if (strategy == "fs") return ShapeStrategy::fixed_support(cond);
    if (strategy == "fc") return ShapeStrategy::fixed_condition(cond);
    throw ArgumentError("strategy must be eps, fs or fc");
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

inline std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto piece = trim(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (!piece.empty()) out.push_back(piece);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline double parse_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) throw ArgumentError("config key '" + key + "': '" + v + "' is not a number");
  return out;
}

inline long long parse_int(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long long out = 0;
  try {
    out = std::stoll(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) throw ArgumentError("config key '" + key + "': '" + v + "' is not an integer");
  return out;
}

}  // namespace detail

inline void set_config_value(StudyConfig& cfg, const std::string& key, const std::string& value) {
  using detail::parse_double;
  using detail::parse_int;
  using detail::split_list;
  if (key == "target") {
    cfg.target = value;
  } else if (key == "kernel") {
    kernel_order_from_id(value);
    cfg.kernel = value;
  } else if (key == "nodes") {
    cfg.nodes = value;
  } else if (key == "sizes") {
    cfg.sizes.clear();
    for (const auto& s : split_list(value)) cfg.sizes.push_back(static_cast<Index>(parse_int(key, s)));
  } else if (key == "degrees") {
    cfg.degrees.clear();
    for (const auto& s : split_list(value)) cfg.degrees.push_back(static_cast<int>(parse_int(key, s)));
  } else if (key == "degree_scale") {
    cfg.degree_scale = parse_double(key, value);
  } else if (key == "files") {
    cfg.files = split_list(value);
  } else if (key == "domain") {
    domain_from_string(value);
    cfg.domain = value;
  } else if (key == "alpha") {
    cfg.alpha = parse_double(key, value);
  } else if (key == "qcluster") {
    cfg.qcluster = parse_double(key, value);
  } else if (key == "seed") {
    cfg.seed = static_cast<std::uint64_t>(parse_int(key, value));
  } else if (key == "strategy") {
    cfg.strategy = value;
  } else if (key == "eps") {
    cfg.eps = parse_double(key, value);
  } else if (key == "cond") {
    cfg.cond = parse_double(key, value);
  } else if (key == "modes") {
    cfg.modes = split_list(value);
  } else if (key == "eval") {
    cfg.eval = value;
  } else if (key == "eval_n") {
    cfg.eval_n = static_cast<Index>(parse_int(key, value));
  } else if (key == "output") {
    cfg.output = value;
  } else {
    throw ArgumentError("unknown config key '" + key + "'");
  }
  for (auto& [k, v] : cfg.entries) {
    if (k == key) {
      v = value;
      return;
    }
  }
  cfg.entries.emplace_back(key, value);
}

inline StudyConfig parse_study_config(std::istream& is) {
  StudyConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ArgumentError("config line " + std::to_string(lineno) + ": expected key = value");
    set_config_value(cfg, detail::trim(t.substr(0, eq)), detail::trim(t.substr(eq + 1)));
  }
  return cfg;
}

inline StudyConfig load_study_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ArgumentError("cannot open config file '" + path + "'");
  return parse_study_config(is);
}

// ---------------------------------------------------------------------------
// Convergence study

struct ConvergenceRow {
  Index n = 0;
  int ell = 0;
  Index m = 0;
  double eps = std::numeric_limits<double>::quiet_NaN();
  std::string mode;
  double cond_est = std::numeric_limits<double>::quiet_NaN();
  double q = 0.0;
  double w = 0.0;
  Index nnz_a = 0;
  double rel_l2 = std::numeric_limits<double>::quiet_NaN();
  std::string err_flag = "ok";
  double t_assemble = 0.0;
  double t_factor = 0.0;
  double t_solve = 0.0;
  double t_eval = 0.0;
};

inline constexpr std::string_view kCsvSchemaVersion = "uniterp-convergence-csv v1";
inline constexpr std::string_view kCsvHeader =
    "N,ell,M,eps,mode,cond_est,q,w,nnz_A,rel_l2,err_flag,t_assemble,t_factor,t_solve,t_eval";

inline std::string csv_line(const ConvergenceRow& r) {
  using detail::fmt17;
  std::ostringstream os;
  os << r.n << ',' << r.ell << ',' << r.m << ',' << fmt17(r.eps) << ',' << r.mode << ',' << fmt17(r.cond_est) << ','
     << fmt17(r.q) << ',' << fmt17(r.w) << ',' << r.nnz_a << ',' << fmt17(r.rel_l2) << ',' << r.err_flag << ','
     << fmt17(r.t_assemble) << ',' << fmt17(r.t_factor) << ',' << fmt17(r.t_solve) << ',' << fmt17(r.t_eval);
  return os.str();
}

inline void write_csv_preamble(std::ostream& os, const StudyConfig& cfg) {
  os << "# " << kCsvSchemaVersion << '\n';
  for (const auto& [k, v] : cfg.entries) os << "# " << k << " = " << v << '\n';
  os << kCsvHeader << '\n';
}

struct StudyPlan {
  std::vector<PointSet> node_sets;
  std::vector<int> degrees;
  PointSet eval_set;
};

namespace detail {

inline std::string sanitize(std::string s) {
  for (char& ch : s) {
    if (ch == ',' || ch == '\n' || ch == '\r') ch = ';';
  }
  return s;
}

inline PointSet default_eval_set(const StudyConfig& cfg, const PointSet& finest) {
  const DomainTag tag = finest.domain();
  if (finest.dim() == 1) {
    const Index n = cfg.eval_n.value_or(Index{1} << 14);
    const double lo = finest.lower_bounds()(0);
    const double hi = finest.upper_bounds()(0);
    PointMatrix x(n, 1);
    for (Index i = 0; i < n; ++i) x(i, 0) = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    x(n - 1, 0) = hi;
    return PointSet(std::move(x), DomainTag::interval);
  }
  if (tag == DomainTag::disk || tag == DomainTag::ball) {
    const Index n = cfg.eval_n.value_or(20000);
    return dart_throw(tag, dart_spacing_for_count(tag, n), cfg.seed + 1000003);
  }
  if (tag == DomainTag::sphere) return sphere_spiral(cfg.eval_n.value_or(15000));
  if (tag == DomainTag::hemisphere) return hemisphere_fibonacci(cfg.eval_n.value_or(15000), cfg.qcluster);
  throw ArgumentError("no default evaluation set for domain '" + std::string(to_string(tag)) +
                      "'; set eval = <point file>");
}

// Shape parameter for diag rows. The support stays below half of q and of
// the smallest nonzero gap between an evaluation point and a center, so the
// kernel part shows up only at evaluation points that coincide with centers.
inline double diag_eps(const PointSet& x, const PointSet& eval_set) {
  const double q = x.separation();
  double gap = q;
  const HashGrid grid = HashGrid::build(x.coords(), q);
  for (Index i = 0; i < eval_set.size(); ++i) {
    const Eigen::RowVectorXd p = eval_set.point(i);
    grid.for_each_near(p, q, [&](Index j) {
      const double r = (p - x.point(j)).norm();
      if (r > 0.0) gap = std::min(gap, r);
      return true;
    });
  }
  return 2.0 / std::max(gap, 1e-12 * q);
}

}  // namespace detail

/// Resolves node sets, degrees and the evaluation set of a study.
inline StudyPlan plan_study(const StudyConfig& cfg) {
  StudyPlan plan;
  std::vector<Index> sizes = cfg.sizes;
  const std::string& src = cfg.nodes;
  if (src == "chebyshev") {
    if (sizes.empty()) {
      if (cfg.degrees.empty()) throw ArgumentError("chebyshev nodes need sizes or degrees");
      for (int l : cfg.degrees) sizes.push_back(2 * static_cast<Index>(l) + 1);
    }
    for (Index n : sizes) {
      PointSet x = chebyshev_lobatto(n);
      plan.node_sets.push_back(cfg.alpha ? kte_map(x, *cfg.alpha) : x);
    }
  } else if (src == "interval" || src == "disk" || src == "ball") {
    const DomainTag tag = domain_from_string(src);
    if (sizes.empty()) throw ArgumentError("dart-throw nodes need sizes");
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      plan.node_sets.push_back(dart_throw(tag, dart_spacing_for_count(tag, sizes[i]), cfg.seed + i));
    }
  } else if (src == "sphere") {
    if (sizes.empty()) throw ArgumentError("sphere nodes need sizes");
    for (Index n : sizes) plan.node_sets.push_back(sphere_spiral(n));
  } else if (src == "hemisphere") {
    if (sizes.empty()) throw ArgumentError("hemisphere nodes need sizes");
    for (Index n : sizes) plan.node_sets.push_back(hemisphere_fibonacci(n, cfg.qcluster));
  } else if (src == "files") {
    if (cfg.files.empty()) throw ArgumentError("nodes = files needs a files list");
    for (const auto& f : cfg.files) plan.node_sets.push_back(read_points(f, domain_from_string(cfg.domain)));
    std::stable_sort(plan.node_sets.begin(), plan.node_sets.end(),
                     [](const PointSet& a, const PointSet& b) { return a.size() < b.size(); });
  } else {
    throw ArgumentError("unknown node source '" + src + "'");
  }
  if (plan.node_sets.empty()) throw ArgumentError("study has no node sets");
  for (std::size_t i = 1; i < plan.node_sets.size(); ++i) {
    if (plan.node_sets[i].size() <= plan.node_sets[i - 1].size()) {
      throw ArgumentError("node set sizes must be strictly increasing");
    }
  }

  if (!cfg.degrees.empty()) {
    if (cfg.degrees.size() != plan.node_sets.size()) {
      throw ArgumentError("degrees list must have one entry per node set");
    }
    plan.degrees = cfg.degrees;
  } else {
    for (const auto& x : plan.node_sets) {
      const double c = cfg.degree_scale.value_or(default_degree_scale(x.dim()));
      plan.degrees.push_back(degree_from_points(x.size(), x.dim(), c));
    }
  }

  if (cfg.eval == "auto") {
    plan.eval_set = detail::default_eval_set(cfg, plan.node_sets.back());
  } else {
    plan.eval_set = read_points(cfg.eval);
  }
  return plan;
}

/// Called with each fitted diag / unified model, its data and its row.
using ModelObserver = std::function<void(const ConvergenceRow&, const UnifiedInterpolant&, const Vector& y)>;

/// Runs every (node set, mode) pair of the study, streaming CSV rows to
/// `csv` when given. A failing row records its reason and the study goes on.
inline std::vector<ConvergenceRow> run_convergence(const StudyConfig& cfg, std::ostream* csv = nullptr,
                                                   std::ostream* log = nullptr, const ModelObserver& observe = {}) {
  const TargetFunction& target = registry_lookup(cfg.target);
  const int order = kernel_order_from_id(cfg.kernel);
  for (const auto& m : cfg.modes) {
    if (m != "pls" && m != "diag" && m != "unified") throw ArgumentError("unknown mode '" + m + "'");
  }
  const bool want_unified = std::find(cfg.modes.begin(), cfg.modes.end(), "unified") != cfg.modes.end();
  const ShapeStrategy strategy = want_unified ? cfg.shape_strategy() : ShapeStrategy::fixed_eps(1.0);
  if (want_unified) strategy.validate();

  const StudyPlan plan = plan_study(cfg);
  const Vector f_eval = target.sample(plan.eval_set);

  std::vector<double> eps(plan.node_sets.size(), std::numeric_limits<double>::quiet_NaN());
  std::vector<std::string> eps_error(plan.node_sets.size());
  if (want_unified) {
    if (strategy.kind == ShapeKind::fixed_support) {
      try {
        eps = apply_strategy(strategy, plan.node_sets, order);
      } catch (const Error& e) {
        std::fill(eps_error.begin(), eps_error.end(), std::string("tuning: ") + e.what());
      }
    } else {
      for (std::size_t i = 0; i < plan.node_sets.size(); ++i) {
        try {
          eps[i] = apply_strategy(strategy, {plan.node_sets[i]}, order).front();
        } catch (const Error& e) {
          eps_error[i] = std::string("tuning: ") + e.what();
        }
      }
    }
  }

  if (csv) {
    write_csv_preamble(*csv, cfg);
    csv->flush();
  }

  std::vector<ConvergenceRow> rows;
  for (std::size_t i = 0; i < plan.node_sets.size(); ++i) {
    const PointSet& x = plan.node_sets[i];
    const int ell = plan.degrees[i];
    const Vector y = target.sample(x);
    for (const auto& mode : cfg.modes) {
      ConvergenceRow row;
      row.n = x.size();
      row.ell = ell;
      row.m = static_cast<Index>(binomial(ell + x.dim(), x.dim()));
      row.mode = mode;
      row.q = x.separation();
      row.w = x.diameter();
      try {
        const TotalDegreeBasis basis = build_basis(x, ell);
        if (mode == "pls") {
          const PolyFit fit = fit_pls(x, y, basis);
          row.t_factor = fit.t_factor;
          row.t_solve = fit.t_solve;
          const auto t0 = detail::Clock::now();
          const Vector s = evaluate_polynomial(basis, fit.d, plan.eval_set);
          row.t_eval = detail::seconds_since(t0);
          row.rel_l2 = rel_l2_error(s, f_eval);
        } else {
          UnifiedInterpolant model = [&] {
            if (mode == "diag") {
              row.eps = detail::diag_eps(x, plan.eval_set);
              return fit_diag(x, y, WendlandKernel(order, row.eps), basis);
            }
            if (!eps_error[i].empty()) throw TuningError(eps_error[i]);
            row.eps = eps[i];
            return fit_auto(x, y, WendlandKernel(order, row.eps), basis, FitOptions{true});
          }();
          const FitReport& rep = model.report();
          if (mode == "unified") row.mode = "unified/" + std::string(to_string(rep.mode));
          row.cond_est = rep.cond;
          row.nnz_a = rep.nnz_a;
          row.t_assemble = rep.t_assemble;
          row.t_factor = rep.t_factor;
          row.t_solve = rep.t_solve;
          if (rep.cond_approximate) row.err_flag = "cond_approximate";
          const auto t0 = detail::Clock::now();
          const Vector s = evaluate(model, plan.eval_set);
          row.t_eval = detail::seconds_since(t0);
          row.rel_l2 = rel_l2_error(s, f_eval);
          if (observe) observe(row, model, y);
        }
      } catch (const Error& e) {
        row.err_flag = detail::sanitize(e.what());
      }
      if (csv) {
        *csv << csv_line(row) << '\n';
        csv->flush();
      }
      if (log) {
        *log << "N=" << row.n << " ell=" << row.ell << " mode=" << row.mode << " rel_l2=" << row.rel_l2
             << (row.err_flag == "ok" ? "" : " [" + row.err_flag + "]") << '\n';
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace uniterp
