#pragma once

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "uniterp/error.hpp"
#include "uniterp/harness.hpp"
#include "uniterp/kernel.hpp"
#include "uniterp/model_io.hpp"
#include "uniterp/nodes.hpp"
#include "uniterp/polynomial.hpp"
#include "uniterp/shape_tuning.hpp"
#include "uniterp/solver.hpp"

namespace uniterp {

inline constexpr int kExitOk = 0;
inline constexpr int kExitNumeric = 1;
inline constexpr int kExitUsage = 2;

namespace detail {

struct GenNodesArgs {
  std::string domain;
  long n = 0;
  std::optional<double> alpha;
  double qcluster = 1.5;
  std::optional<double> h;
  std::uint64_t seed = 1;
  std::string out;
};

struct FitArgs {
  std::string nodes;
  std::string values;
  std::string target;
  std::string kernel = "c2";
  std::optional<double> eps;
  std::optional<double> cond;
  std::string strategy = "fc";
  std::optional<int> degree;
  std::optional<double> degree_scale;
  std::string mode = "auto";
  std::string domain = "custom";
  std::string out;
};

struct EvalArgs {
  std::string model;
  std::string points;
  std::string out;
};

struct ConvergenceArgs {
  std::string config;
  std::string out;
  std::vector<std::string> overrides;
  bool quiet = false;
};

struct KernelTableArgs {
  std::string kernel = "c2";
  double eps = 1.0;
  int samples = 11;
};

inline PointSet generate_nodes(const GenNodesArgs& a) {
  if (a.domain == "chebyshev") {
    const PointSet x = chebyshev_lobatto(a.n);
    return a.alpha ? kte_map(x, *a.alpha) : x;
  }
  const DomainTag tag = domain_from_string(a.domain);
  switch (tag) {
    case DomainTag::interval:
    case DomainTag::disk:
    case DomainTag::ball: {
      if (!a.h && a.n < 2) throw ArgumentError("dart throwing needs --h or --n");
      const double h = a.h ? *a.h : dart_spacing_for_count(tag, a.n);
      return dart_throw(tag, h, a.seed);
    }
    case DomainTag::sphere:
      return sphere_spiral(a.n);
    case DomainTag::hemisphere:
      return hemisphere_fibonacci(a.n, a.qcluster);
    default:
      throw ArgumentError("no generator for domain '" + a.domain + "' (torus and custom sets are ingestion only)");
  }
}

inline int run_fit(const FitArgs& a, std::ostream& out) {
  const PointSet x = read_points(a.nodes, domain_from_string(a.domain));
  Vector y;
  if (!a.values.empty()) {
    y = load_values(a.values);
  } else {
    y = registry_lookup(a.target).sample(x);
  }
  if (y.size() != x.size()) throw ShapeError("values file has " + std::to_string(y.size()) + " entries for " +
                                             std::to_string(x.size()) + " nodes");
  const int order = kernel_order_from_id(a.kernel);
  const int degree = a.degree ? *a.degree
                              : degree_from_points(x.size(), x.dim(),
                                                   a.degree_scale.value_or(default_degree_scale(x.dim())));
  const TotalDegreeBasis basis = build_basis(x, degree);

  double eps = 0.0;
  if (a.mode == "diag" && !a.eps && !a.cond) {
    eps = 2.0 / x.separation();
  } else if (a.eps) {
    eps = *a.eps;
  } else {
    if (a.strategy != "fs" && a.strategy != "fc") throw ArgumentError("--strategy must be fs or fc");
    // A single node set: fs and fc coincide.
    eps = solve_eps_for_cond(x, order, *a.cond).eps;
  }
  const WendlandKernel kernel(order, eps);
  const FitOptions opts{true};
  UnifiedInterpolant model = [&] {
    if (a.mode == "auto") return fit_auto(x, y, kernel, basis, opts);
    if (a.mode == "diag") return fit_diag(x, y, kernel, basis);
    if (a.mode == "hybrid") return fit_hybrid(x, y, kernel, basis, opts);
    if (a.mode == "rank_deficient") return fit_rank_deficient(x, y, kernel, basis, opts);
    throw ArgumentError("--mode must be auto, diag, hybrid or rank_deficient");
  }();
  save_model(a.out, model);
  const FitReport& r = model.report();
  out << "mode=" << to_string(r.mode) << " N=" << x.size() << " M=" << basis.size() << " ell=" << degree
      << " eps=" << fmt17(eps) << " q=" << fmt17(r.q) << " w=" << fmt17(r.w) << " nnz_A=" << r.nnz_a
      << " nnz_L=" << r.nnz_l << " rank=" << r.rank << " cond=" << fmt17(r.cond)
      << " interp_residual=" << fmt17(r.interp_residual) << " moment_residual=" << fmt17(r.moment_residual) << '\n';
  return kExitOk;
}

inline int run_convergence_cmd(const ConvergenceArgs& a, std::ostream& out) {
  StudyConfig cfg = load_study_config(a.config);
  for (const auto& kv : a.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ArgumentError("--set expects key=value, got '" + kv + "'");
    set_config_value(cfg, trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
  }
  std::string path = a.out.empty() ? cfg.output : a.out;
  std::ostream* log = a.quiet ? nullptr : &out;
  if (path.empty() || path == "-") {
    run_convergence(cfg, &out, nullptr);
    return kExitOk;
  }
  std::ofstream csv(path);
  if (!csv) throw ArgumentError("cannot open '" + path + "' for writing");
  run_convergence(cfg, &csv, log);
  return kExitOk;
}

}  // namespace detail

/// Entry point of the `uniterp` tool. Returns 0 on success, 2 for usage
/// errors and 1 for numerical failures.
inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Sparse Wendland-kernel + polynomial scattered-data interpolation", "uniterp"};
  app.require_subcommand(1);

  detail::GenNodesArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-nodes", "Generate a point set and write it as a point file");
  gen_cmd->set_help_flag("--help", "Print this help message and exit");  // -h would clash with --h
  gen_cmd->add_option("--domain", gen.domain, "chebyshev | interval | disk | ball | sphere | hemisphere")->required();
  gen_cmd->add_option("--n", gen.n, "Number of points (target count for dart throwing)");
  gen_cmd->add_option("--alpha", gen.alpha, "Kosloff-Tal-Ezer parameter in (0,1) for chebyshev nodes");
  gen_cmd->add_option("--qcluster", gen.qcluster, "Hemisphere equator clustering exponent (> 1)");
  gen_cmd->add_option("--h", gen.h, "Poisson-disk spacing for dart throwing");
  gen_cmd->add_option("--seed", gen.seed, "Seed for dart throwing");
  gen_cmd->add_option("--out", gen.out, "Output point file")->required();

  detail::FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit an interpolant and write a model file");
  fit_cmd->add_option("--nodes", fit.nodes, "Point file with the data sites")->required();
  auto* values_opt = fit_cmd->add_option("--values", fit.values, "Values file (one per node)");
  auto* target_opt = fit_cmd->add_option("--target", fit.target, "Registered target function id");
  values_opt->excludes(target_opt);
  fit_cmd->add_option("--kernel", fit.kernel, "c2 | c4 | c6");
  auto* eps_opt = fit_cmd->add_option("--eps", fit.eps, "Shape parameter");
  auto* cond_opt = fit_cmd->add_option("--cond", fit.cond, "Target condition number of the Gramian");
  eps_opt->excludes(cond_opt);
  fit_cmd->add_option("--strategy", fit.strategy, "fs | fc (with --cond)");
  auto* deg_opt = fit_cmd->add_option("--degree", fit.degree, "Polynomial degree");
  auto* scale_opt = fit_cmd->add_option("--degree-scale", fit.degree_scale, "C in l = floor(C N^(1/d))");
  deg_opt->excludes(scale_opt);
  fit_cmd->add_option("--mode", fit.mode, "auto | diag | hybrid | rank_deficient");
  fit_cmd->add_option("--domain", fit.domain, "Domain tag of the node file");
  fit_cmd->add_option("--out", fit.out, "Output model file")->required();

  detail::EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a model at points and write a values file");
  eval_cmd->add_option("--model", ev.model, "Model file")->required();
  eval_cmd->add_option("--points", ev.points, "Point file")->required();
  eval_cmd->add_option("--out", ev.out, "Output values file")->required();

  detail::ConvergenceArgs conv;
  auto* conv_cmd = app.add_subcommand("convergence", "Run a convergence study and write CSV");
  conv_cmd->add_option("--config", conv.config, "Study config file (key = value)")->required();
  conv_cmd->add_option("--out", conv.out, "CSV output path ('-' for stdout)");
  conv_cmd->add_option("--set", conv.overrides, "Override a config entry, key=value");
  conv_cmd->add_flag("--quiet", conv.quiet, "No per-row progress lines");

  detail::KernelTableArgs kt;
  auto* kt_cmd = app.add_subcommand("kernel-table", "Print kernel values on a radius grid");
  kt_cmd->add_option("--kernel", kt.kernel, "c2 | c4 | c6");
  kt_cmd->add_option("--eps", kt.eps, "Shape parameter");
  kt_cmd->add_option("--samples", kt.samples, "Number of radii in [0, 1/eps]");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (*gen_cmd) {
      const PointSet x = detail::generate_nodes(gen);
      write_points(gen.out, x);
      out << "wrote " << x.size() << " points (d=" << x.dim() << ", q=" << detail::fmt17(x.separation()) << ") to "
          << gen.out << '\n';
      return kExitOk;
    }
    if (*fit_cmd) {
      if (fit.values.empty() && fit.target.empty()) throw ArgumentError("fit needs --values or --target");
      if (!fit.eps && !fit.cond && fit.mode != "diag") throw ArgumentError("fit needs --eps or --cond");
      return detail::run_fit(fit, out);
    }
    if (*eval_cmd) {
      const UnifiedInterpolant model = load_model(ev.model);
      const PointSet xe = read_points(ev.points);
      save_values(ev.out, evaluate(model, xe));
      out << "wrote " << xe.size() << " values to " << ev.out << '\n';
      return kExitOk;
    }
    if (*conv_cmd) return detail::run_convergence_cmd(conv, out);
    if (*kt_cmd) {
      const WendlandKernel kernel = kernel_from_id(kt.kernel, kt.eps);
      if (kt.samples < 2) throw ArgumentError("--samples must be >= 2");
      out << "dist,phi\n";
      for (int i = 0; i < kt.samples; ++i) {
        const double dist = kernel.support_radius() * i / (kt.samples - 1);
        out << detail::fmt17(dist) << ',' << detail::fmt17(kernel.eval(dist)) << '\n';
      }
      return kExitOk;
    }
  } catch (const ArgumentError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  }
  return kExitUsage;
}

}  // namespace uniterp
