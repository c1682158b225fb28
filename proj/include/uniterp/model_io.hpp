#pragma once

// Versioned text format for fitted interpolants:
//
//   uniterp-model 1
//   kernel c2
//   eps 10
//   dim 2
//   degree 5
//   lo -1 -1
//   hi 1 1
//   N 150
//   M 21
//   mode hybrid
//   diagnostics q w support nnz_a nnz_l rank cond interp_residual moment_residual
//   centers            (N rows of dim coordinates)
//   c                  (N values)
//   d                  (M values)
//   end
//
// Every real is written with 17 significant digits.

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "uniterp/error.hpp"
#include "uniterp/nodes.hpp"
#include "uniterp/solver.hpp"

namespace uniterp {

inline constexpr int kModelFormatVersion = 1;

namespace detail {

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void expect_key(std::istream& is, const std::string& key) {
  std::string got;
  if (!(is >> got) || got != key) {
    throw FormatError("model file: expected '" + key + "', found '" + got + "'");
  }
}

template <typename T>
T read_value(std::istream& is, const std::string& what) {
  T v{};
  if (!(is >> v)) throw FormatError("model file: cannot read " + what);
  return v;
}

}  // namespace detail

inline void write_model(std::ostream& os, const UnifiedInterpolant& model) {
  using detail::fmt17;
  const auto& basis = model.basis();
  const auto& rep = model.report();
  const Index dim = basis.dim();
  os << "uniterp-model " << kModelFormatVersion << '\n';
  os << "kernel " << model.kernel().id() << '\n';
  os << "eps " << fmt17(model.kernel().eps()) << '\n';
  os << "dim " << dim << '\n';
  os << "degree " << basis.degree() << '\n';
  os << "lo";
  for (Index k = 0; k < dim; ++k) os << ' ' << fmt17(basis.lower()(k));
  os << "\nhi";
  for (Index k = 0; k < dim; ++k) os << ' ' << fmt17(basis.upper()(k));
  os << "\nN " << model.centers().size() << '\n';
  os << "M " << basis.size() << '\n';
  os << "mode " << to_string(model.mode()) << '\n';
  os << "diagnostics " << fmt17(rep.q) << ' ' << fmt17(rep.w) << ' ' << fmt17(rep.support) << ' ' << rep.nnz_a << ' '
     << rep.nnz_l << ' ' << rep.rank << ' ' << fmt17(rep.cond) << ' ' << fmt17(rep.interp_residual) << ' '
     << fmt17(rep.moment_residual) << '\n';
  os << "centers\n";
  const auto& x = model.centers().coords();
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index k = 0; k < dim; ++k) os << (k ? " " : "") << fmt17(x(i, k));
    os << '\n';
  }
  os << "c\n";
  for (Index i = 0; i < model.c().size(); ++i) os << fmt17(model.c()(i)) << '\n';
  os << "d\n";
  for (Index j = 0; j < model.d().size(); ++j) os << fmt17(model.d()(j)) << '\n';
  os << "end\n";
}

inline UnifiedInterpolant read_model(std::istream& is) {
  using detail::expect_key;
  using detail::read_value;
  expect_key(is, "uniterp-model");
  const int version = read_value<int>(is, "version");
  if (version != kModelFormatVersion) {
    throw FormatError("model file version " + std::to_string(version) + " is not supported");
  }
  expect_key(is, "kernel");
  const std::string kid = read_value<std::string>(is, "kernel id");
  expect_key(is, "eps");
  const double eps = read_value<double>(is, "eps");
  expect_key(is, "dim");
  const Index dim = read_value<Index>(is, "dim");
  expect_key(is, "degree");
  const int degree = read_value<int>(is, "degree");
  if (dim < 1 || degree < 0) throw FormatError("model file: bad dim/degree");
  Eigen::RowVectorXd lo(dim);
  Eigen::RowVectorXd hi(dim);
  expect_key(is, "lo");
  for (Index k = 0; k < dim; ++k) lo(k) = read_value<double>(is, "lo");
  expect_key(is, "hi");
  for (Index k = 0; k < dim; ++k) hi(k) = read_value<double>(is, "hi");
  expect_key(is, "N");
  const Index n = read_value<Index>(is, "N");
  expect_key(is, "M");
  const Index m = read_value<Index>(is, "M");
  expect_key(is, "mode");
  const FitMode mode = fit_mode_from_string(read_value<std::string>(is, "mode"));
  expect_key(is, "diagnostics");
  FitReport rep;
  rep.mode = mode;
  rep.q = read_value<double>(is, "q");
  rep.w = read_value<double>(is, "w");
  rep.support = read_value<double>(is, "support");
  rep.nnz_a = read_value<Index>(is, "nnz_a");
  rep.nnz_l = read_value<Index>(is, "nnz_l");
  rep.rank = read_value<Index>(is, "rank");
  rep.cond = read_value<double>(is, "cond");
  rep.interp_residual = read_value<double>(is, "interp_residual");
  rep.moment_residual = read_value<double>(is, "moment_residual");
  rep.cols = m;
  if (n < 1) throw FormatError("model file: N must be >= 1");

  expect_key(is, "centers");
  PointMatrix x(n, dim);
  for (Index i = 0; i < n; ++i) {
    for (Index k = 0; k < dim; ++k) x(i, k) = read_value<double>(is, "center coordinate");
  }
  expect_key(is, "c");
  Vector c(n);
  for (Index i = 0; i < n; ++i) c(i) = read_value<double>(is, "c");
  expect_key(is, "d");
  Vector d(m);
  for (Index j = 0; j < m; ++j) d(j) = read_value<double>(is, "d");
  expect_key(is, "end");

  TotalDegreeBasis basis(dim, degree, lo, hi);
  if (basis.size() != m) throw FormatError("model file: M does not match dim and degree");
  return UnifiedInterpolant(PointSet(std::move(x)), kernel_from_id(kid, eps), std::move(basis), std::move(c),
                            std::move(d), mode, rep);
}

inline void save_model(const std::string& path, const UnifiedInterpolant& model) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot open '" + path + "' for writing");
  write_model(os, model);
  if (!os) throw FormatError("write to '" + path + "' failed");
}

inline UnifiedInterpolant load_model(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open model file '" + path + "'");
  return read_model(is);
}

// Values files: one number per line, 17 significant digits.
inline void write_values(std::ostream& os, const Vector& v) {
  for (Index i = 0; i < v.size(); ++i) os << detail::fmt17(v(i)) << '\n';
}

inline void save_values(const std::string& path, const Vector& v) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot open '" + path + "' for writing");
  write_values(os, v);
}

inline Vector load_values(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open values file '" + path + "'");
  std::vector<double> vals;
  double v = 0.0;
  while (is >> v) vals.push_back(v);
  if (!is.eof()) throw FormatError("values file '" + path + "' contains a non-numeric entry");
  return Eigen::Map<Vector>(vals.data(), static_cast<Index>(vals.size()));
}

}  // namespace uniterp
