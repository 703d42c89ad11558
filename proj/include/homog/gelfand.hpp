#pragma once

// Discrete Gelfand transform V_N, scaling T_N and their composite G_N,
// acting exactly on step functions over uniform sub-cell grids.

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "homog/types.hpp"

namespace homog {

/// Phase theta_k = 2 pi k / N of fiber k.
inline double theta(int k, int n) { return 2.0 * pi * static_cast<double>(k) / static_cast<double>(n); }

/// e^{i 2 pi s} with s reduced to [-1/2, 1/2] first; quarter turns are exact.
inline cplx unit_phase(double s) {
  const double r = s - std::round(s);
  if (r == 0.0) return {1.0, 0.0};
  if (r == 0.25) return {0.0, 1.0};
  if (r == -0.25) return {0.0, -1.0};
  if (r == 0.5 || r == -0.5) return {-1.0, 0.0};
  return std::polar(1.0, 2.0 * pi * r);
}

/// Squared L2(0,1) norm of a step function with equal cells.
inline double cell_norm_squared(const std::vector<cplx>& values) {
  if (values.empty()) return 0.0;
  double s = 0.0;
  for (const auto& v : values) s += std::norm(v);
  return s / static_cast<double>(values.size());
}

/// Element of L2_#(0, N), constant on each sub-cell [k + j/P, k + (j+1)/P).
/// values[j + k P] is the value on the j-th sub-cell of period k.
struct StepFunctionN {
  int n = 1;
  int p = 1;
  std::vector<cplx> values;

  StepFunctionN() = default;
  StepFunctionN(int n_, int p_, std::vector<cplx> v) : n(n_), p(p_), values(std::move(v)) { validate(); }

  void validate() const {
    if (n < 1 || p < 1) throw InvariantError("StepFunctionN: N and P must be positive");
    if (values.size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(p))
      throw InvariantError("StepFunctionN: value array must have length N*P");
  }

  /// ||f||^2 = (1/P) sum |values|^2.
  double norm() const {
    double s = 0.0;
    for (const auto& v : values) s += std::norm(v);
    return std::sqrt(s / p);
  }
};

/// N step functions on (0,1) with P cells each; fiber k carries phase theta_k.
struct FiberStack {
  int n = 1;
  int p = 1;
  std::vector<std::vector<cplx>> fibers;

  FiberStack() = default;
  FiberStack(int n_, int p_, std::vector<std::vector<cplx>> f) : n(n_), p(p_), fibers(std::move(f)) { validate(); }

  void validate() const {
    if (n < 1 || p < 1) throw InvariantError("FiberStack: N and P must be positive");
    if (fibers.size() != static_cast<std::size_t>(n)) throw InvariantError("FiberStack: need N fibers");
    for (const auto& f : fibers)
      if (f.size() != static_cast<std::size_t>(p)) throw InvariantError("FiberStack: each fiber needs P cells");
  }

  double norm() const {
    double s = 0.0;
    for (const auto& f : fibers) s += cell_norm_squared(f);
    return std::sqrt(s);
  }
};

namespace detail {

/// e^{sign i theta_k m} for all k, m in 0..N-1.
inline std::vector<cplx> phase_table(int n, int sign) {
  std::vector<cplx> table(static_cast<std::size_t>(n) * n);
  for (int k = 0; k < n; ++k)
    for (int m = 0; m < n; ++m) {
      // k m mod N keeps the argument small and makes the table exact at multiples of pi/2
      const long km = (static_cast<long>(k) * m) % n;
      table[static_cast<std::size_t>(k) * n + m] = unit_phase(sign * static_cast<double>(km) / n);
    }
  return table;
}

}  // namespace detail

/// (V_N f)_k(y) = N^{-1/2} sum_m f(y + m) e^{-i theta_k m}.
inline FiberStack gelfand_transform(const StepFunctionN& f) {
  f.validate();
  const int n = f.n, p = f.p;
  const auto phase = detail::phase_table(n, -1);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  std::vector<std::vector<cplx>> fibers(n, std::vector<cplx>(p, cplx(0.0)));
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < p; ++j) {
      cplx s = 0.0;
      for (int m = 0; m < n; ++m) s += f.values[j + static_cast<std::size_t>(m) * p] * phase[k * n + m];
      fibers[k][j] = scale * s;
    }
  return FiberStack(n, p, std::move(fibers));
}

/// Adjoint of V_N: f(y + m) = N^{-1/2} sum_k g_k(y) e^{+i theta_k m}.
inline StepFunctionN inverse_gelfand(const FiberStack& g) {
  g.validate();
  const int n = g.n, p = g.p;
  const auto phase = detail::phase_table(n, +1);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  std::vector<cplx> values(static_cast<std::size_t>(n) * p);
  for (int m = 0; m < n; ++m)
    for (int j = 0; j < p; ++j) {
      cplx s = 0.0;
      for (int k = 0; k < n; ++k) s += g.fibers[k][j] * phase[k * n + m];
      values[j + static_cast<std::size_t>(m) * p] = scale * s;
    }
  return StepFunctionN(n, p, std::move(values));
}

/// T_N f = N^{-1/2} f(. / N): a step function on (0,1) with N P equal cells
/// becomes one on (0, N) with P cells per period.
inline StepFunctionN scaling_transform(const std::vector<cplx>& f, int n) {
  if (n < 1) throw std::invalid_argument("scaling_transform: N must be >= 1");
  if (f.empty() || f.size() % static_cast<std::size_t>(n) != 0) {
    std::ostringstream os;
    os << "scaling_transform: cell count " << f.size() << " is not a positive multiple of N = " << n;
    throw std::invalid_argument(os.str());
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  std::vector<cplx> values(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) values[i] = scale * f[i];
  return StepFunctionN(n, static_cast<int>(f.size() / n), std::move(values));
}

inline std::vector<cplx> inverse_scaling(const StepFunctionN& g) {
  g.validate();
  const double scale = std::sqrt(static_cast<double>(g.n));
  std::vector<cplx> f(g.values.size());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = scale * g.values[i];
  return f;
}

/// G_N = V_N T_N.
inline FiberStack composite_transform(const std::vector<cplx>& f, int n) {
  return gelfand_transform(scaling_transform(f, n));
}

inline std::vector<cplx> inverse_composite(const FiberStack& g) { return inverse_scaling(inverse_gelfand(g)); }

/// The values of x -> a(N x) on (0,1) with N P cells, for a 1-periodic step
/// function a with P cells on the unit cell.
inline std::vector<cplx> oscillate(const std::vector<cplx>& a, int n) {
  if (n < 1) throw std::invalid_argument("oscillate: N must be >= 1");
  std::vector<cplx> out;
  out.reserve(a.size() * n);
  for (int m = 0; m < n; ++m) out.insert(out.end(), a.begin(), a.end());
  return out;
}

/// Multiplies every fiber by the same cell function a.
inline FiberStack multiply_fibers(const std::vector<cplx>& a, FiberStack g) {
  if (a.size() != static_cast<std::size_t>(g.p)) throw std::invalid_argument("multiply_fibers: size mismatch");
  for (auto& f : g.fibers)
    for (std::size_t j = 0; j < f.size(); ++j) f[j] *= a[j];
  return g;
}

/// sum_{l=0}^{N-1} e^{-i 2 pi n l / N}, which vanishes for n not divisible by N.
inline cplx roots_of_unity_sum(int big_n, long n) {
  if (big_n < 1) throw std::invalid_argument("roots_of_unity_sum: N must be >= 1");
  const long r = ((n % big_n) + big_n) % big_n;
  if (r == 0) {
    std::ostringstream os;
    os << "roots_of_unity_sum: n = " << n << " is divisible by N = " << big_n << " (the sum is N, not 0)";
    throw std::invalid_argument(os.str());
  }
  cplx s = 0.0;
  for (int l = 0; l < big_n; ++l) s += unit_phase(-static_cast<double>((r * l) % big_n) / big_n);
  if (!(std::abs(s) < 1e-12)) {
    std::ostringstream os;
    os << "roots_of_unity_sum: |sum| = " << std::abs(s) << " exceeds 1e-12";
    throw std::logic_error(os.str());
  }
  return s;
}

}  // namespace homog
