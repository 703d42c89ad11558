#pragma once

// Truncated Fourier representation of the fiber operators M(.) + N A_theta,
// resolvent-difference norms and the static and frequency-sampled
// homogenisation bounds; plus the static cG solver used for cross-checks.

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <vector>

#include <Eigen/LU>
#include <Eigen/SparseLU>

#include "homog/coefficients.hpp"
#include "homog/fem_space.hpp"
#include "homog/gelfand.hpp"
#include "homog/types.hpp"

namespace homog {

/// c_r = int_0^1 m(y) e^{-2 pi i r y} dy, exact for step functions.
template <class Value>
Value fourier_coefficient(const PeriodicPiecewise<Value>& field, long r) {
  if (r == 0) return field.average();
  const auto& b = field.breakpoints();
  const auto& v = field.values();
  const cplx denom(0.0, -2.0 * pi * static_cast<double>(r));
  Value acc = v[0] * cplx(0.0);
  for (std::size_t j = 0; j < v.size(); ++j) {
    const cplx diff = unit_phase(-static_cast<double>(r) * b[j + 1]) - unit_phase(-static_cast<double>(r) * b[j]);
    acc = acc + v[j] * (diff / denom);
  }
  return acc;
}

/// Coefficients c_{-R}, ..., c_R; entry r + R holds c_r.
template <class Value>
std::vector<Value> fourier_coefficients(const PeriodicPiecewise<Value>& field, long max_mode) {
  std::vector<Value> out;
  out.reserve(2 * max_mode + 1);
  for (long r = -max_mode; r <= max_mode; ++r) out.push_back(fourier_coefficient(field, r));
  return out;
}

/// Matrix of M(.) + N A_theta on span{e^{i(2 pi m + theta) y} e_c : |m| <= L}.
/// Basis index c (2L + 1) + (m + L).
struct FiberOperator {
  int n = 1;
  int k = 0;
  int l = 4;
  double theta = 0.0;
  MatX matrix;

  Eigen::Index modes() const { return 2 * l + 1; }
  Eigen::Index index(int component, int m) const { return component * modes() + (m + l); }
};

namespace detail {

inline void check_truncation(int l) {
  if (l < 4) throw std::invalid_argument("fiber operator: truncation L must be >= 4");
}

}  // namespace detail

/// N A_theta alone: N i (2 pi m + theta) coupling the two components.
inline MatX fiber_derivative_block(int n, int k, int l) {
  detail::check_truncation(l);
  const Eigen::Index modes = 2 * l + 1;
  MatX a = MatX::Zero(2 * modes, 2 * modes);
  const double th = theta(k, n);
  for (int m = -l; m <= l; ++m) {
    const cplx s(0.0, n * (2.0 * pi * m + th));
    a(m + l, modes + m + l) = s;
    a(modes + m + l, m + l) = s;
  }
  return a;
}

/// Block-Toeplitz multiplication matrix with entries c_{m - m'}.
inline MatX fiber_multiplication_block(const MatrixField& field, int l) {
  detail::check_truncation(l);
  const Eigen::Index modes = 2 * l + 1;
  const auto coeff = fourier_coefficients(field, 2L * l);
  MatX t = MatX::Zero(2 * modes, 2 * modes);
  for (int m = -l; m <= l; ++m)
    for (int mp = -l; mp <= l; ++mp) {
      const Mat2& c = coeff[static_cast<std::size_t>(m - mp + 2 * l)];
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) t(a * modes + m + l, b * modes + mp + l) = c(a, b);
    }
  return t;
}

/// Fiber k of the rescaled static operator; rejects fields outside M_c.
inline FiberOperator build_fiber(const MatrixField& field, int n, int k, int l) {
  if (n < 1 || k < 0 || k >= n) throw std::invalid_argument("build_fiber: need N >= 1 and 0 <= k < N");
  detail::check_truncation(l);
  const double c = coercivity_constant(field);
  if (!(c > 0.0)) {
    std::ostringstream os;
    os << "build_fiber: field violates Re M >= c 1 with c > 0 (min eigenvalue " << c << ")";
    throw CoercivityError(os.str());
  }
  FiberOperator op;
  op.n = n;
  op.k = k;
  op.l = l;
  op.theta = theta(k, n);
  op.matrix = fiber_multiplication_block(field, l) + fiber_derivative_block(n, k, l);
  return op;
}

inline FiberOperator build_averaged_fiber(const MatrixField& field, int n, int k, int l) {
  return build_fiber(MatrixField::constant(field.average()), n, k, l);
}

inline MatX fiber_resolvent(const FiberOperator& op) {
  Eigen::PartialPivLU<MatX> lu(op.matrix);
  return lu.inverse();
}

struct PowerIterationOptions {
  double tolerance = 1e-8;
  int max_iterations = 20000;
  unsigned seed = 12345;
};

/// Largest singular value by power iteration on X^* X from a random complex
/// start; stops when successive estimates agree to the relative tolerance.
inline double top_singular_value(const MatX& x, const PowerIterationOptions& opt = {}) {
  if (x.size() == 0) return 0.0;
  std::mt19937 gen(opt.seed);
  std::normal_distribution<double> dist;
  VecX v(x.cols());
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = cplx(dist(gen), dist(gen));
  v.normalize();
  double lambda = 0.0;
  double residual = std::numeric_limits<double>::infinity();
  for (int it = 0; it < opt.max_iterations; ++it) {
    const VecX xv = x * v;
    VecX w = x.adjoint() * xv;
    const double next = std::real(v.dot(w));
    const double wn = w.norm();
    if (wn == 0.0) return 0.0;
    residual = (w - next * v).norm();
    const bool settled = it > 0 && std::abs(next - lambda) <= opt.tolerance * next;
    lambda = next;
    if (settled) return std::sqrt(std::max(lambda, 0.0));
    v = w / wn;
  }
  std::ostringstream os;
  os << "top_singular_value: no convergence after " << opt.max_iterations << " iterations (estimate "
     << std::sqrt(std::max(lambda, 0.0)) << ", residual " << residual << ")";
  throw ConvergenceError(os.str());
}

/// Operator norm of (M(.) + N A_theta_k)^{-1} - (M_av + N A_theta_k)^{-1}
/// at truncation L, together with the value at 2L.
struct ResolventDifference {
  double norm = 0.0;
  double norm_refined = 0.0;

  /// L and 2L agree within 1% (or both are negligible).
  bool truncation_stable(double rel = 0.01) const {
    const double scale = std::max(norm, norm_refined);
    return scale < 1e-13 || std::abs(norm - norm_refined) <= rel * scale;
  }
};

inline double resolvent_difference_at(const MatrixField& field, int n, int k, int l,
                                      const PowerIterationOptions& opt = {}) {
  const MatX diff = fiber_resolvent(build_fiber(field, n, k, l)) - fiber_resolvent(build_averaged_fiber(field, n, k, l));
  return top_singular_value(diff, opt);
}

inline ResolventDifference resolvent_difference_norm(const MatrixField& field, int n, int k, int l,
                                                     const PowerIterationOptions& opt = {}) {
  return {resolvent_difference_at(field, n, k, l, opt), resolvent_difference_at(field, n, k, 2 * l, opt)};
}

/// (1/pi)(2 (1 + ||M||_inf / c)^2 + 1) / N.
inline double homstat_bound(const MatrixField& field, int n) {
  const double c = coercivity_constant(field);
  if (!(c > 0.0)) throw CoercivityError("homstat_bound: field is not in M_c");
  const double r = 1.0 + sup_norm(field) / c;
  return (2.0 * r * r + 1.0) / (pi * n);
}

/// One row of a bound sweep.
struct BoundReport {
  int n = 1;
  int k = 0;
  int l = 4;
  double xi = 0.0;
  double computed_norm = 0.0;
  double computed_norm_refined = 0.0;
  double paper_bound = 0.0;
  double slope = std::numeric_limits<double>::quiet_NaN();
  double kappa = std::numeric_limits<double>::quiet_NaN();

  double ratio() const { return paper_bound > 0.0 ? computed_norm / paper_bound : 0.0; }
};

inline void write_bound_csv_header(std::ostream& os) { os << "N,k,L,xi,norm,norm_2L,bound,ratio,slope,kappa\n"; }

inline void write_bound_csv_row(std::ostream& os, const BoundReport& r) {
  os.precision(10);
  os << r.n << ',' << r.k << ',' << r.l << ',' << r.xi << ',' << r.computed_norm << ',' << r.computed_norm_refined
     << ',' << r.paper_bound << ',' << r.ratio() << ',' << r.slope << ',' << r.kappa << '\n';
}

/// Static check over all fibers k of one N.
inline std::vector<BoundReport> static_bound_sweep(const MatrixField& field, int n, int l,
                                                   const PowerIterationOptions& opt = {}) {
  std::vector<BoundReport> out;
  const double bound = homstat_bound(field, n);
  for (int k = 0; k < n; ++k) {
    const auto d = resolvent_difference_norm(field, n, k, l, opt);
    BoundReport r;
    r.n = n;
    r.k = k;
    r.l = l;
    r.computed_norm = d.norm;
    r.computed_norm_refined = d.norm_refined;
    r.paper_bound = bound;
    out.push_back(r);
  }
  return out;
}

/// Empirical kappa for the frequency-sampled dynamic estimate:
/// max over xi and k of N ||difference for (i xi + rho) M0 + M1|| / |i xi + rho|^2.
struct DynamicCheck {
  int n = 1;
  double kappa = 0.0;
  std::vector<BoundReport> rows;
};

inline DynamicCheck dynamic_bound_check(const MaterialField& field, double rho, const std::vector<double>& xi_samples,
                                        int n, int l, const PowerIterationOptions& opt = {}) {
  if (xi_samples.empty()) throw std::invalid_argument("dynamic_bound_check: empty xi sample list");
  const double c = verify_positivity(field, rho);
  if (!(c > 0.0)) throw CoercivityError("dynamic_bound_check: positivity rho M0 + Re M1 >= c fails");
  DynamicCheck out;
  out.n = n;
  for (double xi : xi_samples) {
    const cplx z(rho, xi);
    const MatrixField composite = field.composite(z);
    const double scale = 1.0 / std::norm(z);
    for (int k = 0; k < n; ++k) {
      const auto d = resolvent_difference_norm(composite, n, k, l, opt);
      BoundReport r;
      r.n = n;
      r.k = k;
      r.l = l;
      r.xi = xi;
      r.computed_norm = d.norm * scale;
      r.computed_norm_refined = d.norm_refined * scale;
      r.paper_bound = homstat_bound(composite, n) * scale;
      r.kappa = n * r.computed_norm;
      out.kappa = std::max(out.kappa, r.kappa);
      out.rows.push_back(r);
    }
  }
  for (auto& r : out.rows) r.kappa = out.kappa;
  return out;
}

/// Galerkin solution [u; v] of (M(N .) + A)(u, v) = (f, g) in the periodic cG space.
inline VecX static_solve_fem(const StaticProblem& problem, const PeriodicCgSpace& space) {
  problem.validate();
  const SpMat mat = assemble_block_mass(space, problem.field, problem.n) +
                    block_derivative_operator(assemble_derivative(space));
  Eigen::SparseLU<SpMat> lu;
  lu.compute(mat);
  if (lu.info() != Eigen::Success) {
    std::ostringstream os;
    os << "static_solve_fem: factorisation failed (coercivity constant " << problem.coercivity() << ")";
    throw CoercivityError(os.str());
  }
  return lu.solve(assemble_block_load(space, problem.rhs, space.degree() + 3));
}

/// Solution of the truncated fiber system for fiber data given in the
/// Fourier basis of the fiber operator.
inline VecX fiber_solve(const FiberOperator& op, const VecX& data) {
  if (data.size() != op.matrix.rows()) throw std::invalid_argument("fiber_solve: data size mismatch");
  return op.matrix.partialPivLu().solve(data);
}

/// u(x) = sum_m w_m e^{2 pi i (m N + k) x}, the physical function carried by a
/// fiber-k solution w.
inline Vec2 fiber_field_value(const FiberOperator& op, const VecX& w, double x) {
  Vec2 out = Vec2::Zero();
  const Eigen::Index modes = op.modes();
  for (int m = -op.l; m <= op.l; ++m) {
    const cplx e = unit_phase(static_cast<double>(static_cast<long>(m) * op.n + op.k) * x);
    out(0) += w(m + op.l) * e;
    out(1) += w(modes + m + op.l) * e;
  }
  return out;
}

/// Operator norm of the discrete static resolvent in the L2 mass norm,
/// || G^{1/2} (M_h + A_h)^{-1} G^{1/2} ||_2 with G the block mass matrix.
inline double static_resolvent_norm(const PeriodicCgSpace& space, const MatrixField& field, int n,
                                    const PowerIterationOptions& opt = {}) {
  const MatX sys = MatX(assemble_block_mass(space, field, n) + block_derivative_operator(assemble_derivative(space)));
  const Eigen::MatrixXd g = Eigen::MatrixXd(block_diagonal(assemble_mass(space)).real());
  Eigen::LLT<Eigen::MatrixXd> llt(g);
  if (llt.info() != Eigen::Success) throw std::runtime_error("static_resolvent_norm: mass is not positive definite");
  const Eigen::MatrixXd lower_real = llt.matrixL();
  const MatX lower = lower_real.cast<cplx>();
  const MatX x = lower.adjoint() * sys.partialPivLu().solve(lower);
  return top_singular_value(x, opt);
}

}  // namespace homog
