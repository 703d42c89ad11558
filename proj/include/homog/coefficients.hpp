#pragma once

// 1-periodic piecewise-constant coefficient fields and problem instances.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "homog/types.hpp"

namespace homog {

/// The (M0, M1) pair carried by one piece of a material field.
struct CoefficientPair {
  Mat2 m0 = Mat2::Zero();
  Mat2 m1 = Mat2::Zero();

  friend CoefficientPair operator+(const CoefficientPair& a, const CoefficientPair& b) {
    return {a.m0 + b.m0, a.m1 + b.m1};
  }
  friend CoefficientPair operator*(double s, const CoefficientPair& a) {
    return {s * a.m0, s * a.m1};
  }
  friend bool operator==(const CoefficientPair& a, const CoefficientPair& b) {
    return a.m0 == b.m0 && a.m1 == b.m1;
  }
};

/// Value of a 1-periodic step function with half-open pieces
/// [b_j, b_{j+1}) on the unit cell.
template <class Value>
class PeriodicPiecewise {
 public:
  PeriodicPiecewise() = default;

  PeriodicPiecewise(std::vector<double> breakpoints, std::vector<Value> values)
      : breakpoints_(std::move(breakpoints)), values_(std::move(values)) {
    if (breakpoints_.size() < 2 || values_.size() + 1 != breakpoints_.size())
      throw InvariantError("piecewise field: need P+1 breakpoints for P pieces");
    if (breakpoints_.front() != 0.0 || breakpoints_.back() != 1.0)
      throw InvariantError("piecewise field: breakpoints must start at 0 and end at 1");
    for (std::size_t j = 0; j + 1 < breakpoints_.size(); ++j)
      if (!(breakpoints_[j] < breakpoints_[j + 1]))
        throw InvariantError("piecewise field: breakpoints must be strictly increasing");
  }

  static PeriodicPiecewise constant(Value v) { return PeriodicPiecewise({0.0, 1.0}, {std::move(v)}); }

  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<Value>& values() const { return values_; }
  std::size_t piece_count() const { return values_.size(); }
  double piece_length(std::size_t j) const { return breakpoints_[j + 1] - breakpoints_[j]; }
  bool is_constant() const { return values_.size() == 1; }

  /// Index of the piece containing y in [0, 1).
  std::size_t locate(double y) const {
    auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), y);
    auto idx = static_cast<std::ptrdiff_t>(it - breakpoints_.begin()) - 1;
    idx = std::clamp<std::ptrdiff_t>(idx, 0, static_cast<std::ptrdiff_t>(values_.size()) - 1);
    return static_cast<std::size_t>(idx);
  }

  const Value& at(double y) const { return values_[locate(y)]; }

  /// Value of the field x -> v(N x) at x in [0, 1).
  const Value& at_oscillatory(int n, double x) const {
    if (!(x >= 0.0 && x < 1.0))
      throw std::domain_error("evaluate_oscillatory: x must lie in [0, 1)");
    if (n < 1) throw std::invalid_argument("evaluate_oscillatory: N must be >= 1");
    const double nx = n * x;
    double y = nx - std::floor(nx);
    if (y >= 1.0) y = 0.0;
    return at(y);
  }

  /// Cell average; exact for step functions.
  Value average() const {
    if (values_.size() == 1) return values_.front();
    Value acc = piece_length(0) * values_[0];
    for (std::size_t j = 1; j < values_.size(); ++j) acc = acc + piece_length(j) * values_[j];
    return acc;
  }

  template <class F>
  auto map(F&& f) const {
    using Out = std::decay_t<decltype(f(values_.front()))>;
    std::vector<Out> out;
    out.reserve(values_.size());
    for (const auto& v : values_) out.push_back(f(v));
    return PeriodicPiecewise<Out>(breakpoints_, std::move(out));
  }

  /// Breakpoints of x -> v(N x) strictly inside (a, b).
  std::vector<double> oscillatory_breakpoints(int n, double a, double b) const {
    std::vector<double> out;
    if (values_.size() == 1) return out;
    const auto lo = static_cast<long>(std::floor(n * a)) - 1;
    const auto hi = static_cast<long>(std::ceil(n * b)) + 1;
    for (long l = lo; l <= hi; ++l)
      for (std::size_t j = 0; j + 1 < breakpoints_.size(); ++j) {
        const double x = (static_cast<double>(l) + breakpoints_[j]) / n;
        if (x > a && x < b) out.push_back(x);
      }
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  std::vector<double> breakpoints_;
  std::vector<Value> values_;
};

using MatrixField = PeriodicPiecewise<Mat2>;
using ScalarField = PeriodicPiecewise<cplx>;

inline Mat2 hermitian_part(const Mat2& m) { return 0.5 * (m + m.adjoint()); }

inline double min_hermitian_eigenvalue(const Mat2& m) {
  Eigen::SelfAdjointEigenSolver<Mat2> es(hermitian_part(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

inline bool is_hermitian(const Mat2& m, double tol = 1e-14) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol * std::max(1.0, m.cwiseAbs().maxCoeff());
}

/// Coercivity constant c of a matrix field: min over pieces of
/// lambda_min(Re M). Membership in M_c requires c > 0.
inline double coercivity_constant(const MatrixField& field) {
  double c = std::numeric_limits<double>::infinity();
  for (const auto& m : field.values()) c = std::min(c, min_hermitian_eigenvalue(m));
  return c;
}

/// ||M||_inf as the largest piecewise spectral norm.
inline double sup_norm(const MatrixField& field) {
  double s = 0.0;
  for (const auto& m : field.values()) {
    Eigen::JacobiSVD<Mat2> svd(m);
    s = std::max(s, svd.singularValues()(0));
  }
  return s;
}

/// A 1-periodic pair of 2x2 coefficient matrices with M0 = M0^* >= 0 on
/// every piece.
class MaterialField : public PeriodicPiecewise<CoefficientPair> {
 public:
  MaterialField() = default;

  MaterialField(std::vector<double> breakpoints, std::vector<CoefficientPair> pieces)
      : PeriodicPiecewise<CoefficientPair>(std::move(breakpoints), std::move(pieces)) {
    for (std::size_t j = 0; j < piece_count(); ++j) {
      const Mat2& m0 = values()[j].m0;
      if (!is_hermitian(m0)) {
        std::ostringstream os;
        os << "material field: M0 on piece " << j << " is not Hermitian";
        throw InvariantError(os.str());
      }
      Eigen::SelfAdjointEigenSolver<Mat2> es(hermitian_part(m0), Eigen::EigenvaluesOnly);
      if (es.eigenvalues().minCoeff() < -1e-14) {
        std::ostringstream os;
        os << "material field: M0 on piece " << j << " is not positive semidefinite";
        throw InvariantError(os.str());
      }
    }
  }

  static MaterialField constant(const Mat2& m0, const Mat2& m1) {
    return MaterialField({0.0, 1.0}, {CoefficientPair{m0, m1}});
  }

  MatrixField m0_field() const {
    return map([](const CoefficientPair& c) { return c.m0; });
  }
  MatrixField m1_field() const {
    return map([](const CoefficientPair& c) { return c.m1; });
  }

  /// z M0 + M1 for a complex frequency z (z = i xi + rho in the dynamic check).
  MatrixField composite(cplx z) const {
    return map([z](const CoefficientPair& c) -> Mat2 { return z * c.m0 + c.m1; });
  }
};

/// (M0(Nx), M1(Nx)) for x in [0, 1).
inline CoefficientPair evaluate_oscillatory(const MaterialField& field, int n, double x) {
  return field.at_oscillatory(n, x);
}

/// Integral means over the unit cell.
inline CoefficientPair averaged_coefficients(const MaterialField& field) { return field.average(); }

inline MaterialField averaged_field(const MaterialField& field) {
  const CoefficientPair av = field.average();
  return MaterialField::constant(av.m0, av.m1);
}

/// Largest c with rho M0 + Re M1 >= c on every piece. A value <= 0 means
/// the problem is not well posed for this rho.
inline double verify_positivity(const MaterialField& field, double rho) {
  if (!(rho > 0.0)) throw std::invalid_argument("verify_positivity: rho must be positive");
  double c = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < field.piece_count(); ++j) {
    const auto& piece = field.values()[j];
    if (!is_hermitian(piece.m0)) throw InvariantError("verify_positivity: M0 piece is not Hermitian");
    c = std::min(c, min_hermitian_eigenvalue(rho * piece.m0 + piece.m1));
  }
  return c;
}

/// Rough(N) evaluates the field at N x; Averaged replaces it by its mean.
class Oscillation {
 public:
  static Oscillation rough(int n) {
    if (n < 1) throw std::invalid_argument("Oscillation::rough: N must be >= 1");
    return Oscillation(n, false);
  }
  static Oscillation averaged() { return Oscillation(1, true); }

  bool is_averaged() const { return averaged_; }
  int n() const { return n_; }

 private:
  Oscillation(int n, bool averaged) : n_(n), averaged_(averaged) {}
  int n_ = 1;
  bool averaged_ = false;
};

using SourceFunction = std::function<Vec2(double t, double x)>;
using SpatialFunction = std::function<Vec2(double x)>;

/// (d/dt M0 + M1 + A) U = F on (0, T] with U(0) = x0 and periodic A.
struct EvolutionaryProblem {
  MaterialField field;
  Oscillation oscillation = Oscillation::rough(1);
  SourceFunction source;
  double rho = 1.0;
  double horizon = 1.0;
  SpatialFunction initial;  // empty means x0 = 0

  void validate() const {
    if (!(rho > 0.0)) throw std::invalid_argument("problem: rho must be positive");
    if (!(horizon > 0.0)) throw std::invalid_argument("problem: horizon T must be positive");
    if (!source) throw std::invalid_argument("problem: source is not set");
  }

  /// The field actually seen by the discretisation, with its oscillation count.
  MaterialField effective_field() const {
    return oscillation.is_averaged() ? averaged_field(field) : field;
  }
  int effective_n() const { return oscillation.is_averaged() ? 1 : oscillation.n(); }

  double positivity() const { return verify_positivity(effective_field(), rho); }
};

/// (M(N.) + A)(u, v) = (f, g) on (0, 1) with M in M_c.
struct StaticProblem {
  MatrixField field;
  int n = 1;
  SpatialFunction rhs;

  double coercivity() const { return coercivity_constant(field); }

  void validate() const {
    if (n < 1) throw std::invalid_argument("static problem: N must be >= 1");
    if (!rhs) throw std::invalid_argument("static problem: right-hand side not set");
    const double c = coercivity();
    if (!(c > 0.0)) {
      std::ostringstream os;
      os << "static problem: field is not in M_c (min eigenvalue of Re M is " << c << ")";
      throw CoercivityError(os.str());
    }
  }
};

}  // namespace homog
