#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace homog {

using cplx = std::complex<double>;

using Mat2 = Eigen::Matrix2cd;
using Vec2 = Eigen::Vector2cd;
using VecX = Eigen::VectorXcd;
using MatX = Eigen::MatrixXcd;
using SpMat = Eigen::SparseMatrix<cplx>;
using Triplet = Eigen::Triplet<cplx>;

/// Raised when a coefficient field or assembled system loses coercivity
/// (Re M >= c with c <= 0, or a singular factorisation).
class CoercivityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a weighted quadrature rule cannot be constructed reliably.
class ConstructionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when input data violates a structural invariant of a type.
class InvariantError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an iterative method exhausts its iteration budget.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double pi = 3.14159265358979323846264338327950288;

}  // namespace homog
