#pragma once

// Periodic continuous Galerkin space of degree p on (0, 1) and assembly of
// the spatial matrices used by the space-time method.

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "homog/coefficients.hpp"
#include "homog/polynomial.hpp"
#include "homog/types.hpp"

namespace homog {

/// Cell endpoints 0 = x_0 < ... < x_K = 1.
class SpacePartition {
 public:
  SpacePartition() = default;
  explicit SpacePartition(std::vector<double> nodes) : nodes_(std::move(nodes)) {
    if (nodes_.size() < 2) throw InvariantError("space partition: need at least one cell");
    if (nodes_.front() != 0.0 || nodes_.back() != 1.0)
      throw InvariantError("space partition: endpoints must be exactly 0 and 1");
    for (std::size_t k = 0; k + 1 < nodes_.size(); ++k)
      if (!(nodes_[k] < nodes_[k + 1]))
        throw InvariantError("space partition: nodes must be strictly increasing");
    uniform_ = true;
    const double h = 1.0 / cells();
    for (std::size_t k = 0; k < nodes_.size(); ++k)
      if (std::abs(nodes_[k] - k * h) > 1e-14) uniform_ = false;
  }

  static SpacePartition uniform(std::size_t cells) {
    if (cells == 0) throw std::invalid_argument("space partition: zero cells");
    std::vector<double> x(cells + 1);
    for (std::size_t k = 0; k <= cells; ++k) x[k] = static_cast<double>(k) / cells;
    x.back() = 1.0;
    return SpacePartition(std::move(x));
  }

  std::size_t cells() const { return nodes_.size() - 1; }
  double left(std::size_t k) const { return nodes_[k]; }
  double right(std::size_t k) const { return nodes_[k + 1]; }
  double length(std::size_t k) const { return nodes_[k + 1] - nodes_[k]; }
  const std::vector<double>& nodes() const { return nodes_; }

  /// Cell index containing x in [0, 1]; x = 1 belongs to the last cell.
  std::size_t locate(double x) const {
    std::size_t k;
    if (uniform_) {
      k = static_cast<std::size_t>(std::max(0.0, std::floor(x * cells())));
      k = std::min(k, cells() - 1);
      // correct for rounding in x * K
      if (k > 0 && x < nodes_[k]) --k;
      if (k + 1 < cells() && x >= nodes_[k + 1]) ++k;
      return k;
    }
    auto it = std::upper_bound(nodes_.begin(), nodes_.end(), x);
    auto idx = static_cast<std::ptrdiff_t>(it - nodes_.begin()) - 1;
    idx = std::clamp<std::ptrdiff_t>(idx, 0, static_cast<std::ptrdiff_t>(cells()) - 1);
    return static_cast<std::size_t>(idx);
  }

  /// Splits every cell into `factor` equal children.
  SpacePartition refined(std::size_t factor) const {
    std::vector<double> x;
    x.reserve(cells() * factor + 1);
    for (std::size_t k = 0; k < cells(); ++k)
      for (std::size_t j = 0; j < factor; ++j)
        x.push_back(left(k) + length(k) * static_cast<double>(j) / factor);
    x.push_back(1.0);
    return SpacePartition(std::move(x));
  }

 private:
  std::vector<double> nodes_;
  bool uniform_ = false;
};

/// Nodal Lagrange basis on Gauss-Lobatto points in every cell, with the
/// two boundary nodes identified (periodic). dof_count = K p.
class PeriodicCgSpace {
 public:
  PeriodicCgSpace(SpacePartition partition, int p) : partition_(std::move(partition)), p_(p) {
    if (p < 1) throw std::invalid_argument("PeriodicCgSpace: p >= 1 required for continuity");
    if (partition_.cells() < 2) throw std::invalid_argument("PeriodicCgSpace: need K >= 2 cells");
    auto ref = poly::gauss_lobatto_points(p);
    for (auto& r : ref) r = 0.5 * (r + 1.0);  // [0, 1]
    ref.front() = 0.0;
    ref.back() = 1.0;
    basis_ = poly::LagrangeBasis(ref);
  }

  const SpacePartition& partition() const { return partition_; }
  int degree() const { return p_; }
  std::size_t cells() const { return partition_.cells(); }
  std::size_t dof_count() const { return cells() * static_cast<std::size_t>(p_); }
  const poly::LagrangeBasis& reference_basis() const { return basis_; }

  /// Global index of local node l (0..p) on cell k.
  std::size_t global_index(std::size_t k, int l) const {
    return (k * static_cast<std::size_t>(p_) + static_cast<std::size_t>(l)) % dof_count();
  }

  /// Physical coordinate of global dof i.
  double dof_coordinate(std::size_t i) const {
    const std::size_t k = i / static_cast<std::size_t>(p_);
    const int l = static_cast<int>(i % static_cast<std::size_t>(p_));
    return partition_.left(k) + partition_.length(k) * basis_.nodes()[l];
  }

  double basis_value(std::size_t i, double x) const {
    const std::size_t k = partition_.locate(x);
    const double s = (x - partition_.left(k)) / partition_.length(k);
    double v = 0.0;
    for (int l = 0; l <= p_; ++l)
      if (global_index(k, l) == i) v += basis_.value(l, s);
    return v;
  }

  /// Evaluates sum_i c_i phi_i(x) for one scalar component.
  template <class Coeffs>
  cplx evaluate(const Coeffs& c, double x) const {
    const std::size_t k = partition_.locate(x);
    const double s = (x - partition_.left(k)) / partition_.length(k);
    cplx v = 0.0;
    for (int l = 0; l <= p_; ++l) v += c[global_index(k, l)] * basis_.value(l, s);
    return v;
  }

  /// Evaluates a two-component state stored as [u dofs; v dofs].
  Vec2 evaluate_state(const VecX& c, double x) const {
    const std::size_t n = dof_count();
    const std::size_t k = partition_.locate(x);
    const double s = (x - partition_.left(k)) / partition_.length(k);
    Vec2 v = Vec2::Zero();
    for (int l = 0; l <= p_; ++l) {
      const std::size_t g = global_index(k, l);
      const double b = basis_.value(l, s);
      v(0) += c(static_cast<Eigen::Index>(g)) * b;
      v(1) += c(static_cast<Eigen::Index>(n + g)) * b;
    }
    return v;
  }

  /// Derivative of a two-component state at x (one-sided inside cell k).
  Vec2 evaluate_state_derivative(const VecX& c, double x) const {
    const std::size_t n = dof_count();
    const std::size_t k = partition_.locate(x);
    const double h = partition_.length(k);
    const double s = (x - partition_.left(k)) / h;
    Vec2 v = Vec2::Zero();
    for (int l = 0; l <= p_; ++l) {
      const std::size_t g = global_index(k, l);
      const double b = basis_.derivative(l, s) / h;
      v(0) += c(static_cast<Eigen::Index>(g)) * b;
      v(1) += c(static_cast<Eigen::Index>(n + g)) * b;
    }
    return v;
  }

 private:
  SpacePartition partition_;
  int p_;
  poly::LagrangeBasis basis_;
};

inline PeriodicCgSpace build_space(const SpacePartition& partition, int p) {
  return PeriodicCgSpace(partition, p);
}

namespace detail {

/// Sub-cells of cell k on which x -> field(N x) is constant.
template <class Value>
std::vector<double> subcell_points(const PeriodicCgSpace& space, std::size_t k,
                                   const PeriodicPiecewise<Value>& field, int n) {
  const double a = space.partition().left(k);
  const double b = space.partition().right(k);
  std::vector<double> pts{a};
  const double guard = 1e-14 * (b - a);
  for (double x : field.oscillatory_breakpoints(n, a, b))
    if (x - pts.back() > guard && b - x > guard) pts.push_back(x);
  pts.push_back(b);
  return pts;
}

/// Coefficient value on the sub-cell (lo, hi) of x -> field(N x).
template <class Value>
const Value& subcell_value(const PeriodicPiecewise<Value>& field, int n, double lo, double hi) {
  return field.at_oscillatory(n, std::min(0.5 * (lo + hi), std::nextafter(1.0, 0.0)));
}

}  // namespace detail

/// Entries int_0^1 m(N x) phi_j(x) phi_i(x) dx for a scalar step function m,
/// integrated exactly by splitting cells at the breakpoints of m(N .).
inline SpMat assemble_weighted_mass(const PeriodicCgSpace& space, const ScalarField& weight, int n) {
  const int p = space.degree();
  const auto gl = poly::gauss_legendre(p + 1);
  const auto& basis = space.reference_basis();
  std::vector<Triplet> trips;
  std::vector<double> phi;
  for (std::size_t k = 0; k < space.cells(); ++k) {
    const double x0 = space.partition().left(k);
    const double h = space.partition().length(k);
    const auto pts = detail::subcell_points(space, k, weight, n);
    Eigen::MatrixXcd local = Eigen::MatrixXcd::Zero(p + 1, p + 1);
    for (std::size_t s = 0; s + 1 < pts.size(); ++s) {
      const cplx m = detail::subcell_value(weight, n, pts[s], pts[s + 1]);
      if (m == cplx(0.0)) continue;
      const double half = 0.5 * (pts[s + 1] - pts[s]);
      const double mid = 0.5 * (pts[s + 1] + pts[s]);
      for (std::size_t g = 0; g < gl.points.size(); ++g) {
        const double x = mid + half * gl.points[g];
        basis.values((x - x0) / h, phi);
        const double w = half * gl.weights[g];
        for (int i = 0; i <= p; ++i)
          for (int j = 0; j <= p; ++j) local(i, j) += m * w * phi[i] * phi[j];
      }
    }
    for (int i = 0; i <= p; ++i)
      for (int j = 0; j <= p; ++j)
        trips.emplace_back(space.global_index(k, i), space.global_index(k, j), local(i, j));
  }
  const auto nd = static_cast<Eigen::Index>(space.dof_count());
  SpMat mat(nd, nd);
  mat.setFromTriplets(trips.begin(), trips.end());
  return mat;
}

/// Scalar weighted mass for entry (a, b) of a matrix field.
inline SpMat assemble_weighted_mass(const PeriodicCgSpace& space, const MatrixField& field, int n,
                                    int row, int col) {
  return assemble_weighted_mass(space, field.map([row, col](const Mat2& m) { return m(row, col); }), n);
}

/// Unit-weight mass matrix.
inline SpMat assemble_mass(const PeriodicCgSpace& space) {
  return assemble_weighted_mass(space, ScalarField::constant(1.0), 1);
}

/// 2x2-block weighted mass over the product state [u; v] with weight M(N .).
inline SpMat assemble_block_mass(const PeriodicCgSpace& space, const MatrixField& field, int n) {
  const int p = space.degree();
  const auto nd = space.dof_count();
  const auto gl = poly::gauss_legendre(p + 1);
  const auto& basis = space.reference_basis();
  std::vector<Triplet> trips;
  std::vector<double> phi;
  for (std::size_t k = 0; k < space.cells(); ++k) {
    const double x0 = space.partition().left(k);
    const double h = space.partition().length(k);
    const auto pts = detail::subcell_points(space, k, field, n);
    Eigen::MatrixXd local = Eigen::MatrixXd::Zero(p + 1, p + 1);
    std::vector<Eigen::MatrixXcd> blocks(4, Eigen::MatrixXcd::Zero(p + 1, p + 1));
    for (std::size_t s = 0; s + 1 < pts.size(); ++s) {
      const Mat2& m = detail::subcell_value(field, n, pts[s], pts[s + 1]);
      const double half = 0.5 * (pts[s + 1] - pts[s]);
      const double mid = 0.5 * (pts[s + 1] + pts[s]);
      local.setZero();
      for (std::size_t g = 0; g < gl.points.size(); ++g) {
        const double x = mid + half * gl.points[g];
        basis.values((x - x0) / h, phi);
        const double w = half * gl.weights[g];
        for (int i = 0; i <= p; ++i)
          for (int j = 0; j <= p; ++j) local(i, j) += w * phi[i] * phi[j];
      }
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
          if (m(a, b) != cplx(0.0)) blocks[2 * a + b] += m(a, b) * local.cast<cplx>();
    }
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        const auto& blk = blocks[2 * a + b];
        for (int i = 0; i <= p; ++i)
          for (int j = 0; j <= p; ++j)
            if (blk(i, j) != cplx(0.0))
              trips.emplace_back(a * nd + space.global_index(k, i), b * nd + space.global_index(k, j),
                                 blk(i, j));
      }
  }
  const auto dim = static_cast<Eigen::Index>(2 * nd);
  SpMat mat(dim, dim);
  mat.setFromTriplets(trips.begin(), trips.end());
  return mat;
}

/// D_ij = int_0^1 phi_j'(x) phi_i(x) dx with periodic wrap.
inline SpMat assemble_derivative(const PeriodicCgSpace& space) {
  const int p = space.degree();
  const auto gl = poly::gauss_legendre(p + 1);
  const auto& basis = space.reference_basis();
  std::vector<Triplet> trips;
  std::vector<double> phi, dphi;
  // the reference matrix is mesh independent: int phi_j' phi_i over any cell
  Eigen::MatrixXd local = Eigen::MatrixXd::Zero(p + 1, p + 1);
  for (std::size_t g = 0; g < gl.points.size(); ++g) {
    const double s = 0.5 * (gl.points[g] + 1.0);
    basis.values(s, phi);
    basis.derivatives(s, dphi);
    for (int i = 0; i <= p; ++i)
      for (int j = 0; j <= p; ++j) local(i, j) += 0.5 * gl.weights[g] * dphi[j] * phi[i];
  }
  for (std::size_t k = 0; k < space.cells(); ++k)
    for (int i = 0; i <= p; ++i)
      for (int j = 0; j <= p; ++j)
        trips.emplace_back(space.global_index(k, i), space.global_index(k, j), local(i, j));
  const auto nd = static_cast<Eigen::Index>(space.dof_count());
  SpMat mat(nd, nd);
  mat.setFromTriplets(trips.begin(), trips.end());
  return mat;
}

/// [[0, D], [D, 0]] over the product state.
inline SpMat block_derivative_operator(const SpMat& d) {
  const auto n = d.rows();
  std::vector<Triplet> trips;
  trips.reserve(2 * static_cast<std::size_t>(d.nonZeros()));
  for (Eigen::Index c = 0; c < d.outerSize(); ++c)
    for (SpMat::InnerIterator it(d, c); it; ++it) {
      trips.emplace_back(it.row(), n + it.col(), it.value());
      trips.emplace_back(n + it.row(), it.col(), it.value());
    }
  SpMat a(2 * n, 2 * n);
  a.setFromTriplets(trips.begin(), trips.end());
  return a;
}

/// Entries int_0^1 g phi_i by per-cell Gauss quadrature with `points`
/// nodes (default p + 2).
inline VecX assemble_load(const PeriodicCgSpace& space, const std::function<cplx(double)>& g,
                          int points = 0) {
  const int p = space.degree();
  const auto gl = poly::gauss_legendre(points > 0 ? points : p + 2);
  const auto& basis = space.reference_basis();
  VecX out = VecX::Zero(static_cast<Eigen::Index>(space.dof_count()));
  std::vector<double> phi;
  for (std::size_t k = 0; k < space.cells(); ++k) {
    const double x0 = space.partition().left(k);
    const double h = space.partition().length(k);
    for (std::size_t q = 0; q < gl.points.size(); ++q) {
      const double s = 0.5 * (gl.points[q] + 1.0);
      basis.values(s, phi);
      const cplx gv = g(x0 + h * s) * (0.5 * h * gl.weights[q]);
      for (int i = 0; i <= p; ++i) out(static_cast<Eigen::Index>(space.global_index(k, i))) += gv * phi[i];
    }
  }
  return out;
}

/// Load vector over the product state for a two-component function.
inline VecX assemble_block_load(const PeriodicCgSpace& space, const SpatialFunction& g, int points = 0) {
  const int p = space.degree();
  const auto gl = poly::gauss_legendre(points > 0 ? points : p + 2);
  const auto& basis = space.reference_basis();
  const auto nd = static_cast<Eigen::Index>(space.dof_count());
  VecX out = VecX::Zero(2 * nd);
  std::vector<double> phi;
  for (std::size_t k = 0; k < space.cells(); ++k) {
    const double x0 = space.partition().left(k);
    const double h = space.partition().length(k);
    for (std::size_t q = 0; q < gl.points.size(); ++q) {
      const double s = 0.5 * (gl.points[q] + 1.0);
      basis.values(s, phi);
      const Vec2 gv = g(x0 + h * s) * (0.5 * h * gl.weights[q]);
      for (int i = 0; i <= p; ++i) {
        const auto gi = static_cast<Eigen::Index>(space.global_index(k, i));
        out(gi) += gv(0) * phi[i];
        out(nd + gi) += gv(1) * phi[i];
      }
    }
  }
  return out;
}

/// Block-diagonal [[Mass, 0], [0, Mass]].
inline SpMat block_diagonal(const SpMat& m) {
  const auto n = m.rows();
  std::vector<Triplet> trips;
  for (Eigen::Index c = 0; c < m.outerSize(); ++c)
    for (SpMat::InnerIterator it(m, c); it; ++it) {
      trips.emplace_back(it.row(), it.col(), it.value());
      trips.emplace_back(n + it.row(), n + it.col(), it.value());
    }
  SpMat out(2 * n, 2 * n);
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

/// L2 projection of a two-component function onto the product cG space.
inline VecX l2_project(const PeriodicCgSpace& space, const SpatialFunction& g) {
  const SpMat mass = block_diagonal(assemble_mass(space));
  Eigen::SimplicialLDLT<SpMat> ldlt(mass);
  if (ldlt.info() != Eigen::Success) throw std::runtime_error("l2_project: mass factorisation failed");
  return ldlt.solve(assemble_block_load(space, g, space.degree() + 3));
}

/// All spatial matrices of the method for one problem instance.
struct AssembledOperators {
  SpMat m0h;   // 2x2-block mass weighted with M0(N .)
  SpMat m1h;   // 2x2-block mass weighted with M1(N .)
  SpMat ah;    // [[0, D], [D, 0]]
  SpMat mass;  // scalar unit mass
  SpMat d;     // scalar derivative coupling
};

inline AssembledOperators assemble_operators(const PeriodicCgSpace& space, const MaterialField& field, int n) {
  AssembledOperators ops;
  ops.m0h = assemble_block_mass(space, field.m0_field(), n);
  ops.m1h = assemble_block_mass(space, field.m1_field(), n);
  ops.d = assemble_derivative(space);
  ops.ah = block_derivative_operator(ops.d);
  ops.mass = assemble_mass(space);
  return ops;
}

inline AssembledOperators assemble_operators(const PeriodicCgSpace& space, const EvolutionaryProblem& problem) {
  return assemble_operators(space, problem.effective_field(), problem.effective_n());
}

/// Nodal interpolation matrix from `coarse` into `fine` (exact prolongation
/// when the fine space contains the coarse one).
inline SpMat interpolation_matrix(const PeriodicCgSpace& coarse, const PeriodicCgSpace& fine) {
  std::vector<Triplet> trips;
  const auto& basis = coarse.reference_basis();
  for (std::size_t i = 0; i < fine.dof_count(); ++i) {
    const double x = fine.dof_coordinate(i);
    const std::size_t k = coarse.partition().locate(x);
    const double s = (x - coarse.partition().left(k)) / coarse.partition().length(k);
    for (int l = 0; l <= coarse.degree(); ++l) {
      const double v = basis.value(l, s);
      if (std::abs(v) > 1e-15) trips.emplace_back(i, coarse.global_index(k, l), v);
    }
  }
  SpMat p(static_cast<Eigen::Index>(fine.dof_count()), static_cast<Eigen::Index>(coarse.dof_count()));
  p.setFromTriplets(trips.begin(), trips.end());
  return p;
}

/// Coordinate text format: one "row col re im" line per stored entry.
inline void write_coordinate(std::ostream& os, const SpMat& m) {
  os.precision(17);
  os << "% " << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << '\n';
  for (Eigen::Index c = 0; c < m.outerSize(); ++c)
    for (SpMat::InnerIterator it(m, c); it; ++it)
      os << it.row() << ' ' << it.col() << ' ' << it.value().real() << ' ' << it.value().imag() << '\n';
}

}  // namespace homog
