#pragma once

// dG(q) in time / cG(p) in space: slab-by-slab solution of
//
//   Q_m[(d/dt M0 + M1 + A) U, Phi] + <M0 [U]_{m-1}, Phi(t_{m-1}+)> = Q_m[F, Phi]
//
// with the jump taken against x0 on the first slab. The time basis on every
// slab is the Lagrange basis at the slab's own Radau nodes, so Q_m is
// diagonal in the nodal values.

#include <cstdint>
#include <ostream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <Eigen/SparseLU>

#include "homog/coefficients.hpp"
#include "homog/fem_space.hpp"
#include "homog/polynomial.hpp"
#include "homog/quadrature.hpp"
#include "homog/types.hpp"

namespace homog {

/// Lagrange time basis at the reference nodes (0, 1] of one rule.
struct SlabTimeBasis {
  std::shared_ptr<const QuadratureRule> rule;
  poly::LagrangeBasis basis;
  Eigen::MatrixXd differentiation;  // d/ds of l_j at node k, reference slab
  Eigen::VectorXd left_values;      // l_j(0), extrapolation to t_{m-1}+

  explicit SlabTimeBasis(std::shared_ptr<const QuadratureRule> r)
      : rule(std::move(r)), basis(rule->reference_nodes()) {
    differentiation = basis.differentiation_matrix();
    const auto n = static_cast<Eigen::Index>(basis.size());
    left_values.resize(n);
    for (Eigen::Index j = 0; j < n; ++j) left_values(j) = basis.value(static_cast<std::size_t>(j), 0.0);
  }

  std::size_t size() const { return basis.size(); }
};

/// Square system for one slab; unknowns ordered node-major, [u; v] inside.
struct SlabSystem {
  SpMat matrix;
  VecX rhs;
};

/// Raised when a slab system cannot be factorised or solved.
class SlabSolveError : public CoercivityError {
 public:
  SlabSolveError(std::size_t slab, const std::string& what)
      : CoercivityError(what), slab_(slab) {}
  std::size_t slab() const { return slab_; }

 private:
  std::size_t slab_;
};

/// (W Dt + e e^T) (x) M0h + W (x) (M1h + Ah) with W = diag(tau w_i / 2).
inline SpMat slab_matrix(const AssembledOperators& ops, const SlabTimeBasis& tb) {
  const auto& rule = *tb.rule;
  const auto nq = static_cast<Eigen::Index>(tb.size());
  const Eigen::Index dim = ops.m0h.rows();
  const SpMat stiff = ops.m1h + ops.ah;
  std::vector<Triplet> trips;
  trips.reserve(static_cast<std::size_t>(nq * nq * ops.m0h.nonZeros() + nq * stiff.nonZeros()));
  for (Eigen::Index i = 0; i < nq; ++i)
    for (Eigen::Index j = 0; j < nq; ++j) {
      // tau/2 w_i * (1/tau) D_ij: the slab length cancels
      const double tij = 0.5 * rule.weights[i] * tb.differentiation(i, j) + tb.left_values(i) * tb.left_values(j);
      if (tij != 0.0)
        for (Eigen::Index c = 0; c < ops.m0h.outerSize(); ++c)
          for (SpMat::InnerIterator it(ops.m0h, c); it; ++it)
            trips.emplace_back(i * dim + it.row(), j * dim + it.col(), tij * it.value());
      if (i == j) {
        const double wi = 0.5 * rule.tau * rule.weights[i];
        for (Eigen::Index c = 0; c < stiff.outerSize(); ++c)
          for (SpMat::InnerIterator it(stiff, c); it; ++it)
            trips.emplace_back(i * dim + it.row(), i * dim + it.col(), wi * it.value());
      }
    }
  SpMat s(nq * dim, nq * dim);
  s.setFromTriplets(trips.begin(), trips.end());
  return s;
}

/// Load vectors of F at the slab's quadrature nodes, one column per node.
inline MatX slab_source(const EvolutionaryProblem& problem, const PeriodicCgSpace& space,
                        const SlabTimeBasis& tb, double t_start, double tau) {
  const auto nq = static_cast<Eigen::Index>(tb.size());
  MatX f(static_cast<Eigen::Index>(2 * space.dof_count()), nq);
  for (Eigen::Index i = 0; i < nq; ++i) {
    const double t = t_start + tau * tb.basis.nodes()[static_cast<std::size_t>(i)];
    f.col(i) = assemble_block_load(space, [&](double x) { return problem.source(t, x); });
  }
  return f;
}

inline VecX slab_rhs(const AssembledOperators& ops, const SlabTimeBasis& tb, const MatX& source,
                     const VecX& incoming) {
  const auto nq = static_cast<Eigen::Index>(tb.size());
  const Eigen::Index dim = ops.m0h.rows();
  const VecX jump = ops.m0h * incoming;
  VecX rhs(nq * dim);
  for (Eigen::Index i = 0; i < nq; ++i)
    rhs.segment(i * dim, dim) = (0.5 * tb.rule->tau * tb.rule->weights[i]) * source.col(i) + tb.left_values(i) * jump;
  return rhs;
}

/// Slab system for slab `m`; `incoming` is the projected x0 on the first
/// slab and the previous slab's left limit at t_{m-1} otherwise.
inline SlabSystem assemble_slab(const EvolutionaryProblem& problem, const AssembledOperators& ops,
                                const PeriodicCgSpace& space, std::shared_ptr<const QuadratureRule> rule,
                                const TimePartition& partition, std::size_t m, const VecX& incoming) {
  const SlabTimeBasis tb(std::move(rule));
  SlabSystem sys;
  sys.matrix = slab_matrix(ops, tb);
  sys.rhs = slab_rhs(ops, tb, slab_source(problem, space, tb, partition.start(m), partition.length(m)), incoming);
  return sys;
}

/// Piecewise-polynomial-in-time solution: per slab a (2 dof_count) x (q+1)
/// matrix of nodal states at the slab's Radau nodes.
class DiscreteSolution {
 public:
  DiscreteSolution(std::shared_ptr<const PeriodicCgSpace> space, TimePartition partition, int q)
      : space_(std::move(space)), partition_(std::move(partition)), q_(q) {}

  const PeriodicCgSpace& space() const { return *space_; }
  std::shared_ptr<const PeriodicCgSpace> space_ptr() const { return space_; }
  const TimePartition& partition() const { return partition_; }
  int q() const { return q_; }
  std::size_t slabs() const { return values_.size(); }
  const MatX& slab_values(std::size_t m) const { return values_[m]; }
  const SlabTimeBasis& time_basis(std::size_t m) const { return *bases_[m]; }
  const QuadratureRule& rule(std::size_t m) const { return *bases_[m]->rule; }
  const VecX& initial_state() const { return initial_; }
  const std::vector<double>& residuals() const { return residuals_; }

  /// Absolute times of all quadrature nodes of slab m.
  std::vector<double> node_times(std::size_t m) const {
    std::vector<double> t;
    for (double s : bases_[m]->basis.nodes()) t.push_back(partition_.start(m) + partition_.length(m) * s);
    t.back() = partition_.end(m);
    return t;
  }

  /// Spatial coefficient vector at t in (t_m, t_{m+1}] of slab m.
  VecX state_in_slab(std::size_t m, double t) const {
    const double s = (t - partition_.start(m)) / partition_.length(m);
    const auto& b = bases_[m]->basis;
    Eigen::VectorXcd l(static_cast<Eigen::Index>(b.size()));
    for (std::size_t j = 0; j < b.size(); ++j) l(static_cast<Eigen::Index>(j)) = b.value(j, s);
    return values_[m] * l;
  }

  VecX state(double t) const { return state_in_slab(partition_.locate(t), t); }

  /// d/dt of the slab polynomial at t within slab m.
  VecX time_derivative_in_slab(std::size_t m, double t) const {
    const double tau = partition_.length(m);
    const double s = (t - partition_.start(m)) / tau;
    const auto& b = bases_[m]->basis;
    Eigen::VectorXcd l(static_cast<Eigen::Index>(b.size()));
    for (std::size_t j = 0; j < b.size(); ++j) l(static_cast<Eigen::Index>(j)) = b.derivative(j, s) / tau;
    return values_[m] * l;
  }

  /// U(t_{m+1}-), the last nodal value of slab m.
  VecX left_limit(std::size_t m) const { return values_[m].col(q_); }

  /// U(t_m+), extrapolation of slab m's polynomial to its left end.
  VecX right_limit(std::size_t m) const { return values_[m] * bases_[m]->left_values.cast<cplx>(); }

  Vec2 evaluate(double t, double x) const {
    if (!(x >= 0.0 && x < 1.0)) throw std::domain_error("evaluate_solution: x outside [0, 1)");
    return space_->evaluate_state(state(t), x);
  }

  // construction interface used by solve()
  void set_initial(VecX x0) { initial_ = std::move(x0); }
  void push_slab(std::shared_ptr<const SlabTimeBasis> basis, MatX values) {
    bases_.push_back(std::move(basis));
    values_.push_back(std::move(values));
  }
  void set_residuals(std::vector<double> r) { residuals_ = std::move(r); }

 private:
  std::shared_ptr<const PeriodicCgSpace> space_;
  TimePartition partition_;
  int q_;
  VecX initial_;
  std::vector<std::shared_ptr<const SlabTimeBasis>> bases_;
  std::vector<MatX> values_;
  std::vector<double> residuals_;
};

inline Vec2 evaluate_solution(const DiscreteSolution& sol, double t, double x) { return sol.evaluate(t, x); }

/// Relative variational residual of slab m, re-evaluated from the stored
/// solution through the time polynomial (not through the slab matrix).
inline double slab_residual(const EvolutionaryProblem& problem, const AssembledOperators& ops,
                            const DiscreteSolution& sol, std::size_t m) {
  const auto& space = sol.space();
  const auto& tb = sol.time_basis(m);
  const auto& rule = *tb.rule;
  const double t0 = sol.partition().start(m);
  const double tau = sol.partition().length(m);
  const auto times = sol.node_times(m);
  const VecX prev = m == 0 ? sol.initial_state() : sol.left_limit(m - 1);
  const VecX jump = ops.m0h * (sol.right_limit(m) - prev);
  const SpMat stiff = ops.m1h + ops.ah;
  double res = 0.0;
  double scale = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double wi = 0.5 * rule.tau * rule.weights[i];
    const VecX u = sol.state_in_slab(m, times[i]);
    const VecX du = sol.time_derivative_in_slab(m, t0 + tau * tb.basis.nodes()[i]);
    const VecX f = assemble_block_load(space, [&](double x) { return problem.source(times[i], x); });
    const VecX a = wi * (ops.m0h * du);
    const VecX b = wi * (stiff * u);
    const VecX c = tb.left_values(static_cast<Eigen::Index>(i)) * jump;
    const VecX r = a + b + c - wi * f;
    res = std::max(res, r.cwiseAbs().maxCoeff());
    scale = std::max({scale, a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff(), c.cwiseAbs().maxCoeff(),
                      (wi * f).cwiseAbs().maxCoeff()});
  }
  if (res == 0.0) return 0.0;
  return res / scale;
}

struct SolveOptions {
  RuleCache* rules = nullptr;  // defaults to the process-wide cache
  bool check_residuals = false;
  double reuse_tolerance = 1e-12;  // relative slab-length match for factorisation reuse
};

/// Marches m = 1..M with a sparse LU per distinct slab length.
inline DiscreteSolution solve(const EvolutionaryProblem& problem, const TimePartition& partition,
                              std::shared_ptr<const PeriodicCgSpace> space, int q,
                              const SolveOptions& options = {}) {
  problem.validate();
  if (q < 0) throw std::invalid_argument("solve: q must be >= 0");
  if (partition.horizon() > problem.horizon * (1.0 + 1e-12))
    throw std::invalid_argument("solve: time partition extends beyond the horizon");
  const double c = problem.positivity();
  RuleCache& cache = options.rules ? *options.rules : RuleCache::global();
  const AssembledOperators ops = assemble_operators(*space, problem);

  DiscreteSolution sol(space, partition, q);
  VecX incoming = problem.initial ? l2_project(*space, problem.initial)
                                  : VecX::Zero(static_cast<Eigen::Index>(2 * space->dof_count()));
  sol.set_initial(incoming);

  Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
  std::shared_ptr<const SlabTimeBasis> basis;
  std::vector<double> residuals;
  const Eigen::Index dim = static_cast<Eigen::Index>(2 * space->dof_count());

  for (std::size_t m = 0; m < partition.slabs(); ++m) {
    const double tau = partition.length(m);
    if (!basis || std::abs(tau - basis->rule->tau) > options.reuse_tolerance * basis->rule->tau) {
      basis = std::make_shared<const SlabTimeBasis>(cache.get(q, tau, problem.rho));
      lu.compute(slab_matrix(ops, *basis));
      if (lu.info() != Eigen::Success) {
        std::ostringstream os;
        os << "slab " << m << ": factorisation failed (positivity constant c = " << c << "): " << lu.lastErrorMessage();
        throw SlabSolveError(m, os.str());
      }
    }
    const MatX source = slab_source(problem, *space, *basis, partition.start(m), tau);
    const VecX x = lu.solve(slab_rhs(ops, *basis, source, incoming));
    if (lu.info() != Eigen::Success || !x.allFinite()) {
      std::ostringstream os;
      os << "slab " << m << ": solve failed (positivity constant c = " << c << ")";
      throw SlabSolveError(m, os.str());
    }
    const auto nq = static_cast<Eigen::Index>(basis->size());
    MatX values = Eigen::Map<const MatX>(x.data(), dim, nq);
    incoming = values.col(nq - 1);
    sol.push_slab(basis, std::move(values));
  }

  if (options.check_residuals) {
    residuals.reserve(partition.slabs());
    for (std::size_t m = 0; m < partition.slabs(); ++m) residuals.push_back(slab_residual(problem, ops, sol, m));
    sol.set_residuals(std::move(residuals));
  }
  return sol;
}

inline DiscreteSolution solve(const EvolutionaryProblem& problem, const TimePartition& partition,
                              const PeriodicCgSpace& space, int q, const SolveOptions& options = {}) {
  return solve(problem, partition, std::make_shared<const PeriodicCgSpace>(space), q, options);
}

/// CSV rows t,x,Re E,Im E,Re H,Im H on the tensor grid times x xs.
inline void write_snapshot_csv(std::ostream& os, const DiscreteSolution& sol, const std::vector<double>& times,
                               const std::vector<double>& xs) {
  os << "t,x,re_u1,im_u1,re_u2,im_u2\n";
  os.precision(12);
  for (double t : times) {
    const VecX state = sol.state(t);
    for (double x : xs) {
      const Vec2 u = sol.space().evaluate_state(state, x);
      os << t << ',' << x << ',' << u(0).real() << ',' << u(0).imag() << ',' << u(1).real() << ',' << u(1).imag()
         << '\n';
    }
  }
}

/// Raw dump: int64 slab count, rows, cols, then each slab's column-major
/// complex values as interleaved doubles.
inline void write_coefficients_binary(std::ostream& os, const DiscreteSolution& sol) {
  const std::int64_t header[3] = {static_cast<std::int64_t>(sol.slabs()),
                                  sol.slabs() ? sol.slab_values(0).rows() : 0,
                                  sol.slabs() ? sol.slab_values(0).cols() : 0};
  os.write(reinterpret_cast<const char*>(header), sizeof(header));
  for (std::size_t m = 0; m < sol.slabs(); ++m) {
    const MatX& v = sol.slab_values(m);
    os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(cplx)));
  }
}

}  // namespace homog
