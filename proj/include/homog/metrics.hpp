#pragma once

// Error functionals E_sup and E_Q and observed convergence orders.

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "homog/coefficients.hpp"
#include "homog/dg_solver.hpp"
#include "homog/polynomial.hpp"
#include "homog/quadrature.hpp"
#include "homog/types.hpp"

namespace homog {

/// x -> a(t, x) for one fixed t.
using SpatialField = std::function<Vec2(double)>;
/// t -> a(t, .).
using TimeField = std::function<SpatialField(double)>;

/// Composite Gauss rule on [0, 1] split at the given breakpoints.
struct SpatialQuadrature {
  std::vector<double> points;
  std::vector<double> weights;

  static SpatialQuadrature build(std::vector<double> breaks, int order) {
    breaks.push_back(0.0);
    breaks.push_back(1.0);
    std::sort(breaks.begin(), breaks.end());
    std::vector<double> clean;
    for (double b : breaks) {
      if (b < 0.0 || b > 1.0) continue;
      if (clean.empty() || b - clean.back() > 1e-13) clean.push_back(b);
    }
    clean.back() = 1.0;
    const auto gl = poly::gauss_legendre(order);
    SpatialQuadrature q;
    for (std::size_t k = 0; k + 1 < clean.size(); ++k) {
      const double half = 0.5 * (clean[k + 1] - clean[k]);
      const double mid = 0.5 * (clean[k + 1] + clean[k]);
      for (std::size_t g = 0; g < gl.points.size(); ++g) {
        q.points.push_back(mid + half * gl.points[g]);
        q.weights.push_back(half * gl.weights[g]);
      }
    }
    return q;
  }
};

/// The M0 weight of E_sup: a matrix field evaluated at N x.
struct EnergyWeight {
  MatrixField m0 = MatrixField::constant(Mat2::Identity());
  int n = 1;

  static EnergyWeight identity() { return {}; }
  static EnergyWeight of(const EvolutionaryProblem& problem) {
    return {problem.effective_field().m0_field(), problem.effective_n()};
  }

  std::vector<double> breakpoints() const { return m0.oscillatory_breakpoints(n, 0.0, 1.0); }
};

/// int_0^1 <M0(N x) a(x), a(x)> dx.
inline double weighted_l2_squared(const SpatialField& a, const EnergyWeight& w, const SpatialQuadrature& quad) {
  double sum = 0.0;
  for (std::size_t i = 0; i < quad.points.size(); ++i) {
    const Vec2 v = a(quad.points[i]);
    const Mat2& m = w.m0.at_oscillatory(w.n, quad.points[i]);
    sum += quad.weights[i] * std::real(v.dot(m * v));
  }
  return sum;
}

/// Plain L2(0,1)^2 norm squared.
inline double l2_squared(const SpatialField& a, const SpatialQuadrature& quad) {
  double sum = 0.0;
  for (std::size_t i = 0; i < quad.points.size(); ++i) sum += quad.weights[i] * a(quad.points[i]).squaredNorm();
  return sum;
}

/// sqrt(max_t <M0 a(t), a(t)>) over the sample times.
inline double error_sup(const TimeField& a, const EnergyWeight& weight, const std::vector<double>& sample_times,
                        const std::vector<double>& spatial_breaks, int order = 6) {
  if (sample_times.empty()) throw std::invalid_argument("error_sup: empty sample set");
  auto breaks = spatial_breaks;
  const auto wb = weight.breakpoints();
  breaks.insert(breaks.end(), wb.begin(), wb.end());
  const auto quad = SpatialQuadrature::build(std::move(breaks), order);
  double best = 0.0;
  for (double t : sample_times) best = std::max(best, weighted_l2_squared(a(t), weight, quad));
  return std::sqrt(best);
}

/// sqrt(e^{2 rho T} sum_m Q_m[a, a] e^{-2 rho t_{m-1}}) with the L2 pairing;
/// `rule_of(m)` gives the rule of slab m.
inline double error_q(const TimeField& a, double rho, const TimePartition& partition,
                      const std::function<const QuadratureRule&(std::size_t)>& rule_of,
                      const std::vector<double>& spatial_breaks, int order = 6) {
  const auto quad = SpatialQuadrature::build(spatial_breaks, order);
  const double horizon = partition.horizon();
  double sum = 0.0;
  for (std::size_t m = 0; m < partition.slabs(); ++m) {
    const QuadratureRule& rule = rule_of(m);
    const double t0 = partition.start(m);
    const double tau = partition.length(m);
    double qm = 0.0;
    for (std::size_t i = 0; i < rule.size(); ++i) {
      const double t = i + 1 == rule.size() ? partition.end(m) : t0 + tau * rule.nodes[i] / rule.tau;
      qm += rule.weights[i] * l2_squared(a(t), quad);
    }
    sum += 0.5 * tau * qm * std::exp(2.0 * rho * (horizon - t0));
  }
  return std::sqrt(sum);
}

/// Rules rebuilt per slab for degree q through a cache.
inline std::function<const QuadratureRule&(std::size_t)> rule_family(const TimePartition& partition, int q,
                                                                     double rho, RuleCache& cache) {
  auto rules = std::make_shared<std::vector<std::shared_ptr<const QuadratureRule>>>();
  for (std::size_t m = 0; m < partition.slabs(); ++m) rules->push_back(cache.get(q, partition.length(m), rho));
  return [rules](std::size_t m) -> const QuadratureRule& { return *(*rules)[m]; };
}

/// The rules a discrete solution was computed with.
inline std::function<const QuadratureRule&(std::size_t)> rule_family(const DiscreteSolution& sol) {
  return [&sol](std::size_t m) -> const QuadratureRule& { return sol.rule(m); };
}

/// All quadrature node times of a solution (slab right ends included).
inline std::vector<double> sample_times(const DiscreteSolution& sol) {
  std::vector<double> t;
  for (std::size_t m = 0; m < sol.slabs(); ++m) {
    const auto nt = sol.node_times(m);
    t.insert(t.end(), nt.begin(), nt.end());
  }
  return t;
}

inline std::vector<double> merge_times(std::vector<double> a, const std::vector<double>& b) {
  a.insert(a.end(), b.begin(), b.end());
  std::sort(a.begin(), a.end());
  a.erase(std::unique(a.begin(), a.end(), [](double x, double y) { return std::abs(x - y) <= 1e-14; }), a.end());
  return a;
}

/// a(t, .) = first(t, .) - second(t, .) for two discrete solutions.
inline TimeField difference(const DiscreteSolution& first, const DiscreteSolution& second) {
  return [&first, &second](double t) -> SpatialField {
    const VecX s1 = first.state(t);
    const VecX s2 = second.state(t);
    return [&first, &second, s1, s2](double x) -> Vec2 {
      return first.space().evaluate_state(s1, x) - second.space().evaluate_state(s2, x);
    };
  };
}

/// a(t, .) = exact(t, .) - sol(t, .).
inline TimeField difference(const SourceFunction& exact, const DiscreteSolution& sol) {
  return [&exact, &sol](double t) -> SpatialField {
    const VecX s = sol.state(t);
    return [&exact, &sol, s, t](double x) -> Vec2 { return exact(t, x) - sol.space().evaluate_state(s, x); };
  };
}

/// Observed orders log2(e_i / e_{i+1}) for doubling refinements.
inline std::vector<double> convergence_rates(const std::vector<double>& errors) {
  if (errors.size() < 2) throw std::invalid_argument("convergence_rates: need at least two errors");
  for (double e : errors)
    if (!(e > 0.0)) throw std::invalid_argument("convergence_rates: errors must be positive");
  std::vector<double> r;
  for (std::size_t i = 0; i + 1 < errors.size(); ++i) r.push_back(std::log2(errors[i] / errors[i + 1]));
  return r;
}

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("loglog_slope: need >= 2 paired samples");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// Cell nodes of a solution's spatial mesh.
inline const std::vector<double>& mesh_breaks(const DiscreteSolution& sol) { return sol.space().partition().nodes(); }

inline std::vector<double> merge_breaks(std::vector<double> a, const std::vector<double>& b) {
  a.insert(a.end(), b.begin(), b.end());
  std::sort(a.begin(), a.end());
  return a;
}

}  // namespace homog
