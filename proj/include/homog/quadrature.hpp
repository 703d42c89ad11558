#pragma once

// Right-sided Gauss-Radau quadrature against the weight exp(-2 rho t) on a
// time slab (0, tau], and the slab inner products built on it.

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <sstream>
#include <tuple>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <Eigen/Eigenvalues>

#include "homog/types.hpp"

namespace homog {

/// Slab endpoints 0 = t_0 < t_1 < ... < t_M = T; slabs are (t_{m-1}, t_m].
class TimePartition {
 public:
  TimePartition() = default;
  explicit TimePartition(std::vector<double> points) : points_(std::move(points)) {
    if (points_.size() < 2) throw InvariantError("time partition: need at least one slab");
    if (points_.front() != 0.0) throw InvariantError("time partition: must start at t = 0");
    for (std::size_t m = 0; m + 1 < points_.size(); ++m)
      if (!(points_[m] < points_[m + 1]))
        throw InvariantError("time partition: points must be strictly increasing");
  }

  static TimePartition uniform(double horizon, std::size_t slabs) {
    if (slabs == 0) throw std::invalid_argument("time partition: zero slabs");
    std::vector<double> pts(slabs + 1);
    for (std::size_t m = 0; m <= slabs; ++m) pts[m] = horizon * static_cast<double>(m) / slabs;
    pts.back() = horizon;
    return TimePartition(std::move(pts));
  }

  std::size_t slabs() const { return points_.size() - 1; }
  double start(std::size_t m) const { return points_[m]; }
  double end(std::size_t m) const { return points_[m + 1]; }
  double length(std::size_t m) const { return points_[m + 1] - points_[m]; }
  double horizon() const { return points_.back(); }
  const std::vector<double>& points() const { return points_; }

  /// Slab index m with t in (t_m, t_{m+1}].
  std::size_t locate(double t) const {
    if (!(t > points_.front() && t <= points_.back()))
      throw std::domain_error("time partition: t outside (0, T]");
    auto it = std::lower_bound(points_.begin(), points_.end(), t);
    return static_cast<std::size_t>(it - points_.begin()) - 1;
  }

 private:
  std::vector<double> points_;
};

/// q + 1 nodes in (0, tau] with nodes[q] == tau, weights paired with the
/// tau/2 prefactor: (tau/2) sum_i w_i s(t_i) = int_0^tau s(t) exp(-2 rho t) dt
/// for every polynomial s of degree <= 2q.
struct QuadratureRule {
  int q = 0;
  double tau = 1.0;
  double rho = 0.0;
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }

  /// Nodes rescaled to the reference slab (0, 1].
  std::vector<double> reference_nodes() const {
    std::vector<double> s(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) s[i] = nodes[i] / tau;
    s.back() = 1.0;
    return s;
  }
};

namespace detail {

using HighPrecision = boost::multiprecision::cpp_bin_float_50;

/// m_j = int_0^1 s^j exp(-a s) ds for j = 0..j_max.
template <class Real>
std::vector<Real> reference_moments(int j_max, const Real& a) {
  std::vector<Real> m(static_cast<std::size_t>(j_max) + 1);
  using std::exp;
  if (a == 0) {
    for (int j = 0; j <= j_max; ++j) m[j] = Real(1) / (j + 1);
    return m;
  }
  if (a < 2) {
    // alternating series sum_k (-a)^k / (k! (j + k + 1)); terms decay fast
    for (int j = 0; j <= j_max; ++j) {
      Real sum = 0;
      Real term = 1;  // (-a)^k / k!
      for (int k = 0; k < 400; ++k) {
        const Real add = term / (j + k + 1);
        sum += add;
        if (k > 4 && abs(add) < std::numeric_limits<Real>::epsilon() * abs(sum)) break;
        term *= -a / (k + 1);
      }
      m[j] = sum;
    }
    return m;
  }
  // upward recurrence m_j = (j m_{j-1} - e^{-a}) / a; error growth j/a per step
  const Real ea = exp(-a);
  m[0] = (1 - ea) / a;
  for (int j = 1; j <= j_max; ++j) m[j] = (j * m[j - 1] - ea) / a;
  return m;
}

}  // namespace detail

/// mu_j = int_0^tau t^j exp(-2 rho t) dt, j = 0..j_max.
inline std::vector<double> weighted_moments(int j_max, double tau, double rho) {
  if (j_max < 0) throw std::invalid_argument("weighted_moments: j_max must be >= 0");
  if (!(tau > 0.0)) throw std::invalid_argument("weighted_moments: tau must be positive");
  if (!(rho >= 0.0)) throw std::invalid_argument("weighted_moments: rho must be >= 0");
  using R = detail::HighPrecision;
  const R a = R(2) * R(rho) * R(tau);
  const auto m = detail::reference_moments<R>(j_max, a);
  std::vector<double> mu(m.size());
  R scale = R(tau);
  for (std::size_t j = 0; j < m.size(); ++j) {
    mu[j] = static_cast<double>(m[j] * scale);
    scale *= R(tau);
  }
  return mu;
}

/// Builds the (q+1)-point right Radau rule for exp(-2 rho t) on (0, tau].
///
/// The monic recurrence coefficients of the orthogonal polynomials on the
/// reference slab come from the moments by the Chebyshev algorithm, carried
/// out in 50-digit arithmetic. The last diagonal entry of the Jacobi matrix
/// is then modified so that s = 1 is an eigenvalue, and nodes and weights
/// follow from the eigen-decomposition.
inline QuadratureRule gauss_radau_weighted(int q, double tau, double rho) {
  if (q < 0) throw std::invalid_argument("gauss_radau_weighted: q must be >= 0");
  if (!(tau > 0.0) || !(rho >= 0.0) || !std::isfinite(tau) || !std::isfinite(rho))
    throw std::invalid_argument("gauss_radau_weighted: need tau > 0 and rho >= 0");
  using R = detail::HighPrecision;
  const int n = q + 1;
  const R a = R(2) * R(rho) * R(tau);
  const auto mom = detail::reference_moments<R>(2 * n - 1, a);

  auto fail = [&](const std::string& what) {
    std::ostringstream os;
    os << "gauss_radau_weighted(q=" << q << ", tau=" << tau << ", rho=" << rho
       << "): " << what << " (2 rho tau = " << 2.0 * rho * tau << ")";
    throw ConstructionError(os.str());
  };

  // Chebyshev algorithm
  std::vector<R> alpha(n), beta(n);
  std::vector<R> sigma_prev(2 * n, R(0)), sigma(mom.begin(), mom.end()), sigma_next(2 * n, R(0));
  alpha[0] = mom[1] / mom[0];
  beta[0] = mom[0];
  for (int k = 1; k < n; ++k) {
    for (int l = k; l <= 2 * n - k - 1; ++l)
      sigma_next[l] = sigma[l + 1] - alpha[k - 1] * sigma[l] - beta[k - 1] * sigma_prev[l];
    if (!(sigma_next[k] > 0)) fail("moment matrix is numerically singular");
    alpha[k] = sigma_next[k + 1] / sigma_next[k] - sigma[k] / sigma[k - 1];
    beta[k] = sigma_next[k] / sigma[k - 1];
    sigma_prev = sigma;
    sigma = sigma_next;
  }

  // Radau modification at s = 1: alpha_q' = 1 - beta_q pi_{q-1}(1) / pi_q(1)
  std::vector<R> diag(alpha.begin(), alpha.end());
  if (q == 0) {
    diag[0] = 1;
  } else {
    R pm = 0, pc = 1;
    for (int k = 0; k < q; ++k) {
      const R pn = (R(1) - alpha[k]) * pc - (k > 0 ? beta[k] * pm : R(0));
      pm = pc;
      pc = pn;
    }
    if (pc == 0) fail("endpoint is a Gauss node; Radau modification undefined");
    diag[q] = R(1) - beta[q] * pm / pc;
  }

  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) jac(k, k) = static_cast<double>(diag[k]);
  for (int k = 1; k < n; ++k) {
    if (!(beta[k] > 0)) fail("non-positive recurrence coefficient");
    const double b = static_cast<double>(sqrt(beta[k]));
    jac(k, k - 1) = b;
    jac(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
  if (es.info() != Eigen::Success) fail("eigen-decomposition failed");

  const double mu0 = static_cast<double>(mom[0]);
  QuadratureRule rule;
  rule.q = q;
  rule.tau = tau;
  rule.rho = rho;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    const double v0 = es.eigenvectors()(0, i);
    rule.nodes[i] = es.eigenvalues()(i) * tau;
    // reference weight mu0 v0^2 integrates over (0,1); the tau/2 prefactor
    // convention turns int_0^tau into tau * (reference) = (tau/2) * (2 w)
    rule.weights[i] = 2.0 * mu0 * v0 * v0;
  }
  rule.nodes[q] = tau;
  for (int i = 0; i < n; ++i) {
    if (!(rule.weights[i] > 0.0) || !std::isfinite(rule.weights[i])) fail("non-positive weight");
    if (!(rule.nodes[i] > 0.0) || rule.nodes[i] > tau) fail("node outside (0, tau]");
  }
  return rule;
}

/// Thread-safe memo of rules keyed by (q, tau, rho).
class RuleCache {
 public:
  std::shared_ptr<const QuadratureRule> get(int q, double tau, double rho) {
    const Key key{q, tau, rho};
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = rules_.find(key);
    if (it != rules_.end()) return it->second;
    auto rule = std::make_shared<const QuadratureRule>(gauss_radau_weighted(q, tau, rho));
    rules_.emplace(key, rule);
    return rule;
  }

  std::size_t size() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return rules_.size();
  }

  static RuleCache& global() {
    static RuleCache cache;
    return cache;
  }

 private:
  using Key = std::tuple<int, double, double>;
  mutable std::mutex mutex_;
  std::map<Key, std::shared_ptr<const QuadratureRule>> rules_;
};

/// (tau/2) sum_i w_i pairing(a(t_i), b(t_i)) with t_i slab-local in (0, tau].
template <class FA, class FB, class Pairing>
cplx slab_inner_product(const QuadratureRule& rule, FA&& a, FB&& b, Pairing&& pairing) {
  cplx sum = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i)
    sum += rule.weights[i] * pairing(a(rule.nodes[i]), b(rule.nodes[i]));
  return 0.5 * rule.tau * sum;
}

/// Euclidean pairing <a, b> = b^* a for equally sized complex vectors.
struct EuclideanPairing {
  template <class A, class B>
  cplx operator()(const A& a, const B& b) const {
    if (a.size() != b.size()) throw std::invalid_argument("slab_inner_product: dimension mismatch");
    return b.dot(a);
  }
};

inline void write_rule_csv(std::ostream& os, const QuadratureRule& rule) {
  os << "node,weight\n";
  os.precision(17);
  for (std::size_t i = 0; i < rule.size(); ++i) os << rule.nodes[i] << ',' << rule.weights[i] << '\n';
}

}  // namespace homog
