#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <thread>

#include <boost/math/special_functions/gamma.hpp>

#include "homog/quadrature.hpp"

using namespace homog;

namespace {

// int_0^tau t^j exp(-2 rho t) dt through the lower incomplete gamma function.
double moment_oracle(int j, double tau, double rho) {
  if (rho == 0.0) return std::pow(tau, j + 1) / (j + 1);
  const double a = 2.0 * rho;
  return boost::math::tgamma_lower(j + 1.0, a * tau) / std::pow(a, j + 1);
}

double apply_rule(const QuadratureRule& r, int j) {
  double s = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) s += r.weights[i] * std::pow(r.nodes[i], j);
  return 0.5 * r.tau * s;
}

}  // namespace

TEST(Quadrature, SingleNodeRuleAtZeroRho) {
  const auto r = gauss_radau_weighted(0, 0.5, 0.0);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_DOUBLE_EQ(r.nodes[0], 0.5);
  EXPECT_NEAR(r.weights[0], 2.0, 1e-15);
}

TEST(Quadrature, TwoNodeRadauAtZeroRho) {
  // classical right Radau on [-1, 1]: nodes -1/3, 1 with weights 3/2, 1/2
  const double tau = 0.8;
  const auto r = gauss_radau_weighted(1, tau, 0.0);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_NEAR(r.nodes[0], tau / 3.0, 1e-15);
  EXPECT_DOUBLE_EQ(r.nodes[1], tau);
  EXPECT_NEAR(r.weights[0], 1.5, 1e-14);
  EXPECT_NEAR(r.weights[1], 0.5, 1e-14);
}

TEST(Quadrature, ExactnessUpToDegree2q) {
  for (int q = 0; q <= 4; ++q)
    for (double rt : {0.0, 0.1, 1.0, 10.0})
      for (double tau : {0.01, 0.5, 2.0}) {
        const double rho = rt / tau;
        const auto r = gauss_radau_weighted(q, tau, rho);
        for (int j = 0; j <= 2 * q; ++j) {
          const double exact = moment_oracle(j, tau, rho);
          EXPECT_NEAR(apply_rule(r, j), exact, 1e-12 * exact) << "q=" << q << " rho*tau=" << rt << " j=" << j;
        }
      }
}

TEST(Quadrature, NotExactBeyondDegree2q) {
  for (int q = 0; q <= 3; ++q) {
    const auto r = gauss_radau_weighted(q, 1.0, 0.7);
    const int j = 2 * q + 1;
    const double exact = moment_oracle(j, 1.0, 0.7);
    EXPECT_GT(std::abs(apply_rule(r, j) - exact), 1e-8 * exact) << "q=" << q;
  }
}

TEST(Quadrature, NodesAndWeightsStructure) {
  for (int q = 0; q <= 6; ++q)
    for (double rho : {0.0, 1.0, 40.0}) {
      const auto r = gauss_radau_weighted(q, 0.25, rho);
      EXPECT_EQ(r.nodes.back(), 0.25);
      for (std::size_t i = 0; i < r.size(); ++i) {
        EXPECT_GT(r.nodes[i], 0.0);
        EXPECT_GT(r.weights[i], 0.0);
        if (i > 0) {
          EXPECT_GT(r.nodes[i], r.nodes[i - 1]);
        }
      }
    }
}

TEST(Quadrature, LargeWeightExponentStillExact) {
  const auto r = gauss_radau_weighted(3, 1.0, 25.0);  // 2 rho tau = 50
  for (int j = 0; j <= 6; ++j) {
    const double exact = moment_oracle(j, 1.0, 25.0);
    EXPECT_NEAR(apply_rule(r, j), exact, 1e-11 * exact) << j;
  }
}

TEST(Quadrature, InvalidArguments) {
  EXPECT_THROW(gauss_radau_weighted(-1, 1.0, 0.0), std::invalid_argument);
  EXPECT_THROW(gauss_radau_weighted(1, 0.0, 0.0), std::invalid_argument);
  EXPECT_THROW(gauss_radau_weighted(1, 1.0, -1.0), std::invalid_argument);
  EXPECT_THROW(weighted_moments(-1, 1.0, 0.0), std::invalid_argument);
}

TEST(Quadrature, MomentsMatchOracle) {
  for (double rho : {0.0, 0.3, 1.0, 10.0}) {
    const auto mu = weighted_moments(8, 0.4, rho);
    for (int j = 0; j <= 8; ++j) EXPECT_NEAR(mu[j], moment_oracle(j, 0.4, rho), 1e-14 * mu[j]);
  }
}

TEST(Quadrature, CacheReturnsSharedRule) {
  RuleCache cache;
  const auto a = cache.get(2, 0.1, 1.0);
  const auto b = cache.get(2, 0.1, 1.0);
  EXPECT_EQ(a.get(), b.get());
  EXPECT_EQ(cache.size(), 1u);
  std::vector<std::thread> threads;
  std::vector<const QuadratureRule*> seen(8);
  for (int i = 0; i < 8; ++i) threads.emplace_back([&, i] { seen[i] = cache.get(3, 0.2, 1.0).get(); });
  for (auto& t : threads) t.join();
  for (auto* p : seen) EXPECT_EQ(p, seen[0]);
  EXPECT_EQ(cache.size(), 2u);
}

TEST(Quadrature, SlabInnerProductExactForPolynomials) {
  const auto r = gauss_radau_weighted(2, 0.6, 0.9);
  // a(t) = (1 + t, t^2), b(t) = (t, 2 - t): the pairing b^* a has degree 3 <= 2q
  auto a = [](double t) {
    Eigen::Vector2cd v;
    v << 1.0 + t, t * t;
    return v;
  };
  auto b = [](double t) {
    Eigen::Vector2cd v;
    v << t, 2.0 - t;
    return v;
  };
  const cplx got = slab_inner_product(r, a, b, EuclideanPairing{});
  // integrand t + t^2 + 2 t^2 - t^3 = t + 3 t^2 - t^3
  const double exact = moment_oracle(1, 0.6, 0.9) + 3 * moment_oracle(2, 0.6, 0.9) - moment_oracle(3, 0.6, 0.9);
  EXPECT_NEAR(got.real(), exact, 1e-14);
  EXPECT_NEAR(got.imag(), 0.0, 1e-15);
}

TEST(Quadrature, PairingDimensionMismatch) {
  const auto r = gauss_radau_weighted(1, 1.0, 0.0);
  auto a = [](double) { return Eigen::VectorXcd::Ones(2); };
  auto b = [](double) { return Eigen::VectorXcd::Ones(3); };
  EXPECT_THROW(slab_inner_product(r, a, b, EuclideanPairing{}), std::invalid_argument);
}

TEST(Quadrature, TimePartition) {
  const auto p = TimePartition::uniform(1.0, 4);
  EXPECT_EQ(p.slabs(), 4u);
  EXPECT_EQ(p.locate(0.25), 0u);  // slabs are (t_{m-1}, t_m]
  EXPECT_EQ(p.locate(0.2500001), 1u);
  EXPECT_EQ(p.locate(1.0), 3u);
  EXPECT_THROW(p.locate(0.0), std::domain_error);
  EXPECT_THROW(p.locate(1.1), std::domain_error);
  EXPECT_THROW(TimePartition({0.0, 0.5, 0.5, 1.0}), InvariantError);
  EXPECT_THROW(TimePartition({0.1, 1.0}), InvariantError);
}

TEST(Quadrature, CsvOutput) {
  std::ostringstream os;
  write_rule_csv(os, gauss_radau_weighted(1, 1.0, 0.0));
  EXPECT_EQ(os.str().substr(0, 12), "node,weight\n");
}
