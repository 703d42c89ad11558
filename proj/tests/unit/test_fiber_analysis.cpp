#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "homog/fiber_analysis.hpp"
#include "homog/metrics.hpp"
#include "homog/problem_file.hpp"

using namespace homog;

namespace {

Mat2 diag(cplx a, cplx b) {
  Mat2 m = Mat2::Zero();
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

/// diag(m, 1) with m = 1 on [0, 1/2) and 3 on [1/2, 1): c = 1 and ||M|| = 3.
MatrixField two_phase() { return MatrixField({0.0, 0.5, 1.0}, {diag(1.0, 1.0), diag(3.0, 1.0)}); }

/// Random field with Re M >= c on every piece and a non-trivial skew part.
MatrixField random_field(std::mt19937& gen, double c, int pieces) {
  std::normal_distribution<double> d;
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::vector<double> breaks{0.0};
  double acc = 0.0;
  std::vector<double> lengths;
  for (int j = 0; j < pieces; ++j) lengths.push_back(u(gen)), acc += lengths.back();
  for (int j = 0; j < pieces; ++j) breaks.push_back(breaks.back() + lengths[j] / acc);
  breaks.back() = 1.0;
  std::vector<Mat2> values;
  for (int j = 0; j < pieces; ++j) {
    Mat2 b, s;
    b << cplx(d(gen), d(gen)), cplx(d(gen), d(gen)), cplx(d(gen), d(gen)), cplx(d(gen), d(gen));
    s << cplx(d(gen), d(gen)), cplx(d(gen), d(gen)), cplx(d(gen), d(gen)), cplx(d(gen), d(gen));
    values.push_back(b * b.adjoint() + c * Mat2::Identity() + 0.5 * (s - s.adjoint()));
  }
  return MatrixField(breaks, values);
}

double l2_error(const PeriodicCgSpace& space, const VecX& uh, const std::function<Vec2(double)>& exact) {
  const auto gl = poly::gauss_legendre(space.degree() + 4);
  const auto& nodes = space.partition().nodes();
  double s = 0.0;
  for (std::size_t k = 0; k + 1 < nodes.size(); ++k) {
    const double h = nodes[k + 1] - nodes[k];
    for (std::size_t g = 0; g < gl.points.size(); ++g) {
      const double x = nodes[k] + 0.5 * h * (1.0 + gl.points[g]);
      s += 0.5 * h * gl.weights[g] * (space.evaluate_state(uh, x) - exact(x)).squaredNorm();
    }
  }
  return std::sqrt(s);
}

}  // namespace

TEST(FiberAnalysis, FourierCoefficientsMatchQuadrature) {
  std::mt19937 gen(21);
  const auto field = random_field(gen, 0.5, 3);
  for (long r : {-7L, -1L, 0L, 2L, 5L}) {
    const Mat2 c = fourier_coefficient(field, r);
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        double re = 0.0, im = 0.0;
        const auto& br = field.breakpoints();
        for (std::size_t j = 0; j + 1 < br.size(); ++j) {
          const cplx v = field.values()[j](a, b);
          const auto integrand = [&](double y, bool real) {
            const cplx e = v * std::exp(cplx(0.0, -2.0 * pi * r * y));
            return real ? e.real() : e.imag();
          };
          using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
          re += GK::integrate([&](double y) { return integrand(y, true); }, br[j], br[j + 1], 10, 1e-15);
          im += GK::integrate([&](double y) { return integrand(y, false); }, br[j], br[j + 1], 10, 1e-15);
        }
        EXPECT_NEAR(std::abs(c(a, b) - cplx(re, im)), 0.0, 1e-13) << r;
      }
  }
}

TEST(FiberAnalysis, MultiplicationBlockIsToeplitz) {
  const auto t = fiber_multiplication_block(two_phase(), 6);
  const auto c = fourier_coefficients(two_phase(), 12);
  const Eigen::Index modes = 13;
  for (int m = -6; m <= 6; ++m)
    for (int mp = -6; mp <= 6; ++mp) {
      EXPECT_EQ(t(m + 6, mp + 6), c[m - mp + 12](0, 0));
      EXPECT_EQ(t(modes + m + 6, modes + mp + 6), c[m - mp + 12](1, 1));
    }
  // m - 1 is 2 on the second half: c_1 = 2 (1 - e^{-i pi}) / (-2 pi i) = 2i / pi
  EXPECT_NEAR(std::abs(c[12 + 1](0, 0) - cplx(0.0, 2.0 / pi)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(c[12 + 2](0, 0)), 0.0, 1e-15);
}

TEST(FiberAnalysis, ConstantFieldFibersAreBlockDiagonal) {
  Mat2 m;
  m << 2.0, cplx(0.0, 0.3), cplx(0.5, 0.0), 1.5;
  const auto op = build_fiber(MatrixField::constant(m), 3, 1, 5);
  const MatX r = fiber_resolvent(op);
  for (int mode = -5; mode <= 5; ++mode) {
    Mat2 local = m;
    const cplx s(0.0, 3.0 * (2.0 * pi * mode + theta(1, 3)));
    local(0, 1) += s;
    local(1, 0) += s;
    const Mat2 inv = local.inverse();
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) EXPECT_NEAR(std::abs(r(op.index(a, mode), op.index(b, mode)) - inv(a, b)), 0.0, 1e-14);
  }
  // no coupling between different modes
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int m1 = -5; m1 <= 5; ++m1)
        for (int m2 = -5; m2 <= 5; ++m2)
          if (m1 != m2) {
            EXPECT_EQ(std::abs(r(op.index(a, m1), op.index(b, m2))), 0.0);
          }
}

TEST(FiberAnalysis, HermitianPartIsCoerciveAndDerivativeSkew) {
  std::mt19937 gen(22);
  const auto field = random_field(gen, 0.3, 4);
  const double c = coercivity_constant(field);
  for (int k : {0, 3}) {
    const auto op = build_fiber(field, 5, k, 32);
    const MatX h = 0.5 * (op.matrix + op.matrix.adjoint());
    Eigen::SelfAdjointEigenSolver<MatX> es(h);
    EXPECT_GE(es.eigenvalues().minCoeff(), c - 1e-10);
    const MatX d = fiber_derivative_block(5, k, 32);
    EXPECT_EQ(MatX(d + d.adjoint()).cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(FiberAnalysis, DerivativeMultiplierOnPhysicalModes) {
  // e^{2 pi i r x} is fiber k = r mod N, mode floor(r / N); N A_theta scales it by 2 pi i r
  const int n = 4;
  for (int r : {-9, -1, 0, 5, 11}) {
    const int k = ((r % n) + n) % n;
    const int mode = (r - k) / n;
    const MatX d = fiber_derivative_block(n, k, 4);
    const Eigen::Index modes = 9;
    EXPECT_NEAR(std::abs(d(mode + 4, modes + mode + 4) - cplx(0.0, 2.0 * pi * r)), 0.0, 1e-12) << r;
  }
}

TEST(FiberAnalysis, PowerIterationMatchesSvd) {
  std::mt19937 gen(23);
  std::normal_distribution<double> d;
  for (int size : {1, 5, 30}) {
    MatX x(size, size);
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = cplx(d(gen), d(gen));
    const double svd = Eigen::JacobiSVD<MatX>(x).singularValues()(0);
    EXPECT_NEAR(top_singular_value(x, {1e-13, 200000, 1}), svd, 1e-6 * svd);
  }
  EXPECT_EQ(top_singular_value(MatX::Zero(4, 4)), 0.0);
  MatX x = MatX::Identity(6, 6);
  x(0, 0) = 2.0;
  x(1, 1) = 1.999;
  EXPECT_THROW(top_singular_value(x, {1e-15, 2, 1}), ConvergenceError);
}

TEST(FiberAnalysis, ConstantFieldHasNoResolventDifference) {
  const auto field = MatrixField::constant(diag(2.0, 1.0));
  const auto d = resolvent_difference_norm(field, 4, 1, 8);
  EXPECT_LT(d.norm, 1e-14);
  EXPECT_TRUE(d.truncation_stable());
}

TEST(FiberAnalysis, TwoPhaseExampleSatisfiesBound) {
  const auto field = two_phase();
  std::vector<double> maxima;
  for (int n : {2, 4, 8, 16}) {
    const double bound = homstat_bound(field, n);
    EXPECT_NEAR(bound, 33.0 / (pi * n), 1e-13);
    double mx = 0.0;
    for (const auto& r : static_bound_sweep(field, n, 16)) {
      EXPECT_LE(r.computed_norm, r.paper_bound);
      EXPECT_TRUE((ResolventDifference{r.computed_norm, r.computed_norm_refined}.truncation_stable())) << n << " " << r.k;
      mx = std::max(mx, r.computed_norm);
    }
    maxima.push_back(mx);
  }
  const double ratio = maxima[2] / maxima[3];
  EXPECT_GT(ratio, 1.7);
  EXPECT_LT(ratio, 2.3);
}

TEST(FiberAnalysis, StaticFemSolverConvergesForSingleMode) {
  // constant M, data e^{2 pi i x} f: solution e^{2 pi i x} (M + 2 pi i J)^{-1} f
  Mat2 m;
  m << 2.0, 0.5, -0.5, 1.0;
  Vec2 f;
  f << 1.0, cplx(0.0, 2.0);
  Mat2 sym = m;
  sym(0, 1) += cplx(0.0, 2.0 * pi);
  sym(1, 0) += cplx(0.0, 2.0 * pi);
  const Vec2 amp = sym.inverse() * f;
  const auto exact = [&](double x) { return Vec2(amp * unit_phase(x)); };
  StaticProblem prob{MatrixField::constant(m), 1, [&](double x) { return Vec2(f * unit_phase(x)); }};
  for (int p : {1, 2, 3}) {
    std::vector<double> errs;
    for (std::size_t k : {8u, 16u, 32u}) {
      const PeriodicCgSpace space(SpacePartition::uniform(k), p);
      errs.push_back(l2_error(space, static_solve_fem(prob, space), exact));
    }
    EXPECT_GT(convergence_rates(errs).back(), p - 0.25) << "p=" << p;
  }
  StaticProblem zero{MatrixField::constant(m), 3, [](double) { return Vec2::Zero().eval(); }};
  const PeriodicCgSpace space(SpacePartition::uniform(8), 2);
  EXPECT_EQ(static_solve_fem(zero, space).cwiseAbs().maxCoeff(), 0.0);
}

TEST(FiberAnalysis, FiberSolutionMatchesFemSolution) {
  // data e^{2 pi i r x} (1, 0) with r = 5, N = 4 lives on fiber 1, mode 1
  const auto field = two_phase();
  const int n = 4;
  const auto op = build_fiber(field, n, 1, 24);
  VecX data = VecX::Zero(op.matrix.rows());
  data(op.index(0, 1)) = 1.0;
  const VecX w = fiber_solve(op, data);
  StaticProblem prob{field, n, [](double x) {
                       Vec2 v;
                       v << unit_phase(5.0 * x), 0.0;
                       return v;
                     }};
  std::vector<double> diffs;
  for (std::size_t k : {64u, 128u, 256u}) {
    const PeriodicCgSpace space(SpacePartition::uniform(k), 2);
    const VecX uh = static_solve_fem(prob, space);
    diffs.push_back(l2_error(space, uh, [&](double x) { return fiber_field_value(op, w, x); }));
  }
  EXPECT_LT(diffs.back(), 1e-2);
  EXPECT_LT(diffs.back(), diffs.front());
  EXPECT_THROW(fiber_solve(op, VecX::Zero(3)), std::invalid_argument);
}

TEST(FiberAnalysis, ResolventNormsAreBoundedByInverseCoercivity) {
  std::mt19937 gen(24);
  for (int trial = 0; trial < 3; ++trial) {
    const auto field = random_field(gen, 0.4, 3);
    const double c = coercivity_constant(field);
    for (int n : {1, 4}) {
      const PeriodicCgSpace space(SpacePartition::uniform(24), 2);
      EXPECT_LE(static_resolvent_norm(space, field, n), (1.0 / c) * (1.0 + 1e-6));
      for (int k = 0; k < n; ++k)
        EXPECT_LE(top_singular_value(fiber_resolvent(build_fiber(field, n, k, 12))), (1.0 / c) * (1.0 + 1e-6));
    }
  }
}

TEST(FiberAnalysis, ErrorCases) {
  const auto field = two_phase();
  EXPECT_THROW(build_fiber(field, 4, 4, 8), std::invalid_argument);
  EXPECT_THROW(build_fiber(field, 4, -1, 8), std::invalid_argument);
  EXPECT_THROW(build_fiber(field, 4, 0, 3), std::invalid_argument);
  EXPECT_THROW(build_fiber(MatrixField::constant(diag(1.0, -1.0)), 2, 0, 8), CoercivityError);
  EXPECT_THROW(homstat_bound(MatrixField::constant(Mat2::Zero()), 2), CoercivityError);
  StaticProblem bad{MatrixField::constant(diag(0.0, 1.0)), 1, [](double) { return Vec2::Zero().eval(); }};
  EXPECT_THROW(static_solve_fem(bad, PeriodicCgSpace(SpacePartition::uniform(4), 1)), CoercivityError);
}

TEST(FiberAnalysis, DynamicCheckWithoutFrequencyIsStatic) {
  const auto field = builtin_maxwell_mixed().field;
  const double rho = 2.0;
  const auto dyn = dynamic_bound_check(field, rho, {0.0}, 4, 12);
  const auto stat = static_bound_sweep(field.composite(cplx(rho, 0.0)), 4, 12);
  ASSERT_EQ(dyn.rows.size(), stat.size());
  for (std::size_t i = 0; i < stat.size(); ++i)
    EXPECT_NEAR(dyn.rows[i].computed_norm, stat[i].computed_norm / (rho * rho), 1e-12);
}

TEST(FiberAnalysis, DynamicCheckForConstantFieldVanishes) {
  const auto field = MaterialField::constant(diag(2.0, 1.0), diag(0.5, 0.0));
  EXPECT_LT(dynamic_bound_check(field, 1.0, {0.0, 3.0}, 4, 8).kappa, 1e-13);
}

TEST(FiberAnalysis, DynamicKappaIsStableInN) {
  const auto field = builtin_maxwell_mixed().field;
  const std::vector<double> xi{0.0, 1.0, -1.0, 10.0};
  const double k4 = dynamic_bound_check(field, 1.0, xi, 4, 16).kappa;
  const double k8 = dynamic_bound_check(field, 1.0, xi, 8, 16).kappa;
  EXPECT_GT(k4, 0.0);
  EXPECT_LE(std::max(k4, k8) / std::min(k4, k8), 3.0);
  EXPECT_THROW(dynamic_bound_check(field, 1.0, {}, 4, 8), std::invalid_argument);
}

TEST(FiberAnalysis, BoundCsvRow) {
  BoundReport r;
  r.n = 4;
  r.k = 1;
  r.l = 16;
  r.computed_norm = 0.5;
  r.paper_bound = 2.0;
  std::ostringstream os;
  write_bound_csv_header(os);
  write_bound_csv_row(os, r);
  EXPECT_EQ(os.str(), "N,k,L,xi,norm,norm_2L,bound,ratio,slope,kappa\n4,1,16,0,0.5,0,2,0.25,nan,nan\n");
}
