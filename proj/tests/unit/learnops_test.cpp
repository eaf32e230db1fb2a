#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "kftam/bessel.hpp"
#include "kftam/gradcheck.hpp"
#include "kftam/learnops.hpp"
#include "support/test_support.hpp"

namespace kftam {
namespace {

using testing::expect_error;

// Central differences of f around x, coordinate by coordinate.
template <class F>
std::vector<double> numeric_gradient(F&& f, std::vector<double> x, double h = 1e-6) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double x0 = x[i];
    x[i] = x0 + h;
    const double fp = f(x);
    x[i] = x0 - h;
    const double fm = f(x);
    x[i] = x0;
    g[i] = (fp - fm) / (2 * h);
  }
  return g;
}

InverseDepthMap random_inverse_depth(std::mt19937_64& rng, int w, int h, double lo = 0.3, double hi = 2.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  InverseDepthMap m(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) m.set(x, y, u(rng));
  return m;
}

InverseDepthMap from_values(const std::vector<double>& v, const InverseDepthMap& shape) {
  InverseDepthMap m(shape.width(), shape.height());
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x)
      if (shape.valid(x, y)) m.set(x, y, v[static_cast<std::size_t>(y * m.width() + x)]);
  return m;
}

std::vector<double> values_of(const InverseDepthMap& m) {
  std::vector<double> v;
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) v.push_back(m.at(x, y));
  return v;
}

// ---------------------------------------------------------------------------
// Endpoint error

TEST(EndpointError, ZeroForIdenticalFlow) {
  FlowField w(3, 2);
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 3; ++x) w.set(x, y, {0.1 * x, -0.2 * y});
  const LossValue l = endpoint_error_loss(w, w);
  EXPECT_EQ(l.value, 0.0);
  for (double g : l.gradient) EXPECT_EQ(g, 0.0);
}

TEST(EndpointError, ThreeFourFive) {
  FlowField w(1, 1), gt(1, 1);
  w.set(0, 0, {3.0, 4.0});
  gt.set(0, 0, {0.0, 0.0});
  const LossValue l = endpoint_error_loss(w, gt);
  EXPECT_DOUBLE_EQ(l.value, 5.0);
  ASSERT_EQ(l.gradient.size(), 2u);
  EXPECT_DOUBLE_EQ(l.gradient[0], 0.6);
  EXPECT_DOUBLE_EQ(l.gradient[1], 0.8);
}

TEST(EndpointError, DisjointMasksHaveNoValidPixels) {
  FlowField w(2, 1), gt(2, 1);
  w.set(0, 0, {1.0, 0.0});
  gt.set(1, 0, {1.0, 0.0});
  expect_error(ErrorKind::kNoValidPixels, [&] { endpoint_error_loss(w, gt); });
}

TEST(EndpointError, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  FlowField gt(4, 3);
  std::vector<double> x;
  for (int y = 0; y < 3; ++y)
    for (int px = 0; px < 4; ++px) {
      gt.set(px, y, {u(rng), u(rng)});
      x.push_back(u(rng));
      x.push_back(u(rng));
    }
  gt.invalidate(2, 1);
  auto make = [](const std::vector<double>& v) {
    FlowField w(4, 3);
    for (int i = 0; i < 12; ++i) w.set(i % 4, i / 4, {v[2 * i], v[2 * i + 1]});
    return w;
  };
  const LossValue l = endpoint_error_loss(make(x), gt);
  const auto fd = numeric_gradient([&](const std::vector<double>& v) { return endpoint_error_loss(make(v), gt).value; }, x);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(l.gradient[i], fd[i], 1e-7) << i;
  EXPECT_EQ(l.gradient[2 * 6], 0.0);
}

// ---------------------------------------------------------------------------
// Motion loss

TEST(MotionLoss, ZeroAtGroundTruth) {
  Twist xi;
  xi.r = {0.1, 0.2, 0.3};
  xi.t = {1.0, 2.0, 3.0};
  EXPECT_EQ(motion_loss(xi, xi).value, 0.0);
}

TEST(MotionLoss, WeightsRotationByAlpha) {
  Twist xi, gt;
  xi.t = {1.0, 0.0, 0.0};
  EXPECT_DOUBLE_EQ(motion_loss(xi, gt, 1.0).value, 1.0);
  xi.r = {0.0, 0.003, 0.004};
  EXPECT_DOUBLE_EQ(motion_loss(xi, gt).value, 160.0 * 0.005 + 1.0);
}

TEST(MotionLoss, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(2);
  const Twist gt = testing::random_twist(rng, 0.2, 0.1);
  const Twist xi = testing::random_twist(rng, 0.2, 0.1);
  const LossValue l = motion_loss(xi, gt);
  const Vector6d v = xi.vector();
  const auto fd = numeric_gradient(
      [&](const std::vector<double>& p) {
        return motion_loss(Twist::from_vector(Eigen::Map<const Vector6d>(p.data())), gt).value;
      },
      std::vector<double>(v.data(), v.data() + 6));
  for (int i = 0; i < 6; ++i) EXPECT_NEAR(l.gradient[static_cast<std::size_t>(i)], fd[static_cast<std::size_t>(i)], 1e-6);
}

// ---------------------------------------------------------------------------
// Bessel K

// K_v(x) = ∫_0^∞ exp(−x cosh t) cosh(v t) dt by the trapezoid rule, which
// converges geometrically for this analytic, rapidly decaying integrand.
double bessel_k_quadrature(double v, double x) {
  const long double h = 2e-3L;
  long double sum = 0.5L * std::exp(-static_cast<long double>(x));
  for (int k = 1;; ++k) {
    const long double t = k * h;
    const long double e = -x * std::cosh(t) + v * t;
    const long double term = 0.5L * std::exp(e) * (1.0L + std::exp(-2.0L * v * t));
    sum += term;
    if (t > 1.0L && term < 1e-22L * sum) break;
  }
  return static_cast<double>(h * sum);
}

TEST(BesselK, HalfOrderClosedForm) {
  EXPECT_NEAR(bessel_k(0.5, 1.0), std::sqrt(std::numbers::pi / 2.0) * std::exp(-1.0), 1e-15);
  for (double x : {0.01, 0.7, 3.0, 20.0}) {
    const double expected = std::sqrt(std::numbers::pi / (2.0 * x)) * std::exp(-x);
    EXPECT_NEAR(bessel_k(0.5, x) / expected, 1.0, 1e-13) << x;
  }
}

TEST(BesselK, EvenInOrder) {
  for (double v : {0.3, 1.0, 2.0, 3.7})
    for (double x : {0.05, 1.5, 8.0}) EXPECT_EQ(bessel_k(-v, x), bessel_k(v, x));
}

TEST(BesselK, MatchesIntegralRepresentation) {
  double worst = 0.0;
  for (int iv = 0; iv <= 20; ++iv) {
    const double v = 0.25 * iv;
    for (double x : {1e-3, 1e-2, 0.1, 0.5, 1.0, 1.99, 2.01, 3.0, 7.5, 20.0, 50.0}) {
      const double ref = bessel_k_quadrature(v, x);
      worst = std::max(worst, std::abs(bessel_k(v, x) - ref) / ref);
    }
  }
  EXPECT_LT(worst, 1e-10);
}

TEST(BesselK, SatisfiesThreeTermRecurrence) {
  for (double v : {0.4, 1.3, 2.5})
    for (double x : {0.2, 2.0, 9.0}) {
      const double lhs = bessel_k(v + 1.0, x);
      const double rhs = bessel_k(v - 1.0, x) + 2.0 * v / x * bessel_k(v, x);
      EXPECT_NEAR(lhs / rhs, 1.0, 1e-8) << v << " " << x;
    }
}

TEST(BesselK, DomainErrors) {
  expect_error(ErrorKind::kDomainError, [] { bessel_k(1.0, 0.0); });
  expect_error(ErrorKind::kDomainError, [] { bessel_k(1.0, -2.0); });
  expect_error(ErrorKind::kDomainError, [] { bessel_k(std::numeric_limits<double>::quiet_NaN(), 1.0); });
  expect_error(ErrorKind::kDomainError, [] { bessel_k(1.0, std::numeric_limits<double>::infinity()); });
}

TEST(BesselK, DerivativeMatchesFiniteDifferences) {
  for (double v : {0.0, 0.5, 2.0})
    for (double x : {0.3, 1.0, 4.0}) {
      const double h = 1e-6 * x;
      const double fd = (bessel_k(v, x + h) - bessel_k(v, x - h)) / (2 * h);
      EXPECT_NEAR(bessel_k_derivative(v, x) / fd, 1.0, 1e-7);
    }
}

// ---------------------------------------------------------------------------
// Laplace negative log-likelihood

TEST(Laplace, IdentityCovarianceClosedForm) {
  Vector6d x;
  x << 0.3, -0.1, 0.2, 0.5, 0.0, -0.4;
  const LaplaceTerms t = laplace_terms(Matrix6d::Identity(), x);
  const double s = 1.0 + kCovarianceEpsilon;
  const double q = x.squaredNorm() / s;
  EXPECT_NEAR(t.q, q, 1e-15);
  EXPECT_NEAR(t.half_log_det, 3.0 * std::log(s), 1e-15);
  EXPECT_NEAR(t.log_term, -2.0 * std::log(q / 2.0), 1e-14);
  EXPECT_NEAR(t.bessel_term, -std::log(bessel_k(2.0, std::sqrt(2.0 * q))), 1e-14);
  EXPECT_NEAR(t.total(), t.half_log_det + t.log_term + t.bessel_term, 0.0);
}

TEST(Laplace, LogDeterminantScalesWithCovariance) {
  std::mt19937_64 rng(3);
  Eigen::Matrix<double, 6, 6> a = Eigen::Matrix<double, 6, 6>::NullaryExpr([&] {
    return std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
  });
  const Matrix6d sigma = a * a.transpose() + Matrix6d::Identity();
  const Vector6d x = Vector6d::Constant(0.2);
  const double c = 4.0;
  const LaplaceTerms base = laplace_terms(sigma, x, 2.0, 0.0);
  const LaplaceTerms scaled = laplace_terms(c * sigma, x, 2.0, 0.0);
  EXPECT_NEAR(scaled.half_log_det - base.half_log_det, 3.0 * std::log(c), 1e-12);
  EXPECT_NEAR(scaled.q, base.q / c, 1e-12);
}

TEST(Laplace, RejectsSingularCovarianceAndZeroResidual) {
  Matrix6d sigma = Matrix6d::Identity();
  sigma(0, 0) = -1.0;
  expect_error(ErrorKind::kSingularCovariance, [&] { laplace_terms(sigma, Vector6d::Ones()); });
  expect_error(ErrorKind::kDomainError, [] { laplace_terms(Matrix6d::Identity(), Vector6d::Zero()); });
}

TEST(Laplace, SampleGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(4);
  std::vector<Twist> samples;
  for (int i = 0; i < 10; ++i) samples.push_back(testing::random_twist(rng, 0.05, 0.02));
  Vector6d x;
  x << 0.01, -0.02, 0.005, 0.004, 0.0, -0.003;
  const LossValue l = laplace_uncertainty_loss(samples, x);
  std::vector<double> flat;
  for (const Twist& s : samples) {
    const Vector6d v = s.vector();
    flat.insert(flat.end(), v.data(), v.data() + 6);
  }
  const auto fd = numeric_gradient(
      [&](const std::vector<double>& p) {
        std::vector<Twist> s;
        for (std::size_t i = 0; i < samples.size(); ++i)
          s.push_back(Twist::from_vector(Eigen::Map<const Vector6d>(p.data() + 6 * i)));
        return laplace_uncertainty_loss(s, x).value;
      },
      flat, 1e-7);
  for (std::size_t i = 0; i < flat.size(); ++i) EXPECT_NEAR(l.gradient[i], fd[i], 1e-4 * std::max(1.0, std::abs(fd[i])));
}

TEST(Laplace, HypothesisOverloadUsesMeanResidual) {
  std::mt19937_64 rng(5);
  std::vector<Twist> samples;
  for (int i = 0; i < 16; ++i) samples.push_back(testing::random_twist(rng, 0.05, 0.02));
  const Twist gt = testing::random_twist(rng, 0.05, 0.02);
  const HypothesisSet h = aggregate_hypotheses(samples, gt);
  EXPECT_DOUBLE_EQ(laplace_uncertainty_loss(h, gt).value, laplace_uncertainty_loss(samples, *h.residual).value);
}

// ---------------------------------------------------------------------------
// Depth losses

TEST(L1InverseDepth, SinglePixel) {
  InverseDepthMap d(1, 1), gt(1, 1);
  d.set(0, 0, 0.6);
  gt.set(0, 0, 0.5);
  const LossValue l = l1_inverse_depth_loss(d, gt);
  EXPECT_NEAR(l.value, 0.1, 1e-15);
  EXPECT_EQ(l.gradient[0], 1.0);
}

TEST(L1InverseDepth, AveragesOverJointlyValidPixels) {
  InverseDepthMap d = InverseDepthMap::constant(2, 2, 1.0), gt = InverseDepthMap::constant(2, 2, 0.5);
  gt.invalidate(1, 1);
  d.set(0, 0, 2.0);
  const LossValue l = l1_inverse_depth_loss(d, gt);
  EXPECT_NEAR(l.value, (1.5 + 0.5 + 0.5) / 3.0, 1e-15);
  EXPECT_EQ(l.gradient[3], 0.0);
  expect_error(ErrorKind::kNoValidPixels, [] { l1_inverse_depth_loss(InverseDepthMap(2, 2), InverseDepthMap(2, 2)); });
}

// Direct transcription of the documented definition.
double scale_invariant_gradient_reference(const InverseDepthMap& d, const InverseDepthMap& gt) {
  const int w = d.width(), h = d.height();
  auto ok = [&](int x, int y) { return x < w && y < h && d.valid(x, y) && gt.valid(x, y); };
  auto g = [](double a, double b) { return (b - a) / std::max(std::abs(b) + std::abs(a), 1e-9); };
  double total = 0.0;
  for (int step : kDefaultGradientSteps)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        if (!ok(x, y)) continue;
        double gx = 0.0, gy = 0.0;
        if (ok(x + step, y)) gx = g(d.at(x, y), d.at(x + step, y)) - g(gt.at(x, y), gt.at(x + step, y));
        if (ok(x, y + step)) gy = g(d.at(x, y), d.at(x, y + step)) - g(gt.at(x, y), gt.at(x, y + step));
        total += std::hypot(gx, gy);
      }
  return total;
}

TEST(ScaleInvariantGradient, ZeroForIdenticalMaps) {
  std::mt19937_64 rng(6);
  const InverseDepthMap d = random_inverse_depth(rng, 7, 5);
  EXPECT_EQ(scale_invariant_gradient_loss(d, d).value, 0.0);
}

TEST(ScaleInvariantGradient, IgnoresGlobalScale) {
  std::mt19937_64 rng(7);
  const InverseDepthMap d = random_inverse_depth(rng, 9, 6);
  const InverseDepthMap gt = random_inverse_depth(rng, 9, 6);
  InverseDepthMap scaled(9, 6);
  for (int y = 0; y < 6; ++y)
    for (int x = 0; x < 9; ++x) scaled.set(x, y, 3.7 * d.at(x, y));
  EXPECT_NEAR(scale_invariant_gradient_loss(scaled, gt).value, scale_invariant_gradient_loss(d, gt).value, 1e-12);
}

TEST(ScaleInvariantGradient, MatchesDirectDefinition) {
  std::mt19937_64 rng(8);
  const InverseDepthMap d = random_inverse_depth(rng, 12, 10);
  InverseDepthMap gt = random_inverse_depth(rng, 12, 10);
  for (auto [x, y] : {std::pair{3, 3}, {0, 9}, {11, 0}, {6, 7}}) gt.invalidate(x, y);
  EXPECT_NEAR(scale_invariant_gradient_loss(d, gt).value, scale_invariant_gradient_reference(d, gt), 1e-12);
}

TEST(ScaleInvariantGradient, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(9);
  const InverseDepthMap d = random_inverse_depth(rng, 8, 6);
  InverseDepthMap gt = random_inverse_depth(rng, 8, 6);
  gt.invalidate(4, 2);
  const LossValue l = scale_invariant_gradient_loss(d, gt);
  const auto fd = numeric_gradient(
      [&](const std::vector<double>& v) { return scale_invariant_gradient_loss(from_values(v, d), gt).value; },
      values_of(d));
  for (std::size_t i = 0; i < fd.size(); ++i) EXPECT_NEAR(l.gradient[i], fd[i], 1e-6) << i;
}

// ---------------------------------------------------------------------------
// Gradient checker

TEST(GradCheck, SmoothQuadraticPasses) {
  const LossFunction f = [](std::span<const double> p) {
    LossValue l;
    for (double v : p) {
      l.value += 0.5 * v * v + v;
      l.gradient.push_back(v + 1.0);
    }
    return l;
  };
  const std::vector<double> point{0.3, -1.2, 2.5};
  const GradientCheck c = finite_difference_check(f, point);
  EXPECT_LT(c.max_relative_error, 1e-9);
  EXPECT_EQ(c.kinks, 0u);
}

TEST(GradCheck, AbsoluteValueAtZeroIsAKink) {
  const LossFunction f = [](std::span<const double> p) {
    return LossValue{std::abs(p[0]) + p[1] * p[1], {p[0] >= 0.0 ? 1.0 : -1.0, 2.0 * p[1]}};
  };
  const std::vector<double> point{0.0, 0.7};
  const GradientCheck c = finite_difference_check(f, point);
  ASSERT_EQ(c.coordinates.size(), 2u);
  EXPECT_TRUE(c.coordinates[0].kink);
  EXPECT_FALSE(c.coordinates[1].kink);
  EXPECT_EQ(c.kinks, 1u);
  EXPECT_LT(c.max_relative_error, 1e-8);
}

TEST(GradCheck, WrongGradientIsReported) {
  const LossFunction f = [](std::span<const double> p) { return LossValue{p[0] * p[0], {3.0 * p[0]}}; };
  const std::vector<double> point{1.0};
  EXPECT_NEAR(finite_difference_check(f, point).max_relative_error, 1.0 / 3.0, 1e-6);
}

TEST(GradCheck, AllLossesAgreeWithFiniteDifferences) {
  const std::vector<LossCheck> checks = check_all_losses(2, 11);
  ASSERT_EQ(checks.size(), 10u);
  for (const LossCheck& c : checks) {
    EXPECT_LT(c.check.max_relative_error, 1e-4) << c.loss << " point " << c.point;
    EXPECT_LE(static_cast<double>(c.check.kinks), 0.01 * static_cast<double>(c.check.coordinates.size()) + 1e-9)
        << c.loss;
  }
}

}  // namespace
}  // namespace kftam
