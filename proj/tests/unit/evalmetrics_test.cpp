#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "kftam/evalmetrics.hpp"
#include "support/test_support.hpp"

namespace kftam {
namespace {

using testing::expect_error;

DepthMap depth_row(std::initializer_list<double> values) {
  DepthMap m(static_cast<int>(values.size()), 1);
  int x = 0;
  for (double v : values) m.set(x++, 0, v);
  return m;
}

TEST(DepthMetrics, TwoPixelScaleInvariantError) {
  EXPECT_NEAR(sc_inv(depth_row({1.0, 2.0}), depth_row({1.0, 1.0})), std::log(2.0) / 2.0, 1e-15);
}

TEST(DepthMetrics, ScaleInvariantErrorIgnoresGlobalScale) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.5, 4.0);
  DepthMap d(10, 8), scaled(10, 8), gt(10, 8);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 10; ++x) {
      d.set(x, y, u(rng));
      scaled.set(x, y, 2.5 * d.at(x, y));
      gt.set(x, y, u(rng));
    }
  EXPECT_NEAR(sc_inv(scaled, gt), sc_inv(d, gt), 1e-12);
  EXPECT_EQ(sc_inv(gt, gt), 0.0);
}

TEST(DepthMetrics, RelativeAndInverseErrors) {
  EXPECT_DOUBLE_EQ(l1_rel(depth_row({2.0}), depth_row({1.0})), 1.0);
  EXPECT_DOUBLE_EQ(l1_inv(depth_row({2.0}), depth_row({1.0})), 0.5);
}

TEST(DepthMetrics, MatchDirectFormulasOverJointlyValidPixels) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.3, 6.0);
  std::bernoulli_distribution keep(0.85);
  DepthMap d(13, 9), gt(13, 9);
  double s1 = 0.0, s2 = 0.0, rel = 0.0, inv = 0.0;
  int n = 0;
  for (int y = 0; y < 9; ++y)
    for (int x = 0; x < 13; ++x) {
      const double a = u(rng), b = u(rng);
      const bool ka = keep(rng), kb = keep(rng);
      if (ka) d.set(x, y, a);
      if (kb) gt.set(x, y, b);
      if (!ka || !kb) continue;
      const double e = std::log(a) - std::log(b);
      s1 += e;
      s2 += e * e;
      rel += std::abs(a - b) / b;
      inv += std::abs(1.0 / a - 1.0 / b);
      ++n;
    }
  EXPECT_NEAR(sc_inv(d, gt), std::sqrt(s2 / n - (s1 / n) * (s1 / n)), 1e-12);
  EXPECT_NEAR(l1_rel(d, gt), rel / n, 1e-12);
  EXPECT_NEAR(l1_inv(d, gt), inv / n, 1e-12);
}

TEST(DepthMetrics, NoCommonPixelsIsAnError) {
  DepthMap a(2, 1), b(2, 1);
  a.set(0, 0, 1.0);
  b.set(1, 0, 1.0);
  expect_error(ErrorKind::kNoValidPixels, [&] { sc_inv(a, b); });
  expect_error(ErrorKind::kNoValidPixels, [&] { l1_rel(a, b); });
  expect_error(ErrorKind::kNoValidPixels, [&] { l1_inv(a, b); });
}

Trajectory trajectory_of(const std::vector<Pose>& poses, double dt, double t0 = 0.0) {
  Trajectory t;
  for (std::size_t i = 0; i < poses.size(); ++i) t.push_back(TrajectoryRecord::from_pose(t0 + dt * i, poses[i]));
  return t;
}

std::vector<Pose> random_walk(std::mt19937_64& rng, int n) {
  std::vector<Pose> poses{testing::random_pose(rng, 0.5, 1.0)};
  for (int i = 1; i < n; ++i) poses.push_back(apply_increment(poses.back(), testing::random_twist(rng, 0.05, 0.05)));
  return poses;
}

TEST(Rpe, IdenticalTrajectoriesHaveNoError) {
  std::mt19937_64 rng(3);
  const Trajectory t = trajectory_of(random_walk(rng, 60), 0.05);
  EXPECT_LT(translational_rpe_rmse(t, t), 1e-12);
}

TEST(Rpe, ConstantDriftIsRecoveredAsSpeed) {
  std::vector<Pose> gt, est;
  for (int i = 0; i < 40; ++i) {
    gt.push_back(Pose::identity());
    est.push_back(Pose(Eigen::Matrix3d::Identity(), {0.3 * 0.1 * i, 0.0, 0.0}));
  }
  EXPECT_NEAR(translational_rpe_rmse(trajectory_of(est, 0.1), trajectory_of(gt, 0.1)), 0.3, 1e-12);
  EXPECT_NEAR(translational_rpe_rmse(trajectory_of(est, 0.1), trajectory_of(gt, 0.1), 2.0), 0.3, 1e-12);
}

// Straightforward reimplementation for trajectories with shared timestamps.
double rpe_reference(const std::vector<Pose>& est, const std::vector<Pose>& gt, double dt, int step) {
  double sum = 0.0;
  int n = 0;
  for (std::size_t i = 0; i + step < est.size(); ++i) {
    const std::size_t j = i + static_cast<std::size_t>(step);
    const Pose e = (gt[i].inverse() * gt[j]).inverse() * (est[i].inverse() * est[j]);
    sum += e.translation().squaredNorm();
    ++n;
  }
  return std::sqrt(sum / n) / (dt * step);
}

TEST(Rpe, MatchesReferenceImplementation) {
  std::mt19937_64 rng(4);
  const std::vector<Pose> gt = random_walk(rng, 80);
  std::vector<Pose> est;
  for (const Pose& p : gt) est.push_back(apply_increment(p, testing::random_twist(rng, 0.01, 0.01)));
  const double dt = 1.0 / 30.0;
  EXPECT_NEAR(translational_rpe_rmse(trajectory_of(est, dt), trajectory_of(gt, dt)), rpe_reference(est, gt, dt, 30),
              1e-12);
}

TEST(Rpe, InvariantToRigidReframing) {
  std::mt19937_64 rng(5);
  const std::vector<Pose> gt = random_walk(rng, 70);
  std::vector<Pose> est, moved;
  const Pose g = testing::random_pose(rng);
  for (const Pose& p : gt) {
    est.push_back(apply_increment(p, testing::random_twist(rng, 0.01, 0.01)));
    moved.push_back(g * est.back());
  }
  const Trajectory ref = trajectory_of(gt, 0.04);
  EXPECT_NEAR(translational_rpe_rmse(trajectory_of(moved, 0.04), ref),
              translational_rpe_rmse(trajectory_of(est, 0.04), ref), 1e-10);
}

TEST(Rpe, AssociatesWithinTwentyMilliseconds) {
  std::mt19937_64 rng(6);
  const std::vector<Pose> gt = random_walk(rng, 50);
  // Estimate stamps 15 ms late still associate; 25 ms late do not.
  EXPECT_LT(translational_rpe_rmse(trajectory_of(gt, 0.1, 0.015), trajectory_of(gt, 0.1)), 1e-12);
  expect_error(ErrorKind::kInsufficientOverlapInTime,
               [&] { translational_rpe_rmse(trajectory_of(gt, 0.1, 0.025), trajectory_of(gt, 0.1)); });
}

TEST(Rpe, TooShortForTheIntervalIsAnError) {
  std::mt19937_64 rng(7);
  const Trajectory t = trajectory_of(random_walk(rng, 10), 0.05);
  expect_error(ErrorKind::kInsufficientOverlapInTime, [&] { translational_rpe_rmse(t, t, 1.0); });
  EXPECT_NO_THROW(translational_rpe_rmse(t, t, 0.2));
}

}  // namespace
}  // namespace kftam
