#include "kftam/geometry.hpp"

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <numbers>

#include "kftam/errors.hpp"

namespace kftam {
namespace {

constexpr double kReorthoThreshold = 1e-9;
constexpr double kRotationTolerance = 1e-6;
constexpr double kLogAngleLimit = std::numbers::pi - 1e-6;

// Neumaier-compensated accumulator.
struct CompensatedSum {
  double sum = 0.0;
  double carry = 0.0;

  void add(double v) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      carry += (sum - t) + v;
    } else {
      carry += (v - t) + sum;
    }
    sum = t;
  }
  double value() const { return sum + carry; }
};

}  // namespace

double orthonormality_error(const Eigen::Matrix3d& r) {
  return (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
}

Eigen::Matrix3d project_to_so3(const Eigen::Matrix3d& r) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d u = svd.matrixU();
  const Eigen::Matrix3d& v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) u.col(2) *= -1.0;
  return u * v.transpose();
}

Pose::Pose(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation)
    : rotation_(rotation), translation_(translation) {
  if (!rotation.allFinite() || !translation.allFinite()) {
    raise(ErrorKind::kInvalidArgument, "pose contains non-finite values");
  }
  const double err = orthonormality_error(rotation);
  if (err > kRotationTolerance || std::abs(rotation.determinant() - 1.0) > kRotationTolerance) {
    raise(ErrorKind::kInvalidArgument, "rotation is not in SO(3)");
  }
  if (err > kReorthoThreshold) rotation_ = project_to_so3(rotation);
}

Pose Pose::from_matrix(const Eigen::Matrix4d& m) {
  return Pose(m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>());
}

Pose Pose::inverse() const {
  const Eigen::Matrix3d rt = rotation_.transpose();
  return Pose(Unchecked{}, rt, -(rt * translation_));
}

Eigen::Matrix4d Pose::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation_;
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

double Pose::angle() const {
  const Eigen::Matrix3d& r = rotation_;
  const Eigen::Vector3d v(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  const double c = 0.5 * (r.trace() - 1.0);
  return std::atan2(0.5 * v.norm(), c);
}

Pose compose(const Pose& a, const Pose& b) {
  Eigen::Matrix3d r = a.rotation_ * b.rotation_;
  if (orthonormality_error(r) > kReorthoThreshold) r = project_to_so3(r);
  return Pose(Pose::Unchecked{}, r, a.rotation_ * b.translation_ + a.translation_);
}

Twist Twist::from_vector(const Vector6d& v) { return Twist{v.head<3>(), v.tail<3>()}; }

Vector6d Twist::vector() const {
  Vector6d v;
  v << r, t;
  return v;
}

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d s;
  // clang-format off
  s <<   0.0, -v.z(),  v.y(),
       v.z(),    0.0, -v.x(),
      -v.y(),  v.x(),    0.0;
  // clang-format on
  return s;
}

Eigen::Matrix3d so3_exp(const Eigen::Vector3d& r) {
  const double theta2 = r.squaredNorm();
  const Eigen::Matrix3d k = skew(r);
  double a;  // sin(θ)/θ
  double b;  // (1 − cos θ)/θ²
  if (theta2 < 1e-10) {
    a = 1.0 - theta2 / 6.0;
    b = 0.5 - theta2 / 24.0;
  } else {
    const double theta = std::sqrt(theta2);
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / theta2;
  }
  return Eigen::Matrix3d::Identity() + a * k + b * k * k;
}

Eigen::Vector3d so3_log(const Eigen::Matrix3d& rotation) {
  const Eigen::Vector3d v(rotation(2, 1) - rotation(1, 2), rotation(0, 2) - rotation(2, 0),
                          rotation(1, 0) - rotation(0, 1));
  const double s = 0.5 * v.norm();  // sin θ
  const double c = 0.5 * (rotation.trace() - 1.0);
  const double theta = std::atan2(s, c);
  if (theta >= kLogAngleLimit) {
    raise(ErrorKind::kAngleOutOfRange, "rotation angle " + std::to_string(theta) + " too close to pi");
  }
  // θ / (2 sin θ), Taylor-expanded near zero.
  const double scale = theta < 1e-5 ? 0.5 + theta * theta / 12.0 : 0.5 * theta / s;
  return scale * v;
}

Eigen::Matrix3d so3_left_jacobian(const Eigen::Vector3d& r) {
  const double theta2 = r.squaredNorm();
  const Eigen::Matrix3d k = skew(r);
  double b;  // (1 − cos θ)/θ²
  double c;  // (θ − sin θ)/θ³
  if (theta2 < 1e-8) {
    b = 0.5 - theta2 / 24.0;
    c = 1.0 / 6.0 - theta2 / 120.0;
  } else {
    const double theta = std::sqrt(theta2);
    b = (1.0 - std::cos(theta)) / theta2;
    c = (theta - std::sin(theta)) / (theta2 * theta);
  }
  return Eigen::Matrix3d::Identity() + b * k + c * k * k;
}

Pose exp_twist(const Twist& xi) { return Pose(so3_exp(xi.r), xi.t); }

Twist log_pose(const Pose& pose) { return Twist{so3_log(pose.rotation()), pose.translation()}; }

Pose apply_increment(const Pose& guess, const Twist& delta) { return compose(guess, exp_twist(delta)); }

HypothesisSet aggregate_hypotheses(std::span<const Twist> samples,
                                   const std::optional<Twist>& ground_truth) {
  if (samples.empty()) raise(ErrorKind::kEmptyHypothesisSet, "no pose hypotheses");
  const double n = static_cast<double>(samples.size());

  std::array<CompensatedSum, 6> sums{};
  for (const Twist& s : samples) {
    const Vector6d v = s.vector();
    for (int k = 0; k < 6; ++k) sums[k].add(v[k]);
  }
  Vector6d mean;
  for (int k = 0; k < 6; ++k) mean[k] = sums[k].value() / n;

  std::array<CompensatedSum, 21> scatter{};
  for (const Twist& s : samples) {
    const Vector6d d = s.vector() - mean;
    int idx = 0;
    for (int i = 0; i < 6; ++i)
      for (int j = i; j < 6; ++j) scatter[idx++].add(d[i] * d[j]);
  }
  Matrix6d cov;
  int idx = 0;
  for (int i = 0; i < 6; ++i) {
    for (int j = i; j < 6; ++j) {
      cov(i, j) = scatter[idx++].value() / n;
      cov(j, i) = cov(i, j);
    }
  }

  HypothesisSet out;
  out.samples.assign(samples.begin(), samples.end());
  out.mean = Twist::from_vector(mean);
  out.covariance = cov;
  if (ground_truth) out.residual = mean - ground_truth->vector();
  return out;
}

}  // namespace kftam
