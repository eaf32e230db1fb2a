#pragma once

// Rigid-body algebra used by tracking and mapping.
//
// Poses are world-from-camera transforms stored as an explicit rotation
// matrix plus translation. Pose increments are 6-vectors (angle-axis
// rotation, Cartesian translation); exp/log convert between the two.

#include <Eigen/Core>
#include <optional>
#include <span>
#include <vector>

namespace kftam {

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;

class Pose {
 public:
  Pose() : rotation_(Eigen::Matrix3d::Identity()), translation_(Eigen::Vector3d::Zero()) {}

  /// Throws InvalidArgument unless `rotation` is orthonormal with det +1
  /// (tolerance 1e-6); small drift is projected back onto SO(3).
  Pose(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation);

  static Pose identity() { return {}; }
  static Pose from_matrix(const Eigen::Matrix4d& m);

  const Eigen::Matrix3d& rotation() const { return rotation_; }
  const Eigen::Vector3d& translation() const { return translation_; }

  Pose inverse() const;
  Eigen::Matrix4d matrix() const;
  Eigen::Vector3d operator*(const Eigen::Vector3d& p) const { return rotation_ * p + translation_; }

  /// Rotation angle in radians, in [0, pi].
  double angle() const;

 private:
  struct Unchecked {};
  Pose(Unchecked, const Eigen::Matrix3d& r, const Eigen::Vector3d& t) : rotation_(r), translation_(t) {}
  friend Pose compose(const Pose& a, const Pose& b);

  Eigen::Matrix3d rotation_;
  Eigen::Vector3d translation_;
};

/// Applies `b` then `a` (a·b in homogeneous form).
Pose compose(const Pose& a, const Pose& b);
inline Pose operator*(const Pose& a, const Pose& b) { return compose(a, b); }

/// Maximum absolute entry of RᵀR − I.
double orthonormality_error(const Eigen::Matrix3d& r);
/// Nearest rotation matrix in the Frobenius sense.
Eigen::Matrix3d project_to_so3(const Eigen::Matrix3d& r);

struct Twist {
  Eigen::Vector3d r = Eigen::Vector3d::Zero();  ///< angle-axis, radians
  Eigen::Vector3d t = Eigen::Vector3d::Zero();  ///< meters

  static Twist from_vector(const Vector6d& v);
  Vector6d vector() const;
  double norm() const { return vector().norm(); }
};

Eigen::Matrix3d skew(const Eigen::Vector3d& v);
Eigen::Matrix3d so3_exp(const Eigen::Vector3d& r);
/// Throws AngleOutOfRange when the rotation angle is >= pi - 1e-6.
Eigen::Vector3d so3_log(const Eigen::Matrix3d& rotation);
/// Left Jacobian of SO(3): so3_exp(r + d) ≈ so3_exp(J_l(r) d) so3_exp(r).
Eigen::Matrix3d so3_left_jacobian(const Eigen::Vector3d& r);

Pose exp_twist(const Twist& xi);
Twist log_pose(const Pose& pose);

/// guess · exp(delta): the current pose written as a virtual-view guess
/// followed by a small increment.
Pose apply_increment(const Pose& guess, const Twist& delta);

struct HypothesisSet {
  std::vector<Twist> samples;
  Twist mean;
  Matrix6d covariance = Matrix6d::Zero();
  /// mean − ground truth, present only when a ground truth was supplied.
  std::optional<Vector6d> residual;
};

/// Plain componentwise mean and (1/N) scatter of the samples; summation in
/// index order with Neumaier compensation. Throws EmptyHypothesisSet.
HypothesisSet aggregate_hypotheses(std::span<const Twist> samples,
                                   const std::optional<Twist>& ground_truth = std::nullopt);

}  // namespace kftam
