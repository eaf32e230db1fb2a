#pragma once

// Trajectory text format, one line per frame:
//
//   timestamp tx ty tz qx qy qz qw
//
// Values are written with 17 significant digits, so reading a file and
// writing it back reproduces it byte for byte. Lines starting with '#' are
// comments.

#include <Eigen/Geometry>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "kftam/geometry.hpp"

namespace kftam {

struct TrajectoryRecord {
  double timestamp = 0.0;
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();

  /// Quaternion is normalized with qw >= 0.
  static TrajectoryRecord from_pose(double timestamp, const Pose& pose);
  Pose pose() const;
};

using Trajectory = std::vector<TrajectoryRecord>;

void write_trajectory(std::ostream& out, const Trajectory& trajectory);
void write_trajectory(const std::filesystem::path& path, const Trajectory& trajectory);

/// Throws MalformedLine (with the 1-based line number) on bad input.
Trajectory read_trajectory(std::istream& in, const std::string& source_name = "<stream>");
Trajectory read_trajectory(const std::filesystem::path& path);

}  // namespace kftam
