#include "kftam/trajectory.hpp"

#include <array>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "kftam/errors.hpp"
#include "kftam/text.hpp"

namespace kftam {

TrajectoryRecord TrajectoryRecord::from_pose(double timestamp, const Pose& pose) {
  TrajectoryRecord rec;
  rec.timestamp = timestamp;
  rec.translation = pose.translation();
  Eigen::Quaterniond q(pose.rotation());
  q.normalize();
  if (q.w() < 0.0) q.coeffs() *= -1.0;
  rec.rotation = q;
  return rec;
}

Pose TrajectoryRecord::pose() const {
  return Pose(rotation.normalized().toRotationMatrix(), translation);
}

void write_trajectory(std::ostream& out, const Trajectory& trajectory) {
  out << "# timestamp tx ty tz qx qy qz qw\n";
  for (const TrajectoryRecord& r : trajectory) {
    out << format_double(r.timestamp);
    for (int k = 0; k < 3; ++k) out << ' ' << format_double(r.translation[k]);
    out << ' ' << format_double(r.rotation.x()) << ' ' << format_double(r.rotation.y()) << ' '
        << format_double(r.rotation.z()) << ' ' << format_double(r.rotation.w()) << '\n';
  }
}

void write_trajectory(const std::filesystem::path& path, const Trajectory& trajectory) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorKind::kIoError, "cannot write " + path.string());
  write_trajectory(out, trajectory);
}

Trajectory read_trajectory(std::istream& in, const std::string& source_name) {
  Trajectory out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = split_fields(line);
    if (fields.empty() || fields.front().starts_with('#')) continue;
    if (fields.size() != 8) {
      throw MalformedLineError(source_name, line_no,
                               "expected 8 fields, got " + std::to_string(fields.size()));
    }
    std::array<double, 8> v{};
    for (std::size_t k = 0; k < 8; ++k) {
      if (!parse_double(fields[k], v[k])) {
        throw MalformedLineError(source_name, line_no, "bad number '" + std::string(fields[k]) + "'");
      }
    }
    TrajectoryRecord rec;
    rec.timestamp = v[0];
    rec.translation = {v[1], v[2], v[3]};
    rec.rotation = Eigen::Quaterniond(v[7], v[4], v[5], v[6]);
    if (std::abs(rec.rotation.norm() - 1.0) > 1e-3) {
      throw MalformedLineError(source_name, line_no, "quaternion is not unit length");
    }
    out.push_back(rec);
  }
  return out;
}

Trajectory read_trajectory(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorKind::kMissingIndexFile, "cannot open " + path.string());
  return read_trajectory(in, path.string());
}

}  // namespace kftam
