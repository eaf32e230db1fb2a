#pragma once

#include <gtest/gtest.h>

#include <Eigen/Geometry>
#include <filesystem>
#include <random>
#include <string>

#include "kftam/errors.hpp"
#include "kftam/geometry.hpp"
#include "kftam/imaging.hpp"

namespace kftam::testing {

inline Eigen::Vector3d random_vector(std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return {u(rng), u(rng), u(rng)};
}

inline Pose random_pose(std::mt19937_64& rng, double max_angle = 3.0, double max_translation = 2.0) {
  std::uniform_real_distribution<double> angle(0.0, max_angle);
  const Eigen::Vector3d axis = random_vector(rng, 1.0).normalized();
  return Pose(Eigen::AngleAxisd(angle(rng), axis).toRotationMatrix(), random_vector(rng, max_translation));
}

inline Twist random_twist(std::mt19937_64& rng, double max_angle, double max_translation) {
  std::uniform_real_distribution<double> angle(0.0, max_angle);
  Twist xi;
  xi.r = random_vector(rng, 1.0).normalized() * angle(rng);
  xi.t = random_vector(rng, max_translation);
  return xi;
}

inline Image random_image(std::mt19937_64& rng, int width, int height) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Image img(width, height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) img.set(x, y, u(rng));
  return img;
}

inline double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

/// Runs `f` and expects it to throw kftam::Error of the given kind.
template <class F>
void expect_error(ErrorKind kind, F&& f) {
  try {
    f();
    ADD_FAILURE() << "expected " << to_string(kind);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), kind) << e.what();
  }
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("kftam-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace kftam::testing
