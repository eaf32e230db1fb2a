#include "kftam/synth.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <random>

#include "kftam/errors.hpp"

namespace kftam {

namespace {

struct Wave {
  double fa;
  double fb;
  double phase;
};

std::vector<Wave> make_waves(const TextureSpec& spec, std::size_t plane_index) {
  std::mt19937_64 rng(spec.seed * 0x9e3779b97f4a7c15ULL + plane_index + 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Wave> waves;
  const double log_lo = std::log(spec.min_frequency);
  const double log_hi = std::log(spec.max_frequency);
  for (int i = 0; i < spec.components; ++i) {
    const double f = std::exp(log_lo + (log_hi - log_lo) * unit(rng));
    const double dir = 2.0 * std::numbers::pi * unit(rng);
    const double phase = 2.0 * std::numbers::pi * unit(rng);
    waves.push_back({f * std::cos(dir), f * std::sin(dir), phase});
  }
  return waves;
}

double shade(const std::vector<Wave>& waves, double amplitude, double a, double b) {
  double v = 0.5;
  for (const Wave& w : waves) v += amplitude * std::sin(2.0 * std::numbers::pi * (w.fa * a + w.fb * b) + w.phase);
  return std::clamp(v, 0.0, 1.0);
}

struct Hit {
  double distance;  // along a ray whose camera-frame z component is 1, so this is depth
  std::size_t plane;
  double a;
  double b;
};

std::optional<Hit> cast(const std::vector<TexturedPlane>& planes, const Eigen::Vector3d& origin,
                        const Eigen::Vector3d& dir) {
  std::optional<Hit> best;
  for (std::size_t i = 0; i < planes.size(); ++i) {
    const TexturedPlane& p = planes[i];
    const Eigen::Vector3d n = p.u.cross(p.v);
    const double denom = n.dot(dir);
    if (std::abs(denom) < 1e-12) continue;
    const double s = n.dot(p.origin - origin) / denom;
    if (!(s > kMinDepth)) continue;
    if (best && s >= best->distance) continue;
    const Eigen::Vector3d rel = origin + s * dir - p.origin;
    const double a = rel.dot(p.u);
    const double b = rel.dot(p.v);
    if (std::abs(a) > p.half_u || std::abs(b) > p.half_v) continue;
    best = Hit{s, i, a, b};
  }
  return best;
}

Eigen::Vector3d pixel_ray(const CameraIntrinsics& k, const Pose& pose, double u, double v) {
  return pose.rotation() * Eigen::Vector3d((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
}

}  // namespace

double texture_intensity(const TextureSpec& spec, std::size_t plane_index, double a, double b) {
  return shade(make_waves(spec, plane_index), spec.amplitude, a, b);
}

RenderedView render_scene(const SyntheticScene& scene, const Pose& pose, const RenderSettings& settings) {
  if (settings.supersample < 1) raise(ErrorKind::kInvalidArgument, "supersample factor must be >= 1");
  const CameraIntrinsics& k = scene.intrinsics;
  std::vector<std::vector<Wave>> waves;
  for (std::size_t i = 0; i < scene.planes.size(); ++i) waves.push_back(make_waves(scene.texture, i));

  RenderedView out{Image(k.width, k.height), InverseDepthMap(k.width, k.height)};
  const Eigen::Vector3d origin = pose.translation();
  const int ss = settings.supersample;
  std::size_t hits = 0;
  for (int y = 0; y < k.height; ++y) {
    for (int x = 0; x < k.width; ++x) {
      if (const auto hit = cast(scene.planes, origin, pixel_ray(k, pose, x, y))) {
        out.inv_depth.set(x, y, 1.0 / hit->distance);
        ++hits;
      }
      double sum = 0.0;
      for (int sy = 0; sy < ss; ++sy) {
        for (int sx = 0; sx < ss; ++sx) {
          const double u = x + (sx + 0.5) / ss - 0.5;
          const double v = y + (sy + 0.5) / ss - 0.5;
          if (const auto hit = cast(scene.planes, origin, pixel_ray(k, pose, u, v))) {
            sum += shade(waves[hit->plane], scene.texture.amplitude, hit->a, hit->b);
          }
        }
      }
      out.image.set(x, y, sum / (ss * ss));
    }
  }
  if (hits == 0) raise(ErrorKind::kEmptyView, "no pixel ray hits the scene");
  if (settings.noise_std > 0.0) {
    std::mt19937_64 rng(settings.noise_seed);
    std::normal_distribution<double> noise(0.0, settings.noise_std);
    for (int y = 0; y < k.height; ++y)
      for (int x = 0; x < k.width; ++x) out.image.set(x, y, out.image.at(x, y) + noise(rng));
  }
  return out;
}

double view_overlap(const SyntheticScene& scene, const Pose& from, const Pose& to) {
  const CameraIntrinsics& k = scene.intrinsics;
  const Pose to_from_from = to.inverse() * from;
  std::size_t seen = 0;
  std::size_t inside = 0;
  for (int y = 0; y < k.height; ++y) {
    for (int x = 0; x < k.width; ++x) {
      const auto hit = cast(scene.planes, from.translation(), pixel_ray(k, from, x, y));
      if (!hit) continue;
      ++seen;
      const Eigen::Vector3d p = to_from_from * Eigen::Vector3d((x - k.cx) / k.fx * hit->distance,
                                                               (y - k.cy) / k.fy * hit->distance, hit->distance);
      if (p.z() <= kMinDepth) continue;
      const Eigen::Vector2d uv = k.project(p);
      if (uv.x() >= 0.0 && uv.y() >= 0.0 && uv.x() <= k.width - 1 && uv.y() <= k.height - 1) ++inside;
    }
  }
  return seen == 0 ? 0.0 : static_cast<double>(inside) / static_cast<double>(seen);
}

void validate_scene(const SyntheticScene& scene) {
  scene.intrinsics.validate();
  if (scene.poses.empty()) raise(ErrorKind::kInvalidArgument, "scene has no poses");
  if (scene.timestamps.size() != scene.poses.size()) {
    raise(ErrorKind::kInvalidArgument, "scene timestamps and poses differ in count");
  }
  for (std::size_t i = 1; i < scene.poses.size(); ++i) {
    const double overlap = view_overlap(scene, scene.poses.front(), scene.poses[i]);
    if (overlap < 0.5) {
      raise(ErrorKind::kInvalidArgument,
            "pose " + std::to_string(i) + " keeps only " + std::to_string(overlap) + " of the first view");
    }
  }
}

CameraIntrinsics synthetic_intrinsics(int width, int height) {
  CameraIntrinsics k{0.8 * width, 0.8 * width, 0.5 * (width - 1), 0.5 * (height - 1), width, height};
  k.validate();
  return k;
}

namespace {

SyntheticScene finish(const CameraIntrinsics& k, std::vector<Pose> poses, std::vector<TexturedPlane> planes,
                      std::uint64_t seed) {
  SyntheticScene s;
  s.intrinsics = k;
  s.planes = std::move(planes);
  s.texture.seed = seed;
  s.timestamps = uniform_timestamps(static_cast<int>(poses.size()), 30.0);
  s.poses = std::move(poses);
  validate_scene(s);
  return s;
}

TexturedPlane facing(const Pose& view, double depth, double half_u, double half_v, const Eigen::Vector2d& offset) {
  TexturedPlane p;
  p.u = view.rotation().col(0);
  p.v = view.rotation().col(1);
  p.origin = view * Eigen::Vector3d(offset.x(), offset.y(), depth);
  p.half_u = half_u;
  p.half_v = half_v;
  return p;
}

}  // namespace

SyntheticScene textured_plane_scene(const CameraIntrinsics& k, std::vector<Pose> poses, double depth,
                                    std::uint64_t seed) {
  if (poses.empty()) raise(ErrorKind::kInvalidArgument, "scene needs poses");
  const Pose first = poses.front();
  return finish(k, std::move(poses), {facing(first, depth, 4.0 * depth, 4.0 * depth, {0, 0})}, seed);
}

SyntheticScene two_plane_scene(const CameraIntrinsics& k, std::vector<Pose> poses, double near, double far,
                               std::uint64_t seed) {
  if (poses.empty()) raise(ErrorKind::kInvalidArgument, "scene needs poses");
  if (!(near > 0.0) || !(far > near)) raise(ErrorKind::kInvalidArgument, "two-plane scene needs 0 < near < far");
  const Pose first = poses.front();
  std::vector<TexturedPlane> planes{facing(first, far, 4.0 * far, 4.0 * far, {0, 0}),
                                    facing(first, near, 0.15 * near, 0.15 * near, {0.1 * near, 0.05 * near})};
  return finish(k, std::move(poses), std::move(planes), seed);
}

SyntheticScene box_room_scene(const CameraIntrinsics& k, std::vector<Pose> poses, const Eigen::Vector3d& half_extent,
                              std::uint64_t seed) {
  const Eigen::Vector3d e = half_extent;
  const Eigen::Vector3d x = Eigen::Vector3d::UnitX();
  const Eigen::Vector3d y = Eigen::Vector3d::UnitY();
  const Eigen::Vector3d z = Eigen::Vector3d::UnitZ();
  std::vector<TexturedPlane> planes{
      {{0, 0, e.z()}, x, y, e.x(), e.y()},  {{0, 0, -e.z()}, x, y, e.x(), e.y()},
      {{e.x(), 0, 0}, z, y, e.z(), e.y()},  {{-e.x(), 0, 0}, z, y, e.z(), e.y()},
      {{0, e.y(), 0}, x, z, e.x(), e.z()},  {{0, -e.y(), 0}, x, z, e.x(), e.z()},
  };
  return finish(k, std::move(poses), std::move(planes), seed);
}

SyntheticScene desk_scene(const CameraIntrinsics& k, std::vector<Pose> poses, std::uint64_t seed) {
  const Eigen::Vector3d x = Eigen::Vector3d::UnitX();
  const Eigen::Vector3d y = Eigen::Vector3d::UnitY();
  const Eigen::Vector3d z = Eigen::Vector3d::UnitZ();
  const Eigen::Vector3d slope = Eigen::Vector3d(0.0, -0.25, 1.0).normalized();
  std::vector<TexturedPlane> planes{
      {{0, 0, 1.5}, x, y, 2.0, 1.5},            // wall
      {{0, 0.45, 1.0}, x, slope, 2.0, 0.75},    // tilted desk top rising towards the wall
      {{-0.22, 0.08, 0.75}, x, y, 0.12, 0.12},  // near box face
      {{0.28, -0.12, 1.05}, x, y, 0.18, 0.14},  // far box face
      {{0.1, -0.12, 1.05}, z, y, 0.1, 0.14},    // side of the far box
  };
  return finish(k, std::move(poses), std::move(planes), seed);
}

std::vector<Pose> lateral_trajectory(int frames, double step) {
  std::vector<Pose> poses;
  for (int i = 0; i < frames; ++i) poses.emplace_back(Eigen::Matrix3d::Identity(), Eigen::Vector3d(i * step, 0, 0));
  return poses;
}

std::vector<Pose> orbit_trajectory(int frames, double step_deg, double radius, const Eigen::Vector3d& center) {
  std::vector<Pose> poses;
  for (int i = 0; i < frames; ++i) {
    const double a = i * step_deg * std::numbers::pi / 180.0;
    // Rotation about the y axis; the optical axis keeps pointing at the centre.
    const Eigen::Matrix3d r = so3_exp(Eigen::Vector3d(0.0, a, 0.0));
    const Eigen::Vector3d t = center - r * Eigen::Vector3d(0.0, 0.0, radius);
    poses.emplace_back(r, t);
  }
  return poses;
}

std::vector<Pose> wobble_trajectory(int frames, double translation_amp, double rotation_amp_deg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> freq(0.05, 0.2);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::array<double, 6> f{};
  std::array<double, 6> p{};
  for (int i = 0; i < 6; ++i) {
    f[static_cast<std::size_t>(i)] = freq(rng);
    p[static_cast<std::size_t>(i)] = phase(rng);
  }
  const double rot_amp = rotation_amp_deg * std::numbers::pi / 180.0;
  std::vector<Pose> poses;
  for (int i = 0; i < frames; ++i) {
    Vector6d xi;
    for (int c = 0; c < 6; ++c) {
      const auto j = static_cast<std::size_t>(c);
      const double amp = c < 3 ? rot_amp : translation_amp;
      xi[c] = amp * (std::sin(f[j] * i + p[j]) - std::sin(p[j]));
    }
    poses.push_back(exp_twist(Twist::from_vector(xi)));
  }
  return poses;
}

std::vector<double> uniform_timestamps(int frames, double rate_hz, double start) {
  std::vector<double> ts;
  for (int i = 0; i < frames; ++i) ts.push_back(start + i / rate_hz);
  return ts;
}

std::vector<Pose> perturb_poses(const std::vector<Pose>& poses, double rel_std, std::uint64_t seed) {
  if (!(rel_std >= 0.0)) raise(ErrorKind::kInvalidArgument, "relative noise std must be >= 0");
  if (poses.empty() || rel_std == 0.0) return poses;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Pose first_inv = poses.front().inverse();
  std::vector<Pose> out;
  out.reserve(poses.size());
  for (const Pose& pose : poses) {
    Vector6d z;
    for (int i = 0; i < 6; ++i) z[i] = normal(rng);
    const Vector6d xi = log_pose(first_inv * pose).vector();
    out.push_back(poses.front() * exp_twist(Twist::from_vector(xi + rel_std * xi.norm() * z)));
  }
  return out;
}

}  // namespace kftam
