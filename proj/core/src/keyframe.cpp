#include "kftam/keyframe.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "kftam/errors.hpp"

namespace kftam {

void Keyframe::validate() const {
  if (image.width() != inv_depth.width() || image.height() != inv_depth.height()) {
    raise(ErrorKind::kInvalidKeyframe, "image and inverse depth differ in size");
  }
  if (intrinsics.width != image.width() || intrinsics.height != image.height()) {
    raise(ErrorKind::kInvalidKeyframe, "intrinsics do not match the image size");
  }
  if (inv_depth.valid_count() == 0) raise(ErrorKind::kInvalidKeyframe, "keyframe has no valid depth");
}

VirtualKeyframe render_virtual_keyframe(const Keyframe& kf, const Pose& guess, const RenderOptions& opts) {
  kf.validate();
  const CameraIntrinsics& k = kf.intrinsics;
  const int w = k.width;
  const int h = k.height;
  const std::size_t n = static_cast<std::size_t>(w) * h;
  const Pose virt_from_kf = guess.inverse() * kf.pose;
  const Pose kf_from_virt = virt_from_kf.inverse();

  constexpr int kNone = -1;
  std::vector<double> zbuf(n, std::numeric_limits<double>::infinity());
  std::vector<int> source(n, kNone);

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!kf.inv_depth.valid(x, y)) continue;
      const Eigen::Vector3d p = virt_from_kf * k.backproject(x, y, kf.inv_depth.at(x, y));
      if (p.z() <= kMinDepth) continue;
      const Eigen::Vector2d uv = k.project(p);
      const long u = std::lround(uv.x());
      const long v = std::lround(uv.y());
      if (u < 0 || v < 0 || u >= w || v >= h) continue;
      const std::size_t i = static_cast<std::size_t>(v) * w + u;
      if (p.z() < zbuf[i] - opts.z_tolerance) {
        zbuf[i] = p.z();
        source[i] = y * w + x;
      }
    }
  }

  VirtualKeyframe out{Image(w, h, kf.image.channels()), InverseDepthMap(w, h), std::vector<std::uint8_t>(n, 0)};
  for (std::size_t i = 0; i < n; ++i) {
    if (source[i] != kNone) out.inv_depth.set(static_cast<int>(i % w), static_cast<int>(i / w), 1.0 / zbuf[i]);
  }

  // Single dilation pass over the splatted depth only.
  const InverseDepthMap splatted = out.inv_depth;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (splatted.valid(x, y)) continue;
      double sum = 0.0;
      int count = 0;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int xx = x + dx;
          const int yy = y + dy;
          if ((dx == 0 && dy == 0) || xx < 0 || yy < 0 || xx >= w || yy >= h) continue;
          if (splatted.valid(xx, yy)) {
            sum += splatted.at(xx, yy);
            ++count;
          }
        }
      }
      if (count >= opts.min_neighbors_to_fill) {
        out.inv_depth.set(x, y, sum / count);
        out.hole_filled[static_cast<std::size_t>(y) * w + x] = 1;
      }
    }
  }

  const std::size_t valid = out.inv_depth.valid_count();
  if (static_cast<double>(valid) < opts.min_valid_fraction * static_cast<double>(n)) {
    raise(ErrorKind::kDegenerateView, std::to_string(valid) + " of " + std::to_string(n) +
                                          " virtual pixels received depth");
  }

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!out.inv_depth.valid(x, y)) continue;
      const Eigen::Vector3d p = kf_from_virt * k.backproject(x, y, out.inv_depth.at(x, y));
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      bool sampled = false;
      if (p.z() > kMinDepth) {
        const Eigen::Vector2d uv = k.project(p);
        sampled = true;
        for (int c = 0; c < kf.image.channels() && sampled; ++c) {
          const Sample s = bilinear_sample(kf.image, uv.x(), uv.y(), c);
          sampled = s.in_bounds;
          if (sampled) out.image.set(x, y, s.value, c);
        }
      }
      if (sampled) continue;
      if (source[i] == kNone) {
        // A filled hole whose back-projection leaves the keyframe: drop it.
        out.inv_depth.invalidate(x, y);
        out.hole_filled[i] = 0;
        continue;
      }
      const int sx = source[i] % w;
      const int sy = source[i] / w;
      for (int c = 0; c < kf.image.channels(); ++c) out.image.set(x, y, kf.image.at(sx, sy, c), c);
    }
  }
  return out;
}

bool should_switch_keyframe(const Pose& kf_pose, const Pose& cur_pose, const KeyframePolicy& policy) {
  constexpr double kGuard = 1e-9;
  const Pose rel = kf_pose.inverse() * cur_pose;
  const double angle_deg = rel.angle() * 180.0 / std::numbers::pi;
  return angle_deg > policy.rotation_threshold_deg + kGuard ||
         rel.translation().norm() > policy.translation_threshold_m + kGuard;
}

std::vector<std::size_t> simulate_keyframe_policy(const std::vector<Pose>& poses, const KeyframePolicy& policy) {
  std::vector<std::size_t> keyframes;
  if (poses.empty()) return keyframes;
  keyframes.push_back(0);
  for (std::size_t i = 1; i < poses.size(); ++i) {
    if (should_switch_keyframe(poses[keyframes.back()], poses[i], policy)) keyframes.push_back(i);
  }
  return keyframes;
}

}  // namespace kftam
