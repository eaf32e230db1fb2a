#pragma once

#include <cstdint>
#include <vector>

#include "kftam/geometry.hpp"
#include "kftam/imaging.hpp"

namespace kftam {

struct Keyframe {
  Image image;
  InverseDepthMap inv_depth;
  Pose pose;  ///< world-from-keyframe
  CameraIntrinsics intrinsics;
  int id = 0;

  /// Throws InvalidKeyframe on mismatched sizes or a depth map without any
  /// valid pixel.
  void validate() const;
};

struct VirtualKeyframe {
  Image image;
  InverseDepthMap inv_depth;
  /// 1 where the pixel was filled by the hole-dilation pass rather than
  /// hit directly by a splatted point.
  std::vector<std::uint8_t> hole_filled;
};

struct RenderOptions {
  double z_tolerance = 1e-4;       ///< a point must be nearer by this much (m) to win the z-test
  int min_neighbors_to_fill = 5;   ///< of 8, for the single dilation pass
  double min_valid_fraction = 0.01;
};

/// Shows the keyframe content from `guess` (world-from-virtual-camera).
///
/// Depth: every valid keyframe pixel is splatted to its nearest virtual
/// pixel through a z-buffer (nearest surface wins), then one dilation pass
/// fills isolated holes with the mean of their valid neighbors. Intensity:
/// each valid virtual pixel is back-projected with its depth and the
/// keyframe image is sampled bilinearly there, falling back to the splatted
/// source pixel where that lookup leaves the keyframe. Throws DegenerateView
/// when fewer than 1% of the virtual pixels receive depth.
VirtualKeyframe render_virtual_keyframe(const Keyframe& kf, const Pose& guess,
                                        const RenderOptions& opts = {});

struct KeyframePolicy {
  double rotation_threshold_deg = 6.0;
  double translation_threshold_m = 0.15;
};

/// True iff the relative rotation exceeds the angular threshold or the
/// relative translation exceeds the distance threshold. Values within 1e-9
/// of a threshold count as not exceeding it.
bool should_switch_keyframe(const Pose& kf_pose, const Pose& cur_pose, const KeyframePolicy& policy = {});

/// Frame indices that become keyframes when the policy is run over a known
/// trajectory, starting with frame 0.
std::vector<std::size_t> simulate_keyframe_policy(const std::vector<Pose>& poses,
                                                  const KeyframePolicy& policy = {});

}  // namespace kftam
