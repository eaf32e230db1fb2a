#pragma once

// Ray-cast scenes of procedurally textured rectangles with exact depth.

#include <cstdint>
#include <vector>

#include "kftam/geometry.hpp"
#include "kftam/imaging.hpp"

namespace kftam {

/// Rectangle origin + a·u + b·v with |a| <= half_u, |b| <= half_v; u and v
/// are orthonormal. Visible from both sides.
struct TexturedPlane {
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  Eigen::Vector3d u = Eigen::Vector3d::UnitX();
  Eigen::Vector3d v = Eigen::Vector3d::UnitY();
  double half_u = 1.0;
  double half_v = 1.0;
};

/// Sum of random sinusoids over plane coordinates (meters), offset to a
/// mean of 0.5. Frequencies in cycles per meter.
struct TextureSpec {
  std::uint64_t seed = 1;
  int components = 16;
  double min_frequency = 1.5;
  double max_frequency = 12.0;
  double amplitude = 0.05;
};

struct SyntheticScene {
  std::vector<TexturedPlane> planes;
  TextureSpec texture;
  std::vector<Pose> poses;  ///< world-from-camera
  std::vector<double> timestamps;
  CameraIntrinsics intrinsics;
};

struct RenderSettings {
  /// Intensity averaged over supersample² sub-pixel rays (depth is always
  /// taken at the pixel centre).
  int supersample = 2;
  double noise_std = 0.0;
  std::uint64_t noise_seed = 0;
};

struct RenderedView {
  Image image;
  InverseDepthMap inv_depth;
};

/// Nearest hit along each pixel ray. Pixels that miss every plane are
/// black with invalid depth. Throws EmptyView when no pixel hits.
RenderedView render_scene(const SyntheticScene& scene, const Pose& pose, const RenderSettings& settings = {});

/// Intensity of `plane_index` at plane coordinates (a, b).
double texture_intensity(const TextureSpec& spec, std::size_t plane_index, double a, double b);

/// Fraction of the pixels with depth in view `from` whose 3D point projects
/// inside view `to` (occlusion ignored).
double view_overlap(const SyntheticScene& scene, const Pose& from, const Pose& to);

/// Throws InvalidArgument when a pose overlaps the first pose by less than
/// 50%, when timestamps and poses differ in count, or when the intrinsics
/// are invalid.
void validate_scene(const SyntheticScene& scene);

/// Square pixels with fx = fy = 0.8 width and the principal point at the
/// image centre.
CameraIntrinsics synthetic_intrinsics(int width, int height);

// ---------------------------------------------------------------------------
// Scene library. Each builder validates the result.

/// Fronto-parallel rectangle at `depth` m in front of the first pose.
SyntheticScene textured_plane_scene(const CameraIntrinsics& k, std::vector<Pose> poses, double depth,
                                    std::uint64_t seed);
/// Background plane at `far` m partly occluded by a square at `near` m.
SyntheticScene two_plane_scene(const CameraIntrinsics& k, std::vector<Pose> poses, double near, double far,
                               std::uint64_t seed);
/// Closed box (inward-looking walls) with the camera inside: half extents
/// in x, y, z.
SyntheticScene box_room_scene(const CameraIntrinsics& k, std::vector<Pose> poses, const Eigen::Vector3d& half_extent,
                              std::uint64_t seed);
/// Slanted, stepped surface spanning roughly 0.5 to 1.5 m: a wall, a tilted
/// floor and two boxes.
SyntheticScene desk_scene(const CameraIntrinsics& k, std::vector<Pose> poses, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Trajectories

/// Camera translating by `step` m per frame along +x, looking along +z.
std::vector<Pose> lateral_trajectory(int frames, double step);
/// Camera on a circle of `radius` around `center` in the xz-plane, looking
/// at the centre, advancing `step_deg` per frame.
std::vector<Pose> orbit_trajectory(int frames, double step_deg, double radius,
                                   const Eigen::Vector3d& center = Eigen::Vector3d(0, 0, 1));
/// Smooth hand-held-like motion: sinusoidal translation (amplitude
/// `translation_amp` m) and rotation (amplitude `rotation_amp_deg`) with
/// seeded phases and frequencies, starting at the identity.
std::vector<Pose> wobble_trajectory(int frames, double translation_amp, double rotation_amp_deg, std::uint64_t seed);
std::vector<double> uniform_timestamps(int frames, double rate_hz, double start = 0.0);

/// Noise injection for robustness sweeps. With ξ_k = log(P_0⁻¹ P_k), each
/// pose becomes P_0 exp(ξ_k + rel_std |ξ_k| z_k), z_k ~ N(0, I₆) drawn from
/// `seed` only, so every caller with the same seed gets the same z_k.
/// Throws InvalidArgument for rel_std < 0.
std::vector<Pose> perturb_poses(const std::vector<Pose>& poses, double rel_std, std::uint64_t seed);

}  // namespace kftam
