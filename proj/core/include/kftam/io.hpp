#pragma once

// Dataset and result files: PNG images, 16-bit depth PNGs, PFM float maps,
// camera files and TUM RGB-D style sequence directories.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "kftam/imaging.hpp"
#include "kftam/trajectory.hpp"

namespace kftam {

/// 8- or 16-bit gray/RGB(A) PNG; alpha is dropped, values scaled to [0,1].
/// Throws IoError.
Image read_png_image(const std::filesystem::path& path);
/// 8-bit gray or RGB PNG, values rounded to 1/255.
void write_png_image(const std::filesystem::path& path, const Image& image);

inline constexpr double kTumDepthScale = 5000.0;

/// 16-bit depth PNG, value = depth × scale; 0 marks a missing depth.
DepthMap read_depth_png(const std::filesystem::path& path, double scale = kTumDepthScale);
/// Depths are rounded and clamped to [1, 65535]; invalid pixels are 0.
void write_depth_png(const std::filesystem::path& path, const DepthMap& depth, double scale = kTumDepthScale);

/// Single-channel little-endian PFM ("Pf", scale −1). Invalid pixels are
/// written as NaN; on reading, NaN and non-positive values are invalid.
void write_pfm(const std::filesystem::path& path, const MaskedMap& map);
MaskedMap read_pfm(const std::filesystem::path& path);

/// camera.txt: one line "fx fy cx cy width height"; '#' lines are comments.
CameraIntrinsics read_camera_file(const std::filesystem::path& path);
void write_camera_file(const std::filesystem::path& path, const CameraIntrinsics& k);

/// Intrinsics assumed when a sequence has no camera.txt: the benchmark's
/// default 525/525/319.5/239.5 at 640x480, scaled to the image size.
CameraIntrinsics default_tum_intrinsics(int width, int height);

struct TumFrame {
  double timestamp = 0.0;
  std::filesystem::path rgb;
  std::optional<std::filesystem::path> depth;
  std::optional<Pose> ground_truth;

  Image load_image() const { return read_png_image(rgb); }
  /// Throws InvalidArgument when the frame has no depth.
  DepthMap load_depth() const;
};

struct TumSequence {
  std::filesystem::path root;
  CameraIntrinsics intrinsics;
  std::vector<TumFrame> frames;
  std::optional<Trajectory> ground_truth;
  /// Frames dropped because no depth lay within the association gap.
  std::size_t dropped = 0;
};

inline constexpr double kAssociationGap = 0.02;

/// Reads rgb.txt ("timestamp path" per line) and, when present, depth.txt,
/// groundtruth.txt and camera.txt. Each rgb entry takes the nearest depth
/// and ground-truth entries within 0.02 s; with a depth.txt, rgb entries
/// without a depth match are dropped and counted. Images are read lazily.
/// Throws MissingIndexFile and MalformedLine.
TumSequence load_tum_sequence(const std::filesystem::path& dir);

struct SequenceFrameData {
  double timestamp = 0.0;
  Image image;
  std::optional<DepthMap> depth;
};

/// Writes rgb/, depth/, rgb.txt, depth.txt (when any frame has depth),
/// groundtruth.txt (when given) and camera.txt. Index timestamps use 17
/// significant digits so they read back exactly.
void write_tum_sequence(const std::filesystem::path& dir, const std::vector<SequenceFrameData>& frames,
                        const CameraIntrinsics& k, const std::optional<Trajectory>& ground_truth = std::nullopt);

}  // namespace kftam
