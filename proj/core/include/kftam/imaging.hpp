#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "kftam/geometry.hpp"

namespace kftam {

/// Row-major floating image with 1 or 3 interleaved channels, values in [0,1].
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels = 1, double fill = 0.0);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  bool empty() const { return data_.empty(); }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }

  double at(int x, int y, int c = 0) const { return data_[index(x, y, c)]; }
  /// Stores `v` clamped to [0,1].
  void set(int x, int y, double v, int c = 0);

  std::span<const double> data() const { return data_; }

  /// Luminance 0.299 R + 0.587 G + 0.114 B; a copy for single-channel input.
  Image to_gray() const;

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 1;
  std::vector<double> data_;
};

/// Scalar map with a per-pixel validity mask. Valid values are finite and
/// strictly positive; setting anything else marks the pixel invalid.
class MaskedMap {
 public:
  MaskedMap() = default;
  MaskedMap(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t pixel_count() const { return values_.size(); }

  bool valid(int x, int y) const { return mask_[idx(x, y)] != 0; }
  double at(int x, int y) const { return values_[idx(x, y)]; }
  void set(int x, int y, double v);
  void invalidate(int x, int y);

  std::size_t valid_count() const;
  double valid_fraction() const;

  std::span<const double> values() const { return values_; }
  std::span<const std::uint8_t> mask() const { return mask_; }

  friend bool operator==(const MaskedMap&, const MaskedMap&) = default;

 protected:
  std::size_t idx(int x, int y) const { return static_cast<std::size_t>(y) * width_ + x; }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> values_;
  std::vector<std::uint8_t> mask_;
};

/// Inverse depth in 1/m.
class InverseDepthMap : public MaskedMap {
 public:
  using MaskedMap::MaskedMap;
  static InverseDepthMap constant(int width, int height, double inv_depth);
};

/// Metric depth in m. Only used at I/O and evaluation boundaries.
class DepthMap : public MaskedMap {
 public:
  using MaskedMap::MaskedMap;
};

DepthMap to_depth(const InverseDepthMap& inv);
InverseDepthMap to_inverse_depth(const DepthMap& depth);

/// Per-pixel displacement in pixels.
class FlowField {
 public:
  FlowField() = default;
  FlowField(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }

  bool valid(int x, int y) const { return mask_[idx(x, y)] != 0; }
  Eigen::Vector2d at(int x, int y) const { return {u_[idx(x, y)], v_[idx(x, y)]}; }
  /// Non-finite displacements mark the pixel invalid.
  void set(int x, int y, const Eigen::Vector2d& d);
  void invalidate(int x, int y);

 private:
  std::size_t idx(int x, int y) const { return static_cast<std::size_t>(y) * width_ + x; }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> u_;
  std::vector<double> v_;
  std::vector<std::uint8_t> mask_;
};

struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  /// Throws InvalidArgument unless fx, fy > 0 and (cx, cy) lies in the image.
  void validate() const;

  Eigen::Vector2d project(const Eigen::Vector3d& p) const {
    return {fx * p.x() / p.z() + cx, fy * p.y() / p.z() + cy};
  }
  /// Point at depth 1/inv_depth along the ray through pixel (u, v).
  Eigen::Vector3d backproject(double u, double v, double inv_depth) const {
    const double z = 1.0 / inv_depth;
    return {(u - cx) / fx * z, (v - cy) / fy * z, z};
  }

  /// Intrinsics of the 2x2 box-downsampled image.
  CameraIntrinsics halved() const;

  friend bool operator==(const CameraIntrinsics&, const CameraIntrinsics&) = default;
};

/// Points closer than this in front of the camera are treated as behind it.
inline constexpr double kMinDepth = 1e-6;

// ---------------------------------------------------------------------------
// Pyramids

/// Level 0 is the input; level k is the 2x2 box average of level k-1.
/// Throws IndivisibleResolution unless both sides divide by 2^(levels-1).
std::vector<Image> build_pyramid(const Image& img, int levels = 3);

/// 2x2 average over the valid pixels of each block; a block with no valid
/// pixel is invalid.
InverseDepthMap downsample(const InverseDepthMap& map);
std::vector<InverseDepthMap> build_pyramid(const InverseDepthMap& map, int levels = 3);
std::vector<CameraIntrinsics> build_pyramid(const CameraIntrinsics& k, int levels = 3);

// ---------------------------------------------------------------------------
// Sampling and warping

struct Sample {
  double value = 0.0;
  bool in_bounds = false;
};

struct SampleWithGradient {
  double value = 0.0;
  double dx = 0.0;
  double dy = 0.0;
  bool in_bounds = false;
};

/// Bilinear interpolation. In bounds iff 0 <= x <= w-1 and 0 <= y <= h-1,
/// after snapping coordinates within 1e-9 outside a border onto it; images
/// narrower or shorter than 2 pixels are never in bounds.
Sample bilinear_sample(const Image& img, double x, double y, int channel = 0);
/// Value plus the exact partial derivatives of the bilinear interpolant.
SampleWithGradient bilinear_sample_gradient(const Image& img, double x, double y, int channel = 0);

struct WarpResult {
  Image image;
  std::vector<std::uint8_t> mask;
};

/// For each reference pixel: back-project at z = 1/d, map into the source
/// camera by `src_from_ref`, project and sample `src`. The mask is false
/// where the depth is invalid, the point lands behind the camera or the
/// projection leaves the source image.
WarpResult warp_image(const Image& src, const Pose& src_from_ref, const InverseDepthMap& inv_depth,
                      const CameraIntrinsics& k);
WarpResult warp_image(const Image& src, const Pose& src_from_ref, double inv_depth,
                      const CameraIntrinsics& k);

/// Displacement (projected position − pixel position) under the same
/// geometry and validity rule as warp_image.
FlowField flow_from_depth(const InverseDepthMap& inv_depth, const Pose& src_from_ref,
                          const CameraIntrinsics& k);

}  // namespace kftam
