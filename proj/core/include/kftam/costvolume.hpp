#pragma once

// Plane-sweep photoconsistency volumes over inverse-depth labels.

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "kftam/geometry.hpp"
#include "kftam/imaging.hpp"
#include "kftam/keyframe.hpp"

namespace kftam {

enum class BandKind { kFixed, kNarrow };

/// Inverse-depth labels shared by all pixels (fixed band) or centred on a
/// per-pixel previous estimate (narrow band).
class LabelSet {
 public:
  BandKind kind() const { return kind_; }
  int size() const { return count_; }
  bool per_pixel() const { return kind_ == BandKind::kNarrow; }

  double d_min() const { return d_min_; }
  double d_max() const { return d_max_; }
  double sigma() const { return sigma_; }
  std::span<const double> fixed_labels() const { return fixed_; }
  /// Band centre map; empty for a fixed band.
  const InverseDepthMap& centre() const { return centre_; }

  /// Label `l` (0-based) at pixel (x, y).
  double value(int x, int y, int l) const {
    if (kind_ == BandKind::kFixed) return fixed_[static_cast<std::size_t>(l)];
    return centre_.at(x, y) * (1.0 + (l - count_ / 2) * sigma_);
  }
  /// Fixed bands are valid everywhere; narrow bands only where the centre
  /// is valid and every label is positive.
  bool valid(int x, int y) const {
    return kind_ == BandKind::kFixed || band_mask_[static_cast<std::size_t>(y) * centre_.width() + x] != 0;
  }

  /// Inverse-depth map holding label `l` at every valid pixel.
  InverseDepthMap label_map(int l, int width, int height) const;

  friend LabelSet fixed_band_labels(double d_min, double d_max, int n);
  friend LabelSet narrow_band_labels(const InverseDepthMap& prev, double sigma_nb, int n);

 private:
  BandKind kind_ = BandKind::kFixed;
  int count_ = 0;
  double d_min_ = 0.0;
  double d_max_ = 0.0;
  double sigma_ = 0.0;
  std::vector<double> fixed_;
  InverseDepthMap centre_;
  std::vector<std::uint8_t> band_mask_;
};

/// b_i = d_min + i (d_max − d_min)/(N − 1), endpoints exact.
/// Throws InvalidRange unless 0 < d_min < d_max and N >= 2.
LabelSet fixed_band_labels(double d_min, double d_max, int n);

/// b_i = d_prev (1 + i σ) for i = −N/2 .. (N−2)/2; label index l = i + N/2.
/// Throws InvalidArgument for σ <= 0 or N < 2.
LabelSet narrow_band_labels(const InverseDepthMap& prev, double sigma_nb = 0.0125, int n = 32);

class CostVolume {
 public:
  CostVolume() = default;
  CostVolume(int width, int height, LabelSet labels);

  int width() const { return width_; }
  int height() const { return height_; }
  int labels_count() const { return labels_.size(); }
  const LabelSet& labels() const { return labels_; }

  double at(int x, int y, int l) const { return cost_[index(x, y, l)]; }
  double& at(int x, int y, int l) { return cost_[index(x, y, l)]; }
  std::span<const double> costs(int x, int y) const {
    return std::span<const double>(cost_).subspan(index(x, y, 0), static_cast<std::size_t>(labels_.size()));
  }

  int observations(int x, int y) const { return observations_[pixel(x, y)]; }
  int& observations(int x, int y) { return observations_[pixel(x, y)]; }

  bool valid(int x, int y) const { return observations(x, y) > 0 && labels_.valid(x, y); }

 private:
  std::size_t pixel(int x, int y) const { return static_cast<std::size_t>(y) * width_ + x; }
  std::size_t index(int x, int y, int l) const { return pixel(x, y) * labels_.size() + l; }

  int width_ = 0;
  int height_ = 0;
  LabelSet labels_;
  std::vector<double> cost_;
  std::vector<int> observations_;
};

/// Mean |ref − warped| over the 3x3 patch centred at (x, y). Patch
/// coordinates clamp to the image edge; only pixels set in `mask` count.
/// Empty when fewer than 5 of the 9 patch entries are valid.
std::optional<double> sad_patch_cost(const Image& ref, const Image& warped, std::span<const std::uint8_t> mask,
                                     int x, int y);

/// 1 − 1/(N−1) Σ_{d≠d*} exp(−α (ρ(d) − ρ(d*))²) with d* the first argmin.
double confidence_weight(std::span<const double> costs, double alpha_conf);

struct ViewFrame {
  Image image;
  Pose pose;  ///< world-from-camera
};

struct ReferenceView {
  const Image& image;
  const Pose& pose;
  const CameraIntrinsics& intrinsics;
};

struct CostVolumeOptions {
  double alpha_conf = 50.0;
  /// Use every `stride`-th frame of the list.
  int frame_stride = 1;
};

/// C(x, d) = Σ_i ρ_i(x, d) w_i(x). A frame contributes at a pixel only when
/// its warp and patch cost are valid for every label there; the per-pixel
/// observation count records how many did. Throws EmptyFrameList.
CostVolume accumulate_cost_volume(const ReferenceView& ref, std::span<const ViewFrame> frames,
                                  const LabelSet& labels, const CostVolumeOptions& opts = {});
CostVolume accumulate_cost_volume(const Keyframe& kf, std::span<const ViewFrame> frames, const LabelSet& labels,
                                  const CostVolumeOptions& opts = {});

/// Debug dump: a text header
///
///   KFTAMVOL 1
///   <width> <height> <labels> fixed <d_min> <d_max>      (or: narrow <sigma>)
///
/// followed by width*height*labels little-endian float32 costs in
/// row-major pixel order with labels innermost (NaN where the pixel is
/// invalid), then width*height little-endian int32 observation counts.
void write_cost_volume(const std::filesystem::path& path, const CostVolume& vol);

}  // namespace kftam
