#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "kftam/costvolume.hpp"

namespace kftam {

enum class ExtractorKind { kWta, kSoftArgmin, kSgmWta };

std::string_view to_string(ExtractorKind kind);
/// Accepts "wta", "soft-argmin", "sgm+wta" (also "sgm").
ExtractorKind parse_extractor(std::string_view name);

struct ExtractionConfig {
  ExtractorKind method = ExtractorKind::kWta;
  double p1 = 0.1;
  double p2 = 0.5;
  /// 1, 2, 4, 8 or 16 directions; see sgm_directions().
  int directions = 16;
  double temperature = 1.0;
  /// Parabolic sub-label refinement around the WTA minimum.
  bool subpixel = false;
  bool median_filter = false;

  /// Throws InvalidArgument unless 0 <= P1 <= P2, temperature > 0 and the
  /// direction count is supported.
  void validate() const;
};

/// Scan directions in the order they are enabled by `count`:
/// (1,0) (-1,0) (0,1) (0,-1) (1,1) (-1,-1) (1,-1) (-1,1), then the eight
/// knight moves (2,1) (-2,-1) (1,2) (-1,-2) (2,-1) (-2,1) (1,-2) (-1,2).
std::span<const std::array<int, 2>> sgm_directions(int count);

/// Per-pixel label with minimal cost, ties to the lowest index. Pixels
/// without observations are invalid.
InverseDepthMap winner_take_all(const CostVolume& vol);

/// WTA followed by a parabola fit through the neighbouring label costs
/// (offset clamped to half a label, skipped at the band ends).
InverseDepthMap winner_take_all_subpixel(const CostVolume& vol);

/// (1 − s) d_min + s d_max per pixel, with s clamped to [0, 1].
InverseDepthMap interp_factor_to_depth(std::span<const double> s, int width, int height, double d_min, double d_max);

/// Σ_l b_l softmax(−c/T)_l for one pixel.
double soft_argmin(std::span<const double> costs, std::span<const double> labels, double temperature = 1.0);
/// ∂/∂c_l of soft_argmin: −(1/T) p_l (b_l − D).
std::vector<double> soft_argmin_gradient(std::span<const double> costs, std::span<const double> labels,
                                         double temperature = 1.0);
InverseDepthMap soft_argmin(const CostVolume& vol, double temperature = 1.0);

/// Costs divided by the pixel's observation count (unobserved pixels keep 0).
CostVolume normalize_by_observations(const CostVolume& vol);

/// Semi-global aggregation summed over cfg.directions scan directions.
/// Unobserved pixels enter with zero cost. Throws LabelMismatch for
/// narrow-band (per-pixel) labels.
CostVolume sgm_aggregate(const CostVolume& vol, const ExtractionConfig& cfg);

/// Median of the valid pixels in each 3x3 window; invalid pixels stay
/// invalid.
InverseDepthMap median_filter3(const InverseDepthMap& map);

/// Depth from a volume with the configured extractor (plus the optional
/// median pass).
InverseDepthMap extract_depth(const CostVolume& vol, const ExtractionConfig& cfg);

/// Replaces the band WTA + median stage when set.
using BandExtractor = std::function<InverseDepthMap(const CostVolume&)>;

struct NarrowBandConfig {
  double sigma = 0.0125;
  int labels = 32;
  CostVolumeOptions volume;
  bool subpixel = true;
  bool median_filter = true;
  BandExtractor extractor;
};

struct NarrowBandResult {
  InverseDepthMap estimate;
  std::vector<InverseDepthMap> iterations;  ///< estimate after each iteration
  /// 1 where the band collapsed or had no observation, so the previous
  /// value was carried over.
  std::vector<std::uint8_t> frozen;
};

/// Repeats: narrow band around the current estimate → volume → band WTA →
/// 3x3 median. Each iteration moves a pixel by at most the band half-width
/// (N/2) σ d. Throws InvalidArgument for iterations < 1 and propagates
/// EmptyFrameList.
NarrowBandResult narrow_band_refine(const ReferenceView& ref, std::span<const ViewFrame> frames,
                                    const InverseDepthMap& d_init, int iterations, const NarrowBandConfig& cfg = {});

}  // namespace kftam
