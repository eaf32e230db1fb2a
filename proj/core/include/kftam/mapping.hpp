#pragma once

// Keyframe depth estimation: fixed-band sweep followed by optional
// narrow-band refinement.

#include <span>
#include <vector>

#include "kftam/costvolume.hpp"
#include "kftam/depthestim.hpp"

namespace kftam {

struct MappingConfig {
  double d_min = 0.01;
  double d_max = 2.5;
  int labels = 32;
  /// Window size including the reference frame.
  int frames = 10;
  CostVolumeOptions volume;
  ExtractionConfig extraction;
  int nb_iterations = 0;
  NarrowBandConfig narrow_band;
};

struct MappingResult {
  InverseDepthMap fixed_band;
  /// Estimate after each narrow-band iteration; empty when nb_iterations == 0.
  std::vector<InverseDepthMap> narrow_band;

  const InverseDepthMap& final_estimate() const { return narrow_band.empty() ? fixed_band : narrow_band.back(); }
};

/// Fixed-band volume over `frames` (costs normalised by observation count),
/// the configured extractor, conversion through the interpolation factor
/// s = (D − d_min)/(d_max − d_min), then nb_iterations of narrow-band
/// refinement.
MappingResult estimate_keyframe_depth(const ReferenceView& ref, std::span<const ViewFrame> frames,
                                      const MappingConfig& cfg);

}  // namespace kftam
