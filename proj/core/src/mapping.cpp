#include "kftam/mapping.hpp"

#include <cmath>
#include <limits>

#include "kftam/errors.hpp"

namespace kftam {

MappingResult estimate_keyframe_depth(const ReferenceView& ref, std::span<const ViewFrame> frames,
                                      const MappingConfig& cfg) {
  if (cfg.nb_iterations < 0) raise(ErrorKind::kInvalidArgument, "negative narrow-band iteration count");
  const LabelSet labels = fixed_band_labels(cfg.d_min, cfg.d_max, cfg.labels);
  const CostVolume vol = normalize_by_observations(accumulate_cost_volume(ref, frames, labels, cfg.volume));
  const InverseDepthMap d = extract_depth(vol, cfg.extraction);

  const int w = d.width();
  const int h = d.height();
  std::vector<double> factor(static_cast<std::size_t>(w) * h, std::numeric_limits<double>::quiet_NaN());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (d.valid(x, y)) factor[static_cast<std::size_t>(y) * w + x] = (d.at(x, y) - cfg.d_min) / (cfg.d_max - cfg.d_min);

  MappingResult result;
  result.fixed_band = interp_factor_to_depth(factor, w, h, cfg.d_min, cfg.d_max);
  if (cfg.nb_iterations > 0) {
    result.narrow_band =
        narrow_band_refine(ref, frames, result.fixed_band, cfg.nb_iterations, cfg.narrow_band).iterations;
  }
  return result;
}

}  // namespace kftam
