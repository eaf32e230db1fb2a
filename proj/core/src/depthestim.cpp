#include "kftam/depthestim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kftam/errors.hpp"

namespace kftam {

std::string_view to_string(ExtractorKind kind) {
  switch (kind) {
    case ExtractorKind::kWta: return "wta";
    case ExtractorKind::kSoftArgmin: return "soft-argmin";
    case ExtractorKind::kSgmWta: return "sgm+wta";
  }
  return "wta";
}

ExtractorKind parse_extractor(std::string_view name) {
  if (name == "wta") return ExtractorKind::kWta;
  if (name == "soft-argmin" || name == "softargmin") return ExtractorKind::kSoftArgmin;
  if (name == "sgm+wta" || name == "sgm") return ExtractorKind::kSgmWta;
  raise(ErrorKind::kInvalidArgument, "unknown extractor '" + std::string(name) + "'");
}

void ExtractionConfig::validate() const {
  if (!(p1 >= 0.0) || !(p2 >= p1)) raise(ErrorKind::kInvalidArgument, "SGM penalties need 0 <= P1 <= P2");
  if (!(temperature > 0.0)) raise(ErrorKind::kInvalidArgument, "soft argmin temperature must be positive");
  if (directions != 1 && directions != 2 && directions != 4 && directions != 8 && directions != 16) {
    raise(ErrorKind::kInvalidArgument, "SGM direction count must be 1, 2, 4, 8 or 16");
  }
}

namespace {

constexpr std::array<std::array<int, 2>, 16> kDirections{{
    {1, 0}, {-1, 0}, {0, 1}, {0, -1},
    {1, 1}, {-1, -1}, {1, -1}, {-1, 1},
    {2, 1}, {-2, -1}, {1, 2}, {-1, -2}, {2, -1}, {-2, 1}, {1, -2}, {-1, 2},
}};

std::size_t argmin_first(std::span<const double> c) {
  std::size_t best = 0;
  for (std::size_t l = 1; l < c.size(); ++l)
    if (c[l] < c[best]) best = l;
  return best;
}

}  // namespace

std::span<const std::array<int, 2>> sgm_directions(int count) {
  return std::span<const std::array<int, 2>>(kDirections).first(static_cast<std::size_t>(std::clamp(count, 0, 16)));
}

InverseDepthMap winner_take_all(const CostVolume& vol) {
  InverseDepthMap out(vol.width(), vol.height());
  for (int y = 0; y < vol.height(); ++y) {
    for (int x = 0; x < vol.width(); ++x) {
      if (!vol.valid(x, y)) continue;
      out.set(x, y, vol.labels().value(x, y, static_cast<int>(argmin_first(vol.costs(x, y)))));
    }
  }
  return out;
}

InverseDepthMap winner_take_all_subpixel(const CostVolume& vol) {
  InverseDepthMap out(vol.width(), vol.height());
  const int n = vol.labels_count();
  const LabelSet& labels = vol.labels();
  for (int y = 0; y < vol.height(); ++y) {
    for (int x = 0; x < vol.width(); ++x) {
      if (!vol.valid(x, y)) continue;
      const auto c = vol.costs(x, y);
      const int l = static_cast<int>(argmin_first(c));
      double value = labels.value(x, y, l);
      if (l > 0 && l < n - 1) {
        const double cm = c[static_cast<std::size_t>(l - 1)];
        const double c0 = c[static_cast<std::size_t>(l)];
        const double cp = c[static_cast<std::size_t>(l + 1)];
        const double curvature = cm - 2.0 * c0 + cp;
        if (curvature > 0.0) {
          const double offset = std::clamp(0.5 * (cm - cp) / curvature, -0.5, 0.5);
          const double neighbour = offset >= 0.0 ? labels.value(x, y, l + 1) : labels.value(x, y, l - 1);
          value += std::abs(offset) * (neighbour - value);
        }
      }
      out.set(x, y, value);
    }
  }
  return out;
}

InverseDepthMap interp_factor_to_depth(std::span<const double> s, int width, int height, double d_min, double d_max) {
  if (s.size() != static_cast<std::size_t>(width) * height) {
    raise(ErrorKind::kInvalidArgument, "interpolation factor size mismatch");
  }
  InverseDepthMap out(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double f = s[static_cast<std::size_t>(y) * width + x];
      if (std::isnan(f)) continue;
      const double c = std::clamp(f, 0.0, 1.0);
      out.set(x, y, (1.0 - c) * d_min + c * d_max);
    }
  }
  return out;
}

namespace {

// Softmax of −c/T, stabilised by the minimum cost.
std::vector<double> softmax_neg(std::span<const double> costs, double temperature) {
  const double cmin = *std::min_element(costs.begin(), costs.end());
  std::vector<double> p(costs.size());
  double z = 0.0;
  for (std::size_t l = 0; l < costs.size(); ++l) {
    p[l] = std::exp(-(costs[l] - cmin) / temperature);
    z += p[l];
  }
  for (double& v : p) v /= z;
  return p;
}

}  // namespace

double soft_argmin(std::span<const double> costs, std::span<const double> labels, double temperature) {
  if (costs.size() != labels.size() || costs.empty()) raise(ErrorKind::kInvalidArgument, "soft argmin size mismatch");
  const auto p = softmax_neg(costs, temperature);
  double d = 0.0;
  for (std::size_t l = 0; l < p.size(); ++l) d += p[l] * labels[l];
  return std::clamp(d, *std::min_element(labels.begin(), labels.end()),
                    *std::max_element(labels.begin(), labels.end()));
}

std::vector<double> soft_argmin_gradient(std::span<const double> costs, std::span<const double> labels,
                                         double temperature) {
  const auto p = softmax_neg(costs, temperature);
  double d = 0.0;
  for (std::size_t l = 0; l < p.size(); ++l) d += p[l] * labels[l];
  std::vector<double> g(p.size());
  for (std::size_t l = 0; l < p.size(); ++l) g[l] = -p[l] * (labels[l] - d) / temperature;
  return g;
}

InverseDepthMap soft_argmin(const CostVolume& vol, double temperature) {
  if (!(temperature > 0.0)) raise(ErrorKind::kInvalidArgument, "temperature must be positive");
  InverseDepthMap out(vol.width(), vol.height());
  const int n = vol.labels_count();
  std::vector<double> labels(static_cast<std::size_t>(n));
  for (int y = 0; y < vol.height(); ++y) {
    for (int x = 0; x < vol.width(); ++x) {
      if (!vol.valid(x, y)) continue;
      for (int l = 0; l < n; ++l) labels[static_cast<std::size_t>(l)] = vol.labels().value(x, y, l);
      out.set(x, y, soft_argmin(vol.costs(x, y), labels, temperature));
    }
  }
  return out;
}

CostVolume normalize_by_observations(const CostVolume& vol) {
  CostVolume out = vol;
  for (int y = 0; y < vol.height(); ++y) {
    for (int x = 0; x < vol.width(); ++x) {
      const int obs = vol.observations(x, y);
      if (obs == 0) continue;
      for (int l = 0; l < vol.labels_count(); ++l) out.at(x, y, l) = vol.at(x, y, l) / obs;
    }
  }
  return out;
}

CostVolume sgm_aggregate(const CostVolume& vol, const ExtractionConfig& cfg) {
  cfg.validate();
  if (vol.labels().per_pixel()) raise(ErrorKind::kLabelMismatch, "SGM needs labels shared by all pixels");
  const int w = vol.width();
  const int h = vol.height();
  const int n = vol.labels_count();
  const std::size_t n_pix = static_cast<std::size_t>(w) * h;

  CostVolume out = vol;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int l = 0; l < n; ++l) out.at(x, y, l) = 0.0;

  auto data_cost = [&](int x, int y, int l) { return vol.observations(x, y) > 0 ? vol.at(x, y, l) : 0.0; };

  std::vector<double> path(n_pix * n);
  std::vector<double> path_min(n_pix);
  for (const auto& [dx, dy] : sgm_directions(cfg.directions)) {
    // Visit order guarantees x − r is finished before x.
    const bool rows_down = dy > 0 || (dy == 0);
    const bool cols_right = dx >= 0;
    for (int iy = 0; iy < h; ++iy) {
      const int y = rows_down ? iy : h - 1 - iy;
      for (int ix = 0; ix < w; ++ix) {
        const int x = cols_right ? ix : w - 1 - ix;
        const std::size_t p = static_cast<std::size_t>(y) * w + x;
        double* lp = &path[p * n];
        const int px = x - dx;
        const int py = y - dy;
        double best = std::numeric_limits<double>::infinity();
        if (px < 0 || py < 0 || px >= w || py >= h) {
          for (int l = 0; l < n; ++l) {
            lp[l] = data_cost(x, y, l);
            best = std::min(best, lp[l]);
          }
        } else {
          const std::size_t q = static_cast<std::size_t>(py) * w + px;
          const double* lq = &path[q * n];
          const double prev_min = path_min[q];
          for (int l = 0; l < n; ++l) {
            double m = lq[l];
            if (l > 0) m = std::min(m, lq[l - 1] + cfg.p1);
            if (l + 1 < n) m = std::min(m, lq[l + 1] + cfg.p1);
            m = std::min(m, prev_min + cfg.p2);
            lp[l] = data_cost(x, y, l) + m - prev_min;
            best = std::min(best, lp[l]);
          }
        }
        path_min[p] = best;
      }
    }
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (int l = 0; l < n; ++l) out.at(x, y, l) += path[(static_cast<std::size_t>(y) * w + x) * n + l];
  }
  return out;
}

InverseDepthMap median_filter3(const InverseDepthMap& map) {
  InverseDepthMap out(map.width(), map.height());
  std::vector<double> window;
  window.reserve(9);
  for (int y = 0; y < map.height(); ++y) {
    for (int x = 0; x < map.width(); ++x) {
      if (!map.valid(x, y)) continue;
      window.clear();
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int xx = x + dx;
          const int yy = y + dy;
          if (xx < 0 || yy < 0 || xx >= map.width() || yy >= map.height() || !map.valid(xx, yy)) continue;
          window.push_back(map.at(xx, yy));
        }
      }
      const auto mid = window.begin() + static_cast<std::ptrdiff_t>(window.size() / 2);
      std::nth_element(window.begin(), mid, window.end());
      double med = *mid;
      if (window.size() % 2 == 0) {
        const double lower = *std::max_element(window.begin(), mid);
        med = 0.5 * (med + lower);
      }
      out.set(x, y, med);
    }
  }
  return out;
}

InverseDepthMap extract_depth(const CostVolume& vol, const ExtractionConfig& cfg) {
  cfg.validate();
  InverseDepthMap d;
  switch (cfg.method) {
    case ExtractorKind::kWta:
      d = cfg.subpixel ? winner_take_all_subpixel(vol) : winner_take_all(vol);
      break;
    case ExtractorKind::kSoftArgmin:
      d = soft_argmin(vol, cfg.temperature);
      break;
    case ExtractorKind::kSgmWta: {
      const CostVolume agg = sgm_aggregate(vol, cfg);
      d = cfg.subpixel ? winner_take_all_subpixel(agg) : winner_take_all(agg);
      break;
    }
  }
  return cfg.median_filter ? median_filter3(d) : d;
}

NarrowBandResult narrow_band_refine(const ReferenceView& ref, std::span<const ViewFrame> frames,
                                    const InverseDepthMap& d_init, int iterations, const NarrowBandConfig& cfg) {
  if (iterations < 1) raise(ErrorKind::kInvalidArgument, "narrow band refinement needs at least one iteration");
  if (frames.empty()) raise(ErrorKind::kEmptyFrameList, "narrow band refinement needs frames");
  const int w = d_init.width();
  const int h = d_init.height();
  const double lo_span = (cfg.labels / 2) * cfg.sigma;
  const double hi_span = ((cfg.labels - 2) / 2) * cfg.sigma;

  NarrowBandResult result;
  result.estimate = d_init;
  result.frozen.assign(static_cast<std::size_t>(w) * h, 0);

  for (int it = 0; it < iterations; ++it) {
    const InverseDepthMap& prev = result.estimate;
    const LabelSet labels = narrow_band_labels(prev, cfg.sigma, cfg.labels);
    const CostVolume vol = accumulate_cost_volume(ref, frames, labels, cfg.volume);
    InverseDepthMap band;
    if (cfg.extractor) {
      band = cfg.extractor(vol);
    } else {
      band = cfg.subpixel ? winner_take_all_subpixel(vol) : winner_take_all(vol);
      if (cfg.median_filter) band = median_filter3(band);
    }

    InverseDepthMap next(w, h);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (!prev.valid(x, y)) continue;
        const std::size_t p = static_cast<std::size_t>(y) * w + x;
        const double d = prev.at(x, y);
        if (!vol.valid(x, y) || !band.valid(x, y)) {
          next.set(x, y, d);
          result.frozen[p] = 1;
          continue;
        }
        result.frozen[p] = 0;
        next.set(x, y, std::clamp(band.at(x, y), d * (1.0 - lo_span), d * (1.0 + hi_span)));
      }
    }
    result.estimate = std::move(next);
    result.iterations.push_back(result.estimate);
  }
  return result;
}

}  // namespace kftam
