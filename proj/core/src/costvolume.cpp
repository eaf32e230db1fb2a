#include "kftam/costvolume.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "kftam/errors.hpp"
#include "kftam/text.hpp"

namespace kftam {

LabelSet fixed_band_labels(double d_min, double d_max, int n) {
  if (!(d_min > 0.0) || !(d_max > d_min) || n < 2) {
    raise(ErrorKind::kInvalidRange, "fixed band needs 0 < d_min < d_max and N >= 2");
  }
  LabelSet s;
  s.kind_ = BandKind::kFixed;
  s.count_ = n;
  s.d_min_ = d_min;
  s.d_max_ = d_max;
  s.fixed_.resize(static_cast<std::size_t>(n));
  const double step = (d_max - d_min) / (n - 1);
  for (int i = 0; i < n; ++i) s.fixed_[static_cast<std::size_t>(i)] = d_min + i * step;
  s.fixed_.back() = d_max;
  return s;
}

LabelSet narrow_band_labels(const InverseDepthMap& prev, double sigma_nb, int n) {
  if (!(sigma_nb > 0.0) || n < 2) raise(ErrorKind::kInvalidArgument, "narrow band needs sigma > 0 and N >= 2");
  LabelSet s;
  s.kind_ = BandKind::kNarrow;
  s.count_ = n;
  s.sigma_ = sigma_nb;
  s.centre_ = prev;
  s.band_mask_.assign(prev.pixel_count(), 0);
  for (int y = 0; y < prev.height(); ++y) {
    for (int x = 0; x < prev.width(); ++x) {
      if (!prev.valid(x, y)) continue;
      // Lowest label is the smallest: d_prev (1 − (N/2) σ).
      if (s.value(x, y, 0) > 0.0) s.band_mask_[static_cast<std::size_t>(y) * prev.width() + x] = 1;
    }
  }
  if (!prev.values().empty()) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (int y = 0; y < prev.height(); ++y) {
      for (int x = 0; x < prev.width(); ++x) {
        if (!s.valid(x, y)) continue;
        lo = std::min(lo, s.value(x, y, 0));
        hi = std::max(hi, s.value(x, y, n - 1));
      }
    }
    s.d_min_ = std::isfinite(lo) ? lo : 0.0;
    s.d_max_ = hi;
  }
  return s;
}

InverseDepthMap LabelSet::label_map(int l, int width, int height) const {
  InverseDepthMap m(width, height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      if (valid(x, y)) m.set(x, y, value(x, y, l));
  return m;
}

CostVolume::CostVolume(int width, int height, LabelSet labels)
    : width_(width),
      height_(height),
      labels_(std::move(labels)),
      cost_(static_cast<std::size_t>(width) * height * labels_.size(), 0.0),
      observations_(static_cast<std::size_t>(width) * height, 0) {
  if (labels_.per_pixel() && (labels_.centre().width() != width || labels_.centre().height() != height)) {
    raise(ErrorKind::kLabelMismatch, "narrow band centre does not match the volume size");
  }
}

std::optional<double> sad_patch_cost(const Image& ref, const Image& warped, std::span<const std::uint8_t> mask,
                                     int x, int y) {
  const int w = ref.width();
  const int h = ref.height();
  double sum = 0.0;
  int valid = 0;
  for (int dy = -1; dy <= 1; ++dy) {
    const int yy = std::clamp(y + dy, 0, h - 1);
    for (int dx = -1; dx <= 1; ++dx) {
      const int xx = std::clamp(x + dx, 0, w - 1);
      if (!mask[static_cast<std::size_t>(yy) * w + xx]) continue;
      sum += std::abs(ref.at(xx, yy) - warped.at(xx, yy));
      ++valid;
    }
  }
  if (valid < 5) return std::nullopt;
  return sum / valid;
}

double confidence_weight(std::span<const double> costs, double alpha_conf) {
  const std::size_t n = costs.size();
  if (n < 2) raise(ErrorKind::kInvalidArgument, "confidence weight needs at least two labels");
  std::size_t best = 0;
  for (std::size_t d = 1; d < n; ++d)
    if (costs[d] < costs[best]) best = d;
  double sum = 0.0;
  for (std::size_t d = 0; d < n; ++d) {
    if (d == best) continue;
    const double diff = costs[d] - costs[best];
    sum += std::exp(-alpha_conf * diff * diff);
  }
  return 1.0 - sum / static_cast<double>(n - 1);
}

CostVolume accumulate_cost_volume(const ReferenceView& ref, std::span<const ViewFrame> frames,
                                  const LabelSet& labels, const CostVolumeOptions& opts) {
  if (frames.empty()) raise(ErrorKind::kEmptyFrameList, "cost volume needs at least one frame");
  if (opts.frame_stride < 1) raise(ErrorKind::kInvalidArgument, "frame stride must be >= 1");
  const CameraIntrinsics& k = ref.intrinsics;
  const int w = k.width;
  const int h = k.height;
  const int n_labels = labels.size();
  const std::size_t n_pix = static_cast<std::size_t>(w) * h;
  const Image ref_gray = ref.image.to_gray();

  std::vector<InverseDepthMap> label_maps;
  if (labels.per_pixel()) {
    for (int l = 0; l < n_labels; ++l) label_maps.push_back(labels.label_map(l, w, h));
  }

  CostVolume vol(w, h, labels);
  constexpr double kInvalid = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> rho(n_pix * n_labels);

  for (std::size_t f = 0; f < frames.size(); f += static_cast<std::size_t>(opts.frame_stride)) {
    const Image src_gray = frames[f].image.to_gray();
    const Pose src_from_ref = frames[f].pose.inverse() * ref.pose;
    for (int l = 0; l < n_labels; ++l) {
      const WarpResult warped = labels.per_pixel()
                                    ? warp_image(src_gray, src_from_ref, label_maps[static_cast<std::size_t>(l)], k)
                                    : warp_image(src_gray, src_from_ref, labels.value(0, 0, l), k);
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const std::size_t p = static_cast<std::size_t>(y) * w + x;
          double c = kInvalid;
          if (warped.mask[p] && labels.valid(x, y)) {
            if (auto s = sad_patch_cost(ref_gray, warped.image, warped.mask, x, y)) c = *s;
          }
          rho[p * n_labels + l] = c;
        }
      }
    }
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t p = static_cast<std::size_t>(y) * w + x;
        const std::span<const double> curve(rho.data() + p * n_labels, static_cast<std::size_t>(n_labels));
        bool complete = true;
        for (double c : curve) complete = complete && !std::isnan(c);
        if (!complete) continue;
        const double weight = confidence_weight(curve, opts.alpha_conf);
        for (int l = 0; l < n_labels; ++l) vol.at(x, y, l) += curve[static_cast<std::size_t>(l)] * weight;
        ++vol.observations(x, y);
      }
    }
  }
  return vol;
}

CostVolume accumulate_cost_volume(const Keyframe& kf, std::span<const ViewFrame> frames, const LabelSet& labels,
                                  const CostVolumeOptions& opts) {
  return accumulate_cost_volume(ReferenceView{kf.image, kf.pose, kf.intrinsics}, frames, labels, opts);
}

namespace {

template <typename T>
void write_le(std::ofstream& out, T v) {
  static_assert(sizeof(T) == 4);
  auto bits = std::bit_cast<std::uint32_t>(v);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
  char b[4];
  std::memcpy(b, &bits, 4);
  out.write(b, 4);
}

}  // namespace

void write_cost_volume(const std::filesystem::path& path, const CostVolume& vol) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorKind::kIoError, "cannot write " + path.string());
  const LabelSet& labels = vol.labels();
  out << "KFTAMVOL 1\n" << vol.width() << ' ' << vol.height() << ' ' << labels.size() << ' ';
  if (labels.per_pixel()) {
    out << "narrow " << format_double(labels.sigma()) << '\n';
  } else {
    out << "fixed " << format_double(labels.d_min()) << ' ' << format_double(labels.d_max()) << '\n';
  }
  for (int y = 0; y < vol.height(); ++y)
    for (int x = 0; x < vol.width(); ++x)
      for (int l = 0; l < labels.size(); ++l)
        write_le(out, vol.valid(x, y) ? static_cast<float>(vol.at(x, y, l)) : std::numeric_limits<float>::quiet_NaN());
  for (int y = 0; y < vol.height(); ++y)
    for (int x = 0; x < vol.width(); ++x) write_le(out, static_cast<std::int32_t>(vol.observations(x, y)));
}

}  // namespace kftam
