#include "kftam/imaging.hpp"

#include <algorithm>
#include <cmath>

#include "kftam/errors.hpp"

namespace kftam {

Image::Image(int width, int height, int channels, double fill)
    : width_(width), height_(height), channels_(channels) {
  if (width < 0 || height < 0 || (channels != 1 && channels != 3)) {
    raise(ErrorKind::kInvalidArgument, "bad image shape");
  }
  data_.assign(static_cast<std::size_t>(width) * height * channels, std::clamp(fill, 0.0, 1.0));
}

void Image::set(int x, int y, double v, int c) {
  data_[index(x, y, c)] = std::isfinite(v) ? std::clamp(v, 0.0, 1.0) : 0.0;
}

Image Image::to_gray() const {
  if (channels_ == 1) return *this;
  Image out(width_, height_, 1);
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      out.set(x, y, 0.299 * at(x, y, 0) + 0.587 * at(x, y, 1) + 0.114 * at(x, y, 2));
    }
  }
  return out;
}

MaskedMap::MaskedMap(int width, int height)
    : width_(width),
      height_(height),
      values_(static_cast<std::size_t>(width) * height, 0.0),
      mask_(static_cast<std::size_t>(width) * height, 0) {
  if (width < 0 || height < 0) raise(ErrorKind::kInvalidArgument, "bad map shape");
}

void MaskedMap::set(int x, int y, double v) {
  const std::size_t i = idx(x, y);
  if (std::isfinite(v) && v > 0.0) {
    values_[i] = v;
    mask_[i] = 1;
  } else {
    values_[i] = 0.0;
    mask_[i] = 0;
  }
}

void MaskedMap::invalidate(int x, int y) {
  values_[idx(x, y)] = 0.0;
  mask_[idx(x, y)] = 0;
}

std::size_t MaskedMap::valid_count() const {
  return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), std::uint8_t{1}));
}

double MaskedMap::valid_fraction() const {
  return mask_.empty() ? 0.0 : static_cast<double>(valid_count()) / static_cast<double>(mask_.size());
}

InverseDepthMap InverseDepthMap::constant(int width, int height, double inv_depth) {
  InverseDepthMap m(width, height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) m.set(x, y, inv_depth);
  return m;
}

DepthMap to_depth(const InverseDepthMap& inv) {
  DepthMap out(inv.width(), inv.height());
  for (int y = 0; y < inv.height(); ++y)
    for (int x = 0; x < inv.width(); ++x)
      if (inv.valid(x, y)) out.set(x, y, 1.0 / inv.at(x, y));
  return out;
}

InverseDepthMap to_inverse_depth(const DepthMap& depth) {
  InverseDepthMap out(depth.width(), depth.height());
  for (int y = 0; y < depth.height(); ++y)
    for (int x = 0; x < depth.width(); ++x)
      if (depth.valid(x, y)) out.set(x, y, 1.0 / depth.at(x, y));
  return out;
}

FlowField::FlowField(int width, int height)
    : width_(width),
      height_(height),
      u_(static_cast<std::size_t>(width) * height, 0.0),
      v_(static_cast<std::size_t>(width) * height, 0.0),
      mask_(static_cast<std::size_t>(width) * height, 0) {}

void FlowField::set(int x, int y, const Eigen::Vector2d& d) {
  const std::size_t i = idx(x, y);
  if (d.allFinite()) {
    u_[i] = d.x();
    v_[i] = d.y();
    mask_[i] = 1;
  } else {
    invalidate(x, y);
  }
}

void FlowField::invalidate(int x, int y) {
  const std::size_t i = idx(x, y);
  u_[i] = v_[i] = 0.0;
  mask_[i] = 0;
}

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) raise(ErrorKind::kInvalidArgument, "focal lengths must be positive");
  if (width <= 0 || height <= 0) raise(ErrorKind::kInvalidArgument, "image size must be positive");
  if (cx < 0.0 || cx > width - 1 || cy < 0.0 || cy > height - 1) {
    raise(ErrorKind::kInvalidArgument, "principal point outside the image");
  }
}

CameraIntrinsics CameraIntrinsics::halved() const {
  return CameraIntrinsics{0.5 * fx, 0.5 * fy, (cx + 0.5) * 0.5 - 0.5, (cy + 0.5) * 0.5 - 0.5,
                          width / 2, height / 2};
}

namespace {

void check_divisible(int width, int height, int levels) {
  if (levels < 1) raise(ErrorKind::kInvalidArgument, "pyramid needs at least one level");
  const int f = 1 << (levels - 1);
  if (width % f != 0 || height % f != 0) {
    raise(ErrorKind::kIndivisibleResolution,
          std::to_string(width) + "x" + std::to_string(height) + " not divisible by " + std::to_string(f));
  }
}

Image box_downsample(const Image& img) {
  Image out(img.width() / 2, img.height() / 2, img.channels());
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      for (int c = 0; c < img.channels(); ++c) {
        const double s = img.at(2 * x, 2 * y, c) + img.at(2 * x + 1, 2 * y, c) +
                         img.at(2 * x, 2 * y + 1, c) + img.at(2 * x + 1, 2 * y + 1, c);
        out.set(x, y, 0.25 * s, c);
      }
    }
  }
  return out;
}

}  // namespace

std::vector<Image> build_pyramid(const Image& img, int levels) {
  check_divisible(img.width(), img.height(), levels);
  std::vector<Image> out{img};
  for (int l = 1; l < levels; ++l) out.push_back(box_downsample(out.back()));
  return out;
}

InverseDepthMap downsample(const InverseDepthMap& map) {
  InverseDepthMap out(map.width() / 2, map.height() / 2);
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      double sum = 0.0;
      int n = 0;
      for (int dy = 0; dy < 2; ++dy) {
        for (int dx = 0; dx < 2; ++dx) {
          if (map.valid(2 * x + dx, 2 * y + dy)) {
            sum += map.at(2 * x + dx, 2 * y + dy);
            ++n;
          }
        }
      }
      if (n > 0) out.set(x, y, sum / n);
    }
  }
  return out;
}

std::vector<InverseDepthMap> build_pyramid(const InverseDepthMap& map, int levels) {
  check_divisible(map.width(), map.height(), levels);
  std::vector<InverseDepthMap> out{map};
  for (int l = 1; l < levels; ++l) out.push_back(downsample(out.back()));
  return out;
}

std::vector<CameraIntrinsics> build_pyramid(const CameraIntrinsics& k, int levels) {
  check_divisible(k.width, k.height, levels);
  std::vector<CameraIntrinsics> out{k};
  for (int l = 1; l < levels; ++l) out.push_back(out.back().halved());
  return out;
}

namespace {

// Cell origin and fractional offsets for a bilinear lookup. The last row and
// column use the preceding cell with weight 1 so integer coordinates on the
// border stay in bounds.
struct Cell {
  int x0, y0;
  double fx, fy;
};

// Projection round-off can put an exact border pixel a hair outside.
constexpr double kBorderSnap = 1e-9;

double snap_to_range(double v, double hi) {
  if (v < 0.0 && v > -kBorderSnap) return 0.0;
  if (v > hi && v < hi + kBorderSnap) return hi;
  return v;
}

bool locate(int width, int height, double x, double y, Cell& cell) {
  x = snap_to_range(x, width - 1);
  y = snap_to_range(y, height - 1);
  if (!(x >= 0.0 && y >= 0.0 && x <= width - 1 && y <= height - 1)) return false;
  int x0 = static_cast<int>(x);
  int y0 = static_cast<int>(y);
  if (x0 >= width - 1) x0 = std::max(width - 2, 0);
  if (y0 >= height - 1) y0 = std::max(height - 2, 0);
  cell = {x0, y0, x - x0, y - y0};
  return width >= 2 && height >= 2;
}

}  // namespace

Sample bilinear_sample(const Image& img, double x, double y, int channel) {
  Cell c;
  if (!locate(img.width(), img.height(), x, y, c)) return {};
  const double v00 = img.at(c.x0, c.y0, channel);
  const double v10 = img.at(c.x0 + 1, c.y0, channel);
  const double v01 = img.at(c.x0, c.y0 + 1, channel);
  const double v11 = img.at(c.x0 + 1, c.y0 + 1, channel);
  const double top = v00 + c.fx * (v10 - v00);
  const double bottom = v01 + c.fx * (v11 - v01);
  return {top + c.fy * (bottom - top), true};
}

SampleWithGradient bilinear_sample_gradient(const Image& img, double x, double y, int channel) {
  Cell c;
  if (!locate(img.width(), img.height(), x, y, c)) return {};
  const double v00 = img.at(c.x0, c.y0, channel);
  const double v10 = img.at(c.x0 + 1, c.y0, channel);
  const double v01 = img.at(c.x0, c.y0 + 1, channel);
  const double v11 = img.at(c.x0 + 1, c.y0 + 1, channel);
  const double top = v00 + c.fx * (v10 - v00);
  const double bottom = v01 + c.fx * (v11 - v01);
  SampleWithGradient s;
  s.value = top + c.fy * (bottom - top);
  s.dx = (1.0 - c.fy) * (v10 - v00) + c.fy * (v11 - v01);
  s.dy = bottom - top;
  s.in_bounds = true;
  return s;
}

namespace {

template <typename DepthAt>
WarpResult warp_impl(const Image& src, const Pose& src_from_ref, const CameraIntrinsics& k,
                     DepthAt depth_at) {
  const int w = k.width;
  const int h = k.height;
  WarpResult out{Image(w, h, src.channels()), std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h, 0)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double d = depth_at(x, y);
      if (!(d > 0.0)) continue;
      const Eigen::Vector3d p = src_from_ref * k.backproject(x, y, d);
      if (p.z() <= kMinDepth) continue;
      const Eigen::Vector2d uv = k.project(p);
      bool ok = true;
      for (int c = 0; c < src.channels() && ok; ++c) {
        const Sample s = bilinear_sample(src, uv.x(), uv.y(), c);
        ok = s.in_bounds;
        if (ok) out.image.set(x, y, s.value, c);
      }
      if (ok) out.mask[static_cast<std::size_t>(y) * w + x] = 1;
    }
  }
  return out;
}

}  // namespace

WarpResult warp_image(const Image& src, const Pose& src_from_ref, const InverseDepthMap& inv_depth,
                      const CameraIntrinsics& k) {
  if (inv_depth.width() != k.width || inv_depth.height() != k.height) {
    raise(ErrorKind::kInvalidArgument, "depth map does not match intrinsics");
  }
  return warp_impl(src, src_from_ref, k,
                   [&](int x, int y) { return inv_depth.valid(x, y) ? inv_depth.at(x, y) : 0.0; });
}

WarpResult warp_image(const Image& src, const Pose& src_from_ref, double inv_depth,
                      const CameraIntrinsics& k) {
  return warp_impl(src, src_from_ref, k, [=](int, int) { return inv_depth; });
}

FlowField flow_from_depth(const InverseDepthMap& inv_depth, const Pose& src_from_ref,
                          const CameraIntrinsics& k) {
  FlowField out(k.width, k.height);
  for (int y = 0; y < k.height; ++y) {
    for (int x = 0; x < k.width; ++x) {
      if (!inv_depth.valid(x, y)) continue;
      const Eigen::Vector3d p = src_from_ref * k.backproject(x, y, inv_depth.at(x, y));
      if (p.z() <= kMinDepth) continue;
      const Eigen::Vector2d uv = k.project(p);
      if (!(uv.x() >= 0.0 && uv.y() >= 0.0 && uv.x() <= k.width - 1 && uv.y() <= k.height - 1)) continue;
      out.set(x, y, uv - Eigen::Vector2d(x, y));
    }
  }
  return out;
}

}  // namespace kftam
