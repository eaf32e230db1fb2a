#include "kftam/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "kftam/errors.hpp"

namespace kftam {

namespace {

constexpr double kStencilTolerance = 1e-5;

}  // namespace

GradientCheck finite_difference_check(const LossFunction& loss, std::span<const double> point, double eps) {
  if (!(eps > 0.0)) raise(ErrorKind::kInvalidArgument, "finite-difference step must be positive");
  const LossValue at = loss(point);
  if (at.gradient.size() != point.size()) {
    raise(ErrorKind::kInvalidArgument, "gradient length differs from the input dimension");
  }
  std::vector<double> probe(point.begin(), point.end());
  GradientCheck out;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double x0 = probe[i];
    auto value_at = [&](double x) {
      probe[i] = x;
      const double v = loss(probe).value;
      probe[i] = x0;
      return v;
    };
    const double up = value_at(x0 + eps);
    const double down = value_at(x0 - eps);
    const double half_step = (value_at(x0 + 0.5 * eps) - value_at(x0 - 0.5 * eps)) / eps;

    CoordinateCheck c;
    c.index = i;
    c.analytic = at.gradient[i];
    c.numeric = (up - down) / (2.0 * eps);
    const double forward = (up - at.value) / eps;
    const double backward = (at.value - down) / eps;
    const double scale = std::max({std::abs(c.numeric), std::abs(half_step), 1e-3});
    // A kink inside the stencil shows as one-sided slopes that disagree, or
    // as a central difference that moves when the step is halved.
    c.kink = std::abs(forward - backward) > 0.1 * std::max({std::abs(forward), std::abs(backward), 1e-3}) ||
             std::abs(c.numeric - half_step) > kStencilTolerance * scale;
    c.relative_error = std::abs(c.analytic - c.numeric) / std::max({std::abs(c.analytic), std::abs(c.numeric), 1e-3});
    if (c.kink) {
      ++out.kinks;
    } else {
      out.max_relative_error = std::max(out.max_relative_error, c.relative_error);
    }
    out.coordinates.push_back(c);
  }
  return out;
}

namespace {

FlowField flow_from(std::span<const double> p, int w, int h) {
  FlowField f(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const std::size_t i = (static_cast<std::size_t>(y) * w + x) * 2;
      f.set(x, y, {p[i], p[i + 1]});
    }
  return f;
}

InverseDepthMap map_from(std::span<const double> p, int w, int h) {
  InverseDepthMap m(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) m.set(x, y, p[static_cast<std::size_t>(y) * w + x]);
  return m;
}

std::vector<Twist> twists_from(std::span<const double> p) {
  std::vector<Twist> out;
  for (std::size_t i = 0; i + 6 <= p.size(); i += 6) {
    Vector6d v;
    for (int k = 0; k < 6; ++k) v[k] = p[i + static_cast<std::size_t>(k)];
    out.push_back(Twist::from_vector(v));
  }
  return out;
}

}  // namespace

std::vector<LossCheck> check_all_losses(int points, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> flow(-3.0, 3.0);
  std::uniform_real_distribution<double> inv_depth(0.2, 2.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto draw = [&](std::size_t n, auto& dist) {
    std::vector<double> v(n);
    for (double& x : v) x = dist(rng);
    return v;
  };

  std::vector<LossCheck> out;
  for (int i = 0; i < points; ++i) {
    {
      constexpr int w = 6, h = 5;
      const FlowField gt = flow_from(draw(w * h * 2, flow), w, h);
      const auto point = draw(w * h * 2, flow);
      out.push_back({"endpoint_error", i, finite_difference_check(
                                              [&](std::span<const double> p) {
                                                return endpoint_error_loss(flow_from(p, w, h), gt);
                                              },
                                              point)});
    }
    {
      const auto gt = draw(6, normal);
      const auto point = draw(6, normal);
      const Twist gt_twist = twists_from(gt).front();
      out.push_back({"motion", i, finite_difference_check(
                                      [&](std::span<const double> p) {
                                        return motion_loss(twists_from(p).front(), gt_twist, kDefaultMotionAlpha);
                                      },
                                      point)});
    }
    {
      std::vector<double> point = draw(64 * 6, normal);
      for (double& v : point) v *= 0.01;
      Vector6d x;
      for (int k = 0; k < 6; ++k) x[k] = 0.01 * normal(rng);
      out.push_back({"laplace_nll", i, finite_difference_check(
                                           [&](std::span<const double> p) {
                                             return laplace_uncertainty_loss(twists_from(p), x);
                                           },
                                           point, 1e-6)});
    }
    {
      constexpr int w = 8, h = 6;
      const InverseDepthMap gt = map_from(draw(w * h, inv_depth), w, h);
      const auto point = draw(w * h, inv_depth);
      out.push_back({"l1_inverse_depth", i, finite_difference_check(
                                                [&](std::span<const double> p) {
                                                  return l1_inverse_depth_loss(map_from(p, w, h), gt);
                                                },
                                                point)});
    }
    {
      constexpr int w = 12, h = 10;
      InverseDepthMap gt = map_from(draw(w * h, inv_depth), w, h);
      std::uniform_int_distribution<int> pick(0, w * h - 1);
      for (int k = 0; k < 6; ++k) {
        const int p = pick(rng);
        gt.invalidate(p % w, p / w);
      }
      const auto point = draw(w * h, inv_depth);
      out.push_back({"scale_invariant_gradient", i, finite_difference_check(
                                                        [&](std::span<const double> p) {
                                                          return scale_invariant_gradient_loss(map_from(p, w, h), gt);
                                                        },
                                                        point)});
    }
  }
  return out;
}

}  // namespace kftam
