#include "kftam/learnops.hpp"

#include <Eigen/Cholesky>
#include <cmath>

#include "kftam/bessel.hpp"
#include "kftam/errors.hpp"

namespace kftam {

namespace {

void require_same_size(int w0, int h0, int w1, int h1) {
  if (w0 != w1 || h0 != h1) raise(ErrorKind::kInvalidArgument, "loss inputs differ in size");
}

}  // namespace

LossValue endpoint_error_loss(const FlowField& w, const FlowField& w_gt) {
  require_same_size(w.width(), w.height(), w_gt.width(), w_gt.height());
  LossValue out;
  out.gradient.assign(static_cast<std::size_t>(w.width()) * w.height() * 2, 0.0);
  std::size_t n = 0;
  for (int y = 0; y < w.height(); ++y) {
    for (int x = 0; x < w.width(); ++x) {
      if (!w.valid(x, y) || !w_gt.valid(x, y)) continue;
      ++n;
      const Eigen::Vector2d diff = w.at(x, y) - w_gt.at(x, y);
      const double len = diff.norm();
      out.value += len;
      if (len > 0.0) {
        const std::size_t i = (static_cast<std::size_t>(y) * w.width() + x) * 2;
        out.gradient[i] = diff.x() / len;
        out.gradient[i + 1] = diff.y() / len;
      }
    }
  }
  if (n == 0) raise(ErrorKind::kNoValidPixels, "flow fields share no valid pixel");
  return out;
}

LossValue motion_loss(const Twist& xi, const Twist& xi_gt, double alpha) {
  const Eigen::Vector3d dr = xi.r - xi_gt.r;
  const Eigen::Vector3d dt = xi.t - xi_gt.t;
  const double nr = dr.norm();
  const double nt = dt.norm();
  LossValue out{alpha * nr + nt, std::vector<double>(6, 0.0)};
  for (int i = 0; i < 3; ++i) {
    if (nr > 0.0) out.gradient[static_cast<std::size_t>(i)] = alpha * dr[i] / nr;
    if (nt > 0.0) out.gradient[static_cast<std::size_t>(i + 3)] = dt[i] / nt;
  }
  return out;
}

LaplaceTerms laplace_terms(const Matrix6d& covariance, const Vector6d& x, double order, double epsilon) {
  const Matrix6d reg = covariance + epsilon * Matrix6d::Identity();
  const Eigen::LLT<Matrix6d> llt(reg);
  if (llt.info() != Eigen::Success || !(llt.matrixL().toDenseMatrix().diagonal().array() > 0.0).all()) {
    raise(ErrorKind::kSingularCovariance, "covariance is not positive definite after regularisation");
  }
  LaplaceTerms t;
  t.half_log_det = llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  t.q = x.dot(llt.solve(x));
  if (!(t.q > 0.0) || !std::isfinite(t.q)) raise(ErrorKind::kDomainError, "Mahalanobis term is zero");
  t.log_term = -2.0 * std::log(t.q / 2.0);
  t.bessel_term = -std::log(bessel_k(order, std::sqrt(2.0 * t.q)));
  return t;
}

LossValue laplace_uncertainty_loss(std::span<const Twist> samples, const Vector6d& x, double order) {
  const HypothesisSet hyp = aggregate_hypotheses(samples);
  const Matrix6d reg = hyp.covariance + kCovarianceEpsilon * Matrix6d::Identity();
  const LaplaceTerms terms = laplace_terms(hyp.covariance, x, order);

  const Matrix6d inv = reg.llt().solve(Matrix6d::Identity());
  const Vector6d inv_x = inv * x;
  const double s = std::sqrt(2.0 * terms.q);
  const double dl_dq = -2.0 / terms.q - (bessel_k_derivative(order, s) / bessel_k(order, s)) / s;
  const Matrix6d dl_dcov = 0.5 * inv - dl_dq * inv_x * inv_x.transpose();

  LossValue out{terms.total(), {}};
  out.gradient.reserve(samples.size() * 6);
  const double n = static_cast<double>(samples.size());
  const Vector6d mean = hyp.mean.vector();
  for (const Twist& sample : samples) {
    const Vector6d g = (2.0 / n) * dl_dcov * (sample.vector() - mean);
    out.gradient.insert(out.gradient.end(), g.data(), g.data() + 6);
  }
  return out;
}

LossValue laplace_uncertainty_loss(const HypothesisSet& hyp, const Twist& xi_gt, double order) {
  const HypothesisSet agg = aggregate_hypotheses(hyp.samples);
  return laplace_uncertainty_loss(hyp.samples, agg.mean.vector() - xi_gt.vector(), order);
}

LossValue l1_inverse_depth_loss(const InverseDepthMap& d, const InverseDepthMap& d_gt) {
  require_same_size(d.width(), d.height(), d_gt.width(), d_gt.height());
  LossValue out;
  out.gradient.assign(d.pixel_count(), 0.0);
  std::size_t n = 0;
  for (int y = 0; y < d.height(); ++y) {
    for (int x = 0; x < d.width(); ++x) {
      if (!d.valid(x, y) || !d_gt.valid(x, y)) continue;
      ++n;
      const double diff = d.at(x, y) - d_gt.at(x, y);
      out.value += std::abs(diff);
      out.gradient[static_cast<std::size_t>(y) * d.width() + x] = (diff > 0.0) - (diff < 0.0);
    }
  }
  if (n == 0) raise(ErrorKind::kNoValidPixels, "depth maps share no valid pixel");
  out.value /= static_cast<double>(n);
  for (double& g : out.gradient) g /= static_cast<double>(n);
  return out;
}

namespace {

constexpr double kDenominatorFloor = 1e-9;

struct NormalizedDiff {
  double value;
  double d_next;  // ∂/∂f(neighbour)
  double d_here;  // ∂/∂f(pixel)
};

NormalizedDiff normalized_diff(double next, double here) {
  const double raw = std::abs(next) + std::abs(here);
  const double den = std::max(raw, kDenominatorFloor);
  const double num = next - here;
  const double v = num / den;
  if (raw < kDenominatorFloor) return {v, 1.0 / den, -1.0 / den};
  const auto sign = [](double a) { return static_cast<double>((a > 0.0) - (a < 0.0)); };
  return {v, 1.0 / den - num * sign(next) / (den * den), -1.0 / den - num * sign(here) / (den * den)};
}

}  // namespace

LossValue scale_invariant_gradient_loss(const InverseDepthMap& d, const InverseDepthMap& d_gt,
                                        std::span<const int> steps) {
  require_same_size(d.width(), d.height(), d_gt.width(), d_gt.height());
  const int w = d.width();
  const int h = d.height();
  auto both_valid = [&](int x, int y) { return x < w && y < h && d.valid(x, y) && d_gt.valid(x, y); };

  LossValue out;
  out.gradient.assign(d.pixel_count(), 0.0);
  std::size_t n = 0;
  for (const int step : steps) {
    if (step < 1) raise(ErrorKind::kInvalidArgument, "gradient step must be positive");
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (!both_valid(x, y)) continue;
        ++n;
        const std::size_t here = static_cast<std::size_t>(y) * w + x;
        NormalizedDiff gx{0, 0, 0}, gx_gt{0, 0, 0}, gy{0, 0, 0}, gy_gt{0, 0, 0};
        const bool has_x = both_valid(x + step, y);
        const bool has_y = both_valid(x, y + step);
        if (has_x) {
          gx = normalized_diff(d.at(x + step, y), d.at(x, y));
          gx_gt = normalized_diff(d_gt.at(x + step, y), d_gt.at(x, y));
        }
        if (has_y) {
          gy = normalized_diff(d.at(x, y + step), d.at(x, y));
          gy_gt = normalized_diff(d_gt.at(x, y + step), d_gt.at(x, y));
        }
        const double ex = gx.value - gx_gt.value;
        const double ey = gy.value - gy_gt.value;
        const double len = std::hypot(ex, ey);
        out.value += len;
        if (len == 0.0) continue;
        const double ux = ex / len;
        const double uy = ey / len;
        out.gradient[here] += ux * gx.d_here + uy * gy.d_here;
        if (has_x) out.gradient[here + static_cast<std::size_t>(step)] += ux * gx.d_next;
        if (has_y) out.gradient[here + static_cast<std::size_t>(step) * w] += uy * gy.d_next;
      }
    }
  }
  if (n == 0) raise(ErrorKind::kNoValidPixels, "depth maps share no valid pixel");
  return out;
}

}  // namespace kftam
