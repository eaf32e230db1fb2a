#pragma once

// Training losses as plain scalar functions with analytic gradients.

#include <array>
#include <span>
#include <vector>

#include "kftam/geometry.hpp"
#include "kftam/imaging.hpp"

namespace kftam {

struct LossValue {
  double value = 0.0;
  /// One entry per scalar of the differentiated input, in its storage order.
  std::vector<double> gradient;
};

/// Σ ‖w − w_gt‖₂ over jointly valid pixels. Gradient w.r.t. w, laid out
/// (u, v) per pixel in row-major order; zero at invalid pixels and where the
/// difference vanishes. Throws NoValidPixels. Non-negative.
LossValue endpoint_error_loss(const FlowField& w, const FlowField& w_gt);

inline constexpr double kDefaultMotionAlpha = 160.0;

/// α‖r − r_gt‖ + ‖t − t_gt‖, gradient w.r.t. (r, t). Non-negative.
LossValue motion_loss(const Twist& xi, const Twist& xi_gt, double alpha = kDefaultMotionAlpha);

inline constexpr double kCovarianceEpsilon = 1e-8;

struct LaplaceTerms {
  double half_log_det = 0.0;  ///< ½ log|Σ + εI|
  double log_term = 0.0;      ///< −2 log(q/2)
  double bessel_term = 0.0;   ///< −log K_v(√(2q))
  double q = 0.0;             ///< xᵀ(Σ + εI)⁻¹x

  double total() const { return half_log_det + log_term + bessel_term; }
};

/// The three terms of the Laplace negative log-likelihood for a given
/// covariance and residual. Throws SingularCovariance if Σ + εI is not
/// positive definite and DomainError when q underflows to 0.
LaplaceTerms laplace_terms(const Matrix6d& covariance, const Vector6d& x, double order = 2.0,
                           double epsilon = kCovarianceEpsilon);

/// Laplace NLL with x = mean − ξ_gt taken from the hypothesis set and held
/// constant. Σ is recomputed from the samples; the gradient is w.r.t. the
/// samples (6 per hypothesis, r then t). Unbounded below.
LossValue laplace_uncertainty_loss(const HypothesisSet& hyp, const Twist& xi_gt, double order = 2.0);
/// Same with x given explicitly.
LossValue laplace_uncertainty_loss(std::span<const Twist> samples, const Vector6d& x, double order = 2.0);

/// Mean |D − D_gt| over jointly valid pixels, gradient w.r.t. D per pixel.
/// Throws NoValidPixels. Non-negative.
LossValue l1_inverse_depth_loss(const InverseDepthMap& d, const InverseDepthMap& d_gt);

inline constexpr std::array<int, 3> kDefaultGradientSteps{1, 2, 4};

/// Σ_h Σ_(x,y) ‖g_h[D] − g_h[D_gt]‖₂ with
///   g_h[f](x,y) = ((f(x+h,y) − f(x,y)) / (|f(x+h,y)| + |f(x,y)|),
///                 (f(x,y+h) − f(x,y)) / (|f(x,y+h)| + |f(x,y)|)).
/// Pixels must be valid in both maps. A component whose step-h neighbour is
/// outside the image or invalid in either map is zero for both maps.
/// Denominators are floored at 1e-9. Gradient w.r.t. D per pixel. Throws
/// NoValidPixels. Non-negative.
LossValue scale_invariant_gradient_loss(const InverseDepthMap& d, const InverseDepthMap& d_gt,
                                        std::span<const int> steps = kDefaultGradientSteps);
}  // namespace kftam
