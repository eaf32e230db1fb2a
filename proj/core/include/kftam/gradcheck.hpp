#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <span>
#include <vector>

#include "kftam/learnops.hpp"

namespace kftam {

using LossFunction = std::function<LossValue(std::span<const double>)>;

struct CoordinateCheck {
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double relative_error = 0.0;
  /// One-sided differences disagree: the loss is not differentiable here and
  /// the coordinate is left out of the maximum.
  bool kink = false;
};

struct GradientCheck {
  double max_relative_error = 0.0;
  std::size_t kinks = 0;
  std::vector<CoordinateCheck> coordinates;
};

/// Compares the analytic gradient of `loss` at `point` with central
/// differences of step `eps`. Relative error is |a − n| / max(|a|, |n|, 1e-3).
/// A coordinate is a kink when the forward and backward differences differ
/// by more than 10% of the larger one (floor 1e-3), or when the central
/// difference at eps/2 differs from the one at eps by more than 1e-5 of
/// their scale. Kinks are excluded from max_relative_error.
GradientCheck finite_difference_check(const LossFunction& loss, std::span<const double> point, double eps = 1e-5);

struct LossCheck {
  std::string loss;
  int point = 0;
  GradientCheck check;
};

/// Checks every training loss at `points` seeded random inputs:
/// endpoint_error (6x5 flow), motion (α = 160), laplace_nll (64 hypotheses,
/// x frozen), l1_inverse_depth (8x6), scale_invariant_gradient (12x10 with
/// invalid ground-truth pixels).
std::vector<LossCheck> check_all_losses(int points, std::uint64_t seed);

}  // namespace kftam
