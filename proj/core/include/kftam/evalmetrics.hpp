#pragma once

// Depth-map error metrics (on metric depth) and the translational drift of
// a trajectory.

#include "kftam/imaging.hpp"
#include "kftam/trajectory.hpp"

namespace kftam {

/// sqrt(mean(E²) − mean(E)²), E = log D − log D_gt over jointly valid pixels.
/// Throws NoValidPixels, or NonPositiveDepth if a compared value is <= 0.
double sc_inv(const DepthMap& d, const DepthMap& d_gt);
/// mean |D − D_gt| / D_gt.
double l1_rel(const DepthMap& d, const DepthMap& d_gt);
/// mean |1/D − 1/D_gt|.
double l1_inv(const DepthMap& d, const DepthMap& d_gt);

inline constexpr double kMaxAssociationGap = 0.02;

/// Translational relative pose error, RMSE divided by the interval (m/s).
///
/// Every estimate is associated with the nearest ground-truth timestamp
/// (gap <= 0.02 s). For each associated frame i, the partner j is the
/// associated frame whose timestamp is closest to t_i + interval, used only
/// if that gap is also <= 0.02 s. The error of the pair is the translation
/// of (Q_i⁻¹ Q_j)⁻¹ (P_i⁻¹ P_j). Throws InsufficientOverlapInTime with fewer
/// than 2 associated frames or no pair.
double translational_rpe_rmse(const Trajectory& estimate, const Trajectory& ground_truth, double interval = 1.0);

}  // namespace kftam
