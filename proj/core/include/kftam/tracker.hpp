#pragma once

// Coarse-to-fine frame-to-keyframe tracking against virtual keyframes.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kftam/geometry.hpp"
#include "kftam/imaging.hpp"
#include "kftam/keyframe.hpp"
#include "kftam/trajectory.hpp"

namespace kftam {

enum class GuessModel { kPreviousPose, kConstantVelocity };

struct TrackerConfig {
  /// Pyramid levels, tracked coarsest first. The finest level is the input
  /// resolution (320x240 gives 80x60, 160x120, 320x240).
  int levels = 3;
  /// Only the finest `active_levels` levels are tracked (ablation knob).
  int active_levels = 3;
  std::string estimator = "gn";
  int hypotheses = 64;
  int max_iterations = 10;
  double convergence_threshold = 1e-6;
  double perturb_rotation_deg = 0.5;
  double perturb_translation_m = 0.005;
  /// Residuals beyond mad_factor × MAD are truncated.
  double mad_factor = 3.0;
  /// Lower bound on the truncation threshold, in intensity units.
  double min_truncation = 0.02;
  int min_pixels = 100;
  KeyframePolicy keyframe;
  GuessModel guess_model = GuessModel::kPreviousPose;
  RenderOptions render;
  std::uint64_t seed = 0;

  /// Throws InvalidArgument on non-positive counts or thresholds.
  void validate() const;
};

/// Inputs of one pose-increment estimate, all at one pyramid level.
struct IncrementProblem {
  const Image& current;
  const Image& virtual_image;
  const InverseDepthMap& virtual_depth;
  const CameraIntrinsics& intrinsics;
  std::uint64_t seed = 0;
};

struct IncrementEstimate {
  /// Twists δξ with virtual-camera-from-current = exp(δξ); the mean is the
  /// increment applied to the guess.
  HypothesisSet hypotheses;
  /// RMS of the truncated residual of the first hypothesis at its solution.
  double residual_rms = 0.0;
  int pixels = 0;
};

class IncrementEstimator {
 public:
  virtual ~IncrementEstimator() = default;
  /// Throws InsufficientOverlap when fewer than the required number of
  /// pixels carry a valid residual.
  virtual IncrementEstimate estimate(const IncrementProblem& problem) const = 0;
};

struct GnOptions {
  int hypotheses = 64;
  int max_iterations = 10;
  double convergence_threshold = 1e-6;
  double perturb_rotation_deg = 0.5;
  double perturb_translation_m = 0.005;
  double mad_factor = 3.0;
  double min_truncation = 0.02;
  int min_pixels = 100;

  static GnOptions from(const TrackerConfig& cfg);
};

/// Direct photometric alignment by Gauss-Newton over the current-from-virtual
/// twist ξ' (X_c = exp(r') X_v + t'). Instance 0 starts at zero, the others at
/// seeded Gaussian perturbations; each solution ξ'_k yields the hypothesis
/// δξ_k = log(exp(ξ'_k)⁻¹). The objective Σ min(r², τ²) takes τ from the MAD
/// of the in-view residuals at the start of every iteration. Pixels
/// projecting outside the current image read its nearest border value and
/// points behind the camera cost τ². Steps are halved until the objective
/// does not increase; an ill-conditioned system (condition > 1e12) gets a
/// damped step.
class PhotometricGnEstimator final : public IncrementEstimator {
 public:
  explicit PhotometricGnEstimator(GnOptions opts = {}) : opts_(opts) {}

  IncrementEstimate estimate(const IncrementProblem& problem) const override;

  struct Linearization {
    Eigen::VectorXd residuals;  ///< in-view pixels only
    Eigen::MatrixXd jacobian;   ///< rows match residuals, columns (r', t')
    std::vector<int> pixels;    ///< linear index of each row's virtual pixel
  };
  /// Residual I_c(π(ξ', x)) − I_v(x) and its analytic Jacobian at every
  /// valid virtual pixel that projects inside the current image.
  static Linearization linearize(const IncrementProblem& problem, const Vector6d& xi);

  const GnOptions& options() const { return opts_; }

 private:
  GnOptions opts_;
};

/// Builds the estimator named by cfg.estimator ("gn").
std::unique_ptr<IncrementEstimator> make_estimator(const TrackerConfig& cfg);

/// Keyframe resampled to every pyramid level; index 0 is the finest.
struct KeyframePyramid {
  std::vector<Keyframe> levels;
};
KeyframePyramid build_keyframe_pyramid(const Keyframe& kf, int levels);

struct LevelDiagnostics {
  int level = 0;  ///< pyramid index, 0 finest
  int width = 0;
  int height = 0;
  bool tracked = false;  ///< false when the level had insufficient overlap
  Pose guess;            ///< pose before this level's increment
  HypothesisSet hypotheses;
  double residual_rms = 0.0;
};

struct FrameTrackResult {
  Pose pose;
  std::vector<LevelDiagnostics> levels;  ///< coarsest first
};

/// Per level, coarsest first: render the virtual keyframe at the current
/// guess, estimate the increment, guess ← guess · exp(mean). A level whose
/// render or estimate lacks overlap is skipped. Throws TrackingLost when
/// every active level is skipped.
FrameTrackResult track_frame(const KeyframePyramid& kf, const Image& current, const Pose& guess,
                             const TrackerConfig& cfg, const IncrementEstimator& estimator,
                             std::uint64_t frame_index = 0);
FrameTrackResult track_frame(const Keyframe& kf, const Image& current, const Pose& guess, const TrackerConfig& cfg);

/// Hypothesis seed for a (frame, level) pair.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t frame, std::uint64_t level);

struct TimedImage {
  double timestamp = 0.0;
  Image image;
};

/// Inverse depth for a frame that becomes a keyframe, given its index and
/// tracked pose.
using DepthProvider = std::function<InverseDepthMap(std::size_t frame, const Pose& pose)>;

struct FrameDiagnostics {
  std::size_t frame = 0;
  int keyframe_id = 0;
  Pose guess;
  FrameTrackResult result;
};

struct SequenceResult {
  std::vector<Pose> poses;
  Trajectory trajectory;
  std::vector<std::size_t> keyframe_frames;  ///< frame index of each keyframe, in creation order
  std::vector<FrameDiagnostics> diagnostics;
  /// Set when tracking was lost; poses/trajectory stop before this frame.
  std::optional<std::size_t> lost_at;
};

/// Frame 0 is the initial keyframe (its pose is kf.pose). Every later frame
/// is tracked against the active keyframe from the guess given by
/// cfg.guess_model; when should_switch_keyframe fires, that frame becomes
/// the new keyframe with depth from `depth`. Throws InvalidArgument for
/// fewer than 2 frames.
SequenceResult track_sequence(std::span<const TimedImage> frames, const Keyframe& initial, const TrackerConfig& cfg,
                              const DepthProvider& depth, const IncrementEstimator* estimator = nullptr);

/// CSV rows "frame,level,residual,cov_trace,keyframe" with that header.
void write_tracking_diagnostics(std::ostream& out, const SequenceResult& result);

}  // namespace kftam
