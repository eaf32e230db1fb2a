#include "kftam/tracker.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>

#include "kftam/errors.hpp"
#include "kftam/text.hpp"

namespace kftam {

void TrackerConfig::validate() const {
  if (levels < 1) raise(ErrorKind::kInvalidArgument, "tracker needs at least one level");
  if (active_levels < 1 || active_levels > levels) raise(ErrorKind::kInvalidArgument, "active levels out of range");
  if (hypotheses < 1) raise(ErrorKind::kInvalidArgument, "tracker needs at least one hypothesis");
  if (max_iterations < 1) raise(ErrorKind::kInvalidArgument, "tracker needs at least one iteration");
  if (!(convergence_threshold >= 0.0) || !(perturb_rotation_deg >= 0.0) || !(perturb_translation_m >= 0.0) ||
      !(mad_factor > 0.0) || !(min_truncation > 0.0) || min_pixels < 1) {
    raise(ErrorKind::kInvalidArgument, "tracker thresholds must be non-negative");
  }
  if (estimator != "gn") raise(ErrorKind::kInvalidArgument, "unknown estimator '" + estimator + "'");
}

GnOptions GnOptions::from(const TrackerConfig& cfg) {
  GnOptions o;
  o.hypotheses = cfg.hypotheses;
  o.max_iterations = cfg.max_iterations;
  o.convergence_threshold = cfg.convergence_threshold;
  o.perturb_rotation_deg = cfg.perturb_rotation_deg;
  o.perturb_translation_m = cfg.perturb_translation_m;
  o.mad_factor = cfg.mad_factor;
  o.min_truncation = cfg.min_truncation;
  o.min_pixels = cfg.min_pixels;
  return o;
}

namespace {

struct PointSample {
  int pixel;
  Eigen::Vector3d x_virtual;
  double intensity;
};

struct Alignment {
  const Image& current;
  const CameraIntrinsics& k;
  std::vector<PointSample> points;
};

Alignment make_alignment(const Image& current, const Image& virtual_image, const InverseDepthMap& depth,
                         const CameraIntrinsics& k) {
  if (current.width() != virtual_image.width() || current.height() != virtual_image.height() ||
      depth.width() != current.width() || depth.height() != current.height() || k.width != current.width() ||
      k.height != current.height()) {
    raise(ErrorKind::kInvalidArgument, "increment estimation needs equal resolutions");
  }
  Alignment a{current, k, {}};
  for (int y = 0; y < depth.height(); ++y) {
    for (int x = 0; x < depth.width(); ++x) {
      if (!depth.valid(x, y)) continue;
      a.points.push_back({y * depth.width() + x, k.backproject(x, y, depth.at(x, y)), virtual_image.at(x, y)});
    }
  }
  return a;
}

using JacobianRow = Eigen::Matrix<double, 1, 6>;

// Calls f(point, in_view, residual, gradient_nonzero, row) for every point.
template <bool WithJacobian, typename F>
void for_each_residual(const Alignment& a, const Vector6d& xi, F&& f) {
  const Eigen::Vector3d r = xi.head<3>();
  const Eigen::Vector3d t = xi.tail<3>();
  const Eigen::Matrix3d rot = so3_exp(r);
  Eigen::Matrix3d jl = Eigen::Matrix3d::Identity();
  if constexpr (WithJacobian) jl = so3_left_jacobian(r);
  JacobianRow row = JacobianRow::Zero();
  for (const PointSample& p : a.points) {
    const Eigen::Vector3d rx = rot * p.x_virtual;
    const Eigen::Vector3d xc = rx + t;
    if (xc.z() <= kMinDepth) {
      f(p, false, 0.0, false, row);
      continue;
    }
    const Eigen::Vector2d uv = a.k.project(xc);
    if constexpr (WithJacobian) {
      const SampleWithGradient s = bilinear_sample_gradient(a.current, uv.x(), uv.y());
      if (!s.in_bounds) {
        f(p, false, 0.0, false, row);
        continue;
      }
      const double iz = 1.0 / xc.z();
      Eigen::Matrix<double, 2, 3> dproj;
      dproj << a.k.fx * iz, 0.0, -a.k.fx * xc.x() * iz * iz, 0.0, a.k.fy * iz, -a.k.fy * xc.y() * iz * iz;
      const Eigen::RowVector3d g = Eigen::RowVector2d(s.dx, s.dy) * dproj;
      row.head<3>() = -g * skew(rx) * jl;
      row.tail<3>() = g;
      f(p, true, s.value - p.intensity, s.dx != 0.0 || s.dy != 0.0, row);
    } else {
      const Sample s = bilinear_sample(a.current, uv.x(), uv.y());
      if (!s.in_bounds) {
        f(p, false, 0.0, false, row);
        continue;
      }
      f(p, true, s.value - p.intensity, false, row);
    }
  }
}

// Residuals of every point at one pose. Points projecting outside the image
// read the nearest border value so the objective stays continuous as pixels
// cross the boundary; NaN marks a point behind the camera.
struct ResidualField {
  std::vector<double> values;
  std::vector<std::uint8_t> in_view;
};

ResidualField evaluate(const Alignment& a, const Vector6d& xi) {
  const Eigen::Matrix3d rot = so3_exp(xi.head<3>());
  const Eigen::Vector3d t = xi.tail<3>();
  const double max_x = a.current.width() - 1;
  const double max_y = a.current.height() - 1;
  ResidualField out;
  out.values.reserve(a.points.size());
  out.in_view.reserve(a.points.size());
  for (const PointSample& p : a.points) {
    const Eigen::Vector3d xc = rot * p.x_virtual + t;
    if (xc.z() <= kMinDepth) {
      out.values.push_back(std::numeric_limits<double>::quiet_NaN());
      out.in_view.push_back(0);
      continue;
    }
    const Eigen::Vector2d uv = a.k.project(xc);
    const double u = std::clamp(uv.x(), 0.0, max_x);
    const double v = std::clamp(uv.y(), 0.0, max_y);
    out.values.push_back(bilinear_sample(a.current, u, v).value - p.intensity);
    out.in_view.push_back(u == uv.x() && v == uv.y());
  }
  return out;
}

double truncated_objective(const ResidualField& r, double tau) {
  const double tau2 = tau * tau;
  double sum = 0.0;
  for (double v : r.values) sum += std::isnan(v) ? tau2 : std::min(v * v, tau2);
  return sum;
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

// max(mad_factor * MAD, floor) over the in-view residuals.
double truncation_threshold(const ResidualField& r, const GnOptions& opts) {
  std::vector<double> res;
  res.reserve(r.values.size());
  for (std::size_t i = 0; i < r.values.size(); ++i)
    if (r.in_view[i]) res.push_back(r.values[i]);
  const double m = median_of(res);
  for (double& v : res) v = std::abs(v - m);
  return std::max(opts.mad_factor * median_of(std::move(res)), opts.min_truncation);
}

struct Solution {
  Vector6d xi;
  double objective;
};

// Gauss-Newton with the truncation threshold refreshed at the start of every
// iteration; the line search keeps that iteration's threshold fixed.
Solution solve(const Alignment& a, const Vector6d& start, const GnOptions& opts) {
  Vector6d xi = start;
  ResidualField current = evaluate(a, xi);
  double tau = truncation_threshold(current, opts);
  double f = truncated_objective(current, tau);
  for (int it = 0; it < opts.max_iterations; ++it) {
    tau = truncation_threshold(current, opts);
    f = truncated_objective(current, tau);
    Matrix6d h = Matrix6d::Zero();
    Vector6d g = Vector6d::Zero();
    for_each_residual<true>(a, xi, [&](const PointSample&, bool in_view, double res, bool, const JacobianRow& row) {
      if (!in_view || std::abs(res) >= tau) return;
      h.noalias() += row.transpose() * row;
      g.noalias() += row.transpose() * res;
    });
    const Eigen::SelfAdjointEigenSolver<Matrix6d> eig(h, Eigen::EigenvaluesOnly);
    const double max_ev = eig.eigenvalues().maxCoeff();
    if (!(max_ev > 0.0) || !std::isfinite(max_ev)) break;
    if (eig.eigenvalues().minCoeff() * 1e12 < max_ev) h.diagonal().array() += 1e-6 * max_ev;
    const Vector6d delta = -h.ldlt().solve(g);
    if (!delta.allFinite()) break;

    double step = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 12; ++ls) {
      const Vector6d candidate = xi + step * delta;
      ResidualField trial = evaluate(a, candidate);
      const double fc = truncated_objective(trial, tau);
      if (fc <= f) {
        xi = candidate;
        f = fc;
        current = std::move(trial);
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted || step * delta.norm() < opts.convergence_threshold) break;
  }
  return {xi, f};
}

Image gray_of(const Image& img) { return img.channels() == 1 ? img : img.to_gray(); }

}  // namespace

PhotometricGnEstimator::Linearization PhotometricGnEstimator::linearize(const IncrementProblem& problem,
                                                                        const Vector6d& xi) {
  const Image current = gray_of(problem.current);
  const Image virt = gray_of(problem.virtual_image);
  const Alignment a = make_alignment(current, virt, problem.virtual_depth, problem.intrinsics);
  std::vector<double> res;
  std::vector<JacobianRow> rows;
  Linearization out;
  for_each_residual<true>(a, xi, [&](const PointSample& p, bool in_view, double r, bool, const JacobianRow& row) {
    if (!in_view) return;
    res.push_back(r);
    rows.push_back(row);
    out.pixels.push_back(p.pixel);
  });
  out.residuals = Eigen::Map<const Eigen::VectorXd>(res.data(), static_cast<Eigen::Index>(res.size()));
  out.jacobian.resize(static_cast<Eigen::Index>(rows.size()), 6);
  for (std::size_t i = 0; i < rows.size(); ++i) out.jacobian.row(static_cast<Eigen::Index>(i)) = rows[i];
  return out;
}

IncrementEstimate PhotometricGnEstimator::estimate(const IncrementProblem& problem) const {
  const Image current = gray_of(problem.current);
  const Image virt = gray_of(problem.virtual_image);
  const Alignment a = make_alignment(current, virt, problem.virtual_depth, problem.intrinsics);

  int usable = 0;
  for_each_residual<true>(a, Vector6d::Zero(),
                          [&](const PointSample&, bool in_view, double, bool textured, const JacobianRow&) {
                            if (in_view && textured) ++usable;
                          });
  if (usable < opts_.min_pixels) {
    raise(ErrorKind::kInsufficientOverlap,
          std::to_string(usable) + " usable pixels, need " + std::to_string(opts_.min_pixels));
  }

  std::mt19937_64 rng(problem.seed);
  std::normal_distribution<double> rot(0.0, opts_.perturb_rotation_deg * std::numbers::pi / 180.0);
  std::normal_distribution<double> trans(0.0, opts_.perturb_translation_m);

  std::vector<Twist> hyps;
  hyps.reserve(static_cast<std::size_t>(opts_.hypotheses));
  IncrementEstimate out;
  for (int k = 0; k < opts_.hypotheses; ++k) {
    Vector6d start = Vector6d::Zero();
    if (k > 0) {
      for (int i = 0; i < 3; ++i) start[i] = rot(rng);
      for (int i = 3; i < 6; ++i) start[i] = trans(rng);
    }
    const Solution s = solve(a, start, opts_);
    if (k == 0) out.residual_rms = std::sqrt(s.objective / static_cast<double>(a.points.size()));
    hyps.push_back(log_pose(exp_twist(Twist::from_vector(s.xi)).inverse()));
  }
  out.hypotheses = aggregate_hypotheses(hyps);
  out.pixels = usable;
  return out;
}

std::unique_ptr<IncrementEstimator> make_estimator(const TrackerConfig& cfg) {
  cfg.validate();
  return std::make_unique<PhotometricGnEstimator>(GnOptions::from(cfg));
}

KeyframePyramid build_keyframe_pyramid(const Keyframe& kf, int levels) {
  kf.validate();
  const auto images = build_pyramid(gray_of(kf.image), levels);
  const auto depths = build_pyramid(kf.inv_depth, levels);
  const auto ks = build_pyramid(kf.intrinsics, levels);
  KeyframePyramid p;
  for (int l = 0; l < levels; ++l) {
    const auto i = static_cast<std::size_t>(l);
    p.levels.push_back(Keyframe{images[i], depths[i], kf.pose, ks[i], kf.id});
  }
  return p;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t frame, std::uint64_t level) {
  auto splitmix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return splitmix(splitmix(splitmix(seed) ^ frame) ^ level);
}

FrameTrackResult track_frame(const KeyframePyramid& kf, const Image& current, const Pose& guess,
                             const TrackerConfig& cfg, const IncrementEstimator& estimator,
                             std::uint64_t frame_index) {
  cfg.validate();
  const int levels = static_cast<int>(kf.levels.size());
  if (levels != cfg.levels) raise(ErrorKind::kInvalidArgument, "keyframe pyramid depth differs from config");
  const auto images = build_pyramid(gray_of(current), levels);

  FrameTrackResult result;
  result.pose = guess;
  bool any = false;
  for (int l = cfg.active_levels - 1; l >= 0; --l) {
    const Keyframe& level_kf = kf.levels[static_cast<std::size_t>(l)];
    LevelDiagnostics diag;
    diag.level = l;
    diag.width = level_kf.intrinsics.width;
    diag.height = level_kf.intrinsics.height;
    diag.guess = result.pose;
    try {
      const VirtualKeyframe vk = render_virtual_keyframe(level_kf, result.pose, cfg.render);
      const IncrementProblem problem{images[static_cast<std::size_t>(l)], vk.image, vk.inv_depth,
                                     level_kf.intrinsics,
                                     mix_seed(cfg.seed, frame_index, static_cast<std::uint64_t>(l))};
      IncrementEstimate est = estimator.estimate(problem);
      result.pose = apply_increment(result.pose, est.hypotheses.mean);
      diag.tracked = true;
      diag.hypotheses = std::move(est.hypotheses);
      diag.residual_rms = est.residual_rms;
      any = true;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kDegenerateView && e.kind() != ErrorKind::kInsufficientOverlap) throw;
    }
    result.levels.push_back(std::move(diag));
  }
  if (!any) raise(ErrorKind::kTrackingLost, "no level had enough overlap with the keyframe");
  return result;
}

FrameTrackResult track_frame(const Keyframe& kf, const Image& current, const Pose& guess, const TrackerConfig& cfg) {
  const auto estimator = make_estimator(cfg);
  return track_frame(build_keyframe_pyramid(kf, cfg.levels), current, guess, cfg, *estimator);
}

SequenceResult track_sequence(std::span<const TimedImage> frames, const Keyframe& initial, const TrackerConfig& cfg,
                              const DepthProvider& depth, const IncrementEstimator* estimator) {
  cfg.validate();
  if (frames.size() < 2) raise(ErrorKind::kInvalidArgument, "tracking needs at least two frames");
  std::unique_ptr<IncrementEstimator> owned;
  if (estimator == nullptr) {
    owned = make_estimator(cfg);
    estimator = owned.get();
  }

  SequenceResult out;
  Keyframe active = initial;
  KeyframePyramid pyramid = build_keyframe_pyramid(active, cfg.levels);
  out.poses.push_back(initial.pose);
  out.keyframe_frames.push_back(0);

  for (std::size_t i = 1; i < frames.size(); ++i) {
    Pose guess = out.poses.back();
    if (cfg.guess_model == GuessModel::kConstantVelocity && out.poses.size() >= 2) {
      const Pose& prev = out.poses[out.poses.size() - 2];
      guess = out.poses.back() * (prev.inverse() * out.poses.back());
    }
    FrameDiagnostics diag{i, active.id, guess, {}};
    try {
      diag.result = track_frame(pyramid, frames[i].image, guess, cfg, *estimator, i);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kTrackingLost) throw;
      out.lost_at = i;
      break;
    }
    const Pose pose = diag.result.pose;
    out.poses.push_back(pose);
    out.diagnostics.push_back(std::move(diag));
    if (should_switch_keyframe(active.pose, pose, cfg.keyframe)) {
      active = Keyframe{frames[i].image, depth(i, pose), pose, initial.intrinsics, active.id + 1};
      pyramid = build_keyframe_pyramid(active, cfg.levels);
      out.keyframe_frames.push_back(i);
    }
  }
  for (std::size_t i = 0; i < out.poses.size(); ++i) {
    out.trajectory.push_back(TrajectoryRecord::from_pose(frames[i].timestamp, out.poses[i]));
  }
  return out;
}

void write_tracking_diagnostics(std::ostream& out, const SequenceResult& result) {
  out << "frame,level,residual,cov_trace,keyframe\n";
  for (const FrameDiagnostics& f : result.diagnostics) {
    for (const LevelDiagnostics& l : f.result.levels) {
      out << f.frame << ',' << l.level << ',';
      if (l.tracked) {
        out << format_double(l.residual_rms) << ',' << format_double(l.hypotheses.covariance.trace());
      } else {
        out << "nan,nan";
      }
      out << ',' << f.keyframe_id << '\n';
    }
  }
}

}  // namespace kftam
