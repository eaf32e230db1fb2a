#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>

#include "kftam/errors.hpp"
#include "kftam/evalmetrics.hpp"
#include "kftam/gradcheck.hpp"
#include "kftam/io.hpp"
#include "kftam/synth.hpp"
#include "kftam/text.hpp"

namespace kftam::cli {

namespace {

// Writes to a file when a path is given, to stdout otherwise.
class Output {
 public:
  explicit Output(const std::filesystem::path& path) {
    if (path.empty()) return;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    file_.open(path);
    if (!file_) raise(ErrorKind::kIoError, "cannot write " + path.string());
  }
  std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

 private:
  std::ofstream file_;
};

GuessModel parse_guess(const std::string& name) {
  if (name == "previous") return GuessModel::kPreviousPose;
  if (name == "constant-velocity") return GuessModel::kConstantVelocity;
  raise(ErrorKind::kInvalidArgument, "unknown guess model '" + name + "'");
}

std::vector<TumFrame> limited_frames(const TumSequence& seq, int max_frames) {
  std::vector<TumFrame> frames = seq.frames;
  if (max_frames > 0 && frames.size() > static_cast<std::size_t>(max_frames)) {
    frames.resize(static_cast<std::size_t>(max_frames));
  }
  return frames;
}

}  // namespace

int run_track(const TrackOptions& opts, std::ostream& log) {
  const TumSequence seq = load_tum_sequence(opts.sequence);
  const std::vector<TumFrame> frames = limited_frames(seq, opts.max_frames);
  if (frames.size() < 2) raise(ErrorKind::kInvalidArgument, "tracking needs at least two frames");
  if (!frames.front().depth) raise(ErrorKind::kInvalidArgument, "the first frame needs depth to seed the keyframe");
  if (seq.dropped > 0) log << "warning: " << seq.dropped << " frames without depth match were dropped\n";

  TrackerConfig cfg = opts.tracker;
  cfg.guess_model = parse_guess(opts.guess);

  std::vector<TimedImage> images;
  for (const TumFrame& f : frames) images.push_back({f.timestamp, f.load_image()});
  const Pose start = frames.front().ground_truth.value_or(Pose::identity());
  const Keyframe initial{images.front().image, to_inverse_depth(frames.front().load_depth()), start, seq.intrinsics, 0};

  const DepthProvider depth = [&](std::size_t i, const Pose&) {
    if (!frames[i].depth) raise(ErrorKind::kInvalidArgument, "frame " + std::to_string(i) + " has no depth");
    return to_inverse_depth(frames[i].load_depth());
  };
  const SequenceResult result = track_sequence(images, initial, cfg, depth);

  if (opts.output.has_parent_path()) std::filesystem::create_directories(opts.output.parent_path());
  write_trajectory(opts.output, result.trajectory);
  if (!opts.diagnostics.empty()) {
    Output diag(opts.diagnostics);
    write_tracking_diagnostics(diag.stream(), result);
  }
  log << "tracked " << result.poses.size() << " frames, " << result.keyframe_frames.size() << " keyframes\n";
  if (result.lost_at) {
    log << "tracking lost at frame " << *result.lost_at << "\n";
    return kExitTrackingLost;
  }
  return kExitOk;
}

namespace {

struct PosedFrame {
  TumFrame frame;
  Pose pose;
};

std::vector<PosedFrame> posed_frames(const TumSequence& seq, const MapOptions& opts, std::ostream& log) {
  const std::vector<TumFrame> frames = limited_frames(seq, opts.max_frames);
  std::optional<Trajectory> poses;
  if (!opts.poses.empty()) {
    poses = read_trajectory(opts.poses);
    std::stable_sort(poses->begin(), poses->end(), [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
  }
  std::vector<PosedFrame> out;
  std::size_t missing = 0;
  for (const TumFrame& f : frames) {
    std::optional<Pose> pose;
    if (poses) {
      const auto it = std::min_element(poses->begin(), poses->end(), [&](const auto& a, const auto& b) {
        return std::abs(a.timestamp - f.timestamp) < std::abs(b.timestamp - f.timestamp);
      });
      if (it != poses->end() && std::abs(it->timestamp - f.timestamp) <= kAssociationGap) pose = it->pose();
    } else {
      pose = f.ground_truth;
    }
    if (pose) {
      out.push_back({f, *pose});
    } else {
      ++missing;
    }
  }
  if (missing > 0) log << "warning: " << missing << " frames without a pose were skipped\n";
  if (out.size() < 2) raise(ErrorKind::kInvalidArgument, "mapping needs at least two posed frames");
  return out;
}

// Keyframe plus up to `window − 1` neighbours, following frames first.
std::vector<std::size_t> window_for(std::size_t keyframe, std::size_t count, int window) {
  std::vector<std::size_t> out;
  const auto wanted = static_cast<std::size_t>(std::max(window - 1, 1));
  for (std::size_t i = keyframe + 1; i < count && out.size() < wanted; ++i) out.push_back(i);
  for (std::size_t i = keyframe; i > 0 && out.size() < wanted; --i) out.push_back(i - 1);
  return out;
}

class ImageCache {
 public:
  explicit ImageCache(const std::vector<PosedFrame>& frames) : frames_(frames) {}
  const Image& get(std::size_t i) {
    auto it = cache_.find(i);
    if (it == cache_.end()) it = cache_.emplace(i, frames_[i].frame.load_image()).first;
    return it->second;
  }

 private:
  const std::vector<PosedFrame>& frames_;
  std::map<std::size_t, Image> cache_;
};

void write_metric_header(std::ostream& out, bool with_noise) {
  if (with_noise) out << "rel_std,extractor,";
  out << "keyframe,timestamp,stage,sc_inv,l1_rel,l1_inv,valid_fraction\n";
}

void write_metric_rows(std::ostream& out, const std::string& prefix, const PosedFrame& kf,
                       const MappingResult& result, const DepthMap& gt) {
  auto row = [&](const std::string& stage, const InverseDepthMap& estimate) {
    const DepthMap d = to_depth(estimate);
    out << prefix << kf.frame.rgb.stem().string() << ',' << format_double(kf.frame.timestamp) << ',' << stage << ','
        << format_double(sc_inv(d, gt)) << ',' << format_double(l1_rel(d, gt)) << ','
        << format_double(l1_inv(d, gt)) << ',' << format_double(estimate.valid_fraction()) << '\n';
  };
  row("fixed", result.fixed_band);
  for (std::size_t i = 0; i < result.narrow_band.size(); ++i) row("nb" + std::to_string(i + 1), result.narrow_band[i]);
}

MappingConfig mapping_config(const MapOptions& opts, const std::string& extractor) {
  MappingConfig cfg = opts.mapping;
  cfg.extraction.method = parse_extractor(extractor);
  return cfg;
}

MappingResult map_keyframe(const std::vector<PosedFrame>& frames, ImageCache& images, std::size_t kf,
                           const std::vector<Pose>& window_poses, const std::vector<std::size_t>& window,
                           const CameraIntrinsics& k, const MappingConfig& cfg) {
  std::vector<ViewFrame> views;
  for (std::size_t j = 0; j < window.size(); ++j) views.push_back({images.get(window[j]), window_poses[j]});
  const Image& ref_image = images.get(kf);
  const ReferenceView ref{ref_image, frames[kf].pose, k};
  return estimate_keyframe_depth(ref, views, cfg);
}

std::vector<std::size_t> mapping_keyframes(const std::vector<PosedFrame>& frames, int max_keyframes) {
  std::vector<Pose> poses;
  for (const auto& f : frames) poses.push_back(f.pose);
  std::vector<std::size_t> kfs = simulate_keyframe_policy(poses);
  if (max_keyframes > 0 && kfs.size() > static_cast<std::size_t>(max_keyframes)) {
    kfs.resize(static_cast<std::size_t>(max_keyframes));
  }
  return kfs;
}

}  // namespace

int run_map(const MapOptions& opts, std::ostream& log) {
  const TumSequence seq = load_tum_sequence(opts.sequence);
  const std::vector<PosedFrame> frames = posed_frames(seq, opts, log);
  const MappingConfig cfg = mapping_config(opts, opts.extractor);
  ImageCache images(frames);

  std::optional<Output> metrics;
  if (!opts.metrics.empty()) {
    metrics.emplace(opts.metrics);
    write_metric_header(metrics->stream(), false);
  }
  if (!opts.output.empty()) std::filesystem::create_directories(opts.output);

  for (const std::size_t kf : mapping_keyframes(frames, opts.max_keyframes)) {
    const auto window = window_for(kf, frames.size(), cfg.frames);
    std::vector<Pose> poses;
    for (const std::size_t j : window) poses.push_back(frames[j].pose);
    const MappingResult result = map_keyframe(frames, images, kf, poses, window, seq.intrinsics, cfg);
    if (!opts.output.empty()) {
      write_pfm(opts.output / (frames[kf].frame.rgb.stem().string() + ".pfm"), to_depth(result.final_estimate()));
    }
    if (metrics && frames[kf].frame.depth) {
      write_metric_rows(metrics->stream(), "", frames[kf], result, frames[kf].frame.load_depth());
    }
    log << "keyframe " << frames[kf].frame.rgb.stem().string() << ": " << window.size() << " frames, "
        << format_double(result.final_estimate().valid_fraction()) << " valid\n";
  }
  return kExitOk;
}

int run_noise_study(const NoiseStudyOptions& opts, std::ostream& log) {
  const TumSequence seq = load_tum_sequence(opts.map.sequence);
  const std::vector<PosedFrame> frames = posed_frames(seq, opts.map, log);
  ImageCache images(frames);
  Output out(opts.output);
  write_metric_header(out.stream(), true);

  const auto keyframes = mapping_keyframes(frames, opts.map.max_keyframes);
  for (const double std_dev : opts.stds) {
    for (const std::size_t kf : keyframes) {
      if (!frames[kf].frame.depth) raise(ErrorKind::kInvalidArgument, "noise study needs ground-truth depth");
      const DepthMap gt = frames[kf].frame.load_depth();
      const auto window = window_for(kf, frames.size(), opts.map.mapping.frames);
      std::vector<Pose> chain{frames[kf].pose};
      for (const std::size_t j : window) chain.push_back(frames[j].pose);
      // One noise draw per keyframe, shared by every extractor.
      const std::vector<Pose> noisy = perturb_poses(chain, std_dev, mix_seed(opts.seed, kf, 0));
      const std::vector<Pose> window_poses(noisy.begin() + 1, noisy.end());
      for (const std::string& name : opts.extractors) {
        const MappingConfig cfg = mapping_config(opts.map, name);
        const MappingResult result = map_keyframe(frames, images, kf, window_poses, window, seq.intrinsics, cfg);
        write_metric_rows(out.stream(), format_double(std_dev) + ',' + std::string(to_string(cfg.extraction.method)) + ',',
                          frames[kf], result, gt);
      }
    }
    log << "rel_std " << format_double(std_dev) << " done\n";
  }
  return kExitOk;
}

namespace {

DepthMap load_depth_any(const std::filesystem::path& path) {
  if (path.extension() == ".png") return read_depth_png(path);
  const MaskedMap m = read_pfm(path);
  DepthMap d(m.width(), m.height());
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x)
      if (m.valid(x, y)) d.set(x, y, m.at(x, y));
  return d;
}

std::vector<std::filesystem::path> depth_files(const std::filesystem::path& p) {
  std::vector<std::filesystem::path> out;
  if (std::filesystem::is_regular_file(p)) return {p};
  if (!std::filesystem::is_directory(p)) raise(ErrorKind::kMissingIndexFile, p.string());
  for (const auto& e : std::filesystem::directory_iterator(p)) {
    const auto ext = e.path().extension();
    if (ext == ".pfm" || ext == ".png") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

int run_eval(const EvalOptions& opts, std::ostream& log) {
  if (opts.estimate.empty() == opts.ground_truth.empty() && opts.estimate.empty() && opts.depth_estimate.empty()) {
    raise(ErrorKind::kInvalidArgument, "eval needs --estimate/--ground-truth or --depth-estimate/--depth-gt");
  }
  Output out(opts.output);
  out.stream() << "item,metric,value\n";
  if (!opts.estimate.empty() || !opts.ground_truth.empty()) {
    if (opts.estimate.empty() || opts.ground_truth.empty()) {
      raise(ErrorKind::kInvalidArgument, "trajectory evaluation needs both --estimate and --ground-truth");
    }
    const double rpe = translational_rpe_rmse(read_trajectory(opts.estimate), read_trajectory(opts.ground_truth),
                                              opts.interval);
    out.stream() << "trajectory,rpe_rmse," << format_double(rpe) << '\n';
  }
  if (!opts.depth_estimate.empty()) {
    if (opts.depth_ground_truth.empty()) raise(ErrorKind::kInvalidArgument, "depth evaluation needs --depth-gt");
    std::map<std::string, std::filesystem::path> gt;
    for (const auto& p : depth_files(opts.depth_ground_truth)) gt.emplace(p.stem().string(), p);
    double sums[3] = {0, 0, 0};
    std::size_t n = 0;
    for (const auto& est : depth_files(opts.depth_estimate)) {
      const auto it = gt.find(est.stem().string());
      if (it == gt.end()) {
        log << "warning: no ground truth for " << est.filename().string() << "\n";
        continue;
      }
      const DepthMap d = load_depth_any(est);
      const DepthMap g = load_depth_any(it->second);
      const double m[3] = {sc_inv(d, g), l1_rel(d, g), l1_inv(d, g)};
      const char* names[3] = {"sc_inv", "l1_rel", "l1_inv"};
      for (int i = 0; i < 3; ++i) {
        out.stream() << est.stem().string() << ',' << names[i] << ',' << format_double(m[i]) << '\n';
        sums[i] += m[i];
      }
      ++n;
    }
    if (n == 0) raise(ErrorKind::kInvalidArgument, "no depth map pairs matched by name");
    const char* names[3] = {"sc_inv", "l1_rel", "l1_inv"};
    for (int i = 0; i < 3; ++i) out.stream() << "mean," << names[i] << ',' << format_double(sums[i] / n) << '\n';
  }
  return kExitOk;
}

int run_synth_gen(const SynthOptions& opts, std::ostream& log) {
  if (opts.output.empty()) raise(ErrorKind::kInvalidArgument, "synth-gen needs --output");
  if (opts.frames < 1) raise(ErrorKind::kInvalidArgument, "synth-gen needs at least one frame");
  const CameraIntrinsics k = synthetic_intrinsics(opts.width, opts.height);

  std::vector<Pose> poses;
  if (opts.trajectory == "lateral") {
    poses = lateral_trajectory(opts.frames, opts.step);
  } else if (opts.trajectory == "orbit") {
    poses = orbit_trajectory(opts.frames, opts.step, 1.0);
  } else if (opts.trajectory == "wobble") {
    poses = wobble_trajectory(opts.frames, opts.step, 2.0, opts.seed);
  } else {
    raise(ErrorKind::kInvalidArgument, "unknown trajectory '" + opts.trajectory + "'");
  }

  SyntheticScene scene;
  if (opts.scene == "plane") {
    scene = textured_plane_scene(k, poses, 1.0, opts.seed);
  } else if (opts.scene == "two-plane") {
    scene = two_plane_scene(k, poses, 0.8, 1.5, opts.seed);
  } else if (opts.scene == "box") {
    scene = box_room_scene(k, poses, Eigen::Vector3d(1.5, 1.0, 2.0), opts.seed);
  } else if (opts.scene == "desk") {
    scene = desk_scene(k, poses, opts.seed);
  } else {
    raise(ErrorKind::kInvalidArgument, "unknown scene '" + opts.scene + "'");
  }

  std::vector<SequenceFrameData> frames;
  Trajectory gt;
  for (std::size_t i = 0; i < scene.poses.size(); ++i) {
    RenderSettings settings;
    settings.noise_std = opts.noise;
    settings.noise_seed = mix_seed(opts.seed, i, 1);
    RenderedView view = render_scene(scene, scene.poses[i], settings);
    frames.push_back({scene.timestamps[i], std::move(view.image), to_depth(view.inv_depth)});
    gt.push_back(TrajectoryRecord::from_pose(scene.timestamps[i], scene.poses[i]));
  }
  write_tum_sequence(opts.output, frames, k, gt);
  log << "wrote " << frames.size() << " frames to " << opts.output.string() << "\n";
  return kExitOk;
}

int run_gradcheck(const GradcheckOptions& opts, std::ostream& log) {
  if (opts.points < 1) raise(ErrorKind::kInvalidArgument, "gradcheck needs at least one point");
  const auto checks = check_all_losses(opts.points, opts.seed);
  Output out(opts.output);
  out.stream() << "loss,point,coordinate,analytic,numeric,rel_error,kink\n";
  std::map<std::string, double> worst;
  for (const LossCheck& c : checks) {
    double& w = worst[c.loss];
    w = std::max(w, c.check.max_relative_error);
    for (const CoordinateCheck& k : c.check.coordinates) {
      out.stream() << c.loss << ',' << c.point << ',' << k.index << ',' << format_double(k.analytic) << ','
                   << format_double(k.numeric) << ',' << format_double(k.relative_error) << ',' << (k.kink ? 1 : 0)
                   << '\n';
    }
  }
  bool ok = true;
  for (const auto& [loss, w] : worst) {
    log << loss << ": max relative error " << format_double(w) << "\n";
    ok = ok && w < opts.tolerance;
  }
  return ok ? kExitOk : kExitNumericalFailure;
}

}  // namespace kftam::cli
