#include "cli.hpp"

#include <CLI11.hpp>
#include <ostream>

#include "commands.hpp"
#include "kftam/errors.hpp"

namespace kftam::cli {

namespace {

// Observation-normalized costs differ by a few hundredths between labels;
// at temperature 1 the softmax is nearly uniform.
constexpr double kCliSoftArgminTemperature = 0.01;

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kTrackingLost:
      return kExitTrackingLost;
    case ErrorKind::kAngleOutOfRange:
    case ErrorKind::kDomainError:
    case ErrorKind::kSingularCovariance:
    case ErrorKind::kNoValidPixels:
    case ErrorKind::kNonPositiveDepth:
    case ErrorKind::kInsufficientOverlapInTime:
    case ErrorKind::kEmptyHypothesisSet:
      return kExitNumericalFailure;
    default:
      return kExitInputError;
  }
}

void add_tracker_options(CLI::App* cmd, TrackOptions& o) {
  TrackerConfig& t = o.tracker;
  cmd->add_option("--sequence", o.sequence, "TUM-format sequence directory")->required();
  cmd->add_option("--output", o.output, "trajectory file to write")->capture_default_str();
  cmd->add_option("--diagnostics", o.diagnostics, "per-level diagnostics CSV");
  cmd->add_option("--max-frames", o.max_frames, "track only the first N frames (0 = all)")->capture_default_str();
  cmd->add_option("--guess", o.guess, "initial guess: previous | constant-velocity")->capture_default_str();
  cmd->add_option("--levels", t.levels, "pyramid levels")->capture_default_str();
  cmd->add_option("--active-levels", t.active_levels, "finest levels actually tracked")->capture_default_str();
  cmd->add_option("--estimator", t.estimator, "increment estimator")->capture_default_str();
  cmd->add_option("--hypotheses", t.hypotheses, "hypotheses per level")->capture_default_str();
  cmd->add_option("--iterations", t.max_iterations, "Gauss-Newton iterations per level")->capture_default_str();
  cmd->add_option("--convergence", t.convergence_threshold, "update-norm convergence threshold")->capture_default_str();
  cmd->add_option("--perturb-rot-deg", t.perturb_rotation_deg, "hypothesis start std, rotation")->capture_default_str();
  cmd->add_option("--perturb-trans", t.perturb_translation_m, "hypothesis start std, translation (m)")
      ->capture_default_str();
  cmd->add_option("--kf-rot-deg", t.keyframe.rotation_threshold_deg, "keyframe rotation threshold")
      ->capture_default_str();
  cmd->add_option("--kf-trans", t.keyframe.translation_threshold_m, "keyframe translation threshold (m)")
      ->capture_default_str();
  cmd->add_option("--seed", t.seed, "random seed")->capture_default_str();
}

void add_mapping_options(CLI::App* cmd, MapOptions& o, bool with_extractor) {
  MappingConfig& m = o.mapping;
  cmd->add_option("--sequence", o.sequence, "TUM-format sequence directory")->required();
  cmd->add_option("--poses", o.poses, "trajectory file (default: the sequence ground truth)");
  cmd->add_option("--max-frames", o.max_frames, "use only the first N frames (0 = all)")->capture_default_str();
  cmd->add_option("--max-keyframes", o.max_keyframes, "map at most N keyframes (0 = all)")->capture_default_str();
  cmd->add_option("--frames", m.frames, "window size including the keyframe")->capture_default_str();
  cmd->add_option("--labels", m.labels, "fixed-band labels")->capture_default_str();
  cmd->add_option("--d-min", m.d_min, "smallest inverse depth (1/m)")->capture_default_str();
  cmd->add_option("--d-max", m.d_max, "largest inverse depth (1/m)")->capture_default_str();
  cmd->add_option("--alpha-conf", m.volume.alpha_conf, "confidence sharpness")->capture_default_str();
  cmd->add_option("--frame-stride", m.volume.frame_stride, "use every k-th window frame")->capture_default_str();
  if (with_extractor) {
    cmd->add_option("--extractor", o.extractor, "wta | soft-argmin | sgm+wta")->capture_default_str();
  }
  cmd->add_option("--temperature", m.extraction.temperature, "soft argmin temperature")->capture_default_str();
  cmd->add_option("--p1", m.extraction.p1, "SGM small-jump penalty")->capture_default_str();
  cmd->add_option("--p2", m.extraction.p2, "SGM large-jump penalty")->capture_default_str();
  cmd->add_option("--directions", m.extraction.directions, "SGM scan directions")->capture_default_str();
  cmd->add_flag("--subpixel,!--no-subpixel", m.extraction.subpixel, "parabolic sub-label refinement")
      ->default_str(m.extraction.subpixel ? "true" : "false");
  cmd->add_flag("--median,!--no-median", m.extraction.median_filter, "3x3 median on the fixed-band result")
      ->default_str(m.extraction.median_filter ? "true" : "false");
  cmd->add_option("--nb-iters", m.nb_iterations, "narrow-band refinement iterations")->capture_default_str();
  cmd->add_option("--nb-sigma", m.narrow_band.sigma, "narrow-band relative spacing")->capture_default_str();
  cmd->add_option("--nb-labels", m.narrow_band.labels, "narrow-band labels")->capture_default_str();
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& log) {
  CLI::App app{"Keyframe tracking and mapping toolkit", "kftam"};
  app.set_config("--config", "", "INI file with one [section] per subcommand; command-line values win");
  app.require_subcommand(1);

  TrackOptions track;
  MapOptions map;
  EvalOptions eval;
  NoiseStudyOptions noise;
  SynthOptions synth;
  GradcheckOptions grad;
  map.mapping.extraction.subpixel = true;
  noise.map.mapping.extraction.subpixel = true;
  map.mapping.extraction.temperature = kCliSoftArgminTemperature;
  noise.map.mapping.extraction.temperature = kCliSoftArgminTemperature;

  auto* track_cmd = app.add_subcommand("track", "track a sequence against keyframes, write the trajectory");
  add_tracker_options(track_cmd, track);

  auto* map_cmd = app.add_subcommand("map", "estimate keyframe depth from posed frames");
  add_mapping_options(map_cmd, map, true);
  map_cmd->add_option("--output", map.output, "directory for per-keyframe depth PFMs");
  map_cmd->add_option("--metrics", map.metrics, "metrics CSV against the sequence depth");

  auto* eval_cmd = app.add_subcommand("eval", "trajectory drift and depth metrics as CSV");
  eval_cmd->add_option("--estimate", eval.estimate, "estimated trajectory");
  eval_cmd->add_option("--ground-truth", eval.ground_truth, "ground-truth trajectory");
  eval_cmd->add_option("--interval", eval.interval, "RPE interval (s)")->capture_default_str();
  eval_cmd->add_option("--depth-estimate", eval.depth_estimate, "depth PFM file or directory");
  eval_cmd->add_option("--depth-gt", eval.depth_ground_truth, "ground-truth depth file or directory (PFM or PNG)");
  eval_cmd->add_option("--output", eval.output, "metrics CSV (default stdout)");

  auto* noise_cmd = app.add_subcommand("noise-study", "depth error of each extractor under growing pose noise");
  add_mapping_options(noise_cmd, noise.map, false);
  noise_cmd->add_option("--std", noise.stds, "relative noise levels")->delimiter(',')->capture_default_str();
  noise_cmd->add_option("--extractors", noise.extractors, "extractors to compare")->delimiter(',')
      ->capture_default_str();
  noise_cmd->add_option("--seed", noise.seed, "noise seed")->capture_default_str();
  noise_cmd->add_option("--output", noise.output, "CSV output (default stdout)");

  auto* synth_cmd = app.add_subcommand("synth-gen", "render a synthetic TUM-format sequence");
  synth_cmd->add_option("--output", synth.output, "sequence directory")->required();
  synth_cmd->add_option("--scene", synth.scene, "plane | two-plane | box | desk")->capture_default_str();
  synth_cmd->add_option("--trajectory", synth.trajectory, "lateral | orbit | wobble")->capture_default_str();
  synth_cmd->add_option("--frames", synth.frames, "frame count")->capture_default_str();
  synth_cmd->add_option("--width", synth.width, "image width")->capture_default_str();
  synth_cmd->add_option("--height", synth.height, "image height")->capture_default_str();
  synth_cmd->add_option("--step", synth.step, "per-frame step (m, or degrees for orbit)")->capture_default_str();
  synth_cmd->add_option("--noise", synth.noise, "image noise std")->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed, "texture and noise seed")->capture_default_str();

  auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference check of every loss gradient");
  grad_cmd->add_option("--points", grad.points, "random points per loss")->capture_default_str();
  grad_cmd->add_option("--seed", grad.seed, "random seed")->capture_default_str();
  grad_cmd->add_option("--tolerance", grad.tolerance, "maximum relative error")->capture_default_str();
  grad_cmd->add_option("--output", grad.output, "CSV output (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    log << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    log << "error: " << e.what() << "\n";
    return e.get_exit_code() == 0 ? kExitOk : kExitInputError;
  }

  for (const CLI::App* sub : app.get_subcommands()) log << "# resolved configuration\n" << sub->config_to_str(true, false);
  try {
    if (track_cmd->parsed()) return run_track(track, log);
    if (map_cmd->parsed()) return run_map(map, log);
    if (eval_cmd->parsed()) return run_eval(eval, log);
    if (noise_cmd->parsed()) return run_noise_study(noise, log);
    if (synth_cmd->parsed()) return run_synth_gen(synth, log);
    if (grad_cmd->parsed()) return run_gradcheck(grad, log);
  } catch (const Error& e) {
    log << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    log << "error: " << e.what() << "\n";
    return kExitInputError;
  }
  return kExitInputError;
}

}  // namespace kftam::cli
