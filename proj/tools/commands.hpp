#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "kftam/mapping.hpp"
#include "kftam/tracker.hpp"

namespace kftam::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitInputError = 2,
  kExitTrackingLost = 3,
  kExitNumericalFailure = 4,
};

struct TrackOptions {
  std::filesystem::path sequence;
  std::filesystem::path output = "trajectory.txt";
  std::filesystem::path diagnostics;
  int max_frames = 0;
  std::string guess = "previous";
  TrackerConfig tracker;
};

struct MapOptions {
  std::filesystem::path sequence;
  std::filesystem::path poses;
  std::filesystem::path output;
  std::filesystem::path metrics;
  int max_frames = 0;
  int max_keyframes = 0;
  std::string extractor = "wta";
  MappingConfig mapping;
};

struct EvalOptions {
  std::filesystem::path estimate;
  std::filesystem::path ground_truth;
  double interval = 1.0;
  std::filesystem::path depth_estimate;
  std::filesystem::path depth_ground_truth;
  std::filesystem::path output;
};

struct NoiseStudyOptions {
  MapOptions map;
  std::vector<double> stds{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  std::vector<std::string> extractors{"wta", "soft-argmin", "sgm+wta"};
  std::uint64_t seed = 0;
  std::filesystem::path output;
};

struct SynthOptions {
  std::filesystem::path output;
  std::string scene = "desk";
  std::string trajectory = "lateral";
  int frames = 20;
  int width = 160;
  int height = 120;
  double step = 0.01;
  double noise = 0.0;
  std::uint64_t seed = 1;
};

struct GradcheckOptions {
  int points = 100;
  std::uint64_t seed = 0;
  double tolerance = 1e-4;
  std::filesystem::path output;
};

int run_track(const TrackOptions& opts, std::ostream& log);
int run_map(const MapOptions& opts, std::ostream& log);
int run_eval(const EvalOptions& opts, std::ostream& log);
int run_noise_study(const NoiseStudyOptions& opts, std::ostream& log);
int run_synth_gen(const SynthOptions& opts, std::ostream& log);
int run_gradcheck(const GradcheckOptions& opts, std::ostream& log);

}  // namespace kftam::cli
