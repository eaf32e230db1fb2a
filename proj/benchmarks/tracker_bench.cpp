#include <benchmark/benchmark.h>

#include "kftam/synth.hpp"
#include "kftam/tracker.hpp"

namespace {

using namespace kftam;

struct TrackingCase {
  CameraIntrinsics k = synthetic_intrinsics(160, 120);
  SyntheticScene scene = desk_scene(k, wobble_trajectory(2, 0.02, 1.0, 5), 6);
  RenderedView key = render_scene(scene, scene.poses[0]);
  Image current = render_scene(scene, scene.poses[1]).image;
  Keyframe keyframe{key.image, key.inv_depth, scene.poses[0], k, 0};
};

void BM_GnEstimate(benchmark::State& state) {
  const TrackingCase c;
  GnOptions opts;
  opts.hypotheses = static_cast<int>(state.range(0));
  const PhotometricGnEstimator gn(opts);
  for (auto _ : state) benchmark::DoNotOptimize(gn.estimate({c.current, c.key.image, c.key.inv_depth, c.k, 1}));
}
BENCHMARK(BM_GnEstimate)->Arg(1)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_TrackFrame(benchmark::State& state) {
  const TrackingCase c;
  TrackerConfig cfg;
  cfg.hypotheses = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(track_frame(c.keyframe, c.current, c.scene.poses[0], cfg));
}
BENCHMARK(BM_TrackFrame)->Arg(8)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_RenderVirtualKeyframe(benchmark::State& state) {
  const TrackingCase c;
  for (auto _ : state) benchmark::DoNotOptimize(render_virtual_keyframe(c.keyframe, c.scene.poses[1]));
}
BENCHMARK(BM_RenderVirtualKeyframe)->Unit(benchmark::kMicrosecond);

}  // namespace
