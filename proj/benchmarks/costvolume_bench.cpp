#include <benchmark/benchmark.h>

#include "kftam/costvolume.hpp"
#include "kftam/depthestim.hpp"
#include "kftam/synth.hpp"

namespace {

using namespace kftam;

struct Window {
  CameraIntrinsics k;
  RenderedView ref;
  Pose ref_pose;
  std::vector<ViewFrame> frames;
};

Window make_window(int width, int height, int frames) {
  Window w;
  w.k = synthetic_intrinsics(width, height);
  const SyntheticScene scene = desk_scene(w.k, wobble_trajectory(frames + 1, 0.03, 1.0, 1), 2);
  w.ref_pose = scene.poses[0];
  w.ref = render_scene(scene, w.ref_pose);
  for (std::size_t i = 1; i < scene.poses.size(); ++i)
    w.frames.push_back({render_scene(scene, scene.poses[i]).image, scene.poses[i]});
  return w;
}

void BM_FixedBandVolume(benchmark::State& state) {
  const Window w = make_window(static_cast<int>(state.range(0)), static_cast<int>(state.range(0)) * 3 / 4, 9);
  const LabelSet labels = fixed_band_labels(0.01, 2.5, 32);
  for (auto _ : state) {
    benchmark::DoNotOptimize(accumulate_cost_volume(ReferenceView{w.ref.image, w.ref_pose, w.k}, w.frames, labels));
  }
  state.SetItemsProcessed(state.iterations() * w.k.width * w.k.height * 32 * 9);
}
BENCHMARK(BM_FixedBandVolume)->Arg(80)->Arg(160)->Unit(benchmark::kMillisecond);

void BM_NarrowBandRefine(benchmark::State& state) {
  const Window w = make_window(160, 120, 9);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        narrow_band_refine(ReferenceView{w.ref.image, w.ref_pose, w.k}, w.frames, w.ref.inv_depth, 1));
  }
}
BENCHMARK(BM_NarrowBandRefine)->Unit(benchmark::kMillisecond);

void BM_SgmAggregate(benchmark::State& state) {
  const Window w = make_window(160, 120, 4);
  const CostVolume vol = normalize_by_observations(accumulate_cost_volume(
      ReferenceView{w.ref.image, w.ref_pose, w.k}, w.frames, fixed_band_labels(0.01, 2.5, 32)));
  ExtractionConfig cfg;
  cfg.directions = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(sgm_aggregate(vol, cfg));
}
BENCHMARK(BM_SgmAggregate)->Arg(4)->Arg(16)->Unit(benchmark::kMillisecond);

}  // namespace
