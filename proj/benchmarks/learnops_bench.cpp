#include <benchmark/benchmark.h>

#include <random>

#include "kftam/bessel.hpp"
#include "kftam/learnops.hpp"

namespace {

using namespace kftam;

void BM_BesselK(benchmark::State& state) {
  const double x = static_cast<double>(state.range(0)) / 10.0;
  for (auto _ : state) benchmark::DoNotOptimize(bessel_k(2.0, x));
}
BENCHMARK(BM_BesselK)->Arg(1)->Arg(15)->Arg(100);

void BM_LaplaceLoss(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 0.01);
  std::vector<Twist> samples(64);
  for (Twist& s : samples) s = Twist::from_vector(Vector6d::NullaryExpr([&] { return n(rng); }));
  const Vector6d x = Vector6d::Constant(0.005);
  for (auto _ : state) benchmark::DoNotOptimize(laplace_uncertainty_loss(samples, x));
}
BENCHMARK(BM_LaplaceLoss)->Unit(benchmark::kMicrosecond);

void BM_ScaleInvariantGradientLoss(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.3, 2.0);
  InverseDepthMap d(320, 240), gt(320, 240);
  for (int y = 0; y < 240; ++y)
    for (int x = 0; x < 320; ++x) {
      d.set(x, y, u(rng));
      gt.set(x, y, u(rng));
    }
  for (auto _ : state) benchmark::DoNotOptimize(scale_invariant_gradient_loss(d, gt));
}
BENCHMARK(BM_ScaleInvariantGradientLoss)->Unit(benchmark::kMillisecond);

}  // namespace
