#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "kftam/costvolume.hpp"
#include "kftam/depthestim.hpp"
#include "kftam/synth.hpp"
#include "support/test_support.hpp"

namespace kftam {
namespace {

using testing::expect_error;

struct PlaneSequence {
  CameraIntrinsics k;
  RenderedView ref;
  Pose ref_pose;
  std::vector<ViewFrame> frames;
};

PlaneSequence plane_sequence(int frames, double step) {
  PlaneSequence s;
  s.k = synthetic_intrinsics(96, 72);
  const SyntheticScene scene = textured_plane_scene(s.k, lateral_trajectory(frames + 1, step), 1.0, 5);
  s.ref_pose = scene.poses[0];
  s.ref = render_scene(scene, s.ref_pose);
  for (int i = 1; i <= frames; ++i) {
    s.frames.push_back({render_scene(scene, scene.poses[static_cast<std::size_t>(i)]).image,
                        scene.poses[static_cast<std::size_t>(i)]});
  }
  return s;
}

TEST(FixedBand, EndpointsAndSpacing) {
  const LabelSet labels = fixed_band_labels(0.01, 2.5, 32);
  ASSERT_EQ(labels.size(), 32);
  EXPECT_EQ(labels.fixed_labels().front(), 0.01);
  EXPECT_EQ(labels.fixed_labels().back(), 2.5);
  EXPECT_NEAR(labels.fixed_labels()[1], 0.0903225806451613, 1e-15);
  for (int l = 1; l < 32; ++l) EXPECT_GT(labels.value(3, 4, l), labels.value(3, 4, l - 1));
  EXPECT_TRUE(labels.valid(0, 0));
}

TEST(FixedBand, TwoLabelsAreTheEndpoints) {
  const LabelSet labels = fixed_band_labels(0.5, 1.5, 2);
  EXPECT_EQ(labels.value(0, 0, 0), 0.5);
  EXPECT_EQ(labels.value(0, 0, 1), 1.5);
}

TEST(FixedBand, RejectsInvalidRanges) {
  expect_error(ErrorKind::kInvalidRange, [] { fixed_band_labels(0.0, 2.5, 32); });
  expect_error(ErrorKind::kInvalidRange, [] { fixed_band_labels(2.5, 0.01, 32); });
  expect_error(ErrorKind::kInvalidRange, [] { fixed_band_labels(0.01, 2.5, 1); });
}

TEST(NarrowBand, LabelsAroundUnitDepth) {
  const LabelSet labels = narrow_band_labels(InverseDepthMap::constant(4, 3, 1.0));
  ASSERT_EQ(labels.size(), 32);
  EXPECT_NEAR(labels.value(2, 1, 0), 0.8, 1e-15);
  EXPECT_NEAR(labels.value(2, 1, 16), 1.0, 1e-15);
  EXPECT_NEAR(labels.value(2, 1, 31), 1.1875, 1e-15);
}

TEST(NarrowBand, ScalesWithCentreAndMasksInvalidPixels) {
  InverseDepthMap prev = InverseDepthMap::constant(4, 3, 2.0);
  prev.set(1, 1, 0.5);
  prev.invalidate(3, 2);
  const LabelSet labels = narrow_band_labels(prev, 0.02, 8);
  for (int l = 0; l < 8; ++l) {
    EXPECT_NEAR(labels.value(0, 0, l), 4.0 * labels.value(1, 1, l), 1e-12);
    EXPECT_NEAR(labels.value(0, 0, l), 2.0 * (1.0 + (l - 4) * 0.02), 1e-12);
  }
  EXPECT_TRUE(labels.valid(0, 0));
  EXPECT_FALSE(labels.valid(3, 2));
}

TEST(NarrowBand, RejectsBadParameters) {
  const InverseDepthMap prev = InverseDepthMap::constant(4, 3, 1.0);
  expect_error(ErrorKind::kInvalidArgument, [&] { narrow_band_labels(prev, 0.0, 32); });
  expect_error(ErrorKind::kInvalidArgument, [&] { narrow_band_labels(prev, 0.01, 1); });
}

TEST(SadPatch, IdenticalAndOppositeImages) {
  std::mt19937_64 rng(1);
  const Image a = testing::random_image(rng, 8, 6);
  const std::vector<std::uint8_t> mask(48, 1);
  EXPECT_EQ(*sad_patch_cost(a, a, mask, 3, 3), 0.0);
  EXPECT_DOUBLE_EQ(*sad_patch_cost(Image(8, 6, 1, 1.0), Image(8, 6, 1, 0.0), mask, 0, 5), 1.0);
}

TEST(SadPatch, MatchesDirectLoop) {
  std::mt19937_64 rng(2);
  const int w = 11, h = 7;
  const Image a = testing::random_image(rng, w, h);
  const Image b = testing::random_image(rng, w, h);
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(w * h));
  std::bernoulli_distribution keep(0.8);
  for (auto& m : mask) m = keep(rng) ? 1 : 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double sum = 0.0;
      int n = 0;
      for (int py = y - 1; py <= y + 1; ++py)
        for (int px = x - 1; px <= x + 1; ++px) {
          const int cx = px < 0 ? 0 : (px >= w ? w - 1 : px);
          const int cy = py < 0 ? 0 : (py >= h ? h - 1 : py);
          if (!mask[static_cast<std::size_t>(cy * w + cx)]) continue;
          sum += std::abs(a.at(cx, cy) - b.at(cx, cy));
          ++n;
        }
      const auto got = sad_patch_cost(a, b, mask, x, y);
      if (n < 5) {
        EXPECT_FALSE(got.has_value()) << x << "," << y;
      } else {
        ASSERT_TRUE(got.has_value()) << x << "," << y;
        EXPECT_NEAR(*got, sum / n, 1e-15);
      }
    }
}

TEST(SadPatch, TooFewValidEntries) {
  const Image a(5, 5, 1, 0.2);
  std::vector<std::uint8_t> mask(25, 0);
  for (int i : {6, 7, 8, 11}) mask[static_cast<std::size_t>(i)] = 1;
  EXPECT_FALSE(sad_patch_cost(a, a, mask, 2, 2).has_value());
  mask[12] = 1;
  EXPECT_TRUE(sad_patch_cost(a, a, mask, 2, 2).has_value());
}

TEST(Confidence, FlatCurveHasNoConfidence) {
  const std::vector<double> flat(8, 0.3);
  EXPECT_EQ(confidence_weight(flat, 50.0), 0.0);
}

TEST(Confidence, SeparatedMinimumIsConfident) {
  std::vector<double> costs(16, 1.0);
  costs[5] = 0.0;
  EXPECT_NEAR(confidence_weight(costs, 50.0), 1.0, 1e-20);
}

TEST(Confidence, ThreeLabelClosedForm) {
  const std::vector<double> costs{0.1, 0.2, 0.4};
  const double expected = 1.0 - 0.5 * (std::exp(-50.0 * 0.01) + std::exp(-50.0 * 0.09));
  EXPECT_NEAR(confidence_weight(costs, 50.0), expected, 1e-15);
}

TEST(Confidence, InvariantToCostOffset) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 0.5);
  std::vector<double> costs(32), shifted(32);
  for (std::size_t i = 0; i < costs.size(); ++i) {
    costs[i] = u(rng);
    shifted[i] = costs[i] + 0.25;
  }
  EXPECT_NEAR(confidence_weight(costs, 50.0), confidence_weight(shifted, 50.0), 1e-12);
}

TEST(Confidence, TieUsesFirstMinimum) {
  // With a tie the other minimum contributes exp(0) = 1.
  const std::vector<double> costs{0.0, 5.0, 0.0};
  EXPECT_NEAR(confidence_weight(costs, 50.0), 0.5, 1e-15);
}

TEST(Volume, IdenticalFrameHasZeroCostEverywhereObserved) {
  const PlaneSequence s = plane_sequence(1, 0.02);
  const std::vector<ViewFrame> same{{s.ref.image, s.ref_pose}};
  const CostVolume vol =
      accumulate_cost_volume(ReferenceView{s.ref.image, s.ref_pose, s.k}, same, fixed_band_labels(0.5, 1.5, 8));
  for (int y = 0; y < vol.height(); ++y)
    for (int x = 0; x < vol.width(); ++x) {
      if (!vol.valid(x, y)) continue;
      // A zero-motion frame gives a flat curve, so the confidence weight
      // zeroes the contribution as well.
      for (int l = 0; l < 8; ++l) ASSERT_EQ(vol.at(x, y, l), 0.0);
    }
}

TEST(Volume, AccumulationIsAdditiveOverFrames) {
  const PlaneSequence s = plane_sequence(4, 0.02);
  const ReferenceView ref{s.ref.image, s.ref_pose, s.k};
  const LabelSet labels = fixed_band_labels(0.3, 1.8, 12);
  const std::span<const ViewFrame> all(s.frames);
  const CostVolume both = accumulate_cost_volume(ref, all, labels);
  const CostVolume first = accumulate_cost_volume(ref, all.subspan(0, 2), labels);
  const CostVolume second = accumulate_cost_volume(ref, all.subspan(2), labels);
  int checked = 0;
  for (int y = 0; y < both.height(); ++y)
    for (int x = 0; x < both.width(); ++x) {
      ASSERT_EQ(both.observations(x, y), first.observations(x, y) + second.observations(x, y));
      for (int l = 0; l < 12; ++l) {
        ASSERT_NEAR(both.at(x, y, l), first.at(x, y, l) + second.at(x, y, l), 1e-12);
      }
      ++checked;
    }
  EXPECT_EQ(checked, 96 * 72);
}

TEST(Volume, StrideSkipsFrames) {
  const PlaneSequence s = plane_sequence(4, 0.02);
  const ReferenceView ref{s.ref.image, s.ref_pose, s.k};
  const LabelSet labels = fixed_band_labels(0.3, 1.8, 12);
  CostVolumeOptions opts;
  opts.frame_stride = 2;
  const CostVolume strided = accumulate_cost_volume(ref, s.frames, labels, opts);
  const std::vector<ViewFrame> picked{s.frames[0], s.frames[2]};
  const CostVolume direct = accumulate_cost_volume(ref, picked, labels);
  for (int y = 0; y < 72; y += 7)
    for (int x = 0; x < 96; x += 5)
      for (int l = 0; l < 12; ++l) EXPECT_EQ(strided.at(x, y, l), direct.at(x, y, l));
}

TEST(Volume, EmptyFrameListIsAnError) {
  const PlaneSequence s = plane_sequence(1, 0.02);
  expect_error(ErrorKind::kEmptyFrameList, [&] {
    accumulate_cost_volume(ReferenceView{s.ref.image, s.ref_pose, s.k}, std::span<const ViewFrame>{},
                           fixed_band_labels(0.5, 1.5, 8));
  });
}

TEST(Volume, MinimumSitsAtPlaneDepth) {
  const PlaneSequence s = plane_sequence(5, 0.02);
  const LabelSet labels = fixed_band_labels(0.01, 2.5, 32);
  const CostVolume vol = accumulate_cost_volume(ReferenceView{s.ref.image, s.ref_pose, s.k}, s.frames, labels);
  const InverseDepthMap wta = winner_take_all(vol);
  const double step = (2.5 - 0.01) / 31.0;
  int valid = 0, close = 0;
  for (int y = 0; y < 72; ++y)
    for (int x = 0; x < 96; ++x) {
      if (!wta.valid(x, y)) continue;
      ++valid;
      if (std::abs(wta.at(x, y) - s.ref.inv_depth.at(x, y)) <= step) ++close;
    }
  ASSERT_GT(valid, 96 * 72 / 2);
  EXPECT_GE(static_cast<double>(close) / valid, 0.9);
}

TEST(Volume, DebugDumpLayout) {
  const PlaneSequence s = plane_sequence(1, 0.02);
  const CostVolume vol = accumulate_cost_volume(ReferenceView{s.ref.image, s.ref_pose, s.k}, s.frames,
                                                fixed_band_labels(0.5, 1.5, 4));
  const testing::TempDir dir("vol");
  write_cost_volume(dir / "vol.bin", vol);
  std::ifstream in(dir / "vol.bin", std::ios::binary);
  std::string magic, kind;
  int version = 0, w = 0, h = 0, n = 0;
  double lo = 0.0, hi = 0.0;
  in >> magic >> version >> w >> h >> n >> kind >> lo >> hi;
  EXPECT_EQ(magic, "KFTAMVOL");
  EXPECT_EQ(version, 1);
  EXPECT_EQ(w, 96);
  EXPECT_EQ(h, 72);
  EXPECT_EQ(n, 4);
  EXPECT_EQ(kind, "fixed");
  EXPECT_DOUBLE_EQ(lo, 0.5);
  EXPECT_DOUBLE_EQ(hi, 1.5);
  in.ignore(1);
  const auto header = static_cast<std::uintmax_t>(in.tellg());
  EXPECT_EQ(std::filesystem::file_size(dir / "vol.bin"), header + 96u * 72u * 4u * 4u + 96u * 72u * 4u);
}

}  // namespace
}  // namespace kftam
