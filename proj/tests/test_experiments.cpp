#include <gtest/gtest.h>

#include "lhbd/errors.hpp"
#include "lhbd/experiments.hpp"

namespace lhbd {
namespace {

CodecModels tiny_models(std::uint64_t seed) {
  Rng rng(seed);
  BFrameConfig c;
  c.flow = PyramidFlowConfig{3, 4, 3, 2};
  c.motion.filters = 6;
  c.motion.latent = 6;
  c.motion.hyper_latent = 4;
  c.residual = CoderConfig{3, 3, 6, 6, 4, false};
  c.mask = MaskNetConfig{4, 2};
  CodecModels m;
  m.keyframe = TransformCoder(CoderConfig{3, 3, 6, 6, 4, false}, rng);
  m.bframe = BFrameModel(c, rng);
  return m;
}

TEST(Experiments, SyntheticTestSetIsDeterministicAndLabelled) {
  const auto a = synthetic_test_set(32, 5, 1), b = synthetic_test_set(32, 5, 1);
  ASSERT_EQ(a.size(), 4u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].name, b[i].name);
    EXPECT_EQ(a[i].seq.size(), 5);
    EXPECT_EQ(a[i].seq.frames[3].pixels().vec(), b[i].seq.frames[3].pixels().vec());
  }
  EXPECT_FALSE(a.back().motion_heavy);
  EXPECT_THROW(directory_test_set("/nonexistent/set"), DataError);
}

TEST(Experiments, EvaluateModelsIsDriftFreeAndAccountsEveryFrame) {
  const auto set = synthetic_test_set(32, 5, 2);
  const PointResult r = evaluate_models(tiny_models(1), set, 4, "p");
  EXPECT_TRUE(r.drift_free);
  double bits = 0.0, frames = 0.0;
  for (const auto& ts : set) {
    ASSERT_EQ(r.logs.at(ts.name).size(), 5u);
    for (const FrameLog& l : r.logs.at(ts.name)) bits += l.bpp();
    frames += 5;
  }
  // Equal-sized sequences: pooled bpp is the mean of frame bpp.
  EXPECT_NEAR(r.point.bpp, bits / frames, 1e-12);
  EXPECT_GT(r.decode_seconds, 0.0);
}

TEST(Experiments, AllIntraCodesEveryFrameAsImage) {
  const auto set = synthetic_test_set(24, 3, 3);
  const PointResult r = evaluate_all_intra(tiny_models(2).keyframe, set, "intra");
  for (const auto& [name, logs] : r.logs) {
    ASSERT_EQ(logs.size(), 3u);
    for (const FrameLog& l : logs) {
      EXPECT_GT(l.bpp_image, 0.0);
      EXPECT_EQ(l.bpp_motion + l.bpp_residual, 0.0);
    }
  }
}

TEST(Experiments, IdenticalArmsGiveZeroBdRate) {
  std::vector<PointResult> arm;
  for (int i = 0; i < 4; ++i) {
    PointResult p;
    p.point = RDPoint{"x", 0.1 * (i + 1), 28.0 + 2.0 * i, 0.9 + 0.02 * i};
    arm.push_back(p);
  }
  const AblationRow row = compare_arms("mask", arm, arm);
  EXPECT_NEAR(row.bd_rate_psnr, 0.0, 1e-9);
  EXPECT_NEAR(row.bd_rate_poly, 0.0, 1e-9);
}

TEST(Experiments, ToggleOffChangesExactlyOneSetting) {
  const BFrameConfig base = BFrameConfig::desk();
  EXPECT_EQ(toggle_off(base, "subsampling").motion.subsample, 1);
  EXPECT_FALSE(toggle_off(base, "temporal_prediction").motion.temporal_prediction);
  EXPECT_EQ(toggle_off(base, "mask").fusion, FusionMode::average);
  const BFrameConfig ctx = toggle_off(base, "context");
  EXPECT_FALSE(ctx.motion.context_model);
  EXPECT_FALSE(ctx.residual.context_model);
  EXPECT_EQ(ctx.motion.subsample, base.motion.subsample);
  EXPECT_THROW(toggle_off(base, "gdn"), ConfigError);
}

}  // namespace
}  // namespace lhbd
