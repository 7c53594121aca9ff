#include <gtest/gtest.h>

#include <cmath>

#include "lhbd/compensation.hpp"
#include "lhbd/gradcheck.hpp"
#include "lhbd/optical_flow.hpp"

namespace lhbd {
namespace {

using ag::Var;

Frame random_frame(Rng& rng, int h, int w) {
  Frame f(h, w);
  for (auto& v : f.pixels().vec()) v = rng.uniform(0.0, 1.0);
  return f;
}

double psnr_of(const Tensor& a, const Tensor& b) {
  double se = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) se += (a[i] - b[i]) * (a[i] - b[i]);
  return 10.0 * std::log10(1.0 / (se / static_cast<double>(a.size())));
}

TEST(Fuse, EndpointsAndMidpoint) {
  Rng rng(1);
  const Frame a = random_frame(rng, 8, 9), b = random_frame(rng, 8, 9);
  EXPECT_EQ(fuse(a, b, constant_mask(1, 8, 9, 1.0)).pixels().vec(), a.pixels().vec());
  EXPECT_EQ(fuse(a, b, constant_mask(1, 8, 9, 0.0)).pixels().vec(), b.pixels().vec());
  const Frame mid = fuse(a, b, constant_mask(1, 8, 9, 0.5));
  for (std::size_t i = 0; i < mid.pixels().size(); ++i)
    EXPECT_DOUBLE_EQ(mid.pixels()[i], 0.5 * (a.pixels()[i] + b.pixels()[i]));
  const Var va = Var::constant(a.pixels()), vb = Var::constant(b.pixels());
  EXPECT_EQ(fuse(va, vb, Var::constant(constant_mask(1, 8, 9, 1.0))).value().vec(), a.pixels().vec());
  EXPECT_EQ(fuse(va, vb, Var::constant(constant_mask(1, 8, 9, 0.0))).value().vec(), b.pixels().vec());
}

TEST(Fuse, ConvexOnRandomInputs) {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const Frame a = random_frame(rng, 6, 5), b = random_frame(rng, 6, 5);
    Tensor m(Shape{1, 1, 6, 5});
    for (auto& v : m.vec()) v = rng.uniform(0.0, 1.0);
    const Frame f = fuse(a, b, m);
    for (std::size_t i = 0; i < f.pixels().size(); ++i) {
      EXPECT_GE(f.pixels()[i], std::min(a.pixels()[i], b.pixels()[i]));
      EXPECT_LE(f.pixels()[i], std::max(a.pixels()[i], b.pixels()[i]));
    }
  }
}

TEST(Fuse, RejectsBadMask) {
  Rng rng(3);
  const Frame a = random_frame(rng, 4, 4), b = random_frame(rng, 4, 4);
  EXPECT_THROW(fuse(a, b, constant_mask(1, 4, 4, 1.2)), std::invalid_argument);
  EXPECT_THROW(fuse(a, b, constant_mask(1, 4, 3, 0.5)), std::invalid_argument);
}

TEST(OracleMask, SelectsCloserAndBeatsAveraging) {
  Rng rng(4);
  const Frame truth = random_frame(rng, 8, 8);
  const Frame other = random_frame(rng, 8, 8);
  const Tensor pick_past = oracle_mask(truth, other, truth);
  for (double v : pick_past.vec()) EXPECT_EQ(v, 1.0);
  const Tensor tie = oracle_mask(truth, truth, truth);
  for (double v : tie.vec()) EXPECT_EQ(v, 0.5);
  for (int trial = 0; trial < 10; ++trial) {
    const Frame a = random_frame(rng, 8, 8), b = random_frame(rng, 8, 8), t = random_frame(rng, 8, 8);
    const double oracle = psnr_of(fuse(a, b, oracle_mask(a, b, t)).pixels(), t.pixels());
    const double avg = psnr_of(fuse(a, b, constant_mask(1, 8, 8, 0.5)).pixels(), t.pixels());
    EXPECT_GE(oracle, avg);
  }
}

TEST(OracleMask, OcclusionSyntheticGainsOverAveraging) {
  SyntheticSpec spec;
  spec.kind = SyntheticKind::occlusion;
  const auto seq = synth_sequence(spec);
  const Frame wp = backward_warp(seq.frames[0], FlowField{synth_flow(spec, 4, 0), 4, 0});
  const Frame wf = backward_warp(seq.frames[8], FlowField{synth_flow(spec, 4, 8), 4, 8});
  const Frame& t = seq.frames[4];
  const double oracle = psnr_of(fuse(wp, wf, oracle_mask(wp, wf, t)).pixels(), t.pixels());
  const double avg = psnr_of(fuse(wp, wf, constant_mask(1, 64, 64, 0.5)).pixels(), t.pixels());
  EXPECT_GT(oracle, avg + 0.5);
}

TEST(MaskNet, StartsAtAverageAndStaysInRange) {
  Rng rng(5);
  MaskNet net(MaskNetConfig{4, 3}, rng);
  const Frame a = random_frame(rng, 13, 10), b = random_frame(rng, 13, 10);
  const Var m = net.forward(Var::constant(a.pixels()), Var::constant(b.pixels()));
  EXPECT_EQ(m.shape(), (Shape{1, 1, 13, 10}));
  for (double v : m.value().vec()) EXPECT_EQ(v, 0.5);
  nn::ParamList params;
  net.collect("mask", params);
  for (auto& p : params)
    for (auto& v : p.var->mutable_value().vec()) v += rng.uniform(-3, 3);
  const Var trained = net.forward(Var::constant(a.pixels()), Var::constant(b.pixels()));
  for (double v : trained.value().vec()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(MaskNet, GradientsMatchFiniteDifferences) {
  Rng rng(6);
  MaskNet net(MaskNetConfig{3, 2}, rng);
  nn::ParamList params;
  net.collect("mask", params);
  for (auto& p : params)
    for (auto& v : p.var->mutable_value().vec()) v += rng.uniform(-0.2, 0.2);
  Var a = Var::parameter(random_frame(rng, 8, 6).pixels());
  Var b = Var::parameter(random_frame(rng, 8, 6).pixels());
  const Var t = Var::constant(random_frame(rng, 8, 6).pixels());
  auto loss = [&] { return ag::mse(fuse(a, b, net.forward(a, b)), t); };
  std::vector<std::pair<std::string, Var*>> inputs{{"a", &a}, {"b", &b}};
  for (auto& p : params) inputs.emplace_back(p.name, p.var);
  const auto r = check_gradients(loss, inputs, rng, 1e-6, 6, 1e-7);
  EXPECT_LT(r.max_rel_error, 1e-3) << r.worst_input;
}

}  // namespace
}  // namespace lhbd
