#include <gtest/gtest.h>

#include "lhbd/kernels.hpp"
#include "lhbd/random.hpp"

namespace lhbd::kernels {
namespace {

Tensor random_tensor(Shape s, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(s);
  for (auto& v : t.vec()) v = rng.uniform(lo, hi);
  return t;
}

struct ConvCase {
  int n, cin, cout, h, w, k, stride;
};

class ConvParity : public ::testing::TestWithParam<ConvCase> {};

TEST_P(ConvParity, ParallelMatchesReference) {
  const ConvCase c = GetParam();
  Rng rng(42);
  const ConvGeometry g{c.stride, c.k / 2};
  const Tensor x = random_tensor(Shape{c.n, c.cin, c.h, c.w}, rng);
  const Tensor wt = random_tensor(Shape{c.cout, c.cin, c.k, c.k}, rng);
  const Tensor b = random_tensor(Shape{1, c.cout, 1, 1}, rng);

  const Tensor y = conv2d_forward(x, wt, b, g);
  EXPECT_LT(max_abs_diff(y, reference::conv2d_forward(x, wt, b, g)), 1e-12);

  const Tensor gy = random_tensor(y.shape(), rng);
  EXPECT_LT(max_abs_diff(conv2d_backward_input(gy, wt, x.shape(), g),
                         reference::conv2d_backward_input(gy, wt, x.shape(), g)),
            1e-12);
  EXPECT_LT(max_abs_diff(conv2d_backward_weight(x, gy, wt.shape(), g),
                         reference::conv2d_backward_weight(x, gy, wt.shape(), g)),
            1e-11);
}

INSTANTIATE_TEST_SUITE_P(Shapes, ConvParity,
                         ::testing::Values(ConvCase{1, 3, 4, 8, 8, 3, 1}, ConvCase{2, 2, 5, 9, 7, 5, 2},
                                           ConvCase{3, 4, 2, 6, 6, 1, 1}, ConvCase{1, 1, 1, 5, 5, 5, 2}));

TEST(Conv, OutputSizeRoundsUpForStrideTwo) {
  EXPECT_EQ(conv_out_size(64, 5, {2, 2}), 32);
  EXPECT_EQ(conv_out_size(7, 5, {2, 2}), 4);
  EXPECT_EQ(conv_out_size(1, 5, {2, 2}), 1);
}

TEST(Warp, ParallelMatchesReference) {
  Rng rng(7);
  const Tensor ref = random_tensor(Shape{2, 3, 9, 11}, rng, 0.0, 1.0);
  const Tensor flow = random_tensor(Shape{2, 2, 9, 11}, rng, -4.0, 4.0);
  const Tensor out = warp_forward(ref, flow);
  EXPECT_EQ(max_abs_diff(out, reference::warp_forward(ref, flow)), 0.0);

  const Tensor gout = random_tensor(out.shape(), rng);
  Tensor gr, gf, rr, rf;
  warp_backward(ref, flow, gout, &gr, &gf);
  reference::warp_backward(ref, flow, gout, &rr, &rf);
  EXPECT_LT(max_abs_diff(gr, rr), 1e-12);
  EXPECT_LT(max_abs_diff(gf, rf), 1e-12);
}

TEST(Warp, MismatchedFlowThrows) {
  EXPECT_THROW(warp_forward(Tensor(Shape{1, 3, 4, 4}), Tensor(Shape{1, 2, 4, 5})),
               std::invalid_argument);
}

TEST(Separable, ParallelMatchesReferenceAndAdjoint) {
  Rng rng(3);
  ResampleMatrix ah{3, 5, {}}, aw{4, 6, {}};
  for (int i = 0; i < 15; ++i) ah.weights.push_back(rng.uniform());
  for (int i = 0; i < 24; ++i) aw.weights.push_back(rng.uniform());
  const Tensor x = random_tensor(Shape{2, 2, 5, 6}, rng);
  const Tensor y = separable_apply(x, ah, aw);
  EXPECT_LT(max_abs_diff(y, reference::separable_apply(x, ah, aw)), 1e-12);

  // <A x, g> == <x, A^T g>
  const Tensor g = random_tensor(y.shape(), rng);
  const Tensor gx = separable_apply_adjoint(g, ah, aw);
  double lhs = 0.0, rhs = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) lhs += y[i] * g[i];
  for (std::size_t i = 0; i < x.size(); ++i) rhs += x[i] * gx[i];
  EXPECT_NEAR(lhs, rhs, 1e-10);
}

}  // namespace
}  // namespace lhbd::kernels
