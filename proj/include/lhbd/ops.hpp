#pragma once

#include <memory>
#include <vector>

#include "lhbd/autograd.hpp"
#include "lhbd/kernels.hpp"

namespace lhbd::ag {

// Elementwise. Binary ops require identical shapes.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var add_scalar(const Var& a, double s);
Var square(const Var& a);
Var sqrt(const Var& a);
Var exp(const Var& a);
Var relu(const Var& a);
Var leaky_relu(const Var& a, double slope);
Var sigmoid(const Var& a);
Var softplus(const Var& a);
/// a^p for a > 0.
Var pow_scalar(const Var& a, double p);

/// x (N,C,H,W) times m (N,1,H,W), m broadcast over channels.
Var mul_channel_broadcast(const Var& x, const Var& m);

Var concat_channels(const std::vector<Var>& parts);
Var slice_channels(const Var& x, int first, int count);
/// Stacks (1,C,H,W) items along the batch axis.
Var concat_batch(const std::vector<Var>& parts);
Var slice_batch(const Var& x, int index);

/// Zero-padded convolution; b may be undefined.
Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad);
/// Transposed convolution with weight (C_in, C_out, k, k), output cropped or
/// extended to (out_h, out_w).
Var conv_transpose2d(const Var& x, const Var& w, const Var& b, int stride, int pad, int out_h,
                     int out_w);

/// Separable linear resampling with fixed matrices; the building block for
/// pooling, bilinear/cubic resizing, replicate padding, cropping and blurring.
Var resample(const Var& x, std::shared_ptr<const kernels::ResampleMatrix> ah,
             std::shared_ptr<const kernels::ResampleMatrix> aw);

Var avg_pool2(const Var& x);
/// 2x bilinear upsampling with half-pixel centers.
Var upsample_bilinear2(const Var& x);
Var pad_replicate(const Var& x, int h, int w);
/// Keeps the top-left h x w region.
Var crop(const Var& x, int h, int w);

/// Bilinear backward warp with border clamping; differentiable in both inputs.
Var warp(const Var& ref, const Var& flow);

Var sum(const Var& x);
/// Mean of every (n, c) plane, shaped (N, C, 1, 1).
Var plane_mean(const Var& x);
Var mean(const Var& x);
Var mse(const Var& a, const Var& b);

namespace matrices {
std::shared_ptr<const kernels::ResampleMatrix> avg_pool2(int n);
std::shared_ptr<const kernels::ResampleMatrix> bilinear_up2(int n);
std::shared_ptr<const kernels::ResampleMatrix> replicate_pad(int n, int out);
std::shared_ptr<const kernels::ResampleMatrix> crop(int n, int out);
std::shared_ptr<const kernels::ResampleMatrix> identity(int n);
/// Catmull-Rom (a = -0.5) resize with half-pixel centers and clamped taps.
std::shared_ptr<const kernels::ResampleMatrix> cubic(int in, int out);
}  // namespace matrices

}  // namespace lhbd::ag
