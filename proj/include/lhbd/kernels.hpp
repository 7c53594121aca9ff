#pragma once

// Data-parallel compute kernels behind the autograd ops.
//
// Every kernel has two implementations: the OpenMP one in lhbd::kernels used by
// the codec, and a plain serial loop nest in lhbd::kernels::reference kept for
// testing and benchmarking. Parallel loops are partitioned so that every output
// element is written by exactly one thread in a fixed summation order; results
// are identical for any thread count.

#include <vector>

#include "lhbd/tensor.hpp"

namespace lhbd::kernels {

struct ConvGeometry {
  int stride = 1;
  int pad = 0;
};

[[nodiscard]] int conv_out_size(int in, int k, ConvGeometry g);

/// y = conv(x, w) + b. w is (C_out, C_in, k, k); b is empty or (1, C_out, 1, 1).
Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, ConvGeometry g);
/// Adjoint of conv2d_forward with respect to x; in_shape gives the spatial size to
/// scatter into (needed for transposed convolutions with output padding).
Tensor conv2d_backward_input(const Tensor& gy, const Tensor& w, Shape in_shape, ConvGeometry g);
Tensor conv2d_backward_weight(const Tensor& x, const Tensor& gy, Shape w_shape, ConvGeometry g);
/// Per-channel sum of gy, shaped (1, C, 1, 1).
Tensor channel_sum(const Tensor& gy);

/// out(x) = bilinear sample of ref at x + flow(x); sample coordinates are clamped
/// to the image border. flow is (N, 2, H, W) with channel order (dx, dy).
Tensor warp_forward(const Tensor& ref, const Tensor& flow);
void warp_backward(const Tensor& ref, const Tensor& flow, const Tensor& gout, Tensor* gref,
                   Tensor* gflow);

/// Dense row-major resampling matrix (rows = output samples, cols = input samples).
struct ResampleMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> weights;
};

/// Applies out = Ah * X * Aw^T to every (n, c) plane.
Tensor separable_apply(const Tensor& x, const ResampleMatrix& ah, const ResampleMatrix& aw);
/// Adjoint: gx = Ah^T * G * Aw.
Tensor separable_apply_adjoint(const Tensor& g, const ResampleMatrix& ah,
                               const ResampleMatrix& aw);

namespace reference {

Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, ConvGeometry g);
Tensor conv2d_backward_input(const Tensor& gy, const Tensor& w, Shape in_shape, ConvGeometry g);
Tensor conv2d_backward_weight(const Tensor& x, const Tensor& gy, Shape w_shape, ConvGeometry g);
Tensor warp_forward(const Tensor& ref, const Tensor& flow);
void warp_backward(const Tensor& ref, const Tensor& flow, const Tensor& gout, Tensor* gref,
                   Tensor* gflow);
Tensor separable_apply(const Tensor& x, const ResampleMatrix& ah, const ResampleMatrix& aw);

}  // namespace reference

}  // namespace lhbd::kernels
