// Serial loop-nest versions of the kernels. Slow and obvious on purpose; the
// parity tests and the benchmark compare the OpenMP kernels against these.

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lhbd/kernels.hpp"

namespace lhbd::kernels::reference {

Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, ConvGeometry g) {
  const int k = w.h();
  const int oh = conv_out_size(x.h(), k, g), ow = conv_out_size(x.w(), k, g);
  Tensor y(Shape{x.n(), w.n(), oh, ow});
  for (int n = 0; n < x.n(); ++n)
    for (int oc = 0; oc < w.n(); ++oc)
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
          double s = b.empty() ? 0.0 : b[static_cast<std::size_t>(oc)];
          for (int ic = 0; ic < x.c(); ++ic)
            for (int ky = 0; ky < k; ++ky)
              for (int kx = 0; kx < k; ++kx) {
                const int iy = oy * g.stride - g.pad + ky, ix = ox * g.stride - g.pad + kx;
                if (iy < 0 || iy >= x.h() || ix < 0 || ix >= x.w()) continue;
                s += w.at(oc, ic, ky, kx) * x.at(n, ic, iy, ix);
              }
          y.at(n, oc, oy, ox) = s;
        }
  return y;
}

Tensor conv2d_backward_input(const Tensor& gy, const Tensor& w, Shape in_shape, ConvGeometry g) {
  const int k = w.h();
  Tensor gx(Shape{gy.n(), w.c(), in_shape.h, in_shape.w});
  for (int n = 0; n < gy.n(); ++n)
    for (int oc = 0; oc < gy.c(); ++oc)
      for (int oy = 0; oy < gy.h(); ++oy)
        for (int ox = 0; ox < gy.w(); ++ox)
          for (int ic = 0; ic < w.c(); ++ic)
            for (int ky = 0; ky < k; ++ky)
              for (int kx = 0; kx < k; ++kx) {
                const int iy = oy * g.stride - g.pad + ky, ix = ox * g.stride - g.pad + kx;
                if (iy < 0 || iy >= in_shape.h || ix < 0 || ix >= in_shape.w) continue;
                gx.at(n, ic, iy, ix) += w.at(oc, ic, ky, kx) * gy.at(n, oc, oy, ox);
              }
  return gx;
}

Tensor conv2d_backward_weight(const Tensor& x, const Tensor& gy, Shape w_shape, ConvGeometry g) {
  const int k = w_shape.h;
  Tensor gw(w_shape);
  for (int n = 0; n < x.n(); ++n)
    for (int oc = 0; oc < gy.c(); ++oc)
      for (int oy = 0; oy < gy.h(); ++oy)
        for (int ox = 0; ox < gy.w(); ++ox)
          for (int ic = 0; ic < x.c(); ++ic)
            for (int ky = 0; ky < k; ++ky)
              for (int kx = 0; kx < k; ++kx) {
                const int iy = oy * g.stride - g.pad + ky, ix = ox * g.stride - g.pad + kx;
                if (iy < 0 || iy >= x.h() || ix < 0 || ix >= x.w()) continue;
                gw.at(oc, ic, ky, kx) += gy.at(n, oc, oy, ox) * x.at(n, ic, iy, ix);
              }
  return gw;
}

namespace {

double sample_clamped(const Tensor& r, int n, int c, double px, double py) {
  px = std::clamp(px, 0.0, r.w() - 1.0);
  py = std::clamp(py, 0.0, r.h() - 1.0);
  const int x0 = static_cast<int>(std::floor(px)), y0 = static_cast<int>(std::floor(py));
  const int x1 = std::min(x0 + 1, r.w() - 1), y1 = std::min(y0 + 1, r.h() - 1);
  const double ax = px - x0, ay = py - y0;
  return (1 - ay) * ((1 - ax) * r.at(n, c, y0, x0) + ax * r.at(n, c, y0, x1)) +
         ay * ((1 - ax) * r.at(n, c, y1, x0) + ax * r.at(n, c, y1, x1));
}

}  // namespace

Tensor warp_forward(const Tensor& ref, const Tensor& flow) {
  Tensor out(ref.shape());
  for (int n = 0; n < ref.n(); ++n)
    for (int c = 0; c < ref.c(); ++c)
      for (int y = 0; y < ref.h(); ++y)
        for (int x = 0; x < ref.w(); ++x)
          out.at(n, c, y, x) =
              sample_clamped(ref, n, c, x + flow.at(n, 0, y, x), y + flow.at(n, 1, y, x));
  return out;
}

void warp_backward(const Tensor& ref, const Tensor& flow, const Tensor& gout, Tensor* gref,
                   Tensor* gflow) {
  const int h = ref.h(), w = ref.w();
  if (gref) *gref = Tensor(ref.shape());
  if (gflow) *gflow = Tensor(flow.shape());
  for (int n = 0; n < ref.n(); ++n)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const double rawx = x + flow.at(n, 0, y, x), rawy = y + flow.at(n, 1, y, x);
        const double px = std::clamp(rawx, 0.0, w - 1.0), py = std::clamp(rawy, 0.0, h - 1.0);
        const int x0 = static_cast<int>(std::floor(px)), y0 = static_cast<int>(std::floor(py));
        const int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
        const double ax = px - x0, ay = py - y0;
        for (int c = 0; c < ref.c(); ++c) {
          const double g = gout.at(n, c, y, x);
          if (gref) {
            gref->at(n, c, y0, x0) += g * (1 - ay) * (1 - ax);
            gref->at(n, c, y0, x1) += g * (1 - ay) * ax;
            gref->at(n, c, y1, x0) += g * ay * (1 - ax);
            gref->at(n, c, y1, x1) += g * ay * ax;
          }
          if (gflow) {
            const double r00 = ref.at(n, c, y0, x0), r01 = ref.at(n, c, y0, x1);
            const double r10 = ref.at(n, c, y1, x0), r11 = ref.at(n, c, y1, x1);
            if (rawx >= 0 && rawx <= w - 1)
              gflow->at(n, 0, y, x) += g * ((1 - ay) * (r01 - r00) + ay * (r11 - r10));
            if (rawy >= 0 && rawy <= h - 1)
              gflow->at(n, 1, y, x) += g * ((1 - ax) * (r10 - r00) + ax * (r11 - r01));
          }
        }
      }
}

Tensor separable_apply(const Tensor& x, const ResampleMatrix& ah, const ResampleMatrix& aw) {
  Tensor out(Shape{x.n(), x.c(), ah.rows, aw.rows});
  for (int n = 0; n < x.n(); ++n)
    for (int c = 0; c < x.c(); ++c)
      for (int oy = 0; oy < ah.rows; ++oy)
        for (int ox = 0; ox < aw.rows; ++ox) {
          double s = 0.0;
          for (int iy = 0; iy < ah.cols; ++iy) {
            const double wy = ah.weights[static_cast<std::size_t>(oy) * ah.cols + iy];
            if (wy == 0.0) continue;
            double row = 0.0;
            for (int ix = 0; ix < aw.cols; ++ix)
              row += aw.weights[static_cast<std::size_t>(ox) * aw.cols + ix] * x.at(n, c, iy, ix);
            s += wy * row;
          }
          out.at(n, c, oy, ox) = s;
        }
  return out;
}

}  // namespace lhbd::kernels::reference
