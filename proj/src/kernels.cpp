#include "lhbd/kernels.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lhbd::kernels {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

struct ConvDims {
  int cin, cout, k, h, w, oh, ow;
  [[nodiscard]] int rows() const { return cin * k * k; }
  [[nodiscard]] int cols() const { return oh * ow; }
};

void im2col(const double* x, const ConvDims& d, ConvGeometry g, double* cols) {
  const int p = d.cols();
  for (int ic = 0; ic < d.cin; ++ic) {
    const double* plane = x + static_cast<std::size_t>(ic) * d.h * d.w;
    for (int ky = 0; ky < d.k; ++ky) {
      for (int kx = 0; kx < d.k; ++kx) {
        double* row = cols + static_cast<std::size_t>((ic * d.k + ky) * d.k + kx) * p;
        for (int oy = 0; oy < d.oh; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          double* out = row + static_cast<std::size_t>(oy) * d.ow;
          if (iy < 0 || iy >= d.h) {
            std::fill(out, out + d.ow, 0.0);
            continue;
          }
          const double* src = plane + static_cast<std::size_t>(iy) * d.w;
          for (int ox = 0; ox < d.ow; ++ox) {
            const int ix = ox * g.stride - g.pad + kx;
            out[ox] = (ix >= 0 && ix < d.w) ? src[ix] : 0.0;
          }
        }
      }
    }
  }
}

void col2im(const double* cols, const ConvDims& d, ConvGeometry g, double* x) {
  const int p = d.cols();
  for (int ic = 0; ic < d.cin; ++ic) {
    double* plane = x + static_cast<std::size_t>(ic) * d.h * d.w;
    for (int ky = 0; ky < d.k; ++ky) {
      for (int kx = 0; kx < d.k; ++kx) {
        const double* row = cols + static_cast<std::size_t>((ic * d.k + ky) * d.k + kx) * p;
        for (int oy = 0; oy < d.oh; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= d.h) continue;
          const double* in = row + static_cast<std::size_t>(oy) * d.ow;
          double* dst = plane + static_cast<std::size_t>(iy) * d.w;
          for (int ox = 0; ox < d.ow; ++ox) {
            const int ix = ox * g.stride - g.pad + kx;
            if (ix >= 0 && ix < d.w) dst[ix] += in[ox];
          }
        }
      }
    }
  }
}

ConvDims dims_for(Shape in, Shape w, ConvGeometry g) {
  if (w.h != w.w) throw std::invalid_argument("conv: only square kernels are supported");
  ConvDims d{in.c, w.n, w.h, in.h, in.w, conv_out_size(in.h, w.h, g), conv_out_size(in.w, w.w, g)};
  if (d.oh <= 0 || d.ow <= 0) throw std::invalid_argument("conv: input smaller than kernel");
  return d;
}

}  // namespace

int conv_out_size(int in, int k, ConvGeometry g) { return (in + 2 * g.pad - k) / g.stride + 1; }

Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, ConvGeometry g) {
  if (x.c() != w.shape().c) {
    throw std::invalid_argument("conv2d: input has " + std::to_string(x.c()) +
                                " channels, weight expects " + std::to_string(w.shape().c));
  }
  const ConvDims d = dims_for(x.shape(), w.shape(), g);
  Tensor y(Shape{x.n(), d.cout, d.oh, d.ow});
  const ConstMapMat wm(w.data(), d.cout, d.rows());
  const int batch = x.n();
#pragma omp parallel
  {
    std::vector<double> cols(static_cast<std::size_t>(d.rows()) * d.cols());
#pragma omp for schedule(static)
    for (int n = 0; n < batch; ++n) {
      im2col(x.plane(n, 0), d, g, cols.data());
      MapMat ym(y.plane(n, 0), d.cout, d.cols());
      ym.noalias() = wm * ConstMapMat(cols.data(), d.rows(), d.cols());
      if (!b.empty()) {
        for (int oc = 0; oc < d.cout; ++oc) ym.row(oc).array() += b[oc];
      }
    }
  }
  return y;
}

Tensor conv2d_backward_input(const Tensor& gy, const Tensor& w, Shape in_shape, ConvGeometry g) {
  const ConvDims d = dims_for(in_shape, w.shape(), g);
  if (gy.h() != d.oh || gy.w() != d.ow || gy.c() != d.cout) {
    throw std::invalid_argument("conv2d_backward_input: gradient shape mismatch");
  }
  Tensor gx(Shape{gy.n(), d.cin, d.h, d.w});
  const ConstMapMat wm(w.data(), d.cout, d.rows());
  const int batch = gy.n();
#pragma omp parallel
  {
    std::vector<double> cols(static_cast<std::size_t>(d.rows()) * d.cols());
#pragma omp for schedule(static)
    for (int n = 0; n < batch; ++n) {
      MapMat cm(cols.data(), d.rows(), d.cols());
      cm.noalias() = wm.transpose() * ConstMapMat(gy.plane(n, 0), d.cout, d.cols());
      col2im(cols.data(), d, g, gx.plane(n, 0));
    }
  }
  return gx;
}

Tensor conv2d_backward_weight(const Tensor& x, const Tensor& gy, Shape w_shape, ConvGeometry g) {
  const ConvDims d = dims_for(x.shape(), w_shape, g);
  const int batch = x.n();
  // Per-sample partial gradients, reduced serially in sample order afterwards.
  std::vector<Tensor> partial(static_cast<std::size_t>(batch));
#pragma omp parallel
  {
    std::vector<double> cols(static_cast<std::size_t>(d.rows()) * d.cols());
#pragma omp for schedule(static)
    for (int n = 0; n < batch; ++n) {
      im2col(x.plane(n, 0), d, g, cols.data());
      Tensor gw(w_shape);
      MapMat gm(gw.data(), d.cout, d.rows());
      gm.noalias() = ConstMapMat(gy.plane(n, 0), d.cout, d.cols()) *
                     ConstMapMat(cols.data(), d.rows(), d.cols()).transpose();
      partial[static_cast<std::size_t>(n)] = std::move(gw);
    }
  }
  Tensor gw = std::move(partial[0]);
  for (int n = 1; n < batch; ++n) axpy(1.0, partial[static_cast<std::size_t>(n)], gw);
  return gw;
}

Tensor channel_sum(const Tensor& gy) {
  Tensor gb(Shape{1, gy.c(), 1, 1});
  const std::size_t plane = gy.shape().plane();
#pragma omp parallel for schedule(static)
  for (int c = 0; c < gy.c(); ++c) {
    double s = 0.0;
    for (int n = 0; n < gy.n(); ++n) {
      const double* p = gy.plane(n, c);
      for (std::size_t i = 0; i < plane; ++i) s += p[i];
    }
    gb[static_cast<std::size_t>(c)] = s;
  }
  return gb;
}

namespace {

struct BilinearTap {
  int x0, x1, y0, y1;
  double ax, ay;
  bool inside_x, inside_y;
};

inline BilinearTap bilinear_tap(double px, double py, int w, int h) {
  BilinearTap t{};
  t.inside_x = px >= 0.0 && px <= w - 1;
  t.inside_y = py >= 0.0 && py <= h - 1;
  px = std::clamp(px, 0.0, static_cast<double>(w - 1));
  py = std::clamp(py, 0.0, static_cast<double>(h - 1));
  t.x0 = static_cast<int>(std::floor(px));
  t.y0 = static_cast<int>(std::floor(py));
  t.ax = px - t.x0;
  t.ay = py - t.y0;
  t.x1 = std::min(t.x0 + 1, w - 1);
  t.y1 = std::min(t.y0 + 1, h - 1);
  return t;
}

void check_warp_shapes(const Tensor& ref, const Tensor& flow) {
  if (flow.c() != 2 || flow.n() != ref.n() || flow.h() != ref.h() || flow.w() != ref.w()) {
    throw std::invalid_argument("warp: flow " + flow.shape().str() + " does not match frame " +
                                ref.shape().str());
  }
}

}  // namespace

Tensor warp_forward(const Tensor& ref, const Tensor& flow) {
  check_warp_shapes(ref, flow);
  const int nb = ref.n(), nc = ref.c(), h = ref.h(), w = ref.w();
  Tensor out(ref.shape());
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < nb; ++n) {
    for (int y = 0; y < h; ++y) {
      const double* fx = flow.plane(n, 0) + static_cast<std::size_t>(y) * w;
      const double* fy = flow.plane(n, 1) + static_cast<std::size_t>(y) * w;
      for (int x = 0; x < w; ++x) {
        const BilinearTap t = bilinear_tap(x + fx[x], y + fy[x], w, h);
        for (int c = 0; c < nc; ++c) {
          const double* r = ref.plane(n, c);
          const double top = (1.0 - t.ax) * r[t.y0 * w + t.x0] + t.ax * r[t.y0 * w + t.x1];
          const double bot = (1.0 - t.ax) * r[t.y1 * w + t.x0] + t.ax * r[t.y1 * w + t.x1];
          out.plane(n, c)[static_cast<std::size_t>(y) * w + x] = (1.0 - t.ay) * top + t.ay * bot;
        }
      }
    }
  }
  return out;
}

void warp_backward(const Tensor& ref, const Tensor& flow, const Tensor& gout, Tensor* gref,
                   Tensor* gflow) {
  check_warp_shapes(ref, flow);
  const int nb = ref.n(), nc = ref.c(), h = ref.h(), w = ref.w();
  if (gref != nullptr) {
    *gref = Tensor(ref.shape());
    // One thread per (n, c) plane: scatter targets never collide across threads.
#pragma omp parallel for collapse(2) schedule(static)
    for (int n = 0; n < nb; ++n) {
      for (int c = 0; c < nc; ++c) {
        double* gr = gref->plane(n, c);
        const double* go = gout.plane(n, c);
        const double* fx = flow.plane(n, 0);
        const double* fy = flow.plane(n, 1);
        for (int y = 0; y < h; ++y) {
          for (int x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            const BilinearTap t = bilinear_tap(x + fx[i], y + fy[i], w, h);
            const double g = go[i];
            gr[t.y0 * w + t.x0] += g * (1.0 - t.ay) * (1.0 - t.ax);
            gr[t.y0 * w + t.x1] += g * (1.0 - t.ay) * t.ax;
            gr[t.y1 * w + t.x0] += g * t.ay * (1.0 - t.ax);
            gr[t.y1 * w + t.x1] += g * t.ay * t.ax;
          }
        }
      }
    }
  }
  if (gflow != nullptr) {
    *gflow = Tensor(flow.shape());
#pragma omp parallel for collapse(2) schedule(static)
    for (int n = 0; n < nb; ++n) {
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const std::size_t i = static_cast<std::size_t>(y) * w + x;
          const BilinearTap t = bilinear_tap(x + flow.plane(n, 0)[i], y + flow.plane(n, 1)[i], w, h);
          double dx = 0.0, dy = 0.0;
          for (int c = 0; c < nc; ++c) {
            const double* r = ref.plane(n, c);
            const double g = gout.plane(n, c)[i];
            const double r00 = r[t.y0 * w + t.x0], r01 = r[t.y0 * w + t.x1];
            const double r10 = r[t.y1 * w + t.x0], r11 = r[t.y1 * w + t.x1];
            dx += g * ((1.0 - t.ay) * (r01 - r00) + t.ay * (r11 - r10));
            dy += g * ((1.0 - t.ax) * (r10 - r00) + t.ax * (r11 - r01));
          }
          gflow->plane(n, 0)[i] = t.inside_x ? dx : 0.0;
          gflow->plane(n, 1)[i] = t.inside_y ? dy : 0.0;
        }
      }
    }
  }
}

Tensor separable_apply(const Tensor& x, const ResampleMatrix& ah, const ResampleMatrix& aw) {
  if (ah.cols != x.h() || aw.cols != x.w()) {
    throw std::invalid_argument("separable_apply: matrix does not match input " + x.shape().str());
  }
  Tensor out(Shape{x.n(), x.c(), ah.rows, aw.rows});
  const ConstMapMat mh(ah.weights.data(), ah.rows, ah.cols);
  const ConstMapMat mw(aw.weights.data(), aw.rows, aw.cols);
  const int planes = x.n() * x.c();
#pragma omp parallel for schedule(static)
  for (int p = 0; p < planes; ++p) {
    const ConstMapMat in(x.data() + static_cast<std::size_t>(p) * x.shape().plane(), x.h(), x.w());
    MapMat o(out.data() + static_cast<std::size_t>(p) * out.shape().plane(), ah.rows, aw.rows);
    const RowMat tmp = mh * in;
    o.noalias() = tmp * mw.transpose();
  }
  return out;
}

Tensor separable_apply_adjoint(const Tensor& g, const ResampleMatrix& ah,
                               const ResampleMatrix& aw) {
  if (ah.rows != g.h() || aw.rows != g.w()) {
    throw std::invalid_argument("separable_apply_adjoint: matrix does not match gradient");
  }
  Tensor out(Shape{g.n(), g.c(), ah.cols, aw.cols});
  const ConstMapMat mh(ah.weights.data(), ah.rows, ah.cols);
  const ConstMapMat mw(aw.weights.data(), aw.rows, aw.cols);
  const int planes = g.n() * g.c();
#pragma omp parallel for schedule(static)
  for (int p = 0; p < planes; ++p) {
    const ConstMapMat in(g.data() + static_cast<std::size_t>(p) * g.shape().plane(), g.h(), g.w());
    MapMat o(out.data() + static_cast<std::size_t>(p) * out.shape().plane(), ah.cols, aw.cols);
    const RowMat tmp = mh.transpose() * in;
    o.noalias() = tmp * mw;
  }
  return out;
}

}  // namespace lhbd::kernels
