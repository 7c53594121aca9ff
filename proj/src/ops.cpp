#include "lhbd/ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lhbd::ag {

namespace {

// f maps x -> y; df maps (x, y) -> dy/dx.
template <typename F, typename DF>
Var unary(const Var& a, F f, DF df) {
  const Tensor& x = a.value();
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  Tensor ycopy = y;
  return make_op(std::move(y), {a}, [a, df, y = std::move(ycopy)](const Tensor& g) {
    const Tensor& x = a.value();
    Tensor gx(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) gx[i] = g[i] * df(x[i], y[i]);
    accumulate(a, gx);
  });
}

}  // namespace

Var add(const Var& a, const Var& b) {
  require_same_shape(a.value(), b.value(), "add");
  Tensor y = a.value();
  axpy(1.0, b.value(), y);
  return make_op(std::move(y), {a, b}, [a, b](const Tensor& g) {
    accumulate(a, g);
    accumulate(b, g);
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a.value(), b.value(), "sub");
  Tensor y = a.value();
  axpy(-1.0, b.value(), y);
  return make_op(std::move(y), {a, b}, [a, b](const Tensor& g) {
    accumulate(a, g);
    if (b.requires_grad()) {
      Tensor gb = g;
      for (auto& v : gb.vec()) v = -v;
      accumulate(b, gb);
    }
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape(a.value(), b.value(), "mul");
  Tensor y(a.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.value()[i] * b.value()[i];
  return make_op(std::move(y), {a, b}, [a, b](const Tensor& g) {
    if (a.requires_grad()) {
      Tensor ga(g.shape());
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] = g[i] * b.value()[i];
      accumulate(a, ga);
    }
    if (b.requires_grad()) {
      Tensor gb(g.shape());
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] = g[i] * a.value()[i];
      accumulate(b, gb);
    }
  });
}

Var div(const Var& a, const Var& b) {
  require_same_shape(a.value(), b.value(), "div");
  Tensor y(a.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.value()[i] / b.value()[i];
  return make_op(std::move(y), {a, b}, [a, b](const Tensor& g) {
    if (a.requires_grad()) {
      Tensor ga(g.shape());
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] = g[i] / b.value()[i];
      accumulate(a, ga);
    }
    if (b.requires_grad()) {
      Tensor gb(g.shape());
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double bv = b.value()[i];
        gb[i] = -g[i] * a.value()[i] / (bv * bv);
      }
      accumulate(b, gb);
    }
  });
}

Var scale(const Var& a, double s) {
  return unary(a, [s](double x) { return s * x; }, [s](double, double) { return s; });
}

Var add_scalar(const Var& a, double s) {
  return unary(a, [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

Var square(const Var& a) {
  return unary(a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var sqrt(const Var& a) {
  return unary(
      a, [](double x) { return std::sqrt(x); }, [](double, double y) { return 0.5 / y; });
}

Var exp(const Var& a) {
  return unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var relu(const Var& a) {
  return unary(
      a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var leaky_relu(const Var& a, double slope) {
  return unary(
      a, [slope](double x) { return x > 0.0 ? x : slope * x; },
      [slope](double x, double) { return x > 0.0 ? 1.0 : slope; });
}

Var sigmoid(const Var& a) {
  return unary(
      a,
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var softplus(const Var& a) {
  return unary(
      a, [](double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); },
      [](double x, double) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      });
}

Var pow_scalar(const Var& a, double p) {
  return unary(
      a, [p](double x) { return std::pow(x, p); },
      [p](double x, double) { return p * std::pow(x, p - 1.0); });
}

Var mul_channel_broadcast(const Var& x, const Var& m) {
  const Shape xs = x.shape(), ms = m.shape();
  if (ms.c != 1 || ms.n != xs.n || ms.h != xs.h || ms.w != xs.w) {
    throw std::invalid_argument("mul_channel_broadcast: mask " + ms.str() + " vs " + xs.str());
  }
  const std::size_t plane = xs.plane();
  Tensor y(xs);
  for (int n = 0; n < xs.n; ++n)
    for (int c = 0; c < xs.c; ++c)
      for (std::size_t i = 0; i < plane; ++i)
        y.plane(n, c)[i] = x.value().plane(n, c)[i] * m.value().plane(n, 0)[i];
  return make_op(std::move(y), {x, m}, [x, m, plane](const Tensor& g) {
    const Shape xs = x.shape();
    if (x.requires_grad()) {
      Tensor gx(xs);
      for (int n = 0; n < xs.n; ++n)
        for (int c = 0; c < xs.c; ++c)
          for (std::size_t i = 0; i < plane; ++i)
            gx.plane(n, c)[i] = g.plane(n, c)[i] * m.value().plane(n, 0)[i];
      accumulate(x, gx);
    }
    if (m.requires_grad()) {
      Tensor gm(m.shape());
      for (int n = 0; n < xs.n; ++n)
        for (int c = 0; c < xs.c; ++c)
          for (std::size_t i = 0; i < plane; ++i)
            gm.plane(n, 0)[i] += g.plane(n, c)[i] * x.value().plane(n, c)[i];
      accumulate(m, gm);
    }
  });
}

Var concat_channels(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_channels: no inputs");
  Shape s = parts[0].shape();
  int total = 0;
  for (const auto& p : parts) {
    const Shape ps = p.shape();
    if (ps.n != s.n || ps.h != s.h || ps.w != s.w) {
      throw std::invalid_argument("concat_channels: " + ps.str() + " vs " + s.str());
    }
    total += ps.c;
  }
  s.c = total;
  Tensor y(s);
  const std::size_t plane = s.plane();
  for (int n = 0; n < s.n; ++n) {
    int offset = 0;
    for (const auto& p : parts) {
      const int pc = p.shape().c;
      std::copy_n(p.value().plane(n, 0), pc * plane, y.plane(n, offset));
      offset += pc;
    }
  }
  return make_op(std::move(y), parts, [parts, plane](const Tensor& g) {
    int offset = 0;
    for (const auto& p : parts) {
      const int pc = p.shape().c;
      if (p.requires_grad()) {
        Tensor gp(p.shape());
        for (int n = 0; n < g.n(); ++n) std::copy_n(g.plane(n, offset), pc * plane, gp.plane(n, 0));
        accumulate(p, gp);
      }
      offset += pc;
    }
  });
}

Var slice_channels(const Var& x, int first, int count) {
  const Shape xs = x.shape();
  if (first < 0 || count <= 0 || first + count > xs.c) {
    throw std::invalid_argument("slice_channels: out of range on " + xs.str());
  }
  Shape s = xs;
  s.c = count;
  const std::size_t plane = s.plane();
  Tensor y(s);
  for (int n = 0; n < s.n; ++n) std::copy_n(x.value().plane(n, first), count * plane, y.plane(n, 0));
  return make_op(std::move(y), {x}, [x, first, count, plane](const Tensor& g) {
    Tensor gx(x.shape());
    for (int n = 0; n < g.n(); ++n) std::copy_n(g.plane(n, 0), count * plane, gx.plane(n, first));
    accumulate(x, gx);
  });
}

Var concat_batch(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_batch: no inputs");
  Shape s = parts[0].shape();
  s.n = 0;
  for (const auto& p : parts) {
    Shape ps = p.shape();
    if (ps.c != s.c || ps.h != s.h || ps.w != s.w) {
      throw std::invalid_argument("concat_batch: " + ps.str() + " vs " + s.str());
    }
    s.n += ps.n;
  }
  Tensor y(s);
  std::size_t offset = 0;
  for (const auto& p : parts) {
    std::copy(p.value().vec().begin(), p.value().vec().end(), y.vec().begin() + offset);
    offset += p.value().size();
  }
  return make_op(std::move(y), parts, [parts](const Tensor& g) {
    std::size_t offset = 0;
    for (const auto& p : parts) {
      const std::size_t len = p.value().size();
      if (p.requires_grad()) {
        Tensor gp(p.shape());
        std::copy_n(g.vec().begin() + offset, len, gp.vec().begin());
        accumulate(p, gp);
      }
      offset += len;
    }
  });
}

Var slice_batch(const Var& x, int index) {
  Shape s = x.shape();
  if (index < 0 || index >= s.n) throw std::invalid_argument("slice_batch: index out of range");
  s.n = 1;
  const std::size_t len = s.numel();
  Tensor y(s);
  std::copy_n(x.value().vec().begin() + index * len, len, y.vec().begin());
  return make_op(std::move(y), {x}, [x, index, len](const Tensor& g) {
    Tensor gx(x.shape());
    std::copy_n(g.vec().begin(), len, gx.vec().begin() + index * len);
    accumulate(x, gx);
  });
}

Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad) {
  const kernels::ConvGeometry geo{stride, pad};
  static const Tensor kNoBias;
  const Tensor& bias = b.defined() ? b.value() : kNoBias;
  Tensor y = kernels::conv2d_forward(x.value(), w.value(), bias, geo);
  std::vector<Var> inputs{x, w};
  if (b.defined()) inputs.push_back(b);
  return make_op(std::move(y), std::move(inputs), [x, w, b, geo](const Tensor& g) {
    if (x.requires_grad()) {
      accumulate(x, kernels::conv2d_backward_input(g, w.value(), x.shape(), geo));
    }
    if (w.requires_grad()) {
      accumulate(w, kernels::conv2d_backward_weight(x.value(), g, w.shape(), geo));
    }
    if (b.defined() && b.requires_grad()) accumulate(b, kernels::channel_sum(g));
  });
}

Var conv_transpose2d(const Var& x, const Var& w, const Var& b, int stride, int pad, int out_h,
                     int out_w) {
  const kernels::ConvGeometry geo{stride, pad};
  const Shape ws = w.shape();
  if (ws.n != x.shape().c) {
    throw std::invalid_argument("conv_transpose2d: weight " + ws.str() + " vs input " +
                                x.shape().str());
  }
  const Shape out_shape{x.shape().n, ws.c, out_h, out_w};
  if (kernels::conv_out_size(out_h, ws.h, geo) != x.shape().h ||
      kernels::conv_out_size(out_w, ws.w, geo) != x.shape().w) {
    throw std::invalid_argument("conv_transpose2d: inconsistent output size");
  }
  Tensor y = kernels::conv2d_backward_input(x.value(), w.value(), out_shape, geo);
  if (b.defined()) {
    for (int n = 0; n < out_shape.n; ++n)
      for (int c = 0; c < out_shape.c; ++c) {
        double* p = y.plane(n, c);
        for (std::size_t i = 0; i < out_shape.plane(); ++i) p[i] += b.value()[c];
      }
  }
  std::vector<Var> inputs{x, w};
  if (b.defined()) inputs.push_back(b);
  return make_op(std::move(y), std::move(inputs), [x, w, b, geo](const Tensor& g) {
    static const Tensor kNoBias;
    if (x.requires_grad()) accumulate(x, kernels::conv2d_forward(g, w.value(), kNoBias, geo));
    if (w.requires_grad()) {
      accumulate(w, kernels::conv2d_backward_weight(g, x.value(), w.shape(), geo));
    }
    if (b.defined() && b.requires_grad()) accumulate(b, kernels::channel_sum(g));
  });
}

Var resample(const Var& x, std::shared_ptr<const kernels::ResampleMatrix> ah,
             std::shared_ptr<const kernels::ResampleMatrix> aw) {
  Tensor y = kernels::separable_apply(x.value(), *ah, *aw);
  return make_op(std::move(y), {x}, [x, ah, aw](const Tensor& g) {
    accumulate(x, kernels::separable_apply_adjoint(g, *ah, *aw));
  });
}

namespace matrices {

namespace {
std::shared_ptr<kernels::ResampleMatrix> zeros(int rows, int cols) {
  auto m = std::make_shared<kernels::ResampleMatrix>();
  m->rows = rows;
  m->cols = cols;
  m->weights.assign(static_cast<std::size_t>(rows) * cols, 0.0);
  return m;
}
double& at(kernels::ResampleMatrix& m, int r, int c) {
  return m.weights[static_cast<std::size_t>(r) * m.cols + c];
}
}  // namespace

std::shared_ptr<const kernels::ResampleMatrix> avg_pool2(int n) {
  if (n % 2 != 0) throw std::invalid_argument("avg_pool2 needs even size");
  auto m = zeros(n / 2, n);
  for (int r = 0; r < n / 2; ++r) at(*m, r, 2 * r) = at(*m, r, 2 * r + 1) = 0.5;
  return m;
}

std::shared_ptr<const kernels::ResampleMatrix> bilinear_up2(int n) {
  auto m = zeros(2 * n, n);
  for (int r = 0; r < 2 * n; ++r) {
    const double u = std::clamp((r + 0.5) / 2.0 - 0.5, 0.0, n - 1.0);
    const int i0 = static_cast<int>(std::floor(u));
    const int i1 = std::min(i0 + 1, n - 1);
    const double a = u - i0;
    at(*m, r, i0) += 1.0 - a;
    at(*m, r, i1) += a;
  }
  return m;
}

std::shared_ptr<const kernels::ResampleMatrix> replicate_pad(int n, int out) {
  auto m = zeros(out, n);
  for (int r = 0; r < out; ++r) at(*m, r, std::min(r, n - 1)) = 1.0;
  return m;
}

std::shared_ptr<const kernels::ResampleMatrix> crop(int n, int out) {
  if (out > n) throw std::invalid_argument("crop larger than input");
  auto m = zeros(out, n);
  for (int r = 0; r < out; ++r) at(*m, r, r) = 1.0;
  return m;
}

std::shared_ptr<const kernels::ResampleMatrix> identity(int n) { return crop(n, n); }

std::shared_ptr<const kernels::ResampleMatrix> cubic(int in, int out) {
  if (in < 1 || out < 1) throw std::invalid_argument("cubic resize of an empty axis");
  constexpr double a = -0.5;
  auto kernel = [](double d) {
    d = std::abs(d);
    if (d <= 1.0) return ((a + 2.0) * d - (a + 3.0)) * d * d + 1.0;
    if (d < 2.0) return ((a * d - 5.0 * a) * d + 8.0 * a) * d - 4.0 * a;
    return 0.0;
  };
  auto m = zeros(out, in);
  const double ratio = static_cast<double>(in) / out;
  for (int r = 0; r < out; ++r) {
    const double u = (r + 0.5) * ratio - 0.5;
    const int base = static_cast<int>(std::floor(u));
    for (int k = base - 1; k <= base + 2; ++k) at(*m, r, std::clamp(k, 0, in - 1)) += kernel(u - k);
  }
  return m;
}

}  // namespace matrices

Var avg_pool2(const Var& x) {
  return resample(x, matrices::avg_pool2(x.shape().h), matrices::avg_pool2(x.shape().w));
}

Var upsample_bilinear2(const Var& x) {
  return resample(x, matrices::bilinear_up2(x.shape().h), matrices::bilinear_up2(x.shape().w));
}

Var pad_replicate(const Var& x, int h, int w) {
  if (h == x.shape().h && w == x.shape().w) return x;
  return resample(x, matrices::replicate_pad(x.shape().h, h),
                  matrices::replicate_pad(x.shape().w, w));
}

Var crop(const Var& x, int h, int w) {
  if (h == x.shape().h && w == x.shape().w) return x;
  return resample(x, matrices::crop(x.shape().h, h), matrices::crop(x.shape().w, w));
}

Var warp(const Var& ref, const Var& flow) {
  Tensor y = kernels::warp_forward(ref.value(), flow.value());
  return make_op(std::move(y), {ref, flow}, [ref, flow](const Tensor& g) {
    Tensor gref, gflow;
    kernels::warp_backward(ref.value(), flow.value(), g, ref.requires_grad() ? &gref : nullptr,
                           flow.requires_grad() ? &gflow : nullptr);
    if (ref.requires_grad()) accumulate(ref, gref);
    if (flow.requires_grad()) accumulate(flow, gflow);
  });
}

Var sum(const Var& x) {
  double s = 0.0;
  for (double v : x.value().vec()) s += v;
  return make_op(Tensor::scalar(s), {x}, [x](const Tensor& g) {
    accumulate(x, Tensor(x.shape(), g.item()));
  });
}

Var mean(const Var& x) { return scale(sum(x), 1.0 / static_cast<double>(x.value().size())); }

Var plane_mean(const Var& x) {
  const Shape s = x.shape();
  const std::size_t plane = s.plane();
  Tensor y(Shape{s.n, s.c, 1, 1});
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c) {
      const double* p = x.value().plane(n, c);
      double acc = 0.0;
      for (std::size_t i = 0; i < plane; ++i) acc += p[i];
      y.at(n, c, 0, 0) = acc / static_cast<double>(plane);
    }
  return make_op(std::move(y), {x}, [x, s, plane](const Tensor& g) {
    Tensor gx(s);
    for (int n = 0; n < s.n; ++n)
      for (int c = 0; c < s.c; ++c) {
        const double v = g.at(n, c, 0, 0) / static_cast<double>(plane);
        double* p = gx.plane(n, c);
        for (std::size_t i = 0; i < plane; ++i) p[i] = v;
      }
    accumulate(x, gx);
  });
}

Var mse(const Var& a, const Var& b) { return mean(square(sub(a, b))); }

}  // namespace lhbd::ag
