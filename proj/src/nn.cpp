#include "lhbd/nn.hpp"

#include <cmath>

namespace lhbd::nn {

Tensor uniform_init(Shape s, double bound, Rng& rng) {
  Tensor t(s);
  for (auto& v : t.vec()) v = rng.uniform(-bound, bound);
  return t;
}

Conv2d::Conv2d(int in, int out, int k, int stride_, Rng& rng, double gain)
    : stride(stride_), pad(k / 2) {
  const double fan_in = static_cast<double>(in) * k * k;
  weight = Var::parameter(uniform_init(Shape{out, in, k, k}, gain * std::sqrt(6.0 / fan_in), rng));
  bias = Var::parameter(Tensor(Shape{1, out, 1, 1}));
}

Var Conv2d::forward(const Var& x) const { return ag::conv2d(x, weight, bias, stride, pad); }

void Conv2d::collect(const std::string& prefix, ParamList& out) {
  out.push_back({prefix + ".weight", &weight});
  out.push_back({prefix + ".bias", &bias});
}

void Conv2d::zero() {
  weight.mutable_value().fill(0.0);
  bias.mutable_value().fill(0.0);
}

ConvTranspose2d::ConvTranspose2d(int in, int out, int k, int stride_, Rng& rng, double gain)
    : stride(stride_), pad(k / 2) {
  const double fan_in = static_cast<double>(in) * k * k / (stride_ * stride_);
  weight = Var::parameter(uniform_init(Shape{in, out, k, k}, gain * std::sqrt(6.0 / fan_in), rng));
  bias = Var::parameter(Tensor(Shape{1, out, 1, 1}));
}

Var ConvTranspose2d::forward(const Var& x, int out_h, int out_w) const {
  return ag::conv_transpose2d(x, weight, bias, stride, pad, out_h, out_w);
}

void ConvTranspose2d::collect(const std::string& prefix, ParamList& out) {
  out.push_back({prefix + ".weight", &weight});
  out.push_back({prefix + ".bias", &bias});
}

Gdn::Gdn(int channels, bool inverse_) : inverse(inverse_) {
  beta_raw = Var::parameter(Tensor(Shape{1, channels, 1, 1}, 1.0));
  Tensor g(Shape{channels, channels, 1, 1});
  for (int i = 0; i < channels; ++i) g.at(i, i, 0, 0) = std::sqrt(0.1);
  gamma_raw = Var::parameter(std::move(g));
}

Var Gdn::forward(const Var& x) const {
  const Var beta = ag::add_scalar(ag::square(beta_raw), 1e-6);
  const Var gamma = ag::square(gamma_raw);
  const Var norm = ag::sqrt(ag::conv2d(ag::square(x), gamma, beta, 1, 0));
  return inverse ? ag::mul(x, norm) : ag::div(x, norm);
}

void Gdn::collect(const std::string& prefix, ParamList& out) {
  out.push_back({prefix + ".beta", &beta_raw});
  out.push_back({prefix + ".gamma", &gamma_raw});
}

}  // namespace lhbd::nn
