#include "lhbd/compensation.hpp"

#include <algorithm>

#include "lhbd/errors.hpp"

namespace lhbd {

using ag::Var;

MaskNet::MaskNet(const MaskNetConfig& cfg, Rng& rng) : cfg_(cfg) {
  if (cfg.depth < 1 || cfg.width < 1) throw ConfigError("mask net: depth and width must be positive");
  int in = 6;
  for (int l = 0; l < cfg.depth; ++l) {
    const int ch = cfg.width << l;
    down_.push_back({nn::Conv2d(in, ch, 3, 1, rng), nn::Conv2d(ch, ch, 3, 1, rng)});
    in = ch;
  }
  for (int l = 0; l + 1 < cfg.depth; ++l) {
    const int ch = cfg.width << l;
    up_.push_back({nn::Conv2d(3 * ch, ch, 3, 1, rng), nn::Conv2d(ch, ch, 3, 1, rng)});
  }
  head_ = nn::Conv2d(cfg.width, 1, 3, 1, rng);
  head_.zero();
}

Var MaskNet::forward(const Var& warped_past, const Var& warped_future) const {
  const Shape s = warped_past.shape();
  if (!(s == warped_future.shape()) || s.c != 3) {
    throw std::invalid_argument("mask net: inputs " + s.str() + " vs " + warped_future.shape().str());
  }
  const int mult = 1 << (cfg_.depth - 1);
  const int ph = (s.h + mult - 1) / mult * mult, pw = (s.w + mult - 1) / mult * mult;
  Var h = ag::add_scalar(ag::pad_replicate(ag::concat_channels({warped_past, warped_future}), ph, pw), -0.5);

  auto block = [](const std::array<nn::Conv2d, 2>& convs, Var x) {
    x = ag::leaky_relu(convs[0].forward(x), 0.1);
    return ag::leaky_relu(convs[1].forward(x), 0.1);
  };
  std::vector<Var> skips;
  for (std::size_t l = 0; l < down_.size(); ++l) {
    if (l > 0) h = ag::avg_pool2(h);
    h = block(down_[l], h);
    skips.push_back(h);
  }
  for (std::size_t l = up_.size(); l-- > 0;) {
    h = ag::concat_channels({ag::upsample_bilinear2(h), skips[l]});
    h = block(up_[l], h);
  }
  return ag::sigmoid(ag::crop(head_.forward(h), s.h, s.w));
}

void MaskNet::collect(const std::string& prefix, nn::ParamList& out) {
  for (std::size_t l = 0; l < down_.size(); ++l)
    for (std::size_t i = 0; i < 2; ++i)
      down_[l][i].collect(prefix + ".down" + std::to_string(l) + "." + std::to_string(i), out);
  for (std::size_t l = 0; l < up_.size(); ++l)
    for (std::size_t i = 0; i < 2; ++i)
      up_[l][i].collect(prefix + ".up" + std::to_string(l) + "." + std::to_string(i), out);
  head_.collect(prefix + ".head", out);
}

Var fuse(const Var& warped_past, const Var& warped_future, const Var& mask) {
  const Var one_minus = ag::add_scalar(ag::scale(mask, -1.0), 1.0);
  return ag::add(ag::mul_channel_broadcast(warped_past, mask), ag::mul_channel_broadcast(warped_future, one_minus));
}

Tensor fuse(const Tensor& a, const Tensor& b, const Tensor& mask) {
  require_same_shape(a, b, "fuse");
  const Shape s = a.shape();
  if (mask.n() != s.n || mask.c() != 1 || mask.h() != s.h || mask.w() != s.w) {
    throw std::invalid_argument("fuse: mask " + mask.shape().str() + " vs frames " + s.str());
  }
  Tensor out(s);
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int y = 0; y < s.h; ++y)
        for (int x = 0; x < s.w; ++x) {
          const double m = mask.at(n, 0, y, x);
          if (!(m >= 0.0 && m <= 1.0)) throw std::invalid_argument("fuse: mask value outside [0, 1]");
          const double p = a.at(n, c, y, x), f = b.at(n, c, y, x);
          out.at(n, c, y, x) = std::clamp(m * p + (1.0 - m) * f, std::min(p, f), std::max(p, f));
        }
  return out;
}

Frame fuse(const Frame& warped_past, const Frame& warped_future, const Tensor& mask) {
  return Frame(fuse(warped_past.pixels(), warped_future.pixels(), mask));
}

Tensor constant_mask(int n, int h, int w, double v) { return Tensor(Shape{n, 1, h, w}, v); }

Tensor oracle_mask(const Frame& past, const Frame& future, const Frame& truth) {
  if (past.height() != truth.height() || past.width() != truth.width() || future.height() != truth.height() ||
      future.width() != truth.width()) {
    throw std::invalid_argument("oracle_mask: frame dimensions differ");
  }
  Tensor m(Shape{1, 1, truth.height(), truth.width()});
  for (int y = 0; y < truth.height(); ++y)
    for (int x = 0; x < truth.width(); ++x) {
      double ep = 0.0, ef = 0.0;
      for (int c = 0; c < 3; ++c) {
        const double t = truth.at(c, y, x);
        ep += (past.at(c, y, x) - t) * (past.at(c, y, x) - t);
        ef += (future.at(c, y, x) - t) * (future.at(c, y, x) - t);
      }
      m.at(0, 0, y, x) = ep < ef ? 1.0 : (ef < ep ? 0.0 : 0.5);
    }
  return m;
}

}  // namespace lhbd
