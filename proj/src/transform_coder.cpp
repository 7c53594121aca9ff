#include "lhbd/transform_coder.hpp"

#include <cmath>
#include <numbers>

#include "lhbd/errors.hpp"

namespace lhbd {

using ag::Var;

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

double normal_cdf(double t) { return 0.5 * std::erfc(-t * kInvSqrt2); }
double normal_pdf(double t) { return std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

int half_up(int n) { return (n + 1) / 2; }

// Synthesis weight bound 1/sqrt(fan_in); larger inits blow up through the
// inverse GDN stages.
const double kCoderGain = 1.0 / std::sqrt(6.0);

}  // namespace

double quantize_value(double v) { return std::round(v); }

Var quantize(const Var& y, QuantMode mode, Rng* rng) {
  if (mode == QuantMode::infer) {
    Tensor q = y.value();
    for (auto& v : q.vec()) v = quantize_value(v);
    return Var::constant(std::move(q));
  }
  if (rng == nullptr) throw std::invalid_argument("quantize: training mode needs a noise source");
  Tensor u(y.shape());
  for (auto& v : u.vec()) v = rng->uniform(-0.5, 0.5);
  return ag::add(y, Var::constant(std::move(u)));
}

double gaussian_bin_probability(double yhat, double mu, double sigma) {
  const double v = std::abs(yhat - mu);
  return normal_cdf((0.5 - v) / sigma) - normal_cdf((-0.5 - v) / sigma);
}

Var gaussian_bits(const Var& yhat, const Var& mu, const Var& sigma) {
  require_same_shape(yhat.value(), mu.value(), "gaussian_bits mu");
  require_same_shape(yhat.value(), sigma.value(), "gaussian_bits sigma");
  const std::size_t n = yhat.value().size();
  Tensor bits(yhat.shape());
  for (std::size_t i = 0; i < n; ++i) {
    const double p = gaussian_bin_probability(yhat.value()[i], mu.value()[i], sigma.value()[i]);
    bits[i] = -std::log2(std::max(p, kProbabilityFloor));
  }
  return ag::make_op(std::move(bits), {yhat, mu, sigma}, [yhat, mu, sigma, n](const Tensor& g) {
    Tensor gy(yhat.shape()), gm(yhat.shape()), gs(yhat.shape());
    for (std::size_t i = 0; i < n; ++i) {
      const double d = yhat.value()[i] - mu.value()[i];
      const double s = sigma.value()[i];
      const double v = std::abs(d);
      const double a = (0.5 - v) / s, b = (-0.5 - v) / s;
      const double p = normal_cdf(a) - normal_cdf(b);
      if (p < kProbabilityFloor) continue;
      const double dbits_dp = -1.0 / (p * std::numbers::ln2);
      const double sgn = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
      const double dp_dd = sgn * (normal_pdf(b) - normal_pdf(a)) / s;
      const double dp_ds = (b * normal_pdf(b) - a * normal_pdf(a)) / s;
      gy[i] = g[i] * dbits_dp * dp_dd;
      gm[i] = -gy[i];
      gs[i] = g[i] * dbits_dp * dp_ds;
    }
    ag::accumulate(yhat, gy);
    ag::accumulate(mu, gm);
    ag::accumulate(sigma, gs);
  });
}

// ---------------------------------------------------------------------------
// Factorized prior

FactorizedPrior::FactorizedPrior(int channels, Rng& rng) : channels_(channels) {
  constexpr double kInitScale = 10.0;
  const double scale = std::pow(kInitScale, 1.0 / 4.0);
  for (std::size_t k = 0; k < 4; ++k) {
    const int rows = kDims[k + 1], cols = kDims[k];
    const double init = std::log(std::expm1(1.0 / scale / rows));
    matrices_[k] = Var::parameter(Tensor(Shape{channels, rows, cols, 1}, init));
    biases_[k] = Var::parameter(nn::uniform_init(Shape{channels, rows, 1, 1}, 0.5, rng));
    if (k < 3) factors_[k] = Var::parameter(Tensor(Shape{channels, rows, 1, 1}));
  }
}

namespace {

// Activations of one channel's density network at one input, kept for the
// backward pass.
struct PriorTrace {
  std::array<std::array<double, 3>, 5> v{};    // layer inputs (v[0][0] = x)
  std::array<std::array<double, 3>, 4> pre{};  // pre-gate outputs
};

}  // namespace

double FactorizedPrior::logit(int c, double x) const {
  std::array<double, 3> v{x, 0.0, 0.0};
  for (std::size_t k = 0; k < 4; ++k) {
    const int rows = kDims[k + 1], cols = kDims[k];
    const Tensor& H = matrices_[k].value();
    const Tensor& b = biases_[k].value();
    std::array<double, 3> next{};
    for (int i = 0; i < rows; ++i) {
      double acc = b.at(c, i, 0, 0);
      for (int j = 0; j < cols; ++j) acc += softplus(H.at(c, i, j, 0)) * v[static_cast<std::size_t>(j)];
      if (k < 3) acc += std::tanh(factors_[k].value().at(c, i, 0, 0)) * std::tanh(acc);
      next[static_cast<std::size_t>(i)] = acc;
    }
    v = next;
  }
  return v[0];
}

double FactorizedPrior::cdf(int c, double x) const { return sigmoid(logit(c, x)); }

double FactorizedPrior::probability(int c, double symbol) const {
  const double lo = logit(c, symbol - 0.5), hi = logit(c, symbol + 0.5);
  const double s = (lo + hi) > 0.0 ? -1.0 : 1.0;
  return std::max(std::abs(sigmoid(s * hi) - sigmoid(s * lo)), kProbabilityFloor);
}

Var FactorizedPrior::bits(const Var& z) const {
  const Shape zs = z.shape();
  if (zs.c != channels_) {
    throw std::invalid_argument("FactorizedPrior: expected " + std::to_string(channels_) +
                                " channels, got " + zs.str());
  }
  Tensor out(zs);
  for (int n = 0; n < zs.n; ++n)
    for (int c = 0; c < zs.c; ++c)
      for (int y = 0; y < zs.h; ++y)
        for (int x = 0; x < zs.w; ++x) out.at(n, c, y, x) = -std::log2(probability(c, z.value().at(n, c, y, x)));

  std::vector<Var> inputs{z};
  for (const auto& m : matrices_) inputs.push_back(m);
  for (const auto& b : biases_) inputs.push_back(b);
  for (const auto& f : factors_) inputs.push_back(f);

  const auto mats = matrices_;
  const auto bs = biases_;
  const auto fs = factors_;
  return ag::make_op(std::move(out), std::move(inputs), [z, mats, bs, fs, zs](const Tensor& g) {
    const bool want_params = mats[0].requires_grad();
    std::array<Tensor, 4> gH, gb;
    std::array<Tensor, 3> ga;
    for (std::size_t k = 0; k < 4; ++k) {
      gH[k] = Tensor(mats[k].shape());
      gb[k] = Tensor(bs[k].shape());
      if (k < 3) ga[k] = Tensor(fs[k].shape());
    }
    Tensor gz(zs);

    auto trace = [&](int c, double x) {
      PriorTrace t;
      t.v[0][0] = x;
      for (std::size_t k = 0; k < 4; ++k) {
        const int rows = kDims[k + 1], cols = kDims[k];
        for (int i = 0; i < rows; ++i) {
          double acc = bs[k].value().at(c, i, 0, 0);
          for (int j = 0; j < cols; ++j)
            acc += softplus(mats[k].value().at(c, i, j, 0)) * t.v[k][static_cast<std::size_t>(j)];
          t.pre[k][static_cast<std::size_t>(i)] = acc;
          if (k < 3) acc += std::tanh(fs[k].value().at(c, i, 0, 0)) * std::tanh(acc);
          t.v[k + 1][static_cast<std::size_t>(i)] = acc;
        }
      }
      return t;
    };

    // Pushes d(loss)/d(logit) back through one trace; returns d(loss)/dx.
    auto back = [&](int c, const PriorTrace& t, double g_out) {
      std::array<double, 3> gv{g_out, 0.0, 0.0};
      for (int k = 3; k >= 0; --k) {
        const auto ku = static_cast<std::size_t>(k);
        const int rows = kDims[ku + 1], cols = kDims[ku];
        std::array<double, 3> gpre{};
        for (int i = 0; i < rows; ++i) {
          const auto iu = static_cast<std::size_t>(i);
          if (k < 3) {
            const double ta = std::tanh(fs[ku].value().at(c, i, 0, 0));
            const double tp = std::tanh(t.pre[ku][iu]);
            gpre[iu] = gv[iu] * (1.0 + ta * (1.0 - tp * tp));
            ga[ku].at(c, i, 0, 0) += gv[iu] * tp * (1.0 - ta * ta);
          } else {
            gpre[iu] = gv[iu];
          }
          gb[ku].at(c, i, 0, 0) += gpre[iu];
        }
        std::array<double, 3> gin{};
        for (int i = 0; i < rows; ++i)
          for (int j = 0; j < cols; ++j) {
            const double h = mats[ku].value().at(c, i, j, 0);
            const auto iu = static_cast<std::size_t>(i), ju = static_cast<std::size_t>(j);
            gH[ku].at(c, i, j, 0) += gpre[iu] * t.v[ku][ju] * sigmoid(h);
            gin[ju] += softplus(h) * gpre[iu];
          }
        gv = gin;
      }
      return gv[0];
    };

    for (int n = 0; n < zs.n; ++n)
      for (int c = 0; c < zs.c; ++c)
        for (int y = 0; y < zs.h; ++y)
          for (int x = 0; x < zs.w; ++x) {
            const double go = g.at(n, c, y, x);
            if (go == 0.0) continue;
            const double zv = z.value().at(n, c, y, x);
            const PriorTrace lo = trace(c, zv - 0.5), hi = trace(c, zv + 0.5);
            const double l = lo.v[4][0], u = hi.v[4][0];
            const double s = (l + u) > 0.0 ? -1.0 : 1.0;
            const double diff = sigmoid(s * u) - sigmoid(s * l);
            const double p = std::abs(diff);
            if (p < kProbabilityFloor) continue;
            const double sgn = diff >= 0.0 ? 1.0 : -1.0;
            const double dbits_dp = -1.0 / (p * std::numbers::ln2);
            const double su = sigmoid(s * u), sl = sigmoid(s * l);
            const double dp_du = sgn * s * su * (1.0 - su);
            const double dp_dl = -sgn * s * sl * (1.0 - sl);
            const double gx = back(c, hi, go * dbits_dp * dp_du) + back(c, lo, go * dbits_dp * dp_dl);
            gz.at(n, c, y, x) = gx;
          }
    ag::accumulate(z, gz);
    if (want_params) {
      for (std::size_t k = 0; k < 4; ++k) {
        ag::accumulate(mats[k], gH[k]);
        ag::accumulate(bs[k], gb[k]);
        if (k < 3) ag::accumulate(fs[k], ga[k]);
      }
    }
  });
}

void FactorizedPrior::collect(const std::string& prefix, nn::ParamList& out) {
  for (std::size_t k = 0; k < 4; ++k) {
    out.push_back({prefix + ".matrix" + std::to_string(k), &matrices_[k]});
    out.push_back({prefix + ".bias" + std::to_string(k), &biases_[k]});
    if (k < 3) out.push_back({prefix + ".factor" + std::to_string(k), &factors_[k]});
  }
}

// ---------------------------------------------------------------------------
// Transform coder

int TransformCoder::latent_size(int n) { return half_up(half_up(half_up(half_up(n)))); }
int TransformCoder::hyper_size(int n) { return half_up(half_up(latent_size(n))); }

TransformCoder::TransformCoder(const CoderConfig& cfg, Rng& rng) : cfg_(cfg) {
  if (cfg.filters < 1 || cfg.latent < 1 || cfg.in_channels < 1 || cfg.out_channels < 1) {
    throw ConfigError("transform coder: channel counts must be positive");
  }
  const int N = cfg.filters, M = cfg.latent, Z = cfg.z_channels();
  analysis_[0] = nn::Conv2d(cfg.in_channels, N, 5, 2, rng);
  analysis_[1] = nn::Conv2d(N, N, 5, 2, rng);
  analysis_[2] = nn::Conv2d(N, N, 5, 2, rng);
  analysis_[3] = nn::Conv2d(N, M, 5, 2, rng);
  for (auto& g : gdn_) g = nn::Gdn(N, false);
  synthesis_[0] = nn::ConvTranspose2d(M, N, 5, 2, rng, kCoderGain);
  synthesis_[1] = nn::ConvTranspose2d(N, N, 5, 2, rng, kCoderGain);
  synthesis_[2] = nn::ConvTranspose2d(N, N, 5, 2, rng, kCoderGain);
  synthesis_[3] = nn::ConvTranspose2d(N, cfg.out_channels, 5, 2, rng, kCoderGain);
  for (auto& g : igdn_) g = nn::Gdn(N, true);
  hyper_analysis_[0] = nn::Conv2d(M, N, 3, 1, rng);
  hyper_analysis_[1] = nn::Conv2d(N, N, 5, 2, rng);
  hyper_analysis_[2] = nn::Conv2d(N, Z, 5, 2, rng);
  hyper_synthesis_[0] = nn::ConvTranspose2d(Z, N, 5, 2, rng);
  hyper_synthesis_[1] = nn::ConvTranspose2d(N, N, 5, 2, rng);
  hyper_out_ = nn::Conv2d(N, 2 * M, 3, 1, rng);
  prior_ = FactorizedPrior(Z, rng);
  if (cfg.context_model) {
    context_conv_ = nn::Conv2d(M, 2 * M, 5, 1, rng);
    context_mask_ = Tensor(context_conv_.weight.shape());
    for (int o = 0; o < 2 * M; ++o)
      for (int i = 0; i < M; ++i)
        for (int ky = 0; ky < 5; ++ky)
          for (int kx = 0; kx < 5; ++kx) context_mask_.at(o, i, ky, kx) = (ky < 2 || (ky == 2 && kx < 2)) ? 1.0 : 0.0;
    fusion0_ = nn::Conv2d(4 * M, 2 * M, 1, 1, rng);
    fusion1_ = nn::Conv2d(2 * M, 2 * M, 1, 1, rng);
    fusion1_.zero();
  }
}

Var TransformCoder::analysis(const Var& x) const {
  Var h = x;
  for (std::size_t i = 0; i < 3; ++i) h = gdn_[i].forward(analysis_[i].forward(h));
  return analysis_[3].forward(h);
}

Var TransformCoder::synthesis(const Var& y_hat, int h, int w) const {
  const std::array<int, 4> hs{half_up(half_up(half_up(h))), half_up(half_up(h)), half_up(h), h};
  const std::array<int, 4> ws{half_up(half_up(half_up(w))), half_up(half_up(w)), half_up(w), w};
  if (y_hat.shape().h != half_up(hs[0]) || y_hat.shape().w != half_up(ws[0])) {
    throw std::invalid_argument("synthesis: latent " + y_hat.shape().str() + " does not match output " +
                                std::to_string(h) + "x" + std::to_string(w));
  }
  Var out = y_hat;
  for (std::size_t i = 0; i < 4; ++i) {
    out = synthesis_[i].forward(out, hs[i], ws[i]);
    if (i < 3) out = igdn_[i].forward(out);
  }
  return out;
}

Var TransformCoder::hyper_analysis(const Var& y) const {
  Var h = ag::leaky_relu(hyper_analysis_[0].forward(y), 0.01);
  h = ag::leaky_relu(hyper_analysis_[1].forward(h), 0.01);
  return hyper_analysis_[2].forward(h);
}

Var TransformCoder::hyper_synthesis_raw(const Var& z_hat, int yh, int yw) const {
  Var h = ag::leaky_relu(hyper_synthesis_[0].forward(z_hat, half_up(yh), half_up(yw)), 0.01);
  h = ag::leaky_relu(hyper_synthesis_[1].forward(h, yh, yw), 0.01);
  return hyper_out_.forward(h);
}

Var TransformCoder::context_features(const Var& y_hat) const {
  const Var w = ag::mul(context_conv_.weight, Var::constant(context_mask_));
  return ag::conv2d(y_hat, w, context_conv_.bias, 1, 2);
}

EntropyParams TransformCoder::entropy_params(const Var& hyper_raw, const Var& y_hat) const {
  const int M = cfg_.latent;
  Var raw = hyper_raw;
  if (cfg_.context_model) {
    const Var ctx = context_features(y_hat);
    Var f = ag::leaky_relu(fusion0_.forward(ag::concat_channels({hyper_raw, ctx})), 0.01);
    raw = ag::add(raw, fusion1_.forward(f));
  }
  EntropyParams p;
  p.mu = ag::slice_channels(raw, 0, M);
  p.sigma = ag::add_scalar(ag::softplus(ag::slice_channels(raw, M, M)), kSigmaMin);
  return p;
}

CoderOutput TransformCoder::forward(const Var& x, QuantMode mode, Rng* rng) const {
  const Shape xs = x.shape();
  if (xs.c != cfg_.in_channels) {
    throw std::invalid_argument("transform coder: expected " + std::to_string(cfg_.in_channels) +
                                " input channels, got " + xs.str());
  }
  CoderOutput o;
  o.y = analysis(x);
  const Var z = hyper_analysis(o.y);
  o.z_hat = quantize(z, mode, rng);
  const Var raw = hyper_synthesis_raw(o.z_hat, o.y.shape().h, o.y.shape().w);
  o.y_hat = quantize(o.y, mode, rng);
  o.params = entropy_params(raw, o.y_hat);
  o.bits_y = ag::sum(gaussian_bits(o.y_hat, o.params.mu, o.params.sigma));
  o.bits_z = ag::sum(prior_.bits(o.z_hat));
  o.x_hat = synthesis(o.y_hat, xs.h, xs.w);
  return o;
}

void TransformCoder::collect(const std::string& prefix, nn::ParamList& out) {
  for (std::size_t i = 0; i < 4; ++i) analysis_[i].collect(prefix + ".g_a" + std::to_string(i), out);
  for (std::size_t i = 0; i < 3; ++i) gdn_[i].collect(prefix + ".gdn" + std::to_string(i), out);
  for (std::size_t i = 0; i < 4; ++i) synthesis_[i].collect(prefix + ".g_s" + std::to_string(i), out);
  for (std::size_t i = 0; i < 3; ++i) igdn_[i].collect(prefix + ".igdn" + std::to_string(i), out);
  for (std::size_t i = 0; i < 3; ++i) hyper_analysis_[i].collect(prefix + ".h_a" + std::to_string(i), out);
  for (std::size_t i = 0; i < 2; ++i) hyper_synthesis_[i].collect(prefix + ".h_s" + std::to_string(i), out);
  hyper_out_.collect(prefix + ".h_s2", out);
  prior_.collect(prefix + ".prior", out);
  if (cfg_.context_model) {
    context_conv_.collect(prefix + ".context", out);
    fusion0_.collect(prefix + ".fusion0", out);
    fusion1_.collect(prefix + ".fusion1", out);
  }
}

}  // namespace lhbd
