#include "lhbd/motion_codec.hpp"

#include "lhbd/errors.hpp"

namespace lhbd {

using ag::Var;

CoderConfig MotionCoderConfig::coder() const {
  CoderConfig c;
  c.in_channels = 4;
  c.out_channels = 4;
  c.filters = filters;
  c.latent = latent;
  c.hyper_latent = hyper_latent;
  c.context_model = context_model;
  return c;
}

void MotionCoderConfig::validate() const {
  if (subsample != 1 && subsample != 2 && subsample != 4) {
    throw ConfigError("motion subsampling factor must be 1, 2 or 4, got " + std::to_string(subsample));
  }
}

namespace {

void require_divisible(int h, int w, int s) {
  if (s < 1 || h % s != 0 || w % s != 0) {
    throw std::invalid_argument("flow of size " + std::to_string(h) + "x" + std::to_string(w) +
                                " is not divisible by subsampling factor " + std::to_string(s));
  }
}

}  // namespace

Var subsample_flow(const Var& flow, int s) {
  const Shape fs = flow.shape();
  require_divisible(fs.h, fs.w, s);
  if (s == 1) return flow;
  return ag::resample(flow, ag::matrices::cubic(fs.h, fs.h / s), ag::matrices::cubic(fs.w, fs.w / s));
}

Var upsample_flow(const Var& lowres, int s, int h, int w) {
  const Shape ls = lowres.shape();
  require_divisible(h, w, s);
  if (ls.h * s != h || ls.w * s != w) {
    throw std::invalid_argument("upsample_flow: " + ls.str() + " times " + std::to_string(s) + " is not " +
                                std::to_string(h) + "x" + std::to_string(w));
  }
  if (s == 1) return lowres;
  return ag::resample(lowres, ag::matrices::cubic(ls.h, h), ag::matrices::cubic(ls.w, w));
}

Tensor subsample_flow(const Tensor& flow, int s) { return subsample_flow(Var::constant(flow), s).value(); }

Tensor upsample_flow(const Tensor& lowres, int s, int h, int w) {
  return upsample_flow(Var::constant(lowres), s, h, w).value();
}

Var predict_flows(const Var& future_to_past, const Var& past_to_future, int s, bool temporal_prediction) {
  if (!future_to_past.defined() || !past_to_future.defined()) {
    throw std::invalid_argument("predict_flows: reference-to-reference flow missing");
  }
  const Shape a = future_to_past.shape(), b = past_to_future.shape();
  if (!(a == b) || a.c != 2) throw std::invalid_argument("predict_flows: flows " + a.str() + " vs " + b.str());
  require_divisible(a.h, a.w, s);
  if (!temporal_prediction) return Var::constant(Tensor(Shape{a.n, 4, a.h / s, a.w / s}));
  return ag::scale(ag::concat_channels({subsample_flow(future_to_past, s), subsample_flow(past_to_future, s)}),
                   0.5);
}

MotionCodec::MotionCodec(const MotionCoderConfig& cfg, Rng& rng) : cfg_(cfg) {
  cfg.validate();
  coder_ = TransformCoder(cfg.coder(), rng);
}

MotionResult MotionCodec::forward(const Var& est_bwd, const Var& est_fwd, const Var& prediction, QuantMode mode,
                                  Rng* rng) const {
  const Shape fs = est_bwd.shape();
  if (!(fs == est_fwd.shape()) || fs.c != 2) {
    throw std::invalid_argument("motion codec: flows " + fs.str() + " vs " + est_fwd.shape().str());
  }
  const int s = cfg_.subsample;
  MotionResult r;
  r.prediction = prediction;
  const Var low = ag::concat_channels({subsample_flow(est_bwd, s), subsample_flow(est_fwd, s)});
  if (!(low.shape() == prediction.shape())) {
    throw std::invalid_argument("motion codec: prediction " + prediction.shape().str() + " vs " + low.shape().str());
  }
  r.delta = ag::sub(low, prediction);
  r.coded = coder_.forward(r.delta, mode, rng);
  const Var full = upsample_flow(ag::add(prediction, r.coded.x_hat), s, fs.h, fs.w);
  r.flow_bwd = ag::slice_channels(full, 0, 2);
  r.flow_fwd = ag::slice_channels(full, 2, 2);
  return r;
}

EncodedLatents MotionCodec::encode(const Tensor& delta) const { return encode_latents(coder_, delta); }

Tensor MotionCodec::decode_delta(const LatentChunks& chunks, int low_h, int low_w) const {
  return synthesize(coder_, decode_latents(coder_, chunks, low_h, low_w), low_h, low_w);
}

std::pair<Tensor, Tensor> MotionCodec::reconstruct(const Tensor& prediction, const Tensor& delta_hat, int h,
                                                   int w) const {
  ag::NoGradGuard guard;
  const Var full =
      upsample_flow(ag::add(Var::constant(prediction), Var::constant(delta_hat)), cfg_.subsample, h, w);
  return {ag::slice_channels(full, 0, 2).value(), ag::slice_channels(full, 2, 2).value()};
}

void MotionCodec::collect(const std::string& prefix, nn::ParamList& out) { coder_.collect(prefix, out); }

Tensor synthesize(const TransformCoder& coder, const Tensor& y_hat, int h, int w) {
  ag::NoGradGuard guard;
  return coder.synthesis(Var::constant(y_hat), h, w).value();
}

}  // namespace lhbd
