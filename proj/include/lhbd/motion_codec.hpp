#pragma once

#include "lhbd/entropy_coding.hpp"
#include "lhbd/optical_flow.hpp"
#include "lhbd/transform_coder.hpp"

namespace lhbd {

struct MotionCoderConfig {
  int filters = 128;
  int latent = 128;
  int hyper_latent = 0;
  int subsample = 4;  // 1, 2 or 4
  bool temporal_prediction = true;
  bool context_model = false;

  [[nodiscard]] CoderConfig coder() const;
  void validate() const;
};

/// Separable Catmull-Rom resampling of every channel to (H/s, W/s); s = 1 is
/// the identity. Vector magnitudes are not rescaled.
ag::Var subsample_flow(const ag::Var& flow, int s);
ag::Var upsample_flow(const ag::Var& lowres, int s, int h, int w);
Tensor subsample_flow(const Tensor& flow, int s);
Tensor upsample_flow(const Tensor& lowres, int s, int h, int w);

/// Low-resolution prediction stacked as [bwd dx, bwd dy, fwd dx, fwd dy]:
/// bwd = 0.5 * subsample(m(future -> past)), fwd = 0.5 * subsample(m(past -> future)),
/// or zero when prediction is off. Reference flows are full resolution (N, 2, H, W).
ag::Var predict_flows(const ag::Var& future_to_past, const ag::Var& past_to_future, int s,
                      bool temporal_prediction);

struct MotionResult {
  ag::Var prediction;  // low-res, 4 channels
  ag::Var delta;       // subsampled estimate minus prediction
  CoderOutput coded;   // coded.x_hat is the reconstructed delta
  ag::Var flow_bwd;    // reconstructed full-res m(target -> past)
  ag::Var flow_fwd;    // reconstructed full-res m(target -> future)
};

class MotionCodec {
 public:
  MotionCodec() = default;
  MotionCodec(const MotionCoderConfig& cfg, Rng& rng);

  [[nodiscard]] const MotionCoderConfig& config() const { return cfg_; }
  [[nodiscard]] const TransformCoder& coder() const { return coder_; }

  /// Differentiable path used in training (and by the encoder for rate estimates).
  [[nodiscard]] MotionResult forward(const ag::Var& est_bwd, const ag::Var& est_fwd, const ag::Var& prediction,
                                     QuantMode mode, Rng* rng) const;

  /// Bit-exact inference helpers. delta is (1, 4, H/s, W/s).
  [[nodiscard]] EncodedLatents encode(const Tensor& delta) const;
  [[nodiscard]] Tensor decode_delta(const LatentChunks& chunks, int low_h, int low_w) const;
  /// upsample(prediction + delta_hat) split into (bwd, fwd) full-res fields.
  [[nodiscard]] std::pair<Tensor, Tensor> reconstruct(const Tensor& prediction, const Tensor& delta_hat, int h,
                                                      int w) const;

  void collect(const std::string& prefix, nn::ParamList& out);

 private:
  MotionCoderConfig cfg_;
  TransformCoder coder_;
};

/// Synthesis of decoded latents, shared by encoder and decoder.
Tensor synthesize(const TransformCoder& coder, const Tensor& y_hat, int h, int w);

}  // namespace lhbd
