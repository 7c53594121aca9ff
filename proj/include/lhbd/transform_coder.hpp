#pragma once

#include <array>
#include <string>
#include <vector>

#include "lhbd/nn.hpp"

namespace lhbd {

inline constexpr double kSigmaMin = 0.11;
/// Probability floor of a single quantization bin (2^-16).
inline constexpr double kProbabilityFloor = 1.0 / 65536.0;

enum class QuantMode { train, infer };

/// Round half away from zero.
double quantize_value(double v);
/// train: y + u, u ~ U(-0.5, 0.5) i.i.d. (drawn from rng); infer: rounding, and
/// the result is cut from the graph.
ag::Var quantize(const ag::Var& y, QuantMode mode, Rng* rng);

/// Probability mass of the integer bin around yhat under N(mu, sigma^2),
/// computed from the tail closest to the mean for accuracy.
double gaussian_bin_probability(double yhat, double mu, double sigma);
/// Per-element -log2(max(p, 2^-16)); differentiable in all three inputs.
ag::Var gaussian_bits(const ag::Var& yhat, const ag::Var& mu, const ag::Var& sigma);

/// Learned per-channel monotone cumulative density for the hyper-latent
/// (the non-parametric "factorized" prior with filter widths 3,3,3).
class FactorizedPrior {
 public:
  static constexpr std::array<int, 5> kDims{1, 3, 3, 3, 1};

  FactorizedPrior() = default;
  FactorizedPrior(int channels, Rng& rng);

  [[nodiscard]] int channels() const { return channels_; }
  /// Per-element bits of integer-or-noisy z, shaped like z.
  [[nodiscard]] ag::Var bits(const ag::Var& z) const;
  /// Bin probability of integer `symbol` in channel c (floored).
  [[nodiscard]] double probability(int c, double symbol) const;
  [[nodiscard]] double cdf(int c, double x) const;
  void collect(const std::string& prefix, nn::ParamList& out);

 private:
  [[nodiscard]] double logit(int c, double x) const;

  int channels_ = 0;
  std::array<ag::Var, 4> matrices_;  // (C, d_out, d_in, 1), softplus applied
  std::array<ag::Var, 4> biases_;    // (C, d_out, 1, 1)
  std::array<ag::Var, 3> factors_;   // (C, d_out, 1, 1), tanh applied
};

struct CoderConfig {
  int in_channels = 3;
  int out_channels = 3;
  int filters = 128;     // N
  int latent = 128;      // channels of y
  int hyper_latent = 0;  // channels of z; 0 means `filters`
  bool context_model = false;

  [[nodiscard]] int z_channels() const { return hyper_latent > 0 ? hyper_latent : filters; }
};

/// Entropy parameters of y. sigma >= kSigmaMin everywhere.
struct EntropyParams {
  ag::Var mu;
  ag::Var sigma;
};

struct CoderOutput {
  ag::Var x_hat;
  ag::Var y;
  ag::Var y_hat;
  ag::Var z_hat;
  EntropyParams params;
  ag::Var bits_y;  // scalar sums
  ag::Var bits_z;
};

/// Mean-scale hyperprior transform coder: four stride-2 analysis stages
/// (total stride 16 for y) and two more for z (stride 64).
class TransformCoder {
 public:
  TransformCoder() = default;
  TransformCoder(const CoderConfig& cfg, Rng& rng);

  [[nodiscard]] const CoderConfig& config() const { return cfg_; }

  [[nodiscard]] ag::Var analysis(const ag::Var& x) const;
  /// Synthesizes an output of spatial size (h, w).
  [[nodiscard]] ag::Var synthesis(const ag::Var& y_hat, int h, int w) const;
  [[nodiscard]] ag::Var hyper_analysis(const ag::Var& y) const;
  /// Raw (2*latent channel) hyper output cropped to the y grid (yh, yw).
  [[nodiscard]] ag::Var hyper_synthesis_raw(const ag::Var& z_hat, int yh, int yw) const;
  /// Entropy parameters for y. With the context model on, y_hat supplies the
  /// causal context (entries at or after a raster position never influence it).
  [[nodiscard]] EntropyParams entropy_params(const ag::Var& hyper_raw, const ag::Var& y_hat) const;

  /// Full pass with the given quantization mode; rates are summed bits.
  [[nodiscard]] CoderOutput forward(const ag::Var& x, QuantMode mode, Rng* rng) const;

  [[nodiscard]] const FactorizedPrior& prior() const { return prior_; }
  void collect(const std::string& prefix, nn::ParamList& out);

  /// Spatial size of y for an input of size n.
  static int latent_size(int n);
  static int hyper_size(int n);

 private:
  [[nodiscard]] ag::Var context_features(const ag::Var& y_hat) const;

  CoderConfig cfg_;
  std::array<nn::Conv2d, 4> analysis_;
  std::array<nn::Gdn, 3> gdn_;
  std::array<nn::ConvTranspose2d, 4> synthesis_;
  std::array<nn::Gdn, 3> igdn_;
  std::array<nn::Conv2d, 3> hyper_analysis_;
  std::array<nn::ConvTranspose2d, 2> hyper_synthesis_;
  nn::Conv2d hyper_out_;
  FactorizedPrior prior_;
  // Context model (only populated when cfg.context_model).
  nn::Conv2d context_conv_;
  Tensor context_mask_;
  nn::Conv2d fusion0_;
  nn::Conv2d fusion1_;
};

}  // namespace lhbd
