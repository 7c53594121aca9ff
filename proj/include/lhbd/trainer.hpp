#pragma once

#include <array>
#include <functional>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lhbd/codec_pipeline.hpp"

namespace lhbd {

/// Lambda grids of the keyframe coder and the B-frame model; index i of one
/// grid is paired with index i of the other.
inline constexpr std::array<double, 5> kKeyframeLambdas{0.0130, 0.0250, 0.0483, 0.0932, 0.1800};
inline constexpr std::array<double, 5> kBFrameLambdas{0.0035, 0.0067, 0.0130, 0.0250, 0.0483};
/// Distortion enters the loss as lambda * kDistortionScale * D (D on [0,1] pixels).
inline constexpr double kDistortionScale = 255.0 * 255.0;

enum class Distortion { mse, one_minus_msssim };
enum class EndpointMode { decoded, pristine };

struct TrainConfig {
  double lambda = kBFrameLambdas[0];
  Distortion distortion = Distortion::mse;
  int batch_size = 4;
  int crop = 64;
  double lr_init = 1e-4;
  int plateau_patience = 200;
  double lr_decay_factor = 2.0;
  int max_iters = 2000;
  std::uint64_t seed = 0;
  EndpointMode endpoints = EndpointMode::decoded;
  /// Gradient norm clip (0 disables).
  double clip_norm = 0.0;

  void validate() const;
};

nlohmann::json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});

struct LossBreakdown {
  double L = 0.0;
  double D = 0.0;
  double R_image = 0.0;
  double R_flow = 0.0;
  double R_residual = 0.0;
};

struct IterLog {
  int iter = 0;
  LossBreakdown loss;
  double lr = 0.0;
};

std::string to_json_line(const IterLog& log);

class Adam {
 public:
  Adam(nn::ParamList params, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  /// Applies one update from the gradients currently held by the parameters,
  /// then clears them. Returns the global gradient norm before clipping.
  double step(double clip_norm = 0.0);
  void zero_grad();
  [[nodiscard]] double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }

 private:
  nn::ParamList params_;
  std::vector<Tensor> m_, v_;
  double lr_, beta1_, beta2_, eps_;
  int t_ = 0;
};

/// Halves (by `factor`) the learning rate when the smoothed loss has not
/// improved on its best value for `patience` iterations.
class PlateauSchedule {
 public:
  PlateauSchedule(int patience, double factor, double smoothing = 0.02);
  /// Returns the multiplier to apply to the learning rate (1 or 1/factor).
  double observe(double loss);
  [[nodiscard]] double smoothed() const { return ema_; }

 private:
  int patience_;
  double factor_;
  double smoothing_;
  double ema_ = 0.0;
  double best_ = 0.0;
  bool started_ = false;
  int since_best_ = 0;
};

/// Fixed pool of 7-frame clips that training samples from (reshuffled as it
/// is consumed).
class ClipPool {
 public:
  /// Synthetic clips of the motion-carrying kinds with random velocities.
  static ClipPool synthetic(int clips, int size, std::uint64_t seed);
  /// Every subdirectory holding at least 7 PNG frames becomes one clip.
  static ClipPool from_directory(const std::filesystem::path& dir);

  [[nodiscard]] std::size_t size() const { return clips_.size(); }
  [[nodiscard]] const std::vector<VideoSequence>& clips() const { return clips_; }

  /// Random triplet (any hierarchy level) from a random clip, cropped.
  TripletSample sample_triplet(Rng& rng, int crop);
  /// Random single frame, cropped.
  Frame sample_frame(Rng& rng, int crop);

 private:
  std::vector<VideoSequence> clips_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
  std::size_t next_clip(Rng& rng);
};

using LogSink = std::function<void(const IterLog&)>;

/// Writes each log as a JSON line.
LogSink json_lines_sink(std::ostream& out);

struct FlowPretrainConfig {
  int iters = 1200;
  int batch_size = 4;
  int crop = 64;
  double lr = 1e-3;
  std::uint64_t seed = 0;
};

/// Supervised pretraining of the pyramid on synthetic translations with known
/// flow; D is the mean squared end-point error and L = D.
std::vector<IterLog> pretrain_flow(FlowEstimator& net, const FlowPretrainConfig& cfg, const LogSink& sink = {});

/// Loss of the keyframe coder on a batch: lambda * scale * D + R_image.
LossBreakdown keyframe_loss(const TransformCoder& coder, const ag::Var& batch, const TrainConfig& cfg, Rng& rng,
                            ag::Var* loss = nullptr);
std::vector<IterLog> pretrain_keyframe(TransformCoder& coder, ClipPool& data, const TrainConfig& cfg,
                                       const LogSink& sink = {});

/// Loss of the B-frame model on a batch of triplets: lambda * scale * D + R_flow + R_residual.
LossBreakdown triplet_loss(const BFrameModel& model, const ag::Var& past, const ag::Var& target,
                           const ag::Var& future, const TrainConfig& cfg, QuantMode mode, Rng* rng,
                           ag::Var* loss = nullptr);

/// Endpoints are passed through the frozen keyframe coder in decoded mode.
std::vector<IterLog> train_bidirectional(BFrameModel& model, ClipPool& data, const TrainConfig& cfg,
                                         const TransformCoder* keyframe, const LogSink& sink = {});

/// Batch of triplets as three (N, 3, crop, crop) tensors.
struct TripletBatch {
  ag::Var past, target, future;
};
TripletBatch make_triplet_batch(ClipPool& data, Rng& rng, int batch, int crop, const TransformCoder* keyframe);

/// Finite-difference checks of the trainable modules at tiny sizes. Keys:
/// warp, flow, resample, mask, keyframe_coder, bframe_loss, rate.
std::map<std::string, double> grad_check(const std::string& selector = "all", double input_scale = 1.0,
                                         std::uint64_t seed = 0);

}  // namespace lhbd
