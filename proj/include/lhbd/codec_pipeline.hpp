#pragma once

#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "lhbd/compensation.hpp"
#include "lhbd/entropy_coding.hpp"
#include "lhbd/evaluation.hpp"
#include "lhbd/gop_planner.hpp"
#include "lhbd/motion_codec.hpp"
#include "lhbd/optical_flow.hpp"

namespace lhbd {

struct BFrameConfig {
  PyramidFlowConfig flow;
  MotionCoderConfig motion;
  CoderConfig residual;
  MaskNetConfig mask;
  FusionMode fusion = FusionMode::learned;

  /// Small networks sized for 64x64 training on one CPU core.
  static BFrameConfig desk();
  void validate() const;
};

/// Keyframe coder settings at desk scale.
CoderConfig desk_keyframe_config();

/// Output of the differentiable triplet pass.
struct TripletOutput {
  ag::Var x_hat;     // fused + residual
  ag::Var fused;
  ag::Var mask;
  ag::Var warped_past;
  ag::Var warped_future;
  MotionResult motion;
  CoderOutput residual;
  ag::Var bits_motion;    // scalar, y + z
  ag::Var bits_residual;  // scalar, y + z
};

/// Flow estimator, motion codec, mask network and residual coder; one set of
/// weights serves every hierarchy level.
class BFrameModel {
 public:
  BFrameModel() = default;
  BFrameModel(const BFrameConfig& cfg, Rng& rng);

  [[nodiscard]] const BFrameConfig& config() const { return cfg_; }

  /// Codes `target` from two references. Reference-to-reference flows are
  /// estimated by the model itself when prediction is on, and training
  /// gradients reach the estimator through them as well.
  [[nodiscard]] TripletOutput forward(const ag::Var& past, const ag::Var& target, const ag::Var& future,
                                      QuantMode mode, Rng* rng) const;

  /// Mask for warped references: learned net output, or 0.5 everywhere.
  [[nodiscard]] ag::Var mask_for(const ag::Var& warped_past, const ag::Var& warped_future) const;

  void collect(nn::ParamList& out);

  FlowEstimator flow;
  MotionCodec motion;
  MaskNet mask;
  TransformCoder residual;

 private:
  BFrameConfig cfg_;
};

struct CodecModels {
  TransformCoder keyframe;
  BFrameModel bframe;
  int lambda_id = 0;
};

/// Header flags implied by a model set.
StreamHeader header_for(const CodecModels& models);
/// Throws ConfigMismatchError when the stream was produced with other flags.
void check_compatible(const StreamHeader& header, const CodecModels& models);

/// Frames are coded at a size padded (by edge replication) to a multiple of this.
inline constexpr int kCodingAlignment = 16;
int padded_size(int n);

enum class FlowSource { decoded, estimated };

struct StoredFlow {
  FlowField field;
  FlowSource source = FlowSource::decoded;
};

/// Decoded frames and flows, keyed by display index and (source, points_to).
class DecodedStore {
 public:
  void put_frame(int index, Frame f);
  [[nodiscard]] const Frame& frame(int index) const;
  [[nodiscard]] bool has_frame(int index) const { return frames_.count(index) > 0; }

  void put_flow(FlowField f, FlowSource source);
  [[nodiscard]] const StoredFlow& flow(int source, int points_to) const;
  [[nodiscard]] bool has_flow(int source, int points_to) const { return flows_.count({source, points_to}) > 0; }

  [[nodiscard]] const std::map<int, Frame>& frames() const { return frames_; }
  [[nodiscard]] const std::map<std::pair<int, int>, StoredFlow>& flows() const { return flows_; }

 private:
  std::map<int, Frame> frames_;
  std::map<std::pair<int, int>, StoredFlow> flows_;
};

struct EncodeOptions {
  /// Diagnostic mode: skip residual chunks; B frames decode to the fused prediction.
  bool residual = true;
};

struct StepResult {
  std::vector<Chunk> chunks;
  Frame decoded;
};

/// Input frames must already be padded to the coding size.
StepResult encode_keyframe(const Frame& frame, int index, const TransformCoder& coder);
Frame decode_keyframe(const std::vector<Chunk>& chunks, int height, int width, const TransformCoder& coder);

/// Codes one B frame; references are read from `store`, the decoded target
/// and its decoded flows are written back.
StepResult encode_bstep(const CodingStep& step, const Frame& target, DecodedStore& store,
                        const BFrameModel& model, const EncodeOptions& opt = {});
Frame decode_bstep(const CodingStep& step, const std::vector<Chunk>& chunks, DecodedStore& store,
                   const BFrameModel& model);

struct EncodeResult {
  Bitstream stream;
  /// Encoder-side reconstructions in display order, at the original size.
  std::vector<Frame> reconstructions;
  std::vector<FrameLog> logs;  // display order
};

EncodeResult encode_video(const VideoSequence& seq, int gop_size, const CodecModels& models,
                          const EncodeOptions& opt = {});
VideoSequence decode_video(const Bitstream& stream, const CodecModels& models);

/// Per-frame bits of a stream split by chunk category, in display order.
std::vector<FrameLog> rate_profile(const Bitstream& stream);

}  // namespace lhbd
