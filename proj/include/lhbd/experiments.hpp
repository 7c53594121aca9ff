#pragma once

#include <map>
#include <string>
#include <vector>

#include "lhbd/codec_pipeline.hpp"
#include "lhbd/evaluation.hpp"

namespace lhbd {

struct TestSequence {
  std::string name;
  VideoSequence seq;
  bool motion_heavy = false;
};

/// Held-out synthetic clips: constant velocity (two speeds), occlusion and a
/// static scene. Seeds never overlap the training pool's.
std::vector<TestSequence> synthetic_test_set(int size, int frames, std::uint64_t seed);
/// Every subdirectory of PNG frames is one sequence.
std::vector<TestSequence> directory_test_set(const std::filesystem::path& dir);

struct PointResult {
  /// Frame-averaged quality; bpp is all chunk bits over all coded pixels.
  RDPoint point;
  std::map<std::string, RDPoint> per_sequence;
  std::map<std::string, std::vector<FrameLog>> logs;
  double encode_seconds = 0.0;
  double decode_seconds = 0.0;
  /// Decoder output matched the encoder reconstructions bit for bit.
  bool drift_free = true;
};

/// Encodes and decodes every sequence with the full codec.
PointResult evaluate_models(const CodecModels& models, const std::vector<TestSequence>& set, int gop_size,
                            const std::string& label, const EncodeOptions& opt = {});
/// Every frame coded with the keyframe coder.
PointResult evaluate_all_intra(const TransformCoder& coder, const std::vector<TestSequence>& set,
                               const std::string& label);

RDCurve curve_of(const std::string& name, const std::vector<PointResult>& points);
/// One curve per sequence.
std::map<std::string, RDCurve> per_sequence_curves(const std::string& name, const std::vector<PointResult>& points);

/// BD rates of the on arm against the off arm, plus decode times.
AblationRow compare_arms(const std::string& toggle, const std::vector<PointResult>& on,
                         const std::vector<PointResult>& off);

/// The ablation toggles, each applied to a B-frame configuration.
inline const std::vector<std::string> kAblationToggles{"subsampling", "temporal_prediction", "mask", "context"};
/// Configuration with `toggle` switched to its off setting.
BFrameConfig toggle_off(BFrameConfig cfg, const std::string& toggle);

}  // namespace lhbd
