#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lhbd/tensor.hpp"

namespace lhbd {

/// RGB image with values in [0, 1], stored as a (1, 3, H, W) tensor.
class Frame {
 public:
  Frame() = default;
  Frame(int height, int width) : pixels_(Shape{1, 3, height, width}) {}
  /// Validates shape (1, 3, H, W) and range.
  explicit Frame(Tensor pixels);

  [[nodiscard]] int height() const { return pixels_.h(); }
  [[nodiscard]] int width() const { return pixels_.w(); }
  [[nodiscard]] const Tensor& pixels() const { return pixels_; }
  Tensor& pixels() { return pixels_; }
  [[nodiscard]] double at(int c, int y, int x) const { return pixels_.at(0, c, y, x); }
  double& at(int c, int y, int x) { return pixels_.at(0, c, y, x); }

  /// Clamps into [0, 1]; used where a computed image must become a Frame.
  static Frame clamped(const Tensor& t);

  /// Interleaved RGB24 bytes, rounding to nearest.
  [[nodiscard]] std::vector<std::uint8_t> to_rgb24() const;
  static Frame from_rgb24(const std::uint8_t* bytes, int height, int width);

 private:
  Tensor pixels_;
};

struct VideoSequence {
  std::vector<Frame> frames;
  double frame_rate = 30.0;

  [[nodiscard]] int height() const { return frames.empty() ? 0 : frames.front().height(); }
  [[nodiscard]] int width() const { return frames.empty() ? 0 : frames.front().width(); }
  [[nodiscard]] int size() const { return static_cast<int>(frames.size()); }
  /// Throws DataError on an empty sequence or mixed dimensions.
  void validate() const;
};

enum class SequenceFormat { png_sequence, raw_rgb24 };

struct RawLayout {
  int width = 0;
  int height = 0;
  int frames = 0;
};

/// PNG sequences: every *.png in the directory, sorted by file name.
/// Raw: interleaved 8-bit RGB, frame after frame, dimensions from `layout`.
VideoSequence load_sequence(const std::filesystem::path& path, SequenceFormat format,
                            std::optional<RawLayout> layout = std::nullopt);

Frame load_png(const std::filesystem::path& path);
void save_png(const Frame& frame, const std::filesystem::path& path);
/// Writes frame_0000.png, frame_0001.png, ... into `dir` (created if needed).
void save_png_sequence(const VideoSequence& seq, const std::filesystem::path& dir);
void save_raw_rgb24(const VideoSequence& seq, const std::filesystem::path& path);

struct TripletSample {
  Frame past;
  Frame middle;
  Frame future;
  int level = 1;
  /// 1-based source indices (past, middle, future) within the septuplet.
  std::array<int, 3> indices{};
};

/// All 9 hierarchy-emulating triplets of a 7-frame clip: one level-1 (1-4-7),
/// three level-2 (stride 2) and five level-3 (stride 1).
std::vector<TripletSample> make_triplets(const VideoSequence& septuplet);

enum class SyntheticKind { constant_velocity, occlusion, static_scene, noise };

struct SyntheticSpec {
  SyntheticKind kind = SyntheticKind::constant_velocity;
  int frames = 9;
  int height = 64;
  int width = 64;
  /// Background velocity in px/frame (dx, dy).
  std::array<double, 2> velocity{1.0, 0.0};
  /// Foreground patch velocity and size for the occlusion generator.
  std::array<double, 2> fg_velocity{-2.0, 0.0};
  int patch = 20;
  std::uint64_t seed = 0;
};

SyntheticKind parse_synthetic_kind(const std::string& name);
[[nodiscard]] std::string to_string(SyntheticKind kind);

VideoSequence synth_sequence(const SyntheticSpec& spec);
/// Exact flow from frame `source` to frame `reference` of the synthetic clip, as a
/// (1, 2, H, W) tensor under the backward-warp convention.
Tensor synth_flow(const SyntheticSpec& spec, int source, int reference);

/// Same random window for every frame; deterministic in `seed`.
std::vector<Frame> random_crop(const std::vector<Frame>& frames, int size, std::uint64_t seed);

}  // namespace lhbd
