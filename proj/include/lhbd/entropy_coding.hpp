#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lhbd/transform_coder.hpp"

namespace lhbd {

using Bytes = std::vector<std::uint8_t>;

namespace entropy {

inline constexpr int kPrecision = 16;
inline constexpr std::uint32_t kTotal = 1u << kPrecision;
/// Largest half-width of a Gaussian symbol support, in bins.
inline constexpr int kMaxHalfWidth = 2048;

/// Quantized cumulative frequency table over the integers [lo, lo + n - 2]
/// plus a trailing escape symbol. cdf has n + 1 entries, cdf[0] = 0,
/// cdf[n] = kTotal, every symbol has frequency >= 1.
struct DiscreteModel {
  int lo = 0;
  std::vector<std::uint32_t> cdf;

  [[nodiscard]] int symbols() const { return static_cast<int>(cdf.size()) - 1; }
  [[nodiscard]] int escape() const { return symbols() - 1; }
  [[nodiscard]] int hi() const { return lo + symbols() - 2; }
  /// Bits the coder spends on `value` under this table (escape included).
  [[nodiscard]] double cost_bits(int value) const;
};

/// Builds a table from bin probabilities of [lo, lo + probs.size() - 1]; the
/// missing mass goes to the escape symbol.
DiscreteModel quantize_pmf(int lo, std::span<const double> probs);
/// Gaussian bin model on [floor(mu - 30 sigma), ceil(mu + 30 sigma)].
DiscreteModel gaussian_model(double mu, double sigma);
/// Factorized-prior model for one z channel, support chosen from the CDF tails.
DiscreteModel prior_model(const FactorizedPrior& prior, int channel);

class RangeEncoder {
 public:
  void encode(std::uint32_t start, std::uint32_t freq);
  /// Out-of-support values are escape-coded with their raw 32-bit pattern.
  void encode_symbol(const DiscreteModel& m, int value);
  Bytes finish();

 private:
  void shift_low();

  std::uint64_t low_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
  std::uint8_t cache_ = 0;
  std::uint64_t cache_size_ = 1;
  Bytes out_;
};

class RangeDecoder {
 public:
  explicit RangeDecoder(std::span<const std::uint8_t> bytes);

  int decode_symbol(const DiscreteModel& m);
  /// Bytes consumed beyond the end of the input (non-zero signals corruption).
  [[nodiscard]] std::size_t overrun() const { return overrun_; }

 private:
  std::uint32_t decode_target();
  void consume(std::uint32_t start, std::uint32_t freq);
  std::uint32_t decode_raw16();
  std::uint8_t next_byte();

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
  std::size_t overrun_ = 0;
  std::uint32_t code_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
  std::uint32_t r_ = 0;
};

/// Convenience wrappers over a symbol sequence with one model per symbol.
Bytes range_encode(std::span<const int> symbols, std::span<const DiscreteModel> models);
std::vector<int> range_decode(std::span<const std::uint8_t> bytes, std::span<const DiscreteModel> models);

std::uint32_t crc32(std::span<const std::uint8_t> bytes);

}  // namespace entropy

// ---------------------------------------------------------------------------
// Coded latents of one transform-coder pass.

struct LatentChunks {
  Bytes y;
  Bytes z;
};

struct EncodedLatents {
  LatentChunks chunks;
  Tensor y_hat;
  Tensor z_hat;
  double estimated_bits_y = 0.0;  // sum of -log2 p under the continuous model
  double estimated_bits_z = 0.0;
};

/// x: (1, C, H, W) with H, W multiples of 16.
EncodedLatents encode_latents(const TransformCoder& coder, const Tensor& x);
/// Returns y_hat for an input of size (h, w). The decoder re-derives every
/// entropy model from z (and decoded context when enabled).
Tensor decode_latents(const TransformCoder& coder, const LatentChunks& chunks, int h, int w);

// ---------------------------------------------------------------------------
// Container

enum class ChunkKind : std::uint8_t {
  keyframe_y = 0,
  keyframe_z = 1,
  motion_y = 2,
  motion_z = 3,
  residual_y = 4,
  residual_z = 5,
};

struct Chunk {
  ChunkKind kind = ChunkKind::keyframe_y;
  std::uint32_t frame = 0;
  Bytes payload;

  friend bool operator==(const Chunk&, const Chunk&) = default;
};

struct StreamHeader {
  static constexpr std::uint8_t kVersion = 1;

  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint16_t gop_size = 8;
  std::uint8_t lambda_id = 0;
  std::uint32_t frame_count = 0;
  int subsampling = 4;  // 1, 2 or 4
  bool temporal_prediction = true;
  bool context_model = false;
  bool learned_mask = true;

  [[nodiscard]] std::uint8_t flags() const;
  static StreamHeader with_flags(StreamHeader base, std::uint8_t flags);
  friend bool operator==(const StreamHeader&, const StreamHeader&) = default;
};

struct Bitstream {
  StreamHeader header;
  std::vector<Chunk> chunks;
};

Bytes write_bitstream(const Bitstream& stream);
/// Throws DataError on bad magic, unknown version, truncation, trailing bytes
/// or checksum mismatch.
Bitstream read_bitstream(std::span<const std::uint8_t> bytes);

/// Bytes attributed to each frame (payload plus per-chunk framing).
std::vector<std::size_t> bytes_per_frame(const Bitstream& stream);
inline constexpr std::size_t kHeaderBytes = 21;
inline constexpr std::size_t kChunkFramingBytes = 13;

}  // namespace lhbd
