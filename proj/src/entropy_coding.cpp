#include "lhbd/entropy_coding.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "lhbd/errors.hpp"

namespace lhbd {
namespace entropy {

namespace {
constexpr std::uint32_t kTop = 1u << 24;
}

double DiscreteModel::cost_bits(int value) const {
  auto freq_bits = [&](int s) {
    const auto su = static_cast<std::size_t>(s);
    return -std::log2(static_cast<double>(cdf[su + 1] - cdf[su]) / kTotal);
  };
  if (value < lo || value > hi()) return freq_bits(escape()) + 32.0;
  return freq_bits(value - lo);
}

DiscreteModel quantize_pmf(int lo, std::span<const double> probs) {
  const std::size_t n = probs.size() + 1;
  if (n > kTotal / 2) throw std::invalid_argument("quantize_pmf: support too large");
  double mass = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw NumericalError("quantize_pmf: invalid probability");
    mass += p;
  }
  const double escape = std::max(0.0, 1.0 - mass);
  const double norm = std::max(1.0, mass + escape);
  const double avail = static_cast<double>(kTotal - n);

  std::vector<std::uint32_t> freq(n);
  std::uint64_t used = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = (i + 1 < n ? probs[i] : escape) / norm;
    freq[i] = 1 + static_cast<std::uint32_t>(std::floor(p * avail));
    used += freq[i];
  }
  // Leftover precision goes to the most probable symbol.
  const auto top = std::max_element(freq.begin(), freq.end());
  *top += static_cast<std::uint32_t>(kTotal - used);

  DiscreteModel m;
  m.lo = lo;
  m.cdf.resize(n + 1);
  m.cdf[0] = 0;
  for (std::size_t i = 0; i < n; ++i) m.cdf[i + 1] = m.cdf[i] + freq[i];
  return m;
}

DiscreteModel gaussian_model(double mu, double sigma) {
  if (!std::isfinite(mu) || !std::isfinite(sigma) || sigma <= 0.0) {
    throw NumericalError("gaussian_model: invalid parameters");
  }
  const double hw = std::min(30.0 * sigma, static_cast<double>(kMaxHalfWidth));
  const int lo = static_cast<int>(std::floor(mu - hw));
  const int hi = static_cast<int>(std::ceil(mu + hw));
  std::vector<double> p(static_cast<std::size_t>(hi - lo + 1));
  for (int k = lo; k <= hi; ++k) p[static_cast<std::size_t>(k - lo)] = gaussian_bin_probability(k, mu, sigma);
  return quantize_pmf(lo, p);
}

DiscreteModel prior_model(const FactorizedPrior& prior, int channel) {
  constexpr double kTail = 1e-9;
  constexpr int kBound = 2 * kMaxHalfWidth;
  // Largest lo with cdf(lo - 0.5) <= tail; smallest hi with 1 - cdf(hi + 0.5) <= tail.
  int a = -kBound, b = kBound;
  while (a < b) {
    const int mid = a + (b - a + 1) / 2;
    if (prior.cdf(channel, mid - 0.5) <= kTail) a = mid; else b = mid - 1;
  }
  const int lo = a;
  a = lo;
  b = kBound;
  while (a < b) {
    const int mid = a + (b - a) / 2;
    if (1.0 - prior.cdf(channel, mid + 0.5) <= kTail) b = mid; else a = mid + 1;
  }
  const int hi = std::max(a, lo);
  std::vector<double> p(static_cast<std::size_t>(hi - lo + 1));
  for (int k = lo; k <= hi; ++k)
    p[static_cast<std::size_t>(k - lo)] = std::max(0.0, prior.cdf(channel, k + 0.5) - prior.cdf(channel, k - 0.5));
  return quantize_pmf(lo, p);
}

// ---------------------------------------------------------------------------

void RangeEncoder::shift_low() {
  if (static_cast<std::uint32_t>(low_) < 0xFF000000u || (low_ >> 32) != 0) {
    const auto carry = static_cast<std::uint8_t>(low_ >> 32);
    std::uint8_t temp = cache_;
    do {
      out_.push_back(static_cast<std::uint8_t>(temp + carry));
      temp = 0xFF;
    } while (--cache_size_ != 0);
    cache_ = static_cast<std::uint8_t>(static_cast<std::uint32_t>(low_) >> 24);
  }
  ++cache_size_;
  low_ = static_cast<std::uint64_t>(static_cast<std::uint32_t>(low_) << 8);
}

void RangeEncoder::encode(std::uint32_t start, std::uint32_t freq) {
  const std::uint32_t r = range_ >> kPrecision;
  low_ += static_cast<std::uint64_t>(r) * start;
  range_ = r * freq;
  while (range_ < kTop) {
    range_ <<= 8;
    shift_low();
  }
}

void RangeEncoder::encode_symbol(const DiscreteModel& m, int value) {
  int s = value - m.lo;
  const bool escaped = value < m.lo || value > m.hi();
  if (escaped) s = m.escape();
  const auto su = static_cast<std::size_t>(s);
  encode(m.cdf[su], m.cdf[su + 1] - m.cdf[su]);
  if (escaped) {
    const auto raw = static_cast<std::uint32_t>(value);
    encode(raw >> 16, 1);
    encode(raw & 0xFFFFu, 1);
  }
}

Bytes RangeEncoder::finish() {
  for (int i = 0; i < 5; ++i) shift_low();
  Bytes out = std::move(out_);
  *this = RangeEncoder();
  return out;
}

RangeDecoder::RangeDecoder(std::span<const std::uint8_t> bytes) : in_(bytes) {
  for (int i = 0; i < 5; ++i) code_ = (code_ << 8) | next_byte();
}

std::uint8_t RangeDecoder::next_byte() {
  if (pos_ < in_.size()) return in_[pos_++];
  ++overrun_;
  return 0;
}

std::uint32_t RangeDecoder::decode_target() {
  r_ = range_ >> kPrecision;
  const std::uint32_t v = code_ / r_;
  return std::min(v, kTotal - 1);
}

void RangeDecoder::consume(std::uint32_t start, std::uint32_t freq) {
  code_ -= r_ * start;
  range_ = r_ * freq;
  while (range_ < kTop) {
    code_ = (code_ << 8) | next_byte();
    range_ <<= 8;
  }
}

std::uint32_t RangeDecoder::decode_raw16() {
  const std::uint32_t v = decode_target();
  consume(v, 1);
  return v;
}

int RangeDecoder::decode_symbol(const DiscreteModel& m) {
  const std::uint32_t target = decode_target();
  const auto it = std::upper_bound(m.cdf.begin(), m.cdf.end(), target);
  const auto s = static_cast<std::size_t>(it - m.cdf.begin() - 1);
  consume(m.cdf[s], m.cdf[s + 1] - m.cdf[s]);
  if (static_cast<int>(s) != m.escape()) return m.lo + static_cast<int>(s);
  const std::uint32_t high = decode_raw16();
  const std::uint32_t low = decode_raw16();
  const auto value = static_cast<std::int32_t>((high << 16) | low);
  if (value >= m.lo && value <= m.hi()) throw DataError("range decoder: escape of an in-support symbol");
  return value;
}

Bytes range_encode(std::span<const int> symbols, std::span<const DiscreteModel> models) {
  if (symbols.size() != models.size()) throw std::invalid_argument("range_encode: one model per symbol");
  RangeEncoder enc;
  for (std::size_t i = 0; i < symbols.size(); ++i) enc.encode_symbol(models[i], symbols[i]);
  return enc.finish();
}

std::vector<int> range_decode(std::span<const std::uint8_t> bytes, std::span<const DiscreteModel> models) {
  RangeDecoder dec(bytes);
  std::vector<int> out;
  out.reserve(models.size());
  for (const auto& m : models) out.push_back(dec.decode_symbol(m));
  if (dec.overrun() > 0) throw DataError("range decoder: stream ended early");
  return out;
}

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  return static_cast<std::uint32_t>(
      ::crc32(::crc32(0L, Z_NULL, 0), bytes.data(), static_cast<uInt>(bytes.size())));
}

}  // namespace entropy

// ---------------------------------------------------------------------------
// Latent coding

namespace {

int to_symbol(double v) {
  if (!std::isfinite(v) || std::abs(v) > 2.0e9) throw NumericalError("latent value out of range");
  return static_cast<int>(v);
}

}  // namespace

EncodedLatents encode_latents(const TransformCoder& coder, const Tensor& x) {
  if (x.n() != 1) throw std::invalid_argument("encode_latents: one image at a time");
  ag::NoGradGuard guard;
  const ag::Var y = coder.analysis(ag::Var::constant(x));
  const ag::Var z_hat = quantize(coder.hyper_analysis(y), QuantMode::infer, nullptr);
  const ag::Var y_hat = quantize(y, QuantMode::infer, nullptr);
  const Shape ys = y_hat.shape(), zs = z_hat.shape();
  const ag::Var raw = coder.hyper_synthesis_raw(z_hat, ys.h, ys.w);

  EncodedLatents out;
  out.y_hat = y_hat.value();
  out.z_hat = z_hat.value();

  entropy::RangeEncoder zenc;
  for (int c = 0; c < zs.c; ++c) {
    const entropy::DiscreteModel m = entropy::prior_model(coder.prior(), c);
    for (std::size_t i = 0; i < zs.plane(); ++i) {
      const double v = z_hat.value().plane(0, c)[i];
      zenc.encode_symbol(m, to_symbol(v));
      out.estimated_bits_z += -std::log2(coder.prior().probability(c, v));
    }
  }
  out.chunks.z = zenc.finish();

  entropy::RangeEncoder yenc;
  auto code_element = [&](const EntropyParams& p, int c, int i, int j) {
    const double mu = p.mu.value().at(0, c, i, j), sigma = p.sigma.value().at(0, c, i, j);
    const double v = y_hat.value().at(0, c, i, j);
    yenc.encode_symbol(entropy::gaussian_model(mu, sigma), to_symbol(v));
    out.estimated_bits_y += -std::log2(std::max(gaussian_bin_probability(v, mu, sigma), kProbabilityFloor));
  };
  if (!coder.config().context_model) {
    const EntropyParams p = coder.entropy_params(raw, y_hat);
    for (int c = 0; c < ys.c; ++c)
      for (int i = 0; i < ys.h; ++i)
        for (int j = 0; j < ys.w; ++j) code_element(p, c, i, j);
  } else {
    // Same sequential evaluation as the decoder so both see identical models.
    Tensor partial(ys);
    for (int i = 0; i < ys.h; ++i)
      for (int j = 0; j < ys.w; ++j) {
        const EntropyParams p = coder.entropy_params(raw, ag::Var::constant(partial));
        for (int c = 0; c < ys.c; ++c) {
          code_element(p, c, i, j);
          partial.at(0, c, i, j) = y_hat.value().at(0, c, i, j);
        }
      }
  }
  out.chunks.y = yenc.finish();
  return out;
}

Tensor decode_latents(const TransformCoder& coder, const LatentChunks& chunks, int h, int w) {
  ag::NoGradGuard guard;
  const CoderConfig& cfg = coder.config();
  const Shape ys{1, cfg.latent, TransformCoder::latent_size(h), TransformCoder::latent_size(w)};
  const Shape zs{1, cfg.z_channels(), TransformCoder::hyper_size(h), TransformCoder::hyper_size(w)};

  Tensor z_hat(zs);
  entropy::RangeDecoder zdec(chunks.z);
  for (int c = 0; c < zs.c; ++c) {
    const entropy::DiscreteModel m = entropy::prior_model(coder.prior(), c);
    for (std::size_t i = 0; i < zs.plane(); ++i) z_hat.plane(0, c)[i] = zdec.decode_symbol(m);
  }
  if (zdec.overrun() > 0) throw DataError("hyper-latent chunk ended early");
  const ag::Var raw = coder.hyper_synthesis_raw(ag::Var::constant(z_hat), ys.h, ys.w);

  Tensor y_hat(ys);
  entropy::RangeDecoder ydec(chunks.y);
  auto decode_element = [&](const EntropyParams& p, int c, int i, int j) {
    y_hat.at(0, c, i, j) =
        ydec.decode_symbol(entropy::gaussian_model(p.mu.value().at(0, c, i, j), p.sigma.value().at(0, c, i, j)));
  };
  if (!cfg.context_model) {
    const EntropyParams p = coder.entropy_params(raw, ag::Var::constant(y_hat));
    for (int c = 0; c < ys.c; ++c)
      for (int i = 0; i < ys.h; ++i)
        for (int j = 0; j < ys.w; ++j) decode_element(p, c, i, j);
  } else {
    for (int i = 0; i < ys.h; ++i)
      for (int j = 0; j < ys.w; ++j) {
        const EntropyParams p = coder.entropy_params(raw, ag::Var::constant(y_hat));
        for (int c = 0; c < ys.c; ++c) decode_element(p, c, i, j);
      }
  }
  if (ydec.overrun() > 0) throw DataError("latent chunk ended early");
  return y_hat;
}

// ---------------------------------------------------------------------------
// Container

namespace {

constexpr char kMagic[4] = {'L', 'H', 'B', 'D'};

void put_u8(Bytes& b, std::uint8_t v) { b.push_back(v); }
void put_u16(Bytes& b, std::uint16_t v) {
  for (int i = 0; i < 2; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put_u32(Bytes& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}
  [[nodiscard]] std::size_t remaining() const { return b_.size() - pos_; }
  void need(std::size_t n, const char* what) const {
    if (remaining() < n) throw DataError(std::string("bitstream truncated in ") + what);
  }
  std::uint8_t u8() { return b_[pos_++]; }
  std::uint16_t u16() {
    const auto v = static_cast<std::uint16_t>(b_[pos_] | (b_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b_[pos_ + static_cast<std::size_t>(i)]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::span<const std::uint8_t> take(std::size_t n) {
    auto s = b_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

}  // namespace

std::uint8_t StreamHeader::flags() const {
  std::uint8_t code = 0;
  switch (subsampling) {
    case 1: code = 0; break;
    case 2: code = 1; break;
    case 4: code = 2; break;
    default: throw ConfigError("subsampling factor must be 1, 2 or 4");
  }
  return static_cast<std::uint8_t>(code | (temporal_prediction ? 4 : 0) | (context_model ? 8 : 0) |
                                   (learned_mask ? 16 : 0));
}

StreamHeader StreamHeader::with_flags(StreamHeader h, std::uint8_t flags) {
  const int code = flags & 3;
  if (code == 3 || (flags & 0xE0) != 0) throw DataError("bitstream: invalid flag bits");
  h.subsampling = 1 << code;
  h.temporal_prediction = (flags & 4) != 0;
  h.context_model = (flags & 8) != 0;
  h.learned_mask = (flags & 16) != 0;
  return h;
}

Bytes write_bitstream(const Bitstream& s) {
  Bytes b;
  b.insert(b.end(), kMagic, kMagic + 4);
  put_u8(b, StreamHeader::kVersion);
  put_u32(b, s.header.width);
  put_u32(b, s.header.height);
  put_u16(b, s.header.gop_size);
  put_u8(b, s.header.lambda_id);
  put_u32(b, s.header.frame_count);
  put_u8(b, s.header.flags());
  for (const Chunk& c : s.chunks) {
    put_u8(b, static_cast<std::uint8_t>(c.kind));
    put_u32(b, c.frame);
    put_u32(b, static_cast<std::uint32_t>(c.payload.size()));
    put_u32(b, entropy::crc32(c.payload));
    b.insert(b.end(), c.payload.begin(), c.payload.end());
  }
  return b;
}

Bitstream read_bitstream(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  r.need(kHeaderBytes, "header");
  const auto magic = r.take(4);
  if (std::memcmp(magic.data(), kMagic, 4) != 0) throw DataError("bitstream: bad magic");
  const std::uint8_t version = r.u8();
  if (version != StreamHeader::kVersion) {
    throw DataError("bitstream: unsupported version " + std::to_string(version));
  }
  Bitstream s;
  s.header.width = r.u32();
  s.header.height = r.u32();
  s.header.gop_size = r.u16();
  s.header.lambda_id = r.u8();
  s.header.frame_count = r.u32();
  s.header = StreamHeader::with_flags(s.header, r.u8());
  while (r.remaining() > 0) {
    r.need(kChunkFramingBytes, "chunk header");
    Chunk c;
    const std::uint8_t kind = r.u8();
    if (kind > static_cast<std::uint8_t>(ChunkKind::residual_z)) {
      throw DataError("bitstream: unknown chunk kind " + std::to_string(kind));
    }
    c.kind = static_cast<ChunkKind>(kind);
    c.frame = r.u32();
    const std::uint32_t length = r.u32();
    const std::uint32_t crc = r.u32();
    r.need(length, "chunk payload");
    const auto payload = r.take(length);
    if (entropy::crc32(payload) != crc) {
      throw DataError("bitstream: checksum mismatch in chunk " + std::to_string(s.chunks.size()));
    }
    if (c.frame >= s.header.frame_count) throw DataError("bitstream: chunk frame index out of range");
    c.payload.assign(payload.begin(), payload.end());
    s.chunks.push_back(std::move(c));
  }
  return s;
}

std::vector<std::size_t> bytes_per_frame(const Bitstream& s) {
  std::vector<std::size_t> out(s.header.frame_count, 0);
  for (const Chunk& c : s.chunks) {
    if (c.frame >= out.size()) throw DataError("bitstream: chunk frame index out of range");
    out[c.frame] += c.payload.size() + kChunkFramingBytes;
  }
  return out;
}

}  // namespace lhbd
