#include <gtest/gtest.h>

#include <cmath>

#include "lhbd/entropy_coding.hpp"
#include "lhbd/errors.hpp"

namespace lhbd {
namespace {

using entropy::DiscreteModel;

TEST(EntropyModel, UnitGaussianAtMeanCostsKnownBits) {
  // Phi(0.5) - Phi(-0.5) = erf(0.5 / sqrt 2) = 0.382924922548026...
  const double p = gaussian_bin_probability(0.0, 0.0, 1.0);
  EXPECT_NEAR(p, 0.3829249225480262, 1e-15);
  EXPECT_NEAR(-std::log2(p), 1.3848, 1e-3);
}

TEST(EntropyModel, BinsSumToOneAndModeIsCheapest) {
  for (double mu : {0.0, 0.3, -7.6})
    for (double sigma : {0.11, 1.0, 13.0}) {
      const int lo = static_cast<int>(std::floor(mu - 20 * sigma)), hi = static_cast<int>(std::ceil(mu + 20 * sigma));
      double total = 0.0, best = 0.0;
      for (int k = lo; k <= hi; ++k) {
        const double p = gaussian_bin_probability(k, mu, sigma);
        total += p;
        best = std::max(best, p);
      }
      EXPECT_NEAR(total, 1.0, 1e-6);
      EXPECT_EQ(best, gaussian_bin_probability(std::round(mu), mu, sigma));
    }
}

TEST(DiscreteModel, TablesAreStrictlyIncreasing) {
  for (double sigma : {0.11, 0.5, 3.0, 200.0, 1e6}) {
    const DiscreteModel m = entropy::gaussian_model(1.25, sigma);
    ASSERT_EQ(m.cdf.front(), 0u);
    ASSERT_EQ(m.cdf.back(), entropy::kTotal);
    for (std::size_t i = 1; i < m.cdf.size(); ++i) ASSERT_LT(m.cdf[i - 1], m.cdf[i]);
    EXPECT_LE(m.hi() - m.lo, 2 * entropy::kMaxHalfWidth + 2);
  }
  EXPECT_THROW(entropy::gaussian_model(0.0, std::nan("")), NumericalError);
}

TEST(RangeCoder, MillionModelDistributedSymbols) {
  Rng rng(11);
  const std::size_t n = 1'000'000;
  std::vector<int> symbols(n);
  std::vector<DiscreteModel> models;
  std::vector<std::size_t> model_of(n);
  // A few hundred distinct models, shared across symbols.
  std::vector<std::pair<double, double>> params;
  for (int i = 0; i < 256; ++i) params.emplace_back(rng.uniform(-20, 20), std::exp(rng.uniform(std::log(0.11), std::log(40.0))));
  for (const auto& [mu, sigma] : params) models.push_back(entropy::gaussian_model(mu, sigma));
  double estimate = 0.0;
  entropy::RangeEncoder enc;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = rng.below(params.size());
    const auto [mu, sigma] = params[k];
    const int v = static_cast<int>(std::round(mu + sigma * rng.normal()));
    symbols[i] = v;
    model_of[i] = k;
    estimate += -std::log2(std::max(gaussian_bin_probability(v, mu, sigma), kProbabilityFloor));
    enc.encode_symbol(models[k], v);
  }
  const Bytes bytes = enc.finish();
  entropy::RangeDecoder dec(bytes);
  for (std::size_t i = 0; i < n; ++i) ASSERT_EQ(dec.decode_symbol(models[model_of[i]]), symbols[i]) << i;
  EXPECT_EQ(dec.overrun(), 0u);
  const double measured = 8.0 * static_cast<double>(bytes.size());
  EXPECT_LE(measured, estimate * 1.02 + 32 * 8);
  EXPECT_GE(measured, estimate);
}

TEST(RangeCoder, EscapesRoundTrip) {
  const DiscreteModel m = entropy::gaussian_model(0.0, 1.0);
  const std::vector<int> values{0, 1000000, -2000000000, 31, -31, 2147483647, 3, -4};
  const std::vector<DiscreteModel> models(values.size(), m);
  const Bytes b = entropy::range_encode(values, models);
  EXPECT_EQ(entropy::range_decode(b, models), values);
  EXPECT_GT(m.cost_bits(1000000), 32.0);
}

TEST(RangeCoder, DegenerateModelIsNearlyFree) {
  const std::vector<double> probs{1e-9, 1.0 - 2e-9, 1e-9};
  const DiscreteModel m = entropy::quantize_pmf(-1, probs);
  const std::vector<int> values(100000, 0);
  const std::vector<DiscreteModel> models(values.size(), m);
  const Bytes b = entropy::range_encode(values, models);
  EXPECT_LE(b.size(), 48u);
  EXPECT_EQ(entropy::range_decode(b, models), values);
}

TEST(RangeCoder, TruncatedStreamDetected) {
  Rng rng(2);
  const DiscreteModel m = entropy::gaussian_model(0.0, 8.0);
  std::vector<int> values(5000);
  for (auto& v : values) v = static_cast<int>(std::round(8.0 * rng.normal()));
  const std::vector<DiscreteModel> models(values.size(), m);
  Bytes b = entropy::range_encode(values, models);
  b.resize(b.size() / 2);
  EXPECT_THROW(entropy::range_decode(b, models), DataError);
}

Bitstream sample_stream() {
  Bitstream s;
  s.header.width = 64;
  s.header.height = 48;
  s.header.gop_size = 8;
  s.header.lambda_id = 3;
  s.header.frame_count = 9;
  s.header.subsampling = 2;
  s.header.context_model = true;
  s.chunks.push_back({ChunkKind::keyframe_y, 0, {1, 2, 3}});
  s.chunks.push_back({ChunkKind::keyframe_z, 0, {}});
  s.chunks.push_back({ChunkKind::residual_y, 4, Bytes(300, 7)});
  return s;
}

TEST(Container, RoundTripIsByteExact) {
  const Bitstream s = sample_stream();
  const Bytes bytes = write_bitstream(s);
  EXPECT_EQ(bytes.size(), kHeaderBytes + 3 * kChunkFramingBytes + 303);
  const Bitstream back = read_bitstream(bytes);
  EXPECT_EQ(back.header, s.header);
  EXPECT_EQ(back.chunks, s.chunks);
  EXPECT_EQ(write_bitstream(back), bytes);
  const auto per_frame = bytes_per_frame(back);
  EXPECT_EQ(per_frame[0], 3 + 2 * kChunkFramingBytes);
  EXPECT_EQ(per_frame[4], 300 + kChunkFramingBytes);
}

TEST(Container, RejectsDamage) {
  const Bytes good = write_bitstream(sample_stream());
  Bytes b = good;
  b[0] = 'X';
  EXPECT_THROW(read_bitstream(b), DataError);
  b = good;
  b[4] = 9;
  EXPECT_THROW(read_bitstream(b), DataError);
  b = good;
  b.back() ^= 0x10;
  EXPECT_THROW(read_bitstream(b), DataError);
  b = good;
  b.pop_back();
  EXPECT_THROW(read_bitstream(b), DataError);
  b = good;
  b.resize(10);
  EXPECT_THROW(read_bitstream(b), DataError);
  b = good;
  b[20] = 3;  // subsampling code 3 does not exist
  EXPECT_THROW(read_bitstream(b), DataError);
}

TEST(Container, FlagBitsMapToConfiguration) {
  StreamHeader h;
  for (int s : {1, 2, 4})
    for (int bits = 0; bits < 8; ++bits) {
      h.subsampling = s;
      h.temporal_prediction = bits & 1;
      h.context_model = bits & 2;
      h.learned_mask = bits & 4;
      EXPECT_EQ(StreamHeader::with_flags(StreamHeader{}, h.flags()), (StreamHeader{0, 0, 8, 0, 0, s, h.temporal_prediction, h.context_model, h.learned_mask}));
    }
  h.subsampling = 3;
  EXPECT_THROW(static_cast<void>(h.flags()), ConfigError);
}

CoderConfig latent_config(bool context) {
  CoderConfig cfg;
  cfg.filters = 6;
  cfg.latent = 5;
  cfg.hyper_latent = 3;
  cfg.context_model = context;
  return cfg;
}

TEST(LatentCodec, RoundTripAndRateFidelity) {
  for (bool context : {false, true}) {
    Rng rng(21);
    const TransformCoder coder(latent_config(context), rng);
    Tensor x(Shape{1, 3, 64, 48});
    for (auto& v : x.vec()) v = rng.uniform(0.0, 1.0);
    const EncodedLatents enc = encode_latents(coder, x);
    const Tensor y_hat = decode_latents(coder, enc.chunks, 64, 48);
    EXPECT_EQ(y_hat.vec(), enc.y_hat.vec());
    EXPECT_EQ(y_hat.shape(), (Shape{1, 5, 4, 3}));
    const double measured_y = 8.0 * enc.chunks.y.size(), measured_z = 8.0 * enc.chunks.z.size();
    EXPECT_LE(measured_y, enc.estimated_bits_y * 1.02 + 256);
    EXPECT_LE(measured_z, enc.estimated_bits_z * 1.02 + 256);
  }
}

TEST(LatentCodec, WrongModelFailsOrDiffers) {
  Rng rng(3);
  const TransformCoder coder(latent_config(false), rng);
  Rng other_rng(4);
  const TransformCoder other(latent_config(false), other_rng);
  Tensor x(Shape{1, 3, 32, 32});
  for (auto& v : x.vec()) v = rng.uniform(0.0, 1.0);
  const EncodedLatents enc = encode_latents(coder, x);
  try {
    const Tensor y = decode_latents(other, enc.chunks, 32, 32);
    EXPECT_NE(y.vec(), enc.y_hat.vec());
  } catch (const DataError&) {
  }
}

}  // namespace
}  // namespace lhbd
