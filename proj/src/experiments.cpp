#include "lhbd/experiments.hpp"

#include <algorithm>
#include <chrono>

#include "lhbd/errors.hpp"
#include "lhbd/ops.hpp"

namespace lhbd {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Accumulator {
  double bits = 0.0, pixels = 0.0, psnr = 0.0, msssim = 0.0;
  int frames = 0;

  void add(const FrameLog& l, double px) {
    bits += l.bpp() * px;
    pixels += px;
    psnr += l.psnr;
    msssim += l.msssim;
    ++frames;
  }
  [[nodiscard]] RDPoint point(const std::string& label) const {
    return RDPoint{label, bits / pixels, psnr / frames, msssim / frames};
  }
};

}  // namespace

std::vector<TestSequence> synthetic_test_set(int size, int frames, std::uint64_t seed) {
  struct Item {
    const char* name;
    SyntheticKind kind;
    std::array<double, 2> v;
    bool heavy;
  };
  const Item items[] = {
      {"cv_slow", SyntheticKind::constant_velocity, {0.5, 0.25}, true},
      {"cv_fast", SyntheticKind::constant_velocity, {-1.0, 0.75}, true},
      {"occlusion", SyntheticKind::occlusion, {0.75, 0.0}, true},
      {"static", SyntheticKind::static_scene, {0.0, 0.0}, false},
  };
  std::vector<TestSequence> out;
  std::uint64_t k = 0;
  for (const Item& it : items) {
    SyntheticSpec s;
    s.kind = it.kind;
    s.frames = frames;
    s.height = s.width = size;
    s.velocity = it.v;
    s.fg_velocity = {-1.5, 0.5};
    s.patch = size / 3;
    s.seed = Rng::splitmix(seed * 1000003 + 0xC0DEC0DE + k++);
    out.push_back(TestSequence{it.name, synth_sequence(s), it.heavy});
  }
  return out;
}

std::vector<TestSequence> directory_test_set(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw DataError("test set directory not found: " + dir.string());
  std::vector<std::filesystem::path> subdirs;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_directory()) subdirs.push_back(e.path());
  }
  std::sort(subdirs.begin(), subdirs.end());
  std::vector<TestSequence> out;
  for (const auto& d : subdirs) out.push_back(TestSequence{d.filename().string(), load_sequence(d, SequenceFormat::png_sequence), true});
  if (out.empty()) throw DataError("no sequences under " + dir.string());
  return out;
}

PointResult evaluate_models(const CodecModels& models, const std::vector<TestSequence>& set, int gop_size,
                            const std::string& label, const EncodeOptions& opt) {
  PointResult r;
  Accumulator all;
  for (const TestSequence& ts : set) {
    auto t0 = std::chrono::steady_clock::now();
    const EncodeResult enc = encode_video(ts.seq, gop_size, models, opt);
    r.encode_seconds += seconds_since(t0);
    const Bytes bytes = write_bitstream(enc.stream);
    t0 = std::chrono::steady_clock::now();
    const VideoSequence dec = decode_video(read_bitstream(bytes), models);
    r.decode_seconds += seconds_since(t0);
    for (int t = 0; t < dec.size(); ++t) {
      if (dec.frames[static_cast<std::size_t>(t)].pixels().vec() !=
          enc.reconstructions[static_cast<std::size_t>(t)].pixels().vec()) {
        r.drift_free = false;
      }
    }
    Accumulator seq;
    const double px = static_cast<double>(ts.seq.height()) * ts.seq.width();
    for (const FrameLog& l : enc.logs) {
      seq.add(l, px);
      all.add(l, px);
    }
    r.per_sequence[ts.name] = seq.point(label);
    r.logs[ts.name] = enc.logs;
  }
  r.point = all.point(label);
  return r;
}

PointResult evaluate_all_intra(const TransformCoder& coder, const std::vector<TestSequence>& set,
                               const std::string& label) {
  PointResult r;
  Accumulator all;
  for (const TestSequence& ts : set) {
    const int h = ts.seq.height(), w = ts.seq.width();
    const double px = static_cast<double>(h) * w;
    Accumulator seq;
    std::vector<FrameLog> logs;
    for (int t = 0; t < ts.seq.size(); ++t) {
      const Frame& f = ts.seq.frames[static_cast<std::size_t>(t)];
      Frame padded = f;
      if (padded_size(h) != h || padded_size(w) != w) {
        ag::NoGradGuard guard;
        padded = Frame(ag::pad_replicate(ag::Var::constant(f.pixels()), padded_size(h), padded_size(w)).value());
      }
      auto t0 = std::chrono::steady_clock::now();
      const StepResult s = encode_keyframe(padded, t, coder);
      r.encode_seconds += seconds_since(t0);
      FrameLog l;
      l.frame = t;
      for (const Chunk& c : s.chunks) l.bpp_image += 8.0 * static_cast<double>(c.payload.size() + kChunkFramingBytes) / px;
      Frame rec = s.decoded;
      if (rec.height() != h || rec.width() != w) {
        ag::NoGradGuard guard;
        rec = Frame(ag::crop(ag::Var::constant(rec.pixels()), h, w).value());
      }
      l.psnr = psnr(f, rec);
      l.msssim = ms_ssim(f, rec);
      seq.add(l, px);
      all.add(l, px);
      logs.push_back(l);
    }
    r.per_sequence[ts.name] = seq.point(label);
    r.logs[ts.name] = std::move(logs);
  }
  r.point = all.point(label);
  return r;
}

RDCurve curve_of(const std::string& name, const std::vector<PointResult>& points) {
  RDCurve c;
  c.name = name;
  for (const auto& p : points) c.points.push_back(p.point);
  return c.sorted();
}

std::map<std::string, RDCurve> per_sequence_curves(const std::string& name, const std::vector<PointResult>& points) {
  std::map<std::string, RDCurve> out;
  for (const auto& p : points) {
    for (const auto& [seq, pt] : p.per_sequence) {
      RDCurve& c = out[seq];
      c.name = name + ":" + seq;
      c.points.push_back(pt);
    }
  }
  for (auto& [seq, c] : out) c = c.sorted();
  return out;
}

AblationRow compare_arms(const std::string& toggle, const std::vector<PointResult>& on,
                         const std::vector<PointResult>& off) {
  const RDCurve a = curve_of(toggle + "_on", on);
  const RDCurve b = curve_of(toggle + "_off", off);
  AblationRow row;
  row.toggle = toggle;
  const BdResult bd = bd_rate_both(a, b);
  row.bd_rate_psnr = bd.pchip;
  row.bd_rate_poly = bd.poly;
  for (const auto& p : on) row.decode_seconds_on += p.decode_seconds;
  for (const auto& p : off) row.decode_seconds_off += p.decode_seconds;
  return row;
}

BFrameConfig toggle_off(BFrameConfig cfg, const std::string& toggle) {
  if (toggle == "subsampling") {
    cfg.motion.subsample = 1;
  } else if (toggle == "temporal_prediction") {
    cfg.motion.temporal_prediction = false;
  } else if (toggle == "mask") {
    cfg.fusion = FusionMode::average;
  } else if (toggle == "context") {
    cfg.motion.context_model = false;
    cfg.residual.context_model = false;
  } else {
    throw ConfigError("unknown ablation toggle " + toggle);
  }
  return cfg;
}

}  // namespace lhbd
