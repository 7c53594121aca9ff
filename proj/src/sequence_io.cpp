#include "lhbd/sequence_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "lhbd/errors.hpp"
#include "lhbd/random.hpp"

namespace lhbd {

namespace fs = std::filesystem;

Frame::Frame(Tensor pixels) : pixels_(std::move(pixels)) {
  const Shape s = pixels_.shape();
  if (s.n != 1 || s.c != 3 || s.h <= 0 || s.w <= 0) {
    throw std::invalid_argument("Frame needs a (1,3,H,W) tensor, got " + s.str());
  }
  for (double v : pixels_.vec()) {
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("Frame value outside [0,1]");
  }
}

Frame Frame::clamped(const Tensor& t) {
  Tensor c = t;
  for (auto& v : c.vec()) v = std::isfinite(v) ? std::clamp(v, 0.0, 1.0) : 0.0;
  return Frame(std::move(c));
}

std::vector<std::uint8_t> Frame::to_rgb24() const {
  const int h = height(), w = width();
  std::vector<std::uint8_t> out(static_cast<std::size_t>(h) * w * 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        out[(static_cast<std::size_t>(y) * w + x) * 3 + c] =
            static_cast<std::uint8_t>(std::lround(at(c, y, x) * 255.0));
  return out;
}

Frame Frame::from_rgb24(const std::uint8_t* bytes, int height, int width) {
  Frame f(height, width);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < 3; ++c)
        f.at(c, y, x) = bytes[(static_cast<std::size_t>(y) * width + x) * 3 + c] / 255.0;
  return f;
}

void VideoSequence::validate() const {
  if (frames.empty()) throw DataError("video sequence has no frames");
  for (const auto& f : frames) {
    if (f.height() != height() || f.width() != width()) {
      throw DataError("frame dimensions differ within sequence: " + std::to_string(f.width()) +
                      "x" + std::to_string(f.height()) + " vs " + std::to_string(width()) + "x" +
                      std::to_string(height()));
    }
  }
}

Frame load_png(const fs::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw DataError("cannot read PNG " + path.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    png_image_free(&image);
    throw DataError("cannot decode PNG " + path.string() + ": " + image.message);
  }
  return Frame::from_rgb24(buffer.data(), static_cast<int>(image.height),
                           static_cast<int>(image.width));
}

void save_png(const Frame& frame, const fs::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(frame.width());
  image.height = static_cast<png_uint_32>(frame.height());
  image.format = PNG_FORMAT_RGB;
  const auto bytes = frame.to_rgb24();
  if (!png_image_write_to_file(&image, path.c_str(), 0, bytes.data(), 0, nullptr)) {
    throw DataError("cannot write PNG " + path.string() + ": " + image.message);
  }
}

void save_png_sequence(const VideoSequence& seq, const fs::path& dir) {
  fs::create_directories(dir);
  char name[32];
  for (int i = 0; i < seq.size(); ++i) {
    std::snprintf(name, sizeof name, "frame_%04d.png", i);
    save_png(seq.frames[static_cast<std::size_t>(i)], dir / name);
  }
}

void save_raw_rgb24(const VideoSequence& seq, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  for (const auto& f : seq.frames) {
    const auto bytes = f.to_rgb24();
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  }
}

VideoSequence load_sequence(const fs::path& path, SequenceFormat format,
                            std::optional<RawLayout> layout) {
  if (!fs::exists(path)) throw DataError("no such file or directory: " + path.string());
  VideoSequence seq;
  if (format == SequenceFormat::png_sequence) {
    if (!fs::is_directory(path)) throw DataError("PNG sequence path is not a directory: " + path.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(path)) {
      if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw DataError("no PNG files in " + path.string());
    for (const auto& f : files) seq.frames.push_back(load_png(f));
  } else {
    if (!layout || layout->width <= 0 || layout->height <= 0 || layout->frames <= 0) {
      throw DataError("raw RGB24 input needs positive width, height and frame count");
    }
    const std::uintmax_t frame_bytes = static_cast<std::uintmax_t>(layout->width) * layout->height * 3;
    const std::uintmax_t expected = frame_bytes * static_cast<std::uintmax_t>(layout->frames);
    const std::uintmax_t actual = fs::file_size(path);
    if (actual != expected) {
      throw DataError("truncated raw stream " + path.string() + ": expected " +
                      std::to_string(expected) + " bytes, found " + std::to_string(actual));
    }
    std::ifstream in(path, std::ios::binary);
    std::vector<std::uint8_t> buffer(frame_bytes);
    for (int i = 0; i < layout->frames; ++i) {
      in.read(reinterpret_cast<char*>(buffer.data()), static_cast<std::streamsize>(frame_bytes));
      if (!in) throw DataError("short read in " + path.string());
      seq.frames.push_back(Frame::from_rgb24(buffer.data(), layout->height, layout->width));
    }
  }
  seq.validate();
  return seq;
}

std::vector<TripletSample> make_triplets(const VideoSequence& septuplet) {
  if (septuplet.size() != 7) {
    throw DataError("triplet construction needs exactly 7 frames, got " +
                    std::to_string(septuplet.size()));
  }
  std::vector<TripletSample> out;
  for (int level = 1; level <= 3; ++level) {
    const int stride = 4 - level;  // 3, 2, 1
    for (int first = 1; first + 2 * stride <= 7; ++first) {
      TripletSample t;
      t.level = level;
      t.indices = {first, first + stride, first + 2 * stride};
      t.past = septuplet.frames[static_cast<std::size_t>(first - 1)];
      t.middle = septuplet.frames[static_cast<std::size_t>(first + stride - 1)];
      t.future = septuplet.frames[static_cast<std::size_t>(first + 2 * stride - 1)];
      out.push_back(std::move(t));
    }
  }
  return out;
}

SyntheticKind parse_synthetic_kind(const std::string& name) {
  if (name == "constant_velocity") return SyntheticKind::constant_velocity;
  if (name == "occlusion") return SyntheticKind::occlusion;
  if (name == "static") return SyntheticKind::static_scene;
  if (name == "noise") return SyntheticKind::noise;
  throw ConfigError("unknown synthetic generator '" + name + "'");
}

std::string to_string(SyntheticKind kind) {
  switch (kind) {
    case SyntheticKind::constant_velocity: return "constant_velocity";
    case SyntheticKind::occlusion: return "occlusion";
    case SyntheticKind::static_scene: return "static";
    case SyntheticKind::noise: return "noise";
  }
  return "?";
}

namespace {

// Color texture: a sum of random plane waves, normalized to unit variance and
// squashed by tanh into (0, 1). It is a smooth function of position, so
// sub-pixel translations stay exact and no clamping is needed.
class Texture {
 public:
  static constexpr double kContrast = 0.8;

  Texture(Rng& rng, int components = 20) {
    for (int k = 0; k < components; ++k) {
      Wave wv;
      const double freq = std::exp(rng.uniform(std::log(1.0 / 40.0), std::log(1.0 / 5.0)));
      const double angle = rng.uniform(0.0, 2.0 * M_PI);
      wv.fx = 2.0 * M_PI * freq * std::cos(angle);
      wv.fy = 2.0 * M_PI * freq * std::sin(angle);
      wv.phase = rng.uniform(0.0, 2.0 * M_PI);
      // 1/f amplitudes, as in natural images.
      const double amp = rng.uniform(0.5, 1.0) / (40.0 * freq);
      for (int c = 0; c < 3; ++c) wv.amp[c] = amp * rng.uniform(0.6, 1.4);
      waves_.push_back(wv);
    }
    for (int c = 0; c < 3; ++c) {
      double power = 0.0;
      for (const auto& wv : waves_) power += 0.5 * wv.amp[c] * wv.amp[c];
      norm_[c] = 1.0 / std::sqrt(power);
      base_[c] = 0.5 + rng.uniform(-0.03, 0.03);
    }
  }

  [[nodiscard]] double operator()(int c, double x, double y) const {
    double s = 0.0;
    for (const auto& wv : waves_) s += wv.amp[c] * std::sin(wv.fx * x + wv.fy * y + wv.phase);
    return base_[c] + 0.45 * std::tanh(kContrast * norm_[c] * s);
  }

 private:
  struct Wave {
    double fx, fy, phase;
    std::array<double, 3> amp;
  };
  std::vector<Wave> waves_;
  std::array<double, 3> norm_{}, base_{};
};

struct OcclusionLayout {
  double x0, y0;  // patch origin at t = 0
};

OcclusionLayout occlusion_layout(const SyntheticSpec& s) {
  const double mid = (s.frames - 1) / 2.0;
  return {(s.width - s.patch) / 2.0 - mid * s.fg_velocity[0],
          (s.height - s.patch) / 2.0 - mid * s.fg_velocity[1]};
}

bool in_patch(const SyntheticSpec& s, const OcclusionLayout& l, int t, double x, double y) {
  const double px = x - (l.x0 + t * s.fg_velocity[0]);
  const double py = y - (l.y0 + t * s.fg_velocity[1]);
  return px >= 0.0 && px < s.patch && py >= 0.0 && py < s.patch;
}

void validate_spec(const SyntheticSpec& s) {
  if (s.frames < 1 || s.height < 1 || s.width < 1) {
    throw ConfigError("synthetic spec needs positive frame count and dimensions");
  }
}

}  // namespace

VideoSequence synth_sequence(const SyntheticSpec& spec) {
  validate_spec(spec);
  Rng rng(spec.seed);
  VideoSequence seq;
  const Texture background(rng);
  const Texture foreground(rng);
  const OcclusionLayout layout = occlusion_layout(spec);
  for (int t = 0; t < spec.frames; ++t) {
    Frame f(spec.height, spec.width);
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < spec.height; ++y)
        for (int x = 0; x < spec.width; ++x) {
          double v = 0.0;
          switch (spec.kind) {
            case SyntheticKind::static_scene:
              v = background(c, x, y);
              break;
            case SyntheticKind::constant_velocity:
              v = background(c, x - t * spec.velocity[0], y - t * spec.velocity[1]);
              break;
            case SyntheticKind::occlusion:
              if (in_patch(spec, layout, t, x, y)) {
                v = foreground(c, x - t * spec.fg_velocity[0], y - t * spec.fg_velocity[1]);
              } else {
                v = background(c, x - t * spec.velocity[0], y - t * spec.velocity[1]);
              }
              break;
            case SyntheticKind::noise:
              v = rng.uniform();
              break;
          }
          f.at(c, y, x) = v;
        }
    seq.frames.push_back(std::move(f));
  }
  return seq;
}

Tensor synth_flow(const SyntheticSpec& spec, int source, int reference) {
  validate_spec(spec);
  Tensor flow(Shape{1, 2, spec.height, spec.width});
  const double dt = reference - source;
  const OcclusionLayout layout = occlusion_layout(spec);
  for (int y = 0; y < spec.height; ++y)
    for (int x = 0; x < spec.width; ++x) {
      std::array<double, 2> v{0.0, 0.0};
      if (spec.kind == SyntheticKind::constant_velocity) {
        v = spec.velocity;
      } else if (spec.kind == SyntheticKind::occlusion) {
        v = in_patch(spec, layout, source, x, y) ? spec.fg_velocity : spec.velocity;
      }
      flow.at(0, 0, y, x) = dt * v[0];
      flow.at(0, 1, y, x) = dt * v[1];
    }
  return flow;
}

std::vector<Frame> random_crop(const std::vector<Frame>& frames, int size, std::uint64_t seed) {
  if (frames.empty()) return {};
  const int h = frames.front().height(), w = frames.front().width();
  if (size <= 0 || size > std::min(h, w)) {
    throw ConfigError("crop size " + std::to_string(size) + " exceeds frame " +
                      std::to_string(w) + "x" + std::to_string(h));
  }
  Rng rng(seed);
  const int oy = static_cast<int>(rng.below(static_cast<std::uint64_t>(h - size + 1)));
  const int ox = static_cast<int>(rng.below(static_cast<std::uint64_t>(w - size + 1)));
  std::vector<Frame> out;
  out.reserve(frames.size());
  for (const auto& f : frames) {
    if (f.height() != h || f.width() != w) throw DataError("random_crop: mixed frame sizes");
    Frame c(size, size);
    for (int ch = 0; ch < 3; ++ch)
      for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) c.at(ch, y, x) = f.at(ch, oy + y, ox + x);
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace lhbd
