#include "lhbd/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <set>

#include "lhbd/errors.hpp"

namespace lhbd {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'L', 'H', 'C', 'K'};

void put_u32(Bytes& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put_u64(Bytes& b, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Cursor {
 public:
  explicit Cursor(const Bytes& b) : b_(b) {}
  std::uint64_t uint(int bytes) {
    need(static_cast<std::size_t>(bytes));
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(b_[pos_++]) << (8 * i);
    return v;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(b_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  double f64() {
    const std::uint64_t bits = uint(8);
    double d;
    std::memcpy(&d, &bits, sizeof d);
    return d;
  }
  [[nodiscard]] std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > b_.size()) throw DataError("checkpoint is truncated");
  }
  const Bytes& b_;
  std::size_t pos_ = 0;
};

// Reads keys of an object, remembering which were consumed.
class Fields {
 public:
  Fields(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j.is_object()) throw ConfigError(where_ + ": expected an object");
  }
  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where_ + "." + key + ": " + e.what());
    }
  }
  [[nodiscard]] const json* child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }
  void finish() const {
    std::string unknown;
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) unknown += " " + k;
    }
    if (!unknown.empty()) throw ConfigError(where_ + ": unknown keys:" + unknown);
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

}  // namespace

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  Bytes b(kMagic, kMagic + 4);
  b.push_back(Checkpoint::kVersion);
  const std::string meta = ck.meta.dump();
  put_u64(b, meta.size());
  b.insert(b.end(), meta.begin(), meta.end());
  put_u32(b, static_cast<std::uint32_t>(ck.tensors.size()));
  for (const auto& [name, t] : ck.tensors) {
    put_u32(b, static_cast<std::uint32_t>(name.size()));
    b.insert(b.end(), name.begin(), name.end());
    const Shape s = t.shape();
    for (int d : {s.n, s.c, s.h, s.w}) put_u32(b, static_cast<std::uint32_t>(d));
    for (double v : t.vec()) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, sizeof bits);
      put_u64(b, bits);
    }
  }
  put_u32(b, entropy::crc32(b));
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw DataError("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
    if (!out) throw DataError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  const Bytes b((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (b.size() < 9 || std::memcmp(b.data(), kMagic, 4) != 0) throw DataError(path.string() + " is not a checkpoint");
  const std::span<const std::uint8_t> body(b.data(), b.size() - 4);
  std::uint32_t stored = 0;
  for (int i = 0; i < 4; ++i) stored |= static_cast<std::uint32_t>(b[b.size() - 4 + static_cast<std::size_t>(i)]) << (8 * i);
  if (entropy::crc32(body) != stored) throw DataError(path.string() + ": checksum mismatch");

  Cursor cur(b);
  cur.str(4);
  if (cur.uint(1) != Checkpoint::kVersion) throw DataError(path.string() + ": unsupported checkpoint version");
  Checkpoint ck;
  const auto meta_len = cur.uint(8);
  try {
    ck.meta = json::parse(cur.str(meta_len));
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": bad metadata: " + e.what());
  }
  const auto count = cur.uint(4);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::string name = cur.str(cur.uint(4));
    Shape s;
    s.n = static_cast<int>(cur.uint(4));
    s.c = static_cast<int>(cur.uint(4));
    s.h = static_cast<int>(cur.uint(4));
    s.w = static_cast<int>(cur.uint(4));
    if (s.numel() * 8 > b.size()) throw DataError(path.string() + ": tensor " + name + " exceeds file size");
    Tensor t(s);
    for (double& v : t.vec()) v = cur.f64();
    ck.tensors.emplace(name, std::move(t));
  }
  if (cur.pos() != body.size()) throw DataError(path.string() + ": trailing bytes");
  return ck;
}

void store_params(const nn::ParamList& params, Checkpoint& ck) {
  for (const auto& p : params) ck.tensors[p.name] = p.var->value();
}

int restore_params(const Checkpoint& ck, const nn::ParamList& params, bool strict) {
  int loaded = 0;
  for (const auto& p : params) {
    auto it = ck.tensors.find(p.name);
    if (it == ck.tensors.end()) {
      if (strict) throw DataError("checkpoint lacks parameter " + p.name);
      continue;
    }
    if (!(it->second.shape() == p.var->shape())) {
      if (strict) {
        throw DataError("parameter " + p.name + " has shape " + it->second.shape().str() + ", model expects " +
                        p.var->shape().str());
      }
      continue;
    }
    p.var->mutable_value() = it->second;
    ++loaded;
  }
  return loaded;
}

json to_json(const CoderConfig& c) {
  return json{{"filters", c.filters},          {"latent", c.latent},
              {"hyper_latent", c.hyper_latent}, {"context_model", c.context_model},
              {"in_channels", c.in_channels},   {"out_channels", c.out_channels}};
}

CoderConfig coder_config_from_json(const json& j, CoderConfig base) {
  Fields f(j, "coder");
  f.get("filters", base.filters);
  f.get("latent", base.latent);
  f.get("hyper_latent", base.hyper_latent);
  f.get("context_model", base.context_model);
  f.get("in_channels", base.in_channels);
  f.get("out_channels", base.out_channels);
  f.finish();
  if (base.filters < 1 || base.latent < 1 || base.hyper_latent < 0) throw ConfigError("coder sizes must be positive");
  return base;
}

json to_json(const BFrameConfig& c) {
  return json{
      {"flow", {{"levels", c.flow.levels}, {"hidden", c.flow.hidden}, {"kernel", c.flow.kernel}, {"layers", c.flow.layers}}},
      {"motion",
       {{"filters", c.motion.filters},
        {"latent", c.motion.latent},
        {"hyper_latent", c.motion.hyper_latent}}},
      {"residual", {{"filters", c.residual.filters}, {"latent", c.residual.latent}, {"hyper_latent", c.residual.hyper_latent}}},
      {"mask", {{"width", c.mask.width}, {"depth", c.mask.depth}}},
      {"subsample_factor", c.motion.subsample},
      {"temporal_prediction", c.motion.temporal_prediction},
      {"mask_mode", c.fusion == FusionMode::learned ? "learned" : "average"},
      {"context_model", c.motion.context_model},
  };
}

BFrameConfig bframe_config_from_json(const json& j, BFrameConfig base) {
  Fields f(j, "bframe");
  if (const json* flow = f.child("flow")) {
    Fields g(*flow, "bframe.flow");
    g.get("levels", base.flow.levels);
    g.get("hidden", base.flow.hidden);
    g.get("kernel", base.flow.kernel);
    g.get("layers", base.flow.layers);
    g.finish();
  }
  if (const json* m = f.child("motion")) {
    Fields g(*m, "bframe.motion");
    g.get("filters", base.motion.filters);
    g.get("latent", base.motion.latent);
    g.get("hyper_latent", base.motion.hyper_latent);
    g.finish();
  }
  if (const json* r = f.child("residual")) {
    Fields g(*r, "bframe.residual");
    g.get("filters", base.residual.filters);
    g.get("latent", base.residual.latent);
    g.get("hyper_latent", base.residual.hyper_latent);
    g.finish();
  }
  if (const json* m = f.child("mask")) {
    Fields g(*m, "bframe.mask");
    g.get("width", base.mask.width);
    g.get("depth", base.mask.depth);
    g.finish();
  }
  f.get("subsample_factor", base.motion.subsample);
  f.get("temporal_prediction", base.motion.temporal_prediction);
  std::string mode = base.fusion == FusionMode::learned ? "learned" : "average";
  f.get("mask_mode", mode);
  if (mode == "learned") {
    base.fusion = FusionMode::learned;
  } else if (mode == "average") {
    base.fusion = FusionMode::average;
  } else {
    throw ConfigError("mask_mode must be learned or average, got " + mode);
  }
  bool context = base.motion.context_model;
  f.get("context_model", context);
  base.motion.context_model = context;
  base.residual.context_model = context;
  f.finish();
  try {
    base.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  return base;
}

void save_keyframe(TransformCoder& coder, double lambda, int lambda_id, const std::filesystem::path& path,
                   const json& extra) {
  Checkpoint ck;
  ck.meta = extra;
  ck.meta["kind"] = "keyframe";
  ck.meta["coder"] = to_json(coder.config());
  ck.meta["lambda"] = lambda;
  ck.meta["lambda_id"] = lambda_id;
  nn::ParamList params;
  coder.collect("keyframe", params);
  store_params(params, ck);
  save_checkpoint(ck, path);
}

KeyframeCheckpoint load_keyframe(const std::filesystem::path& path) {
  const Checkpoint ck = load_checkpoint(path);
  if (ck.meta.value("kind", "") != "keyframe") throw DataError(path.string() + " is not a keyframe checkpoint");
  KeyframeCheckpoint out;
  Rng rng(0);
  out.coder = TransformCoder(coder_config_from_json(ck.meta.at("coder")), rng);
  nn::ParamList params;
  out.coder.collect("keyframe", params);
  restore_params(ck, params, true);
  out.lambda = ck.meta.at("lambda").get<double>();
  out.lambda_id = ck.meta.at("lambda_id").get<int>();
  return out;
}

void save_bframe(BFrameModel& model, double lambda, int lambda_id, const std::filesystem::path& path,
                 const json& extra) {
  Checkpoint ck;
  ck.meta = extra;
  ck.meta["kind"] = "bframe";
  ck.meta["bframe"] = to_json(model.config());
  ck.meta["lambda"] = lambda;
  ck.meta["lambda_id"] = lambda_id;
  nn::ParamList params;
  model.collect(params);
  store_params(params, ck);
  save_checkpoint(ck, path);
}

BFrameCheckpoint load_bframe(const std::filesystem::path& path, const BFrameConfig* override_cfg) {
  const Checkpoint ck = load_checkpoint(path);
  if (ck.meta.value("kind", "") != "bframe") throw DataError(path.string() + " is not a B-frame checkpoint");
  const BFrameConfig stored = bframe_config_from_json(ck.meta.at("bframe"));
  BFrameCheckpoint out;
  Rng rng(0);
  out.model = BFrameModel(override_cfg ? *override_cfg : stored, rng);
  nn::ParamList params;
  out.model.collect(params);
  restore_params(ck, params, override_cfg == nullptr);
  out.lambda = ck.meta.at("lambda").get<double>();
  out.lambda_id = ck.meta.at("lambda_id").get<int>();
  return out;
}

CodecModels load_models(const std::filesystem::path& keyframe, const std::filesystem::path& bframe) {
  KeyframeCheckpoint k = load_keyframe(keyframe);
  BFrameCheckpoint b = load_bframe(bframe);
  if (k.lambda_id != b.lambda_id) {
    throw ConfigMismatchError("keyframe checkpoint has lambda index " + std::to_string(k.lambda_id) +
                              ", B-frame checkpoint has " + std::to_string(b.lambda_id));
  }
  return CodecModels{std::move(k.coder), std::move(b.model), b.lambda_id};
}

}  // namespace lhbd
