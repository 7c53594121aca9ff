#include "lhbd/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lhbd/checkpoint.hpp"
#include "lhbd/errors.hpp"
#include "lhbd/gradcheck.hpp"
#include "lhbd/ops.hpp"

namespace lhbd {

namespace {

// Synthetic motion range in pixels per frame (background, foreground patch).
constexpr double kMaxVelocity = 1.0;
constexpr double kMaxFgVelocity = 1.5;

}  // namespace

using ag::Var;
using nlohmann::json;

void TrainConfig::validate() const {
  std::string bad;
  if (!(lambda > 0.0)) bad += " lambda must be > 0;";
  if (batch_size < 1) bad += " batch_size must be >= 1;";
  if (crop < 16 || crop % kCodingAlignment != 0) bad += " crop must be a positive multiple of 16;";
  if (!(lr_init > 0.0)) bad += " lr_init must be > 0;";
  if (plateau_patience < 1) bad += " plateau_patience must be >= 1;";
  if (!(lr_decay_factor > 1.0)) bad += " lr_decay_factor must be > 1;";
  if (max_iters < 0) bad += " max_iters must be >= 0;";
  if (clip_norm < 0.0) bad += " clip_norm must be >= 0;";
  if (!bad.empty()) throw ConfigError("train config:" + bad);
}

json to_json(const TrainConfig& c) {
  return json{{"lambda", c.lambda},
              {"distortion", c.distortion == Distortion::mse ? "mse" : "one_minus_msssim"},
              {"batch_size", c.batch_size},
              {"crop", c.crop},
              {"lr_init", c.lr_init},
              {"plateau_patience", c.plateau_patience},
              {"lr_decay_factor", c.lr_decay_factor},
              {"max_iters", c.max_iters},
              {"seed", c.seed},
              {"endpoints", c.endpoints == EndpointMode::decoded ? "decoded" : "pristine"},
              {"clip_norm", c.clip_norm}};
}

TrainConfig train_config_from_json(const json& j, TrainConfig c) {
  if (!j.is_object()) throw ConfigError("train: expected an object");
  for (const auto& [key, v] : j.items()) {
    try {
      if (key == "lambda") {
        c.lambda = v.get<double>();
      } else if (key == "distortion") {
        const auto s = v.get<std::string>();
        if (s == "mse") {
          c.distortion = Distortion::mse;
        } else if (s == "one_minus_msssim") {
          c.distortion = Distortion::one_minus_msssim;
        } else {
          throw ConfigError("train.distortion must be mse or one_minus_msssim");
        }
      } else if (key == "batch_size") {
        c.batch_size = v.get<int>();
      } else if (key == "crop") {
        c.crop = v.get<int>();
      } else if (key == "lr_init") {
        c.lr_init = v.get<double>();
      } else if (key == "plateau_patience") {
        c.plateau_patience = v.get<int>();
      } else if (key == "lr_decay_factor") {
        c.lr_decay_factor = v.get<double>();
      } else if (key == "max_iters") {
        c.max_iters = v.get<int>();
      } else if (key == "seed") {
        c.seed = v.get<std::uint64_t>();
      } else if (key == "endpoints") {
        const auto s = v.get<std::string>();
        if (s == "decoded") {
          c.endpoints = EndpointMode::decoded;
        } else if (s == "pristine") {
          c.endpoints = EndpointMode::pristine;
        } else {
          throw ConfigError("train.endpoints must be decoded or pristine");
        }
      } else if (key == "clip_norm") {
        c.clip_norm = v.get<double>();
      } else {
        throw ConfigError("train: unknown key " + key);
      }
    } catch (const json::exception& e) {
      throw ConfigError("train." + key + ": " + e.what());
    }
  }
  c.validate();
  return c;
}

std::string to_json_line(const IterLog& log) {
  json j{{"iter", log.iter},
         {"L", log.loss.L},
         {"D", log.loss.D},
         {"R_flow", log.loss.R_flow},
         {"R_residual", log.loss.R_residual},
         {"lr", log.lr}};
  if (log.loss.R_image != 0.0) j["R_image"] = log.loss.R_image;
  return j.dump();
}

LogSink json_lines_sink(std::ostream& out) {
  return [&out](const IterLog& l) { out << to_json_line(l) << "\n" << std::flush; };
}

// ---------------------------------------------------------------------------

Adam::Adam(nn::ParamList params, double lr, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& p : params_) {
    m_.emplace_back(p.var->shape());
    v_.emplace_back(p.var->shape());
  }
}

double Adam::step(double clip_norm) {
  double sq = 0.0;
  for (const auto& p : params_) {
    for (double g : p.var->grad().vec()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  const double scale = (clip_norm > 0.0 && norm > clip_norm) ? clip_norm / norm : 1.0;
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, t_), c2 = 1.0 - std::pow(beta2_, t_);
  for (std::size_t k = 0; k < params_.size(); ++k) {
    const Tensor& g = params_[k].var->grad();
    if (g.vec().empty()) continue;
    auto& w = params_[k].var->mutable_value().vec();
    auto& m = m_[k].vec();
    auto& v = v_[k].vec();
    const auto& gv = g.vec();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = gv[i] * scale;
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * gi;
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * gi * gi;
      w[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
    }
  }
  zero_grad();
  return norm;
}

void Adam::zero_grad() {
  for (auto& p : params_) p.var->zero_grad();
}

PlateauSchedule::PlateauSchedule(int patience, double factor, double smoothing)
    : patience_(patience), factor_(factor), smoothing_(smoothing) {}

double PlateauSchedule::observe(double loss) {
  if (!started_) {
    ema_ = best_ = loss;
    started_ = true;
    return 1.0;
  }
  ema_ += smoothing_ * (loss - ema_);
  if (ema_ < best_) {
    best_ = ema_;
    since_best_ = 0;
    return 1.0;
  }
  if (++since_best_ >= patience_) {
    since_best_ = 0;
    best_ = ema_;
    return 1.0 / factor_;
  }
  return 1.0;
}

// ---------------------------------------------------------------------------

ClipPool ClipPool::synthetic(int clips, int size, std::uint64_t seed) {
  if (clips < 1) throw ConfigError("synthetic pool needs at least one clip");
  ClipPool pool;
  Rng rng(seed);
  const SyntheticKind kinds[] = {SyntheticKind::constant_velocity, SyntheticKind::occlusion,
                                 SyntheticKind::constant_velocity, SyntheticKind::static_scene};
  for (int i = 0; i < clips; ++i) {
    SyntheticSpec s;
    s.kind = kinds[i % 4];
    s.frames = 7;
    s.height = size;
    s.width = size;
    s.velocity = {rng.uniform(-kMaxVelocity, kMaxVelocity), rng.uniform(-kMaxVelocity, kMaxVelocity)};
    s.fg_velocity = {rng.uniform(-kMaxFgVelocity, kMaxFgVelocity), rng.uniform(-kMaxVelocity, kMaxVelocity)};
    s.patch = size / 3;
    s.seed = rng.next();
    pool.clips_.push_back(synth_sequence(s));
  }
  return pool;
}

ClipPool ClipPool::from_directory(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw DataError("dataset directory not found: " + dir.string());
  ClipPool pool;
  std::vector<std::filesystem::path> subdirs;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_directory()) subdirs.push_back(e.path());
  }
  std::sort(subdirs.begin(), subdirs.end());
  for (const auto& d : subdirs) {
    VideoSequence seq = load_sequence(d, SequenceFormat::png_sequence);
    if (seq.size() < 7) continue;
    seq.frames.resize(7);
    pool.clips_.push_back(std::move(seq));
  }
  if (pool.clips_.empty()) throw DataError("no 7-frame clips under " + dir.string());
  return pool;
}

std::size_t ClipPool::next_clip(Rng& rng) {
  if (cursor_ >= order_.size()) {
    order_.resize(clips_.size());
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
    for (std::size_t i = order_.size(); i > 1; --i) std::swap(order_[i - 1], order_[rng.below(i)]);
    cursor_ = 0;
  }
  return order_[cursor_++];
}

TripletSample ClipPool::sample_triplet(Rng& rng, int crop) {
  const VideoSequence& clip = clips_[next_clip(rng)];
  std::vector<TripletSample> all = make_triplets(clip);
  TripletSample t = std::move(all[rng.below(all.size())]);
  if (clip.height() != crop || clip.width() != crop) {
    auto c = random_crop({t.past, t.middle, t.future}, crop, rng.next());
    t.past = std::move(c[0]);
    t.middle = std::move(c[1]);
    t.future = std::move(c[2]);
  }
  return t;
}

Frame ClipPool::sample_frame(Rng& rng, int crop) {
  const VideoSequence& clip = clips_[next_clip(rng)];
  const Frame& f = clip.frames[rng.below(static_cast<std::uint64_t>(clip.size()))];
  if (f.height() == crop && f.width() == crop) return f;
  return random_crop({f}, crop, rng.next())[0];
}

// ---------------------------------------------------------------------------

namespace {

Var distortion(const Var& x_hat, const Var& x, Distortion d) {
  if (d == Distortion::mse) return ag::mse(x_hat, x);
  return ag::add_scalar(ag::scale(ms_ssim(x_hat, x), -1.0), 1.0);
}

void require_finite(const LossBreakdown& b, int iter, const char* what) {
  if (std::isfinite(b.L) && std::isfinite(b.D) && std::isfinite(b.R_image) && std::isfinite(b.R_flow) &&
      std::isfinite(b.R_residual)) {
    return;
  }
  std::ostringstream msg;
  msg << what << " diverged at iteration " << iter << ": L=" << b.L << " D=" << b.D << " R_image=" << b.R_image
      << " R_flow=" << b.R_flow << " R_residual=" << b.R_residual;
  throw NumericalError(msg.str());
}

double pixels_of(const Var& x) {
  const Shape s = x.shape();
  return static_cast<double>(s.n) * s.h * s.w;
}

Frame decoded_by(const TransformCoder& coder, const Frame& f) {
  ag::NoGradGuard guard;
  return Frame::clamped(coder.forward(Var::constant(f.pixels()), QuantMode::infer, nullptr).x_hat.value());
}

template <class LossFn>
std::vector<IterLog> run_loop(const nn::ParamList& params, const TrainConfig& cfg, const char* what,
                              const LogSink& sink, LossFn&& loss_at) {
  Adam opt(params, cfg.lr_init);
  PlateauSchedule sched(cfg.plateau_patience, cfg.lr_decay_factor);
  std::vector<IterLog> logs;
  for (int it = 0; it < cfg.max_iters; ++it) {
    Rng rng = Rng::derive(cfg.seed, static_cast<std::uint64_t>(it));
    Var L;
    const LossBreakdown b = loss_at(rng, L);
    require_finite(b, it, what);
    ag::backward(L);
    opt.step(cfg.clip_norm);
    IterLog log{it, b, opt.lr()};
    const double mult = sched.observe(b.L);
    if (mult != 1.0) opt.set_lr(opt.lr() * mult);
    if (sink) sink(log);
    logs.push_back(log);
  }
  return logs;
}

}  // namespace

std::vector<IterLog> pretrain_flow(FlowEstimator& net, const FlowPretrainConfig& cfg, const LogSink& sink) {
  nn::ParamList params;
  net.collect("flow", params);
  TrainConfig tc;
  tc.lr_init = cfg.lr;
  tc.max_iters = cfg.iters;
  tc.seed = cfg.seed;
  tc.plateau_patience = std::max(1, cfg.iters / 4);
  return run_loop(params, tc, "flow pretraining", sink, [&](Rng& rng, Var& L) {
    std::vector<Var> src, ref, gt;
    for (int b = 0; b < cfg.batch_size; ++b) {
      SyntheticSpec s;
      s.kind = rng.uniform() < 0.7 ? SyntheticKind::constant_velocity : SyntheticKind::occlusion;
      // Pairs up to 8 frames apart cover every reference distance of a GOP of 8.
      s.frames = 9;
      s.height = cfg.crop;
      s.width = cfg.crop;
      s.velocity = {rng.uniform(-kMaxVelocity, kMaxVelocity), rng.uniform(-kMaxVelocity, kMaxVelocity)};
      s.fg_velocity = {rng.uniform(-kMaxFgVelocity, kMaxFgVelocity), rng.uniform(-kMaxVelocity, kMaxVelocity)};
      s.patch = cfg.crop / 3;
      s.seed = rng.next();
      const VideoSequence seq = synth_sequence(s);
      const int a = static_cast<int>(rng.below(9));
      int c = static_cast<int>(rng.below(8));
      if (c >= a) ++c;
      src.push_back(Var::constant(seq.frames[static_cast<std::size_t>(a)].pixels()));
      ref.push_back(Var::constant(seq.frames[static_cast<std::size_t>(c)].pixels()));
      gt.push_back(Var::constant(synth_flow(s, a, c)));
    }
    const Var f = net.forward(ag::concat_batch(src), ag::concat_batch(ref));
    L = ag::scale(ag::mse(f, ag::concat_batch(gt)), 2.0);
    LossBreakdown out;
    out.L = out.D = L.value().item();
    return out;
  });
}

LossBreakdown keyframe_loss(const TransformCoder& coder, const Var& batch, const TrainConfig& cfg, Rng& rng,
                            Var* loss) {
  const CoderOutput out = coder.forward(batch, QuantMode::train, &rng);
  const Var D = distortion(out.x_hat, batch, cfg.distortion);
  const Var R = ag::scale(ag::add(out.bits_y, out.bits_z), 1.0 / pixels_of(batch));
  const Var L = ag::add(ag::scale(D, cfg.lambda * kDistortionScale), R);
  if (loss) *loss = L;
  return LossBreakdown{L.value().item(), D.value().item(), R.value().item(), 0.0, 0.0};
}

std::vector<IterLog> pretrain_keyframe(TransformCoder& coder, ClipPool& data, const TrainConfig& cfg,
                                       const LogSink& sink) {
  cfg.validate();
  nn::ParamList params;
  coder.collect("keyframe", params);
  return run_loop(params, cfg, "keyframe training", sink, [&](Rng& rng, Var& L) {
    std::vector<Var> frames;
    for (int b = 0; b < cfg.batch_size; ++b) frames.push_back(Var::constant(data.sample_frame(rng, cfg.crop).pixels()));
    return keyframe_loss(coder, ag::concat_batch(frames), cfg, rng, &L);
  });
}

LossBreakdown triplet_loss(const BFrameModel& model, const Var& past, const Var& target, const Var& future,
                           const TrainConfig& cfg, QuantMode mode, Rng* rng, Var* loss) {
  const TripletOutput out = model.forward(past, target, future, mode, rng);
  const Var D = distortion(out.x_hat, target, cfg.distortion);
  const double inv = 1.0 / pixels_of(target);
  const Var Rf = ag::scale(out.bits_motion, inv);
  const Var Rr = ag::scale(out.bits_residual, inv);
  const Var L = ag::add(ag::add(ag::scale(D, cfg.lambda * kDistortionScale), Rf), Rr);
  if (loss) *loss = L;
  return LossBreakdown{L.value().item(), D.value().item(), 0.0, Rf.value().item(), Rr.value().item()};
}

TripletBatch make_triplet_batch(ClipPool& data, Rng& rng, int batch, int crop, const TransformCoder* keyframe) {
  std::vector<Var> p, t, f;
  for (int b = 0; b < batch; ++b) {
    TripletSample s = data.sample_triplet(rng, crop);
    if (keyframe) {
      s.past = decoded_by(*keyframe, s.past);
      s.future = decoded_by(*keyframe, s.future);
    }
    p.push_back(Var::constant(s.past.pixels()));
    t.push_back(Var::constant(s.middle.pixels()));
    f.push_back(Var::constant(s.future.pixels()));
  }
  return TripletBatch{ag::concat_batch(p), ag::concat_batch(t), ag::concat_batch(f)};
}

std::vector<IterLog> train_bidirectional(BFrameModel& model, ClipPool& data, const TrainConfig& cfg,
                                         const TransformCoder* keyframe, const LogSink& sink) {
  cfg.validate();
  if (cfg.endpoints == EndpointMode::decoded && keyframe == nullptr) {
    throw ConfigError("decoded endpoints need a keyframe coder");
  }
  const TransformCoder* endpoint_coder = cfg.endpoints == EndpointMode::decoded ? keyframe : nullptr;
  nn::ParamList params;
  model.collect(params);
  return run_loop(params, cfg, "B-frame training", sink, [&](Rng& rng, Var& L) {
    const TripletBatch b = make_triplet_batch(data, rng, cfg.batch_size, cfg.crop, endpoint_coder);
    return triplet_loss(model, b.past, b.target, b.future, cfg, QuantMode::train, &rng, &L);
  });
}

// ---------------------------------------------------------------------------

namespace {

Tensor random_tensor(Shape s, Rng& rng, double lo, double hi) {
  Tensor t(s);
  for (double& v : t.vec()) v = rng.uniform(lo, hi);
  return t;
}

Var weighted_sum(const Var& x, const Tensor& w) { return ag::sum(ag::mul(x, Var::constant(w))); }

// Every k-th parameter tensor of a model, as gradcheck inputs.
std::vector<std::pair<std::string, Var*>> spread(const nn::ParamList& all, std::size_t count) {
  std::vector<std::pair<std::string, Var*>> out;
  const std::size_t step = std::max<std::size_t>(1, all.size() / count);
  for (std::size_t i = 0; i < all.size(); i += step) out.emplace_back(all[i].name, all[i].var);
  return out;
}

}  // namespace

std::map<std::string, double> grad_check(const std::string& selector, double input_scale, std::uint64_t seed) {
  static const std::vector<std::string> kAll{"warp", "flow", "resample", "mask", "keyframe_coder",
                                             "bframe_loss", "rate", "msssim"};
  if (selector != "all" && std::find(kAll.begin(), kAll.end(), selector) == kAll.end()) {
    throw ConfigError("grad-check: unknown module " + selector);
  }
  auto wanted = [&](const char* k) { return selector == "all" || selector == k; };
  std::map<std::string, double> out;
  Rng rng(seed);
  const double s = input_scale;

  if (wanted("warp")) {
    Var ref = Var::parameter(random_tensor(Shape{1, 3, 8, 8}, rng, 0.0, s));
    Var flow = Var::parameter(random_tensor(Shape{1, 2, 8, 8}, rng, -1.7, 1.7));
    const Tensor w = random_tensor(Shape{1, 3, 8, 8}, rng, -1.0, 1.0);
    auto loss = [&] { return weighted_sum(ag::warp(ref, flow), w); };
    out["warp"] = check_gradients(loss, {{"ref", &ref}, {"flow", &flow}}, rng, 1e-4, 24, 1e-8).max_rel_error;
  }
  if (wanted("flow")) {
    FlowEstimator net(PyramidFlowConfig{2, 4, 3, 2}, rng);
    Var a = Var::parameter(random_tensor(Shape{1, 3, 16, 16}, rng, 0.0, s));
    Var b = Var::parameter(random_tensor(Shape{1, 3, 16, 16}, rng, 0.0, s));
    nn::ParamList params;
    net.collect("flow", params);
    auto inputs = spread(params, 3);
    inputs.emplace_back("source", &a);
    inputs.emplace_back("reference", &b);
    const Tensor w = random_tensor(Shape{1, 2, 16, 16}, rng, -1.0, 1.0);
    auto loss = [&] { return weighted_sum(net.forward(a, b), w); };
    out["flow"] = check_gradients(loss, inputs, rng, 1e-5, 6, 1e-7).max_rel_error;
  }
  if (wanted("resample")) {
    Var f = Var::parameter(random_tensor(Shape{1, 2, 16, 16}, rng, -s, s));
    const Tensor w = random_tensor(Shape{1, 2, 16, 16}, rng, -1.0, 1.0);
    auto loss = [&] { return weighted_sum(upsample_flow(subsample_flow(f, 4), 4, 16, 16), w); };
    out["resample"] = check_gradients(loss, {{"flow", &f}}, rng, 1e-4, 24, 1e-9).max_rel_error;
  }
  if (wanted("mask")) {
    MaskNet net(MaskNetConfig{4, 2}, rng);
    nn::ParamList params;
    net.collect("mask", params);
    for (auto& p : params) {
      if (p.name.rfind("mask.head", 0) == 0) p.var->mutable_value() = random_tensor(p.var->shape(), rng, -0.3, 0.3);
    }
    Var a = Var::parameter(random_tensor(Shape{1, 3, 8, 8}, rng, 0.0, s));
    Var b = Var::parameter(random_tensor(Shape{1, 3, 8, 8}, rng, 0.0, s));
    auto inputs = spread(params, 3);
    inputs.emplace_back("warped_past", &a);
    inputs.emplace_back("warped_future", &b);
    const Tensor w = random_tensor(Shape{1, 1, 8, 8}, rng, -1.0, 1.0);
    auto loss = [&] { return weighted_sum(net.forward(a, b), w); };
    out["mask"] = check_gradients(loss, inputs, rng, 1e-5, 6, 1e-7).max_rel_error;
  }
  if (wanted("keyframe_coder")) {
    TransformCoder coder(CoderConfig{3, 3, 4, 4, 4, false}, rng);
    nn::ParamList params;
    coder.collect("keyframe", params);
    Var x = Var::parameter(random_tensor(Shape{1, 3, 16, 16}, rng, 0.0, s));
    auto inputs = spread(params, 4);
    inputs.emplace_back("x", &x);
    TrainConfig tc;
    tc.lambda = 1.0 / kDistortionScale;
    auto loss = [&] {
      Rng noise(seed + 1);
      Var L;
      keyframe_loss(coder, x, tc, noise, &L);
      return L;
    };
    out["keyframe_coder"] = check_gradients(loss, inputs, rng, 1e-5, 4, 1e-4).max_rel_error;
  }
  if (wanted("bframe_loss")) {
    BFrameConfig c;
    c.flow = PyramidFlowConfig{2, 4, 3, 2};
    c.motion.filters = c.motion.latent = c.motion.hyper_latent = 4;
    c.motion.subsample = 4;
    c.motion.context_model = false;
    c.residual = CoderConfig{3, 3, 4, 4, 4, false};
    c.mask = MaskNetConfig{4, 2};
    BFrameModel model(c, rng);
    nn::ParamList params;
    model.collect(params);
    Var p = Var::constant(random_tensor(Shape{1, 3, 16, 16}, rng, 0.0, s));
    Var t = Var::constant(random_tensor(Shape{1, 3, 16, 16}, rng, 0.0, s));
    Var f = Var::constant(random_tensor(Shape{1, 3, 16, 16}, rng, 0.0, s));
    TrainConfig tc;
    tc.lambda = 1.0 / kDistortionScale;
    auto loss = [&] {
      Rng noise(seed + 2);
      Var L;
      triplet_loss(model, p, t, f, tc, QuantMode::train, &noise, &L);
      return L;
    };
    out["bframe_loss"] = check_gradients(loss, spread(params, 8), rng, 1e-5, 4, 1e-4).max_rel_error;
  }
  if (wanted("rate")) {
    const Shape sh{1, 2, 4, 4};
    Tensor yh = random_tensor(sh, rng, -3.0, 3.0);
    for (double& v : yh.vec()) v = quantize_value(v) + rng.uniform(-0.5, 0.5);
    Var mu = Var::parameter(random_tensor(sh, rng, -2.0, 2.0));
    Var sigma = Var::parameter(random_tensor(sh, rng, 0.5, 2.0));
    auto loss = [&] { return ag::sum(gaussian_bits(Var::constant(yh), mu, sigma)); };
    out["rate"] = check_gradients(loss, {{"mu", &mu}, {"sigma", &sigma}}, rng, 1e-4, 24, 1e-9).max_rel_error;
  }
  if (wanted("msssim")) {
    Var a = Var::parameter(random_tensor(Shape{1, 3, 24, 24}, rng, 0.0, s));
    Tensor bt = a.value();
    for (double& v : bt.vec()) v = std::clamp(v + rng.uniform(-0.1, 0.1), 0.0, 1.0);
    Var b = Var::constant(bt);
    auto loss = [&] { return ag::add_scalar(ag::scale(ms_ssim(a, b), -1.0), 1.0); };
    out["msssim"] = check_gradients(loss, {{"a", &a}}, rng, 1e-5, 24, 1e-8).max_rel_error;
  }
  return out;
}

}  // namespace lhbd
