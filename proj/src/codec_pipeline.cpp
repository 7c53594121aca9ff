#include "lhbd/codec_pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "lhbd/errors.hpp"
#include "lhbd/ops.hpp"

namespace lhbd {

using ag::Var;

BFrameConfig BFrameConfig::desk() {
  BFrameConfig c;
  c.flow = PyramidFlowConfig{4, 16, 3, 4};
  c.motion.filters = 32;
  c.motion.latent = 32;
  c.motion.hyper_latent = 16;
  c.motion.subsample = 4;
  c.motion.temporal_prediction = true;
  c.motion.context_model = true;
  c.residual = CoderConfig{3, 3, 32, 32, 24, true};
  c.mask = MaskNetConfig{16, 3};
  c.fusion = FusionMode::learned;
  return c;
}

void BFrameConfig::validate() const {
  motion.validate();
  if (residual.in_channels != 3 || residual.out_channels != 3) throw ConfigError("residual coder must be RGB to RGB");
  if (flow.levels < 1 || flow.hidden < 1) throw ConfigError("flow estimator needs at least one level");
  if (mask.depth < 1 || mask.width < 1) throw ConfigError("mask network needs depth and width >= 1");
  if (residual.context_model != motion.context_model) {
    throw ConfigError("context model must be on for both B-frame coders or for neither");
  }
}

CoderConfig desk_keyframe_config() { return CoderConfig{3, 3, 32, 32, 24, false}; }

BFrameModel::BFrameModel(const BFrameConfig& cfg, Rng& rng) : cfg_(cfg) {
  cfg.validate();
  flow = FlowEstimator(cfg.flow, rng);
  motion = MotionCodec(cfg.motion, rng);
  mask = MaskNet(cfg.mask, rng);
  residual = TransformCoder(cfg.residual, rng);
}

Var BFrameModel::mask_for(const Var& warped_past, const Var& warped_future) const {
  if (cfg_.fusion == FusionMode::learned) return mask.forward(warped_past, warped_future);
  const Shape s = warped_past.shape();
  return Var::constant(constant_mask(s.n, s.h, s.w, 0.5));
}

TripletOutput BFrameModel::forward(const Var& past, const Var& target, const Var& future, QuantMode mode,
                                   Rng* rng) const {
  const Shape s = target.shape();
  if (!(past.shape() == s) || !(future.shape() == s)) {
    throw std::invalid_argument("triplet frames differ in shape");
  }
  const Var est_bwd = flow.forward(target, past);
  const Var est_fwd = flow.forward(target, future);
  Var prediction;
  if (cfg_.motion.temporal_prediction) {
    prediction = predict_flows(flow.forward(future, past), flow.forward(past, future), cfg_.motion.subsample, true);
  } else {
    const int sub = cfg_.motion.subsample;
    prediction = Var::constant(Tensor(Shape{s.n, 4, s.h / sub, s.w / sub}));
  }
  TripletOutput out;
  out.motion = motion.forward(est_bwd, est_fwd, prediction, mode, rng);
  out.warped_past = ag::warp(past, out.motion.flow_bwd);
  out.warped_future = ag::warp(future, out.motion.flow_fwd);
  out.mask = mask_for(out.warped_past, out.warped_future);
  out.fused = fuse(out.warped_past, out.warped_future, out.mask);
  out.residual = residual.forward(ag::sub(target, out.fused), mode, rng);
  out.x_hat = ag::add(out.fused, out.residual.x_hat);
  out.bits_motion = ag::add(out.motion.coded.bits_y, out.motion.coded.bits_z);
  out.bits_residual = ag::add(out.residual.bits_y, out.residual.bits_z);
  return out;
}

void BFrameModel::collect(nn::ParamList& out) {
  flow.collect("flow", out);
  motion.collect("motion", out);
  if (cfg_.fusion == FusionMode::learned) mask.collect("mask", out);
  residual.collect("residual", out);
}

StreamHeader header_for(const CodecModels& models) {
  const BFrameConfig& c = models.bframe.config();
  StreamHeader h;
  h.lambda_id = static_cast<std::uint8_t>(models.lambda_id);
  h.subsampling = c.motion.subsample;
  h.temporal_prediction = c.motion.temporal_prediction;
  h.context_model = c.motion.context_model;
  h.learned_mask = c.fusion == FusionMode::learned;
  return h;
}

void check_compatible(const StreamHeader& header, const CodecModels& models) {
  const StreamHeader want = header_for(models);
  std::string diff;
  if (header.subsampling != want.subsampling) diff += " subsampling";
  if (header.temporal_prediction != want.temporal_prediction) diff += " temporal_prediction";
  if (header.context_model != want.context_model) diff += " context_model";
  if (header.learned_mask != want.learned_mask) diff += " mask_mode";
  if (header.lambda_id != want.lambda_id) diff += " lambda_id";
  if (!diff.empty()) throw ConfigMismatchError("stream and models disagree on:" + diff);
}

int padded_size(int n) { return (n + kCodingAlignment - 1) / kCodingAlignment * kCodingAlignment; }

void DecodedStore::put_frame(int index, Frame f) { frames_[index] = std::move(f); }

const Frame& DecodedStore::frame(int index) const {
  auto it = frames_.find(index);
  if (it == frames_.end()) throw DataError("frame " + std::to_string(index) + " used before it was decoded");
  return it->second;
}

void DecodedStore::put_flow(FlowField f, FlowSource source) {
  const std::pair<int, int> key{f.source_grid, f.points_to};
  flows_[key] = StoredFlow{std::move(f), source};
}

const StoredFlow& DecodedStore::flow(int source, int points_to) const {
  auto it = flows_.find({source, points_to});
  if (it == flows_.end()) {
    throw DataError("flow " + std::to_string(source) + "->" + std::to_string(points_to) + " is not available");
  }
  return it->second;
}

namespace {

Frame pad_frame(const Frame& f) {
  const int h = padded_size(f.height()), w = padded_size(f.width());
  if (h == f.height() && w == f.width()) return f;
  ag::NoGradGuard guard;
  return Frame(ag::pad_replicate(Var::constant(f.pixels()), h, w).value());
}

Frame crop_frame(const Frame& f, int h, int w) {
  if (h == f.height() && w == f.width()) return f;
  ag::NoGradGuard guard;
  return Frame(ag::crop(Var::constant(f.pixels()), h, w).value());
}

LatentChunks find_pair(const std::vector<Chunk>& chunks, ChunkKind y, ChunkKind z, bool required) {
  LatentChunks out;
  bool have_y = false, have_z = false;
  for (const Chunk& c : chunks) {
    if (c.kind == y) out.y = c.payload, have_y = true;
    if (c.kind == z) out.z = c.payload, have_z = true;
  }
  if (required && !(have_y && have_z)) throw DataError("frame is missing a latent chunk");
  if (have_y != have_z) throw DataError("frame has an unpaired latent chunk");
  return out;
}

bool has_kind(const std::vector<Chunk>& chunks, ChunkKind k) {
  return std::any_of(chunks.begin(), chunks.end(), [k](const Chunk& c) { return c.kind == k; });
}

// Reference-to-reference flows for the temporal prediction, identical on both
// sides: inherited decoded flows where the plan names them, the rest
// estimated between decoded references.
std::pair<Tensor, Tensor> reference_flows(const CodingStep& step, DecodedStore& store, const BFrameModel& model) {
  const Frame& past = store.frame(step.past_ref);
  const Frame& future = store.frame(step.future_ref);
  auto get = [&](int src, int dst, const Frame& a, const Frame& b) -> Tensor {
    if (step.inherited_flow && step.inherited_flow->source_target == src) {
      return store.flow(src, dst).field.vectors;
    }
    FlowField f = estimate_flow(model.flow, a, b, src, dst);
    Tensor v = f.vectors;
    if (!store.has_flow(src, dst)) store.put_flow(std::move(f), FlowSource::estimated);
    return v;
  };
  Tensor ftp = get(step.future_ref, step.past_ref, future, past);
  Tensor ptf = get(step.past_ref, step.future_ref, past, future);
  return {std::move(ftp), std::move(ptf)};
}

Tensor prediction_for(const CodingStep& step, DecodedStore& store, const BFrameModel& model, int h, int w) {
  const MotionCoderConfig& mc = model.config().motion;
  if (!mc.temporal_prediction) return Tensor(Shape{1, 4, h / mc.subsample, w / mc.subsample});
  auto [ftp, ptf] = reference_flows(step, store, model);
  ag::NoGradGuard guard;
  return predict_flows(Var::constant(ftp), Var::constant(ptf), mc.subsample, true).value();
}

Tensor fused_prediction(const CodingStep& step, const DecodedStore& store, const BFrameModel& model,
                        const Tensor& flow_bwd, const Tensor& flow_fwd) {
  ag::NoGradGuard guard;
  const Var wp = ag::warp(Var::constant(store.frame(step.past_ref).pixels()), Var::constant(flow_bwd));
  const Var wf = ag::warp(Var::constant(store.frame(step.future_ref).pixels()), Var::constant(flow_fwd));
  const Var m = model.mask_for(wp, wf);
  return fuse(wp.value(), wf.value(), m.value());
}

Frame finish_bframe(const CodingStep& step, DecodedStore& store, const Tensor& fused, const Tensor* r_hat,
                    Tensor flow_bwd, Tensor flow_fwd) {
  Tensor out = fused;
  if (r_hat) {
    auto& o = out.vec();
    const auto& r = r_hat->vec();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] += r[i];
  }
  Frame decoded = Frame::clamped(out);
  store.put_frame(step.target, decoded);
  store.put_flow(FlowField{std::move(flow_bwd), step.target, step.past_ref}, FlowSource::decoded);
  store.put_flow(FlowField{std::move(flow_fwd), step.target, step.future_ref}, FlowSource::decoded);
  return decoded;
}

}  // namespace

StepResult encode_keyframe(const Frame& frame, int index, const TransformCoder& coder) {
  const EncodedLatents e = encode_latents(coder, frame.pixels());
  StepResult r;
  const auto f = static_cast<std::uint32_t>(index);
  r.chunks.push_back(Chunk{ChunkKind::keyframe_y, f, e.chunks.y});
  r.chunks.push_back(Chunk{ChunkKind::keyframe_z, f, e.chunks.z});
  r.decoded = Frame::clamped(synthesize(coder, e.y_hat, frame.height(), frame.width()));
  return r;
}

Frame decode_keyframe(const std::vector<Chunk>& chunks, int height, int width, const TransformCoder& coder) {
  const LatentChunks lc = find_pair(chunks, ChunkKind::keyframe_y, ChunkKind::keyframe_z, true);
  return Frame::clamped(synthesize(coder, decode_latents(coder, lc, height, width), height, width));
}

StepResult encode_bstep(const CodingStep& step, const Frame& target, DecodedStore& store, const BFrameModel& model,
                        const EncodeOptions& opt) {
  const int h = target.height(), w = target.width();
  const int s = model.config().motion.subsample;
  const Frame& past = store.frame(step.past_ref);
  const Frame& future = store.frame(step.future_ref);

  // Motion estimation sees the original target against decoded references.
  const Tensor est_bwd = estimate_flow(model.flow, target, past).vectors;
  const Tensor est_fwd = estimate_flow(model.flow, target, future).vectors;
  const Tensor prediction = prediction_for(step, store, model, h, w);
  Tensor delta;
  {
    ag::NoGradGuard guard;
    const Var low = ag::concat_channels({subsample_flow(Var::constant(est_bwd), s), subsample_flow(Var::constant(est_fwd), s)});
    delta = ag::sub(low, Var::constant(prediction)).value();
  }
  const EncodedLatents m = model.motion.encode(delta);
  const Tensor delta_hat = synthesize(model.motion.coder(), m.y_hat, h / s, w / s);
  auto [flow_bwd, flow_fwd] = model.motion.reconstruct(prediction, delta_hat, h, w);
  const Tensor fused = fused_prediction(step, store, model, flow_bwd, flow_fwd);

  StepResult r;
  const auto f = static_cast<std::uint32_t>(step.target);
  r.chunks.push_back(Chunk{ChunkKind::motion_y, f, m.chunks.y});
  r.chunks.push_back(Chunk{ChunkKind::motion_z, f, m.chunks.z});
  if (!opt.residual) {
    r.decoded = finish_bframe(step, store, fused, nullptr, std::move(flow_bwd), std::move(flow_fwd));
    return r;
  }
  Tensor residual = target.pixels();
  {
    auto& v = residual.vec();
    const auto& p = fused.vec();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= p[i];
  }
  const EncodedLatents e = encode_latents(model.residual, residual);
  const Tensor r_hat = synthesize(model.residual, e.y_hat, h, w);
  r.chunks.push_back(Chunk{ChunkKind::residual_y, f, e.chunks.y});
  r.chunks.push_back(Chunk{ChunkKind::residual_z, f, e.chunks.z});
  r.decoded = finish_bframe(step, store, fused, &r_hat, std::move(flow_bwd), std::move(flow_fwd));
  return r;
}

Frame decode_bstep(const CodingStep& step, const std::vector<Chunk>& chunks, DecodedStore& store,
                   const BFrameModel& model) {
  const Frame& past = store.frame(step.past_ref);
  const int h = past.height(), w = past.width();
  const int s = model.config().motion.subsample;
  const Tensor prediction = prediction_for(step, store, model, h, w);
  const LatentChunks mc = find_pair(chunks, ChunkKind::motion_y, ChunkKind::motion_z, true);
  const Tensor delta_hat = model.motion.decode_delta(mc, h / s, w / s);
  auto [flow_bwd, flow_fwd] = model.motion.reconstruct(prediction, delta_hat, h, w);
  const Tensor fused = fused_prediction(step, store, model, flow_bwd, flow_fwd);
  if (!has_kind(chunks, ChunkKind::residual_y) && !has_kind(chunks, ChunkKind::residual_z)) {
    return finish_bframe(step, store, fused, nullptr, std::move(flow_bwd), std::move(flow_fwd));
  }
  const LatentChunks rc = find_pair(chunks, ChunkKind::residual_y, ChunkKind::residual_z, true);
  const Tensor r_hat = synthesize(model.residual, decode_latents(model.residual, rc, h, w), h, w);
  return finish_bframe(step, store, fused, &r_hat, std::move(flow_bwd), std::move(flow_fwd));
}

namespace {

// Absolute-index steps of every GOP, keyed by target.
std::map<int, CodingStep> steps_by_target(const SequenceSchedule& sched) {
  std::map<int, CodingStep> out;
  for (const GopInstance& g : sched.gops) {
    for (CodingStep s : g.plan.steps) {
      s.target += g.offset;
      s.past_ref += g.offset;
      s.future_ref += g.offset;
      if (s.inherited_flow) s.inherited_flow->source_target += g.offset;
      out[s.target] = s;
    }
  }
  return out;
}

double chunk_bits(const Chunk& c) { return 8.0 * static_cast<double>(c.payload.size() + kChunkFramingBytes); }

}  // namespace

std::vector<FrameLog> rate_profile(const Bitstream& stream) {
  const double pixels = static_cast<double>(stream.header.width) * stream.header.height;
  std::vector<FrameLog> logs(stream.header.frame_count);
  for (std::size_t i = 0; i < logs.size(); ++i) logs[i].frame = static_cast<int>(i);
  const SequenceSchedule sched = schedule_sequence(static_cast<int>(stream.header.frame_count), stream.header.gop_size);
  for (const auto& [t, s] : steps_by_target(sched)) logs[static_cast<std::size_t>(t)].level = s.level;
  for (const Chunk& c : stream.chunks) {
    if (c.frame >= logs.size()) throw DataError("chunk frame index out of range");
    FrameLog& l = logs[c.frame];
    const double bpp = chunk_bits(c) / pixels;
    switch (c.kind) {
      case ChunkKind::keyframe_y:
      case ChunkKind::keyframe_z: l.bpp_image += bpp; break;
      case ChunkKind::motion_y:
      case ChunkKind::motion_z: l.bpp_motion += bpp; break;
      case ChunkKind::residual_y:
      case ChunkKind::residual_z: l.bpp_residual += bpp; break;
    }
  }
  return logs;
}

EncodeResult encode_video(const VideoSequence& seq, int gop_size, const CodecModels& models,
                          const EncodeOptions& opt) {
  seq.validate();
  const int h = seq.height(), w = seq.width();
  const SequenceSchedule sched = schedule_sequence(seq.size(), gop_size);
  const std::map<int, CodingStep> steps = steps_by_target(sched);

  EncodeResult out;
  out.stream.header = header_for(models);
  out.stream.header.width = static_cast<std::uint32_t>(w);
  out.stream.header.height = static_cast<std::uint32_t>(h);
  out.stream.header.gop_size = static_cast<std::uint16_t>(gop_size);
  out.stream.header.frame_count = static_cast<std::uint32_t>(seq.size());

  DecodedStore store;
  for (int t : sched.coding_order) {
    const Frame target = pad_frame(seq.frames[static_cast<std::size_t>(t)]);
    StepResult r;
    auto it = steps.find(t);
    if (it == steps.end()) {
      r = encode_keyframe(target, t, models.keyframe);
      store.put_frame(t, r.decoded);
    } else {
      r = encode_bstep(it->second, target, store, models.bframe, opt);
    }
    for (Chunk& c : r.chunks) out.stream.chunks.push_back(std::move(c));
  }

  out.logs = rate_profile(out.stream);
  for (int t = 0; t < seq.size(); ++t) {
    Frame rec = crop_frame(store.frame(t), h, w);
    FrameLog& l = out.logs[static_cast<std::size_t>(t)];
    l.psnr = psnr(seq.frames[static_cast<std::size_t>(t)], rec);
    l.msssim = std::min(h, w) >= MsSsimOptions{}.window ? ms_ssim(seq.frames[static_cast<std::size_t>(t)], rec) : 0.0;
    out.reconstructions.push_back(std::move(rec));
  }
  return out;
}

VideoSequence decode_video(const Bitstream& stream, const CodecModels& models) {
  check_compatible(stream.header, models);
  const int h = static_cast<int>(stream.header.height), w = static_cast<int>(stream.header.width);
  const int ph = padded_size(h), pw = padded_size(w);
  const int n = static_cast<int>(stream.header.frame_count);
  const SequenceSchedule sched = schedule_sequence(n, stream.header.gop_size);
  const std::map<int, CodingStep> steps = steps_by_target(sched);

  std::vector<std::vector<Chunk>> per_frame(static_cast<std::size_t>(n));
  for (const Chunk& c : stream.chunks) per_frame.at(c.frame).push_back(c);

  DecodedStore store;
  for (int t : sched.coding_order) {
    const auto& chunks = per_frame[static_cast<std::size_t>(t)];
    auto it = steps.find(t);
    if (it == steps.end()) {
      store.put_frame(t, decode_keyframe(chunks, ph, pw, models.keyframe));
    } else {
      decode_bstep(it->second, chunks, store, models.bframe);
    }
  }
  VideoSequence out;
  for (int t = 0; t < n; ++t) out.frames.push_back(crop_frame(store.frame(t), h, w));
  return out;
}

}  // namespace lhbd
