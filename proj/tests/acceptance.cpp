// Acceptance suite: one PASS/FAIL line per criterion. Trained models are
// cached under the directory given as the first argument, so reruns only
// repeat the evaluations.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "lhbd/checkpoint.hpp"
#include "lhbd/errors.hpp"
#include "lhbd/experiments.hpp"
#include "lhbd/ops.hpp"
#include "lhbd/run_config.hpp"
#include "lhbd/trainer.hpp"

namespace fs = std::filesystem;
using namespace lhbd;
using ag::Var;

namespace {

// Rate points trained for the end-to-end and ablation criteria.
const std::vector<int> kLambdaIds{0, 1, 2, 3};
// Fine-tuning iterations of every ablation arm (the control arm included).
constexpr int kAblationIters = 150;
constexpr double kAblationLr = 1e-4;
// Pixels ignored at each border when averaging flow errors.
constexpr int kInteriorMargin = 8;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const Outcome& o, double seconds) {
  std::printf("criterion %2d %s  %s  (%.0fs)  %s\n", id, o.pass ? "PASS" : "FAIL", name.c_str(), seconds,
              o.detail.c_str());
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

void run(int id, const std::string& name, const std::function<Outcome()>& fn) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = fn();
  } catch (const std::exception& e) {
    o = Outcome{false, std::string("exception: ") + e.what()};
  }
  report(id, name, o, seconds_since(t0));
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

void note(const std::string& s) {
  std::printf("    %s\n", s.c_str());
  std::fflush(stdout);
}

Frame random_frame(Rng& rng, int h, int w) {
  Frame f(h, w);
  for (auto& v : f.pixels().vec()) v = rng.uniform(0.0, 1.0);
  return f;
}

double mse_of(const Tensor& a, const Tensor& b) {
  double se = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) se += (a[i] - b[i]) * (a[i] - b[i]);
  return se / static_cast<double>(a.size());
}

double interior_mean_distance(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  int n = 0;
  for (int y = kInteriorMargin; y < a.h() - kInteriorMargin; ++y)
    for (int x = kInteriorMargin; x < a.w() - kInteriorMargin; ++x) {
      s += std::hypot(a.at(0, 0, y, x) - b.at(0, 0, y, x), a.at(0, 1, y, x) - b.at(0, 1, y, x));
      ++n;
    }
  return s / n;
}

// ---------------------------------------------------------------------------
// Training cache

struct Trained {
  std::map<int, fs::path> keyframe, bframe;
  std::map<std::string, std::map<int, fs::path>> arms;  // "control" and each toggle
  double train_seconds = 0.0;
};

double stored_seconds(const fs::path& p) { return load_checkpoint(p).meta.value("train_seconds", 0.0); }

fs::path flow_init(const RunConfig& rc, const fs::path& dir) {
  const fs::path p = dir / "flow_init.ckpt";
  if (fs::exists(p)) return p;
  const auto t0 = Clock::now();
  Rng rng(rc.seed + 1);
  BFrameModel base(rc.bframe, rng);
  FlowPretrainConfig fc = rc.flow_pretrain;
  fc.crop = rc.train.crop;
  pretrain_flow(base.flow, fc);
  save_bframe(base, 0.0, 0, p, {{"train_seconds", seconds_since(t0)}});
  return p;
}

fs::path keyframe_model(const RunConfig& rc, int id, const fs::path& dir) {
  const fs::path p = dir / ("keyframe_" + std::to_string(id) + ".ckpt");
  if (fs::exists(p)) return p;
  const auto t0 = Clock::now();
  Rng rng(rc.seed + 100 + static_cast<std::uint64_t>(id));
  TransformCoder coder(rc.keyframe, rng);
  const TrainConfig tc = rc.keyframe_train_at(id);
  ClipPool pool = rc.make_pool();
  pretrain_keyframe(coder, pool, tc);
  save_keyframe(coder, tc.lambda, id, p, {{"train_seconds", seconds_since(t0)}});
  return p;
}

fs::path bframe_model(const RunConfig& rc, int id, const fs::path& flow, const fs::path& key,
                      const fs::path& dir) {
  const fs::path p = dir / ("bframe_" + std::to_string(id) + ".ckpt");
  if (fs::exists(p)) return p;
  const auto t0 = Clock::now();
  Rng rng(rc.seed + 200 + static_cast<std::uint64_t>(id));
  BFrameModel model(rc.bframe, rng);
  {
    nn::ParamList params, flow_params;
    model.collect(params);
    for (const auto& q : params)
      if (q.name.rfind("flow", 0) == 0) flow_params.push_back(q);
    restore_params(load_checkpoint(flow), flow_params, true);
  }
  const KeyframeCheckpoint k = load_keyframe(key);
  const TrainConfig tc = rc.bframe_train_at(id);
  ClipPool pool = rc.make_pool();
  train_bidirectional(model, pool, tc, &k.coder);
  save_bframe(model, tc.lambda, id, p, {{"train_seconds", seconds_since(t0)}});
  return p;
}

// Arms start from the trained model and get the same number of fine-tuning
// steps on the same batches; "control" keeps every feature on.
fs::path arm_model(const RunConfig& rc, const std::string& arm, int id, const fs::path& base,
                   const fs::path& key, const fs::path& dir) {
  const fs::path p = dir / ("arm_" + arm + "_" + std::to_string(id) + ".ckpt");
  if (fs::exists(p)) return p;
  const auto t0 = Clock::now();
  const BFrameConfig cfg = arm == "control" ? rc.bframe : toggle_off(rc.bframe, arm);
  BFrameCheckpoint b = load_bframe(base, &cfg);
  const KeyframeCheckpoint k = load_keyframe(key);
  TrainConfig tc = rc.bframe_train_at(id);
  tc.max_iters = kAblationIters;
  tc.lr_init = kAblationLr;
  tc.seed = Rng::splitmix(tc.seed + 7);
  ClipPool pool = rc.make_pool();
  train_bidirectional(b.model, pool, tc, &k.coder);
  save_bframe(b.model, tc.lambda, id, p, {{"train_seconds", seconds_since(t0)}});
  return p;
}

Trained train_all(const RunConfig& rc, const fs::path& dir) {
  fs::create_directories(dir);
  Trained t;
  const fs::path flow = flow_init(rc, dir);
  t.train_seconds += stored_seconds(flow);
  for (int id : kLambdaIds) {
    t.keyframe[id] = keyframe_model(rc, id, dir);
    t.bframe[id] = bframe_model(rc, id, flow, t.keyframe[id], dir);
    t.train_seconds += stored_seconds(t.keyframe[id]) + stored_seconds(t.bframe[id]);
    note("trained rate point " + std::to_string(id));
  }
  return t;
}

void train_arms(const RunConfig& rc, Trained& t, const fs::path& dir) {
  std::vector<std::string> arms{"control"};
  arms.insert(arms.end(), kAblationToggles.begin(), kAblationToggles.end());
  for (const auto& arm : arms)
    for (int id : kLambdaIds) {
      t.arms[arm][id] = arm_model(rc, arm, id, t.bframe[id], t.keyframe[id], dir);
      t.train_seconds += stored_seconds(t.arms[arm][id]);
    }
}

CodecModels models_of(const fs::path& key, const fs::path& b) { return load_models(key, b); }

// ---------------------------------------------------------------------------
// Criteria

Outcome coding_plan() {
  const CodingPlan p = build_plan(8);
  Outcome o;
  std::map<int, std::set<int>> levels;
  for (const CodingStep& s : p.steps) levels[s.level].insert(s.target);
  const std::map<int, std::set<int>> expected{{1, {4}}, {2, {2, 6}}, {3, {1, 3, 5, 7}}};
  if (p.keyframes != std::array<int, 2>{0, 8}) o = {false, "keyframes differ"};
  if (levels != expected) o = {false, "level sets differ"};
  std::set<int> decoded{0, 8};
  for (const CodingStep& s : p.steps) {
    if (s.past_ref + s.future_ref != 2 * s.target) o = {false, "step " + std::to_string(s.target) + " not a midpoint"};
    if (!decoded.count(s.past_ref) || !decoded.count(s.future_ref)) {
      o = {false, "step " + std::to_string(s.target) + " uses an undecoded reference"};
    }
    decoded.insert(s.target);
  }
  if (!validate_plan(p).empty()) o = {false, validate_plan(p).front()};
  if (o.pass) o.detail = "keyframes {0,8}; levels {4} {2,6} {1,3,5,7}; midpoints and decode order hold";
  return o;
}

Outcome warping() {
  Rng rng(21);
  const Frame ref = random_frame(rng, 32, 40);
  Outcome o;
  const Frame same = backward_warp(ref, FlowField{Tensor(Shape{1, 2, 32, 40}), 0, 0});
  if (same.pixels().vec() != ref.pixels().vec()) o = {false, "zero flow changed the frame"};
  Tensor shift(Shape{1, 2, 32, 40});
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 40; ++x) {
      shift.at(0, 0, y, x) = 3.0;
      shift.at(0, 1, y, x) = -2.0;
    }
  const Frame moved = backward_warp(ref, FlowField{shift, 0, 1});
  for (int c = 0; c < 3; ++c)
    for (int y = 2; y < 32; ++y)
      for (int x = 0; x < 37; ++x)
        if (moved.pixels().at(0, c, y, x) != ref.pixels().at(0, c, y - 2, x + 3)) o = {false, "integer shift not exact"};
  const auto warp = grad_check("warp");
  const auto flow = grad_check("flow");
  const double err = std::max(warp.at("warp"), flow.at("flow"));
  if (!(err < 1e-3)) o = {false, "gradient rel err " + fmt("%.2e", err)};
  if (o.pass) {
    o.detail = "identity and shift exact; grad rel err warp " + fmt("%.1e", warp.at("warp")) + ", flow " +
               fmt("%.1e", flow.at("flow"));
  }
  return o;
}

Outcome flow_resampling() {
  double const_err = 0.0, ramp_err = 0.0;
  for (int s : {2, 4}) {
    Tensor c(Shape{1, 2, 32, 48}), ramp(Shape{1, 2, 64, 64});
    for (int y = 0; y < 32; ++y)
      for (int x = 0; x < 48; ++x) {
        c.at(0, 0, y, x) = 3.5;
        c.at(0, 1, y, x) = -1.25;
      }
    const_err = std::max(const_err, max_abs_diff(upsample_flow(subsample_flow(c, s), s, 32, 48), c));
    Tensor low_c(Shape{1, 2, 32 / s, 48 / s});
    for (auto& v : low_c.vec()) v = 0.75;
    const_err = std::max(const_err, max_abs_diff(subsample_flow(upsample_flow(low_c, s, 32, 48), s), low_c));
    for (int y = 0; y < 64; ++y)
      for (int x = 0; x < 64; ++x) {
        ramp.at(0, 0, y, x) = 0.1 * x;
        ramp.at(0, 1, y, x) = -0.05 * y;
      }
    const Tensor back = upsample_flow(subsample_flow(ramp, s), s, 64, 64);
    for (int y = 3 * s; y < 64 - 3 * s; ++y)
      for (int x = 3 * s; x < 64 - 3 * s; ++x)
        for (int ch = 0; ch < 2; ++ch)
          ramp_err = std::max(ramp_err, std::abs(back.at(0, ch, y, x) - ramp.at(0, ch, y, x)));
  }
  Outcome o{const_err <= 1e-6 && ramp_err <= 1e-5, ""};
  o.detail = "constants max err " + fmt("%.1e", const_err) + ", ramp interior max err " + fmt("%.1e", ramp_err);
  return o;
}

struct CvCase {
  SyntheticSpec spec;
  VideoSequence seq;
};

std::vector<CvCase> constant_velocity_cases() {
  const std::vector<std::array<double, 2>> velocities{{0.5, 0.25}, {-1.0, 0.75}, {0.25, -0.5},
                                                      {-0.75, -0.25}, {1.0, 0.5}, {-0.5, 1.0}};
  std::vector<CvCase> out;
  std::uint64_t k = 0;
  for (const auto& v : velocities) {
    CvCase c;
    c.spec.kind = SyntheticKind::constant_velocity;
    c.spec.velocity = v;
    c.spec.seed = Rng::splitmix(0xACCE97 + k++);
    c.seq = synth_sequence(c.spec);
    out.push_back(std::move(c));
  }
  return out;
}

Outcome temporal_prediction(const Trained& t) {
  const auto cases = constant_velocity_cases();
  const CodingPlan plan = build_plan(8);
  Outcome o;
  for (int id : kLambdaIds) {
    const CodecModels m = models_of(t.keyframe.at(id), t.bframe.at(id));
    const BFrameModel& b = m.bframe;
    const int s = b.config().motion.subsample;
    double diff = 0.0, epe = 0.0, bits_with = 0.0, bits_without = 0.0;
    int n = 0;
    ag::NoGradGuard guard;
    for (const CvCase& c : cases)
      for (const CodingStep& st : plan.steps) {
        const Frame& tgt = c.seq.frames[static_cast<std::size_t>(st.target)];
        const Frame& past = c.seq.frames[static_cast<std::size_t>(st.past_ref)];
        const Frame& fut = c.seq.frames[static_cast<std::size_t>(st.future_ref)];
        const Tensor est_b = estimate_flow(b.flow, tgt, past).vectors;
        const Tensor est_f = estimate_flow(b.flow, tgt, fut).vectors;
        Tensor rr_b = estimate_flow(b.flow, fut, past).vectors;
        Tensor rr_f = estimate_flow(b.flow, past, fut).vectors;
        for (auto& v : rr_b.vec()) v *= 0.5;
        for (auto& v : rr_f.vec()) v *= 0.5;
        diff += interior_mean_distance(est_b, rr_b) + interior_mean_distance(est_f, rr_f);
        epe += interior_mean_distance(est_b, synth_flow(c.spec, st.target, st.past_ref)) +
               interior_mean_distance(est_f, synth_flow(c.spec, st.target, st.future_ref));
        n += 2;

        const Var vb = Var::constant(est_b), vf = Var::constant(est_f);
        const Var pred = predict_flows(Var::constant(estimate_flow(b.flow, fut, past).vectors),
                                       Var::constant(estimate_flow(b.flow, past, fut).vectors), s, true);
        const Var zero = predict_flows(Var::constant(est_b), Var::constant(est_f), s, false);
        const MotionResult with = b.motion.forward(vb, vf, pred, QuantMode::infer, nullptr);
        const MotionResult without = b.motion.forward(vb, vf, zero, QuantMode::infer, nullptr);
        bits_with += with.coded.bits_y.value().item() + with.coded.bits_z.value().item();
        bits_without += without.coded.bits_y.value().item() + without.coded.bits_z.value().item();
      }
    diff /= n;
    epe /= n;
    note("rate point " + std::to_string(id) + ": |est - 0.5 rr| " + fmt("%.3f px", diff) + ", EPE vs truth " +
         fmt("%.3f px", epe) + ", motion bits with/without prediction " + fmt("%.0f", bits_with) + "/" +
         fmt("%.0f", bits_without));
    if (!(diff < 0.5)) o.pass = false;
    if (!(bits_with < bits_without)) o.pass = false;
    o.detail += (o.detail.empty() ? "" : "; ") + std::to_string(id) + ": " + fmt("%.3f px", diff) + " " +
                fmt("%.0f", bits_with) + "<" + fmt("%.0f", bits_without);
  }
  return o;
}

std::vector<VideoSequence> held_out_occlusion_clips() {
  const std::vector<std::array<double, 2>> bg{{0.75, 0.0}, {-0.5, 0.25}, {0.25, 0.5}, {-1.0, -0.25}};
  const std::vector<std::array<double, 2>> fg{{-1.5, 0.5}, {1.25, -0.25}, {-1.0, -0.75}, {1.5, 0.25}};
  std::vector<VideoSequence> out;
  for (std::size_t i = 0; i < bg.size(); ++i) {
    SyntheticSpec s;
    s.kind = SyntheticKind::occlusion;
    s.velocity = bg[i];
    s.fg_velocity = fg[i];
    s.patch = 64 / 3;
    s.seed = Rng::splitmix(0x0CC1 + i);
    out.push_back(synth_sequence(s));
  }
  return out;
}

Outcome mask_fusion(const Trained& t) {
  Outcome o;
  Rng rng(51);
  for (int trial = 0; trial < 50; ++trial) {
    const Frame a = random_frame(rng, 12, 10), b = random_frame(rng, 12, 10), g = random_frame(rng, 12, 10);
    Tensor m(Shape{1, 1, 12, 10});
    for (auto& v : m.vec()) v = rng.uniform(0.0, 1.0);
    const Frame f = fuse(a, b, m);
    for (std::size_t i = 0; i < f.pixels().size(); ++i) {
      const double lo = std::min(a.pixels()[i], b.pixels()[i]), hi = std::max(a.pixels()[i], b.pixels()[i]);
      if (f.pixels()[i] < lo || f.pixels()[i] > hi) o = {false, "fusion left the convex hull"};
    }
    const double oracle = psnr(g, fuse(a, b, oracle_mask(a, b, g)));
    const double avg = psnr(g, fuse(a, b, constant_mask(1, 12, 10, 0.5)));
    if (oracle < avg) o = {false, "oracle mask worse than averaging"};
  }
  SyntheticSpec spec;
  spec.kind = SyntheticKind::occlusion;
  const auto seq = synth_sequence(spec);
  const Frame wp = backward_warp(seq.frames[0], FlowField{synth_flow(spec, 4, 0), 4, 0});
  const Frame wf = backward_warp(seq.frames[8], FlowField{synth_flow(spec, 4, 8), 4, 8});
  const double oracle_gain = psnr(seq.frames[4], fuse(wp, wf, oracle_mask(wp, wf, seq.frames[4]))) -
                             psnr(seq.frames[4], fuse(wp, wf, constant_mask(1, 64, 64, 0.5)));
  if (!(oracle_gain > 0.5)) o.pass = false;
  o.detail = "oracle gain on occlusion " + fmt("%.2f dB", oracle_gain);

  const auto clips = held_out_occlusion_clips();
  const CodingPlan plan = build_plan(8);
  for (int id : kLambdaIds) {
    const CodecModels m = models_of(t.keyframe.at(id), t.bframe.at(id));
    double learned = 0.0, average = 0.0;
    int n = 0;
    ag::NoGradGuard guard;
    for (const VideoSequence& seq_i : clips)
      for (const CodingStep& st : plan.steps) {
        auto var = [&](int i) { return Var::constant(seq_i.frames[static_cast<std::size_t>(i)].pixels()); };
        const TripletOutput out = m.bframe.forward(var(st.past_ref), var(st.target), var(st.future_ref),
                                                   QuantMode::infer, nullptr);
        const Tensor& truth = seq_i.frames[static_cast<std::size_t>(st.target)].pixels();
        const Tensor avg = fuse(out.warped_past.value(), out.warped_future.value(), constant_mask(1, 64, 64, 0.5));
        learned += psnr_from_mse(mse_of(out.fused.value(), truth));
        average += psnr_from_mse(mse_of(avg, truth));
        ++n;
      }
    learned /= n;
    average /= n;
    note("rate point " + std::to_string(id) + ": learned mask " + fmt("%.2f dB", learned) + ", average " +
         fmt("%.2f dB", average));
    if (!(learned >= average - 0.1)) o.pass = false;
    o.detail += "; " + std::to_string(id) + ": learned-avg " + fmt("%+.2f dB", learned - average);
  }
  return o;
}

double normal_cdf_integral(double a, double b, double mu, double sigma) {
  // Composite Simpson on the density.
  const int n = 4000;
  const double h = (b - a) / n;
  auto pdf = [&](double x) {
    const double z = (x - mu) / sigma;
    return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi));
  };
  double s = pdf(a) + pdf(b);
  for (int i = 1; i < n; ++i) s += pdf(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

Outcome entropy_model() {
  double rel = 0.0, sum_err = 0.0;
  for (double mu : {0.0, 0.37, -4.2})
    for (double sigma : {0.11, 0.6, 1.0, 5.5, 30.0}) {
      const int lo = static_cast<int>(std::floor(mu - 20 * sigma)), hi = static_cast<int>(std::ceil(mu + 20 * sigma));
      double total = 0.0;
      for (int k = lo; k <= hi; ++k) {
        const double p = gaussian_bin_probability(k, mu, sigma);
        total += p;
        if (std::abs(k - mu) <= 6 * sigma + 0.5) {
          const double q = normal_cdf_integral(k - 0.5, k + 0.5, mu, sigma);
          rel = std::max(rel, std::abs(p - q) / q);
        }
      }
      sum_err = std::max(sum_err, std::abs(total - 1.0));
    }
  const double bits = -std::log2(gaussian_bin_probability(0.0, 0.0, 1.0));
  const double oracle = -std::log2(std::erf(0.5 / std::numbers::sqrt2));
  Outcome o{rel < 1e-6 && sum_err < 1e-6 && std::abs(bits - 1.3848) < 1e-3 && std::abs(bits - oracle) < 1e-12, ""};
  o.detail = "max rel err vs integration " + fmt("%.1e", rel) + ", |sum-1| " + fmt("%.1e", sum_err) +
             ", unit bin " + fmt("%.5f bits", bits);
  return o;
}

Outcome range_coder() {
  Rng rng(71);
  const std::size_t n = 1'000'000;
  std::vector<std::pair<double, double>> params;
  for (int i = 0; i < 256; ++i) params.emplace_back(rng.uniform(-20, 20), std::exp(rng.uniform(std::log(0.11), std::log(40.0))));
  std::vector<entropy::DiscreteModel> models;
  for (const auto& [mu, sigma] : params) models.push_back(entropy::gaussian_model(mu, sigma));
  std::vector<int> symbols(n);
  std::vector<std::size_t> which(n);
  double estimate = 0.0;
  entropy::RangeEncoder enc;
  for (std::size_t i = 0; i < n; ++i) {
    which[i] = rng.below(params.size());
    const auto [mu, sigma] = params[which[i]];
    symbols[i] = static_cast<int>(std::round(mu + sigma * rng.normal()));
    estimate += -std::log2(std::max(gaussian_bin_probability(symbols[i], mu, sigma), kProbabilityFloor));
    enc.encode_symbol(models[which[i]], symbols[i]);
  }
  const Bytes bytes = enc.finish();
  entropy::RangeDecoder dec(bytes);
  bool exact = true;
  for (std::size_t i = 0; i < n && exact; ++i) exact = dec.decode_symbol(models[which[i]]) == symbols[i];
  const double measured = 8.0 * static_cast<double>(bytes.size());
  const bool within = measured <= estimate * 1.02 + 32 * 8;

  // Corruption: a truncated payload and a flipped byte inside a container.
  bool truncated_caught = false, flip_caught = false;
  std::vector<int> few(symbols.begin(), symbols.begin() + 5000);
  std::vector<entropy::DiscreteModel> few_models;
  for (std::size_t i = 0; i < few.size(); ++i) few_models.push_back(models[which[i]]);
  Bytes cut = entropy::range_encode(few, few_models);
  cut.resize(cut.size() / 2);
  try {
    entropy::range_decode(cut, few_models);
  } catch (const DataError&) {
    truncated_caught = true;
  }
  Bitstream s;
  s.header.width = s.header.height = 64;
  s.header.frame_count = 1;
  s.chunks.push_back({ChunkKind::keyframe_y, 0, Bytes(bytes.begin(), bytes.begin() + 400)});
  Bytes container = write_bitstream(s);
  container[kHeaderBytes + 20] ^= 0x10;
  try {
    read_bitstream(container);
  } catch (const DataError&) {
    flip_caught = true;
  }
  Outcome o{exact && within && truncated_caught && flip_caught, ""};
  o.detail = std::string(exact ? "lossless" : "MISMATCH") + "; measured/estimated " +
             fmt("%.4f", measured / estimate) + "; truncation " + (truncated_caught ? "caught" : "missed") +
             ", bit flip " + (flip_caught ? "caught" : "missed");
  return o;
}

struct EndToEnd {
  std::vector<PointResult> full, intra;
};

Outcome end_to_end(const Trained& t, const std::vector<TestSequence>& test, const fs::path& dir, EndToEnd& r) {
  for (int id : kLambdaIds) {
    const CodecModels m = models_of(t.keyframe.at(id), t.bframe.at(id));
    r.full.push_back(evaluate_models(m, test, 8, "full_" + std::to_string(id)));
    r.intra.push_back(evaluate_all_intra(m.keyframe, test, "intra_" + std::to_string(id)));
    const RDPoint& f = r.full.back().point;
    const RDPoint& i = r.intra.back().point;
    note("rate point " + std::to_string(id) + ": full " + fmt("%.3f bpp", f.bpp) + " " + fmt("%.2f dB", f.psnr) +
         " | all-intra " + fmt("%.3f bpp", i.bpp) + " " + fmt("%.2f dB", i.psnr));
  }
  Outcome o;
  // (a) drift
  bool drift_free = true;
  for (const auto& p : r.full) drift_free = drift_free && p.drift_free;
  // (b) rate and quality both rise with lambda
  bool monotone = true;
  for (std::size_t i = 1; i < r.full.size(); ++i) {
    monotone = monotone && r.full[i].point.bpp > r.full[i - 1].point.bpp &&
               r.full[i].point.psnr > r.full[i - 1].point.psnr;
  }
  // (c)
  const RDCurve full = curve_of("full", r.full), intra = curve_of("all_intra", r.intra);
  const double bd = bd_rate(full, intra);
  // (d) mean per-frame bpp over the test set, at every rate point
  bool profile = true;
  std::vector<FrameLog> shown;
  for (std::size_t k = 0; k < r.full.size(); ++k) {
    std::map<int, double> bpp;
    std::map<int, int> level;
    for (const auto& [name, logs] : r.full[k].logs)
      for (const FrameLog& l : logs) {
        bpp[l.frame] += l.bpp() / static_cast<double>(r.full[k].logs.size());
        level[l.frame] = l.level;
      }
    double key_min = 1e9, b_max = 0.0;
    for (const auto& [f, v] : bpp) (level[f] == 0 ? key_min = std::min(key_min, v) : b_max = std::max(b_max, v));
    profile = profile && key_min > b_max;
    note("rate point " + std::to_string(kLambdaIds[k]) + ": keyframe min " + fmt("%.3f bpp", key_min) +
         ", B-frame max " + fmt("%.3f bpp", b_max));
    if (k == r.full.size() / 2) shown = r.full[k].logs.begin()->second;
  }
  write_rd_csv({full, intra}, dir / "rd.csv");
  write_gop_profile_csv(shown, dir / "gop_profile.csv");
  o.pass = drift_free && monotone && bd < 0.0 && profile;
  o.detail = std::string("(a) ") + (drift_free ? "bit-exact" : "DRIFT") + " (b) " +
             (monotone ? "monotone" : "NOT monotone") + " (c) BD-BR vs all-intra " + fmt("%+.1f%%", bd) + " (d) " +
             (profile ? "keyframes largest" : "keyframes NOT largest") + "; training " +
             fmt("%.0f s", t.train_seconds);
  return o;
}

Outcome bd_metric() {
  RDCurve a;
  a.name = "a";
  const double q[] = {30.0, 32.5, 35.1, 37.0, 38.2};
  const double r[] = {0.1, 0.2, 0.45, 0.9, 1.6};
  for (int i = 0; i < 5; ++i) a.points.push_back({"", r[i], q[i], 0.0});
  auto scaled = [&](double f) {
    RDCurve c = a;
    for (auto& p : c.points) p.bpp *= f;
    return c;
  };
  RDCurve b;
  const double qb[] = {30.4, 33.1, 35.3, 37.6, 38.9};
  const double rb[] = {0.08, 0.19, 0.4, 0.85, 1.5};
  for (int i = 0; i < 5; ++i) b.points.push_back({"", rb[i], qb[i], 0.0});
  const double id = bd_rate(a, a), half = bd_rate(scaled(0.5), a), up = bd_rate(scaled(1.25), a);
  const double ab = bd_rate(a, b), ba = bd_rate(b, a);
  const double anti = (1 + ab / 100) * (1 + ba / 100) - 1.0;
  Outcome o{std::abs(id) < 1e-9 && std::abs(half + 50) < 1e-6 && std::abs(up - 25) < 1e-6 && std::abs(anti) < 0.01,
            ""};
  o.detail = "identity " + fmt("%.1e", id) + ", halved " + fmt("%.6f%%", half) + ", x1.25 " + fmt("%.6f%%", up) +
             ", antisymmetry residual " + fmt("%.4f", anti);
  return o;
}

RDPoint subset_point(const PointResult& p, const std::vector<TestSequence>& set) {
  RDPoint out{p.point.label, 0.0, 0.0, 0.0};
  int n = 0;
  for (const TestSequence& ts : set) {
    if (!ts.motion_heavy) continue;
    const RDPoint& s = p.per_sequence.at(ts.name);
    out.bpp += s.bpp;
    out.psnr += s.psnr;
    out.msssim += s.msssim;
    ++n;
  }
  out.bpp /= n;
  out.psnr /= n;
  out.msssim /= n;
  return out;
}

Outcome ablation(Trained& t, const RunConfig& rc, const std::vector<TestSequence>& test, const fs::path& dir) {
  train_arms(rc, t, dir);
  std::map<std::string, std::vector<PointResult>> results;
  for (const auto& [arm, paths] : t.arms)
    for (int id : kLambdaIds) {
      const CodecModels m = models_of(t.keyframe.at(id), paths.at(id));
      results[arm].push_back(evaluate_models(m, test, 8, arm + "_" + std::to_string(id)));
    }
  auto heavy = [&](const std::vector<PointResult>& ps, const std::string& name) {
    RDCurve c;
    c.name = name;
    for (const auto& p : ps) c.points.push_back(subset_point(p, test));
    return c.sorted();
  };
  Outcome o;
  std::vector<AblationRow> rows;
  for (const auto& toggle : kAblationToggles) {
    AblationRow row = compare_arms(toggle, results.at("control"), results.at(toggle));
    const double bd_heavy = bd_rate(heavy(results.at("control"), "on"), heavy(results.at(toggle), "off"));
    rows.push_back(row);
    std::string line = toggle + ": BD-BR all " + fmt("%+.1f%%", row.bd_rate_psnr) + ", motion-heavy " +
                       fmt("%+.1f%%", bd_heavy) + ", decode on/off " + fmt("%.2f", row.decode_seconds_on) + "/" +
                       fmt("%.2f s", row.decode_seconds_off);
    note(line);
    if (toggle == "context") {
      const bool slower = row.decode_seconds_on > 1.05 * row.decode_seconds_off;
      if (!(row.bd_rate_psnr < 0.0) || !slower) o.pass = false;
      o.detail += "context " + fmt("%+.1f%%", row.bd_rate_psnr) + " decode x" +
                  fmt("%.2f", row.decode_seconds_on / row.decode_seconds_off);
    } else {
      if (!(bd_heavy <= 0.0)) o.pass = false;
      o.detail += toggle + " " + fmt("%+.1f%%", bd_heavy) + "; ";
    }
  }
  write_ablation_csv(rows, dir / "ablation.csv");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path dir = argc > 1 ? fs::path(argv[1]) : fs::path("acceptance_cache");
  const RunConfig rc;
  const auto test = synthetic_test_set(64, 9, 5);

  run(1, "coding plan golden", coding_plan);
  run(2, "warping suite", warping);
  run(3, "flow resampling", flow_resampling);

  Trained trained;
  const auto t0 = Clock::now();
  try {
    trained = train_all(rc, dir);
  } catch (const std::exception& e) {
    std::printf("training failed: %s\n", e.what());
    return 1;
  }
  note("desk training ready after " + fmt("%.0f s", seconds_since(t0)));

  run(4, "temporal prediction oracle", [&] { return temporal_prediction(trained); });
  run(5, "mask fusion", [&] { return mask_fusion(trained); });
  run(6, "entropy model", entropy_model);
  run(7, "range coder", range_coder);
  EndToEnd e2e;
  run(8, "end-to-end codec", [&] { return end_to_end(trained, test, dir, e2e); });
  run(9, "BD-BR metric", bd_metric);
  run(10, "ablation harness", [&] { return ablation(trained, rc, test, dir); });

  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
