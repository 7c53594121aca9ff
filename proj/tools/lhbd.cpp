// Command-line front end: training, coding, evaluation and ablations.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include "lhbd/checkpoint.hpp"
#include "lhbd/errors.hpp"
#include "lhbd/experiments.hpp"
#include "lhbd/run_config.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lhbd;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

RunConfig load_config(const std::string& path) {
  RunConfig cfg = path.empty() ? RunConfig{} : RunConfig::load(path);
  cfg.device = resolve_device(cfg.device);
  return cfg;
}

std::ofstream open_log(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

json provenance(const RunConfig& cfg, const TrainConfig& t) {
  return json{{"run_config", cfg.to_json()},
              {"train", to_json(t)},
              {"lambda_grids", {{"keyframe", cfg.keyframe_lambdas}, {"bframe", cfg.bframe_lambdas}}},
              {"lambda_pairing", "index"}};
}

// Flags requested on the command line; each unset one is not checked.
struct RequestedFlags {
  std::optional<int> subsample;
  std::string prediction, mask, context;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--subsample", subsample, "Expected motion subsampling factor")->check(CLI::IsMember({1, 2, 4}));
    cmd->add_option("--temporal-prediction", prediction, "Expected prediction setting")->check(CLI::IsMember({"on", "off"}));
    cmd->add_option("--mask", mask, "Expected mask mode")->check(CLI::IsMember({"learned", "average"}));
    cmd->add_option("--context", context, "Expected context model setting")->check(CLI::IsMember({"on", "off"}));
  }

  void check(const BFrameConfig& c) const {
    std::string diff;
    if (subsample && *subsample != c.motion.subsample) diff += " subsample";
    if (!prediction.empty() && (prediction == "on") != c.motion.temporal_prediction) diff += " temporal_prediction";
    if (!mask.empty() && (mask == "learned") != (c.fusion == FusionMode::learned)) diff += " mask";
    if (!context.empty() && (context == "on") != c.motion.context_model) diff += " context";
    if (!diff.empty()) throw ConfigMismatchError("checkpoint was trained with other settings for:" + diff);
  }
};

VideoSequence load_input(const fs::path& input, int width, int height, int frames) {
  if (fs::is_directory(input)) return load_sequence(input, SequenceFormat::png_sequence);
  if (width <= 0 || height <= 0) throw ConfigError("raw input needs --width and --height");
  if (frames <= 0 && fs::exists(input)) {
    frames = static_cast<int>(fs::file_size(input) / (static_cast<std::uintmax_t>(width) * height * 3));
  }
  std::optional<RawLayout> layout = RawLayout{width, height, frames};
  return load_sequence(input, SequenceFormat::raw_rgb24, layout);
}

Bytes read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DataError("cannot open " + p.string());
  return Bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_file(const fs::path& p, const Bytes& b) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
  if (!out) throw DataError("cannot write " + p.string());
}

void write_text(const fs::path& p, const std::string& s) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p);
  out << s;
  if (!out) throw DataError("cannot write " + p.string());
}

std::vector<FrameLog> read_frame_logs(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw DataError("cannot open log " + p.string());
  std::vector<FrameLog> out;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) out.push_back(frame_log_from_json(line));
  }
  if (out.empty()) throw DataError(p.string() + " holds no frame entries");
  return out;
}

std::pair<std::string, std::string> split_named(const std::string& s) {
  const auto eq = s.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("expected name=value, got " + s);
  return {s.substr(0, eq), s.substr(eq + 1)};
}

// ---------------------------------------------------------------------------

int cmd_pretrain_keyframe(const std::string& config, int lambda_id, std::string out, std::string log,
                          const std::string& resume) {
  const RunConfig cfg = load_config(config);
  const TrainConfig t = cfg.keyframe_train_at(lambda_id);
  if (out.empty()) out = (fs::path(cfg.output_dir) / ("keyframe_l" + std::to_string(lambda_id) + ".lhck")).string();
  if (log.empty()) log = (fs::path(cfg.output_dir) / ("keyframe_l" + std::to_string(lambda_id) + ".jsonl")).string();
  Rng rng(t.seed);
  TransformCoder coder(cfg.keyframe, rng);
  if (!resume.empty()) coder = load_keyframe(resume).coder;
  ClipPool pool = cfg.make_pool();
  std::ofstream log_out = open_log(log);
  pretrain_keyframe(coder, pool, t, json_lines_sink(log_out));
  json extra = provenance(cfg, t);
  if (!resume.empty()) extra["resumed_from"] = resume;
  save_keyframe(coder, t.lambda, lambda_id, out, extra);
  std::cout << "wrote " << out << "\n";
  return kOk;
}

int cmd_train(const std::string& config, int lambda_id, const std::string& keyframe, const std::string& flow_init,
              std::string out, std::string log, const std::string& resume) {
  const RunConfig cfg = load_config(config);
  const TrainConfig t = cfg.bframe_train_at(lambda_id);
  if (t.endpoints == EndpointMode::decoded && keyframe.empty()) {
    throw ConfigError("decoded training endpoints need --keyframe");
  }
  if (out.empty()) out = (fs::path(cfg.output_dir) / ("bframe_l" + std::to_string(lambda_id) + ".lhck")).string();
  if (log.empty()) log = (fs::path(cfg.output_dir) / ("bframe_l" + std::to_string(lambda_id) + ".jsonl")).string();
  std::optional<KeyframeCheckpoint> key;
  if (!keyframe.empty()) {
    key = load_keyframe(keyframe);
    if (key->lambda_id != lambda_id) {
      throw ConfigMismatchError("keyframe checkpoint is for lambda index " + std::to_string(key->lambda_id));
    }
  }
  Rng rng(t.seed);
  BFrameModel model(cfg.bframe, rng);
  std::ofstream log_out = open_log(log);
  if (!resume.empty()) {
    model = load_bframe(resume, &cfg.bframe).model;
  } else if (!flow_init.empty()) {
    const Checkpoint ck = load_checkpoint(flow_init);
    nn::ParamList params;
    model.flow.collect("flow", params);
    restore_params(ck, params, true);
  } else if (cfg.flow_pretrain.iters > 0) {
    FlowPretrainConfig fc = cfg.flow_pretrain;
    fc.crop = t.crop;
    pretrain_flow(model.flow, fc);
  }
  ClipPool pool = cfg.make_pool();
  train_bidirectional(model, pool, t, key ? &key->coder : nullptr, json_lines_sink(log_out));
  json extra = provenance(cfg, t);
  if (!resume.empty()) extra["resumed_from"] = resume;
  if (!flow_init.empty()) extra["flow_init"] = flow_init;
  save_bframe(model, t.lambda, lambda_id, out, extra);
  std::cout << "wrote " << out << "\n";
  return kOk;
}

int cmd_encode(const std::string& input, int width, int height, int frames, const std::string& keyframe,
               const std::string& bframe, const std::string& out, std::string log, const std::string& recon, int gop,
               bool no_residual, const RequestedFlags& flags) {
  resolve_device("cpu");
  const CodecModels models = load_models(keyframe, bframe);
  flags.check(models.bframe.config());
  const VideoSequence seq = load_input(input, width, height, frames);
  EncodeOptions opt;
  opt.residual = !no_residual;
  const EncodeResult enc = encode_video(seq, gop, models, opt);
  write_file(out, write_bitstream(enc.stream));
  if (log.empty()) log = out + ".jsonl";
  std::ofstream log_out = open_log(log);
  for (const FrameLog& l : enc.logs) log_out << to_json_line(l) << "\n";
  write_text(out + ".config.json",
             json{{"input", input}, {"keyframe", keyframe}, {"bframe", bframe}, {"gop_size", gop},
                  {"residual", opt.residual}, {"bframe_config", to_json(models.bframe.config())}}
                 .dump(2));
  if (!recon.empty()) save_png_sequence(VideoSequence{enc.reconstructions, seq.frame_rate}, recon);
  const RDPoint p = summarize(enc.logs, fs::path(out).filename().string());
  std::printf("%d frames, %.4f bpp, %.3f dB, MS-SSIM %.5f\n", seq.size(), p.bpp, p.psnr, p.msssim);
  return kOk;
}

int cmd_decode(const std::string& input, const std::string& keyframe, const std::string& bframe,
               const std::string& out, const RequestedFlags& flags) {
  resolve_device("cpu");
  const CodecModels models = load_models(keyframe, bframe);
  flags.check(models.bframe.config());
  const Bitstream stream = read_bitstream(read_file(input));
  const VideoSequence seq = decode_video(stream, models);
  save_png_sequence(seq, out);
  std::printf("decoded %d frames into %s\n", seq.size(), out.c_str());
  return kOk;
}

int cmd_eval(const std::vector<std::string>& runs, const std::vector<std::string>& anchors, const std::string& out) {
  std::vector<RDCurve> curves, anchor_curves;
  std::vector<FrameLog> profile;
  for (const auto& r : runs) {
    auto [name, list] = split_named(r);
    RDCurve c;
    c.name = name;
    std::stringstream ss(list);
    for (std::string file; std::getline(ss, file, ',');) {
      const std::vector<FrameLog> logs = read_frame_logs(file);
      if (profile.empty()) profile = logs;
      c.points.push_back(summarize(logs, fs::path(file).stem().string()));
    }
    for (std::size_t i : c.sorted().monotonicity_violations()) {
      std::fprintf(stderr, "warning: %s quality drops at point %zu\n", name.c_str(), i);
    }
    curves.push_back(c.sorted());
  }
  for (const auto& a : anchors) {
    auto [name, file] = split_named(a);
    RDCurve c = read_anchor_csv(file);
    c.name = name;
    anchor_curves.push_back(c.sorted());
  }
  fs::create_directories(out);
  std::vector<RDCurve> all = curves;
  all.insert(all.end(), anchor_curves.begin(), anchor_curves.end());
  write_rd_csv(all, fs::path(out) / "rd.csv");
  write_text(fs::path(out) / "rd_psnr.svg", rd_plot_svg(all, Quality::psnr));
  write_text(fs::path(out) / "rd_msssim.svg", rd_plot_svg(all, Quality::msssim));
  if (!profile.empty()) {
    write_gop_profile_csv(profile, fs::path(out) / "gop_profile.csv");
    write_text(fs::path(out) / "gop_profile.svg", gop_profile_svg(profile));
  }
  if (!anchor_curves.empty()) {
    std::ofstream bd(fs::path(out) / "bd_rate.csv");
    bd << "test,anchor,quality,bd_rate_pchip,bd_rate_poly,fits_disagree\n";
    for (const auto& c : curves) {
      for (const auto& a : anchor_curves) {
        for (Quality q : {Quality::psnr, Quality::msssim}) {
          const BdResult r = bd_rate_both(c, a, q);
          bd << c.name << "," << a.name << "," << (q == Quality::psnr ? "psnr" : "msssim") << "," << r.pchip << ","
             << r.poly << "," << (r.disagree() ? 1 : 0) << "\n";
          std::printf("%s vs %s (%s): %.3f%% (poly %.3f%%)\n", c.name.c_str(), a.name.c_str(),
                      q == Quality::psnr ? "psnr" : "msssim", r.pchip, r.poly);
        }
      }
    }
  }
  write_text(fs::path(out) / "conventions.txt", metric_conventions());
  return kOk;
}

int cmd_ablate(const std::string& matrix_path, const std::string& out) {
  std::ifstream in(matrix_path);
  if (!in) throw ConfigError("cannot read " + matrix_path);
  json m;
  try {
    m = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(matrix_path + ": " + e.what());
  }
  int gop = 8, size = 64, frames = 9;
  bool heavy_only = false;
  std::string test_set = "synthetic";
  json arms;
  for (const auto& [k, v] : m.items()) {
    if (k == "gop_size") {
      gop = v.get<int>();
    } else if (k == "size") {
      size = v.get<int>();
    } else if (k == "frames") {
      frames = v.get<int>();
    } else if (k == "motion_heavy_only") {
      heavy_only = v.get<bool>();
    } else if (k == "test_set") {
      test_set = v.get<std::string>();
    } else if (k == "arms") {
      arms = v;
    } else {
      throw ConfigError("ablation matrix: unknown key " + k);
    }
  }
  if (!arms.is_object() || arms.empty()) throw ConfigError("ablation matrix needs an 'arms' object");
  std::vector<TestSequence> set = test_set == "synthetic" ? synthetic_test_set(size, frames, 1) : directory_test_set(test_set);
  if (heavy_only) std::erase_if(set, [](const TestSequence& t) { return !t.motion_heavy; });

  std::vector<AblationRow> rows;
  for (const auto& [toggle, cell] : arms.items()) {
    if (std::find(kAblationToggles.begin(), kAblationToggles.end(), toggle) == kAblationToggles.end()) {
      throw ConfigError("unknown ablation toggle " + toggle);
    }
    std::map<std::string, std::vector<PointResult>> results;
    for (const char* side : {"on", "off"}) {
      if (!cell.contains(side)) throw DataError("ablation cell " + toggle + " lacks the '" + side + "' arm");
      for (const auto& pt : cell.at(side)) {
        const std::string k = pt.at("keyframe").get<std::string>(), b = pt.at("bframe").get<std::string>();
        if (!fs::exists(k) || !fs::exists(b)) throw DataError("missing checkpoint for " + toggle + "/" + side);
        results[side].push_back(evaluate_models(load_models(k, b), set, gop, fs::path(b).stem().string()));
      }
    }
    rows.push_back(compare_arms(toggle, results["on"], results["off"]));
    const AblationRow& r = rows.back();
    std::printf("%-20s BD-rate %+.2f%% (poly %+.2f%%), decode %.2fs on / %.2fs off\n", r.toggle.c_str(),
                r.bd_rate_psnr, r.bd_rate_poly, r.decode_seconds_on, r.decode_seconds_off);
  }
  fs::create_directories(out);
  write_ablation_csv(rows, fs::path(out) / "ablation.csv");
  write_text(fs::path(out) / "matrix.json", m.dump(2));
  return kOk;
}

int cmd_grad_check(const std::string& module, double scale, std::uint64_t seed) {
  const auto r = grad_check(module, scale, seed);
  json j = json::object();
  bool ok = true;
  for (const auto& [name, err] : r) {
    j[name] = err;
    ok = ok && err < (name == "msssim" ? 1e-2 : 1e-3);
  }
  std::cout << j.dump(2) << "\n";
  return ok ? kOk : kNumerical;
}

int cmd_synth(const std::string& out, const std::string& kind, int frames, int height, int width, std::uint64_t seed) {
  SyntheticSpec s;
  if (kind == "cv") {
    s.kind = SyntheticKind::constant_velocity;
  } else if (kind == "occlusion") {
    s.kind = SyntheticKind::occlusion;
  } else {
    s.kind = SyntheticKind::static_scene;
  }
  s.frames = frames;
  s.height = height;
  s.width = width;
  s.velocity = {1.0, 0.5};
  s.seed = seed;
  save_png_sequence(synth_sequence(s), out);
  return kOk;
}

int cmd_dump_plan(int gop, int frames) {
  const CodingPlan plan = build_plan(gop);
  std::cout << format_plan(plan);
  if (frames > 0) {
    const SequenceSchedule s = schedule_sequence(frames, gop);
    std::cout << "coding order:";
    for (int t : s.coding_order) std::cout << " " << t;
    std::cout << "\n";
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learned hierarchical bi-directional video codec"};
  app.require_subcommand(0, 1);
  bool dump_plan = false;
  app.add_flag("--dump-plan", dump_plan, "Print the GOP-8 coding schedule and exit");

  std::string config, out, log, resume, keyframe, bframe, flow_init, input, recon, module = "all", matrix;
  int lambda_id = 0, width = 0, height = 0, frames = 0, gop = 8;
  bool no_residual = false;
  double scale = 1.0;
  std::uint64_t seed = 0;
  std::vector<std::string> runs, anchors;
  RequestedFlags enc_flags, dec_flags;

  auto* pk = app.add_subcommand("pretrain-keyframe", "Train the keyframe coder at one lambda");
  pk->add_option("--config", config, "Run configuration (JSON)");
  pk->add_option("--lambda-id", lambda_id, "Index into the keyframe lambda grid");
  pk->add_option("--out", out, "Checkpoint path");
  pk->add_option("--log", log, "Training log (JSON lines)");
  pk->add_option("--resume", resume, "Start from this checkpoint");

  auto* tr = app.add_subcommand("train", "Train the B-frame model at one lambda");
  tr->add_option("--config", config, "Run configuration (JSON)");
  tr->add_option("--lambda-id", lambda_id, "Index into the B-frame lambda grid");
  tr->add_option("--keyframe", keyframe, "Frozen keyframe checkpoint of the paired lambda");
  tr->add_option("--flow-init", flow_init, "Checkpoint to take flow estimator weights from");
  tr->add_option("--out", out, "Checkpoint path");
  tr->add_option("--log", log, "Training log (JSON lines)");
  tr->add_option("--resume", resume, "Start from this B-frame checkpoint");

  auto* en = app.add_subcommand("encode", "Encode a sequence");
  en->add_option("--input", input, "PNG directory or raw RGB24 file")->required();
  en->add_option("--width", width, "Raw input width");
  en->add_option("--height", height, "Raw input height");
  en->add_option("--frames", frames, "Raw input frame count (0: whole file)");
  en->add_option("--keyframe", keyframe, "Keyframe checkpoint")->required();
  en->add_option("--bframe", bframe, "B-frame checkpoint")->required();
  en->add_option("--out", out, "Bitstream path")->required();
  en->add_option("--log", log, "Per-frame log (default: <out>.jsonl)");
  en->add_option("--recon", recon, "Write encoder-side reconstructions here");
  en->add_option("--gop", gop, "GOP size");
  en->add_flag("--no-residual", no_residual, "Diagnostic: skip residual coding");
  enc_flags.add_to(en);

  auto* de = app.add_subcommand("decode", "Decode a bitstream to PNG frames");
  de->add_option("--input", input, "Bitstream path")->required();
  de->add_option("--keyframe", keyframe, "Keyframe checkpoint")->required();
  de->add_option("--bframe", bframe, "B-frame checkpoint")->required();
  de->add_option("--out", out, "Output directory")->required();
  dec_flags.add_to(de);

  auto* ev = app.add_subcommand("eval", "R-D curves, BD rates and GOP profiles from encode logs");
  ev->add_option("--run", runs, "name=log1.jsonl,log2.jsonl,...")->required();
  ev->add_option("--anchor", anchors, "name=anchor.csv");
  ev->add_option("--out", out, "Report directory")->required();

  auto* ab = app.add_subcommand("ablate", "Paired on/off runs for each toggle");
  ab->add_option("--matrix", matrix, "Ablation matrix (JSON)")->required();
  ab->add_option("--out", out, "Report directory")->required();

  auto* gc = app.add_subcommand("grad-check", "Finite-difference gradient checks");
  gc->add_option("--module", module, "warp, flow, resample, mask, keyframe_coder, bframe_loss, rate, msssim or all");
  gc->add_option("--scale", scale, "Input scale");
  gc->add_option("--seed", seed, "Seed");

  auto* dp = app.add_subcommand("dump-plan", "Print the coding schedule");
  dp->add_option("--gop", gop, "GOP size");
  dp->add_option("--frames", frames, "Also print the coding order of a sequence of this length");

  std::string kind = "cv";
  auto* sy = app.add_subcommand("synth", "Write a synthetic test sequence as PNG frames");
  sy->add_option("--out", out, "Output directory")->required();
  sy->add_option("--kind", kind, "Motion kind")->check(CLI::IsMember({"cv", "occlusion", "static"}));
  sy->add_option("--frames", frames, "Frame count")->default_val(9);
  sy->add_option("--height", height, "Height")->default_val(64);
  sy->add_option("--width", width, "Width")->default_val(64);
  sy->add_option("--seed", seed, "Seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (dump_plan) return cmd_dump_plan(8, 0);
    if (*pk) return cmd_pretrain_keyframe(config, lambda_id, out, log, resume);
    if (*tr) return cmd_train(config, lambda_id, keyframe, flow_init, out, log, resume);
    if (*en) return cmd_encode(input, width, height, frames, keyframe, bframe, out, log, recon, gop, no_residual, enc_flags);
    if (*de) return cmd_decode(input, keyframe, bframe, out, dec_flags);
    if (*ev) return cmd_eval(runs, anchors, out);
    if (*ab) return cmd_ablate(matrix, out);
    if (*gc) return cmd_grad_check(module, scale, seed);
    if (*dp) return cmd_dump_plan(gop, frames);
    if (*sy) return cmd_synth(out, kind, frames, height, width, seed);
    std::cerr << app.help();
    return kUsage;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
}
