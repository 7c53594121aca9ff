#include "lhbd/run_config.hpp"

#include <cstdlib>
#include <fstream>

#include "lhbd/checkpoint.hpp"
#include "lhbd/errors.hpp"

namespace lhbd {

using nlohmann::json;

TrainConfig RunConfig::desk_keyframe_train() {
  TrainConfig t;
  t.lr_init = 1e-3;
  t.max_iters = 2000;
  t.plateau_patience = 300;
  return t;
}

TrainConfig RunConfig::desk_bframe_train() {
  TrainConfig t;
  t.lr_init = 1e-4;
  t.max_iters = 800;
  t.plateau_patience = 200;
  return t;
}

json RunConfig::to_json() const {
  json flow{{"iters", flow_pretrain.iters},
            {"batch_size", flow_pretrain.batch_size},
            {"crop", flow_pretrain.crop},
            {"lr", flow_pretrain.lr},
            {"seed", flow_pretrain.seed}};
  return json{{"model", {{"keyframe", lhbd::to_json(keyframe)}, {"bframe", lhbd::to_json(bframe)}}},
              {"lambda_grids", {{"keyframe", keyframe_lambdas}, {"bframe", bframe_lambdas}}},
              {"gop_size", gop_size},
              {"keyframe_train", lhbd::to_json(keyframe_train)},
              {"train", lhbd::to_json(train)},
              {"flow_pretrain", flow},
              {"dataset", dataset},
              {"synthetic_clips", synthetic_clips},
              {"output_dir", output_dir},
              {"seed", seed},
              {"precision", precision},
              {"device", device}};
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c;
  std::vector<std::string> errors;
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  auto attempt = [&](const std::string& key, auto&& fn) {
    try {
      fn(j.at(key));
    } catch (const ConfigError& e) {
      errors.push_back(e.what());
    } catch (const json::exception& e) {
      errors.push_back(key + ": " + e.what());
    }
  };
  for (const auto& [key, value] : j.items()) {
    if (key == "model") {
      attempt(key, [&](const json& v) {
        for (const auto& [k, m] : v.items()) {
          if (k == "keyframe") {
            c.keyframe = coder_config_from_json(m, c.keyframe);
          } else if (k == "bframe") {
            c.bframe = bframe_config_from_json(m, c.bframe);
          } else {
            throw ConfigError("model: unknown key " + k);
          }
        }
      });
    } else if (key == "lambda_grids") {
      attempt(key, [&](const json& v) {
        for (const auto& [k, g] : v.items()) {
          if (k == "keyframe") {
            c.keyframe_lambdas = g.get<std::vector<double>>();
          } else if (k == "bframe") {
            c.bframe_lambdas = g.get<std::vector<double>>();
          } else {
            throw ConfigError("lambda_grids: unknown key " + k);
          }
        }
      });
    } else if (key == "gop_size") {
      attempt(key, [&](const json& v) { c.gop_size = v.get<int>(); });
    } else if (key == "keyframe_train") {
      attempt(key, [&](const json& v) { c.keyframe_train = train_config_from_json(v, c.keyframe_train); });
    } else if (key == "train") {
      attempt(key, [&](const json& v) { c.train = train_config_from_json(v, c.train); });
    } else if (key == "flow_pretrain") {
      attempt(key, [&](const json& v) {
        for (const auto& [k, x] : v.items()) {
          if (k == "iters") {
            c.flow_pretrain.iters = x.get<int>();
          } else if (k == "batch_size") {
            c.flow_pretrain.batch_size = x.get<int>();
          } else if (k == "crop") {
            c.flow_pretrain.crop = x.get<int>();
          } else if (k == "lr") {
            c.flow_pretrain.lr = x.get<double>();
          } else if (k == "seed") {
            c.flow_pretrain.seed = x.get<std::uint64_t>();
          } else {
            throw ConfigError("flow_pretrain: unknown key " + k);
          }
        }
      });
    } else if (key == "dataset") {
      attempt(key, [&](const json& v) { c.dataset = v.get<std::string>(); });
    } else if (key == "synthetic_clips") {
      attempt(key, [&](const json& v) { c.synthetic_clips = v.get<int>(); });
    } else if (key == "output_dir") {
      attempt(key, [&](const json& v) { c.output_dir = v.get<std::string>(); });
    } else if (key == "seed") {
      attempt(key, [&](const json& v) { c.seed = v.get<std::uint64_t>(); });
    } else if (key == "precision") {
      attempt(key, [&](const json& v) { c.precision = v.get<std::string>(); });
    } else if (key == "device") {
      attempt(key, [&](const json& v) { c.device = v.get<std::string>(); });
    } else {
      errors.push_back("unknown key " + key);
    }
  }
  try {
    c.validate();
  } catch (const ConfigError& e) {
    errors.push_back(e.what());
  }
  if (!errors.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& e : errors) msg += "\n  - " + e;
    throw ConfigError(msg);
  }
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return from_json(j);
}

void RunConfig::validate() const {
  std::vector<std::string> bad;
  auto check_grid = [&](const std::vector<double>& g, const char* name) {
    if (g.empty()) bad.push_back(std::string(name) + " lambda grid is empty");
    for (double v : g) {
      if (!(v > 0.0)) bad.push_back(std::string(name) + " lambda grid has a non-positive entry");
    }
  };
  check_grid(keyframe_lambdas, "keyframe");
  check_grid(bframe_lambdas, "bframe");
  if (keyframe_lambdas.size() != bframe_lambdas.size()) bad.push_back("lambda grids differ in length");
  if (gop_size < 2 || (gop_size & (gop_size - 1)) != 0) bad.push_back("gop_size must be a power of two >= 2");
  if (dataset != "synthetic" && !std::filesystem::is_directory(dataset)) {
    bad.push_back("dataset directory does not exist: " + dataset);
  }
  if (synthetic_clips < 1) bad.push_back("synthetic_clips must be >= 1");
  if (output_dir.empty()) bad.push_back("output_dir is empty");
  if (precision != "double") bad.push_back("precision must be double");
  if (device != "cpu") bad.push_back("device must be cpu");
  if (flow_pretrain.iters < 0 || flow_pretrain.batch_size < 1 || !(flow_pretrain.lr > 0.0)) {
    bad.push_back("flow_pretrain needs iters >= 0, batch_size >= 1, lr > 0");
  }
  if (!bad.empty()) {
    std::string msg;
    for (std::size_t i = 0; i < bad.size(); ++i) msg += (i ? "; " : "") + bad[i];
    throw ConfigError(msg);
  }
}

ClipPool RunConfig::make_pool() const {
  if (dataset == "synthetic") return ClipPool::synthetic(synthetic_clips, train.crop, seed + 11);
  return ClipPool::from_directory(dataset);
}

namespace {

void require_index(int id, std::size_t n) {
  if (id < 0 || static_cast<std::size_t>(id) >= n) {
    throw ConfigError("lambda index " + std::to_string(id) + " outside the grid of " + std::to_string(n));
  }
}

}  // namespace

TrainConfig RunConfig::keyframe_train_at(int lambda_id) const {
  require_index(lambda_id, keyframe_lambdas.size());
  TrainConfig t = keyframe_train;
  t.lambda = keyframe_lambdas[static_cast<std::size_t>(lambda_id)];
  t.seed = Rng::splitmix(seed * 31 + static_cast<std::uint64_t>(lambda_id) + 1);
  return t;
}

TrainConfig RunConfig::bframe_train_at(int lambda_id) const {
  require_index(lambda_id, bframe_lambdas.size());
  TrainConfig t = train;
  t.lambda = bframe_lambdas[static_cast<std::size_t>(lambda_id)];
  t.seed = Rng::splitmix(seed * 37 + static_cast<std::uint64_t>(lambda_id) + 101);
  return t;
}

std::string resolve_device(const std::string& configured) {
  const char* env = std::getenv("LHBD_DEVICE");
  const std::string d = env && *env ? env : configured;
  if (d != "cpu") throw ConfigError("device '" + d + "' is not available; only cpu is supported");
  return d;
}

}  // namespace lhbd
