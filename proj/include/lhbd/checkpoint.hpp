#pragma once

#include <filesystem>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "lhbd/codec_pipeline.hpp"

namespace lhbd {

/// Versioned weight container: JSON metadata plus named tensors.
struct Checkpoint {
  static constexpr std::uint8_t kVersion = 1;

  nlohmann::json meta = nlohmann::json::object();
  std::map<std::string, Tensor> tensors;
};

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path);
/// Throws DataError on a missing, truncated or corrupt file.
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Copies parameter values into a checkpoint.
void store_params(const nn::ParamList& params, Checkpoint& ck);
/// Loads parameters by name. Strict mode requires every parameter to be
/// present with the right shape; otherwise absent names keep their values.
/// Returns the number of parameters loaded.
int restore_params(const Checkpoint& ck, const nn::ParamList& params, bool strict);

nlohmann::json to_json(const CoderConfig& c);
nlohmann::json to_json(const BFrameConfig& c);
/// Unknown keys are rejected with ConfigError; absent keys keep defaults.
CoderConfig coder_config_from_json(const nlohmann::json& j, CoderConfig base = {});
BFrameConfig bframe_config_from_json(const nlohmann::json& j, BFrameConfig base = BFrameConfig::desk());

struct KeyframeCheckpoint {
  TransformCoder coder;
  double lambda = 0.0;
  int lambda_id = 0;
};

struct BFrameCheckpoint {
  BFrameModel model;
  double lambda = 0.0;
  int lambda_id = 0;
};

/// `extra` is merged into the metadata (training config, lambda grids, ...).
void save_keyframe(TransformCoder& coder, double lambda, int lambda_id, const std::filesystem::path& path,
                   const nlohmann::json& extra = nlohmann::json::object());
KeyframeCheckpoint load_keyframe(const std::filesystem::path& path);
void save_bframe(BFrameModel& model, double lambda, int lambda_id, const std::filesystem::path& path,
                 const nlohmann::json& extra = nlohmann::json::object());
/// `override_cfg` rebuilds the model with other flags and loads every weight
/// that still applies (used to start ablation arms from a trained model).
BFrameCheckpoint load_bframe(const std::filesystem::path& path, const BFrameConfig* override_cfg = nullptr);

/// Both checkpoints of one rate point; their lambda indices must agree.
CodecModels load_models(const std::filesystem::path& keyframe, const std::filesystem::path& bframe);

}  // namespace lhbd
