#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lhbd/trainer.hpp"

namespace lhbd {

/// Everything a command needs, read from one JSON file. Unknown keys are
/// errors, and every problem found is reported in a single ConfigError.
struct RunConfig {
  CoderConfig keyframe = desk_keyframe_config();
  BFrameConfig bframe = BFrameConfig::desk();
  std::vector<double> keyframe_lambdas{kKeyframeLambdas.begin(), kKeyframeLambdas.end()};
  std::vector<double> bframe_lambdas{kBFrameLambdas.begin(), kBFrameLambdas.end()};
  int gop_size = 8;
  TrainConfig keyframe_train = desk_keyframe_train();
  TrainConfig train = desk_bframe_train();
  FlowPretrainConfig flow_pretrain;
  /// "synthetic" or a directory of 7-frame PNG clips.
  std::string dataset = "synthetic";
  int synthetic_clips = 64;
  std::string output_dir = "runs";
  std::uint64_t seed = 0;
  std::string precision = "double";
  std::string device = "cpu";

  static TrainConfig desk_keyframe_train();
  static TrainConfig desk_bframe_train();

  [[nodiscard]] nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::filesystem::path& path);
  /// Throws one ConfigError listing every violation.
  void validate() const;

  [[nodiscard]] ClipPool make_pool() const;
  /// Training config of one grid entry (lambda and seed filled in).
  [[nodiscard]] TrainConfig keyframe_train_at(int lambda_id) const;
  [[nodiscard]] TrainConfig bframe_train_at(int lambda_id) const;
};

/// Device actually used: LHBD_DEVICE overrides the configured value. Only
/// "cpu" exists; anything else is a ConfigError.
std::string resolve_device(const std::string& configured);

}  // namespace lhbd
