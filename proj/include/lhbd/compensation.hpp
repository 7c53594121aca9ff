#pragma once

#include "lhbd/nn.hpp"
#include "lhbd/sequence_io.hpp"

namespace lhbd {

enum class FusionMode { learned, average };

struct MaskNetConfig {
  int width = 16;  // channels at full resolution; doubled per level
  int depth = 3;   // resolution levels
};

/// U-shaped mask estimator over the 6-channel stack (warped past, warped
/// future); single-channel sigmoid output. The output layer starts at zero, so
/// an untrained net yields M = 0.5 (plain averaging).
class MaskNet {
 public:
  MaskNet() = default;
  MaskNet(const MaskNetConfig& cfg, Rng& rng);

  /// Inputs (N, 3, H, W); returns (N, 1, H, W) in [0, 1].
  [[nodiscard]] ag::Var forward(const ag::Var& warped_past, const ag::Var& warped_future) const;
  void collect(const std::string& prefix, nn::ParamList& out);
  [[nodiscard]] const MaskNetConfig& config() const { return cfg_; }

 private:
  MaskNetConfig cfg_;
  std::vector<std::array<nn::Conv2d, 2>> down_;  // per level
  std::vector<std::array<nn::Conv2d, 2>> up_;    // per level except the coarsest
  nn::Conv2d head_;
};

/// Eq. (1): M * past + (1 - M) * future, M broadcast over color channels.
ag::Var fuse(const ag::Var& warped_past, const ag::Var& warped_future, const ag::Var& mask);

/// Inference-side fusion on plain tensors; the result is clamped into
/// [min, max] of the two inputs per element so convexity holds exactly.
Tensor fuse(const Tensor& warped_past, const Tensor& warped_future, const Tensor& mask);
Frame fuse(const Frame& warped_past, const Frame& warped_future, const Tensor& mask);

/// Constant mask of value v shaped (N, 1, H, W).
Tensor constant_mask(int n, int h, int w, double v);

/// Per-pixel hard selection of whichever warped frame is closer (summed
/// squared error over color) to the ground truth; ties give 0.5.
Tensor oracle_mask(const Frame& warped_past, const Frame& warped_future, const Frame& ground_truth);

}  // namespace lhbd
