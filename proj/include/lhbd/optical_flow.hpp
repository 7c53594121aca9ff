#pragma once

#include <vector>

#include "lhbd/nn.hpp"
#include "lhbd/sequence_io.hpp"

namespace lhbd {

/// Dense displacement field on the grid of frame `source_grid`, pointing into
/// frame `points_to`: warped(x) = reference(x + flow(x)). Channel order (dx, dy),
/// units are full-resolution pixels. `vectors` is (1, 2, H, W).
struct FlowField {
  Tensor vectors;
  int source_grid = -1;
  int points_to = -1;

  [[nodiscard]] int height() const { return vectors.h(); }
  [[nodiscard]] int width() const { return vectors.w(); }
};

struct PyramidFlowConfig {
  int levels = 4;
  int hidden = 16;
  int kernel = 3;
  /// Convolutions per level network (the last one emits the 2-channel residual).
  int layers = 4;
};

/// Coarse-to-fine flow estimator. Each pyramid level owns a small network that
/// sees (warped reference, source, current flow) and predicts a flow residual.
class FlowEstimator {
 public:
  FlowEstimator() = default;
  FlowEstimator(const PyramidFlowConfig& cfg, Rng& rng);

  /// source, reference: (N, 3, H, W) in [0, 1]. Returns (N, 2, H, W).
  [[nodiscard]] ag::Var forward(const ag::Var& source, const ag::Var& reference) const;
  void collect(const std::string& prefix, nn::ParamList& out);
  [[nodiscard]] const PyramidFlowConfig& config() const { return cfg_; }

 private:
  PyramidFlowConfig cfg_;
  std::vector<std::vector<nn::Conv2d>> nets_;  // index 0 = coarsest level
};

/// 2x bilinear upsampling of a flow field with vector magnitudes doubled.
ag::Var upsample_flow2(const ag::Var& flow);

/// Inference wrappers on frames.
FlowField estimate_flow(const FlowEstimator& net, const Frame& source, const Frame& reference,
                        int source_index = -1, int reference_index = -1);
Frame backward_warp(const Frame& reference, const FlowField& flow);

}  // namespace lhbd
