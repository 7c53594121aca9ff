#include "lhbd/optical_flow.hpp"

#include "lhbd/errors.hpp"

namespace lhbd {

using ag::Var;

FlowEstimator::FlowEstimator(const PyramidFlowConfig& cfg, Rng& rng) : cfg_(cfg) {
  if (cfg.levels < 2) throw ConfigError("flow pyramid needs at least 2 levels");
  if (cfg.layers < 2 || cfg.hidden < 2) throw ConfigError("flow level network too small");
  for (int l = 0; l < cfg.levels; ++l) {
    std::vector<nn::Conv2d> net;
    int in = 8;
    for (int i = 0; i < cfg.layers; ++i) {
      const bool last = i + 1 == cfg.layers;
      const int out = last ? 2 : (i + 2 == cfg.layers ? cfg.hidden / 2 : cfg.hidden);
      net.emplace_back(in, out, cfg.kernel, 1, rng, last ? 0.1 : 1.0);
      in = out;
    }
    nets_.push_back(std::move(net));
  }
}

Var upsample_flow2(const Var& flow) { return ag::scale(ag::upsample_bilinear2(flow), 2.0); }

Var FlowEstimator::forward(const Var& source, const Var& reference) const {
  const Shape s = source.shape();
  if (!(s == reference.shape()) || s.c != 3) {
    throw std::invalid_argument("estimate_flow: frames " + s.str() + " and " +
                                reference.shape().str() + " do not match");
  }
  const int mult = 1 << (cfg_.levels - 1);
  const int ph = (s.h + mult - 1) / mult * mult, pw = (s.w + mult - 1) / mult * mult;

  // Pyramids, finest first; inputs centered around zero.
  std::vector<Var> src{ag::add_scalar(ag::pad_replicate(source, ph, pw), -0.5)};
  std::vector<Var> ref{ag::add_scalar(ag::pad_replicate(reference, ph, pw), -0.5)};
  for (int l = 1; l < cfg_.levels; ++l) {
    src.push_back(ag::avg_pool2(src.back()));
    ref.push_back(ag::avg_pool2(ref.back()));
  }

  Var flow;
  for (int l = 0; l < cfg_.levels; ++l) {
    const std::size_t scale_index = static_cast<std::size_t>(cfg_.levels - 1 - l);
    const Var& src_l = src[scale_index];
    const Var& ref_l = ref[scale_index];
    if (!flow.defined()) {
      flow = Var::constant(Tensor(Shape{s.n, 2, src_l.shape().h, src_l.shape().w}));
    } else {
      flow = upsample_flow2(flow);
    }
    Var h = ag::concat_channels({ag::warp(ref_l, flow), src_l, flow});
    const auto& net = nets_[static_cast<std::size_t>(l)];
    for (std::size_t i = 0; i < net.size(); ++i) {
      h = net[i].forward(h);
      if (i + 1 < net.size()) h = ag::leaky_relu(h, 0.1);
    }
    flow = ag::add(flow, h);
  }
  Var out = ag::crop(flow, s.h, s.w);
  if (!all_finite(out.value())) throw NumericalError("flow estimator produced non-finite values");
  return out;
}

void FlowEstimator::collect(const std::string& prefix, nn::ParamList& out) {
  for (std::size_t l = 0; l < nets_.size(); ++l)
    for (std::size_t i = 0; i < nets_[l].size(); ++i)
      nets_[l][i].collect(prefix + ".level" + std::to_string(l) + ".conv" + std::to_string(i), out);
}

FlowField estimate_flow(const FlowEstimator& net, const Frame& source, const Frame& reference,
                        int source_index, int reference_index) {
  if (source.height() != reference.height() || source.width() != reference.width()) {
    throw DataError("estimate_flow: frame dimensions differ");
  }
  ag::NoGradGuard guard;
  const Var f = net.forward(Var::constant(source.pixels()), Var::constant(reference.pixels()));
  return FlowField{f.value(), source_index, reference_index};
}

Frame backward_warp(const Frame& reference, const FlowField& flow) {
  if (flow.height() != reference.height() || flow.width() != reference.width()) {
    throw DataError("backward_warp: flow and frame dimensions differ");
  }
  return Frame::clamped(kernels::warp_forward(reference.pixels(), flow.vectors));
}

}  // namespace lhbd
