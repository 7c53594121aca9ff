#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace lhbd {

enum class FlowDirection { past_to_future, future_to_past };

[[nodiscard]] const char* to_string(FlowDirection d);

/// A reference-to-reference flow that was already decoded at the parent step.
/// `source_target` is the parent's target frame, which is one of this step's
/// references; the flow is defined on that frame's grid.
struct InheritedFlow {
  FlowDirection direction = FlowDirection::future_to_past;
  int source_target = 0;

  friend bool operator==(const InheritedFlow&, const InheritedFlow&) = default;
};

struct CodingStep {
  int target = 0;
  int past_ref = 0;
  int future_ref = 0;
  int level = 1;
  std::optional<InheritedFlow> inherited_flow;

  friend bool operator==(const CodingStep&, const CodingStep&) = default;
};

/// Hierarchical B-frame schedule for one GOP with intra-coded frames 0 and gop_size.
struct CodingPlan {
  int gop_size = 0;
  int levels = 0;
  std::array<int, 2> keyframes{};
  std::vector<CodingStep> steps;
};

/// Recursive bisection of [0, gop_size]; steps ordered level-major, then left to
/// right. Throws ConfigError unless gop_size is a power of two >= 2.
CodingPlan build_plan(int gop_size);

/// Every invariant violation of the plan (empty when valid).
std::vector<std::string> validate_plan(const CodingPlan& plan);

/// Human-readable listing, one step per line.
std::string format_plan(const CodingPlan& plan);

/// One GOP placed in a sequence: frame indices of the plan are offset.
struct GopInstance {
  int offset = 0;
  CodingPlan plan;
};

/// Whole-sequence schedule. Consecutive GOPs share their boundary keyframe,
/// which is coded once. A tail shorter than gop_size is covered by the
/// largest power-of-two GOPs that fit; a single leftover frame becomes a keyframe.
struct SequenceSchedule {
  int frame_count = 0;
  int gop_size = 0;
  std::vector<int> keyframes;
  std::vector<GopInstance> gops;
  /// Display indices in coding (and bitstream) order.
  std::vector<int> coding_order;
};

SequenceSchedule schedule_sequence(int frame_count, int gop_size);

}  // namespace lhbd
