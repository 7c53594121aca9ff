#include "lhbd/gop_planner.hpp"

#include <map>
#include <set>
#include <sstream>

#include "lhbd/errors.hpp"

namespace lhbd {

const char* to_string(FlowDirection d) {
  return d == FlowDirection::past_to_future ? "past_to_future" : "future_to_past";
}

namespace {
bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }
}  // namespace

CodingPlan build_plan(int gop_size) {
  if (gop_size < 2 || !is_power_of_two(gop_size)) {
    throw ConfigError("GOP size must be a power of two >= 2, got " + std::to_string(gop_size));
  }
  CodingPlan plan;
  plan.gop_size = gop_size;
  plan.keyframes = {0, gop_size};
  while ((1 << plan.levels) < gop_size) ++plan.levels;

  // Intervals of the current level, left to right, each tagged with the
  // endpoint that was the parent's target (or -1 at level 1).
  struct Interval {
    int lo, hi, parent;
  };
  std::vector<Interval> current{{0, gop_size, -1}};
  for (int level = 1; level <= plan.levels; ++level) {
    std::vector<Interval> next;
    for (const auto& iv : current) {
      CodingStep step{(iv.lo + iv.hi) / 2, iv.lo, iv.hi, level, std::nullopt};
      if (iv.parent == iv.hi) {
        step.inherited_flow = InheritedFlow{FlowDirection::future_to_past, iv.hi};
      } else if (iv.parent == iv.lo) {
        step.inherited_flow = InheritedFlow{FlowDirection::past_to_future, iv.lo};
      }
      plan.steps.push_back(step);
      next.push_back({iv.lo, step.target, step.target});
      next.push_back({step.target, iv.hi, step.target});
    }
    current = std::move(next);
  }
  return plan;
}

std::vector<std::string> validate_plan(const CodingPlan& plan) {
  std::vector<std::string> v;
  auto step_name = [](const CodingStep& s) {
    return "step (" + std::to_string(s.target) + "," + std::to_string(s.past_ref) + "," +
           std::to_string(s.future_ref) + ",L" + std::to_string(s.level) + ")";
  };
  if (plan.gop_size < 2 || !is_power_of_two(plan.gop_size)) {
    v.push_back("gop_size " + std::to_string(plan.gop_size) + " is not a power of two >= 2");
    return v;
  }
  if (plan.keyframes[0] != 0 || plan.keyframes[1] != plan.gop_size) {
    v.push_back("keyframes must be {0, gop_size}");
  }
  if (static_cast<int>(plan.steps.size()) != plan.gop_size - 1) {
    v.push_back("expected " + std::to_string(plan.gop_size - 1) + " steps, found " +
                std::to_string(plan.steps.size()));
  }
  std::set<int> decoded{plan.keyframes[0], plan.keyframes[1]};
  std::map<int, int> target_count;
  for (const auto& s : plan.steps) {
    const std::string name = step_name(s);
    ++target_count[s.target];
    if (!(s.past_ref < s.target && s.target < s.future_ref)) {
      v.push_back(name + ": references do not bracket the target");
    }
    if (2 * s.target != s.past_ref + s.future_ref) v.push_back(name + ": target is not the midpoint");
    if (s.level < 1 || s.level > plan.levels) {
      v.push_back(name + ": level outside [1, " + std::to_string(plan.levels) + "]");
    } else if (s.future_ref - s.past_ref != plan.gop_size >> (s.level - 1)) {
      v.push_back(name + ": reference distance does not match level");
    }
    if (!decoded.count(s.past_ref)) v.push_back(name + ": decode-before-use, past reference not yet decoded");
    if (!decoded.count(s.future_ref)) v.push_back(name + ": decode-before-use, future reference not yet decoded");
    if (s.level == 1 && s.inherited_flow) v.push_back(name + ": level-1 step must not inherit a flow");
    if (s.inherited_flow) {
      const auto& inh = *s.inherited_flow;
      const bool ok = (inh.direction == FlowDirection::future_to_past && inh.source_target == s.future_ref) ||
                      (inh.direction == FlowDirection::past_to_future && inh.source_target == s.past_ref);
      if (!ok) v.push_back(name + ": inherited flow does not connect the references");
      if (inh.source_target == plan.keyframes[0] || inh.source_target == plan.keyframes[1]) {
        v.push_back(name + ": inherited flow source is a keyframe (no decoded flow exists)");
      }
    }
    decoded.insert(s.target);
  }
  for (int t = 1; t < plan.gop_size; ++t) {
    const int count = target_count.count(t) ? target_count[t] : 0;
    if (count != 1) {
      v.push_back("multiplicity: frame " + std::to_string(t) + " is a target " +
                  std::to_string(count) + " times");
    }
  }
  for (const auto& [t, count] : target_count) {
    if (t <= 0 || t >= plan.gop_size) v.push_back("target " + std::to_string(t) + " outside the GOP interior");
  }
  return v;
}

std::string format_plan(const CodingPlan& plan) {
  std::ostringstream out;
  out << "gop_size " << plan.gop_size << "  levels " << plan.levels << "  keyframes {"
      << plan.keyframes[0] << "," << plan.keyframes[1] << "}\n";
  int order = 0;
  for (const auto& s : plan.steps) {
    out << "  #" << order++ << "  target " << s.target << "  refs (" << s.past_ref << ","
        << s.future_ref << ")  level " << s.level << "  inherit ";
    if (s.inherited_flow) {
      out << to_string(s.inherited_flow->direction) << " from " << s.inherited_flow->source_target;
    } else {
      out << "none";
    }
    out << "\n";
  }
  return out.str();
}

SequenceSchedule schedule_sequence(int frame_count, int gop_size) {
  if (frame_count < 1) throw ConfigError("sequence needs at least one frame");
  build_plan(gop_size);  // validates gop_size
  SequenceSchedule sched;
  sched.frame_count = frame_count;
  sched.gop_size = gop_size;
  sched.keyframes.push_back(0);
  sched.coding_order.push_back(0);
  int last = 0;
  while (last < frame_count - 1) {
    const int remaining = frame_count - 1 - last;
    int g = gop_size;
    while (g > remaining) g /= 2;
    if (g < 2) {
      ++last;
      sched.keyframes.push_back(last);
      sched.coding_order.push_back(last);
      continue;
    }
    GopInstance gop{last, build_plan(g)};
    sched.keyframes.push_back(last + g);
    sched.coding_order.push_back(last + g);
    for (const auto& s : gop.plan.steps) sched.coding_order.push_back(last + s.target);
    sched.gops.push_back(std::move(gop));
    last += g;
  }
  return sched;
}

}  // namespace lhbd
