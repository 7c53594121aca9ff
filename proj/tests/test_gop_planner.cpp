#include <gtest/gtest.h>

#include "lhbd/errors.hpp"
#include "lhbd/gop_planner.hpp"

namespace lhbd {
namespace {

using FD = FlowDirection;

TEST(BuildPlan, Gop8MatchesHierarchy) {
  const CodingPlan plan = build_plan(8);
  EXPECT_EQ(plan.levels, 3);
  EXPECT_EQ(plan.keyframes, (std::array<int, 2>{0, 8}));
  const std::vector<CodingStep> expected{
      {4, 0, 8, 1, std::nullopt},
      {2, 0, 4, 2, InheritedFlow{FD::future_to_past, 4}},
      {6, 4, 8, 2, InheritedFlow{FD::past_to_future, 4}},
      {1, 0, 2, 3, InheritedFlow{FD::future_to_past, 2}},
      {3, 2, 4, 3, InheritedFlow{FD::past_to_future, 2}},
      {5, 4, 6, 3, InheritedFlow{FD::future_to_past, 6}},
      {7, 6, 8, 3, InheritedFlow{FD::past_to_future, 6}},
  };
  EXPECT_EQ(plan.steps, expected);
  EXPECT_TRUE(validate_plan(plan).empty());
}

TEST(BuildPlan, SmallestGop) {
  const CodingPlan plan = build_plan(2);
  ASSERT_EQ(plan.steps.size(), 1u);
  EXPECT_EQ(plan.steps[0], (CodingStep{1, 0, 2, 1, std::nullopt}));
}

// Independent oracle: at level k the reference distance is g / 2^(k-1) and the
// targets are the midpoints of the 2^(k-1) equal intervals, left to right.
std::vector<std::array<int, 4>> enumerate_midpoints(int g) {
  std::vector<std::array<int, 4>> out;
  for (int k = 1; (g >> (k - 1)) >= 2; ++k) {
    const int d = g >> (k - 1);
    for (int lo = 0; lo < g; lo += d) out.push_back({lo + d / 2, lo, lo + d, k});
  }
  return out;
}

TEST(BuildPlan, MatchesBruteForceEnumeration) {
  for (int g : {2, 4, 8, 16, 32, 64}) {
    const CodingPlan plan = build_plan(g);
    const auto oracle = enumerate_midpoints(g);
    ASSERT_EQ(plan.steps.size(), oracle.size()) << g;
    for (std::size_t i = 0; i < oracle.size(); ++i) {
      const auto& s = plan.steps[i];
      EXPECT_EQ((std::array<int, 4>{s.target, s.past_ref, s.future_ref, s.level}), oracle[i]);
    }
    EXPECT_TRUE(validate_plan(plan).empty()) << g;
  }
  // Gop 4 spelled out.
  const auto p4 = build_plan(4);
  EXPECT_EQ(p4.steps[0], (CodingStep{2, 0, 4, 1, std::nullopt}));
  EXPECT_EQ(p4.steps[1], (CodingStep{1, 0, 2, 2, InheritedFlow{FD::future_to_past, 2}}));
  EXPECT_EQ(p4.steps[2], (CodingStep{3, 2, 4, 2, InheritedFlow{FD::past_to_future, 2}}));
}

TEST(BuildPlan, LevelCountsAndDistances) {
  for (int g : {2, 4, 8, 16, 32}) {
    const CodingPlan plan = build_plan(g);
    std::vector<int> per_level(static_cast<std::size_t>(plan.levels + 1), 0);
    for (const auto& s : plan.steps) {
      ++per_level[static_cast<std::size_t>(s.level)];
      EXPECT_EQ(s.future_ref - s.past_ref, g >> (s.level - 1));
      EXPECT_EQ(2 * s.target, s.past_ref + s.future_ref);
    }
    for (int k = 1; k <= plan.levels; ++k) EXPECT_EQ(per_level[static_cast<std::size_t>(k)], 1 << (k - 1));
  }
}

TEST(BuildPlan, RejectsBadSizes) {
  for (int g : {0, 1, 3, 6, 12, -8}) EXPECT_THROW(build_plan(g), ConfigError) << g;
}

TEST(ValidatePlan, ReportsUndecodedReference) {
  CodingPlan plan = build_plan(8);
  std::swap(plan.steps[0], plan.steps[1]);  // step 2 now uses frame 4 before it is coded
  const auto v = validate_plan(plan);
  ASSERT_FALSE(v.empty());
  bool found = false;
  for (const auto& msg : v) found = found || msg.find("decode-before-use") != std::string::npos;
  EXPECT_TRUE(found);
}

TEST(ValidatePlan, ReportsDuplicateTargetAndCollectsAll) {
  CodingPlan plan = build_plan(8);
  plan.steps[6] = plan.steps[5];  // 5 twice, 7 never
  plan.steps[0].inherited_flow = InheritedFlow{FD::future_to_past, 8};
  const auto v = validate_plan(plan);
  int multiplicity = 0, level1 = 0;
  for (const auto& msg : v) {
    multiplicity += msg.find("multiplicity") != std::string::npos;
    level1 += msg.find("level-1") != std::string::npos;
  }
  EXPECT_EQ(multiplicity, 2);  // frame 5 twice and frame 7 missing
  EXPECT_EQ(level1, 1);
}

TEST(ValidatePlan, SimulatedDecodeNeverReadsMissingFrames) {
  for (int g : {2, 4, 8, 16, 32, 64}) {
    const CodingPlan plan = build_plan(g);
    std::vector<bool> have(static_cast<std::size_t>(g + 1), false);
    have[0] = have[static_cast<std::size_t>(g)] = true;
    for (const auto& s : plan.steps) {
      ASSERT_TRUE(have[static_cast<std::size_t>(s.past_ref)]);
      ASSERT_TRUE(have[static_cast<std::size_t>(s.future_ref)]);
      if (s.inherited_flow) ASSERT_TRUE(have[static_cast<std::size_t>(s.inherited_flow->source_target)]);
      have[static_cast<std::size_t>(s.target)] = true;
    }
  }
}

TEST(Schedule, NineFramesOneGop) {
  const auto sched = schedule_sequence(9, 8);
  EXPECT_EQ(sched.coding_order, (std::vector<int>{0, 8, 4, 2, 6, 1, 3, 5, 7}));
  EXPECT_EQ(sched.keyframes, (std::vector<int>{0, 8}));
  ASSERT_EQ(sched.gops.size(), 1u);
}

TEST(Schedule, SharedBoundaryAndTail) {
  // 0..8 GOP 8, 8..16 GOP 8, then 16..18 GOP 2, then 19 as a keyframe.
  const auto sched = schedule_sequence(20, 8);
  EXPECT_EQ(sched.keyframes, (std::vector<int>{0, 8, 16, 18, 19}));
  ASSERT_EQ(sched.gops.size(), 3u);
  EXPECT_EQ(sched.gops[2].offset, 16);
  EXPECT_EQ(sched.gops[2].plan.gop_size, 2);
  std::vector<int> sorted = sched.coding_order;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 20; ++i) EXPECT_EQ(sorted[static_cast<std::size_t>(i)], i);
}

TEST(Schedule, SingleFrame) {
  const auto sched = schedule_sequence(1, 8);
  EXPECT_EQ(sched.coding_order, std::vector<int>{0});
  EXPECT_TRUE(sched.gops.empty());
}

TEST(FormatPlan, ListsEveryStep) {
  const std::string text = format_plan(build_plan(8));
  EXPECT_NE(text.find("target 4  refs (0,8)  level 1  inherit none"), std::string::npos);
  EXPECT_NE(text.find("target 6  refs (4,8)  level 2  inherit past_to_future from 4"), std::string::npos);
}

}  // namespace
}  // namespace lhbd
