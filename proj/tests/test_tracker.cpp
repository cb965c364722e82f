#include <gtest/gtest.h>

#include "test_support.hpp"

namespace lester {
namespace {

using testing::Rng;

Bitmap pixels(int w, int h, std::initializer_list<Point> pts) {
  Bitmap bm(w, h);
  for (Point p : pts) bm.at(p.x, p.y) = 1;
  return bm;
}

// Two side-by-side rectangles, labels 1 and 2, plus a square of label 3.
LabelMask three_regions(int shift = 0) {
  LabelMask m(24, 16);
  for (int y = 2; y < 10; ++y) {
    for (int x = 1 + shift; x < 7 + shift; ++x) m.at(x, y) = 1;
    for (int x = 9 + shift; x < 15 + shift; ++x) m.at(x, y) = 2;
  }
  for (int y = 11; y < 15; ++y)
    for (int x = 17; x < 21; ++x) m.at(x, y) = 3;
  return m;
}

LabelMask permute(const LabelMask& m, const std::array<LabelId, 256>& perm) {
  LabelMask out = m;
  for (auto& v : out.cells()) v = perm[v];
  return out;
}

std::array<LabelId, 256> random_permutation(Rng& rng, int labels) {
  std::array<LabelId, 256> perm{};
  for (int i = 0; i < 256; ++i) perm[static_cast<std::size_t>(i)] = static_cast<LabelId>(i);
  std::shuffle(perm.begin() + 1, perm.begin() + 1 + labels, rng);
  return perm;
}

// --- iou --------------------------------------------------------------------

TEST(Iou, Basics) {
  auto a = pixels(4, 2, {{0, 0}, {1, 0}});
  auto b = pixels(4, 2, {{1, 0}, {2, 0}});
  EXPECT_DOUBLE_EQ(iou(a, a), 1.0);
  EXPECT_DOUBLE_EQ(iou(a, pixels(4, 2, {{3, 1}})), 0.0);
  EXPECT_DOUBLE_EQ(iou(a, b), 1.0 / 3.0);
  EXPECT_THROW(iou(a, Bitmap(3, 2)), DimensionError);
}

TEST(Iou, MatchesPairCount) {
  Rng rng(2);
  for (int i = 0; i < 50; ++i) {
    auto a = testing::random_noise(rng, 9, 7, 0.4), b = testing::random_noise(rng, 9, 7, 0.4);
    int in = 0, un = 0;
    for (int y = 0; y < 7; ++y)
      for (int x = 0; x < 9; ++x) {
        in += a.at(x, y) && b.at(x, y);
        un += a.at(x, y) || b.at(x, y);
      }
    ASSERT_DOUBLE_EQ(iou(a, b), un ? double(in) / un : 0.0);
  }
}

// --- match_labels -----------------------------------------------------------

TEST(MatchLabels, SwappedLabels) {
  auto prev = three_regions();
  std::array<LabelId, 256> swap{};
  for (int i = 0; i < 256; ++i) swap[static_cast<std::size_t>(i)] = static_cast<LabelId>(i);
  swap[1] = 2;
  swap[2] = 1;
  auto m = match_labels(prev, permute(prev, swap), 0.3);
  EXPECT_EQ(m.mapping, (std::map<LabelId, LabelId>{{1, 2}, {2, 1}, {3, 3}}));
  EXPECT_TRUE(m.fresh.empty());
}

TEST(MatchLabels, SmallTranslationIsIdentity) {
  auto prev = three_regions(0), curr = three_regions(2);
  for (LabelId l : {1, 2}) ASSERT_GT(iou(select_label(prev, l), select_label(curr, l)), 0.3);
  auto m = match_labels(prev, curr, 0.3);
  EXPECT_EQ(m.mapping, (std::map<LabelId, LabelId>{{1, 1}, {2, 2}, {3, 3}}));
}

TEST(MatchLabels, NoOverlapGetsFreshId) {
  LabelMask prev(10, 10), curr(10, 10);
  prev.at(0, 0) = 1;
  curr.at(9, 9) = 1;
  auto m = match_labels(prev, curr, 0.3);
  EXPECT_EQ(m(1), 2);
  EXPECT_EQ(m.fresh, (std::set<LabelId>{2}));
}

TEST(MatchLabels, RejectsBadThreshold) {
  LabelMask a(2, 2);
  EXPECT_THROW(match_labels(a, a, 0.0), ValidationError);
  EXPECT_THROW(match_labels(a, a, 1.5), ValidationError);
  EXPECT_THROW(match_labels(a, LabelMask(3, 2), 0.3), DimensionError);
}

TEST(MatchLabels, BackgroundAlwaysZero) {
  auto m = match_labels(three_regions(), three_regions(), 0.3);
  EXPECT_EQ(m(0), 0);
}

// The mapping must not depend on how the incoming ids are numbered.
TEST(MatchLabels, InvariantUnderIncomingRenumbering) {
  Rng rng(8);
  for (int i = 0; i < 100; ++i) {
    LabelMask prev(16, 16), curr(16, 16);
    std::uniform_int_distribution<int> lab(0, 5);
    for (auto& v : prev.cells()) v = static_cast<LabelId>(lab(rng));
    for (auto& v : curr.cells()) v = static_cast<LabelId>(lab(rng));
    auto perm = random_permutation(rng, 5);
    auto base = match_labels(prev, curr, 0.1);
    auto permuted = match_labels(prev, permute(curr, perm), 0.1);
    ASSERT_EQ(apply_mapping(curr, base), apply_mapping(permute(curr, perm), permuted));
  }
}

// --- relabel_sequence ---------------------------------------------------------

TEST(RelabelSequence, StaticRegionsRandomPermutations) {
  Rng rng(12);
  FrameSequence seq;
  auto base = three_regions();
  seq.frames.push_back(base);
  for (int k = 1; k < 3; ++k) seq.frames.push_back(permute(base, random_permutation(rng, 3)));
  seq.frames[1] = permute(base, {0, 3, 1, 2});
  auto out = relabel_sequence(seq);
  for (const auto& f : out.frames) EXPECT_EQ(f, base);
}

TEST(RelabelSequence, SingleFrameUnchanged) {
  FrameSequence seq;
  seq.frames.push_back(three_regions());
  EXPECT_EQ(relabel_sequence(seq).frames, seq.frames);
}

TEST(RelabelSequence, NewObjectNeverReusesId) {
  // Label 2 vanishes in frame 1; in frame 2 a new object appears elsewhere
  // under incoming id 2. It must not get back canonical id 2.
  FrameSequence seq;
  LabelMask f0(20, 20), f1(20, 20), f2(20, 20);
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 5; ++x) {
      f0.at(x, y) = f1.at(x, y) = f2.at(x, y) = 1;
      f0.at(x + 7, y) = 2;
      f2.at(x + 14, y + 14) = 2;
    }
  seq.frames = {f0, f1, f2};
  auto r = track_sequence(seq);
  const LabelId fresh = r.sequence.frames[2].at(14, 14);
  EXPECT_NE(fresh, 1);
  EXPECT_NE(fresh, 2);
  EXPECT_TRUE(r.mappings[2].fresh.contains(fresh));
  EXPECT_EQ(r.origin.at(fresh), 2);
}

TEST(RelabelSequence, EmptyAndMismatched) {
  EXPECT_THROW(relabel_sequence(FrameSequence{}), SequenceError);
  FrameSequence seq;
  seq.frames = {LabelMask(4, 4), LabelMask(5, 4)};
  EXPECT_THROW(relabel_sequence(seq), DimensionError);
}

TEST(RelabelSequence, RepairsPermutationsOnMovingClip) {
  Rng rng(31);
  auto clip = testing::moving_square_clip(10);
  auto reference = relabel_sequence(clip);
  for (int trial = 0; trial < 20; ++trial) {
    FrameSequence scrambled = clip;
    for (auto& f : scrambled.frames) f = permute(f, random_permutation(rng, 2));
    scrambled.frames[0] = clip.frames[0];
    ASSERT_EQ(relabel_sequence(scrambled).frames, reference.frames);
  }
}

}  // namespace
}  // namespace lester
