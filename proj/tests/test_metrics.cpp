#include <gtest/gtest.h>

#include "test_support.hpp"

namespace lester {
namespace {

// Labels 1 and 2 on fixed rectangles; from frame `swap_at` on the ids are
// exchanged.
FrameSequence swapped_clip(int frames, int swap_at) {
  FrameSequence seq;
  for (int f = 0; f < frames; ++f) {
    LabelMask m(20, 10);
    const LabelId a = f >= swap_at ? 2 : 1, b = f >= swap_at ? 1 : 2;
    for (int y = 2; y < 8; ++y) {
      for (int x = 1; x < 8; ++x) m.at(x, y) = a;
      for (int x = 11; x < 18; ++x) m.at(x, y) = b;
    }
    seq.frames.push_back(m);
  }
  return seq;
}

TEST(LabelFlips, StaticClip) { EXPECT_EQ(label_flip_count(swapped_clip(5, 99)), 0); }

TEST(LabelFlips, HardSwap) {
  auto seq = swapped_clip(6, 3);
  EXPECT_EQ(label_flip_count(seq), 2);
  EXPECT_EQ(label_flip_count(relabel_sequence(seq)), 0);
}

TEST(LabelFlips, RigidMotion) {
  auto seq = testing::moving_square_clip(12);
  for (std::size_t k = 1; k < seq.frames.size(); ++k)
    for (LabelId l : {1, 2})
      ASSERT_GE(iou(select_label(seq.frames[k - 1], l), select_label(seq.frames[k], l)), 0.5);
  EXPECT_EQ(label_flip_count(relabel_sequence(seq)), 0);
}

TEST(MeanVertexCount, Triangles) {
  std::vector<std::vector<LabelContours>> frames(4);
  for (auto& f : frames) f.push_back({1, {Contour{{{0, 0}, {4, 0}, {0, 3}}}}});
  EXPECT_DOUBLE_EQ(mean_vertex_count(frames), 3.0);
}

TEST(MeanVertexCount, Empty) {
  EXPECT_DOUBLE_EQ(mean_vertex_count(std::span<const std::vector<LabelContours>>{}), 0.0);
}

std::vector<LabelMask> blob_clip() {
  testing::Rng rng(13);
  std::vector<LabelMask> clip;
  for (int f = 0; f < 4; ++f) {
    LabelMask m(48, 48);
    auto a = testing::random_blobs(rng, 48, 48, 5), b = testing::random_blobs(rng, 48, 48, 5);
    for (std::size_t k = 0; k < m.size(); ++k) m.cells()[k] = a.cells()[k] ? 1 : (b.cells()[k] ? 2 : 0);
    clip.push_back(m);
  }
  return clip;
}

double mean_vertices_at(const std::vector<LabelMask>& clip, double t) {
  const LabelTable table({{1, "a"}, {2, "b"}});
  std::vector<std::vector<LabelContours>> frames;
  for (const auto& m : clip) frames.push_back(simplify_frame(m, table, {16.0, t}));
  return mean_vertex_count(frames);
}

TEST(MeanVertexCount, NonIncreasingWhileEveryContourSimplifies) {
  const auto clip = blob_clip();
  double previous = 1e18;
  for (double t : {0.0, 0.5, 1.0, 2.0}) {
    // Precondition: no contour takes the keep-original branch at this t.
    for (const auto& m : clip)
      for (const auto& sub : split_submasks(m))
        for (const auto& c : trace_contours(dilate(sub.bitmap)))
          if (contour_area(c) > 16.0) {
            ASSERT_TRUE(can_simplify(c, t)) << "t=" << t;
          }
    const double v = mean_vertices_at(clip, t);
    EXPECT_LE(v, previous) << "t=" << t;
    previous = v;
  }
}

TEST(MeanVertexCount, ToleranceOneVersusFourOnFixedClip) {
  const auto clip = blob_clip();
  EXPECT_LE(mean_vertices_at(clip, 4.0), mean_vertices_at(clip, 1.0));
}

TEST(MeanVertexCount, DpVertexCountNonIncreasingPerContour) {
  testing::Rng rng(14);
  for (int i = 0; i < 30; ++i)
    for (const auto& c : trace_contours(testing::random_mask(rng, 32, 32))) {
      std::size_t previous = c.vertices.size();
      for (double t : {0.5, 1.0, 2.0, 4.0, 8.0, 16.0}) {
        const std::size_t n = simplify_dp(c, t).vertices.size();
        ASSERT_LE(n, previous);
        previous = n;
      }
    }
}

// Raising t can push a small contour into the keep-original branch, which
// restores all of its traced vertices. The mean can then go up.
TEST(MeanVertexCount, FallbackCanRaiseMean) {
  const auto clip = blob_clip();
  EXPECT_GT(mean_vertices_at(clip, 8.0), mean_vertices_at(clip, 4.0));
}

TEST(Report, FieldsAndJson) {
  auto seq = relabel_sequence(testing::moving_square_clip(3));
  std::vector<std::vector<LabelContours>> contours(3);
  auto r = make_report(seq, contours);
  EXPECT_EQ(r.frames, 3);
  EXPECT_EQ(r.label_flip_count, 0);
  ASSERT_EQ(r.per_frame.size(), 2u);
  for (const auto& fo : r.per_frame)
    for (const auto& [l, v] : fo.iou_with_previous) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  EXPECT_GT(r.mean_region_iou, 0.5);
  auto j = to_json(r);
  EXPECT_EQ(j["frames"], 3);
  EXPECT_TRUE(j.contains("note"));
  EXPECT_EQ(j["per_frame"].size(), 2u);
}

TEST(Report, NoPersistingLabels) {
  FrameSequence seq;
  seq.frames = {LabelMask(4, 4), LabelMask(4, 4)};
  auto r = make_report(seq, {});
  EXPECT_DOUBLE_EQ(r.mean_region_iou, 0.0);
  EXPECT_EQ(r.label_flip_count, 0);
}

}  // namespace
}  // namespace lester
