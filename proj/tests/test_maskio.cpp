#include <gtest/gtest.h>

#include "test_support.hpp"

namespace lester {
namespace {

std::string landmark_json(std::size_t points, int frame = 0) {
  std::string s = "{\"" + std::to_string(frame) + "\": [";
  for (std::size_t i = 0; i < points; ++i) s += (i ? "," : "") + std::string("[10,12]");
  return s + "]}";
}

template <typename E, typename F>
std::string error_of(F&& f) {
  try {
    f();
  } catch (const E& e) {
    return e.what();
  }
  return "<no error>";
}

// --- manifest ---------------------------------------------------------------

TEST(Manifest, OrderIsZOrder) {
  auto t = parse_manifest(R"([{"id":1,"name":"hair"},{"id":2,"name":"skin"}])");
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t.entries()[0], (LabelEntry{1, "hair"}));
  EXPECT_LT(*t.z_index(1), *t.z_index(2));
  EXPECT_FALSE(t.contains(3));
}

TEST(Manifest, Rejections) {
  EXPECT_THROW(parse_manifest(R"([{"id":1,"name":"a"},{"id":1,"name":"b"}])"), ParseError);
  EXPECT_THROW(parse_manifest(R"([{"id":1,"name":"a"},{"id":2,"name":"a"}])"), ParseError);
  EXPECT_THROW(parse_manifest(R"([{"id":0,"name":"bg"}])"), ParseError);
  EXPECT_THROW(parse_manifest(R"([{"id":256,"name":"x"}])"), ParseError);
  EXPECT_THROW(parse_manifest(R"({"id":1})"), ParseError);
  EXPECT_THROW(parse_manifest("not json"), ParseError);
}

// --- palette ----------------------------------------------------------------

TEST(Palette, HexDecode) {
  auto p = parse_palette(R"({"1":"#20B060"})");
  EXPECT_EQ(p.color_of(1), (Rgba{32, 176, 96, 255}));
  EXPECT_FALSE(p.color_of(2).has_value());
  EXPECT_DOUBLE_EQ(p.shadow_factor, 0.5);
  EXPECT_EQ(p.shadow_dx, 8);
}

TEST(Palette, ShadowParameters) {
  auto p = parse_palette(R"({"1":"#20B060","shadow":{"factor":0.6,"dx":-4}})");
  EXPECT_DOUBLE_EQ(p.shadow_factor, 0.6);
  EXPECT_EQ(p.shadow_dx, -4);
}

TEST(Palette, AlphaSuffix) { EXPECT_EQ(parse_hex_color("#01020380"), (Rgba{1, 2, 3, 128})); }

TEST(Palette, MalformedHex) {
  EXPECT_THROW(parse_palette(R"({"1":"#XYZ"})"), ParseError);
  EXPECT_THROW(parse_palette(R"({"1":"20B060"})"), ParseError);
  EXPECT_THROW(parse_palette(R"({"1":"#20B06G"})"), ParseError);
  EXPECT_THROW(parse_palette(R"({"x":"#20B060"})"), ParseError);
  EXPECT_THROW(parse_palette(R"({"1":"#20B060","shadow":{"factor":2}})"), ParseError);
}

// --- landmarks --------------------------------------------------------------

TEST(Landmarks, SixtyEightPoints) {
  auto m = load_landmarks(landmark_json(68));
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m.at(0).points[67], (PointF{10, 12}));
}

TEST(Landmarks, EmptyObject) { EXPECT_TRUE(load_landmarks("{}").empty()); }

TEST(Landmarks, WrongCount) {
  EXPECT_EQ(error_of<ValidationError>([] { load_landmarks(landmark_json(67)); }),
            "frame 0: expected 68 landmarks, got 67");
}

// --- PNG --------------------------------------------------------------------

TEST(Png, TransparentRoundTrip) {
  auto dir = testing::fresh_dir("png_transparent");
  RasterRGBA img(4, 4);
  write_frame_png(img, dir / "a.png");
  auto back = read_png_rgba(dir / "a.png");
  ASSERT_EQ(back.width(), 4);
  for (auto px : back.cells()) EXPECT_EQ(px.a, 0);
}

TEST(Png, IdenticalBytes) {
  RasterRGBA img(5, 3, Rgba{9, 8, 7, 255});
  img.at(1, 1) = {1, 2, 3, 4};
  EXPECT_EQ(encode_png(img), encode_png(img));
  auto dir = testing::fresh_dir("png_twice");
  write_frame_png(img, dir / "a.png");
  write_frame_png(img, dir / "b.png");
  EXPECT_EQ(read_text_file(dir / "a.png"), read_text_file(dir / "b.png"));
  EXPECT_EQ(read_png_rgba(dir / "a.png"), img);
}

TEST(Png, EmptyImageRejected) {
  auto dir = testing::fresh_dir("png_empty");
  EXPECT_THROW(write_frame_png(RasterRGBA(0, 0), dir / "a.png"), Error);
}

TEST(Png, UnwritablePath) {
  EXPECT_THROW(write_frame_png(RasterRGBA(2, 2), "/nonexistent_dir_for_lester/a.png"), IoError);
}

TEST(Png, LabelMaskRoundTrip) {
  testing::Rng rng(4);
  LabelMask m(13, 9);
  std::uniform_int_distribution<int> v(0, 255);
  for (auto& c : m.cells()) c = static_cast<LabelId>(v(rng));
  auto dir = testing::fresh_dir("png_label");
  write_label_png(m, dir / "m.png");
  EXPECT_EQ(read_label_png(dir / "m.png"), m);
}

TEST(Png, RgbaFileIsNotALabelMask) {
  auto dir = testing::fresh_dir("png_not_label");
  write_frame_png(RasterRGBA(3, 3), dir / "frame_0000.png");
  EXPECT_THROW(read_label_png(dir / "frame_0000.png"), IoError);
}

// --- sequences --------------------------------------------------------------

TEST(MaskSequence, RoundTrip) {
  auto dir = testing::fresh_dir("seq_ok");
  FrameSequence seq;
  for (int i = 0; i < 3; ++i) {
    LabelMask m(64, 64);
    m.at(i, i) = 1;
    m.at(10, 10 + i) = 2;
    seq.frames.push_back(m);
  }
  write_mask_sequence(seq, dir);
  auto back = load_mask_sequence(dir, parse_manifest(R"([{"id":1,"name":"skin"},{"id":2,"name":"shirt"}])"));
  EXPECT_EQ(back.frames, seq.frames);
}

TEST(MaskSequence, UnknownLabel) {
  auto dir = testing::fresh_dir("seq_unknown");
  FrameSequence seq;
  for (int i = 0; i < 3; ++i) seq.frames.emplace_back(8, 8);
  seq.frames[2].at(3, 3) = 7;
  write_mask_sequence(seq, dir);
  EXPECT_EQ(error_of<ValidationError>([&] { load_mask_sequence(dir, LabelTable({{1, "skin"}})); }),
            "frame 2: unknown label 7");
}

TEST(MaskSequence, Gap) {
  auto dir = testing::fresh_dir("seq_gap");
  write_label_png(LabelMask(4, 4), dir / "frame_0000.png");
  write_label_png(LabelMask(4, 4), dir / "frame_0002.png");
  EXPECT_EQ(error_of<SequenceError>([&] { load_mask_sequence(dir, LabelTable{}); }), "missing frame_0001");
}

TEST(MaskSequence, MixedDimensions) {
  auto dir = testing::fresh_dir("seq_dims");
  write_label_png(LabelMask(4, 4), dir / "frame_0000.png");
  write_label_png(LabelMask(5, 4), dir / "frame_0001.png");
  EXPECT_THROW(load_mask_sequence(dir, LabelTable{}), DimensionError);
}

TEST(MaskSequence, IgnoresUnrelatedFiles) {
  auto dir = testing::fresh_dir("seq_other");
  write_label_png(LabelMask(4, 4), dir / "frame_0000.png");
  testing::write_text(dir / "notes.txt", "x");
  testing::write_text(dir / "frame_0001.txt", "x");
  EXPECT_EQ(load_mask_sequence(dir, LabelTable{}).size(), 1u);
}

TEST(FrameNames, Padding) {
  EXPECT_EQ(frame_file_name("out_", 7), "out_0007.png");
  EXPECT_EQ(frame_file_name("frame_", 12345), "frame_12345.png");
}

}  // namespace
}  // namespace lester
