#pragma once

// Input/output for the interchange formats: label-mask PNG sequences,
// manifest/palette/landmark JSON documents and RGBA output frames.

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "lester/error.hpp"
#include "lester/image.hpp"

namespace lester {

namespace fs = std::filesystem;

struct LabelEntry {
  LabelId id = 0;
  std::string name;
  friend bool operator==(const LabelEntry&, const LabelEntry&) = default;
};

// Ordered label space. Entry order is the render z-order, back to front.
class LabelTable {
 public:
  LabelTable() = default;
  explicit LabelTable(std::vector<LabelEntry> entries) : entries_(std::move(entries)) {
    std::set<int> ids;
    std::set<std::string> names;
    for (const auto& e : entries_) {
      if (e.id == kBackground) throw ParseError("manifest: id 0 is reserved for background");
      if (!ids.insert(e.id).second)
        throw ParseError("manifest: duplicate id " + std::to_string(e.id));
      if (!names.insert(e.name).second) throw ParseError("manifest: duplicate name \"" + e.name + "\"");
    }
  }

  const std::vector<LabelEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }

  bool contains(LabelId id) const noexcept { return z_index(id).has_value(); }

  std::optional<std::size_t> z_index(LabelId id) const noexcept {
    for (std::size_t i = 0; i < entries_.size(); ++i)
      if (entries_[i].id == id) return i;
    return std::nullopt;
  }

  friend bool operator==(const LabelTable&, const LabelTable&) = default;

 private:
  std::vector<LabelEntry> entries_;
};

struct Palette {
  std::map<LabelId, Rgba> colors;
  double shadow_factor = 0.5;
  int shadow_dx = 8;

  std::optional<Rgba> color_of(LabelId id) const {
    auto it = colors.find(id);
    if (it == colors.end()) return std::nullopt;
    return it->second;
  }
};

inline constexpr std::size_t kLandmarkCount = 68;

// iBUG-68 ordered facial landmarks in pixel coordinates.
struct LandmarkSet {
  std::array<PointF, kLandmarkCount> points{};
};

using LandmarkMap = std::map<int, LandmarkSet>;

struct FrameSequence {
  std::vector<LabelMask> frames;
  double fps = 24.0;

  int width() const { return frames.empty() ? 0 : frames.front().width(); }
  int height() const { return frames.empty() ? 0 : frames.front().height(); }
  std::size_t size() const noexcept { return frames.size(); }
};

// "frame_0007" for ("frame_", 7).
inline std::string frame_stem(std::string_view prefix, std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04zu", index);
  return std::string(prefix) + buf;
}

inline std::string frame_file_name(std::string_view prefix, std::size_t index) {
  return frame_stem(prefix, index) + ".png";
}

// ---------------------------------------------------------------------------
// JSON documents

namespace detail {

inline nlohmann::json parse_json(std::string_view text, const char* what) {
  try {
    return nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string(what) + ": " + e.what());
  }
}

inline int hex_digit(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

inline LabelId parse_label_key(const std::string& key, const char* what) {
  std::size_t used = 0;
  int id = -1;
  try {
    id = std::stoi(key, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != key.size() || key.empty())
    throw ParseError(std::string(what) + ": key \"" + key + "\" is not a label id");
  if (id < 1 || id > 255)
    throw ParseError(std::string(what) + ": label id " + key + " outside 1..255");
  return static_cast<LabelId>(id);
}

}  // namespace detail

// "#RRGGBB" or "#RRGGBBAA"; alpha defaults to 255.
inline Rgba parse_hex_color(std::string_view text) {
  if (text.size() != 7 && text.size() != 9) throw ParseError("malformed color \"" + std::string(text) + "\"");
  if (text[0] != '#') throw ParseError("malformed color \"" + std::string(text) + "\"");
  std::array<int, 4> ch{0, 0, 0, 255};
  for (std::size_t i = 0; i * 2 + 1 < text.size(); ++i) {
    int hi = detail::hex_digit(text[1 + 2 * i]);
    int lo = detail::hex_digit(text[2 + 2 * i]);
    if (hi < 0 || lo < 0) throw ParseError("malformed color \"" + std::string(text) + "\"");
    ch[i] = hi * 16 + lo;
  }
  return {static_cast<std::uint8_t>(ch[0]), static_cast<std::uint8_t>(ch[1]),
          static_cast<std::uint8_t>(ch[2]), static_cast<std::uint8_t>(ch[3])};
}

inline LabelTable parse_manifest(std::string_view text) {
  auto doc = detail::parse_json(text, "manifest");
  if (!doc.is_array()) throw ParseError("manifest: expected a JSON array");
  std::vector<LabelEntry> entries;
  for (const auto& item : doc) {
    if (!item.is_object() || !item.contains("id") || !item.contains("name"))
      throw ParseError("manifest: each entry needs \"id\" and \"name\"");
    const auto& id = item["id"];
    const auto& name = item["name"];
    if (!id.is_number_integer() || !name.is_string())
      throw ParseError("manifest: \"id\" must be an integer and \"name\" a string");
    auto value = id.get<long long>();
    if (value < 1 || value > 255)
      throw ParseError("manifest: id " + std::to_string(value) + " outside 1..255");
    entries.push_back({static_cast<LabelId>(value), name.get<std::string>()});
  }
  return LabelTable(std::move(entries));
}

inline Palette parse_palette(std::string_view text) {
  auto doc = detail::parse_json(text, "palette");
  if (!doc.is_object()) throw ParseError("palette: expected a JSON object");
  Palette pal;
  for (const auto& [key, value] : doc.items()) {
    if (key == "shadow") {
      if (!value.is_object()) throw ParseError("palette: \"shadow\" must be an object");
      if (value.contains("factor")) {
        if (!value["factor"].is_number()) throw ParseError("palette: shadow factor must be a number");
        pal.shadow_factor = value["factor"].get<double>();
        if (!(pal.shadow_factor >= 0.0 && pal.shadow_factor <= 1.0))
          throw ParseError("palette: shadow factor outside 0..1");
      }
      if (value.contains("dx")) {
        if (!value["dx"].is_number_integer()) throw ParseError("palette: shadow dx must be an integer");
        pal.shadow_dx = value["dx"].get<int>();
      }
      continue;
    }
    LabelId id = detail::parse_label_key(key, "palette");
    if (!value.is_string()) throw ParseError("palette: color for " + key + " must be a string");
    pal.colors[id] = parse_hex_color(value.get<std::string>());
  }
  return pal;
}

// Non-throwing landmark check; one message per offending frame.
inline std::vector<std::string> landmark_diagnostics(const nlohmann::json& doc) {
  std::vector<std::string> out;
  if (!doc.is_object()) {
    out.emplace_back("landmarks: expected a JSON object keyed by frame index");
    return out;
  }
  for (const auto& [key, value] : doc.items()) {
    std::size_t used = 0;
    int frame = -1;
    try {
      frame = std::stoi(key, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != key.size() || frame < 0) {
      out.push_back("landmarks: key \"" + key + "\" is not a frame index");
      continue;
    }
    if (!value.is_array()) {
      out.push_back("frame " + key + ": landmarks must be an array");
      continue;
    }
    if (value.size() != kLandmarkCount) {
      out.push_back("frame " + key + ": expected 68 landmarks, got " + std::to_string(value.size()));
      continue;
    }
    for (const auto& pt : value) {
      if (!pt.is_array() || pt.size() != 2 || !pt[0].is_number() || !pt[1].is_number() ||
          !std::isfinite(pt[0].get<double>()) || !std::isfinite(pt[1].get<double>())) {
        out.push_back("frame " + key + ": landmark must be a finite [x, y] pair");
        break;
      }
    }
  }
  return out;
}

inline LandmarkMap load_landmarks(std::string_view text) {
  auto doc = detail::parse_json(text, "landmarks");
  auto problems = landmark_diagnostics(doc);
  if (!problems.empty()) throw ValidationError(problems.front());
  LandmarkMap out;
  for (const auto& [key, value] : doc.items()) {
    LandmarkSet set;
    for (std::size_t i = 0; i < kLandmarkCount; ++i)
      set.points[i] = {value[i][0].get<double>(), value[i][1].get<double>()};
    out.emplace(std::stoi(key), set);
  }
  return out;
}

inline std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// ---------------------------------------------------------------------------
// PNG

// Encodes an 8-bit RGBA raster. The simplified libpng writer emits no
// time chunk, so identical rasters give identical bytes.
inline std::vector<std::uint8_t> encode_png(const RasterRGBA& image) {
  if (image.width() <= 0 || image.height() <= 0)
    throw DimensionError("cannot encode an empty image");
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width());
  img.height = static_cast<png_uint_32>(image.height());
  img.format = PNG_FORMAT_RGBA;
  const void* pixels = image.cells().data();
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&img, nullptr, &size, 0, pixels, 0, nullptr))
    throw IoError(std::string("png encode: ") + img.message);
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&img, out.data(), &size, 0, pixels, 0, nullptr))
    throw IoError(std::string("png encode: ") + img.message);
  out.resize(size);
  return out;
}

inline std::vector<std::uint8_t> encode_label_png(const LabelMask& mask) {
  if (mask.width() <= 0 || mask.height() <= 0)
    throw DimensionError("cannot encode an empty mask");
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(mask.width());
  img.height = static_cast<png_uint_32>(mask.height());
  img.format = PNG_FORMAT_GRAY;
  png_alloc_size_t size = 0;
  const void* pixels = mask.cells().data();
  if (!png_image_write_to_memory(&img, nullptr, &size, 0, pixels, 0, nullptr))
    throw IoError(std::string("png encode: ") + img.message);
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&img, out.data(), &size, 0, pixels, 0, nullptr))
    throw IoError(std::string("png encode: ") + img.message);
  out.resize(size);
  return out;
}

// Writes through a temporary sibling and renames, so a reader never sees a
// half-written file.
inline void write_file_atomic(const fs::path& path, std::span<const std::uint8_t> bytes) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + path.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot write " + path.string());
  }
}

inline void write_frame_png(const RasterRGBA& image, const fs::path& path) {
  auto bytes = encode_png(image);
  write_file_atomic(path, bytes);
}

inline void write_label_png(const LabelMask& mask, const fs::path& path) {
  auto bytes = encode_label_png(mask);
  write_file_atomic(path, bytes);
}

inline RasterRGBA read_png_rgba(const fs::path& path) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.string().c_str()))
    throw IoError("cannot read " + path.string() + ": " + img.message);
  img.format = PNG_FORMAT_RGBA;
  RasterRGBA out(static_cast<int>(img.width), static_cast<int>(img.height));
  if (!png_image_finish_read(&img, nullptr, out.cells().data(), 0, nullptr)) {
    png_image_free(&img);
    throw IoError("cannot decode " + path.string() + ": " + img.message);
  }
  return out;
}

namespace detail {

struct PngReadState {
  std::jmp_buf jump;
  char message[256] = {};
};

inline void png_error_to_jump(png_structp png, png_const_charp msg) {
  auto* state = static_cast<PngReadState*>(png_get_error_ptr(png));
  std::snprintf(state->message, sizeof state->message, "%s", msg);
  std::longjmp(state->jump, 1);
}

inline void png_ignore_warning(png_structp, png_const_charp) {}

// Reads raw 8-bit sample values of a gray or indexed PNG. Palette entries
// are not expanded: an indexed pixel yields its index. Returns false with
// `why` filled in on failure. No objects with destructors are created
// between setjmp and the libpng calls that may longjmp.
inline bool read_gray8(FILE* fp, std::vector<std::uint8_t>& pixels, int& width, int& height,
                       std::string& why) {
  PngReadState state;
  png_structp png = nullptr;
  png_infop info = nullptr;
  std::vector<png_bytep> rows;
  png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &state, png_error_to_jump, png_ignore_warning);
  if (png == nullptr) {
    why = "out of memory";
    return false;
  }
  info = png_create_info_struct(png);
  if (info == nullptr || setjmp(state.jump)) {
    png_destroy_read_struct(&png, &info, nullptr);
    why = state.message[0] ? state.message : "out of memory";
    return false;
  }
  png_init_io(png, fp);
  png_read_info(png, info);
  int bit_depth = png_get_bit_depth(png, info);
  int color_type = png_get_color_type(png, info);
  if (bit_depth != 8 || (color_type != PNG_COLOR_TYPE_GRAY && color_type != PNG_COLOR_TYPE_PALETTE)) {
    png_destroy_read_struct(&png, &info, nullptr);
    why = "expected an 8-bit grayscale or indexed PNG";
    return false;
  }
  width = static_cast<int>(png_get_image_width(png, info));
  height = static_cast<int>(png_get_image_height(png, info));
  pixels.resize(static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
  rows.resize(static_cast<std::size_t>(height));
  for (int y = 0; y < height; ++y) rows[static_cast<std::size_t>(y)] = pixels.data() + static_cast<std::size_t>(y) * width;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

}  // namespace detail

inline LabelMask read_label_png(const fs::path& path) {
  FILE* fp = std::fopen(path.string().c_str(), "rb");
  if (fp == nullptr) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> pixels;
  int width = 0, height = 0;
  std::string why;
  bool ok = detail::read_gray8(fp, pixels, width, height, why);
  std::fclose(fp);
  if (!ok) throw IoError(path.filename().string() + ": " + why);
  return LabelMask(width, height, std::move(pixels));
}

// ---------------------------------------------------------------------------
// Mask sequences

// Indices of frame_NNNN.png files in `dir`, sorted. Throws SequenceError
// when numbering does not run 0..N-1 without gaps.
inline std::vector<fs::path> list_mask_frames(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  static const std::regex pattern(R"(frame_(\d{4,})\.png)");
  std::map<long, fs::path> found;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::smatch m;
    std::string name = entry.path().filename().string();
    if (std::regex_match(name, m, pattern)) found.emplace(std::stol(m[1].str()), entry.path());
  }
  if (found.empty()) throw SequenceError("no frame_NNNN.png files in " + dir.string());
  std::vector<fs::path> out;
  long expected = 0;
  for (const auto& [index, path] : found) {
    if (index != expected)
      throw SequenceError("missing " + frame_stem("frame_", static_cast<std::size_t>(expected)));
    out.push_back(path);
    ++expected;
  }
  return out;
}

// First label in `mask` absent from `table`, if any.
inline std::optional<LabelId> first_unknown_label(const LabelMask& mask, const LabelTable& table) {
  std::array<bool, 256> seen{};
  for (auto v : mask.cells()) seen[v] = true;
  for (int id = 1; id < 256; ++id)
    if (seen[static_cast<std::size_t>(id)] && !table.contains(static_cast<LabelId>(id)))
      return static_cast<LabelId>(id);
  return std::nullopt;
}

inline FrameSequence load_mask_sequence(const fs::path& dir, const LabelTable& manifest) {
  auto files = list_mask_frames(dir);
  FrameSequence seq;
  for (std::size_t i = 0; i < files.size(); ++i) {
    LabelMask mask = read_label_png(files[i]);
    if (!seq.frames.empty() && !mask.same_shape(seq.frames.front()))
      throw DimensionError("frame " + std::to_string(i) + ": size " + std::to_string(mask.width()) + "x" +
                           std::to_string(mask.height()) + " differs from frame 0 (" +
                           std::to_string(seq.width()) + "x" + std::to_string(seq.height()) + ")");
    if (auto bad = first_unknown_label(mask, manifest))
      throw ValidationError("frame " + std::to_string(i) + ": unknown label " + std::to_string(*bad));
    seq.frames.push_back(std::move(mask));
  }
  return seq;
}

inline void write_mask_sequence(const FrameSequence& seq, const fs::path& dir) {
  fs::create_directories(dir);
  for (std::size_t i = 0; i < seq.frames.size(); ++i)
    write_label_png(seq.frames[i], dir / frame_file_name("frame_", i));
}

}  // namespace lester
