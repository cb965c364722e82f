#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "lester/contours.hpp"
#include "lester/image.hpp"
#include "lester/maskio.hpp"

namespace lester {

struct RenderLayer {
  LabelId label = 0;
  std::vector<Contour> contours;
};

// Layers are painted in order, back to front.
struct RenderPlan {
  std::vector<RenderLayer> layers;
  Palette palette;
};

// Plan whose layers follow manifest z-order.
inline RenderPlan make_render_plan(std::vector<LabelContours> sets, const LabelTable& table, Palette palette) {
  std::stable_sort(sets.begin(), sets.end(), [&](const LabelContours& a, const LabelContours& b) {
    auto za = table.z_index(a.label).value_or(std::numeric_limits<std::size_t>::max());
    auto zb = table.z_index(b.label).value_or(std::numeric_limits<std::size_t>::max());
    return za < zb;
  });
  RenderPlan plan;
  plan.palette = std::move(palette);
  for (auto& s : sets) plan.layers.push_back({s.label, std::move(s.contours)});
  return plan;
}

namespace detail {

inline std::int64_t ceil_div(std::int64_t num, std::int64_t den) {
  // den > 0
  std::int64_t q = num / den;
  if (num % den != 0 && num > 0) ++q;
  return q;
}

}  // namespace detail

// Even-odd scan conversion sampled at pixel centres (x + 0.5, y + 0.5).
// Calls emit(y, x_begin, x_end) for every covered half-open run inside
// the width x height frame. Contours with fewer than three vertices are
// skipped. Arithmetic is exact: a centre lying on an edge counts as
// inside when the edge is to its left.
template <typename Emit>
void scan_even_odd(std::span<const Contour> contours, int width, int height, Emit&& emit) {
  std::vector<std::vector<std::int64_t>> rows(static_cast<std::size_t>(std::max(height, 0)));
  for (const auto& c : contours) {
    const auto& v = c.vertices;
    if (v.size() < 3) continue;
    for (std::size_t i = 0, n = v.size(); i < n; ++i) {
      const Point a = v[i];
      const Point b = v[(i + 1) % n];
      if (a.y == b.y) continue;
      const std::int64_t dy = std::int64_t{b.y} - a.y;
      const std::int64_t dx = std::int64_t{b.x} - a.x;
      const int y_lo = std::max(std::min(a.y, b.y), 0);
      const int y_hi = std::min(std::max(a.y, b.y), height);  // exclusive
      for (int y = y_lo; y < y_hi; ++y) {
        // Crossing x at the row centre, minus one half: first pixel whose
        // centre is at or right of the crossing.
        std::int64_t num = 2 * std::int64_t{a.x} * dy + (2 * std::int64_t{y} + 1 - 2 * std::int64_t{a.y}) * dx - dy;
        std::int64_t den = 2 * dy;
        if (den < 0) {
          num = -num;
          den = -den;
        }
        rows[static_cast<std::size_t>(y)].push_back(detail::ceil_div(num, den));
      }
    }
  }
  for (int y = 0; y < height; ++y) {
    auto& xs = rows[static_cast<std::size_t>(y)];
    std::sort(xs.begin(), xs.end());
    for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
      const std::int64_t x0 = std::max<std::int64_t>(xs[k], 0);
      const std::int64_t x1 = std::min<std::int64_t>(xs[k + 1], width);
      if (x0 < x1) emit(y, static_cast<int>(x0), static_cast<int>(x1));
    }
  }
}

inline RasterRGBA& fill_layer(std::span<const Contour> contours, Rgba color, RasterRGBA& target) {
  scan_even_odd(contours, target.width(), target.height(), [&](int y, int x0, int x1) {
    auto row = target.row(y);
    std::fill(row.begin() + x0, row.begin() + x1, color);
  });
  return target;
}

inline Bitmap fill_bitmap(std::span<const Contour> contours, int width, int height) {
  Bitmap out(width, height);
  scan_even_odd(contours, width, height, [&](int y, int x0, int x1) {
    auto row = out.row(y);
    std::fill(row.begin() + x0, row.begin() + x1, std::uint8_t{1});
  });
  return out;
}

// Starts transparent and paints layers in plan order; later layers win
// where they overlap.
inline RasterRGBA render_frame(const RenderPlan& plan, int width, int height) {
  RasterRGBA out(width, height, kTransparent);
  for (const auto& layer : plan.layers) {
    auto color = plan.palette.color_of(layer.label);
    if (!color) throw RenderError("no color for label " + std::to_string(layer.label));
    fill_layer(layer.contours, *color, out);
  }
  return out;
}

// ---------------------------------------------------------------------------
// ID guide

namespace detail {

// 5x7 digits, one byte per row, bit 4 = leftmost column.
inline constexpr std::array<std::array<std::uint8_t, 7>, 10> kDigitFont{{
    {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E},  // 0
    {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E},  // 1
    {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F},  // 2
    {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E},  // 3
    {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02},  // 4
    {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E},  // 5
    {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E},  // 6
    {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08},  // 7
    {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E},  // 8
    {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C},  // 9
}};

inline constexpr int kGlyphW = 5;
inline constexpr int kGlyphH = 7;

inline Rgba hsv_color(double hue, double sat, double val) {
  const double c = val * sat;
  const double hp = std::fmod(hue, 360.0) / 60.0;
  const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  switch (static_cast<int>(hp)) {
    case 0: r = c; g = x; break;
    case 1: r = x; g = c; break;
    case 2: g = c; b = x; break;
    case 3: g = x; b = c; break;
    case 4: r = x; b = c; break;
    default: r = c; b = x; break;
  }
  const double m = val - c;
  auto q = [](double v) { return static_cast<std::uint8_t>(std::lround(v * 255.0)); };
  return {q(r + m), q(g + m), q(b + m), 255};
}

}  // namespace detail

// Debug color for the i-th layer; hues advance by the golden angle.
inline Rgba guide_color(std::size_t index) {
  return detail::hsv_color(std::fmod(static_cast<double>(index) * 137.50776405, 360.0), 0.6, 0.95);
}

// Draws decimal `value` with its 5x7 glyphs centred on (cx, cy).
inline void draw_number(RasterRGBA& img, unsigned value, int cx, int cy, Rgba ink) {
  const std::string text = std::to_string(value);
  const int text_w = static_cast<int>(text.size()) * (detail::kGlyphW + 1) - 1;
  const int left = cx - (text_w - 1) / 2;
  const int top = cy - (detail::kGlyphH - 1) / 2;
  for (std::size_t k = 0; k < text.size(); ++k) {
    const auto& glyph = detail::kDigitFont[static_cast<std::size_t>(text[k] - '0')];
    const int gx = left + static_cast<int>(k) * (detail::kGlyphW + 1);
    for (int r = 0; r < detail::kGlyphH; ++r)
      for (int col = 0; col < detail::kGlyphW; ++col)
        if (glyph[static_cast<std::size_t>(r)] & (0x10 >> col))
          if (img.contains(gx + col, top + r)) img.at(gx + col, top + r) = ink;
  }
}

// Area centroid of a ring; vertex mean when the area vanishes.
inline PointF contour_centroid(const Contour& c) {
  const auto& v = c.vertices;
  if (v.empty()) return {};
  double a2 = 0, cx = 0, cy = 0;
  for (std::size_t i = 0, n = v.size(); i < n; ++i) {
    const Point p = v[i], q = v[(i + 1) % n];
    const double cross = double(p.x) * q.y - double(q.x) * p.y;
    a2 += cross;
    cx += (p.x + q.x) * cross;
    cy += (p.y + q.y) * cross;
  }
  if (a2 == 0.0) {
    for (const auto& p : v) {
      cx += p.x;
      cy += p.y;
    }
    return {cx / double(v.size()), cy / double(v.size())};
  }
  return {cx / (3.0 * a2), cy / (3.0 * a2)};
}

// Pixel of `region` whose centre is nearest to `target`; ties go to the
// smaller y, then smaller x. Returns nullopt for an empty region.
inline std::optional<Point> nearest_set_pixel(const Bitmap& region, PointF target) {
  std::optional<Point> best;
  double best_d = std::numeric_limits<double>::infinity();
  for (int y = 0; y < region.height(); ++y)
    for (int x = 0; x < region.width(); ++x) {
      if (!region.at(x, y)) continue;
      const double dx = x + 0.5 - target.x, dy = y + 0.5 - target.y;
      const double d = dx * dx + dy * dy;
      if (d < best_d) {
        best_d = d;
        best = Point{x, y};
      }
    }
  return best;
}

// Where the numeral for a layer goes: the pixel holding the centroid of
// its largest contour, or the nearest pixel the layer covers when the
// centroid falls outside it.
inline std::optional<Point> guide_anchor(const RenderLayer& layer, int width, int height) {
  const Contour* largest = nullptr;
  double largest_area = -1.0;
  for (const auto& c : layer.contours) {
    const double a = contour_area(c);
    if (c.vertices.size() >= 3 && a > largest_area) {
      largest_area = a;
      largest = &c;
    }
  }
  if (largest == nullptr) return std::nullopt;
  const Bitmap region = fill_bitmap(layer.contours, width, height);
  const PointF centroid = contour_centroid(*largest);
  const int px = static_cast<int>(std::floor(centroid.x));
  const int py = static_cast<int>(std::floor(centroid.y));
  if (region.contains(px, py) && region.at(px, py)) return Point{px, py};
  return nearest_set_pixel(region, centroid);
}

inline RasterRGBA render_id_guide(const RenderPlan& plan, int width, int height) {
  RasterRGBA out(width, height, kTransparent);
  for (std::size_t i = 0; i < plan.layers.size(); ++i)
    fill_layer(plan.layers[i].contours, guide_color(i), out);
  const Rgba ink{0, 0, 0, 255};
  for (const auto& layer : plan.layers)
    if (auto at = guide_anchor(layer, width, height)) draw_number(out, layer.label, at->x, at->y, ink);
  return out;
}

}  // namespace lester
