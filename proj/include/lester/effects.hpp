#pragma once

// Optional finishing passes, applied in the order shadow, facial
// features, pixelation.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <span>
#include <vector>

#include "lester/image.hpp"
#include "lester/maskio.hpp"

namespace lester {

struct EffectConfig {
  bool shadow_enabled = false;
  double shadow_factor = 0.5;
  int shadow_dx = 8;
  bool features_enabled = false;
  Rgba feature_color{0, 0, 0, 255};
  int feature_thickness = 2;
  int pixelate_factor = 1;  // 1 disables pixelation
};

// ---------------------------------------------------------------------------
// Shadow

// Copy of `img` shifted by dx with RGB scaled by `factor`, placed under the
// original. Wherever the original has alpha > 0 it is kept verbatim.
inline RasterRGBA apply_shadow(const RasterRGBA& img, double factor, int dx) {
  auto scale = [factor](std::uint8_t c) {
    return static_cast<std::uint8_t>(std::clamp<long>(std::lround(c * factor), 0, 255));
  };
  RasterRGBA out(img.width(), img.height(), kTransparent);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const Rgba& src = img.at(x, y);
      if (src.a > 0) {
        out.at(x, y) = src;
        continue;
      }
      const int sx = x - dx;
      if (!img.contains(sx, y)) continue;
      const Rgba& s = img.at(sx, y);
      if (s.a == 0) {
        out.at(x, y) = src;
        continue;
      }
      out.at(x, y) = {scale(s.r), scale(s.g), scale(s.b), s.a};
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Facial features

struct LandmarkStroke {
  int first = 0;
  int last = 0;  // inclusive
  bool closed = false;
};

// iBUG-68 groups drawn as strokes: brows, nose, eyes, outer lip. The jaw
// line (0-16) and inner lip (60-67) are left out.
inline constexpr std::array<LandmarkStroke, 6> kFeatureStrokes{{
    {17, 21, false},
    {22, 26, false},
    {27, 35, false},
    {36, 41, true},
    {42, 47, true},
    {48, 59, true},
}};

// Visits the integer pixels of the Bresenham line from a to b, both ends
// included. One pixel per step along the major axis (x when |dx| >= |dy|);
// the minor offset after i steps is i * minor / major rounded to nearest,
// halves rounded towards the start point.
template <typename Visit>
void for_each_line_pixel(Point a, Point b, Visit&& visit) {
  const long dx = std::labs(long{b.x} - a.x);
  const long dy = std::labs(long{b.y} - a.y);
  const int sx = b.x >= a.x ? 1 : -1;
  const int sy = b.y >= a.y ? 1 : -1;
  const bool x_major = dx >= dy;
  const long major = x_major ? dx : dy;
  const long minor = x_major ? dy : dx;
  long err = 2 * minor - major;
  int x = a.x, y = a.y;
  for (long i = 0; i <= major; ++i) {
    visit(Point{x, y});
    if (err > 0) {
      if (x_major)
        y += sy;
      else
        x += sx;
      err -= 2 * major;
    }
    err += 2 * minor;
    if (x_major)
      x += sx;
    else
      y += sy;
  }
}

inline std::vector<Point> bresenham_line(Point a, Point b) {
  std::vector<Point> out;
  for_each_line_pixel(a, b, [&](Point p) { out.push_back(p); });
  return out;
}

// Landmarks far outside the frame are pulled in to +-2^20 so the integer
// line walk stays bounded.
inline Point round_point(PointF p) {
  constexpr double kLimit = 1 << 20;
  return {static_cast<int>(std::lround(std::clamp(p.x, -kLimit, kLimit))),
          static_cast<int>(std::lround(std::clamp(p.y, -kLimit, kLimit)))};
}

// Brush offsets for a thickness x thickness square: lo..lo+thickness-1
// with lo = -(thickness-1)/2.
inline int brush_low(int thickness) { return -((thickness - 1) / 2); }

// Pixels touched by the feature strokes, clipped to the frame, as a
// bitmap.
inline Bitmap feature_stroke_mask(const LandmarkSet& lm, int thickness, int width, int height) {
  Bitmap mask(width, height);
  const int lo = brush_low(std::max(thickness, 1));
  const int hi = lo + std::max(thickness, 1) - 1;
  auto stamp = [&](Point p) {
    for (int oy = lo; oy <= hi; ++oy)
      for (int ox = lo; ox <= hi; ++ox)
        if (mask.contains(p.x + ox, p.y + oy)) mask.at(p.x + ox, p.y + oy) = 1;
  };
  auto segment = [&](Point a, Point b) {
    // Skip segments whose brushed bounding box misses the frame.
    if (std::max(a.x, b.x) + hi < 0 || std::min(a.x, b.x) + lo >= width ||
        std::max(a.y, b.y) + hi < 0 || std::min(a.y, b.y) + lo >= height)
      return;
    for_each_line_pixel(a, b, stamp);
  };
  for (const auto& s : kFeatureStrokes) {
    for (int i = s.first; i < s.last; ++i)
      segment(round_point(lm.points[static_cast<std::size_t>(i)]), round_point(lm.points[static_cast<std::size_t>(i + 1)]));
    if (s.closed)
      segment(round_point(lm.points[static_cast<std::size_t>(s.last)]), round_point(lm.points[static_cast<std::size_t>(s.first)]));
  }
  return mask;
}

inline RasterRGBA draw_facial_features(const RasterRGBA& img, const LandmarkSet& lm, Rgba color, int thickness) {
  RasterRGBA out = img;
  const Bitmap strokes = feature_stroke_mask(lm, thickness, img.width(), img.height());
  auto m = strokes.cells();
  auto px = out.cells();
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m[i]) px[i] = color;
  return out;
}

// ---------------------------------------------------------------------------
// Pixelation

// Bilinear downscale by `factor` (one sample at the centre of each
// factor x factor block, edge pixels clamped), then nearest-neighbour
// upscale back to the input size. Channels are treated straight, not
// premultiplied.
inline RasterRGBA pixelate(const RasterRGBA& img, int factor) {
  const int w = img.width();
  const int h = img.height();
  if (factor < 1) throw ValidationError("pixelate factor must be >= 1");
  if (factor > std::min(w, h))
    throw ValidationError("pixelate factor " + std::to_string(factor) + " exceeds frame size " +
                          std::to_string(w) + "x" + std::to_string(h));
  if (factor == 1) return img;

  const int sw = (w + factor - 1) / factor;
  const int sh = (h + factor - 1) / factor;

  struct Tap {
    int i0, i1;
    double t;
  };
  auto taps = [factor](int n_small, int n_big) {
    std::vector<Tap> out(static_cast<std::size_t>(n_small));
    for (int i = 0; i < n_small; ++i) {
      double src = (i + 0.5) * factor - 0.5;
      src = std::clamp(src, 0.0, double(n_big - 1));
      const int i0 = static_cast<int>(std::floor(src));
      const int i1 = std::min(i0 + 1, n_big - 1);
      out[static_cast<std::size_t>(i)] = {i0, i1, src - i0};
    }
    return out;
  };
  const auto tx = taps(sw, w);
  const auto ty = taps(sh, h);

  RasterRGBA small(sw, sh);
  for (int j = 0; j < sh; ++j) {
    const Tap& vy = ty[static_cast<std::size_t>(j)];
    for (int i = 0; i < sw; ++i) {
      const Tap& vx = tx[static_cast<std::size_t>(i)];
      const Rgba& p00 = img.at(vx.i0, vy.i0);
      const Rgba& p10 = img.at(vx.i1, vy.i0);
      const Rgba& p01 = img.at(vx.i0, vy.i1);
      const Rgba& p11 = img.at(vx.i1, vy.i1);
      auto mix = [&](std::uint8_t Rgba::*ch) {
        const double top = (1 - vx.t) * (p00.*ch) + vx.t * (p10.*ch);
        const double bot = (1 - vx.t) * (p01.*ch) + vx.t * (p11.*ch);
        return static_cast<std::uint8_t>(std::clamp<long>(std::lround((1 - vy.t) * top + vy.t * bot), 0, 255));
      };
      small.at(i, j) = {mix(&Rgba::r), mix(&Rgba::g), mix(&Rgba::b), mix(&Rgba::a)};
    }
  }

  RasterRGBA out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out.at(x, y) = small.at(x / factor, y / factor);
  return out;
}

// Runs the enabled passes in their fixed order. `landmarks` may be null
// when the frame has no detected face.
inline RasterRGBA apply_effects(RasterRGBA img, const EffectConfig& cfg, const LandmarkSet* landmarks) {
  if (cfg.shadow_enabled) img = apply_shadow(img, cfg.shadow_factor, cfg.shadow_dx);
  if (cfg.features_enabled && landmarks != nullptr)
    img = draw_facial_features(img, *landmarks, cfg.feature_color, cfg.feature_thickness);
  if (cfg.pixelate_factor > 1) img = pixelate(img, cfg.pixelate_factor);
  return img;
}

}  // namespace lester
