#pragma once

// Per-label contour extraction and simplification.
//
// A frame is split into one binary submask per label. Each submask is
// dilated with a 4x4 all-ones element, its borders are traced, borders
// with too little area are dropped and the survivors are reduced with
// Douglas-Peucker. A border whose simplification degenerates is kept as
// traced.
//
// Borders are traced on the pixel-corner lattice: a vertex (x, y) is the
// top-left corner of pixel (x, y), and every contour edge separates a set
// pixel from an unset one. Filling the traced hierarchy with the even-odd
// rule at pixel centres therefore reproduces the bitmap exactly.

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "lester/image.hpp"
#include "lester/maskio.hpp"

namespace lester {

struct SubMask {
  LabelId label = 0;
  Bitmap bitmap;
};

enum class ContourRole : std::uint8_t { outer, hole };

inline const char* to_string(ContourRole role) { return role == ContourRole::outer ? "outer" : "hole"; }

// Closed polyline on the pixel-corner lattice. Outer borders have positive
// signed shoelace area (counter-clockwise with the y axis pointing up),
// holes negative. `parent` is the index of the immediately enclosing
// border in the same list: a hole's parent is the outer border of the
// component it perforates, an island's parent is the hole it sits in.
struct Contour {
  std::vector<Point> vertices;
  ContourRole role = ContourRole::outer;
  std::optional<std::size_t> parent;

  friend bool operator==(const Contour&, const Contour&) = default;
};

struct SimplifyParams {
  double alpha = 16.0;  // minimum contour area, px^2 (strict: area must exceed it)
  double tolerance = 2.0;
};

struct LabelContours {
  LabelId label = 0;
  std::vector<Contour> contours;

  friend bool operator==(const LabelContours&, const LabelContours&) = default;
};

// ---------------------------------------------------------------------------
// Submasks

// One submask per nonzero label present, in manifest order. Labels missing
// from the manifest follow in ascending id order.
inline std::vector<SubMask> split_submasks(const LabelMask& mask, const LabelTable& table) {
  std::array<std::size_t, 256> counts{};
  for (auto v : mask.cells()) ++counts[v];

  std::vector<LabelId> order;
  for (const auto& e : table.entries())
    if (counts[e.id] > 0) order.push_back(e.id);
  for (int id = 1; id < 256; ++id)
    if (counts[static_cast<std::size_t>(id)] > 0 && !table.contains(static_cast<LabelId>(id)))
      order.push_back(static_cast<LabelId>(id));

  std::vector<SubMask> out;
  out.reserve(order.size());
  for (LabelId id : order) out.push_back({id, select_label(mask, id)});
  return out;
}

inline std::vector<SubMask> split_submasks(const LabelMask& mask) {
  return split_submasks(mask, LabelTable{});
}

// ---------------------------------------------------------------------------
// Dilation

// Dilation by a 4x4 all-ones element anchored at (1, 1): output (x, y) is
// set iff some input pixel in x-2..x+1, y-2..y+1 is set. Pixels outside
// the frame count as unset. Computed as two separable 1D passes.
inline Bitmap dilate(const Bitmap& in) {
  constexpr int kBefore = 2;  // window reaches 2 pixels back ...
  constexpr int kAfter = 1;   // ... and 1 pixel forward
  const int w = in.width();
  const int h = in.height();
  Bitmap rows(w, h);
  for (int y = 0; y < h; ++y) {
    auto src = in.row(y);
    auto dst = rows.row(y);
    for (int x = 0; x < w; ++x) {
      std::uint8_t v = 0;
      for (int i = std::max(0, x - kBefore); i <= std::min(w - 1, x + kAfter) && !v; ++i) v = src[static_cast<std::size_t>(i)];
      dst[static_cast<std::size_t>(x)] = v;
    }
  }
  Bitmap out(w, h);
  for (int y = 0; y < h; ++y) {
    auto dst = out.row(y);
    for (int j = std::max(0, y - kBefore); j <= std::min(h - 1, y + kAfter); ++j) {
      auto src = rows.row(j);
      for (int x = 0; x < w; ++x) dst[static_cast<std::size_t>(x)] |= src[static_cast<std::size_t>(x)];
    }
  }
  return out;
}

inline SubMask dilate(const SubMask& sub) { return {sub.label, dilate(sub.bitmap)}; }

// ---------------------------------------------------------------------------
// Geometry helpers

template <typename P>
concept PlanarPoint = requires(const P& p) {
  { p.x } -> std::convertible_to<double>;
  { p.y } -> std::convertible_to<double>;
};

// Twice the signed shoelace area.
template <PlanarPoint P>
double signed_area2(std::span<const P> ring) {
  if (ring.size() < 3) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0, n = ring.size(); i < n; ++i) {
    const P& a = ring[i];
    const P& b = ring[(i + 1) % n];
    acc += static_cast<double>(a.x) * static_cast<double>(b.y) -
           static_cast<double>(b.x) * static_cast<double>(a.y);
  }
  return acc;
}

// Absolute shoelace area; 0 for fewer than three vertices.
inline double contour_area(const Contour& c) {
  return std::abs(signed_area2<Point>(c.vertices)) / 2.0;
}

// Distance from p to the closed segment [a, b].
template <PlanarPoint P>
double segment_distance(const P& p, const P& a, const P& b) {
  const double ax = static_cast<double>(a.x), ay = static_cast<double>(a.y);
  const double dx = static_cast<double>(b.x) - ax, dy = static_cast<double>(b.y) - ay;
  const double px = static_cast<double>(p.x) - ax, py = static_cast<double>(p.y) - ay;
  const double len2 = dx * dx + dy * dy;
  if (len2 == 0.0) return std::hypot(px, py);
  const double s = std::clamp((px * dx + py * dy) / len2, 0.0, 1.0);
  return std::hypot(px - s * dx, py - s * dy);
}

namespace detail {

// Squared distance as num / den. Exact for integer coordinates, so equal
// distances compare equal and ties break the same way everywhere.
struct SquaredDistance {
  using Int = __int128;
  Int num = 0;
  Int den = 1;

  friend bool operator<(const SquaredDistance& a, const SquaredDistance& b) { return a.num * b.den < b.num * a.den; }
  friend bool operator>(const SquaredDistance& a, const SquaredDistance& b) { return b < a; }

  bool exceeds(double tolerance) const {
    return static_cast<long double>(num) >
           static_cast<long double>(tolerance) * static_cast<long double>(tolerance) * static_cast<long double>(den);
  }
};

inline SquaredDistance squared_distance(const Point& a, const Point& b) {
  const std::int64_t dx = std::int64_t{a.x} - b.x, dy = std::int64_t{a.y} - b.y;
  return {dx * dx + dy * dy, 1};
}

inline SquaredDistance squared_segment_distance(const Point& p, const Point& a, const Point& b) {
  const std::int64_t dx = std::int64_t{b.x} - a.x, dy = std::int64_t{b.y} - a.y;
  const std::int64_t vx = std::int64_t{p.x} - a.x, vy = std::int64_t{p.y} - a.y;
  const std::int64_t len2 = dx * dx + dy * dy;
  const std::int64_t dot = vx * dx + vy * dy;
  if (len2 == 0 || dot <= 0) return squared_distance(p, a);
  if (dot >= len2) return squared_distance(p, b);
  const SquaredDistance::Int cross = SquaredDistance::Int{vx} * dy - SquaredDistance::Int{vy} * dx;
  return {cross * cross, len2};
}

// Same interface for real-valued chains, in extended precision.
struct SquaredDistanceF {
  long double value = 0;
  friend bool operator<(const SquaredDistanceF& a, const SquaredDistanceF& b) { return a.value < b.value; }
  friend bool operator>(const SquaredDistanceF& a, const SquaredDistanceF& b) { return b < a; }
  bool exceeds(double tolerance) const {
    return value > static_cast<long double>(tolerance) * static_cast<long double>(tolerance);
  }
};

template <PlanarPoint P>
auto squared_distance(const P& a, const P& b) {
  const long double dx = static_cast<long double>(a.x) - b.x, dy = static_cast<long double>(a.y) - b.y;
  return SquaredDistanceF{dx * dx + dy * dy};
}

template <PlanarPoint P>
auto squared_segment_distance(const P& p, const P& a, const P& b) {
  const long double dx = static_cast<long double>(b.x) - a.x, dy = static_cast<long double>(b.y) - a.y;
  const long double vx = static_cast<long double>(p.x) - a.x, vy = static_cast<long double>(p.y) - a.y;
  const long double len2 = dx * dx + dy * dy;
  const long double dot = vx * dx + vy * dy;
  if (len2 == 0 || dot <= 0) return squared_distance(p, a);
  if (dot >= len2) return squared_distance(p, b);
  const long double cross = vx * dy - vy * dx;
  return SquaredDistanceF{cross * cross / len2};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Border following

namespace detail {

// Directions on the corner lattice: +x, +y, -x, -y. Turning from d to
// (d + 3) % 4 is a turn towards -y when heading +x.
inline constexpr std::array<int, 4> kDx{1, 0, -1, 0};
inline constexpr std::array<int, 4> kDy{0, 1, 0, -1};

class BorderTracer {
 public:
  explicit BorderTracer(const Bitmap& bm)
      : bm_(bm),
        w_(bm.width()),
        h_(bm.height()),
        horiz_(static_cast<std::size_t>(w_) * static_cast<std::size_t>(h_ + 1), -1),
        vert_(static_cast<std::size_t>(w_ + 1) * static_cast<std::size_t>(h_), -1) {}

  std::vector<Contour> run() {
    std::vector<Contour> out;
    for (int y = 0; y < h_; ++y) {
      int last = -1;  // loop owning the last border crossed on this row
      for (int x = 0; x <= w_; ++x) {
        const bool left = set(x - 1, y);
        const bool right = set(x, y);
        if (left == right) continue;
        int& owner = vert_[vindex(x, y)];
        if (owner < 0) {
          const int id = static_cast<int>(out.size());
          Contour c = follow(x, y, right ? 3 : 1, id);
          if (last < 0) {
            c.parent = std::nullopt;
          } else {
            const Contour& prev = out[static_cast<std::size_t>(last)];
            if (c.role == prev.role)
              c.parent = prev.parent;
            else
              c.parent = static_cast<std::size_t>(last);
          }
          out.push_back(std::move(c));
        }
        last = owner;
      }
    }
    return out;
  }

 private:
  bool set(int x, int y) const { return bm_.contains(x, y) && bm_.at(x, y) != 0; }

  std::size_t hindex(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(w_) + static_cast<std::size_t>(x);
  }
  std::size_t vindex(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(w_ + 1) + static_cast<std::size_t>(x);
  }

  // Owner slot of the unit edge leaving corner (px, py) in direction d.
  int& edge_slot(int px, int py, int d) {
    switch (d) {
      case 0: return horiz_[hindex(px, py)];
      case 1: return vert_[vindex(px, py)];
      case 2: return horiz_[hindex(px - 1, py)];
      default: return vert_[vindex(px, py - 1)];
    }
  }

  // Is there a border edge leaving corner (px, py) in direction d, oriented
  // so the set pixel lies on its right-hand side in image coordinates?
  bool leaves(int px, int py, int d) const {
    const bool tl = set(px - 1, py - 1), tr = set(px, py - 1);
    const bool bl = set(px - 1, py), br = set(px, py);
    switch (d) {
      case 0: return br && !tr;
      case 1: return bl && !br;
      case 2: return tl && !bl;
      default: return tr && !tl;
    }
  }

  // Follows the loop through the vertical edge left of pixel (x, y).
  // d0 = 3 when pixel (x, y) is set (edge runs up), 1 otherwise.
  Contour follow(int x, int y, int d0, int id) {
    int px = x;
    int py = (d0 == 3) ? y + 1 : y;
    const int start_x = px, start_y = py, start_d = d0;
    int d = d0;
    std::vector<Point> corners;
    double area2 = 0.0;
    while (true) {
      edge_slot(px, py, d) = id;
      const int nx = px + kDx[static_cast<std::size_t>(d)];
      const int ny = py + kDy[static_cast<std::size_t>(d)];
      area2 += static_cast<double>(px) * ny - static_cast<double>(nx) * py;
      px = nx;
      py = ny;
      int next = -1;
      const int turn = (d + 3) % 4;
      if (leaves(px, py, turn)) {
        next = turn;  // also resolves the diagonal case so set pixels stay 8-connected
      } else {
        for (int cand : {d, (d + 1) % 4}) {
          if (leaves(px, py, cand)) {
            next = cand;
            break;
          }
        }
      }
      if (next != d) corners.push_back({px, py});
      d = next;
      if (px == start_x && py == start_y && d == start_d) break;
    }
    // Start at the top-most, then left-most corner.
    auto first = std::min_element(corners.begin(), corners.end(), [](const Point& a, const Point& b) {
      return a.y != b.y ? a.y < b.y : a.x < b.x;
    });
    std::rotate(corners.begin(), first, corners.end());
    Contour c;
    c.vertices = std::move(corners);
    c.role = area2 > 0 ? ContourRole::outer : ContourRole::hole;
    return c;
  }

  const Bitmap& bm_;
  int w_;
  int h_;
  std::vector<int> horiz_;  // edge along the top of pixel (x, y), y in 0..h
  std::vector<int> vert_;   // edge along the left of pixel (x, y), x in 0..w
};

}  // namespace detail

// Outer and hole borders of every connected component, 8-connected set
// pixels and 4-connected holes, in raster discovery order.
inline std::vector<Contour> trace_contours(const Bitmap& bm) {
  return detail::BorderTracer(bm).run();
}

inline std::vector<Contour> trace_contours(const SubMask& sub) { return trace_contours(sub.bitmap); }

// ---------------------------------------------------------------------------
// Douglas-Peucker

// Open-chain Douglas-Peucker. Endpoints are always kept; an interior
// vertex survives when it is the farthest (first on ties) from the
// segment joining its span's endpoints and that distance exceeds
// `tolerance`.
template <PlanarPoint P>
std::vector<P> simplify_open_chain(std::span<const P> chain, double tolerance) {
  const std::size_t n = chain.size();
  if (n <= 2) return {chain.begin(), chain.end()};
  std::vector<std::uint8_t> keep(n, 0);
  keep.front() = keep.back() = 1;
  std::vector<std::pair<std::size_t, std::size_t>> spans{{0, n - 1}};
  while (!spans.empty()) {
    auto [first, last] = spans.back();
    spans.pop_back();
    if (last - first < 2) continue;
    auto best = detail::squared_segment_distance(chain[first + 1], chain[first], chain[last]);
    std::size_t at = first + 1;
    for (std::size_t i = first + 2; i < last; ++i) {
      const auto d = detail::squared_segment_distance(chain[i], chain[first], chain[last]);
      if (d > best) {
        best = d;
        at = i;
      }
    }
    if (best.exceeds(tolerance)) {
      keep[at] = 1;
      spans.emplace_back(first, at);
      spans.emplace_back(at, last);
    }
  }
  std::vector<P> out;
  for (std::size_t i = 0; i < n; ++i)
    if (keep[i]) out.push_back(chain[i]);
  return out;
}

// Closed-ring Douglas-Peucker: the ring is cut at vertex 0 and at the
// vertex farthest from it (first on ties), each half is simplified as an
// open chain and the halves are rejoined.
template <PlanarPoint P>
std::vector<P> simplify_closed_ring(std::span<const P> ring, double tolerance) {
  const std::size_t n = ring.size();
  if (n < 3) return {ring.begin(), ring.end()};
  std::size_t far = 0;
  auto best = detail::squared_distance(ring[0], ring[0]);
  for (std::size_t i = 1; i < n; ++i) {
    const auto d = detail::squared_distance(ring[0], ring[i]);
    if (d > best) {
      best = d;
      far = i;
    }
  }
  if (far == 0) return {ring[0]};  // every vertex coincides

  std::vector<P> second(ring.begin() + static_cast<std::ptrdiff_t>(far), ring.end());
  second.push_back(ring[0]);
  auto a = simplify_open_chain<P>(ring.subspan(0, far + 1), tolerance);
  auto b = simplify_open_chain<P>(second, tolerance);
  a.insert(a.end(), b.begin() + 1, b.end() - 1);
  return a;
}

inline Contour simplify_dp(const Contour& c, double tolerance) {
  Contour out = c;
  out.vertices = simplify_closed_ring<Point>(c.vertices, tolerance);
  return out;
}

// True when simplification leaves a proper polygon: at least three
// vertices and nonzero area.
inline bool can_simplify(const Contour& c, double tolerance) {
  auto simplified = simplify_dp(c, tolerance);
  return simplified.vertices.size() >= 3 && contour_area(simplified) > 0.0;
}

// ---------------------------------------------------------------------------
// Whole-frame simplification

// Dilate, trace, drop borders with area <= alpha, then simplify each
// survivor or keep it as traced when simplification would degenerate.
// Parent links are renumbered to the compacted list; a kept border's
// enclosing border always has larger area, so it is kept too.
inline LabelContours simplify_submask(const SubMask& sub, const SimplifyParams& params) {
  auto traced = trace_contours(dilate(sub.bitmap));
  std::vector<std::optional<std::size_t>> remap(traced.size());
  LabelContours out{sub.label, {}};
  for (std::size_t j = 0; j < traced.size(); ++j) {
    const Contour& c = traced[j];
    if (!(contour_area(c) > params.alpha)) continue;
    remap[j] = out.contours.size();
    Contour kept = can_simplify(c, params.tolerance) ? simplify_dp(c, params.tolerance) : c;
    kept.parent = c.parent ? remap[*c.parent] : std::nullopt;
    out.contours.push_back(std::move(kept));
  }
  return out;
}

inline std::vector<LabelContours> simplify_all(std::span<const SubMask> submasks, const SimplifyParams& params) {
  std::vector<LabelContours> out;
  out.reserve(submasks.size());
  for (const auto& sub : submasks) out.push_back(simplify_submask(sub, params));
  return out;
}

inline std::vector<LabelContours> simplify_frame(const LabelMask& mask, const LabelTable& table,
                                                 const SimplifyParams& params) {
  auto subs = split_submasks(mask, table);
  return simplify_all(subs, params);
}

}  // namespace lester
