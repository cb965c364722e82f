#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lester/error.hpp"

namespace lester {

using LabelId = std::uint8_t;

inline constexpr LabelId kBackground = 0;

struct Point {
  int x = 0;
  int y = 0;
  friend bool operator==(const Point&, const Point&) = default;
  friend auto operator<=>(const Point&, const Point&) = default;
};

struct PointF {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const PointF&, const PointF&) = default;
};

struct Rgba {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  std::uint8_t a = 0;
  friend bool operator==(const Rgba&, const Rgba&) = default;
};
static_assert(sizeof(Rgba) == 4);

inline constexpr Rgba kTransparent{0, 0, 0, 0};

// Row-major 2D grid. Out-of-range reads through value_or() return a
// caller-supplied fallback; at() is unchecked.
template <typename T>
class Grid {
 public:
  using value_type = T;

  Grid() = default;
  Grid(int width, int height, T fill = T{})
      : width_(width), height_(height) {
    if (width < 0 || height < 0)
      throw DimensionError("negative grid dimensions");
    cells_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  }
  Grid(int width, int height, std::vector<T> cells)
      : width_(width), height_(height), cells_(std::move(cells)) {
    if (width < 0 || height < 0 ||
        cells_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
      throw DimensionError("grid size does not match " + std::to_string(width) + "x" +
                           std::to_string(height));
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return cells_.empty(); }
  std::size_t size() const noexcept { return cells_.size(); }

  bool contains(int x, int y) const noexcept {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }

  T& at(int x, int y) noexcept { return cells_[index(x, y)]; }
  const T& at(int x, int y) const noexcept { return cells_[index(x, y)]; }

  T value_or(int x, int y, T fallback) const noexcept {
    return contains(x, y) ? at(x, y) : fallback;
  }

  std::span<T> row(int y) noexcept {
    return {cells_.data() + index(0, y), static_cast<std::size_t>(width_)};
  }
  std::span<const T> row(int y) const noexcept {
    return {cells_.data() + index(0, y), static_cast<std::size_t>(width_)};
  }

  std::span<T> cells() noexcept { return cells_; }
  std::span<const T> cells() const noexcept { return cells_; }

  bool same_shape(const Grid& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> cells_;
};

// Per-frame grid of label IDs, 0 = background.
using LabelMask = Grid<LabelId>;

// Binary grid, 0 = unset, 1 = set.
using Bitmap = Grid<std::uint8_t>;

using RasterRGBA = Grid<Rgba>;

template <typename T>
void require_same_shape(const Grid<T>& a, const Grid<T>& b, const char* what) {
  if (!a.same_shape(b))
    throw DimensionError(std::string(what) + ": dimension mismatch (" +
                         std::to_string(a.width()) + "x" + std::to_string(a.height()) + " vs " +
                         std::to_string(b.width()) + "x" + std::to_string(b.height()) + ")");
}

inline std::size_t count_set(const Bitmap& bm) {
  std::size_t n = 0;
  for (auto v : bm.cells()) n += (v != 0);
  return n;
}

// Binary mask of the pixels carrying `label`.
inline Bitmap select_label(const LabelMask& mask, LabelId label) {
  Bitmap out(mask.width(), mask.height());
  auto src = mask.cells();
  auto dst = out.cells();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = (src[i] == label);
  return out;
}

}  // namespace lester
