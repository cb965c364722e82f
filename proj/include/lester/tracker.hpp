#pragma once

// Keeps label IDs temporally consistent: every frame is matched against
// the already relabeled previous frame by region overlap, and each
// incoming label either inherits the ID of the region it continues or
// gets a fresh one.

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "lester/error.hpp"
#include "lester/image.hpp"
#include "lester/maskio.hpp"

namespace lester {

inline constexpr double kDefaultIouThreshold = 0.3;

// |a & b| / |a | b|, 0 when both are empty.
inline double iou(const Bitmap& a, const Bitmap& b) {
  require_same_shape(a, b, "iou");
  std::size_t inter = 0, uni = 0;
  auto ca = a.cells();
  auto cb = b.cells();
  for (std::size_t i = 0; i < ca.size(); ++i) {
    const bool x = ca[i] != 0, y = cb[i] != 0;
    inter += (x && y);
    uni += (x || y);
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

// Pixel statistics of a pair of label masks: per-label areas, joint
// counts and the raster index of each label's first pixel.
class OverlapTable {
 public:
  OverlapTable(const LabelMask& prev, const LabelMask& curr) : joint_(256 * 256, 0) {
    require_same_shape(prev, curr, "label overlap");
    first_curr_.fill(std::numeric_limits<std::size_t>::max());
    auto p = prev.cells();
    auto c = curr.cells();
    for (std::size_t i = 0; i < p.size(); ++i) {
      ++area_prev_[p[i]];
      ++area_curr_[c[i]];
      ++joint_[std::size_t{p[i]} * 256 + c[i]];
      if (first_curr_[c[i]] == std::numeric_limits<std::size_t>::max()) first_curr_[c[i]] = i;
    }
  }

  std::uint64_t prev_area(LabelId l) const { return area_prev_[l]; }
  std::uint64_t curr_area(LabelId l) const { return area_curr_[l]; }
  std::uint64_t intersection(LabelId p, LabelId c) const { return joint_[std::size_t{p} * 256 + c]; }
  std::uint64_t union_size(LabelId p, LabelId c) const {
    return area_prev_[p] + area_curr_[c] - intersection(p, c);
  }
  double iou(LabelId p, LabelId c) const {
    const auto u = union_size(p, c);
    return u == 0 ? 0.0 : static_cast<double>(intersection(p, c)) / static_cast<double>(u);
  }
  std::size_t first_pixel_curr(LabelId c) const { return first_curr_[c]; }

  std::vector<LabelId> prev_labels() const { return present(area_prev_); }
  std::vector<LabelId> curr_labels() const { return present(area_curr_); }

 private:
  static std::vector<LabelId> present(const std::array<std::uint64_t, 256>& area) {
    std::vector<LabelId> out;
    for (int l = 1; l < 256; ++l)
      if (area[static_cast<std::size_t>(l)] > 0) out.push_back(static_cast<LabelId>(l));
    return out;
  }

  std::array<std::uint64_t, 256> area_prev_{};
  std::array<std::uint64_t, 256> area_curr_{};
  std::array<std::size_t, 256> first_curr_{};
  std::vector<std::uint64_t> joint_;
};

struct LabelMapping {
  int frame_index = 0;
  std::map<LabelId, LabelId> mapping;  // incoming id -> canonical id
  std::set<LabelId> fresh;             // canonical ids allocated for this frame

  LabelId operator()(LabelId incoming) const {
    if (incoming == kBackground) return kBackground;
    auto it = mapping.find(incoming);
    return it == mapping.end() ? incoming : it->second;
  }
};

// Greedy overlap matching of `curr`'s labels onto `prev`'s.
//
// Every (prev, curr) label pair is scored by IoU; pairs are accepted in
// descending IoU order while both sides are still free and the IoU is at
// least `threshold`. Equal scores are ordered by smaller prev id, then by
// the raster position of the curr region's first pixel (which does not
// depend on how the incoming labels happen to be numbered). Unmatched curr
// labels receive the lowest positive ids not in `reserved`, in raster
// order of their first pixel. `reserved` defaults to the labels of `prev`.
inline LabelMapping match_labels(const LabelMask& prev, const LabelMask& curr, double threshold,
                                 const std::set<LabelId>* reserved = nullptr) {
  if (!(threshold > 0.0 && threshold <= 1.0))
    throw ValidationError("iou threshold must lie in (0, 1]");
  const OverlapTable table(prev, curr);
  const auto prev_ids = table.prev_labels();
  const auto curr_ids = table.curr_labels();

  struct Candidate {
    LabelId prev, curr;
    std::uint64_t inter, uni;
  };
  std::vector<Candidate> pairs;
  for (LabelId p : prev_ids)
    for (LabelId c : curr_ids) {
      const auto inter = table.intersection(p, c);
      if (inter == 0) continue;
      const auto uni = table.union_size(p, c);
      if (static_cast<double>(inter) < threshold * static_cast<double>(uni)) continue;
      pairs.push_back({p, c, inter, uni});
    }
  // Exact rational comparison so ties are real ties.
  std::sort(pairs.begin(), pairs.end(), [&](const Candidate& a, const Candidate& b) {
    const auto lhs = static_cast<unsigned __int128>(a.inter) * b.uni;
    const auto rhs = static_cast<unsigned __int128>(b.inter) * a.uni;
    if (lhs != rhs) return lhs > rhs;
    if (a.prev != b.prev) return a.prev < b.prev;
    return table.first_pixel_curr(a.curr) < table.first_pixel_curr(b.curr);
  });

  LabelMapping out;
  std::array<bool, 256> prev_taken{};
  for (const auto& cand : pairs) {
    if (prev_taken[cand.prev] || out.mapping.contains(cand.curr)) continue;
    prev_taken[cand.prev] = true;
    out.mapping[cand.curr] = cand.prev;
  }

  std::set<LabelId> used = reserved ? *reserved : std::set<LabelId>(prev_ids.begin(), prev_ids.end());
  for (const auto& [in, canon] : out.mapping) used.insert(canon);

  std::vector<LabelId> unmatched;
  for (LabelId c : curr_ids)
    if (!out.mapping.contains(c)) unmatched.push_back(c);
  std::sort(unmatched.begin(), unmatched.end(), [&](LabelId a, LabelId b) {
    return table.first_pixel_curr(a) < table.first_pixel_curr(b);
  });
  int next = 1;
  for (LabelId c : unmatched) {
    while (next < 256 && used.contains(static_cast<LabelId>(next))) ++next;
    if (next >= 256) throw ValidationError("tracker: more than 255 distinct labels allocated");
    const auto id = static_cast<LabelId>(next);
    out.mapping[c] = id;
    out.fresh.insert(id);
    used.insert(id);
  }
  return out;
}

inline LabelMask apply_mapping(const LabelMask& mask, const LabelMapping& m) {
  std::array<LabelId, 256> lut{};
  for (int l = 0; l < 256; ++l) lut[static_cast<std::size_t>(l)] = m(static_cast<LabelId>(l));
  LabelMask out = mask;
  for (auto& v : out.cells()) v = lut[v];
  return out;
}

struct TrackResult {
  FrameSequence sequence;
  std::vector<LabelMapping> mappings;  // one per frame; frame 0 is the identity
  // Incoming label each canonical id was first seen as. Colors and
  // z-order of a canonical id are those of its origin.
  std::map<LabelId, LabelId> origin;
};

// Relabels a whole sequence. Frame 0 passes through; frame k is matched
// against relabeled frame k-1. Fresh ids never reuse an id allocated
// earlier in the sequence. Must run sequentially over frames.
inline TrackResult track_sequence(const FrameSequence& seq, double threshold = kDefaultIouThreshold) {
  if (seq.frames.empty()) throw SequenceError("cannot track an empty sequence");
  TrackResult out;
  out.sequence.fps = seq.fps;
  out.sequence.frames.reserve(seq.frames.size());

  std::set<LabelId> allocated;
  {
    LabelMapping identity;
    std::array<bool, 256> seen{};
    for (auto v : seq.frames[0].cells()) seen[v] = true;
    for (int l = 1; l < 256; ++l)
      if (seen[static_cast<std::size_t>(l)]) {
        const auto id = static_cast<LabelId>(l);
        identity.mapping[id] = id;
        allocated.insert(id);
        out.origin[id] = id;
      }
    out.mappings.push_back(std::move(identity));
    out.sequence.frames.push_back(seq.frames[0]);
  }
  for (std::size_t k = 1; k < seq.frames.size(); ++k) {
    if (!seq.frames[k].same_shape(seq.frames[0]))
      throw DimensionError("frame " + std::to_string(k) + ": dimension mismatch");
    LabelMapping m = match_labels(out.sequence.frames.back(), seq.frames[k], threshold, &allocated);
    m.frame_index = static_cast<int>(k);
    for (const auto& [in, canon] : m.mapping) {
      if (m.fresh.contains(canon)) out.origin[canon] = in;
      allocated.insert(canon);
    }
    out.sequence.frames.push_back(apply_mapping(seq.frames[k], m));
    out.mappings.push_back(std::move(m));
  }
  return out;
}

inline FrameSequence relabel_sequence(const FrameSequence& seq, double threshold = kDefaultIouThreshold) {
  return track_sequence(seq, threshold).sequence;
}

}  // namespace lester
