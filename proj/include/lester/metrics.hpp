#pragma once

// Computable stand-ins for subjective temporal consistency and shape
// simplicity ratings.

#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "lester/contours.hpp"
#include "lester/maskio.hpp"
#include "lester/tracker.hpp"

namespace lester {

inline constexpr double kFlipIou = 0.5;

struct FrameOverlap {
  int frame = 0;
  std::map<LabelId, double> iou_with_previous;  // labels present in both frames
};

struct ConsistencyReport {
  int frames = 0;
  int label_flip_count = 0;
  double mean_region_iou = 0.0;  // 0 when no label persists across frames
  double mean_vertex_count = 0.0;
  std::vector<FrameOverlap> per_frame;
};

// Identity swaps: (frame, label) events where the label's region overlaps
// its own previous region with IoU < 0.5 while some other label's previous
// region overlaps it with IoU > 0.5.
inline int label_flip_count(const FrameSequence& seq) {
  int flips = 0;
  for (std::size_t k = 1; k < seq.frames.size(); ++k) {
    const OverlapTable t(seq.frames[k - 1], seq.frames[k]);
    const auto prev_ids = t.prev_labels();
    for (LabelId l : t.curr_labels()) {
      if (!(t.iou(l, l) < kFlipIou)) continue;
      for (LabelId m : prev_ids) {
        if (m != l && t.iou(m, l) > kFlipIou) {
          ++flips;
          break;
        }
      }
    }
  }
  return flips;
}

inline std::vector<FrameOverlap> region_overlaps(const FrameSequence& seq) {
  std::vector<FrameOverlap> out;
  for (std::size_t k = 1; k < seq.frames.size(); ++k) {
    const OverlapTable t(seq.frames[k - 1], seq.frames[k]);
    FrameOverlap fo;
    fo.frame = static_cast<int>(k);
    for (LabelId l : t.curr_labels())
      if (t.prev_area(l) > 0) fo.iou_with_previous[l] = t.iou(l, l);
    out.push_back(std::move(fo));
  }
  return out;
}

// Average vertex count over all contours of all frames; 0 when empty.
inline double mean_vertex_count(std::span<const std::vector<LabelContours>> frames) {
  std::size_t contours = 0, vertices = 0;
  for (const auto& frame : frames)
    for (const auto& layer : frame)
      for (const auto& c : layer.contours) {
        ++contours;
        vertices += c.vertices.size();
      }
  return contours == 0 ? 0.0 : static_cast<double>(vertices) / static_cast<double>(contours);
}

inline ConsistencyReport make_report(const FrameSequence& relabeled,
                                     std::span<const std::vector<LabelContours>> contours) {
  ConsistencyReport r;
  r.frames = static_cast<int>(relabeled.frames.size());
  r.label_flip_count = label_flip_count(relabeled);
  r.per_frame = region_overlaps(relabeled);
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& fo : r.per_frame)
    for (const auto& [label, v] : fo.iou_with_previous) {
      sum += v;
      ++n;
    }
  r.mean_region_iou = n == 0 ? 0.0 : sum / static_cast<double>(n);
  r.mean_vertex_count = mean_vertex_count(contours);
  return r;
}

inline nlohmann::ordered_json to_json(const ConsistencyReport& r) {
  nlohmann::ordered_json j;
  j["note"] =
      "objective proxies for temporal consistency and shape simplicity; these are not "
      "mean opinion scores";
  j["frames"] = r.frames;
  j["label_flip_count"] = r.label_flip_count;
  j["mean_region_iou"] = r.mean_region_iou;
  j["mean_vertex_count"] = r.mean_vertex_count;
  auto per = nlohmann::ordered_json::array();
  for (const auto& fo : r.per_frame) {
    nlohmann::ordered_json e;
    e["frame"] = fo.frame;
    nlohmann::ordered_json ious = nlohmann::ordered_json::object();
    for (const auto& [label, v] : fo.iou_with_previous) ious[std::to_string(label)] = v;
    e["iou"] = std::move(ious);
    per.push_back(std::move(e));
  }
  j["per_frame"] = std::move(per);
  return j;
}

}  // namespace lester
