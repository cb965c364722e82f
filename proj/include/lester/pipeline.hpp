#pragma once

// End-to-end driver: masks in, RGBA frames (and optional guides, contour
// dumps and a report) out.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "lester/contours.hpp"
#include "lester/effects.hpp"
#include "lester/error.hpp"
#include "lester/maskio.hpp"
#include "lester/metrics.hpp"
#include "lester/render.hpp"
#include "lester/tracker.hpp"

namespace lester {

struct PipelineConfig {
  fs::path masks_dir;
  fs::path manifest;
  fs::path palette;
  std::optional<fs::path> landmarks;
  fs::path out_dir;
  SimplifyParams simplify;
  EffectConfig effects;
  // Unset means "take it from the palette file".
  std::optional<double> shadow_factor;
  std::optional<int> shadow_dx;
  double iou_threshold = kDefaultIouThreshold;
  bool emit_guide = false;
  bool emit_report = false;
  bool dump_contours = false;
  int threads = 1;
};

// Overlays keys present in a JSON config document onto `cfg`.
inline void apply_config_json(PipelineConfig& cfg, const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("config: expected a JSON object");
  try {
    auto path = [&](const char* key, fs::path& dst) {
      if (j.contains(key)) dst = j[key].get<std::string>();
    };
    path("masks", cfg.masks_dir);
    path("manifest", cfg.manifest);
    path("palette", cfg.palette);
    path("out", cfg.out_dir);
    if (j.contains("landmarks")) cfg.landmarks = fs::path(j["landmarks"].get<std::string>());
    if (j.contains("tolerance")) cfg.simplify.tolerance = j["tolerance"].get<double>();
    if (j.contains("min_area")) cfg.simplify.alpha = j["min_area"].get<double>();
    if (j.contains("iou_threshold")) cfg.iou_threshold = j["iou_threshold"].get<double>();
    if (j.contains("shadow")) cfg.effects.shadow_enabled = j["shadow"].get<bool>();
    if (j.contains("shadow_factor")) cfg.shadow_factor = j["shadow_factor"].get<double>();
    if (j.contains("shadow_dx")) cfg.shadow_dx = j["shadow_dx"].get<int>();
    if (j.contains("features")) cfg.effects.features_enabled = j["features"].get<bool>();
    if (j.contains("feature_thickness")) cfg.effects.feature_thickness = j["feature_thickness"].get<int>();
    if (j.contains("feature_color")) cfg.effects.feature_color = parse_hex_color(j["feature_color"].get<std::string>());
    if (j.contains("pixelate")) cfg.effects.pixelate_factor = j["pixelate"].get<int>();
    if (j.contains("guide")) cfg.emit_guide = j["guide"].get<bool>();
    if (j.contains("report")) cfg.emit_report = j["report"].get<bool>();
    if (j.contains("dump_contours")) cfg.dump_contours = j["dump_contours"].get<bool>();
    if (j.contains("threads")) cfg.threads = j["threads"].get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
}

// Range checks on numeric parameters; empty when all are in range.
inline std::vector<std::string> parameter_diagnostics(const PipelineConfig& cfg) {
  std::vector<std::string> out;
  if (!(cfg.simplify.alpha >= 0.0)) out.emplace_back("min-area must be >= 0");
  if (!(cfg.simplify.tolerance >= 0.0)) out.emplace_back("tolerance must be >= 0");
  if (!(cfg.iou_threshold > 0.0 && cfg.iou_threshold <= 1.0)) out.emplace_back("iou-threshold must lie in (0, 1]");
  if (cfg.shadow_factor && !(*cfg.shadow_factor >= 0.0 && *cfg.shadow_factor <= 1.0))
    out.emplace_back("shadow-factor must lie in [0, 1]");
  if (cfg.effects.feature_thickness < 1) out.emplace_back("feature thickness must be >= 1");
  if (cfg.effects.pixelate_factor < 1) out.emplace_back("pixelate factor must be >= 1");
  if (cfg.threads < 1) out.emplace_back("threads must be >= 1");
  return out;
}

// Dry run over all inputs. Collects every problem instead of stopping at
// the first; an empty result means run_pipeline has everything it needs.
inline std::vector<std::string> validate_inputs(const PipelineConfig& cfg) {
  std::vector<std::string> diags = parameter_diagnostics(cfg);

  std::optional<LabelTable> table;
  try {
    table = parse_manifest(read_text_file(cfg.manifest));
  } catch (const Error& e) {
    diags.emplace_back(e.what());
  }

  std::optional<Palette> palette;
  try {
    palette = parse_palette(read_text_file(cfg.palette));
  } catch (const Error& e) {
    diags.emplace_back(e.what());
  }
  if (table && palette)
    for (const auto& e : table->entries())
      if (!palette->color_of(e.id))
        diags.push_back("palette: no color for label " + std::to_string(e.id) + " (" + e.name + ")");

  if (cfg.landmarks) {
    try {
      auto doc = detail::parse_json(read_text_file(*cfg.landmarks), "landmarks");
      for (auto& d : landmark_diagnostics(doc)) diags.push_back(std::move(d));
    } catch (const Error& e) {
      diags.emplace_back(e.what());
    }
  }

  try {
    auto files = list_mask_frames(cfg.masks_dir);
    std::optional<std::pair<int, int>> dims;
    for (std::size_t i = 0; i < files.size(); ++i) {
      try {
        LabelMask m = read_label_png(files[i]);
        if (!dims) {
          dims = {m.width(), m.height()};
          if (cfg.effects.pixelate_factor > std::min(m.width(), m.height()))
            diags.push_back("pixelate factor " + std::to_string(cfg.effects.pixelate_factor) +
                            " exceeds frame size");
        } else if (dims->first != m.width() || dims->second != m.height()) {
          diags.push_back("frame " + std::to_string(i) + ": size " + std::to_string(m.width()) + "x" +
                          std::to_string(m.height()) + " differs from frame 0");
        }
        if (table)
          if (auto bad = first_unknown_label(m, *table))
            diags.push_back("frame " + std::to_string(i) + ": unknown label " + std::to_string(*bad));
      } catch (const Error& e) {
        diags.push_back("frame " + std::to_string(i) + ": " + e.what());
      }
    }
  } catch (const Error& e) {
    diags.emplace_back(e.what());
  }
  return diags;
}

struct PipelineResult {
  int status = 0;  // 0 success, 1 invalid input, 2 runtime failure
  std::string message;
  std::size_t frames_written = 0;
  std::optional<ConsistencyReport> report;
  double contour_seconds_max = 0.0;  // slowest per-frame contour stage
};

inline nlohmann::ordered_json contours_to_json(const std::vector<LabelContours>& layers) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& layer : layers)
    for (const auto& c : layer.contours) {
      nlohmann::ordered_json e;
      e["label_id"] = layer.label;
      e["role"] = to_string(c.role);
      e["parent"] = c.parent ? nlohmann::ordered_json(*c.parent) : nlohmann::ordered_json(nullptr);
      auto verts = nlohmann::ordered_json::array();
      for (const auto& p : c.vertices) verts.push_back({p.x, p.y});
      e["vertices"] = std::move(verts);
      arr.push_back(std::move(e));
    }
  return arr;
}

namespace detail {

struct FrameOutput {
  std::vector<std::uint8_t> frame_png;
  std::vector<std::uint8_t> guide_png;
  std::string contours_json;
  std::vector<LabelContours> contours;
  double contour_seconds = 0.0;
  std::string error;  // nonempty on failure
};

inline std::vector<std::uint8_t> to_bytes(const std::string& s) { return {s.begin(), s.end()}; }

// Calls work(i) for i in [begin, end) on up to `threads` workers.
template <typename Work>
void parallel_for(std::size_t begin, std::size_t end, int threads, Work&& work) {
  const std::size_t n = end - begin;
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), n);
  if (workers <= 1) {
    for (std::size_t i = begin; i < end; ++i) work(i);
    return;
  }
  std::atomic<std::size_t> next{begin};
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < end; i = next++) work(i);
    });
}

}  // namespace detail

// Runs every stage. Tracking is a sequential pass over the whole clip;
// the per-frame stages then run on `threads` workers in batches, and each
// batch is committed to disk in frame order, so a failure leaves only
// complete frames preceding the failing one. Output bytes do not depend
// on the thread count.
inline PipelineResult run_pipeline(const PipelineConfig& cfg) {
  PipelineResult result;
  auto fail = [&](int status, std::string msg) {
    result.status = status;
    result.message = std::move(msg);
    return result;
  };

  if (auto diags = parameter_diagnostics(cfg); !diags.empty()) return fail(1, diags.front());

  LabelTable table;
  Palette palette;
  LandmarkMap landmarks;
  FrameSequence input;
  try {
    table = parse_manifest(read_text_file(cfg.manifest));
    palette = parse_palette(read_text_file(cfg.palette));
    if (cfg.landmarks) landmarks = load_landmarks(read_text_file(*cfg.landmarks));
    input = load_mask_sequence(cfg.masks_dir, table);
  } catch (const Error& e) {
    return fail(1, std::string("[load] ") + e.what());
  }

  EffectConfig effects = cfg.effects;
  effects.shadow_factor = cfg.shadow_factor.value_or(palette.shadow_factor);
  effects.shadow_dx = cfg.shadow_dx.value_or(palette.shadow_dx);
  if (effects.pixelate_factor > std::min(input.width(), input.height()))
    return fail(1, "[load] pixelate factor " + std::to_string(effects.pixelate_factor) + " exceeds frame size");

  TrackResult tracked;
  try {
    tracked = track_sequence(input, cfg.iou_threshold);
  } catch (const Error& e) {
    return fail(2, std::string("[track] ") + e.what());
  }

  // Canonical ids are colored and stacked like the label they originated
  // from.
  Palette effective = palette;
  effective.colors.clear();
  std::vector<LabelEntry> z_entries;
  {
    std::vector<std::pair<std::size_t, LabelId>> order;
    for (const auto& [canon, origin] : tracked.origin) {
      if (auto c = palette.color_of(origin)) effective.colors[canon] = *c;
      order.emplace_back(table.z_index(origin).value_or(std::numeric_limits<std::size_t>::max()), canon);
    }
    std::sort(order.begin(), order.end());
    for (const auto& [z, canon] : order) z_entries.push_back({canon, "#" + std::to_string(canon)});
  }
  const LabelTable canonical_table(std::move(z_entries));

  try {
    fs::create_directories(cfg.out_dir);
  } catch (const fs::filesystem_error& e) {
    return fail(2, std::string("[write] ") + e.what());
  }

  const std::size_t n = tracked.sequence.frames.size();
  const int w = input.width();
  const int h = input.height();
  std::vector<std::vector<LabelContours>> all_contours(n);

  auto process = [&](std::size_t i, detail::FrameOutput& out) {
    std::string stage = "contours";
    try {
      const LabelMask& mask = tracked.sequence.frames[i];
      const auto t0 = std::chrono::steady_clock::now();
      auto layers = simplify_frame(mask, canonical_table, cfg.simplify);
      out.contour_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

      stage = "render";
      for (const auto& layer : layers)
        if (!effective.color_of(layer.label))
          throw RenderError("no color for label " + std::to_string(tracked.origin.at(layer.label)));
      RenderPlan plan = make_render_plan(layers, canonical_table, effective);
      RasterRGBA img = render_frame(plan, w, h);

      stage = "effects";
      auto lm = landmarks.find(static_cast<int>(i));
      img = apply_effects(std::move(img), effects, lm == landmarks.end() ? nullptr : &lm->second);

      stage = "encode";
      out.frame_png = encode_png(img);
      if (cfg.emit_guide) out.guide_png = encode_png(render_id_guide(plan, w, h));
      if (cfg.dump_contours) out.contours_json = contours_to_json(layers).dump(1) + "\n";
      out.contours = std::move(layers);
    } catch (const std::exception& e) {
      out.error = "frame " + std::to_string(i) + " [" + stage + "]: " + e.what();
    }
  };

  const std::size_t batch = static_cast<std::size_t>(std::max(cfg.threads, 1)) * 2;
  for (std::size_t start = 0; start < n; start += batch) {
    const std::size_t stop = std::min(n, start + batch);
    std::vector<detail::FrameOutput> outputs(stop - start);
    detail::parallel_for(start, stop, cfg.threads, [&](std::size_t i) { process(i, outputs[i - start]); });
    for (std::size_t i = start; i < stop; ++i) {
      auto& o = outputs[i - start];
      if (!o.error.empty()) return fail(2, o.error);
      try {
        write_file_atomic(cfg.out_dir / frame_file_name("out_", i), o.frame_png);
        if (cfg.emit_guide) write_file_atomic(cfg.out_dir / frame_file_name("guide_", i), o.guide_png);
        if (cfg.dump_contours)
          write_file_atomic(cfg.out_dir / (frame_stem("contours_", i) + ".json"), detail::to_bytes(o.contours_json));
      } catch (const Error& e) {
        return fail(2, "frame " + std::to_string(i) + " [write]: " + e.what());
      }
      result.contour_seconds_max = std::max(result.contour_seconds_max, o.contour_seconds);
      all_contours[i] = std::move(o.contours);
      ++result.frames_written;
    }
  }

  result.report = make_report(tracked.sequence, all_contours);
  if (cfg.emit_report) {
    try {
      write_file_atomic(cfg.out_dir / "report.json", detail::to_bytes(to_json(*result.report).dump(2) + "\n"));
    } catch (const Error& e) {
      return fail(2, std::string("[report] ") + e.what());
    }
  }
  return result;
}

}  // namespace lester
