// lester: turn label-mask sequences into flat-colored rotoscope frames.
//
//   lester run --masks DIR --manifest F --palette F --out DIR [options]
//   lester validate --masks DIR --manifest F --palette F [--landmarks F]
//
// Exit codes: 0 success, 1 validation failure, 2 runtime failure.

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "lester/lester.hpp"

namespace {

struct Flags {
  std::string config;
  std::string masks, manifest, palette, landmarks, out;
  double tolerance = 0, min_area = 0, iou_threshold = 0, shadow_factor = 0;
  int shadow_dx = 0, pixelate = 1, threads = 1, feature_thickness = 2;
  std::string feature_color;
  bool verbose = false;
};

struct Options {
  CLI::Option* config;
  CLI::Option* masks;
  CLI::Option* manifest;
  CLI::Option* palette;
  CLI::Option* landmarks;
  CLI::Option* out;
  CLI::Option* tolerance;
  CLI::Option* min_area;
  CLI::Option* iou_threshold;
  CLI::Option* shadow;
  CLI::Option* shadow_factor;
  CLI::Option* shadow_dx;
  CLI::Option* features;
  CLI::Option* feature_thickness;
  CLI::Option* feature_color;
  CLI::Option* pixelate;
  CLI::Option* guide;
  CLI::Option* report;
  CLI::Option* dump_contours;
  CLI::Option* threads;
};

Options add_options(CLI::App& cmd, Flags& f, bool full) {
  Options o{};
  o.config = cmd.add_option("--config", f.config, "JSON config file; flags override its values");
  o.masks = cmd.add_option("--masks", f.masks, "directory of frame_NNNN.png label masks");
  o.manifest = cmd.add_option("--manifest", f.manifest, "manifest.json (label ids, names, z-order)");
  o.palette = cmd.add_option("--palette", f.palette, "palette.json (label id -> #RRGGBB)");
  o.landmarks = cmd.add_option("--landmarks", f.landmarks, "landmarks.json (68 points per frame)");
  o.out = cmd.add_option("--out", f.out, "output directory");
  o.tolerance = cmd.add_option("--tolerance", f.tolerance, "Douglas-Peucker tolerance in pixels (default 2)");
  o.min_area = cmd.add_option("--min-area", f.min_area, "minimum contour area in px^2 (default 16)");
  o.iou_threshold = cmd.add_option("--iou-threshold", f.iou_threshold, "tracker match threshold (default 0.3)");
  o.pixelate = cmd.add_option("--pixelate", f.pixelate, "pixelation factor; bare --pixelate means 4")
                   ->expected(0, 1)
                   ->default_str("4");
  o.threads = cmd.add_option("--threads", f.threads, "worker threads for per-frame stages");
  o.shadow = cmd.add_flag("--shadow", "add the displaced shadow copy");
  o.shadow_factor = cmd.add_option("--shadow-factor", f.shadow_factor, "shadow brightness multiplier 0..1");
  o.shadow_dx = cmd.add_option("--shadow-dx", f.shadow_dx, "shadow horizontal displacement in pixels");
  o.features = cmd.add_flag("--features", "draw facial features from landmarks");
  o.feature_thickness = cmd.add_option("--feature-thickness", f.feature_thickness, "facial feature stroke width");
  o.feature_color = cmd.add_option("--feature-color", f.feature_color, "facial feature color #RRGGBB[AA]");
  o.guide = cmd.add_flag("--guide", "also write guide_NNNN.png ID guides");
  o.report = cmd.add_flag("--report", "write report.json");
  o.dump_contours = cmd.add_flag("--dump-contours", "write contours_NNNN.json");
  if (full) cmd.add_flag("-v,--verbose", f.verbose, "print timing information");
  return o;
}

lester::PipelineConfig build_config(const Flags& f, const Options& o) {
  lester::PipelineConfig cfg;
  if (o.config->count())
    lester::apply_config_json(cfg, lester::detail::parse_json(lester::read_text_file(f.config), "config"));
  if (o.masks->count()) cfg.masks_dir = f.masks;
  if (o.manifest->count()) cfg.manifest = f.manifest;
  if (o.palette->count()) cfg.palette = f.palette;
  if (o.landmarks->count()) cfg.landmarks = lester::fs::path(f.landmarks);
  if (o.out->count()) cfg.out_dir = f.out;
  if (o.tolerance->count()) cfg.simplify.tolerance = f.tolerance;
  if (o.min_area->count()) cfg.simplify.alpha = f.min_area;
  if (o.iou_threshold->count()) cfg.iou_threshold = f.iou_threshold;
  if (o.pixelate->count()) cfg.effects.pixelate_factor = f.pixelate;
  if (o.threads->count()) cfg.threads = f.threads;
  if (o.shadow->count()) cfg.effects.shadow_enabled = true;
  if (o.shadow_factor->count()) cfg.shadow_factor = f.shadow_factor;
  if (o.shadow_dx->count()) cfg.shadow_dx = f.shadow_dx;
  if (o.features->count()) cfg.effects.features_enabled = true;
  if (o.feature_thickness->count()) cfg.effects.feature_thickness = f.feature_thickness;
  if (o.feature_color->count()) cfg.effects.feature_color = lester::parse_hex_color(f.feature_color);
  if (o.guide->count()) cfg.emit_guide = true;
  if (o.report->count()) cfg.emit_report = true;
  if (o.dump_contours->count()) cfg.dump_contours = true;
  return cfg;
}

std::string missing_inputs(const lester::PipelineConfig& cfg, bool need_out) {
  std::string missing;
  auto check = [&](const lester::fs::path& p, const char* name) {
    if (p.empty()) missing += std::string(missing.empty() ? "" : ", ") + name;
  };
  check(cfg.masks_dir, "--masks");
  check(cfg.manifest, "--manifest");
  check(cfg.palette, "--palette");
  if (need_out) check(cfg.out_dir, "--out");
  return missing;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rotoscope-style frame renderer for label-mask sequences"};
  app.require_subcommand(1);

  Flags run_flags, validate_flags;
  auto* run = app.add_subcommand("run", "render a mask sequence to RGBA frames");
  auto run_opts = add_options(*run, run_flags, true);
  auto* validate = app.add_subcommand("validate", "check inputs without rendering");
  auto validate_opts = add_options(*validate, validate_flags, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  const bool is_run = run->parsed();
  lester::PipelineConfig cfg;
  try {
    cfg = is_run ? build_config(run_flags, run_opts) : build_config(validate_flags, validate_opts);
  } catch (const lester::Error& e) {
    std::cerr << "lester: " << e.what() << "\n";
    return 1;
  }
  if (auto missing = missing_inputs(cfg, is_run); !missing.empty()) {
    std::cerr << "lester: missing required input(s): " << missing << "\n";
    return 1;
  }

  if (!is_run) {
    auto diags = lester::validate_inputs(cfg);
    for (const auto& d : diags) std::cout << d << "\n";
    if (diags.empty()) std::cout << "ok\n";
    return diags.empty() ? 0 : 1;
  }

  auto result = lester::run_pipeline(cfg);
  if (result.status != 0) {
    std::cerr << "lester: " << result.message << "\n";
    return result.status;
  }
  if (run_flags.verbose) {
    std::fprintf(stderr, "frames written: %zu\nslowest contour stage: %.4f s\n", result.frames_written,
                 result.contour_seconds_max);
    if (result.report)
      std::fprintf(stderr, "label flips: %d, mean region IoU: %.4f, mean vertices: %.2f\n",
                   result.report->label_flip_count, result.report->mean_region_iou,
                   result.report->mean_vertex_count);
  }
  return 0;
}
