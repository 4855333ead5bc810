#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "bodyscan/config.hpp"
#include "bodyscan/cspace.hpp"
#include "bodyscan/kneedle.hpp"
#include "bodyscan/metrics.hpp"
#include "bodyscan/planner.hpp"
#include "bodyscan/ply_io.hpp"
#include "bodyscan/sensor_sim.hpp"
#include "bodyscan/stitcher.hpp"

namespace bodyscan {

constexpr std::uint64_t kSimSeedStream = 0x5e5510f5;

struct WorkflowOptions {
  std::string out_dir;                     // empty: compute only, write nothing
  const Dictionary* dictionary = nullptr;  // reuse a prebuilt dictionary
  unsigned num_threads = 0;
  bool write_timing = true;
};

struct WorkflowResult {
  SelectionResult plan;
  std::vector<NavPath> legs;           // start -> stop1 -> ... in stop order
  StitchResult stitch;
  CoverageReport report;
  std::size_t dictionary_records = 0;
  std::size_t dictionary_views = 0;
  double mean_analysis_seconds = 0.0;  // per base candidate
  double wall_seconds = 0.0;
};

namespace detail {

inline void write_plan_txt(const std::string& path, const ScenarioConfig& cfg,
                           const SelectionResult& plan, const std::vector<NavPath>& legs,
                           double estimated_time_s) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path);
  os << "scan plan\n";
  os << "body " << cfg.body_kind << ", resolution " << detail::dtos(cfg.resolution)
     << " m, workspace " << workspace_name(cfg.workspace.kind) << "\n";
  os << "stops " << plan.stops.size() << ", planned coverage "
     << fmt("%.2f", plan.coverage_percent) << "% of planning samples\n\n";
  // selection never revisits a stop, so sequence entries per stop are contiguous
  std::size_t seq_cursor = 0;
  for (std::size_t s = 0; s < plan.stops.size(); ++s) {
    const auto& stop = plan.stops[s];
    os << "stop " << (s + 1) << ": base x " << fmt("%.3f", stop.base.x) << " y "
       << fmt("%.3f", stop.base.y) << " heading " << fmt("%.3f", stop.base.heading);
    if (s < legs.size()) os << "  (drive " << fmt("%.2f", legs[s].cost) << " m)";
    os << "\n";
    for (const std::size_t v : stop.view_indices) {
      os << "  view " << v << "  gain " << plan.sequence[seq_cursor].gain << "\n";
      ++seq_cursor;
    }
  }
  os << "\nestimated mission time " << fmt("%.1f", estimated_time_s) << " s\n";
  if (!os) throw IoError("failed writing " + path);
}

}  // namespace detail

/// End-to-end scenario: model the body, analyze base candidates, pick views
/// greedily, drive between stops, simulate every capture, stitch, and score
/// coverage per stop against a dense reference sampling of the same body.
inline WorkflowResult run_workflow(const ScenarioConfig& cfg, const WorkflowOptions& options = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  validate_config(cfg);

  const SurfaceModel model_plan = make_model(cfg, cfg.resolution);
  const SurfaceModel model_eval = make_model(cfg, cfg.eval_resolution);

  Dictionary built;
  const Dictionary* dict = options.dictionary;
  if (!dict) {
    built = build_dictionary(model_plan, cfg.workspace, cfg.robot, cfg.camera,
                             cfg.candidates, cfg.views, dictionary_params_hash(cfg),
                             options.num_threads);
    dict = &built;
  }

  WorkflowResult result;
  result.dictionary_records = dict->records.size();
  result.dictionary_views = dict->view_count();
  result.mean_analysis_seconds = dict->mean_analysis_seconds();

  result.plan = greedy_select(*dict, cfg.planner);

  // navigation legs in stop order, from the configured start position; a start
  // outside the drivable region (narrow / one-side rooms) docks at its nearest
  // free cell first
  const OccupancyGrid grid = make_floor_grid(cfg.workspace, cfg.couch, cfg.robot,
                                             cfg.nav.cell_size);
  Vec2 from = grid.nearest_free(Vec2(cfg.nav.start_x, cfg.nav.start_y));
  for (const auto& stop : result.plan.stops) {
    result.legs.push_back(plan_base_path(grid, from, stop.base.position()));
    from = stop.base.position();
  }

  // simulate captures in plan order; reality is the dense model
  Rng rng(mix_seed(cfg.seed, kSimSeedStream));
  std::vector<ScanFrame> frames;
  std::vector<std::size_t> frames_per_stop;
  for (const auto& stop : result.plan.stops) {
    const BaseRecord& record = dict->records[stop.record_index];
    for (const std::size_t v : stop.view_indices)
      frames.push_back(render_scan(model_eval, record.views[v].camera_pose, cfg.camera,
                                   cfg.jitter, rng));
    frames_per_stop.push_back(stop.view_indices.size());
  }
  if (frames.empty()) throw NoFramesError();

  StitchParams stitch_params;
  stitch_params.icp = cfg.icp;
  stitch_params.outliers = cfg.outliers;
  result.stitch = stitch_full(frames, stitch_params);

  // per-stop cumulative coverage: expected from commanded poses, realized
  // from the stitched (pre-outlier-filter) union so the curve cannot dip
  CoverageReport report;
  report.reference_points = model_eval.samples.size();
  std::vector<char> expected_mask(model_eval.samples.size(), 0);
  PointCloud realized_union;
  std::size_t frame_cursor = 0;
  double travel_cum = 0.0;
  for (std::size_t s = 0; s < result.plan.stops.size(); ++s) {
    const auto& stop = result.plan.stops[s];
    const BaseRecord& record = dict->records[stop.record_index];
    for (const std::size_t v : stop.view_indices)
      for (const std::size_t idx :
           visible_points(model_eval, record.views[v].camera_pose, cfg.camera))
        expected_mask[idx] = 1;
    for (std::size_t k = 0; k < frames_per_stop[s]; ++k, ++frame_cursor)
      realized_union.append(result.stitch.frame_clouds[frame_cursor]);

    StageReport stage;
    stage.stage = int(s + 1);
    stage.base = stop.base;
    stage.views = int(stop.view_indices.size());
    std::size_t exp = 0;
    for (const char c : expected_mask) exp += (c != 0);
    stage.expected_coverage = 100.0 * double(exp) / double(expected_mask.size());
    stage.realized_coverage = coverage(realized_union, model_eval.samples, cfg.eval_resolution);
    stage.mean_error_m = mean_surface_distance(realized_union, model_eval.samples);
    travel_cum += result.legs[s].cost;
    stage.travel_m = travel_cum;
    report.stages.push_back(stage);
  }
  report.final_coverage = coverage(result.stitch.cloud, model_eval.samples, cfg.eval_resolution);
  report.final_mean_error_m = mean_surface_distance(result.stitch.cloud, model_eval.samples);
  report.stitched_points = result.stitch.cloud.size();
  report.estimated_time_s = estimate_plan_time(result.plan, result.legs, cfg.nav);
  result.report = report;

  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  if (!options.out_dir.empty()) {
    namespace fs = std::filesystem;
    fs::create_directories(options.out_dir);
    const auto in_dir = [&](const char* name) {
      return (fs::path(options.out_dir) / name).string();
    };
    write_ply(in_dir("stitched.ply"), result.stitch.cloud, PlyFormat::BinaryLittleEndian);
    write_report_csv(in_dir("report.csv"), report);
    write_coverage_svg(in_dir("coverage.svg"), report);
    detail::write_plan_txt(in_dir("plan.txt"), cfg, result.plan, result.legs,
                           report.estimated_time_s);
    std::ofstream cfg_os(in_dir("effective-config.txt"), std::ios::binary);
    cfg_os << dump_config(cfg);
    if (options.write_timing) {
      std::ofstream t(in_dir("timing.txt"), std::ios::binary);
      t << "wall_seconds " << result.wall_seconds << "\n";
      t << "mean_analysis_seconds_per_base " << result.mean_analysis_seconds << "\n";
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Parameter sweeps (planning-level: dictionary + greedy + expected coverage).
// ---------------------------------------------------------------------------

struct SweepRow {
  std::string value;                  // the axis setting, as configured
  std::vector<double> stage_coverage; // expected %, cumulative per stop count
  double mean_analysis_seconds = 0.0;
  std::size_t dictionary_views = 0;
  std::size_t stops = 0;
};

struct SweepResult {
  std::string axis;
  std::vector<SweepRow> rows;
  double knee_resolution = 0.0;  // set for the resolution axis
};

/// Expected cumulative coverage per stop count for one configuration, judged
/// against the dense reference model. Also reports dictionary stats.
inline SweepRow evaluate_planning_row(const ScenarioConfig& cfg, unsigned num_threads = 0) {
  const SurfaceModel model_plan = make_model(cfg, cfg.resolution);
  const SurfaceModel model_eval = make_model(cfg, cfg.eval_resolution);
  const Dictionary dict =
      build_dictionary(model_plan, cfg.workspace, cfg.robot, cfg.camera, cfg.candidates,
                       cfg.views, dictionary_params_hash(cfg), num_threads);
  const SelectionResult plan = greedy_select(dict, cfg.planner);

  SweepRow row;
  row.mean_analysis_seconds = dict.mean_analysis_seconds();
  row.dictionary_views = dict.view_count();
  row.stops = plan.stops.size();

  std::vector<char> mask(model_eval.samples.size(), 0);
  double last = 0.0;
  for (const auto& stop : plan.stops) {
    for (const std::size_t v : stop.view_indices)
      for (const std::size_t idx : visible_points(
               model_eval, dict.records[stop.record_index].views[v].camera_pose, cfg.camera))
        mask[idx] = 1;
    std::size_t n = 0;
    for (const char c : mask) n += (c != 0);
    last = 100.0 * double(n) / double(mask.size());
    row.stage_coverage.push_back(last);
  }
  // pad to max_bases so every row has the same column count
  while (int(row.stage_coverage.size()) < cfg.planner.max_bases)
    row.stage_coverage.push_back(last);
  return row;
}

/// Re-plans the scenario across one config axis (e.g. `resolution` over
/// several values) and tabulates expected coverage per stop count. For the
/// resolution axis the knee of coverage-vs-fineness picks the recommended
/// setting.
inline SweepResult run_sweep(const ScenarioConfig& base_cfg, const std::string& axis,
                             const std::vector<std::string>& values,
                             const std::string& out_dir = "", unsigned num_threads = 0) {
  if (values.empty()) throw Error("sweep needs at least one value");
  SweepResult result;
  result.axis = axis;

  for (const std::string& v : values) {
    ScenarioConfig cfg = base_cfg;
    apply_config_override(cfg, axis, v);
    validate_config(cfg);
    SweepRow row = evaluate_planning_row(cfg, num_threads);
    row.value = v;
    result.rows.push_back(std::move(row));
  }

  if (axis == "resolution" && result.rows.size() >= 3) {
    std::vector<double> res, cov;
    for (const auto& r : result.rows) {
      res.push_back(detail::parse_double(axis, r.value));
      cov.push_back(r.stage_coverage.back());
    }
    result.knee_resolution = select_resolution_kneedle(res, cov);
  }

  if (!out_dir.empty()) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    std::ofstream os((fs::path(out_dir) / "sweep.csv").string(), std::ios::binary);
    if (!os) throw IoError("cannot write sweep.csv");
    os << "axis,value";
    const std::size_t cols = result.rows.front().stage_coverage.size();
    for (std::size_t i = 1; i <= cols; ++i) os << ",cov_" << i;
    os << ",views,stops\n";
    for (const auto& row : result.rows) {
      os << axis << ',' << row.value;
      for (const double c : row.stage_coverage) os << ',' << detail::fmt("%.2f", c);
      os << ',' << row.dictionary_views << ',' << row.stops << '\n';
    }
    std::ofstream t((fs::path(out_dir) / "sweep_timing.txt").string(), std::ios::binary);
    for (const auto& row : result.rows)
      t << axis << " " << row.value << " mean_analysis_seconds "
        << row.mean_analysis_seconds << "\n";
    if (result.knee_resolution > 0.0) {
      std::ofstream k((fs::path(out_dir) / "sweep_summary.txt").string(), std::ios::binary);
      k << "knee_resolution " << detail::dtos(result.knee_resolution) << "\n";
    }
  }
  return result;
}

}  // namespace bodyscan
