// Command-line front end: scan planning, simulation and evaluation.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bodyscan/bodyscan.hpp"

namespace {

namespace fs = std::filesystem;
using namespace bodyscan;

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;  // key=value
  std::string seed;
  std::string resolution;
  std::string couch_height;
  std::string workspace;
  std::string bases;
  std::string views;
  unsigned threads = 0;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "scenario config file (key = value lines)");
  cmd->add_option("--set", args.overrides, "override a config key, e.g. --set couch.height=0.9")
      ->type_name("KEY=VALUE");
  cmd->add_option("--seed", args.seed, "run seed (overrides config)");
  cmd->add_option("--resolution", args.resolution, "planning resolution in meters");
  cmd->add_option("--couch-height", args.couch_height, "couch height in meters");
  cmd->add_option("--workspace", args.workspace, "workspace kind: full, narrow or one_side");
  cmd->add_option("--bases", args.bases, "maximum base stops");
  cmd->add_option("--views", args.views, "maximum views per base stop");
  cmd->add_option("--threads", args.threads, "worker threads (0 = hardware)");
}

ScenarioConfig load_effective_config(const CommonArgs& args) {
  ScenarioConfig cfg;
  if (!args.config_path.empty()) cfg = load_config(args.config_path);
  for (const std::string& kv : args.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects KEY=VALUE, got: " + kv);
    apply_config_override(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!args.seed.empty()) apply_config_override(cfg, "seed", args.seed);
  if (!args.resolution.empty()) apply_config_override(cfg, "resolution", args.resolution);
  if (!args.couch_height.empty()) apply_config_override(cfg, "couch.height", args.couch_height);
  if (!args.workspace.empty()) apply_config_override(cfg, "workspace.kind", args.workspace);
  if (!args.bases.empty()) apply_config_override(cfg, "planner.max_bases", args.bases);
  if (!args.views.empty()) apply_config_override(cfg, "planner.max_views_per_base", args.views);
  validate_config(cfg);
  return cfg;
}

Dictionary obtain_dictionary(const ScenarioConfig& cfg, const std::string& dict_path,
                             unsigned threads) {
  const std::uint64_t want = dictionary_params_hash(cfg);
  if (!dict_path.empty() && fs::exists(dict_path)) {
    Dictionary dict = load_dictionary(dict_path);
    if (dict.params_hash != want)
      throw ConfigError("dictionary " + dict_path +
                        " was built with different parameters; rebuild it with 'analyze'");
    return dict;
  }
  const SurfaceModel model = make_model(cfg, cfg.resolution);
  return build_dictionary(model, cfg.workspace, cfg.robot, cfg.camera, cfg.candidates,
                          cfg.views, want, threads);
}

int cmd_analyze(const CommonArgs& args, const std::string& out_path) {
  const ScenarioConfig cfg = load_effective_config(args);
  const SurfaceModel model = make_model(cfg, cfg.resolution);
  const Dictionary dict =
      build_dictionary(model, cfg.workspace, cfg.robot, cfg.camera, cfg.candidates, cfg.views,
                       dictionary_params_hash(cfg), args.threads);
  save_dictionary(out_path, dict);
  std::printf("analyzed %zu base candidates, %zu feasible views, %zu body samples\n",
              dict.records.size(), dict.view_count(), std::size_t(dict.sample_count));
  std::printf("mean per-base analysis time %.4f s\n", dict.mean_analysis_seconds());
  std::printf("dictionary written to %s\n", out_path.c_str());
  return 0;
}

int cmd_plan(const CommonArgs& args, const std::string& dict_path, const std::string& out_dir) {
  const ScenarioConfig cfg = load_effective_config(args);
  const Dictionary dict = obtain_dictionary(cfg, dict_path, args.threads);
  const SelectionResult plan = greedy_select(dict, cfg.planner);

  const OccupancyGrid grid = make_floor_grid(cfg.workspace, cfg.couch, cfg.robot,
                                             cfg.nav.cell_size);
  std::vector<NavPath> legs;
  Vec2 from(cfg.nav.start_x, cfg.nav.start_y);
  for (const auto& stop : plan.stops) {
    legs.push_back(plan_base_path(grid, from, stop.base.position()));
    from = stop.base.position();
  }
  const double time_s = estimate_plan_time(plan, legs, cfg.nav);

  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    detail::write_plan_txt((fs::path(out_dir) / "plan.txt").string(), cfg, plan, legs, time_s);
    std::ofstream os((fs::path(out_dir) / "effective-config.txt").string(), std::ios::binary);
    os << dump_config(cfg);
  }
  std::printf("plan: %zu stops, %zu views, %.2f%% of planning samples, est. %.1f s\n",
              plan.stops.size(), plan.sequence.size(), plan.coverage_percent, time_s);
  for (std::size_t s = 0; s < plan.stops.size(); ++s)
    std::printf("  stop %zu at (%.3f, %.3f) heading %.3f, %zu views\n", s + 1,
                plan.stops[s].base.x, plan.stops[s].base.y, plan.stops[s].base.heading,
                plan.stops[s].view_indices.size());
  return 0;
}

int cmd_simulate(const CommonArgs& args, const std::string& dict_path,
                 const std::string& out_dir) {
  const ScenarioConfig cfg = load_effective_config(args);
  WorkflowOptions options;
  options.out_dir = out_dir;
  options.num_threads = args.threads;
  Dictionary dict;
  if (!dict_path.empty()) {
    dict = obtain_dictionary(cfg, dict_path, args.threads);
    options.dictionary = &dict;
  }
  const WorkflowResult result = run_workflow(cfg, options);
  std::printf("simulated %zu stops / %zu frames; final coverage %.2f%% "
              "(mean error %.2f mm), est. mission %.1f s\n",
              result.plan.stops.size(), result.stitch.frame_clouds.size(),
              result.report.final_coverage, 1000.0 * result.report.final_mean_error_m,
              result.report.estimated_time_s);
  for (const auto& st : result.report.stages)
    std::printf("  stop %d: expected %.2f%%, realized %.2f%%\n", st.stage,
                st.expected_coverage, st.realized_coverage);
  if (!out_dir.empty()) std::printf("artifacts in %s\n", out_dir.c_str());
  return 0;
}

int cmd_sweep(const CommonArgs& args, const std::string& axis, const std::string& values_csv,
              const std::string& out_dir) {
  const ScenarioConfig cfg = load_effective_config(args);
  std::vector<std::string> values;
  std::stringstream ss(values_csv);
  std::string item;
  while (std::getline(ss, item, ',')) values.push_back(item);
  const SweepResult sweep = run_sweep(cfg, axis, values, out_dir, args.threads);
  for (const auto& row : sweep.rows) {
    std::printf("%s = %s:", axis.c_str(), row.value.c_str());
    for (const double c : row.stage_coverage) std::printf(" %.2f", c);
    std::printf("  (views %zu, mean analysis %.4f s)\n", row.dictionary_views,
                row.mean_analysis_seconds);
  }
  if (sweep.knee_resolution > 0.0)
    std::printf("knee of the coverage curve: resolution %s m\n",
                detail::dtos(sweep.knee_resolution).c_str());
  return 0;
}

int cmd_evaluate(const CommonArgs& args, const std::string& scan_path,
                 const std::string& out_path) {
  const ScenarioConfig cfg = load_effective_config(args);
  const PointCloud scan = read_ply_cloud(scan_path);
  const SurfaceModel reference = make_model(cfg, cfg.eval_resolution);
  const double cov = coverage(scan, reference.samples, cfg.eval_resolution);
  const double err = mean_surface_distance(scan, reference.samples);
  std::printf("coverage %.2f%% of %zu reference points, mean error %.3f mm\n", cov,
              reference.samples.size(), 1000.0 * err);
  if (!out_path.empty()) {
    std::ofstream os(out_path, std::ios::binary);
    os << "coverage_pct " << detail::fmt("%.2f", cov) << "\n";
    os << "mean_error_mm " << detail::fmt("%.3f", 1000.0 * err) << "\n";
    os << "scan_points " << scan.size() << "\n";
    os << "reference_points " << reference.samples.size() << "\n";
  }
  return 0;
}

int cmd_report(const std::string& run_dir) {
  const fs::path csv = fs::path(run_dir) / "report.csv";
  std::ifstream is(csv);
  if (!is) throw IoError("cannot read " + csv.string());
  std::string line;
  std::getline(is, line);  // header
  std::printf("%-6s %-10s %-10s %-9s %-9s\n", "stop", "expected", "realized", "err(mm)",
              "travel(m)");
  CoverageReport report;
  while (std::getline(is, line)) {
    StageReport st;
    double bx, by, bh, err_mm;
    if (std::sscanf(line.c_str(), "%d,%lf,%lf,%lf,%d,%lf,%lf,%lf,%lf", &st.stage, &bx, &by,
                    &bh, &st.views, &st.expected_coverage, &st.realized_coverage, &err_mm,
                    &st.travel_m) != 9)
      throw IoError("malformed row in " + csv.string());
    st.base = BasePose(bx, by, bh);
    st.mean_error_m = err_mm / 1000.0;
    std::printf("%-6d %-10.2f %-10.2f %-9.3f %-9.3f\n", st.stage, st.expected_coverage,
                st.realized_coverage, err_mm, st.travel_m);
    report.stages.push_back(st);
  }
  if (report.stages.empty()) throw IoError("no stages in " + csv.string());
  report.final_coverage = report.stages.back().realized_coverage;
  write_coverage_svg((fs::path(run_dir) / "coverage.svg").string(), report);
  std::printf("coverage.svg refreshed in %s\n", run_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mobile-manipulator surface-scan planning and simulation"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string out, dict_path, axis, values, scan_path, run_dir;

  auto* analyze = app.add_subcommand("analyze", "build the base-position dictionary");
  add_common(analyze, args);
  analyze->add_option("--out", out, "dictionary output file")->required();

  auto* plan = app.add_subcommand("plan", "select base stops and views");
  add_common(plan, args);
  plan->add_option("--dict", dict_path, "reuse a dictionary built by 'analyze'");
  plan->add_option("--out", out, "directory for plan.txt");

  auto* simulate = app.add_subcommand("simulate", "run the full scan simulation");
  add_common(simulate, args);
  simulate->add_option("--dict", dict_path, "reuse a dictionary built by 'analyze'");
  simulate->add_option("--out", out, "run directory for artifacts");

  auto* sweep = app.add_subcommand("sweep", "re-plan across one config axis");
  add_common(sweep, args);
  sweep->add_option("--axis", axis, "config key to sweep, e.g. resolution")->required();
  sweep->add_option("--values", values, "comma-separated values")->required();
  sweep->add_option("--out", out, "directory for sweep.csv");

  auto* evaluate = app.add_subcommand("evaluate", "score a stitched cloud against the model");
  add_common(evaluate, args);
  evaluate->add_option("--scan", scan_path, "stitched PLY file")->required();
  evaluate->add_option("--out", out, "write metrics to this file");

  auto* report = app.add_subcommand("report", "print a run report and refresh its chart");
  report->add_option("--run", run_dir, "run directory with report.csv")->required();

  auto* show = app.add_subcommand("config", "print the effective configuration");
  add_common(show, args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (analyze->parsed()) return cmd_analyze(args, out);
    if (plan->parsed()) return cmd_plan(args, dict_path, out);
    if (simulate->parsed()) return cmd_simulate(args, dict_path, out);
    if (sweep->parsed()) return cmd_sweep(args, axis, values, out);
    if (evaluate->parsed()) return cmd_evaluate(args, scan_path, out);
    if (report->parsed()) return cmd_report(run_dir);
    if (show->parsed()) {
      std::cout << dump_config(load_effective_config(args));
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
