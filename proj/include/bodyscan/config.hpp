#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "bodyscan/body_models.hpp"
#include "bodyscan/cspace.hpp"
#include "bodyscan/planner.hpp"
#include "bodyscan/robot_model.hpp"
#include "bodyscan/sensor_sim.hpp"
#include "bodyscan/stitcher.hpp"
#include "bodyscan/workspace.hpp"

namespace bodyscan {

/// Everything a scenario run needs, with working defaults. Loaded from a
/// `key = value` text file (dotted keys, '#' comments); unknown or duplicate
/// keys are errors so typos cannot silently fall back to defaults.
struct ScenarioConfig {
  int version = 1;
  std::uint64_t seed = 1;

  CouchSpec couch;
  std::string body_kind = "half_cylinder";  // half_cylinder | humanoid | mesh
  double body_length = 1.75;                // half-cylinder axis length
  double body_radius = 0.2;
  std::string body_mesh_path;
  std::uint64_t body_sample_seed = 12345;  // mesh-sampling stream, not the run seed

  double resolution = 0.1;
  double eval_resolution = 0.02;  // ground-truth reference sampling

  WorkspaceSpec workspace;
  CameraModel camera;
  JitterModel jitter;
  RobotParams robot = ur3_params();
  CandidateParams candidates;
  ViewParams views;
  GreedyParams planner;
  NavParams nav;
  IcpParams icp;
  OutlierParams outliers;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::string dtos(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

inline double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const char* end = v.data() + v.size();
  const auto r = std::from_chars(v.data(), end, out);
  if (r.ec != std::errc() || r.ptr != end)
    throw ConfigError("bad number for '" + key + "': " + v);
  return out;
}

inline std::int64_t parse_int(const std::string& key, const std::string& v) {
  std::int64_t out = 0;
  const char* end = v.data() + v.size();
  const auto r = std::from_chars(v.data(), end, out);
  if (r.ec != std::errc() || r.ptr != end)
    throw ConfigError("bad integer for '" + key + "': " + v);
  return out;
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const char* end = v.data() + v.size();
  const auto r = std::from_chars(v.data(), end, out);
  if (r.ec != std::errc() || r.ptr != end)
    throw ConfigError("bad unsigned integer for '" + key + "': " + v);
  return out;
}

inline std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw ConfigError("empty list element for '" + key + "'");
    out.push_back(parse_double(key, item));
  }
  if (out.empty()) throw ConfigError("empty list for '" + key + "'");
  return out;
}

inline std::string join_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += dtos(v[i]);
  }
  return out;
}

// ordered schema: key -> {setter, getter}; the order defines the dump layout
struct ConfigField {
  std::string key;
  std::function<void(ScenarioConfig&, const std::string&)> set;
  std::function<std::string(const ScenarioConfig&)> get;
};

inline const std::vector<ConfigField>& config_schema() {
  static const std::vector<ConfigField> schema = [] {
    std::vector<ConfigField> f;
    auto add_double = [&](const std::string& key, auto member) {
      f.push_back({key,
                   [key, member](ScenarioConfig& c, const std::string& v) {
                     c.*member = parse_double(key, v);
                   },
                   [member](const ScenarioConfig& c) { return dtos(c.*member); }});
    };
    auto add = [&](const std::string& key, auto setter, auto getter) {
      f.push_back({key, setter, getter});
    };

    add("version",
        [](ScenarioConfig& c, const std::string& v) {
          c.version = int(parse_int("version", v));
        },
        [](const ScenarioConfig& c) { return std::to_string(c.version); });
    add("seed",
        [](ScenarioConfig& c, const std::string& v) { c.seed = parse_uint("seed", v); },
        [](const ScenarioConfig& c) { return std::to_string(c.seed); });

    add("couch.length",
        [](ScenarioConfig& c, const std::string& v) {
          c.couch.length = parse_double("couch.length", v);
        },
        [](const ScenarioConfig& c) { return dtos(c.couch.length); });
    add("couch.width",
        [](ScenarioConfig& c, const std::string& v) {
          c.couch.width = parse_double("couch.width", v);
        },
        [](const ScenarioConfig& c) { return dtos(c.couch.width); });
    add("couch.height",
        [](ScenarioConfig& c, const std::string& v) {
          c.couch.height = parse_double("couch.height", v);
        },
        [](const ScenarioConfig& c) { return dtos(c.couch.height); });

    add("body.kind",
        [](ScenarioConfig& c, const std::string& v) {
          if (v != "half_cylinder" && v != "humanoid" && v != "mesh")
            throw ConfigError("body.kind must be half_cylinder, humanoid or mesh");
          c.body_kind = v;
        },
        [](const ScenarioConfig& c) { return c.body_kind; });
    add_double("body.length", &ScenarioConfig::body_length);
    add_double("body.radius", &ScenarioConfig::body_radius);
    add("body.mesh_path",
        [](ScenarioConfig& c, const std::string& v) { c.body_mesh_path = v; },
        [](const ScenarioConfig& c) { return c.body_mesh_path; });
    add("body.sample_seed",
        [](ScenarioConfig& c, const std::string& v) {
          c.body_sample_seed = parse_uint("body.sample_seed", v);
        },
        [](const ScenarioConfig& c) { return std::to_string(c.body_sample_seed); });

    add_double("resolution", &ScenarioConfig::resolution);
    add_double("eval.resolution", &ScenarioConfig::eval_resolution);

    add("workspace.kind",
        [](ScenarioConfig& c, const std::string& v) {
          if (v == "full")
            c.workspace.kind = WorkspaceKind::Full;
          else if (v == "narrow")
            c.workspace.kind = WorkspaceKind::Narrow;
          else if (v == "one_side" || v == "one-side")
            c.workspace.kind = WorkspaceKind::OneSide;
          else
            throw ConfigError("workspace.kind must be full, narrow or one_side");
        },
        [](const ScenarioConfig& c) { return std::string(workspace_name(c.workspace.kind)); });
    add("workspace.room_half",
        [](ScenarioConfig& c, const std::string& v) {
          c.workspace.room_half = parse_double("workspace.room_half", v);
        },
        [](const ScenarioConfig& c) { return dtos(c.workspace.room_half); });
    add("workspace.narrow_margin",
        [](ScenarioConfig& c, const std::string& v) {
          c.workspace.narrow_margin = parse_double("workspace.narrow_margin", v);
        },
        [](const ScenarioConfig& c) { return dtos(c.workspace.narrow_margin); });

    add("camera.h_fov_deg",
        [](ScenarioConfig& c, const std::string& v) {
          c.camera.h_fov_deg = parse_double("camera.h_fov_deg", v);
        },
        [](const ScenarioConfig& c) { return dtos(c.camera.h_fov_deg); });
    add("camera.v_fov_deg",
        [](ScenarioConfig& c, const std::string& v) {
          c.camera.v_fov_deg = parse_double("camera.v_fov_deg", v);
        },
        [](const ScenarioConfig& c) { return dtos(c.camera.v_fov_deg); });
    add("camera.min_range",
        [](ScenarioConfig& c, const std::string& v) {
          c.camera.min_range = parse_double("camera.min_range", v);
        },
        [](const ScenarioConfig& c) { return dtos(c.camera.min_range); });
    add("camera.max_range",
        [](ScenarioConfig& c, const std::string& v) {
          c.camera.max_range = parse_double("camera.max_range", v);
        },
        [](const ScenarioConfig& c) { return dtos(c.camera.max_range); });
    add("camera.max_incidence_deg",
        [](ScenarioConfig& c, const std::string& v) {
          c.camera.max_incidence_deg = parse_double("camera.max_incidence_deg", v);
        },
        [](const ScenarioConfig& c) { return dtos(c.camera.max_incidence_deg); });
    add("camera.noise_sigma",
        [](ScenarioConfig& c, const std::string& v) {
          c.camera.depth_noise_sigma = parse_double("camera.noise_sigma", v);
        },
        [](const ScenarioConfig& c) { return dtos(c.camera.depth_noise_sigma); });
    add("camera.occlusion_tolerance",
        [](ScenarioConfig& c, const std::string& v) {
          c.camera.occlusion_tolerance = parse_double("camera.occlusion_tolerance", v);
        },
        [](const ScenarioConfig& c) { return dtos(c.camera.occlusion_tolerance); });

    add("jitter.rot_deg",
        [](ScenarioConfig& c, const std::string& v) {
          c.jitter.rot_deg = parse_double("jitter.rot_deg", v);
        },
        [](const ScenarioConfig& c) { return dtos(c.jitter.rot_deg); });
    add("jitter.trans",
        [](ScenarioConfig& c, const std::string& v) {
          c.jitter.trans = parse_double("jitter.trans", v);
        },
        [](const ScenarioConfig& c) { return dtos(c.jitter.trans); });

    add("robot.base_height",
        [](ScenarioConfig& c, const std::string& v) {
          c.robot.base_height = parse_double("robot.base_height", v);
        },
        [](const ScenarioConfig& c) { return dtos(c.robot.base_height); });
    add("robot.footprint_x",
        [](ScenarioConfig& c, const std::string& v) {
          c.robot.footprint_x = parse_double("robot.footprint_x", v);
        },
        [](const ScenarioConfig& c) { return dtos(c.robot.footprint_x); });
    add("robot.footprint_y",
        [](ScenarioConfig& c, const std::string& v) {
          c.robot.footprint_y = parse_double("robot.footprint_y", v);
        },
        [](const ScenarioConfig& c) { return dtos(c.robot.footprint_y); });
    add("robot.clearance",
        [](ScenarioConfig& c, const std::string& v) {
          c.robot.clearance = parse_double("robot.clearance", v);
        },
        [](const ScenarioConfig& c) { return dtos(c.robot.clearance); });

    add("candidates.standoffs",
        [](ScenarioConfig& c, const std::string& v) {
          c.candidates.standoffs = parse_list("candidates.standoffs", v);
        },
        [](const ScenarioConfig& c) { return join_list(c.candidates.standoffs); });
    add("candidates.spacing",
        [](ScenarioConfig& c, const std::string& v) {
          c.candidates.spacing = parse_double("candidates.spacing", v);
        },
        [](const ScenarioConfig& c) { return dtos(c.candidates.spacing); });

    add("views.standoff",
        [](ScenarioConfig& c, const std::string& v) {
          c.views.view_standoff = parse_double("views.standoff", v);
        },
        [](const ScenarioConfig& c) { return dtos(c.views.view_standoff); });
    add("views.target_spacing_factor",
        [](ScenarioConfig& c, const std::string& v) {
          c.views.target_spacing_factor = parse_double("views.target_spacing_factor", v);
        },
        [](const ScenarioConfig& c) { return dtos(c.views.target_spacing_factor); });
    add("views.roll_deg",
        [](ScenarioConfig& c, const std::string& v) {
          c.views.roll_deg = parse_list("views.roll_deg", v);
        },
        [](const ScenarioConfig& c) { return join_list(c.views.roll_deg); });
    add("views.max_ik_iterations",
        [](ScenarioConfig& c, const std::string& v) {
          c.views.max_ik_iterations = int(parse_int("views.max_ik_iterations", v));
        },
        [](const ScenarioConfig& c) { return std::to_string(c.views.max_ik_iterations); });

    add("planner.max_bases",
        [](ScenarioConfig& c, const std::string& v) {
          c.planner.max_bases = int(parse_int("planner.max_bases", v));
        },
        [](const ScenarioConfig& c) { return std::to_string(c.planner.max_bases); });
    add("planner.max_views_per_base",
        [](ScenarioConfig& c, const std::string& v) {
          c.planner.max_views_per_base = int(parse_int("planner.max_views_per_base", v));
        },
        [](const ScenarioConfig& c) { return std::to_string(c.planner.max_views_per_base); });
    add("planner.target_coverage",
        [](ScenarioConfig& c, const std::string& v) {
          c.planner.target_coverage = parse_double("planner.target_coverage", v);
        },
        [](const ScenarioConfig& c) { return dtos(c.planner.target_coverage); });

    add("nav.cell_size",
        [](ScenarioConfig& c, const std::string& v) {
          c.nav.cell_size = parse_double("nav.cell_size", v);
        },
        [](const ScenarioConfig& c) { return dtos(c.nav.cell_size); });
    add("nav.base_speed",
        [](ScenarioConfig& c, const std::string& v) {
          c.nav.base_speed = parse_double("nav.base_speed", v);
        },
        [](const ScenarioConfig& c) { return dtos(c.nav.base_speed); });
    add("nav.stop_overhead_s",
        [](ScenarioConfig& c, const std::string& v) {
          c.nav.stop_overhead_s = parse_double("nav.stop_overhead_s", v);
        },
        [](const ScenarioConfig& c) { return dtos(c.nav.stop_overhead_s); });
    add("nav.view_overhead_s",
        [](ScenarioConfig& c, const std::string& v) {
          c.nav.view_overhead_s = parse_double("nav.view_overhead_s", v);
        },
        [](const ScenarioConfig& c) { return dtos(c.nav.view_overhead_s); });
    add("nav.start_x",
        [](ScenarioConfig& c, const std::string& v) {
          c.nav.start_x = parse_double("nav.start_x", v);
        },
        [](const ScenarioConfig& c) { return dtos(c.nav.start_x); });
    add("nav.start_y",
        [](ScenarioConfig& c, const std::string& v) {
          c.nav.start_y = parse_double("nav.start_y", v);
        },
        [](const ScenarioConfig& c) { return dtos(c.nav.start_y); });

    add("icp.max_corr_dist",
        [](ScenarioConfig& c, const std::string& v) {
          c.icp.max_corr_dist = parse_double("icp.max_corr_dist", v);
        },
        [](const ScenarioConfig& c) { return dtos(c.icp.max_corr_dist); });
    add("icp.max_iterations",
        [](ScenarioConfig& c, const std::string& v) {
          c.icp.max_iterations = int(parse_int("icp.max_iterations", v));
        },
        [](const ScenarioConfig& c) { return std::to_string(c.icp.max_iterations); });
    add("icp.downsample",
        [](ScenarioConfig& c, const std::string& v) {
          c.icp.downsample = parse_double("icp.downsample", v);
        },
        [](const ScenarioConfig& c) { return dtos(c.icp.downsample); });

    add("outliers.k",
        [](ScenarioConfig& c, const std::string& v) {
          c.outliers.k = std::size_t(parse_uint("outliers.k", v));
        },
        [](const ScenarioConfig& c) { return std::to_string(c.outliers.k); });
    add("outliers.sigma_mult",
        [](ScenarioConfig& c, const std::string& v) {
          c.outliers.sigma_mult = parse_double("outliers.sigma_mult", v);
        },
        [](const ScenarioConfig& c) { return dtos(c.outliers.sigma_mult); });
    return f;
  }();
  return schema;
}

inline const ConfigField* find_field(const std::string& key) {
  for (const auto& f : config_schema())
    if (f.key == key) return &f;
  return nullptr;
}

}  // namespace detail

inline void validate_config(const ScenarioConfig& c) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(what);
  };
  require(c.version == 1, "config version must be 1");
  require(c.couch.length > 0 && c.couch.width > 0 && c.couch.height > 0,
          "couch dimensions must be positive");
  require(c.body_kind != "mesh" || !c.body_mesh_path.empty(),
          "body.mesh_path required for body.kind = mesh");
  require(c.resolution > 0 && c.eval_resolution > 0, "resolutions must be positive");
  require(c.camera.h_fov_deg > 0 && c.camera.h_fov_deg < 180, "h_fov out of range");
  require(c.camera.v_fov_deg > 0 && c.camera.v_fov_deg < 180, "v_fov out of range");
  require(c.camera.min_range >= 0 && c.camera.max_range > c.camera.min_range,
          "camera range band invalid");
  require(c.camera.max_incidence_deg > 0 && c.camera.max_incidence_deg <= 90,
          "max incidence out of range");
  require(c.robot.base_height > 0, "base height must be positive");
  require(c.robot.footprint_x > 0 && c.robot.footprint_y > 0, "footprint must be positive");
  require(c.candidates.spacing > 0, "candidate spacing must be positive");
  require(!c.candidates.standoffs.empty(), "need at least one candidate standoff");
  require(c.views.view_standoff > 0, "view standoff must be positive");
  require(c.planner.max_bases >= 1, "planner.max_bases must be >= 1");
  require(c.planner.max_views_per_base >= 1, "planner.max_views_per_base must be >= 1");
  require(c.nav.cell_size > 0 && c.nav.base_speed > 0, "nav parameters must be positive");
}

/// Applies `key = value` lines to `cfg`. Duplicate, unknown or malformed keys
/// raise ConfigError with the offending line number.
inline void apply_config_text(ScenarioConfig& cfg, std::istream& is) {
  std::string line;
  int line_no = 0;
  std::map<std::string, int> seen;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    const auto* field = detail::find_field(key);
    if (!field)
      throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    if (!seen.emplace(key, line_no).second)
      throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    field->set(cfg, value);
  }
}

inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read config " + path);
  ScenarioConfig cfg;
  apply_config_text(cfg, is);
  validate_config(cfg);
  return cfg;
}

/// Single `key = value` override (CLI flags use this after the file loads).
inline void apply_config_override(ScenarioConfig& cfg, const std::string& key,
                                  const std::string& value) {
  const auto* field = detail::find_field(key);
  if (!field) throw ConfigError("unknown config key '" + key + "'");
  field->set(cfg, value);
}

/// Canonical text form: every key in schema order, shortest-round-trip float
/// formatting. parse(dump(c)) reproduces c exactly.
inline std::string dump_config(const ScenarioConfig& cfg) {
  std::string out;
  for (const auto& f : detail::config_schema()) {
    out += f.key;
    out += " = ";
    out += f.get(cfg);
    out += "\n";
  }
  return out;
}

inline std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 1469598103934665603ull;
  for (const unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

/// Hash of every setting that shapes dictionary contents (body, couch,
/// sampling, workspace, camera geometry, robot, candidate and view layout).
/// Run seed, sensor noise, planner/nav/stitch settings are excluded: reusing
/// a cached dictionary across those is safe.
inline std::uint64_t dictionary_params_hash(const ScenarioConfig& cfg) {
  static const char* keys[] = {
      "couch.length", "couch.width", "couch.height", "body.kind", "body.length",
      "body.radius", "body.mesh_path", "body.sample_seed", "resolution",
      "workspace.kind", "workspace.room_half", "workspace.narrow_margin",
      "camera.h_fov_deg", "camera.v_fov_deg", "camera.min_range", "camera.max_range",
      "camera.max_incidence_deg", "camera.occlusion_tolerance", "robot.base_height",
      "robot.footprint_x", "robot.footprint_y", "robot.clearance", "candidates.standoffs",
      "candidates.spacing", "views.standoff", "views.target_spacing_factor",
      "views.roll_deg", "views.max_ik_iterations"};
  std::string blob;
  for (const char* k : keys) {
    const auto* field = detail::find_field(k);
    blob += k;
    blob += "=";
    blob += field->get(cfg);
    blob += ";";
  }
  return fnv1a64(blob);
}

/// Builds the body model for this scenario at the given sampling resolution,
/// with couch-contact samples already stripped.
inline SurfaceModel make_model(const ScenarioConfig& cfg, double resolution) {
  SurfaceModel model;
  if (cfg.body_kind == "half_cylinder") {
    model = make_half_cylinder(cfg.body_length, cfg.body_radius, cfg.couch, resolution);
  } else if (cfg.body_kind == "humanoid") {
    model = make_humanoid(cfg.couch, resolution, cfg.body_sample_seed);
  } else {
    throw ConfigError("make_model: body meshes are loaded via load_body_mesh");
  }
  return strip_underside(model);
}

}  // namespace bodyscan
