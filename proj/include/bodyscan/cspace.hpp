#pragma once

#include <chrono>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "bodyscan/body_models.hpp"
#include "bodyscan/geometry.hpp"
#include "bodyscan/parallel.hpp"
#include "bodyscan/robot_model.hpp"
#include "bodyscan/sensor_sim.hpp"
#include "bodyscan/workspace.hpp"

namespace bodyscan {

/// How candidate base positions are laid out around the couch: closed rings
/// at fixed standoff from the couch edge, walked at ~constant arc spacing,
/// heading always toward the nearest couch point.
struct CandidateParams {
  std::vector<double> standoffs{0.35, 0.55};
  double spacing = 0.25;
};

/// How camera viewpoints are generated for one base position: view targets
/// are the body samples thinned to `target_spacing_factor * resolution`, the
/// camera sits `view_standoff` along the outward surface normal looking back
/// at the target, and each target is tried at several camera rolls.
struct ViewParams {
  double view_standoff = 0.6;
  double target_spacing_factor = 2.0;
  std::vector<double> roll_deg{0.0, 90.0, 180.0, 270.0};
  int max_ik_iterations = 150;
};

/// One reachable, collision-free camera placement found for a base position.
struct ViewRecord {
  ArmConfig config;
  Pose camera_pose;                    // camera pose realized by the joints
  std::vector<std::uint32_t> visible;  // sample indices seen, ascending
};

/// Reachability analysis result for one base candidate.
struct BaseRecord {
  BasePose base;
  std::vector<ViewRecord> views;
  double analysis_seconds = 0.0;
};

struct Dictionary {
  std::vector<BaseRecord> records;
  double resolution = 0.0;
  std::uint64_t params_hash = 0;
  std::uint32_t sample_count = 0;  // size of the sample set the indices refer to

  std::size_t view_count() const {
    std::size_t n = 0;
    for (const auto& r : records) n += r.views.size();
    return n;
  }
  double mean_analysis_seconds() const {
    if (records.empty()) return 0.0;
    double s = 0.0;
    for (const auto& r : records) s += r.analysis_seconds;
    return s / double(records.size());
  }
};

/// Rings of base poses around the couch. Each standoff ring is the couch
/// rectangle offset outward with rounded corners; poses point at the couch.
/// Positions outside the workspace or with the footprint on the couch are
/// dropped. Throws NoCandidatesError when nothing survives.
inline std::vector<BasePose> enumerate_base_candidates(const CouchSpec& couch,
                                                       const WorkspaceSpec& workspace,
                                                       const RobotParams& robot,
                                                       const CandidateParams& params) {
  std::vector<BasePose> out;
  const double hl = 0.5 * couch.length, hw = 0.5 * couch.width;

  for (const double r : params.standoffs) {
    if (r <= 0.0) throw Error("candidate standoff must be positive");
    const double perimeter = 2.0 * (couch.length + couch.width) + 2.0 * M_PI * r;
    const int n = std::max(1, int(std::lround(perimeter / params.spacing)));

    for (int k = 0; k < n; ++k) {
      const double s = perimeter * double(k) / n;
      double x, y, heading;
      double c = s;
      if (c < couch.length) {  // bottom side, -y, walking +x
        x = -hl + c;
        y = -(hw + r);
        heading = M_PI / 2.0;
      } else if ((c -= couch.length) < 0.5 * M_PI * r) {  // corner (+x, -y)
        const double a = -M_PI / 2.0 + c / r;
        x = hl + r * std::cos(a);
        y = -hw + r * std::sin(a);
        heading = a + M_PI;
      } else if ((c -= 0.5 * M_PI * r) < couch.width) {  // right side, +x
        x = hl + r;
        y = -hw + c;
        heading = M_PI;
      } else if ((c -= couch.width) < 0.5 * M_PI * r) {  // corner (+x, +y)
        const double a = c / r;
        x = hl + r * std::cos(a);
        y = hw + r * std::sin(a);
        heading = a + M_PI;
      } else if ((c -= 0.5 * M_PI * r) < couch.length) {  // top side, walking -x
        x = hl - c;
        y = hw + r;
        heading = -M_PI / 2.0;
      } else if ((c -= couch.length) < 0.5 * M_PI * r) {  // corner (-x, +y)
        const double a = M_PI / 2.0 + c / r;
        x = -hl + r * std::cos(a);
        y = hw + r * std::sin(a);
        heading = a + M_PI;
      } else if ((c -= 0.5 * M_PI * r) < couch.width) {  // left side, -x
        x = -(hl + r);
        y = hw - c;
        heading = 0.0;
      } else {  // corner (-x, -y)
        const double a = M_PI + (c - couch.width) / r;
        x = -hl + r * std::cos(a);
        y = -hw + r * std::sin(a);
        heading = a + M_PI;
      }

      BasePose pose(x, y, heading);
      if (!workspace.allows(pose.position(), couch)) continue;
      if (detail::rects_overlap(pose.footprint_corners(robot), -hl, -hw, hl, hw)) continue;
      out.push_back(pose);
    }
  }
  if (out.empty()) throw NoCandidatesError("no base candidate fits the workspace");
  return out;
}

/// View targets: model samples thinned to one per voxel of size
/// factor * resolution, in first-seen order.
inline std::vector<std::uint32_t> select_view_targets(const SurfaceModel& model,
                                                      double target_spacing_factor) {
  const double voxel = target_spacing_factor * model.resolution;
  std::vector<std::uint32_t> out;
  std::unordered_map<detail::VoxelKey, bool, detail::VoxelKeyHash> seen;
  for (std::size_t i = 0; i < model.samples.size(); ++i) {
    if (seen.try_emplace(detail::voxel_of(model.samples.points[i], voxel), true).second)
      out.push_back(std::uint32_t(i));
  }
  return out;
}

namespace detail {

// Geodesic interpolation between unit vectors (antiparallel inputs swing
// around an arbitrary perpendicular).
inline Vec3 slerp_dir(const Vec3& a, const Vec3& b, double t) {
  const double c = std::clamp(a.dot(b), -1.0, 1.0);
  const double ang = std::acos(c);
  if (ang < 1e-9) return a;
  if (M_PI - ang < 1e-6)
    return Eigen::AngleAxisd(t * ang, a.unitOrthogonal()) * a;
  const double s = std::sin(ang);
  return ((std::sin((1.0 - t) * ang) / s) * a + (std::sin(t * ang) / s) * b).normalized();
}

}  // namespace detail

/// Full reachability analysis of one base candidate: for every view target,
/// aim the camera from the standoff point along the outward normal; when that
/// ideal pose is out of reach, the eye is pulled along the standoff sphere
/// toward the shoulder in fixed steps until the IK succeeds (the short arm
/// cannot hover orthogonally over the body centerline, but tilted views of
/// the same target usually stay within the incidence limit). Keeps
/// configurations that are collision-free and see at least one sample.
/// Wall-clock cost of the call is recorded on the result.
inline BaseRecord analyze_base_position(const SurfaceModel& model, const RobotParams& robot,
                                        const CameraModel& cam, const BasePose& base,
                                        const ViewParams& params) {
  const auto t0 = std::chrono::steady_clock::now();
  BaseRecord record;
  record.base = base;

  const std::vector<std::uint32_t> targets =
      select_view_targets(model, params.target_spacing_factor);

  ArmConfig home;
  home.joints = {0.0, -M_PI / 2.0, M_PI / 2.0, -M_PI / 2.0, -M_PI / 2.0, 0.0};
  ArmConfig warm = home;
  // the shoulder (after the vertical d1 offset) does not move with the arm
  const Vec3 shoulder = forward_kinematics(robot, base, home).joint_origins[1];
  constexpr int kClampSteps = 5;
  // upper bound on camera distance from the shoulder: sum of every link
  // displacement past joint 1; eyes farther out cannot be reached, skip the IK
  const double max_reach = std::abs(robot.dh_a[1]) + std::abs(robot.dh_a[2]) +
                           robot.dh_d[3] + robot.dh_d[4] + robot.dh_d[5] +
                           robot.flange_to_camera.translation.norm();

  for (const std::uint32_t t : targets) {
    const Vec3& p = model.samples.points[t];
    const Vec3& n = model.samples.normals[t];
    const Vec3 pull = (shoulder - p).norm() > 1e-9 ? Vec3((shoulder - p).normalized()) : n;
    for (int step = 0; step < kClampSteps; ++step) {
      const Vec3 dir = detail::slerp_dir(n, pull, double(step) / double(kClampSteps - 1));
      const Vec3 eye = p + params.view_standoff * dir;
      if ((eye - shoulder).norm() > max_reach) continue;
      Pose look = make_look_at_pose(eye, p);
      for (const double roll : params.roll_deg) {
        const Pose target_pose =
            compose(look, Pose::rotate_axis(Vec3::UnitZ(), roll * M_PI / 180.0));
        auto ik = solve_arm_ik(robot, base, target_pose, warm, params.max_ik_iterations);
        if (!ik) ik = solve_arm_ik(robot, base, target_pose, home, params.max_ik_iterations);
        if (!ik) continue;
        if (!check_config(robot, base, *ik, model)) continue;
        const FkResult fk = forward_kinematics(robot, base, *ik);
        std::vector<std::size_t> vis = visible_points(model, fk.camera, cam);
        if (vis.empty()) continue;
        ViewRecord view;
        view.config = *ik;
        view.camera_pose = fk.camera;
        view.visible.assign(vis.begin(), vis.end());
        record.views.push_back(std::move(view));
        warm = *ik;
        break;  // keep every feasible tilt, one roll per tilt
      }
    }
  }

  record.analysis_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return record;
}

/// Analyzes every candidate in parallel; record order matches candidate order
/// so the result is independent of thread count. Throws EmptyDictionaryError
/// when no base yields any feasible view.
inline Dictionary build_dictionary(const SurfaceModel& model, const WorkspaceSpec& workspace,
                                   const RobotParams& robot, const CameraModel& cam,
                                   const CandidateParams& candidates, const ViewParams& views,
                                   std::uint64_t params_hash = 0, unsigned num_threads = 0) {
  const std::vector<BasePose> bases =
      enumerate_base_candidates(model.couch, workspace, robot, candidates);

  Dictionary dict;
  dict.resolution = model.resolution;
  dict.params_hash = params_hash;
  dict.sample_count = std::uint32_t(model.samples.size());
  dict.records.resize(bases.size());
  parallel_for(
      bases.size(),
      [&](std::size_t i) {
        dict.records[i] = analyze_base_position(model, robot, cam, bases[i], views);
      },
      num_threads);

  if (dict.view_count() == 0)
    throw EmptyDictionaryError("no feasible view at any base candidate");
  return dict;
}

// ---------------------------------------------------------------------------
// Binary dictionary cache (little-endian, fixed layout).
// ---------------------------------------------------------------------------

namespace detail {

constexpr char kDictMagic[8] = {'B', 'S', 'D', 'I', 'C', 'T', '0', '1'};

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw IoError("dictionary file truncated");
  return v;
}

inline void put_pose(std::ostream& os, const Pose& p) {
  put(os, p.rotation.w());
  put(os, p.rotation.x());
  put(os, p.rotation.y());
  put(os, p.rotation.z());
  put(os, p.translation.x());
  put(os, p.translation.y());
  put(os, p.translation.z());
}
inline Pose get_pose(std::istream& is) {
  Pose p;
  const double w = get<double>(is), x = get<double>(is), y = get<double>(is),
               z = get<double>(is);
  p.rotation = Eigen::Quaterniond(w, x, y, z);
  p.translation.x() = get<double>(is);
  p.translation.y() = get<double>(is);
  p.translation.z() = get<double>(is);
  return p;
}

}  // namespace detail

inline void save_dictionary(const std::string& path, const Dictionary& dict) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path);
  os.write(detail::kDictMagic, sizeof(detail::kDictMagic));
  detail::put(os, dict.params_hash);
  detail::put(os, dict.resolution);
  detail::put(os, dict.sample_count);
  detail::put(os, std::uint64_t(dict.records.size()));
  for (const auto& r : dict.records) {
    detail::put(os, r.base.x);
    detail::put(os, r.base.y);
    detail::put(os, r.base.heading);
    detail::put(os, r.analysis_seconds);
    detail::put(os, std::uint64_t(r.views.size()));
    for (const auto& v : r.views) {
      for (const double j : v.config.joints) detail::put(os, j);
      detail::put_pose(os, v.camera_pose);
      detail::put(os, std::uint64_t(v.visible.size()));
      for (const std::uint32_t idx : v.visible) detail::put(os, idx);
    }
  }
  if (!os) throw IoError("failed writing " + path);
}

inline Dictionary load_dictionary(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, detail::kDictMagic, 8) != 0)
    throw IoError("not a dictionary file: " + path);
  Dictionary dict;
  dict.params_hash = detail::get<std::uint64_t>(is);
  dict.resolution = detail::get<double>(is);
  dict.sample_count = detail::get<std::uint32_t>(is);
  const auto n_records = detail::get<std::uint64_t>(is);
  dict.records.resize(n_records);
  for (auto& r : dict.records) {
    const double x = detail::get<double>(is);
    const double y = detail::get<double>(is);
    const double heading = detail::get<double>(is);
    r.base = BasePose(x, y, heading);
    r.analysis_seconds = detail::get<double>(is);
    const auto n_views = detail::get<std::uint64_t>(is);
    r.views.resize(n_views);
    for (auto& v : r.views) {
      for (double& j : v.config.joints) j = detail::get<double>(is);
      v.camera_pose = detail::get_pose(is);
      const auto n_vis = detail::get<std::uint64_t>(is);
      v.visible.resize(n_vis);
      for (auto& idx : v.visible) idx = detail::get<std::uint32_t>(is);
    }
  }
  return dict;
}

}  // namespace bodyscan
