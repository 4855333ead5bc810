#pragma once

#include <cmath>
#include <vector>

#include "bodyscan/body_models.hpp"
#include "bodyscan/geometry.hpp"
#include "bodyscan/rng.hpp"

namespace bodyscan {

/// Wrist RGB-D camera. Optical axis is camera +z, x horizontal FOV direction,
/// y vertical. Ranges are Euclidean distance from the optical center.
struct CameraModel {
  double h_fov_deg = 75.0;
  double v_fov_deg = 65.0;
  double min_range = 0.5;
  double max_range = 3.86;
  double max_incidence_deg = 74.0;     // grazing returns accepted up to here
  double depth_noise_sigma = 0.002;    // along-ray noise, meters
  double occlusion_tolerance = 0.005;  // self-hit slack for the mesh test

  double half_h() const { return 0.5 * h_fov_deg * M_PI / 180.0; }
  double half_v() const { return 0.5 * v_fov_deg * M_PI / 180.0; }
  double cos_max_incidence() const { return std::cos(max_incidence_deg * M_PI / 180.0); }
};

/// Indices of model samples visible from `camera_pose` (world-from-camera).
/// A sample is visible iff it passes all four gates: inside the angular
/// frustum, inside the range band, surface incidence within the limit, and
/// not occluded by the body mesh. Output is ascending.
inline std::vector<std::size_t> visible_points(const SurfaceModel& model,
                                               const Pose& camera_pose,
                                               const CameraModel& cam) {
  std::vector<std::size_t> out;
  const Pose world_to_cam = camera_pose.inverse();
  const Vec3 eye = camera_pose.translation;
  const double cos_inc = cam.cos_max_incidence();

  for (std::size_t i = 0; i < model.samples.size(); ++i) {
    const Vec3& p = model.samples.points[i];
    const Vec3 v = world_to_cam.apply(p);
    if (v.z() <= 0.0) continue;
    if (std::abs(std::atan2(v.x(), v.z())) > cam.half_h()) continue;
    if (std::abs(std::atan2(v.y(), v.z())) > cam.half_v()) continue;

    const double dist = (p - eye).norm();
    if (dist < cam.min_range || dist > cam.max_range) continue;

    const Vec3 to_eye = (eye - p) / dist;
    if (model.samples.normals[i].dot(to_eye) < cos_inc) continue;

    const Vec3 dir = -to_eye;
    const auto hit = model.caster->first_hit(eye, dir);
    if (hit && hit->t < dist - cam.occlusion_tolerance) continue;

    out.push_back(i);
  }
  return out;
}

/// One captured depth frame: returns in the true (post-jitter) camera frame,
/// plus the commanded pose, the ground-truth pose, and which model samples
/// produced the returns.
struct ScanFrame {
  PointCloud points_camera;
  Pose planned_pose;
  Pose actual_pose;
  std::vector<std::size_t> sample_indices;
};

/// Positioning repeatability: the executed camera pose differs from the
/// commanded one by a rotation of exactly `rot_deg` about a random axis and
/// a translation of exactly `trans` in a random direction.
struct JitterModel {
  double rot_deg = 0.3;
  double trans = 0.003;
};

namespace detail {

inline Vec3 random_unit_vector(Rng& rng) {
  const double z = 1.0 - 2.0 * rng.uniform();
  const double phi = 2.0 * M_PI * rng.uniform();
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  return Vec3(r * std::cos(phi), r * std::sin(phi), z);
}

}  // namespace detail

inline Pose apply_pose_jitter(const Pose& planned, const JitterModel& jitter, Rng& rng) {
  if (jitter.rot_deg == 0.0 && jitter.trans == 0.0) return planned;
  const Vec3 axis = detail::random_unit_vector(rng);
  const Vec3 dir = detail::random_unit_vector(rng);
  Pose perturb = Pose::rotate_axis(axis, jitter.rot_deg * M_PI / 180.0);
  perturb.translation = jitter.trans * dir;
  return compose(perturb, planned);
}

/// Simulates a capture at `planned_pose`: jitters the pose, re-evaluates
/// visibility at the executed pose, and adds along-ray depth noise.
inline ScanFrame render_scan(const SurfaceModel& model, const Pose& planned_pose,
                             const CameraModel& cam, const JitterModel& jitter, Rng& rng) {
  ScanFrame frame;
  frame.planned_pose = planned_pose;
  frame.actual_pose = apply_pose_jitter(planned_pose, jitter, rng);
  frame.sample_indices = visible_points(model, frame.actual_pose, cam);

  const Pose world_to_cam = frame.actual_pose.inverse();
  frame.points_camera.points.reserve(frame.sample_indices.size());
  for (const std::size_t idx : frame.sample_indices) {
    Vec3 v = world_to_cam.apply(model.samples.points[idx]);
    const double d = v.norm();
    if (d > 0.0 && cam.depth_noise_sigma > 0.0) {
      const double noisy = d + rng.normal(0.0, cam.depth_noise_sigma);
      v *= noisy / d;
    }
    frame.points_camera.points.push_back(v);
  }
  return frame;
}

/// Frame points mapped into the world using the pose the planner believes in
/// (the commanded pose) — the raw input to stitching.
inline PointCloud frame_to_world(const ScanFrame& frame, bool use_actual = false) {
  PointCloud out = frame.points_camera;
  out.transform(use_actual ? frame.actual_pose : frame.planned_pose);
  return out;
}

}  // namespace bodyscan
