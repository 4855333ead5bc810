#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "bodyscan/body_models.hpp"
#include "bodyscan/geometry.hpp"

namespace bodyscan {

/// Kinematic and geometric description of the platform: a rectangular mobile
/// base carrying a 6R arm (UR3-style DH chain) with a wrist-mounted RGB-D
/// camera looking along the flange z axis.
struct RobotParams {
  std::array<double, 6> dh_a{};
  std::array<double, 6> dh_d{};
  std::array<double, 6> dh_alpha{};
  std::array<double, 6> joint_min{};
  std::array<double, 6> joint_max{};
  double base_height = 0.94;      // arm mounting platform above the floor
  // Compact differential-drive base. The half-diagonal (0.255 m) must stay
  // below the closest couch standoff minus half a nav-grid cell diagonal
  // (0.35 - 0.071), or the grid inflation would block the docking cells.
  double footprint_x = 0.36;      // base length (drive direction)
  double footprint_y = 0.36;      // base width
  Pose base_to_arm;               // platform top -> arm base frame
  Pose flange_to_camera = Pose::translate(Vec3(0.0, 0.0, 0.05));
  double clearance = 0.05;        // minimum distance kept from patient/couch

  double footprint_half_diagonal() const {
    return 0.5 * std::hypot(footprint_x, footprint_y);
  }
};

inline RobotParams ur3_params() {
  RobotParams p;
  p.dh_a = {0.0, -0.24365, -0.21325, 0.0, 0.0, 0.0};
  p.dh_d = {0.1519, 0.0, 0.0, 0.11235, 0.08535, 0.0819};
  p.dh_alpha = {M_PI / 2.0, 0.0, 0.0, M_PI / 2.0, -M_PI / 2.0, 0.0};
  p.joint_min.fill(-2.0 * M_PI);
  p.joint_max.fill(2.0 * M_PI);
  return p;
}

/// Planar base placement: position on the floor plus heading about z.
struct BasePose {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;  // radians, normalized to (-pi, pi]

  BasePose() = default;
  BasePose(double x_, double y_, double heading_) : x(x_), y(y_), heading(wrap(heading_)) {}

  static double wrap(double a) {
    a = std::fmod(a + M_PI, 2.0 * M_PI);
    if (a < 0.0) a += 2.0 * M_PI;
    a -= M_PI;
    return a <= -M_PI ? M_PI : (a > M_PI ? a - 2.0 * M_PI : a);
  }

  Vec2 position() const { return Vec2(x, y); }
  Pose pose() const {
    Pose p = Pose::rotate_axis(Vec3::UnitZ(), heading);
    p.translation = Vec3(x, y, 0.0);
    return p;
  }
  // base rectangle corners on the floor, ccw
  std::array<Vec2, 4> footprint_corners(const RobotParams& params) const {
    const double hx = 0.5 * params.footprint_x, hy = 0.5 * params.footprint_y;
    const double c = std::cos(heading), s = std::sin(heading);
    std::array<Vec2, 4> out;
    const Vec2 local[4] = {{hx, hy}, {-hx, hy}, {-hx, -hy}, {hx, -hy}};
    for (int i = 0; i < 4; ++i)
      out[i] = Vec2(x + c * local[i].x() - s * local[i].y(),
                    y + s * local[i].x() + c * local[i].y());
    return out;
  }
};

struct ArmConfig {
  std::array<double, 6> joints{};
};

struct FkResult {
  Pose flange;
  Pose camera;
  std::array<Vec3, 7> joint_origins;  // arm base frame origin, then after each joint
};

namespace detail {

// standard DH link transform: Rz(theta) Tz(d) Tx(a) Rx(alpha)
inline Pose dh_transform(double theta, double d, double a, double alpha) {
  Pose rz = Pose::rotate_axis(Vec3::UnitZ(), theta);
  rz.translation = Vec3(0.0, 0.0, d);
  Pose tx_rx = Pose::rotate_axis(Vec3::UnitX(), alpha);
  tx_rx.translation = Vec3(a, 0.0, 0.0);
  return compose(rz, tx_rx);
}

}  // namespace detail

/// World pose of every link frame, the flange and the camera.
inline FkResult forward_kinematics(const RobotParams& params, const BasePose& base,
                                   const ArmConfig& config) {
  FkResult out;
  Pose t = compose(base.pose(), Pose::translate(Vec3(0.0, 0.0, params.base_height)));
  t = compose(t, params.base_to_arm);
  out.joint_origins[0] = t.translation;
  for (int i = 0; i < 6; ++i) {
    t = compose(t, detail::dh_transform(config.joints[i], params.dh_d[i], params.dh_a[i],
                                        params.dh_alpha[i]));
    out.joint_origins[i + 1] = t.translation;
  }
  out.flange = t;
  out.camera = compose(t, params.flange_to_camera);
  return out;
}

/// Camera pose at `eye` with the optical axis (+z) toward `target`; +x is kept
/// horizontal where possible.
inline Pose make_look_at_pose(const Vec3& eye, const Vec3& target,
                              const Vec3& up_hint = Vec3::UnitZ()) {
  Vec3 z = target - eye;
  if (z.norm() < 1e-12) throw Error("look-at target coincides with eye");
  z.normalize();
  Vec3 x = up_hint.cross(z);
  if (x.norm() < 1e-9) x = Vec3::UnitX().cross(z);
  if (x.norm() < 1e-9) x = Vec3::UnitY().cross(z);
  x.normalize();
  const Vec3 y = z.cross(x);
  Mat3 r;
  r.col(0) = x;
  r.col(1) = y;
  r.col(2) = z;
  Pose p;
  p.rotation = Eigen::Quaterniond(r);
  p.rotation.normalize();
  p.translation = eye;
  return p;
}

/// Damped-least-squares IK for the camera pose. Returns the joint vector when
/// position error < 1 mm and rotation error < 0.5 deg within the iteration
/// budget, otherwise nullopt. Joint values stay inside the limits.
inline std::optional<ArmConfig> solve_arm_ik(const RobotParams& params, const BasePose& base,
                                             const Pose& camera_target,
                                             const ArmConfig& initial_guess,
                                             int max_iterations = 150) {
  constexpr double kPosTol = 1e-3;
  constexpr double kRotTol = 0.5 * M_PI / 180.0;
  constexpr double kDamping = 0.05;
  constexpr double kMaxStep = 0.5;  // rad, per-joint clamp

  ArmConfig q = initial_guess;
  for (int i = 0; i < 6; ++i)
    q.joints[i] = std::clamp(q.joints[i], params.joint_min[i], params.joint_max[i]);

  double prev_err = std::numeric_limits<double>::infinity();
  int stalled = 0;
  for (int iter = 0; iter < max_iterations; ++iter) {
    // chain poses for the geometric Jacobian
    Pose t = compose(base.pose(), Pose::translate(Vec3(0.0, 0.0, params.base_height)));
    t = compose(t, params.base_to_arm);
    std::array<Vec3, 6> axis_origin, axis_dir;
    for (int i = 0; i < 6; ++i) {
      axis_origin[i] = t.translation;
      axis_dir[i] = t.rotation * Vec3::UnitZ();
      t = compose(t, detail::dh_transform(q.joints[i], params.dh_d[i], params.dh_a[i],
                                          params.dh_alpha[i]));
    }
    const Pose camera = compose(t, params.flange_to_camera);

    const Vec3 pos_err = camera_target.translation - camera.translation;
    const Eigen::Quaterniond rot_err_q = camera_target.rotation * camera.rotation.conjugate();
    const Eigen::AngleAxisd rot_err(rot_err_q.normalized());
    double ang = rot_err.angle();
    Vec3 rot_vec = rot_err.axis() * ang;
    if (ang > M_PI) rot_vec = rot_err.axis() * (ang - 2.0 * M_PI);

    if (pos_err.norm() < kPosTol && rot_vec.norm() < kRotTol) return q;

    // unreachable targets drive the iteration into a local minimum long before
    // the budget runs out; give up once the error stops shrinking
    const double err_norm = pos_err.norm() + rot_vec.norm();
    stalled = (err_norm > prev_err - 1e-9) ? stalled + 1 : 0;
    if (stalled >= 8) return std::nullopt;
    prev_err = std::min(prev_err, err_norm);

    Eigen::Matrix<double, 6, 6> jac;
    for (int i = 0; i < 6; ++i) {
      jac.block<3, 1>(0, i) = axis_dir[i].cross(camera.translation - axis_origin[i]);
      jac.block<3, 1>(3, i) = axis_dir[i];
    }
    Eigen::Matrix<double, 6, 1> err;
    err << pos_err, rot_vec;

    const Eigen::Matrix<double, 6, 6> jjt =
        jac * jac.transpose() + kDamping * kDamping * Eigen::Matrix<double, 6, 6>::Identity();
    Eigen::Matrix<double, 6, 1> dq = jac.transpose() * jjt.ldlt().solve(err);
    for (int i = 0; i < 6; ++i) {
      dq[i] = std::clamp(dq[i], -kMaxStep, kMaxStep);
      q.joints[i] = std::clamp(q.joints[i] + dq[i], params.joint_min[i], params.joint_max[i]);
    }
  }
  return std::nullopt;
}

namespace detail {

// separating-axis test for an oriented rectangle vs an axis-aligned one (xy)
inline bool rects_overlap(const std::array<Vec2, 4>& corners, double x0, double y0, double x1,
                          double y1) {
  double cx0 = corners[0].x(), cx1 = corners[0].x();
  double cy0 = corners[0].y(), cy1 = corners[0].y();
  for (const auto& c : corners) {
    cx0 = std::min(cx0, c.x());
    cx1 = std::max(cx1, c.x());
    cy0 = std::min(cy0, c.y());
    cy1 = std::max(cy1, c.y());
  }
  if (cx1 < x0 || cx0 > x1 || cy1 < y0 || cy0 > y1) return false;
  // axes of the oriented rectangle
  for (int e = 0; e < 2; ++e) {
    const Vec2 edge = corners[e + 1] - corners[e];
    const Vec2 axis(-edge.y(), edge.x());
    double lo_a = 1e300, hi_a = -1e300;
    for (const auto& c : corners) {
      const double v = axis.dot(c);
      lo_a = std::min(lo_a, v);
      hi_a = std::max(hi_a, v);
    }
    const Vec2 aabb[4] = {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
    double lo_b = 1e300, hi_b = -1e300;
    for (const auto& c : aabb) {
      const double v = axis.dot(c);
      lo_b = std::min(lo_b, v);
      hi_b = std::max(hi_b, v);
    }
    if (hi_a < lo_b || lo_a > hi_b) return false;
  }
  return true;
}

inline double point_aabb_distance(const Vec3& p, const Vec3& lo, const Vec3& hi) {
  Vec3 g;
  for (int i = 0; i < 3; ++i) g[i] = std::max({lo[i] - p[i], 0.0, p[i] - hi[i]});
  return g.norm();
}

}  // namespace detail

/// True when the configuration is safe: joints inside limits, base rectangle
/// clear of the couch, and every arm segment (sampled points between link
/// origins, plus the camera) at least `params.clearance` from both the couch
/// box and every body sample.
inline bool check_config(const RobotParams& params, const BasePose& base,
                         const ArmConfig& config, const SurfaceModel& model) {
  for (int i = 0; i < 6; ++i)
    if (config.joints[i] < params.joint_min[i] - 1e-9 ||
        config.joints[i] > params.joint_max[i] + 1e-9)
      return false;

  const CouchSpec& couch = model.couch;
  if (detail::rects_overlap(base.footprint_corners(params), -0.5 * couch.length,
                            -0.5 * couch.width, 0.5 * couch.length, 0.5 * couch.width))
    return false;

  const FkResult fk = forward_kinematics(params, base, config);
  const Vec3 couch_lo(-0.5 * couch.length, -0.5 * couch.width, 0.0);
  const Vec3 couch_hi(0.5 * couch.length, 0.5 * couch.width, couch.height);
  const double clear2 = params.clearance * params.clearance;

  std::vector<Vec3> probes;
  probes.reserve(6 * 4 + 2);
  for (int i = 0; i < 6; ++i)
    for (int s = 0; s <= 3; ++s)
      probes.push_back(fk.joint_origins[i] +
                       (s / 3.0) * (fk.joint_origins[i + 1] - fk.joint_origins[i]));
  probes.push_back(fk.flange.translation);
  probes.push_back(fk.camera.translation);

  for (const auto& p : probes) {
    if (detail::point_aabb_distance(p, couch_lo, couch_hi) < params.clearance) return false;
    for (const auto& q : model.samples.points)
      if ((p - q).squaredNorm() < clear2) return false;
  }
  return true;
}

/// Hand-eye calibration (AX = XB): recovers the flange-to-camera transform
/// from paired relative motions. Needs at least two motions with non-parallel
/// rotation axes, else DegenerateMotionsError.
inline Pose solve_hand_eye(const std::vector<Pose>& flange_motions,
                           const std::vector<Pose>& camera_motions) {
  if (flange_motions.size() != camera_motions.size())
    throw Error("hand-eye: motion lists differ in length");
  const std::size_t n = flange_motions.size();
  if (n < 2) throw DegenerateMotionsError("hand-eye needs at least two motion pairs");

  auto log_rot = [](const Eigen::Quaterniond& q) {
    Eigen::AngleAxisd aa(q.normalized());
    double ang = aa.angle();
    Vec3 axis = aa.axis();
    if (ang > M_PI) {
      ang = 2.0 * M_PI - ang;
      axis = -axis;
    }
    return Vec3(axis * ang);
  };

  Mat3 m = Mat3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 alpha = log_rot(flange_motions[i].rotation);
    const Vec3 beta = log_rot(camera_motions[i].rotation);
    m += beta * alpha.transpose();
  }

  const Mat3 mtm = m.transpose() * m;
  Eigen::SelfAdjointEigenSolver<Mat3> eig(mtm);
  if (eig.eigenvalues().minCoeff() < 1e-12)
    throw DegenerateMotionsError("hand-eye motions span fewer than two rotation axes");
  Mat3 inv_sqrt = Mat3::Zero();
  for (int i = 0; i < 3; ++i)
    inv_sqrt += eig.eigenvectors().col(i) * eig.eigenvectors().col(i).transpose() /
                std::sqrt(eig.eigenvalues()[i]);
  const Mat3 rx = inv_sqrt * m.transpose();

  Eigen::MatrixXd lhs(3 * n, 3);
  Eigen::VectorXd rhs(3 * n);
  for (std::size_t i = 0; i < n; ++i) {
    lhs.block<3, 3>(3 * i, 0) =
        flange_motions[i].rotation.toRotationMatrix() - Mat3::Identity();
    rhs.segment<3>(3 * i) = rx * camera_motions[i].translation - flange_motions[i].translation;
  }
  const Vec3 tx = lhs.colPivHouseholderQr().solve(rhs);

  Pose x;
  x.rotation = Eigen::Quaterniond(rx).normalized();
  x.translation = tx;
  return x;
}

}  // namespace bodyscan
