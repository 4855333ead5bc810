#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <unordered_map>
#include <vector>

#include "bodyscan/errors.hpp"

namespace bodyscan {

using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

/// Rigid transform: unit quaternion + translation in meters. Quaternion kept
/// normalized so long composition chains do not drift.
struct Pose {
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
  Vec3 translation = Vec3::Zero();

  Pose() = default;
  Pose(const Eigen::Quaterniond& q, const Vec3& t) : rotation(q.normalized()), translation(t) {}

  static Pose identity() { return Pose(); }

  static Pose from_matrix(const Mat4& m) {
    Eigen::Quaterniond q(Mat3(m.block<3, 3>(0, 0)));
    return Pose(q, m.block<3, 1>(0, 3));
  }

  static Pose translate(const Vec3& t) { return Pose(Eigen::Quaterniond::Identity(), t); }

  static Pose rotate_axis(const Vec3& axis, double angle) {
    return Pose(Eigen::Quaterniond(Eigen::AngleAxisd(angle, axis.normalized())), Vec3::Zero());
  }

  Mat4 matrix() const {
    Mat4 m = Mat4::Identity();
    m.block<3, 3>(0, 0) = rotation.toRotationMatrix();
    m.block<3, 1>(0, 3) = translation;
    return m;
  }

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }

  /// Rotates a direction without translating it.
  Vec3 apply_dir(const Vec3& d) const { return rotation * d; }

  Pose inverse() const {
    const Eigen::Quaterniond qi = rotation.conjugate();
    return Pose(qi, qi * (-translation));
  }

  /// Rotation angle in radians, in [0, pi].
  double rotation_angle() const {
    const double w = std::min(1.0, std::abs(rotation.w()));
    return 2.0 * std::acos(w);
  }
};

/// Transform applying b first, then a.
inline Pose compose(const Pose& a, const Pose& b) {
  return Pose(a.rotation * b.rotation, a.rotation * b.translation + a.translation);
}

inline Pose operator*(const Pose& a, const Pose& b) { return compose(a, b); }

/// Angle between the rotations of two poses, radians.
inline double rotation_distance(const Pose& a, const Pose& b) {
  return compose(a.inverse(), b).rotation_angle();
}

struct PointCloud {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;  // empty or same length as points, unit norm
  std::vector<Vec3> colors;   // empty or same length, RGB in [0,1]

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_normals() const { return !normals.empty(); }
  bool has_colors() const { return !colors.empty(); }

  void transform(const Pose& pose) {
    for (auto& p : points) p = pose.apply(p);
    for (auto& n : normals) n = pose.apply_dir(n);
  }

  PointCloud transformed(const Pose& pose) const {
    PointCloud out = *this;
    out.transform(pose);
    return out;
  }

  void append(const PointCloud& other) {
    const bool keep_normals = (empty() || has_normals()) && other.has_normals();
    const bool keep_colors = (empty() || has_colors()) && other.has_colors();
    if (!keep_normals) normals.clear();
    if (!keep_colors) colors.clear();
    points.insert(points.end(), other.points.begin(), other.points.end());
    if (keep_normals) normals.insert(normals.end(), other.normals.begin(), other.normals.end());
    if (keep_colors) colors.insert(colors.end(), other.colors.begin(), other.colors.end());
  }

  /// Checks the type invariants: finite coordinates, attribute counts, unit
  /// normals within 1e-6. Throws Error on violation.
  void validate() const {
    if (!normals.empty() && normals.size() != points.size())
      throw Error("normal count does not match point count");
    if (!colors.empty() && colors.size() != points.size())
      throw Error("color count does not match point count");
    for (const auto& p : points)
      if (!p.allFinite()) throw Error("non-finite point coordinate");
    for (const auto& n : normals)
      if (!n.allFinite() || std::abs(n.norm() - 1.0) > 1e-6)
        throw Error("normal is not unit length");
  }
};

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<std::uint32_t, 3>> triangles;

  std::size_t triangle_count() const { return triangles.size(); }
  bool empty() const { return triangles.empty(); }

  Vec3 triangle_normal(std::size_t i) const {
    const auto& t = triangles[i];
    const Vec3 e1 = vertices[t[1]] - vertices[t[0]];
    const Vec3 e2 = vertices[t[2]] - vertices[t[0]];
    return e1.cross(e2).normalized();
  }

  double triangle_area(std::size_t i) const {
    const auto& t = triangles[i];
    const Vec3 e1 = vertices[t[1]] - vertices[t[0]];
    const Vec3 e2 = vertices[t[2]] - vertices[t[0]];
    return 0.5 * e1.cross(e2).norm();
  }

  double surface_area() const {
    double a = 0.0;
    for (std::size_t i = 0; i < triangles.size(); ++i) a += triangle_area(i);
    return a;
  }

  /// Drops out-of-range indices and degenerate triangles (area <= 1e-12 m^2).
  /// Returns the number of triangles removed.
  std::size_t prune_degenerate() {
    std::vector<std::array<std::uint32_t, 3>> kept;
    kept.reserve(triangles.size());
    for (const auto& t : triangles) {
      if (t[0] >= vertices.size() || t[1] >= vertices.size() || t[2] >= vertices.size()) continue;
      const Vec3 e1 = vertices[t[1]] - vertices[t[0]];
      const Vec3 e2 = vertices[t[2]] - vertices[t[0]];
      if (0.5 * e1.cross(e2).norm() <= 1e-12) continue;
      kept.push_back(t);
    }
    const std::size_t removed = triangles.size() - kept.size();
    triangles = std::move(kept);
    return removed;
  }

  void validate() const {
    for (const auto& t : triangles) {
      if (t[0] >= vertices.size() || t[1] >= vertices.size() || t[2] >= vertices.size())
        throw Error("triangle index out of range");
      const Vec3 e1 = vertices[t[1]] - vertices[t[0]];
      const Vec3 e2 = vertices[t[2]] - vertices[t[0]];
      if (0.5 * e1.cross(e2).norm() <= 1e-12) throw Error("degenerate triangle");
    }
  }
};

/// Planar occupancy grid, true = blocked. Cell (0,0) covers
/// [origin, origin + cell_size) on both axes.
struct OccupancyGrid {
  Vec2 origin = Vec2::Zero();
  double cell_size = 0.1;
  int nx = 0;
  int ny = 0;
  std::vector<std::uint8_t> cells;  // row-major, index = iy * nx + ix

  OccupancyGrid() = default;
  OccupancyGrid(const Vec2& origin_, double cell_size_, int nx_, int ny_)
      : origin(origin_), cell_size(cell_size_), nx(nx_), ny(ny_),
        cells(static_cast<std::size_t>(nx_) * ny_, 0) {
    if (cell_size_ <= 0.0) throw Error("cell_size must be positive");
  }

  bool in_bounds(int ix, int iy) const { return ix >= 0 && ix < nx && iy >= 0 && iy < ny; }

  bool blocked(int ix, int iy) const {
    return !in_bounds(ix, iy) || cells[static_cast<std::size_t>(iy) * nx + ix] != 0;
  }

  void set_blocked(int ix, int iy, bool value = true) {
    if (in_bounds(ix, iy)) cells[static_cast<std::size_t>(iy) * nx + ix] = value ? 1 : 0;
  }

  std::pair<int, int> world_to_cell(const Vec2& p) const {
    return {static_cast<int>(std::floor((p.x() - origin.x()) / cell_size)),
            static_cast<int>(std::floor((p.y() - origin.y()) / cell_size))};
  }

  Vec2 cell_center(int ix, int iy) const {
    return origin + Vec2((ix + 0.5) * cell_size, (iy + 0.5) * cell_size);
  }

  /// Center of the free cell closest to `p` (ties broken in row-major order).
  /// Lets callers dock a start position that lies outside the drivable region.
  Vec2 nearest_free(const Vec2& p) const {
    double best = std::numeric_limits<double>::infinity();
    int bx = -1, by = -1;
    for (int iy = 0; iy < ny; ++iy)
      for (int ix = 0; ix < nx; ++ix) {
        if (blocked(ix, iy)) continue;
        const double d = (cell_center(ix, iy) - p).squaredNorm();
        if (d < best) { best = d; bx = ix; by = iy; }
      }
    if (bx < 0) throw Error("occupancy grid has no free cell");
    return cell_center(bx, by);
  }
};

namespace detail {

struct VoxelKey {
  std::int64_t x, y, z;
  bool operator==(const VoxelKey&) const = default;
};

struct VoxelKeyHash {
  std::size_t operator()(const VoxelKey& k) const {
    std::uint64_t h = 1469598103934665603ULL;
    for (std::int64_t v : {k.x, k.y, k.z}) {
      h ^= static_cast<std::uint64_t>(v);
      h *= 1099511628211ULL;
    }
    return static_cast<std::size_t>(h);
  }
};

inline VoxelKey voxel_of(const Vec3& p, double voxel) {
  return {static_cast<std::int64_t>(std::floor(p.x() / voxel)),
          static_cast<std::int64_t>(std::floor(p.y() / voxel)),
          static_cast<std::int64_t>(std::floor(p.z() / voxel))};
}

}  // namespace detail

/// One point per occupied voxel: centroid of members, normals/colors averaged
/// (normals renormalized). Output order is first-occurrence order, so the
/// result is deterministic for a given input order.
inline PointCloud voxel_downsample(const PointCloud& cloud, double voxel) {
  if (voxel <= 0.0) throw Error("voxel size must be positive");
  PointCloud out;
  if (cloud.empty()) return out;

  struct Acc {
    Vec3 point = Vec3::Zero();
    Vec3 normal = Vec3::Zero();
    Vec3 color = Vec3::Zero();
    std::size_t count = 0;
  };
  std::unordered_map<detail::VoxelKey, std::size_t, detail::VoxelKeyHash> slots;
  std::vector<Acc> accs;
  slots.reserve(cloud.size());

  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto key = detail::voxel_of(cloud.points[i], voxel);
    auto [it, inserted] = slots.try_emplace(key, accs.size());
    if (inserted) accs.emplace_back();
    Acc& a = accs[it->second];
    a.point += cloud.points[i];
    if (cloud.has_normals()) a.normal += cloud.normals[i];
    if (cloud.has_colors()) a.color += cloud.colors[i];
    ++a.count;
  }

  out.points.reserve(accs.size());
  for (const Acc& a : accs) {
    out.points.push_back(a.point / static_cast<double>(a.count));
    if (cloud.has_normals()) {
      const double n = a.normal.norm();
      out.normals.push_back(n > 1e-12 ? Vec3(a.normal / n) : Vec3(0, 0, 1));
    }
    if (cloud.has_colors()) out.colors.push_back(a.color / static_cast<double>(a.count));
  }
  return out;
}

/// Exact nearest neighbor by linear scan; ties break to the lowest index.
inline std::pair<std::size_t, double> nearest_neighbor(const Vec3& query,
                                                       const PointCloud& target) {
  if (target.empty()) throw EmptyTargetError();
  std::size_t best = 0;
  double best_d2 = (target.points[0] - query).squaredNorm();
  for (std::size_t i = 1; i < target.size(); ++i) {
    const double d2 = (target.points[i] - query).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best = i;
    }
  }
  return {best, std::sqrt(best_d2)};
}

}  // namespace bodyscan
