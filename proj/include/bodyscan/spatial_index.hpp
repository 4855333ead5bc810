#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <unordered_map>
#include <vector>

#include "bodyscan/geometry.hpp"

namespace bodyscan {

/// Uniform hash grid over a fixed point set. Queries are exact: shells of
/// cells are expanded until no closer point can exist. Ties break to the
/// lowest point index, matching nearest_neighbor().
class NearestNeighborIndex {
public:
  NearestNeighborIndex() = default;

  explicit NearestNeighborIndex(const std::vector<Vec3>& points, double cell = 0.0)
      : points_(&points) {
    if (points.empty()) return;
    if (cell <= 0.0) {
      // default cell: scale with cloud extent so a shell holds a handful of points
      Vec3 lo = points[0], hi = points[0];
      for (const auto& p : points) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
      }
      const double extent = (hi - lo).maxCoeff();
      cell = extent > 0.0 ? extent / std::max(1.0, std::cbrt(double(points.size()))) : 1.0;
    }
    cell_ = cell;
    grid_.reserve(points.size());
    key_lo_ = key_hi_ = detail::voxel_of(points[0], cell_);
    for (std::size_t i = 0; i < points.size(); ++i) {
      const auto key = detail::voxel_of(points[i], cell_);
      key_lo_ = {std::min(key_lo_.x, key.x), std::min(key_lo_.y, key.y),
                 std::min(key_lo_.z, key.z)};
      key_hi_ = {std::max(key_hi_.x, key.x), std::max(key_hi_.y, key.y),
                 std::max(key_hi_.z, key.z)};
      grid_[key].push_back(i);
    }
  }

  bool empty() const { return points_ == nullptr || points_->empty(); }
  double cell_size() const { return cell_; }

  /// Exact nearest neighbor. Throws EmptyTargetError on an empty index.
  std::pair<std::size_t, double> nearest(const Vec3& query) const {
    if (empty()) throw EmptyTargetError();
    const auto r = search(query, std::numeric_limits<double>::infinity());
    return {r.first, std::sqrt(r.second)};
  }

  /// Nearest neighbor with distance <= max_dist; nullopt when none qualifies.
  std::optional<std::pair<std::size_t, double>> nearest_within(const Vec3& query,
                                                               double max_dist) const {
    if (empty()) return std::nullopt;
    const auto r = search(query, max_dist * max_dist);
    if (r.first == kNone) return std::nullopt;
    return std::make_pair(r.first, std::sqrt(r.second));
  }

  /// All indices within radius, ascending index order.
  std::vector<std::size_t> radius_search(const Vec3& query, double radius) const {
    std::vector<std::size_t> out;
    if (empty()) return out;
    const double r2 = radius * radius;
    const auto lo = detail::voxel_of(query - Vec3::Constant(radius), cell_);
    const auto hi = detail::voxel_of(query + Vec3::Constant(radius), cell_);
    for (std::int64_t x = lo.x; x <= hi.x; ++x)
      for (std::int64_t y = lo.y; y <= hi.y; ++y)
        for (std::int64_t z = lo.z; z <= hi.z; ++z) {
          auto it = grid_.find({x, y, z});
          if (it == grid_.end()) continue;
          for (std::size_t i : it->second)
            if (((*points_)[i] - query).squaredNorm() <= r2) out.push_back(i);
        }
    std::sort(out.begin(), out.end());
    return out;
  }

  /// k nearest neighbors, optionally excluding one index (for self-queries).
  /// Sorted by (distance, index).
  std::vector<std::pair<std::size_t, double>> knn(const Vec3& query, std::size_t k,
                                                  std::optional<std::size_t> skip = {}) const {
    std::vector<std::pair<std::size_t, double>> out;
    if (empty() || k == 0) return out;
    const std::size_t want = std::min(points_->size(), k + (skip ? std::size_t(1) : 0));
    // with >= want hits inside radius R, all true kNN lie inside R as well
    double radius = cell_;
    std::vector<std::size_t> hits;
    while (true) {
      hits = radius_search(query, radius);
      if (hits.size() >= want) break;
      radius *= 2.0;
    }
    out.reserve(hits.size());
    for (std::size_t i : hits) {
      if (skip && *skip == i) continue;
      out.emplace_back(i, ((*points_)[i] - query).norm());
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
      return a.second < b.second || (a.second == b.second && a.first < b.first);
    });
    if (out.size() > k) out.resize(k);
    return out;
  }

private:
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  // Returns (index, squared distance); index == kNone when nothing within bound.
  std::pair<std::size_t, double> search(const Vec3& query, double bound_d2) const {
    std::size_t best = kNone;
    double best_d2 = bound_d2;
    const auto center = detail::voxel_of(query, cell_);
    // once ring exceeds this, every occupied cell has been visited
    const std::int64_t ring_max =
        std::max({std::max(center.x - key_lo_.x, key_hi_.x - center.x),
                  std::max(center.y - key_lo_.y, key_hi_.y - center.y),
                  std::max(center.z - key_lo_.z, key_hi_.z - center.z), std::int64_t(0)});
    for (std::int64_t ring = 0; ring <= ring_max; ++ring) {
      if (best != kNone && ring > 0) {
        const double min_dist = double(ring - 1) * cell_;
        if (min_dist * min_dist > best_d2) break;
      }
      scan_ring(query, center, ring, best, best_d2);
    }
    return {best, best_d2};
  }

  void scan_ring(const Vec3& query, const detail::VoxelKey& center, std::int64_t ring,
                 std::size_t& best, double& best_d2) const {
    auto visit = [&](std::int64_t x, std::int64_t y, std::int64_t z) {
      auto it = grid_.find({x, y, z});
      if (it == grid_.end()) return;
      for (std::size_t i : it->second) {
        const double d2 = ((*points_)[i] - query).squaredNorm();
        if (d2 < best_d2 || (d2 == best_d2 && i < best)) {
          best_d2 = d2;
          best = i;
        }
      }
    };
    if (ring == 0) {
      visit(center.x, center.y, center.z);
      return;
    }
    for (std::int64_t dx = -ring; dx <= ring; ++dx)
      for (std::int64_t dy = -ring; dy <= ring; ++dy)
        for (std::int64_t dz = -ring; dz <= ring; ++dz) {
          if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) != ring) continue;
          visit(center.x + dx, center.y + dy, center.z + dz);
        }
  }

  const std::vector<Vec3>* points_ = nullptr;
  double cell_ = 1.0;
  std::unordered_map<detail::VoxelKey, std::vector<std::size_t>, detail::VoxelKeyHash> grid_;
  detail::VoxelKey key_lo_{0, 0, 0};
  detail::VoxelKey key_hi_{0, 0, 0};
};

struct RayHit {
  double t;
  std::size_t triangle;
};

namespace detail {

/// Moller-Trumbore with t > 1e-6 against self-intersection at surface origins.
inline std::optional<double> ray_triangle(const Vec3& origin, const Vec3& dir, const Vec3& v0,
                                          const Vec3& v1, const Vec3& v2) {
  constexpr double kEps = 1e-12;
  const Vec3 e1 = v1 - v0;
  const Vec3 e2 = v2 - v0;
  const Vec3 pvec = dir.cross(e2);
  const double det = e1.dot(pvec);
  if (std::abs(det) < kEps) return std::nullopt;
  const double inv_det = 1.0 / det;
  const Vec3 tvec = origin - v0;
  const double u = tvec.dot(pvec) * inv_det;
  if (u < -1e-9 || u > 1.0 + 1e-9) return std::nullopt;
  const Vec3 qvec = tvec.cross(e1);
  const double v = dir.dot(qvec) * inv_det;
  if (v < -1e-9 || u + v > 1.0 + 1e-9) return std::nullopt;
  const double t = e2.dot(qvec) * inv_det;
  if (t <= 1e-6) return std::nullopt;
  return t;
}

}  // namespace detail

/// Median-split BVH over mesh triangles for nearest-hit and any-hit queries.
class MeshRayCaster {
public:
  MeshRayCaster() = default;

  explicit MeshRayCaster(const TriangleMesh& mesh) : mesh_(&mesh) {
    const std::size_t n = mesh.triangle_count();
    if (n == 0) return;
    order_.resize(n);
    for (std::size_t i = 0; i < n; ++i) order_[i] = i;
    centroids_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& t = mesh.triangles[i];
      centroids_[i] = (mesh.vertices[t[0]] + mesh.vertices[t[1]] + mesh.vertices[t[2]]) / 3.0;
    }
    nodes_.reserve(2 * n);
    build(0, n);
  }

  bool valid() const { return !nodes_.empty(); }

  /// Smallest t > 1e-6 hit, or nullopt. Equal-t ties break to the lowest
  /// triangle index.
  std::optional<RayHit> first_hit(const Vec3& origin, const Vec3& dir) const {
    if (nodes_.empty()) return std::nullopt;
    std::optional<RayHit> best;
    const Vec3 inv = safe_inverse(dir);
    walk(0, origin, dir, inv, std::numeric_limits<double>::infinity(), best, false);
    return best;
  }

  /// True when some triangle is hit with t in (1e-6, max_t).
  bool any_hit_before(const Vec3& origin, const Vec3& dir, double max_t) const {
    if (nodes_.empty()) return false;
    std::optional<RayHit> best;
    const Vec3 inv = safe_inverse(dir);
    walk(0, origin, dir, inv, max_t, best, true);
    return best.has_value();
  }

private:
  struct Node {
    Vec3 lo, hi;
    std::int32_t left = -1;   // child index, -1 for leaf
    std::int32_t right = -1;
    std::uint32_t begin = 0;  // leaf range into order_
    std::uint32_t end = 0;
  };

  static Vec3 safe_inverse(const Vec3& d) {
    Vec3 inv;
    for (int k = 0; k < 3; ++k)
      inv[k] = d[k] != 0.0 ? 1.0 / d[k] : std::numeric_limits<double>::infinity();
    return inv;
  }

  std::int32_t build(std::size_t begin, std::size_t end) {
    Node node;
    node.lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    node.hi = -node.lo;
    for (std::size_t i = begin; i < end; ++i) {
      const auto& t = mesh_->triangles[order_[i]];
      for (int k = 0; k < 3; ++k) {
        node.lo = node.lo.cwiseMin(mesh_->vertices[t[k]]);
        node.hi = node.hi.cwiseMax(mesh_->vertices[t[k]]);
      }
    }
    const std::int32_t index = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back(node);
    if (end - begin <= 4) {
      nodes_[index].begin = static_cast<std::uint32_t>(begin);
      nodes_[index].end = static_cast<std::uint32_t>(end);
      return index;
    }
    int axis = 0;
    const Vec3 extent = node.hi - node.lo;
    if (extent.y() > extent.x()) axis = 1;
    if (extent.z() > extent[axis]) axis = 2;
    const std::size_t mid = (begin + end) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::size_t a, std::size_t b) {
                       if (centroids_[a][axis] != centroids_[b][axis])
                         return centroids_[a][axis] < centroids_[b][axis];
                       return a < b;
                     });
    const std::int32_t l = build(begin, mid);
    const std::int32_t r = build(mid, end);
    nodes_[index].left = l;
    nodes_[index].right = r;
    return index;
  }

  static bool box_hit(const Node& n, const Vec3& origin, const Vec3& inv, double max_t) {
    double t0 = 0.0, t1 = max_t;
    for (int k = 0; k < 3; ++k) {
      double a = (n.lo[k] - origin[k]) * inv[k];
      double b = (n.hi[k] - origin[k]) * inv[k];
      if (a > b) std::swap(a, b);
      t0 = std::max(t0, a);
      t1 = std::min(t1, b);
      if (t0 > t1) return false;
    }
    return true;
  }

  void walk(std::int32_t idx, const Vec3& origin, const Vec3& dir, const Vec3& inv, double max_t,
            std::optional<RayHit>& best, bool any_hit) const {
    if (any_hit && best) return;
    const Node& n = nodes_[idx];
    const double limit = (best && !any_hit) ? best->t : max_t;
    if (!box_hit(n, origin, inv, limit)) return;
    if (n.left < 0) {
      for (std::uint32_t i = n.begin; i < n.end; ++i) {
        const std::size_t tri = order_[i];
        const auto& t = mesh_->triangles[tri];
        const auto hit = detail::ray_triangle(origin, dir, mesh_->vertices[t[0]],
                                              mesh_->vertices[t[1]], mesh_->vertices[t[2]]);
        if (!hit) continue;
        if (any_hit) {
          if (*hit < max_t) {
            best = RayHit{*hit, tri};
            return;
          }
          continue;
        }
        if (!best || *hit < best->t || (*hit == best->t && tri < best->triangle)) {
          best = RayHit{*hit, tri};
        }
      }
      return;
    }
    walk(n.left, origin, dir, inv, max_t, best, any_hit);
    walk(n.right, origin, dir, inv, max_t, best, any_hit);
  }

  const TriangleMesh* mesh_ = nullptr;
  std::vector<std::size_t> order_;
  std::vector<Vec3> centroids_;
  std::vector<Node> nodes_;
};

/// Nearest ray/mesh intersection with t > 1e-6. Direction must be unit norm.
inline std::optional<RayHit> ray_mesh_intersect(const Vec3& origin, const Vec3& dir,
                                                const TriangleMesh& mesh) {
  std::optional<RayHit> best;
  for (std::size_t i = 0; i < mesh.triangle_count(); ++i) {
    const auto& t = mesh.triangles[i];
    const auto hit = detail::ray_triangle(origin, dir, mesh.vertices[t[0]], mesh.vertices[t[1]],
                                          mesh.vertices[t[2]]);
    if (hit && (!best || *hit < best->t)) best = RayHit{*hit, i};
  }
  return best;
}

}  // namespace bodyscan
