#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <vector>

#include "bodyscan/geometry.hpp"
#include "bodyscan/rng.hpp"
#include "bodyscan/spatial_index.hpp"

namespace bodyscan {

/// Scan couch. The world frame puts the couch top center at (0,0,height),
/// length along x, width along y; the couch box spans z in [0, height].
struct CouchSpec {
  double length = 2.0;
  double width = 0.7;
  double height = 0.67;

  bool contains_xy(const Vec2& p) const {
    return std::abs(p.x()) <= 0.5 * length && std::abs(p.y()) <= 0.5 * width;
  }
};

/// Body surface used for planning and as simulated ground truth: resolution-
/// controlled surface samples plus the source mesh for occlusion tests.
struct SurfaceModel {
  PointCloud samples;  // with outward normals; every sample lies on the mesh
  std::shared_ptr<const TriangleMesh> mesh;
  std::shared_ptr<const MeshRayCaster> caster;
  double resolution = 0.1;
  CouchSpec couch;
  bool underside_stripped = false;

  std::size_t sample_count() const { return samples.size(); }

  static SurfaceModel assemble(PointCloud samples, TriangleMesh mesh, double resolution,
                               const CouchSpec& couch) {
    SurfaceModel m;
    m.samples = std::move(samples);
    auto mesh_ptr = std::make_shared<TriangleMesh>(std::move(mesh));
    mesh_ptr->prune_degenerate();
    m.mesh = mesh_ptr;
    m.caster = std::make_shared<MeshRayCaster>(*m.mesh);
    m.resolution = resolution;
    m.couch = couch;
    return m;
  }
};

namespace detail {

// Radial projection of direction angle theta onto the inscribed polygon chord
// between arc vertices, in the (y, z) plane of a cylinder cross-section.
inline Vec2 chord_point(double theta, double radius, double theta_a, double theta_b) {
  const Vec2 a(radius * std::cos(theta_a), radius * std::sin(theta_a));
  const Vec2 b(radius * std::cos(theta_b), radius * std::sin(theta_b));
  const Vec2 d(std::cos(theta), std::sin(theta));
  const Vec2 ab = b - a;
  const double denom = d.x() * ab.y() - d.y() * ab.x();
  const double u = (a.x() * d.y() - a.y() * d.x()) / denom;
  return a + u * ab;
}

}  // namespace detail

/// Half-cylinder phantom, flat side down on the couch top, axis along the
/// couch length. Curved surface and both end caps are sampled at spacing ~=
/// resolution; the mesh adds a bottom face so the body is watertight for
/// occlusion tests. Samples lie exactly on mesh facets.
inline SurfaceModel make_half_cylinder(double length, double radius, const CouchSpec& couch,
                                       double resolution) {
  if (length <= 0.0 || radius <= 0.0 || resolution <= 0.0)
    throw Error("half-cylinder dimensions must be positive");
  if (resolution > radius)
    throw ResolutionTooCoarseError("resolution exceeds half-cylinder radius");

  const double h = couch.height;
  const double x0 = -0.5 * length, x1 = 0.5 * length;

  // fixed-accuracy tessellation: the body shape does not degrade with the
  // sampling resolution (chord sagitta ~2 mm at r=0.2)
  const int mesh_arcs = 12;
  const int mesh_cols = 8;
  TriangleMesh mesh;
  auto vertex_at = [&](int col, int arc) {
    const double x = x0 + (x1 - x0) * double(col) / mesh_cols;
    const double theta = M_PI * double(arc) / mesh_arcs;
    return Vec3(x, radius * std::cos(theta), h + radius * std::sin(theta));
  };
  // curved strip vertices, grid (mesh_cols+1) x (mesh_arcs+1)
  for (int c = 0; c <= mesh_cols; ++c)
    for (int a = 0; a <= mesh_arcs; ++a) mesh.vertices.push_back(vertex_at(c, a));
  auto grid_index = [&](int c, int a) { return std::uint32_t(c * (mesh_arcs + 1) + a); };
  for (int c = 0; c < mesh_cols; ++c)
    for (int a = 0; a < mesh_arcs; ++a) {
      // outward = away from axis; +x column direction, ccw theta
      mesh.triangles.push_back({grid_index(c, a), grid_index(c, a + 1), grid_index(c + 1, a)});
      mesh.triangles.push_back(
          {grid_index(c + 1, a), grid_index(c, a + 1), grid_index(c + 1, a + 1)});
    }
  // end caps: fan from the chord midpoint
  for (int side = 0; side < 2; ++side) {
    const int col = side == 0 ? 0 : mesh_cols;
    const double sign = side == 0 ? -1.0 : 1.0;  // outward cap normal: -x at x0, +x at x1
    const std::uint32_t center = std::uint32_t(mesh.vertices.size());
    mesh.vertices.emplace_back(col == 0 ? x0 : x1, 0.0, h);
    for (int a = 0; a < mesh_arcs; ++a) {
      if (sign < 0)
        mesh.triangles.push_back({center, grid_index(col, a), grid_index(col, a + 1)});
      else
        mesh.triangles.push_back({center, grid_index(col, a + 1), grid_index(col, a)});
    }
  }
  // bottom face (z = couch top)
  {
    const std::uint32_t b0 = std::uint32_t(mesh.vertices.size());
    mesh.vertices.emplace_back(x0, radius, h);
    mesh.vertices.emplace_back(x1, radius, h);
    mesh.vertices.emplace_back(x1, -radius, h);
    mesh.vertices.emplace_back(x0, -radius, h);
    mesh.triangles.push_back({b0, b0 + 1, b0 + 2});
    mesh.triangles.push_back({b0, b0 + 2, b0 + 3});
  }

  PointCloud samples;
  // curved surface: cell-centered grid, samples projected to the facet chords
  const int nx = std::max(1, int(std::lround(length / resolution)));
  const int ntheta = std::max(1, int(std::lround(M_PI * radius / resolution)));
  for (int i = 0; i < nx; ++i) {
    const double x = x0 + (i + 0.5) * length / nx;
    for (int j = 0; j < ntheta; ++j) {
      const double theta = (j + 0.5) * M_PI / ntheta;
      const int arc = std::min(mesh_arcs - 1, int(theta / (M_PI / mesh_arcs)));
      const double ta = M_PI * arc / mesh_arcs;
      const double tb = M_PI * (arc + 1) / mesh_arcs;
      const Vec2 yz = detail::chord_point(theta, radius, ta, tb);
      samples.points.emplace_back(x, yz.x(), h + yz.y());
      const double tm = 0.5 * (ta + tb);  // facet normal
      samples.normals.emplace_back(0.0, std::cos(tm), std::sin(tm));
    }
  }
  // end caps: polar rings; keep inside the inscribed polygon boundary
  const double cap_limit = radius * std::cos(0.5 * M_PI / mesh_arcs) * 0.999;
  for (int side = 0; side < 2; ++side) {
    const double x = side == 0 ? x0 : x1;
    const double nx_dir = side == 0 ? -1.0 : 1.0;
    for (int k = 0;; ++k) {
      const double rk = (k + 0.5) * resolution;
      if (rk > cap_limit) break;
      const int m = std::max(1, int(std::lround(M_PI * rk / resolution)));
      for (int j = 0; j < m; ++j) {
        const double phi = (j + 0.5) * M_PI / m;
        samples.points.emplace_back(x, rk * std::cos(phi), h + rk * std::sin(phi));
        samples.normals.emplace_back(nx_dir, 0.0, 0.0);
      }
    }
  }

  return SurfaceModel::assemble(std::move(samples), std::move(mesh), resolution, couch);
}

/// Area-weighted random sampling followed by voxel thinning at `resolution`.
/// Normals come from triangle winding; if their mean z is negative the whole
/// set is flipped so the body faces away from the couch. `reject` filters
/// candidate samples (used to drop points buried inside a composite body).
inline PointCloud sample_mesh_surface(const TriangleMesh& mesh, double resolution,
                                      std::uint64_t seed,
                                      const std::function<bool(const Vec3&)>& reject = {}) {
  if (mesh.empty()) throw EmptyMeshError();
  if (resolution <= 0.0) throw Error("resolution must be positive");

  std::vector<double> cumulative(mesh.triangle_count());
  double total = 0.0;
  for (std::size_t i = 0; i < mesh.triangle_count(); ++i) {
    total += mesh.triangle_area(i);
    cumulative[i] = total;
  }
  if (total <= 0.0) throw EmptyMeshError();

  const std::size_t target = std::max<std::size_t>(
      64, static_cast<std::size_t>(4.0 * total / (resolution * resolution)));
  Rng rng(seed);
  PointCloud dense;
  dense.points.reserve(target);
  dense.normals.reserve(target);
  for (std::size_t s = 0; s < target; ++s) {
    const double u = rng.uniform() * total;
    const std::size_t tri =
        std::lower_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin();
    const auto& t = mesh.triangles[std::min(tri, mesh.triangle_count() - 1)];
    double b1 = rng.uniform(), b2 = rng.uniform();
    if (b1 + b2 > 1.0) {
      b1 = 1.0 - b1;
      b2 = 1.0 - b2;
    }
    const Vec3 p = mesh.vertices[t[0]] + b1 * (mesh.vertices[t[1]] - mesh.vertices[t[0]]) +
                   b2 * (mesh.vertices[t[2]] - mesh.vertices[t[0]]);
    if (reject && reject(p)) continue;
    dense.points.push_back(p);
    dense.normals.push_back(mesh.triangle_normal(std::min(tri, mesh.triangle_count() - 1)));
  }

  // thin to one representative per voxel; keep the first sample so points
  // stay on the surface
  PointCloud out;
  std::unordered_map<detail::VoxelKey, bool, detail::VoxelKeyHash> seen;
  seen.reserve(dense.size());
  for (std::size_t i = 0; i < dense.size(); ++i) {
    const auto key = detail::voxel_of(dense.points[i], resolution);
    if (seen.try_emplace(key, true).second) {
      out.points.push_back(dense.points[i]);
      out.normals.push_back(dense.normals[i]);
    }
  }

  double mean_z = 0.0;
  for (const auto& n : out.normals) mean_z += n.z();
  if (!out.normals.empty() && mean_z < 0.0)
    for (auto& n : out.normals) n = -n;
  return out;
}

/// Removes couch-contact samples no camera can observe: normal z below
/// cos(80 deg) and height within 2*resolution of the couch top. Idempotent.
inline SurfaceModel strip_underside(const SurfaceModel& model) {
  const double z_threshold = std::cos(80.0 * M_PI / 180.0);
  const double band = model.couch.height + 2.0 * model.resolution;
  SurfaceModel out = model;
  out.samples.points.clear();
  out.samples.normals.clear();
  out.samples.colors.clear();
  for (std::size_t i = 0; i < model.samples.size(); ++i) {
    const bool facing_away = model.samples.normals[i].z() < z_threshold;
    const bool near_couch = model.samples.points[i].z() <= band;
    if (facing_away && near_couch) continue;
    out.samples.points.push_back(model.samples.points[i]);
    out.samples.normals.push_back(model.samples.normals[i]);
    if (model.samples.has_colors()) out.samples.colors.push_back(model.samples.colors[i]);
  }
  out.underside_stripped = true;
  return out;
}

// ---------------------------------------------------------------------------
// Built-in humanoid fixture. A supine figure assembled from spheres and
// elliptic cylinders: head, neck, torso, pelvis, legs, feet and arms resting
// beside the torso (the arm/torso gap is what makes one-sided access lossy).
// ---------------------------------------------------------------------------

namespace detail {

struct BodyPart {
  enum Kind { SphereKind, CylinderXKind } kind;
  Vec3 center;      // sphere center, or cylinder axis midpoint
  double x0 = 0, x1 = 0;  // cylinder extent along x
  double ry = 0, rz = 0;  // cylinder semi-axes (y, z); sphere uses ry as radius

  // Tested against the faceted surface actually meshed, not the smooth
  // quadric: mid-facet points of an inscribed 16-gon sit at cos(pi/16) of the
  // smooth radius, so the threshold must shrink accordingly or every mid-facet
  // surface sample of the part itself would count as buried.
  bool inside(const Vec3& p, double margin) const {
    if (kind == SphereKind) return (p - center).norm() < 0.96 * ry - margin;
    if (p.x() < x0 + margin || p.x() > x1 - margin) return false;
    const double dy = (p.y() - center.y()) / ry;
    const double dz = (p.z() - center.z()) / rz;
    const double shrink = 0.9807852804032304 - margin / std::min(ry, rz);  // cos(pi/16)
    return dy * dy + dz * dz < shrink * shrink;
  }
};

inline void append_sphere(TriangleMesh& mesh, const Vec3& c, double r, int stacks = 10,
                          int slices = 16) {
  const std::uint32_t base = std::uint32_t(mesh.vertices.size());
  for (int i = 0; i <= stacks; ++i) {
    const double phi = M_PI * double(i) / stacks;  // 0 at +z pole
    for (int j = 0; j < slices; ++j) {
      const double th = 2.0 * M_PI * double(j) / slices;
      mesh.vertices.push_back(c + r * Vec3(std::sin(phi) * std::cos(th),
                                           std::sin(phi) * std::sin(th), std::cos(phi)));
    }
  }
  auto at = [&](int i, int j) { return base + std::uint32_t(i * slices + (j % slices)); };
  for (int i = 0; i < stacks; ++i)
    for (int j = 0; j < slices; ++j) {
      mesh.triangles.push_back({at(i, j), at(i + 1, j), at(i + 1, j + 1)});
      mesh.triangles.push_back({at(i, j), at(i + 1, j + 1), at(i, j + 1)});
    }
}

inline void append_cylinder_x(TriangleMesh& mesh, double x0, double x1, double yc, double zc,
                              double ry, double rz, int slices = 16) {
  const std::uint32_t base = std::uint32_t(mesh.vertices.size());
  for (int side = 0; side < 2; ++side) {
    const double x = side == 0 ? x0 : x1;
    for (int j = 0; j < slices; ++j) {
      const double th = 2.0 * M_PI * double(j) / slices;
      mesh.vertices.emplace_back(x, yc + ry * std::cos(th), zc + rz * std::sin(th));
    }
  }
  auto at = [&](int side, int j) { return base + std::uint32_t(side * slices + (j % slices)); };
  for (int j = 0; j < slices; ++j) {
    // outward winding: looking from +x, ring angles run ccw in (y,z)
    mesh.triangles.push_back({at(0, j), at(1, j), at(1, j + 1)});
    mesh.triangles.push_back({at(0, j), at(1, j + 1), at(0, j + 1)});
  }
  // caps
  for (int side = 0; side < 2; ++side) {
    const std::uint32_t center = std::uint32_t(mesh.vertices.size());
    mesh.vertices.emplace_back(side == 0 ? x0 : x1, yc, zc);
    for (int j = 0; j < slices; ++j) {
      if (side == 0)
        mesh.triangles.push_back({center, at(0, j + 1), at(0, j)});
      else
        mesh.triangles.push_back({center, at(1, j), at(1, j + 1)});
    }
  }
}

inline std::vector<BodyPart> humanoid_parts(double h) {
  using P = BodyPart;
  std::vector<P> parts;
  auto cyl = [&](double x0, double x1, double yc, double zc, double ry, double rz) {
    P p;
    p.kind = P::CylinderXKind;
    p.x0 = x0;
    p.x1 = x1;
    p.center = Vec3(0.5 * (x0 + x1), yc, zc);
    p.ry = ry;
    p.rz = rz;
    return p;
  };
  auto sph = [&](const Vec3& c, double r) {
    P p;
    p.kind = P::SphereKind;
    p.center = c;
    p.ry = r;
    p.rz = r;
    return p;
  };
  parts.push_back(sph(Vec3(0.775, 0.0, h + 0.10), 0.10));          // head
  parts.push_back(cyl(0.60, 0.70, 0.0, h + 0.09, 0.055, 0.055));   // neck
  parts.push_back(cyl(0.10, 0.62, 0.0, h + 0.13, 0.20, 0.13));     // torso
  parts.push_back(cyl(-0.12, 0.12, 0.0, h + 0.12, 0.18, 0.12));    // pelvis
  for (double s : {-1.0, 1.0}) {
    parts.push_back(cyl(-0.80, -0.08, s * 0.10, h + 0.075, 0.075, 0.075));  // leg
    parts.push_back(sph(Vec3(-0.82, s * 0.10, h + 0.07), 0.07));            // foot
    parts.push_back(cyl(-0.05, 0.55, s * 0.27, h + 0.05, 0.05, 0.05));      // arm
    parts.push_back(sph(Vec3(-0.08, s * 0.27, h + 0.05), 0.05));            // hand
  }
  return parts;
}

}  // namespace detail

inline TriangleMesh make_humanoid_mesh(const CouchSpec& couch) {
  TriangleMesh mesh;
  for (const auto& part : detail::humanoid_parts(couch.height)) {
    if (part.kind == detail::BodyPart::SphereKind) {
      detail::append_sphere(mesh, part.center, part.ry);
    } else {
      detail::append_cylinder_x(mesh, part.x0, part.x1, part.center.y(), part.center.z(),
                                part.ry, part.rz);
    }
  }
  mesh.prune_degenerate();
  return mesh;
}

/// Supine humanoid at the couch top center. Samples buried inside neighboring
/// body parts are rejected so the coverage denominator only holds reachable
/// surface.
inline SurfaceModel make_humanoid(const CouchSpec& couch, double resolution,
                                  std::uint64_t seed) {
  TriangleMesh mesh = make_humanoid_mesh(couch);
  const auto parts = detail::humanoid_parts(couch.height);
  auto buried = [parts](const Vec3& p) {
    for (const auto& part : parts)
      if (part.inside(p, 1e-4)) return true;
    return false;
  };
  PointCloud samples = sample_mesh_surface(mesh, resolution, seed, buried);
  return SurfaceModel::assemble(std::move(samples), std::move(mesh), resolution, couch);
}

/// Loads a body mesh, re-centers it over the couch (bounding-box center to
/// the couch top center, lowest point on the couch top), then samples it.
inline SurfaceModel load_body_mesh(const TriangleMesh& input, const CouchSpec& couch,
                                   double resolution, std::uint64_t seed) {
  if (input.empty()) throw EmptyMeshError();
  TriangleMesh mesh = input;
  Vec3 lo = mesh.vertices.front(), hi = mesh.vertices.front();
  for (const auto& v : mesh.vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  const Vec3 shift(-0.5 * (lo.x() + hi.x()), -0.5 * (lo.y() + hi.y()),
                   couch.height - lo.z());
  for (auto& v : mesh.vertices) v += shift;
  PointCloud samples = sample_mesh_surface(mesh, resolution, seed);
  return SurfaceModel::assemble(std::move(samples), std::move(mesh), resolution, couch);
}

}  // namespace bodyscan
