#include <catch2/catch_amalgamated.hpp>

#include "bodyscan/body_models.hpp"
#include "bodyscan/rng.hpp"
#include "bodyscan/spatial_index.hpp"

using namespace bodyscan;

namespace {

std::vector<Vec3> random_points(Rng& rng, int n, double extent) {
  std::vector<Vec3> pts;
  pts.reserve(n);
  for (int i = 0; i < n; ++i)
    pts.emplace_back(rng.uniform(-extent, extent), rng.uniform(-extent, extent),
                     rng.uniform(-extent, extent));
  return pts;
}

// brute-force oracle with the same tie rule (lowest index)
std::size_t brute_nearest(const Vec3& q, const std::vector<Vec3>& pts) {
  std::size_t best = 0;
  double best_d2 = (pts[0] - q).squaredNorm();
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double d2 = (pts[i] - q).squaredNorm();
    if (d2 < best_d2) {
      best = i;
      best_d2 = d2;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("hash-grid nearest matches brute force") {
  Rng rng(101);
  const auto pts = random_points(rng, 500, 1.0);
  NearestNeighborIndex index(pts);
  for (int i = 0; i < 200; ++i) {
    const Vec3 q(rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5));
    const auto [idx, dist] = index.nearest(q);
    const std::size_t want = brute_nearest(q, pts);
    REQUIRE(idx == want);
    REQUIRE(dist == Catch::Approx((pts[want] - q).norm()).margin(1e-12));
  }
}

TEST_CASE("nearest on duplicate points returns the lowest index") {
  std::vector<Vec3> pts = {Vec3(2, 0, 0), Vec3(1, 1, 1), Vec3(1, 1, 1)};
  NearestNeighborIndex index(pts);
  REQUIRE(index.nearest(Vec3(1, 1, 1)).first == 1);
}

TEST_CASE("nearest_within respects the bound") {
  std::vector<Vec3> pts = {Vec3(1, 0, 0)};
  NearestNeighborIndex index(pts);
  REQUIRE(index.nearest_within(Vec3::Zero(), 0.5) == std::nullopt);
  const auto hit = index.nearest_within(Vec3::Zero(), 1.0);  // boundary inclusive
  REQUIRE(hit.has_value());
  REQUIRE(hit->first == 0);
  REQUIRE_THROWS_AS(NearestNeighborIndex(std::vector<Vec3>{}).nearest(Vec3::Zero()),
                    EmptyTargetError);
}

TEST_CASE("radius_search matches brute force") {
  Rng rng(55);
  const auto pts = random_points(rng, 400, 1.0);
  NearestNeighborIndex index(pts);
  for (int i = 0; i < 50; ++i) {
    const Vec3 q(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    const double r = rng.uniform(0.05, 0.6);
    std::vector<std::size_t> want;
    for (std::size_t j = 0; j < pts.size(); ++j)
      if ((pts[j] - q).norm() <= r) want.push_back(j);
    REQUIRE(index.radius_search(q, r) == want);
  }
}

TEST_CASE("knn matches a brute-force sort") {
  Rng rng(77);
  const auto pts = random_points(rng, 300, 1.0);
  NearestNeighborIndex index(pts);
  for (int i = 0; i < 40; ++i) {
    const Vec3 q(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    const std::size_t k = 1 + std::size_t(rng.uniform_index(10));
    const auto got = index.knn(q, k);

    std::vector<std::pair<double, std::size_t>> all;
    for (std::size_t j = 0; j < pts.size(); ++j) all.emplace_back((pts[j] - q).norm(), j);
    std::sort(all.begin(), all.end());
    REQUIRE(got.size() == std::min(k, pts.size()));
    for (std::size_t j = 0; j < got.size(); ++j) {
      REQUIRE(got[j].first == all[j].second);
      REQUIRE(got[j].second == Catch::Approx(all[j].first).margin(1e-12));
    }
  }
}

TEST_CASE("knn skip excludes the query point itself") {
  std::vector<Vec3> pts = {Vec3(0, 0, 0), Vec3(0.1, 0, 0), Vec3(0.2, 0, 0)};
  NearestNeighborIndex index(pts);
  const auto nn = index.knn(pts[0], 2, 0);
  REQUIRE(nn.size() == 2);
  REQUIRE(nn[0].first == 1);
  REQUIRE(nn[1].first == 2);
}

TEST_CASE("BVH ray casting agrees with the per-triangle reference") {
  const CouchSpec couch;
  const TriangleMesh mesh = make_humanoid_mesh(couch);
  const MeshRayCaster caster(mesh);

  Rng rng(31);
  int hits = 0;
  for (int i = 0; i < 300; ++i) {
    const Vec3 origin(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(0, 2));
    // Aim at the space above the couch so a good share of rays strike the body.
    const Vec3 target(rng.uniform(-1, 1), rng.uniform(-0.4, 0.4),
                      rng.uniform(couch.height, couch.height + 0.4));
    Vec3 dir = target - origin;
    if (dir.norm() < 1e-9) dir = Vec3::UnitX();
    dir.normalize();

    const auto fast = caster.first_hit(origin, dir);
    const auto slow = ray_mesh_intersect(origin, dir, mesh);
    REQUIRE(fast.has_value() == slow.has_value());
    if (fast) {
      ++hits;
      REQUIRE(fast->t == Catch::Approx(slow->t).margin(1e-9));
      REQUIRE(fast->triangle == slow->triangle);
      // any_hit_before must agree with the nearest hit
      REQUIRE(caster.any_hit_before(origin, dir, fast->t + 1e-6));
      REQUIRE_FALSE(caster.any_hit_before(origin, dir, fast->t - 1e-6));
    }
  }
  REQUIRE(hits > 30);  // the scene must actually be exercised
}

TEST_CASE("ray caster handles axis-aligned directions") {
  TriangleMesh m;
  m.vertices = {Vec3(-1, -1, 0), Vec3(1, -1, 0), Vec3(1, 1, 0), Vec3(-1, 1, 0)};
  m.triangles = {{0, 1, 2}, {0, 2, 3}};
  const MeshRayCaster caster(m);
  const auto hit = caster.first_hit(Vec3(0.2, 0.3, 5.0), -Vec3::UnitZ());
  REQUIRE(hit.has_value());
  REQUIRE(hit->t == Catch::Approx(5.0).margin(1e-12));
  REQUIRE_FALSE(caster.first_hit(Vec3(0.2, 0.3, 5.0), Vec3::UnitZ()).has_value());
  REQUIRE_FALSE(caster.first_hit(Vec3(3.0, 0.0, 5.0), -Vec3::UnitZ()).has_value());
}
