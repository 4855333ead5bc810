#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "bodyscan/body_models.hpp"
#include "bodyscan/rng.hpp"
#include "bodyscan/robot_model.hpp"
#include "bodyscan/spatial_index.hpp"
#include "bodyscan/stitcher.hpp"

using namespace bodyscan;

namespace {

PointCloud random_cloud(Rng& rng, std::size_t n, double extent = 1.0) {
  PointCloud out;
  for (std::size_t i = 0; i < n; ++i)
    out.points.emplace_back(rng.uniform(-extent, extent), rng.uniform(-extent, extent),
                            rng.uniform(-extent, extent));
  return out;
}

Pose centered_motion(const PointCloud& cloud, const Vec3& axis, double angle_rad,
                     const Vec3& shift) {
  Vec3 c = Vec3::Zero();
  for (const Vec3& p : cloud.points) c += p;
  c /= double(cloud.size());
  // rotate about the centroid, then shift
  Pose about = compose(Pose::translate(c),
                       compose(Pose::rotate_axis(axis, angle_rad), Pose::translate(-c)));
  about.translation += shift;
  return about;
}

// synthetic frame: the chosen sample indices seen from `actual`, stored with a
// (possibly different) commanded pose
ScanFrame exact_frame(const SurfaceModel& model, const std::vector<std::size_t>& indices,
                      const Pose& planned, const Pose& actual) {
  ScanFrame f;
  f.planned_pose = planned;
  f.actual_pose = actual;
  f.sample_indices = indices;
  const Pose inv = actual.inverse();
  for (const std::size_t i : indices)
    f.points_camera.points.push_back(inv.apply(model.samples.points[i]));
  return f;
}

}  // namespace

TEST_CASE("rigid fit recovers an exact correspondence transform") {
  Rng rng(5);
  for (int iter = 0; iter < 20; ++iter) {
    const PointCloud a = random_cloud(rng, 30);
    Pose truth = Pose::rotate_axis(
        Vec3(rng.normal(), rng.normal(), rng.normal()).normalized(), rng.uniform(-2.0, 2.0));
    truth.translation = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    std::vector<Vec3> src = a.points, dst;
    for (const Vec3& p : src) dst.push_back(truth.apply(p));
    const Pose fit = detail::fit_rigid(src, dst);
    REQUIRE(rotation_distance(fit, truth) < 1e-10);
    REQUIRE((fit.translation - truth.translation).norm() < 1e-10);
  }
}

TEST_CASE("ICP on identical clouds reports an identity fit") {
  const SurfaceModel model = make_half_cylinder(1.75, 0.2, CouchSpec{}, 0.05);
  const IcpResult r = icp_point_to_point(model.samples, model.samples);
  REQUIRE(r.rms < 1e-9);
  REQUIRE(rotation_distance(r.transform, Pose::identity()) < 1e-9);
  REQUIRE(r.transform.translation.norm() < 1e-9);
}

TEST_CASE("ICP recovers a small rigid offset") {
  // the humanoid sampling is aperiodic; a regular lattice (half-cylinder) can
  // trap point-to-point ICP in a one-period-shifted local minimum, which the
  // scan pipeline never produces (rendered clouds carry depth noise)
  const SurfaceModel model = make_humanoid(CouchSpec{}, 0.025, 7);
  const PointCloud& target = model.samples;

  for (const std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    Rng rng(seed);
    const Vec3 axis(rng.normal(), rng.normal(), rng.normal());
    Vec3 shift(rng.normal(), rng.normal(), rng.normal());
    shift = 0.02 * shift.normalized();  // 20 mm
    const Pose offset = centered_motion(target, axis.normalized(), 5.0 * M_PI / 180.0, shift);
    const PointCloud source = target.transformed(offset);
    const Pose truth = offset.inverse();  // maps source back onto target

    {
      // with the default working-copy downsample: sensor-grade accuracy
      const IcpResult r = icp_point_to_point(source, target);
      REQUIRE(rotation_distance(r.transform, truth) < 0.5 * M_PI / 180.0);
      REQUIRE((r.transform.translation - truth.translation).norm() < 0.005);
      REQUIRE(std::is_sorted(r.rms_history.rbegin(), r.rms_history.rend()));
    }
    {
      // on the raw clouds the correspondence is a bijection: near-exact fit
      IcpParams params;
      params.downsample = 0.0;
      params.max_iterations = 200;
      params.min_improvement = 1e-12;
      const IcpResult r = icp_point_to_point(source, target, params);
      REQUIRE(rotation_distance(r.transform, truth) < 1e-4);
      REQUIRE((r.transform.translation - truth.translation).norm() < 1e-5);
      REQUIRE(r.rms < 1e-5);
    }
  }
}

TEST_CASE("ICP rms history never increases") {
  const SurfaceModel model = make_half_cylinder(1.75, 0.2, CouchSpec{}, 0.05);
  Rng rng(8);
  for (int iter = 0; iter < 5; ++iter) {
    const Pose offset = centered_motion(
        model.samples, Vec3(rng.normal(), rng.normal(), rng.normal()).normalized(),
        rng.uniform(0.01, 0.1), Vec3(rng.uniform(-0.02, 0.02), rng.uniform(-0.02, 0.02),
                                     rng.uniform(-0.02, 0.02)));
    const IcpResult r = icp_point_to_point(model.samples.transformed(offset), model.samples);
    REQUIRE_FALSE(r.rms_history.empty());
    for (std::size_t i = 1; i < r.rms_history.size(); ++i)
      REQUIRE(r.rms_history[i] <= r.rms_history[i - 1] + 1e-15);
    REQUIRE(r.rms == r.rms_history.back());
  }
}

TEST_CASE("ICP is equivariant under an exact quarter-turn of both clouds") {
  const SurfaceModel model = make_half_cylinder(1.75, 0.2, CouchSpec{}, 0.05);
  Rng rng(21);
  const Pose offset =
      centered_motion(model.samples, Vec3::UnitZ().eval(), 0.04, Vec3(0.01, -0.015, 0.005));
  const PointCloud source = model.samples.transformed(offset);

  IcpParams params;
  params.downsample = 0.0;  // keep the point sets bijective under the turn
  const IcpResult base = icp_point_to_point(source, model.samples, params);

  Pose quarter = Pose::rotate_axis(Vec3::UnitZ(), M_PI / 2.0);
  quarter.translation = Vec3(0.3, -0.2, 0.1);
  const IcpResult turned = icp_point_to_point(source.transformed(quarter),
                                              model.samples.transformed(quarter), params);

  const Pose expect = compose(quarter, compose(base.transform, quarter.inverse()));
  REQUIRE(rotation_distance(turned.transform, expect) < 1e-9);
  REQUIRE((turned.transform.translation - expect.translation).norm() < 1e-9);
  REQUIRE(turned.rms == Catch::Approx(base.rms).margin(1e-12));
}

TEST_CASE("ICP refuses disjoint clouds") {
  Rng rng(31);
  const PointCloud a = random_cloud(rng, 100, 0.3);
  PointCloud b = a;
  b.transform(Pose::translate(Vec3(10, 0, 0)));
  REQUIRE_THROWS_AS(icp_point_to_point(a, b), InsufficientOverlapError);
  REQUIRE_THROWS_AS(icp_point_to_point(PointCloud{}, a), InsufficientOverlapError);
}

TEST_CASE("outlier removal drops far points and keeps the cluster intact") {
  PointCloud cloud;
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j)
      cloud.points.emplace_back(0.01 * i, 0.01 * j, 0.0);
  cloud.points.emplace_back(1.0, 1.0, 1.0);
  cloud.points.emplace_back(-1.0, 0.5, 2.0);
  cloud.points.emplace_back(0.5, -1.5, -1.0);

  OutlierParams params;
  params.k = 8;
  const PointCloud cleaned = remove_outliers(cloud, params);
  REQUIRE(cleaned.size() == 100);
  for (std::size_t i = 0; i < cleaned.size(); ++i)
    REQUIRE(cleaned.points[i] == cloud.points[i]);  // order preserved

  // tiny clouds pass through untouched
  PointCloud tiny;
  tiny.points = {Vec3(0, 0, 0), Vec3(1, 1, 1)};
  REQUIRE(remove_outliers(tiny, params).size() == 2);
}

TEST_CASE("stitching recovers known pose errors on synthetic frames") {
  const SurfaceModel model = make_half_cylinder(1.75, 0.2, CouchSpec{}, 0.05);
  const Pose look0 = make_look_at_pose(Vec3(-0.4, -0.8, 1.4), Vec3(-0.3, 0, 0.8));
  const Pose look1 = make_look_at_pose(Vec3(0.0, -0.8, 1.4), Vec3(0.0, 0, 0.8));
  const Pose look2 = make_look_at_pose(Vec3(0.4, -0.8, 1.4), Vec3(0.3, 0, 0.8));

  // every frame sees the whole sample set; later frames carry a pose error
  std::vector<std::size_t> all(model.samples.size());
  std::iota(all.begin(), all.end(), 0);
  Pose err1 = Pose::rotate_axis(Vec3(0.2, 1.0, -0.3).normalized(), 0.02);
  err1.translation = Vec3(0.004, -0.003, 0.005);
  Pose err2 = Pose::rotate_axis(Vec3(-1.0, 0.4, 0.2).normalized(), 0.015);
  err2.translation = Vec3(-0.002, 0.006, -0.004);

  std::vector<ScanFrame> frames;
  frames.push_back(exact_frame(model, all, look0, look0));  // seed frame: exact
  frames.push_back(exact_frame(model, all, look1, compose(err1, look1)));
  frames.push_back(exact_frame(model, all, look2, compose(err2, look2)));

  StitchParams params;
  params.icp.downsample = 0.0;
  params.icp.max_iterations = 100;
  params.icp.min_improvement = 1e-12;
  params.remove_outlier_points = false;
  const StitchResult result = stitch_full(frames, params);

  REQUIRE(result.skipped_frames == 0);
  REQUIRE(result.frame_clouds.size() == 3);
  REQUIRE(result.corrections.size() == 3);
  REQUIRE(rotation_distance(result.corrections[0], Pose::identity()) == 0.0);
  for (std::size_t i = 1; i < 3; ++i) {
    // the coarse map places frame i at planned * actual^-1; the correction
    // must undo exactly that mismatch
    const Pose truth = compose(frames[i].actual_pose, frames[i].planned_pose.inverse());
    REQUIRE(rotation_distance(result.corrections[i], truth) < 1e-4);
    REQUIRE((result.corrections[i].translation - truth.translation).norm() < 1e-4);
    REQUIRE(result.final_rms[i] < 1e-4);
  }
  REQUIRE(result.cloud.size() == 3 * model.samples.size());
}

TEST_CASE("frames without overlap are merged coarse-only and counted") {
  const SurfaceModel model = make_half_cylinder(1.75, 0.2, CouchSpec{}, 0.05);
  std::vector<std::size_t> all(model.samples.size());
  std::iota(all.begin(), all.end(), 0);
  const Pose look = make_look_at_pose(Vec3(0, -0.8, 1.4), Vec3(0, 0, 0.8));

  std::vector<ScanFrame> frames;
  frames.push_back(exact_frame(model, all, look, look));
  // second frame claims a commanded pose 10 m away: no correspondences
  ScanFrame far = exact_frame(model, all, look, look);
  far.planned_pose = compose(Pose::translate(Vec3(10, 0, 0)), look);
  frames.push_back(far);

  const StitchResult result = stitch_full(frames);
  REQUIRE(result.skipped_frames == 1);
  REQUIRE(std::isnan(result.final_rms[1]));
  REQUIRE(rotation_distance(result.corrections[1], Pose::identity()) == 0.0);
}

TEST_CASE("an oversized correction aborts the stitch") {
  const SurfaceModel model = make_half_cylinder(1.75, 0.2, CouchSpec{}, 0.05);
  std::vector<std::size_t> all(model.samples.size());
  std::iota(all.begin(), all.end(), 0);
  const Pose look = make_look_at_pose(Vec3(0, -0.8, 1.4), Vec3(0, 0, 0.8));

  std::vector<ScanFrame> frames;
  frames.push_back(exact_frame(model, all, look, look));
  Pose err = Pose::rotate_axis(Vec3::UnitZ(), 0.03);  // ~1.7 degrees
  err.translation = Vec3(0.01, 0.0, 0.0);
  frames.push_back(exact_frame(model, all, look, compose(err, look)));

  StitchParams strict;
  strict.max_correction_deg = 1e-4;  // any real correction trips the guard
  REQUIRE_THROWS_AS(stitch_full(frames, strict), CoarseAlignmentFailureError);

  REQUIRE_THROWS_AS(stitch_full({}), NoFramesError);
  REQUIRE_THROWS_AS(coarse_assemble({}), NoFramesError);
}

TEST_CASE("coarse assembly is the union under commanded poses") {
  const SurfaceModel model = make_half_cylinder(1.75, 0.2, CouchSpec{}, 0.1);
  std::vector<std::size_t> some(model.samples.size() / 2);
  std::iota(some.begin(), some.end(), 0);
  const Pose look = make_look_at_pose(Vec3(0, -0.8, 1.4), Vec3(0, 0, 0.8));
  const ScanFrame f = exact_frame(model, some, look, look);
  const PointCloud u = coarse_assemble({f, f});
  REQUIRE(u.size() == 2 * some.size());
  for (std::size_t i = 0; i < some.size(); ++i)
    REQUIRE((u.points[i] - model.samples.points[some[i]]).norm() < 1e-12);
}
