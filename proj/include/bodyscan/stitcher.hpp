#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "bodyscan/geometry.hpp"
#include "bodyscan/sensor_sim.hpp"
#include "bodyscan/spatial_index.hpp"

namespace bodyscan {

struct IcpParams {
  int max_iterations = 50;
  double max_corr_dist = 0.05;   // trim correspondences beyond this
  std::size_t min_corr = 10;     // fewer -> InsufficientOverlapError
  double min_improvement = 1e-7; // stop when rms stops dropping by this much
  double downsample = 0.01;      // working-copy voxel size, 0 disables
};

struct IcpResult {
  Pose transform;  // maps source points into the target frame
  double rms = 0.0;
  std::vector<double> rms_history;  // rms of the best estimate per iteration
  int iterations = 0;
};

namespace detail {

// least-squares rigid fit: R,t minimizing sum |R a_i + t - b_i|^2
inline Pose fit_rigid(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  Vec3 ca = Vec3::Zero(), cb = Vec3::Zero();
  const double n = double(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    ca += a[i];
    cb += b[i];
  }
  ca /= n;
  cb /= n;
  Mat3 h = Mat3::Zero();
  for (std::size_t i = 0; i < a.size(); ++i) h += (a[i] - ca) * (b[i] - cb).transpose();
  Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 r = svd.matrixV() * svd.matrixU().transpose();
  if (r.determinant() < 0.0) {
    Mat3 v = svd.matrixV();
    v.col(2) *= -1.0;
    r = v * svd.matrixU().transpose();
  }
  Pose out;
  out.rotation = Eigen::Quaterniond(r).normalized();
  out.translation = cb - r * ca;
  return out;
}

}  // namespace detail

/// Point-to-point ICP aligning `source` onto `target`. Correspondences are
/// nearest neighbors within max_corr_dist; iterations keep the best transform
/// seen, so the recorded rms history never increases. Throws
/// InsufficientOverlapError when fewer than min_corr pairs survive trimming.
inline IcpResult icp_point_to_point(const PointCloud& source, const PointCloud& target,
                                    const IcpParams& params = {},
                                    const Pose& initial = Pose::identity()) {
  if (source.empty() || target.empty())
    throw InsufficientOverlapError("icp needs non-empty clouds");

  const PointCloud src_work =
      params.downsample > 0.0 ? voxel_downsample(source, params.downsample) : source;
  const PointCloud tgt_work =
      params.downsample > 0.0 ? voxel_downsample(target, params.downsample) : target;

  NearestNeighborIndex index(tgt_work.points);

  const auto evaluate = [&](const Pose& pose, std::vector<Vec3>* moved_out,
                            std::vector<Vec3>* matched_out) {
    double sum_sq = 0.0;
    std::size_t count = 0;
    for (const Vec3& p : src_work.points) {
      const Vec3 moved = pose.apply(p);
      const auto hit = index.nearest_within(moved, params.max_corr_dist);
      if (!hit) continue;
      const Vec3& q = tgt_work.points[hit->first];
      sum_sq += (moved - q).squaredNorm();
      ++count;
      if (moved_out) {
        moved_out->push_back(p);  // original source point; fit solves full pose
        matched_out->push_back(q);
      }
    }
    if (count < params.min_corr)
      throw InsufficientOverlapError("icp: too few correspondences inside trim radius");
    return std::sqrt(sum_sq / double(count));
  };

  IcpResult result;
  result.transform = initial;
  result.rms = evaluate(initial, nullptr, nullptr);
  result.rms_history.push_back(result.rms);

  for (int iter = 0; iter < params.max_iterations; ++iter) {
    std::vector<Vec3> src_pts, tgt_pts;
    evaluate(result.transform, &src_pts, &tgt_pts);
    const Pose candidate = detail::fit_rigid(src_pts, tgt_pts);
    const double rms = evaluate(candidate, nullptr, nullptr);
    ++result.iterations;
    if (rms < result.rms) {
      const double gain = result.rms - rms;
      result.transform = candidate;
      result.rms = rms;
      result.rms_history.push_back(result.rms);
      if (gain < params.min_improvement) break;
    } else {
      result.rms_history.push_back(result.rms);  // kept the previous best
      break;
    }
  }
  return result;
}

/// Union of all frames mapped to the world with their commanded poses — the
/// starting point for refinement.
inline PointCloud coarse_assemble(const std::vector<ScanFrame>& frames) {
  if (frames.empty()) throw NoFramesError();
  PointCloud out;
  for (const auto& f : frames) out.append(frame_to_world(f));
  return out;
}

struct OutlierParams {
  std::size_t k = 20;       // neighbors per point
  double sigma_mult = 2.0;  // keep points within mean + sigma_mult * std
};

/// Statistical outlier removal: points whose mean distance to their k nearest
/// neighbors exceeds the global mean by sigma_mult standard deviations are
/// dropped. Order of survivors is preserved.
inline PointCloud remove_outliers(const PointCloud& cloud, const OutlierParams& params = {}) {
  if (cloud.size() <= params.k + 1) return cloud;
  NearestNeighborIndex index(cloud.points);
  std::vector<double> mean_dist(cloud.size(), 0.0);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto nn = index.knn(cloud.points[i], params.k, i);  // skip the point itself
    double s = 0.0;
    for (const auto& [j, dist] : nn) s += dist;
    mean_dist[i] = nn.empty() ? 0.0 : s / double(nn.size());
  }
  double mu = 0.0;
  for (const double d : mean_dist) mu += d;
  mu /= double(cloud.size());
  double var = 0.0;
  for (const double d : mean_dist) var += (d - mu) * (d - mu);
  const double sigma = std::sqrt(var / double(cloud.size()));
  const double cutoff = mu + params.sigma_mult * sigma;

  PointCloud out;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (mean_dist[i] > cutoff) continue;
    out.points.push_back(cloud.points[i]);
    if (cloud.has_normals()) out.normals.push_back(cloud.normals[i]);
    if (cloud.has_colors()) out.colors.push_back(cloud.colors[i]);
  }
  return out;
}

struct StitchParams {
  IcpParams icp;
  double max_correction_deg = 30.0;  // larger ICP rotation means coarse failure
  OutlierParams outliers;
  bool remove_outlier_points = true;
};

struct StitchResult {
  PointCloud cloud;                    // refined union in the world frame
  std::vector<PointCloud> frame_clouds;  // per frame after correction, world frame
  std::vector<Pose> corrections;       // per frame, applied on top of coarse pose
  std::vector<double> final_rms;       // per frame, nan when ICP was skipped
  std::size_t skipped_frames = 0;      // frames merged coarse-only (no overlap)
};

/// Incremental stitcher: the first frame seeds the map; every later frame is
/// placed with its commanded pose and refined against the map by ICP. Frames
/// without enough overlap are merged as-is. A correction rotation above
/// max_correction_deg aborts with CoarseAlignmentFailureError.
inline StitchResult stitch_full(const std::vector<ScanFrame>& frames,
                                const StitchParams& params = {}) {
  if (frames.empty()) throw NoFramesError();

  StitchResult result;
  result.cloud = frame_to_world(frames.front());
  result.frame_clouds.push_back(result.cloud);
  result.corrections.push_back(Pose::identity());
  result.final_rms.push_back(0.0);

  for (std::size_t i = 1; i < frames.size(); ++i) {
    const PointCloud coarse = frame_to_world(frames[i]);
    Pose correction = Pose::identity();
    double rms = std::numeric_limits<double>::quiet_NaN();
    try {
      const IcpResult icp = icp_point_to_point(coarse, result.cloud, params.icp);
      correction = icp.transform;
      rms = icp.rms;
    } catch (const InsufficientOverlapError&) {
      ++result.skipped_frames;
    }
    if (correction.rotation_angle() > params.max_correction_deg * M_PI / 180.0)
      throw CoarseAlignmentFailureError("icp correction exceeds the coarse-alignment budget");
    result.corrections.push_back(correction);
    result.final_rms.push_back(rms);
    result.frame_clouds.push_back(coarse.transformed(correction));
    result.cloud.append(result.frame_clouds.back());
  }

  if (params.remove_outlier_points) result.cloud = remove_outliers(result.cloud, params.outliers);
  return result;
}

}  // namespace bodyscan
