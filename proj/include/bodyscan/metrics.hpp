#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "bodyscan/geometry.hpp"
#include "bodyscan/robot_model.hpp"
#include "bodyscan/spatial_index.hpp"

namespace bodyscan {

/// Percent of reference points that have a scan point within 2x the voxel
/// size. The reference is the dense ground-truth sampling; the scan is the
/// stitched measurement cloud.
inline double coverage(const PointCloud& scan, const PointCloud& reference,
                       double voxel = 0.01) {
  if (reference.empty()) throw EmptyReferenceError();
  if (scan.empty()) return 0.0;
  const double threshold = 2.0 * voxel;
  NearestNeighborIndex index(scan.points);
  std::size_t covered = 0;
  for (const Vec3& p : reference.points)
    if (index.nearest_within(p, threshold)) ++covered;
  return 100.0 * double(covered) / double(reference.size());
}

/// Mean distance from each scan point to its closest reference point — a
/// plain accuracy number for the stitched cloud, in meters.
inline double mean_surface_distance(const PointCloud& scan, const PointCloud& reference) {
  if (reference.empty()) throw EmptyReferenceError();
  if (scan.empty()) throw Error("mean_surface_distance: empty scan");
  NearestNeighborIndex index(reference.points);
  double sum = 0.0;
  for (const Vec3& p : scan.points) sum += index.nearest(p).second;
  return sum / double(scan.size());
}

struct StageReport {
  int stage = 0;  // 1-based base-stop number
  BasePose base;
  int views = 0;
  double expected_coverage = 0.0;  // planned visibility vs reference, cumulative %
  double realized_coverage = 0.0;  // stitched cloud vs reference, cumulative %
  double mean_error_m = 0.0;       // stitched-to-reference mean distance
  double travel_m = 0.0;           // driven distance to reach this stop
};

struct CoverageReport {
  std::vector<StageReport> stages;
  double final_coverage = 0.0;
  double final_mean_error_m = 0.0;
  double estimated_time_s = 0.0;
  std::size_t reference_points = 0;
  std::size_t stitched_points = 0;
};

namespace detail {

inline std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

}  // namespace detail

/// Stage table as CSV. Fixed column set and fixed decimal formatting so equal
/// runs produce byte-identical files; wall-clock timing never appears here.
inline void write_report_csv(const std::string& path, const CoverageReport& report) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path);
  os << "stage,base_x,base_y,base_heading,views,expected_pct,realized_pct,"
        "mean_err_mm,travel_m\n";
  for (const auto& s : report.stages) {
    os << s.stage << ',' << detail::fmt("%.3f", s.base.x) << ','
       << detail::fmt("%.3f", s.base.y) << ',' << detail::fmt("%.3f", s.base.heading) << ','
       << s.views << ',' << detail::fmt("%.2f", s.expected_coverage) << ','
       << detail::fmt("%.2f", s.realized_coverage) << ','
       << detail::fmt("%.3f", 1000.0 * s.mean_error_m) << ','
       << detail::fmt("%.3f", s.travel_m) << '\n';
  }
  if (!os) throw IoError("failed writing " + path);
}

/// Coverage-vs-stage chart: realized coverage solid, expected dashed. Pure
/// text SVG with fixed-precision coordinates (deterministic output).
inline void write_coverage_svg(const std::string& path, const CoverageReport& report) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path);

  const int w = 640, h = 400, ml = 60, mr = 20, mt = 30, mb = 50;
  const double px = ml, py = mt, pw = w - ml - mr, ph = h - mt - mb;
  const int n = int(report.stages.size());

  auto x_at = [&](int stage) {
    return n <= 1 ? px + 0.5 * pw : px + pw * double(stage - 1) / double(n - 1);
  };
  auto y_at = [&](double pct) { return py + ph * (1.0 - pct / 100.0); };

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
     << "\" viewBox=\"0 0 " << w << " " << h << "\">\n";
  os << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
  for (int pct = 0; pct <= 100; pct += 20) {
    const std::string y = detail::fmt("%.1f", y_at(pct));
    os << "<line x1=\"" << ml << "\" y1=\"" << y << "\" x2=\"" << (w - mr) << "\" y2=\"" << y
       << "\" stroke=\"#dddddd\"/>\n";
    os << "<text x=\"" << (ml - 8) << "\" y=\"" << y
       << "\" font-size=\"12\" text-anchor=\"end\" dominant-baseline=\"middle\">" << pct
       << "</text>\n";
  }
  for (int s = 1; s <= n; ++s) {
    const std::string x = detail::fmt("%.1f", x_at(s));
    os << "<text x=\"" << x << "\" y=\"" << (h - mb + 18)
       << "\" font-size=\"12\" text-anchor=\"middle\">" << s << "</text>\n";
  }
  os << "<text x=\"" << (ml + pw / 2) << "\" y=\"" << (h - 12)
     << "\" font-size=\"13\" text-anchor=\"middle\">base stops</text>\n";
  os << "<text x=\"" << (ml + pw / 2) << "\" y=\"" << 18
     << "\" font-size=\"13\" text-anchor=\"middle\">surface coverage (%)</text>\n";

  auto polyline = [&](bool expected, const char* color, const char* dash) {
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\"" << dash
       << " points=\"";
    for (const auto& s : report.stages) {
      os << detail::fmt("%.1f", x_at(s.stage)) << ','
         << detail::fmt("%.1f", y_at(expected ? s.expected_coverage : s.realized_coverage))
         << ' ';
    }
    os << "\"/>\n";
  };
  polyline(true, "#888888", " stroke-dasharray=\"6 4\"");
  polyline(false, "#1f6fb2", "");
  for (const auto& s : report.stages) {
    os << "<circle cx=\"" << detail::fmt("%.1f", x_at(s.stage)) << "\" cy=\""
       << detail::fmt("%.1f", y_at(s.realized_coverage)) << "\" r=\"3\" fill=\"#1f6fb2\"/>\n";
  }
  os << "<text x=\"" << (w - mr) << "\" y=\"" << (mt + 14)
     << "\" font-size=\"12\" text-anchor=\"end\">final "
     << detail::fmt("%.2f", report.final_coverage) << "%</text>\n";
  os << "</svg>\n";
  if (!os) throw IoError("failed writing " + path);
}

}  // namespace bodyscan
