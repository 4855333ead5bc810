#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "bodyscan/errors.hpp"

namespace bodyscan {

/// Knee of a concave increasing curve (Satopaa-style difference heuristic):
/// normalize both axes to [0,1], form d = y_n - x_n, and accept the first
/// local maximum of d that the curve later drops below by more than
/// sensitivity * mean(dx_n). Returns the index of the knee sample.
inline std::size_t select_knee(const std::vector<double>& xs, const std::vector<double>& ys,
                               double sensitivity = 1.0) {
  const std::size_t n = xs.size();
  if (n != ys.size()) throw Error("knee: x/y size mismatch");
  if (n < 3) throw NoKneeError("knee needs at least three samples");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return xs[a] < xs[b];
  });
  for (std::size_t i = 1; i < n; ++i)
    if (xs[order[i]] == xs[order[i - 1]]) throw Error("knee: duplicate x values");

  const double x_lo = xs[order.front()], x_hi = xs[order.back()];
  double y_lo = ys[order.front()], y_hi = y_lo;
  for (std::size_t i : order) {
    y_lo = std::min(y_lo, ys[i]);
    y_hi = std::max(y_hi, ys[i]);
  }
  if (y_hi - y_lo <= 0.0) throw NoKneeError("knee: flat curve");

  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double xn = (xs[order[i]] - x_lo) / (x_hi - x_lo);
    const double yn = (ys[order[i]] - y_lo) / (y_hi - y_lo);
    d[i] = yn - xn;
  }

  const double mean_dx = 1.0 / double(n - 1);  // x_n spans [0,1]
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (!(d[i] > d[i - 1] && d[i] >= d[i + 1])) continue;  // local maximum of d
    const double threshold = d[i] - sensitivity * mean_dx;
    for (std::size_t j = i + 1; j < n; ++j) {
      if (d[j] > d[i]) break;  // a higher maximum supersedes this candidate
      if (d[j] < threshold) return order[i];
    }
  }
  throw NoKneeError("knee: no local maximum cleared the sensitivity threshold");
}

/// Resolution pick from a coverage-vs-resolution sweep. Finer resolution means
/// more detail, so the curve is viewed against fineness = 1/resolution; the
/// knee is where extra fineness stops paying for itself.
inline double select_resolution_kneedle(const std::vector<double>& resolutions,
                                        const std::vector<double>& coverages,
                                        double sensitivity = 1.0) {
  if (resolutions.size() != coverages.size()) throw Error("knee: size mismatch");
  std::vector<double> fineness(resolutions.size());
  for (std::size_t i = 0; i < resolutions.size(); ++i) {
    if (resolutions[i] <= 0.0) throw Error("knee: resolutions must be positive");
    fineness[i] = 1.0 / resolutions[i];
  }
  return resolutions[select_knee(fineness, coverages, sensitivity)];
}

}  // namespace bodyscan
