#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <vector>

#include "bodyscan/cspace.hpp"
#include "bodyscan/geometry.hpp"
#include "bodyscan/robot_model.hpp"
#include "bodyscan/workspace.hpp"

namespace bodyscan {

// ---------------------------------------------------------------------------
// Greedy next-best-view selection over a reachability dictionary.
// ---------------------------------------------------------------------------

struct GreedyParams {
  int max_bases = 4;
  int max_views_per_base = 5;
  double target_coverage = 100.0;  // percent of dictionary samples
};

struct PlannedView {
  std::size_t record_index = 0;
  std::size_t view_index = 0;
  std::size_t gain = 0;  // newly covered samples at selection time
};

struct PlanStop {
  std::size_t record_index = 0;
  BasePose base;
  std::vector<std::size_t> view_indices;  // into record.views, selection order
};

struct SelectionResult {
  std::vector<PlanStop> stops;
  std::vector<PlannedView> sequence;  // all selections in order, with gains
  std::vector<char> covered;          // final covered mask over samples
  std::size_t covered_count = 0;
  double coverage_percent = 0.0;
};

/// Greedy set-cover with an arm-before-base preference: while the current
/// stop has spare view slots and some view there still gains at least one new
/// sample, pick the best view at that stop; only then move the base. A new
/// stop opens at the unused base whose best single view gains most (ties to
/// the lowest record index). Planning ends at max_bases, at the coverage
/// target, or when no view anywhere gains a sample.
inline SelectionResult greedy_select(const Dictionary& dict,
                                     const GreedyParams& params = {},
                                     const std::vector<char>& already_seen = {}) {
  if (dict.records.empty() || dict.view_count() == 0)
    throw EmptyDictionaryError("greedy selection needs a non-empty dictionary");
  const std::size_t n = dict.sample_count;

  SelectionResult result;
  result.covered.assign(n, 0);
  if (!already_seen.empty()) {
    if (already_seen.size() != n) throw Error("already_seen size mismatch");
    result.covered = already_seen;
  }
  for (const char c : result.covered) result.covered_count += (c != 0);

  std::vector<char> record_used(dict.records.size(), 0);
  std::vector<std::vector<char>> view_used(dict.records.size());
  for (std::size_t r = 0; r < dict.records.size(); ++r)
    view_used[r].assign(dict.records[r].views.size(), 0);

  auto gain_of = [&](std::size_t r, std::size_t v) {
    std::size_t g = 0;
    for (const std::uint32_t idx : dict.records[r].views[v].visible)
      g += (idx < n && !result.covered[idx]);
    return g;
  };
  auto best_view_in = [&](std::size_t r) {
    std::size_t best_v = 0, best_g = 0;
    bool found = false;
    for (std::size_t v = 0; v < dict.records[r].views.size(); ++v) {
      if (view_used[r][v]) continue;
      const std::size_t g = gain_of(r, v);
      if (!found || g > best_g) {
        best_v = v;
        best_g = g;
        found = true;
      }
    }
    return std::pair<std::size_t, std::size_t>(found ? best_v : 0, found ? best_g : 0);
  };
  auto take = [&](std::size_t r, std::size_t v, std::size_t g) {
    view_used[r][v] = 1;
    for (const std::uint32_t idx : dict.records[r].views[v].visible) {
      if (idx < n && !result.covered[idx]) {
        result.covered[idx] = 1;
        ++result.covered_count;
      }
    }
    result.stops.back().view_indices.push_back(v);
    result.sequence.push_back({r, v, g});
  };
  auto coverage_now = [&] {
    return n == 0 ? 100.0 : 100.0 * double(result.covered_count) / double(n);
  };

  bool stop_open = false;
  while (coverage_now() < params.target_coverage - 1e-9) {
    if (stop_open) {
      const std::size_t r = result.stops.back().record_index;
      if (int(result.stops.back().view_indices.size()) < params.max_views_per_base) {
        const auto [v, g] = best_view_in(r);
        if (g >= 1) {
          take(r, v, g);
          continue;
        }
      }
      stop_open = false;  // stop full or exhausted; bases are never revisited
    }

    if (int(result.stops.size()) >= params.max_bases) break;
    std::size_t best_r = 0, best_v = 0, best_g = 0;
    for (std::size_t r = 0; r < dict.records.size(); ++r) {
      if (record_used[r]) continue;
      const auto [v, g] = best_view_in(r);
      if (g > best_g) {
        best_r = r;
        best_v = v;
        best_g = g;
      }
    }
    if (best_g < 1) break;

    record_used[best_r] = 1;
    result.stops.push_back({best_r, dict.records[best_r].base, {}});
    stop_open = true;
    take(best_r, best_v, best_g);
  }

  result.coverage_percent = coverage_now();
  return result;
}

// ---------------------------------------------------------------------------
// Base navigation: occupancy grid + A* shortest path.
// ---------------------------------------------------------------------------

/// Floor grid over the drivable workspace. A cell is blocked when its center
/// leaves the workspace or comes closer to the couch rectangle than the base
/// footprint half-diagonal (point-robot planning on the inflated obstacle).
inline OccupancyGrid make_floor_grid(const WorkspaceSpec& workspace, const CouchSpec& couch,
                                     const RobotParams& robot, double cell_size = 0.1) {
  if (cell_size <= 0.0) throw Error("grid cell size must be positive");
  const auto b = workspace.bounds(couch);
  const int nx = std::max(1, int(std::ceil((b[2] - b[0]) / cell_size)));
  const int ny = std::max(1, int(std::ceil((b[3] - b[1]) / cell_size)));
  OccupancyGrid grid(Vec2(b[0], b[1]), cell_size, nx, ny);

  const double inflate = robot.footprint_half_diagonal();
  const double hl = 0.5 * couch.length, hw = 0.5 * couch.width;
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) {
      const Vec2 c = grid.cell_center(i, j);
      bool blocked = !workspace.allows(c, couch);
      if (!blocked) {
        const double dx = std::max(std::abs(c.x()) - hl, 0.0);
        const double dy = std::max(std::abs(c.y()) - hw, 0.0);
        blocked = std::hypot(dx, dy) < inflate;
      }
      if (blocked) grid.set_blocked(i, j, true);
    }
  return grid;
}

struct NavPath {
  std::vector<Vec2> waypoints;  // cell centers, start to goal
  double cost = 0.0;            // meters along the grid path
};

namespace detail {

struct GridNeighbors {
  // 8-connected; diagonals are forbidden when either adjacent cardinal cell
  // is blocked (no corner cutting)
  static constexpr int dx[8] = {1, -1, 0, 0, 1, 1, -1, -1};
  static constexpr int dy[8] = {0, 0, 1, -1, 1, -1, 1, -1};

  static bool step_ok(const OccupancyGrid& g, int i, int j, int k, int& ni, int& nj) {
    ni = i + dx[k];
    nj = j + dy[k];
    if (g.blocked(ni, nj)) return false;  // includes out-of-bounds
    if (k >= 4 && (g.blocked(ni, j) || g.blocked(i, nj))) return false;
    return true;
  }
  static double step_cost(const OccupancyGrid& g, int k) {
    return (k >= 4 ? std::sqrt(2.0) : 1.0) * g.cell_size;
  }
};

}  // namespace detail

/// A* shortest path between two floor positions (Euclidean heuristic and step
/// costs, so the cost matches an uninformed shortest-path search exactly).
/// Throws UnreachableError when start/goal are blocked or disconnected.
inline NavPath plan_base_path(const OccupancyGrid& grid, const Vec2& start, const Vec2& goal) {
  const auto [si, sj] = grid.world_to_cell(start);
  const auto [gi, gj] = grid.world_to_cell(goal);
  if (grid.blocked(si, sj)) throw UnreachableError("start cell is blocked or off-grid");
  if (grid.blocked(gi, gj)) throw UnreachableError("goal cell is blocked or off-grid");

  const std::size_t n = std::size_t(grid.nx) * grid.ny;
  const auto idx = [&](int i, int j) { return std::size_t(j) * grid.nx + i; };
  std::vector<double> g_cost(n, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> parent(n, std::size_t(-1));
  std::vector<char> closed(n, 0);

  const auto heuristic = [&](int i, int j) {
    return std::hypot(double(i - gi) * grid.cell_size, double(j - gj) * grid.cell_size);
  };

  using QueueEntry = std::pair<double, std::size_t>;  // (f, flat index)
  std::priority_queue<QueueEntry, std::vector<QueueEntry>, std::greater<>> open;
  g_cost[idx(si, sj)] = 0.0;
  open.emplace(heuristic(si, sj), idx(si, sj));

  while (!open.empty()) {
    const auto [f, cur] = open.top();
    open.pop();
    if (closed[cur]) continue;
    closed[cur] = 1;
    const int ci = int(cur % grid.nx), cj = int(cur / grid.nx);
    if (ci == gi && cj == gj) break;

    for (int k = 0; k < 8; ++k) {
      int ni, nj;
      if (!detail::GridNeighbors::step_ok(grid, ci, cj, k, ni, nj)) continue;
      const double cand = g_cost[cur] + detail::GridNeighbors::step_cost(grid, k);
      const std::size_t nidx = idx(ni, nj);
      if (cand < g_cost[nidx] - 1e-15) {
        g_cost[nidx] = cand;
        parent[nidx] = cur;
        open.emplace(cand + heuristic(ni, nj), nidx);
      }
    }
  }

  const std::size_t goal_idx = idx(gi, gj);
  if (!std::isfinite(g_cost[goal_idx])) throw UnreachableError("goal is disconnected");

  NavPath path;
  path.cost = g_cost[goal_idx];
  std::vector<std::size_t> chain;
  for (std::size_t c = goal_idx; c != std::size_t(-1); c = parent[c]) chain.push_back(c);
  path.waypoints.reserve(chain.size());
  for (auto it = chain.rbegin(); it != chain.rend(); ++it)
    path.waypoints.push_back(grid.cell_center(int(*it % grid.nx), int(*it / grid.nx)));
  return path;
}

// ---------------------------------------------------------------------------
// Mission time estimate.
// ---------------------------------------------------------------------------

struct NavParams {
  double cell_size = 0.1;
  double base_speed = 0.08;      // m/s, conservative indoor drive speed
  double stop_overhead_s = 10.0;  // dock/settle per base stop
  double view_overhead_s = 5.0;   // arm motion + capture per view
  double start_x = -2.0;
  double start_y = -2.0;
};

/// Total mission time: driving every leg at base_speed plus fixed per-stop
/// and per-view overheads.
inline double estimate_plan_time(const SelectionResult& plan,
                                 const std::vector<NavPath>& legs, const NavParams& nav) {
  double travel = 0.0;
  for (const auto& leg : legs) travel += leg.cost;
  std::size_t views = 0;
  for (const auto& s : plan.stops) views += s.view_indices.size();
  return travel / nav.base_speed + double(plan.stops.size()) * nav.stop_overhead_s +
         double(views) * nav.view_overhead_s;
}

}  // namespace bodyscan
