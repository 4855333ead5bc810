#pragma once

#include <array>
#include <vector>

#include "bodyscan/body_models.hpp"
#include "bodyscan/geometry.hpp"

namespace bodyscan {

/// Where the mobile base may stand and drive. `Full` is the whole room,
/// `Narrow` a band around the couch, `OneSide` blocks everything on the
/// negative-y side of the couch centerline (wall or equipment there).
enum class WorkspaceKind { Full, Narrow, OneSide };

struct WorkspaceSpec {
  WorkspaceKind kind = WorkspaceKind::Full;
  double room_half = 4.0;      // room spans [-room_half, room_half]^2
  double narrow_margin = 0.8;  // reachable band width around the couch
  std::vector<std::array<double, 4>> blocked_rects;  // extra no-go {x0,y0,x1,y1}

  bool allows(const Vec2& p, const CouchSpec& couch) const {
    if (std::abs(p.x()) > room_half || std::abs(p.y()) > room_half) return false;
    if (kind == WorkspaceKind::Narrow) {
      if (std::abs(p.x()) > 0.5 * couch.length + narrow_margin) return false;
      if (std::abs(p.y()) > 0.5 * couch.width + narrow_margin) return false;
    } else if (kind == WorkspaceKind::OneSide) {
      if (p.y() < 0.0) return false;
    }
    for (const auto& r : blocked_rects)
      if (p.x() >= r[0] && p.x() <= r[2] && p.y() >= r[1] && p.y() <= r[3]) return false;
    return true;
  }

  // axis-aligned outer bounds of the drivable region, {x0, y0, x1, y1}
  std::array<double, 4> bounds(const CouchSpec& couch) const {
    if (kind == WorkspaceKind::Narrow) {
      const double bx = 0.5 * couch.length + narrow_margin;
      const double by = 0.5 * couch.width + narrow_margin;
      return {-bx, -by, bx, by};
    }
    if (kind == WorkspaceKind::OneSide) return {-room_half, 0.0, room_half, room_half};
    return {-room_half, -room_half, room_half, room_half};
  }
};

inline const char* workspace_name(WorkspaceKind k) {
  switch (k) {
    case WorkspaceKind::Full: return "full";
    case WorkspaceKind::Narrow: return "narrow";
    case WorkspaceKind::OneSide: return "one_side";
  }
  return "full";
}

}  // namespace bodyscan
