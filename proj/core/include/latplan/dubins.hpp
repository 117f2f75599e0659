#pragma once

#include <array>
#include <optional>

#include "latplan/vehicle.hpp"

namespace latplan {

/// Shortest bounded-curvature (arc-line-arc / arc-arc-arc) connection
/// between two planar poses at a fixed turn radius. Used to seed the OCP
/// with a geometrically sensible trailer-axle path.
struct DubinsPath {
  struct Segment {
    char type = 'S';  // 'L', 'S', 'R'
    double length = 0.0;
  };

  double radius = 1.0;
  Pose2 start;
  std::array<Segment, 3> segments{};

  double total_length() const {
    return segments[0].length + segments[1].length + segments[2].length;
  }
  /// Signed curvature at arc position s along the path.
  double curvature_at(double s) const;
  Pose2 pose_at(double s) const;
};

/// Returns the shortest of the six Dubins words, or nullopt when none exists
/// (can only happen for degenerate radius <= 0).
std::optional<DubinsPath> dubins_shortest(const Pose2& start, const Pose2& goal, double radius);

}  // namespace latplan
