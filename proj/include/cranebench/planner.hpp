#pragma once

#include <Eigen/Dense>
#include <vector>

#include "cranebench/regions.hpp"

namespace cranebench::controllers {

struct PlannerOptions {
  double cell_size = 0.05;   // m
  double clearance = 0.08;   // required margin at via points and grid cells
  int n_via = 12;
};

// Grid-based shortest path (8-connected Dijkstra over contains/margin
// sampling), shortcut-smoothed and resampled to n_via points, each feasible
// with the requested clearance. Includes start and target as the first and
// last entries. Throws when no path exists at the given resolution.
std::vector<Eigen::Vector2d> plan_path(const regions::Region& region,
                                       const Eigen::Vector2d& start,
                                       const Eigen::Vector2d& target,
                                       const PlannerOptions& options = {});

// Arc-length lookup table over a via-point polyline.
class PathSampler {
 public:
  explicit PathSampler(std::vector<Eigen::Vector2d> via_points);

  double total_length() const { return cumulative_.back(); }
  // Position at a fraction s in [0, 1] of the total arc length.
  Eigen::Vector2d position(double s) const;
  // Unit tangent at fraction s (zero vector for degenerate paths).
  Eigen::Vector2d tangent(double s) const;

 private:
  std::vector<Eigen::Vector2d> points_;
  std::vector<double> cumulative_;
};

}  // namespace cranebench::controllers
