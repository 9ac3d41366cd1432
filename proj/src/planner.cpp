#include "cranebench/planner.hpp"

#include <cmath>
#include <queue>
#include <stdexcept>

namespace cranebench::controllers {

namespace {

struct GridFrame {
  Eigen::Vector2d origin;
  double cell;
  int nx, ny;

  Eigen::Vector2d center(int ix, int iy) const {
    return origin + cell * Eigen::Vector2d(ix + 0.5, iy + 0.5);
  }
  int index(int ix, int iy) const { return iy * nx + ix; }
};

void region_bounding_box(const regions::Region& region, Eigen::Vector2d& lo,
                         Eigen::Vector2d& hi) {
  const auto expand = [&](const regions::Rect& r) {
    const double radius = r.half_widths.norm();
    lo = lo.cwiseMin(r.center - Eigen::Vector2d::Constant(radius));
    hi = hi.cwiseMax(r.center + Eigen::Vector2d::Constant(radius));
  };
  if (const auto* sr = std::get_if<regions::SingleRect>(&region)) {
    expand(sr->rect);
  } else if (const auto* w = std::get_if<regions::WedgeUnion>(&region)) {
    expand(w->first);
    expand(w->second);
  } else {
    expand(std::get<regions::RectMinusObstacles>(region).rect);
  }
}

bool segment_feasible(const regions::Region& region, const Eigen::Vector2d& a,
                      const Eigen::Vector2d& b, double clearance,
                      double step) {
  const double length = (b - a).norm();
  const int samples = std::max(2, static_cast<int>(std::ceil(length / step)));
  for (int i = 0; i <= samples; ++i) {
    const double s = static_cast<double>(i) / samples;
    if (regions::signed_margin(region, a + s * (b - a)) < clearance)
      return false;
  }
  return true;
}

}  // namespace

std::vector<Eigen::Vector2d> plan_path(const regions::Region& region,
                                       const Eigen::Vector2d& start,
                                       const Eigen::Vector2d& target,
                                       const PlannerOptions& options) {
  if (options.cell_size <= 0 || options.n_via < 2)
    throw std::invalid_argument("invalid planner options");
  if (regions::signed_margin(region, start) < options.clearance ||
      regions::signed_margin(region, target) < options.clearance)
    throw std::invalid_argument(
        "start or target lacks the requested clearance");

  Eigen::Vector2d lo = start.cwiseMin(target);
  Eigen::Vector2d hi = start.cwiseMax(target);
  region_bounding_box(region, lo, hi);
  lo.array() -= options.cell_size;
  hi.array() += options.cell_size;

  GridFrame grid;
  grid.origin = lo;
  grid.cell = options.cell_size;
  grid.nx = static_cast<int>(std::ceil((hi.x() - lo.x()) / grid.cell));
  grid.ny = static_cast<int>(std::ceil((hi.y() - lo.y()) / grid.cell));
  if (grid.nx < 1 || grid.ny < 1 || grid.nx * grid.ny > 4'000'000)
    throw std::invalid_argument("planner grid degenerate or too large");

  // Free cells keep the requested clearance at their centers; the cell
  // containing the start/target is pinned free (its center may sit slightly
  // closer to a boundary than the point itself).
  std::vector<bool> free_cell(grid.nx * grid.ny, false);
  for (int iy = 0; iy < grid.ny; ++iy)
    for (int ix = 0; ix < grid.nx; ++ix)
      free_cell[grid.index(ix, iy)] =
          regions::signed_margin(region, grid.center(ix, iy)) >=
          options.clearance;

  const auto cell_of = [&](const Eigen::Vector2d& p) {
    const int ix = std::clamp(
        static_cast<int>((p.x() - grid.origin.x()) / grid.cell), 0,
        grid.nx - 1);
    const int iy = std::clamp(
        static_cast<int>((p.y() - grid.origin.y()) / grid.cell), 0,
        grid.ny - 1);
    return std::pair{ix, iy};
  };
  const auto [sx, sy] = cell_of(start);
  const auto [tx, ty] = cell_of(target);
  free_cell[grid.index(sx, sy)] = true;
  free_cell[grid.index(tx, ty)] = true;

  // 8-connected Dijkstra; ties resolved by cell index for determinism.
  const double kDiag = std::sqrt(2.0);
  std::vector<double> dist(grid.nx * grid.ny,
                           std::numeric_limits<double>::infinity());
  std::vector<int> parent(grid.nx * grid.ny, -1);
  using Entry = std::pair<double, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  dist[grid.index(sx, sy)] = 0.0;
  open.push({0.0, grid.index(sx, sy)});
  const int goal = grid.index(tx, ty);

  while (!open.empty()) {
    const auto [d, idx] = open.top();
    open.pop();
    if (d > dist[idx] + 1e-12) continue;
    if (idx == goal) break;
    const int ix = idx % grid.nx;
    const int iy = idx / grid.nx;
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0) continue;
        const int jx = ix + dx, jy = iy + dy;
        if (jx < 0 || jy < 0 || jx >= grid.nx || jy >= grid.ny) continue;
        const int jdx = grid.index(jx, jy);
        if (!free_cell[jdx]) continue;
        const double step = (dx != 0 && dy != 0) ? kDiag : 1.0;
        const double nd = d + step;
        if (nd < dist[jdx] - 1e-12) {
          dist[jdx] = nd;
          parent[jdx] = idx;
          open.push({nd, jdx});
        }
      }
    }
  }
  if (!std::isfinite(dist[goal]))
    throw std::runtime_error(
        "no path found; try a finer planner grid or smaller clearance");

  std::vector<Eigen::Vector2d> cells;
  for (int idx = goal; idx != -1; idx = parent[idx])
    cells.push_back(grid.center(idx % grid.nx, idx / grid.nx));
  std::reverse(cells.begin(), cells.end());
  cells.front() = start;
  cells.back() = target;

  // Shortcut smoothing: greedily skip ahead to the farthest visible point.
  const double probe = 0.25 * options.cell_size;
  std::vector<Eigen::Vector2d> smooth{cells.front()};
  size_t i = 0;
  while (i + 1 < cells.size()) {
    size_t j = cells.size() - 1;
    for (; j > i + 1; --j)
      if (segment_feasible(region, cells[i], cells[j], options.clearance,
                           probe))
        break;
    smooth.push_back(cells[j]);
    i = j;
  }

  // Resample to n_via points by arc length.
  PathSampler sampler(smooth);
  std::vector<Eigen::Vector2d> via;
  via.reserve(options.n_via);
  for (int k = 0; k < options.n_via; ++k)
    via.push_back(sampler.position(static_cast<double>(k) /
                                   (options.n_via - 1)));
  via.front() = start;
  via.back() = target;
  return via;
}

PathSampler::PathSampler(std::vector<Eigen::Vector2d> via_points)
    : points_(std::move(via_points)) {
  if (points_.empty()) throw std::invalid_argument("empty via-point list");
  cumulative_.resize(points_.size());
  cumulative_[0] = 0.0;
  for (size_t i = 1; i < points_.size(); ++i)
    cumulative_[i] =
        cumulative_[i - 1] + (points_[i] - points_[i - 1]).norm();
}

Eigen::Vector2d PathSampler::position(double s) const {
  if (points_.size() == 1 || cumulative_.back() <= 0.0) return points_.front();
  const double want = std::clamp(s, 0.0, 1.0) * cumulative_.back();
  size_t i = 1;
  while (i + 1 < cumulative_.size() && cumulative_[i] < want) ++i;
  const double seg = cumulative_[i] - cumulative_[i - 1];
  const double t = seg > 0 ? (want - cumulative_[i - 1]) / seg : 0.0;
  return points_[i - 1] + t * (points_[i] - points_[i - 1]);
}

Eigen::Vector2d PathSampler::tangent(double s) const {
  if (points_.size() == 1 || cumulative_.back() <= 0.0)
    return Eigen::Vector2d::Zero();
  const double want = std::clamp(s, 0.0, 1.0) * cumulative_.back();
  size_t i = 1;
  while (i + 1 < cumulative_.size() && cumulative_[i] < want) ++i;
  const Eigen::Vector2d d = points_[i] - points_[i - 1];
  const double n = d.norm();
  return n > 0 ? Eigen::Vector2d(d / n) : Eigen::Vector2d::Zero();
}

}  // namespace cranebench::controllers
