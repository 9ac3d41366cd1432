#include "cranebench/regions.hpp"

#include <cmath>
#include <stdexcept>

namespace cranebench::regions {

namespace {

Eigen::Matrix2d rotation_matrix(double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  Eigen::Matrix2d R;
  R << c, -s, s, c;
  return R;
}

// p expressed in the rectangle's frame.
Eigen::Vector2d to_rect_frame(const Rect& rect, const Point& p) {
  return rotation_matrix(rect.rotation).transpose() * (p - rect.center);
}

// Closed-set membership with a whisker of slack so analytically constructed
// boundary points survive rotation roundoff.
constexpr double kBoundaryTol = 1e-12;

bool rect_contains(const Rect& rect, const Point& p) {
  const Eigen::Vector2d q = to_rect_frame(rect, p);
  return std::abs(q.x()) <= rect.half_widths.x() + kBoundaryTol &&
         std::abs(q.y()) <= rect.half_widths.y() + kBoundaryTol;
}

// Clearance of p from one elliptical obstacle: positive outside, negative
// inside, scaled by the smaller semi-axis so the magnitude underestimates
// the true distance.
double ellipse_clearance(const Ellipse& e, const Point& p) {
  const double radial =
      std::sqrt(std::max(0.0, ellipse_residual(e, p) + 1.0));
  return (radial - 1.0) * e.semi_axes.minCoeff();
}

}  // namespace

double rect_margin(const Rect& rect, const Point& p) {
  const Eigen::Vector2d q = to_rect_frame(rect, p);
  const double dx = rect.half_widths.x() - std::abs(q.x());
  const double dy = rect.half_widths.y() - std::abs(q.y());
  if (dx >= 0.0 && dy >= 0.0) return std::min(dx, dy);
  // Outside: Euclidean distance to the rectangle.
  const double ex = std::max(0.0, -dx);
  const double ey = std::max(0.0, -dy);
  return -std::hypot(ex, ey);
}

bool contains(const Region& region, const Point& p) {
  if (!p.allFinite()) return false;
  return std::visit(
      [&](const auto& shape) -> bool {
        using T = std::decay_t<decltype(shape)>;
        if constexpr (std::is_same_v<T, SingleRect>) {
          return rect_contains(shape.rect, p);
        } else if constexpr (std::is_same_v<T, WedgeUnion>) {
          return rect_contains(shape.first, p) ||
                 rect_contains(shape.second, p);
        } else {
          if (!rect_contains(shape.rect, p)) return false;
          for (const Ellipse& e : shape.obstacles)
            if (ellipse_residual(e, p) < -kBoundaryTol) return false;
          return true;
        }
      },
      region);
}

std::array<Halfspace, 4> rect_halfspaces(const Rect& rect) {
  const Eigen::Matrix2d R = rotation_matrix(rect.rotation);
  std::array<Halfspace, 4> rows;
  for (int axis = 0; axis < 2; ++axis) {
    const Eigen::Vector2d normal = R.col(axis);
    const double w = rect.half_widths[axis];
    rows[2 * axis] = {normal, normal.dot(rect.center) + w};
    rows[2 * axis + 1] = {-normal, -normal.dot(rect.center) + w};
  }
  return rows;
}

double ellipse_residual(const Ellipse& e, const Point& p) {
  const Eigen::Vector2d q =
      rotation_matrix(e.rotation).transpose() * (p - e.center);
  const double nx = q.x() / e.semi_axes.x();
  const double ny = q.y() / e.semi_axes.y();
  return nx * nx + ny * ny - 1.0;
}

Eigen::Vector2d ellipse_residual_gradient(const Ellipse& e, const Point& p) {
  const Eigen::Matrix2d R = rotation_matrix(e.rotation);
  const Eigen::Matrix2d D_inv2 =
      Eigen::Vector2d(1.0 / (e.semi_axes.x() * e.semi_axes.x()),
                      1.0 / (e.semi_axes.y() * e.semi_axes.y()))
          .asDiagonal();
  const Eigen::Matrix2d M = R * D_inv2 * R.transpose();
  return 2.0 * M * (p - e.center);
}

int active_rect(const WedgeUnion& wedge, const Point& p) {
  const double m0 = rect_margin(wedge.first, p);
  const double m1 = rect_margin(wedge.second, p);
  if (m0 < 0.0 && m1 < 0.0)
    throw std::invalid_argument("point lies outside both wedge rectangles");
  return m1 > m0 ? 1 : 0;
}

double signed_margin(const Region& region, const Point& p) {
  return std::visit(
      [&](const auto& shape) -> double {
        using T = std::decay_t<decltype(shape)>;
        if constexpr (std::is_same_v<T, SingleRect>) {
          return rect_margin(shape.rect, p);
        } else if constexpr (std::is_same_v<T, WedgeUnion>) {
          // Union margin: max of the members; an underestimate inside the
          // overlap, exact elsewhere.
          return std::max(rect_margin(shape.first, p),
                          rect_margin(shape.second, p));
        } else {
          double margin = rect_margin(shape.rect, p);
          for (const Ellipse& e : shape.obstacles)
            margin = std::min(margin, ellipse_clearance(e, p));
          return margin;
        }
      },
      region);
}

}  // namespace cranebench::regions
