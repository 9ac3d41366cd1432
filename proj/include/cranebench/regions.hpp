#pragma once

#include <Eigen/Dense>
#include <variant>
#include <vector>

namespace cranebench::regions {

using Point = Eigen::Vector2d;

struct Rect {
  Point center{0, 0};
  Eigen::Vector2d half_widths{1, 1};
  double rotation = 0.0;  // rad, counterclockwise
};

struct Ellipse {
  Point center{0, 0};
  Eigen::Vector2d semi_axes{1, 1};
  double rotation = 0.0;
};

struct SingleRect {
  Rect rect;
};

// Allowed set is the union of the two (overlapping) rectangles; this is the
// chevron-shaped wedge region.
struct WedgeUnion {
  Rect first;
  Rect second;
};

// Allowed set is the rectangle minus up to 10 elliptical obstacles. Circles
// centered on the rectangle edge are ellipses with equal semi-axes.
struct RectMinusObstacles {
  Rect rect;
  std::vector<Ellipse> obstacles;
};

using Region = std::variant<SingleRect, WedgeUnion, RectMinusObstacles>;

// Half-space row a'p <= b.
struct Halfspace {
  Eigen::Vector2d a;
  double b;
};

// Membership in the allowed (white) set; the boundary counts as inside.
bool contains(const Region& region, const Point& p);

// The four rows whose intersection is exactly the rectangle.
std::array<Halfspace, 4> rect_halfspaces(const Rect& rect);

// g(p) = (p - c)' M (p - c) - 1 with M from the semi-axes and rotation:
// negative strictly inside the obstacle, zero on its boundary.
double ellipse_residual(const Ellipse& e, const Point& p);
Eigen::Vector2d ellipse_residual_gradient(const Ellipse& e, const Point& p);

// Index (0 or 1) of the wedge rectangle containing p, preferring the larger
// interior margin; throws when p is outside both.
int active_rect(const WedgeUnion& wedge, const Point& p);

// Positive inside the allowed set, negative outside; the magnitude is the
// distance to the allowed-set boundary (exact for rectangles, a conservative
// underestimate near ellipse boundaries).
double signed_margin(const Region& region, const Point& p);

// Signed distance of p to the rectangle boundary (positive inside).
double rect_margin(const Rect& rect, const Point& p);

}  // namespace cranebench::regions
