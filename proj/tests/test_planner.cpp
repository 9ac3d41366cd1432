#include "cranebench/planner.hpp"

#include <doctest.h>

#include <cmath>

using namespace cranebench::controllers;
using namespace cranebench::regions;

namespace {
double path_length(const std::vector<Eigen::Vector2d>& via) {
  double length = 0.0;
  for (size_t i = 1; i < via.size(); ++i)
    length += (via[i] - via[i - 1]).norm();
  return length;
}
}  // namespace

TEST_CASE("free space gives a straight line of via points") {
  const Region region = SingleRect{Rect{{0, 0}, {2, 2}, 0.0}};
  const Eigen::Vector2d start{-1.5, -1.0};
  const Eigen::Vector2d target{1.5, 1.0};
  const auto via = plan_path(region, start, target);
  REQUIRE(via.size() >= 2);
  CHECK((via.front() - start).norm() == 0.0);
  CHECK((via.back() - target).norm() == 0.0);
  // Collinear within the grid tolerance, so barely longer than the segment.
  CHECK(path_length(via) <= (target - start).norm() * 1.02);
}

TEST_CASE("a central obstacle forces a feasible detour") {
  RectMinusObstacles shape;
  shape.rect = Rect{{0, 0}, {1.5, 1.0}, 0.0};
  shape.obstacles = {Ellipse{{0, 0}, {0.4, 0.4}, 0.0}};
  const Region region = shape;
  const Eigen::Vector2d start{-1.2, 0.0};
  const Eigen::Vector2d target{1.2, 0.0};
  PlannerOptions options;
  options.clearance = 0.1;
  const auto via = plan_path(region, start, target, options);
  CHECK(path_length(via) > (target - start).norm());
  for (const auto& p : via)
    CHECK(signed_margin(region, p) >= options.clearance - 1e-9);
}

TEST_CASE("path length within 1.5x of the hand-computed optimum in an L") {
  // Two perpendicular strips; the shortest route is through the corner.
  const Eigen::Vector2d corner{1.0, 1.0};
  WedgeUnion lshape;
  lshape.first = Rect{{0.5, 1.0}, {0.7, 0.2}, 0.0};   // horizontal strip
  lshape.second = Rect{{1.0, 0.5}, {0.2, 0.7}, 0.0};  // vertical strip
  const Region region = lshape;
  const Eigen::Vector2d start{-0.1, 1.0};
  const Eigen::Vector2d target{1.0, -0.1};
  PlannerOptions options;
  options.clearance = 0.05;
  options.n_via = 16;
  const auto via = plan_path(region, start, target, options);
  // The true optimum cuts the corner through the strip overlap: two straight
  // segments meeting at the inner overlap corner (0.8, 0.8).
  const Eigen::Vector2d inner{0.8, 0.8};
  const double optimum = (inner - start).norm() + (target - inner).norm();
  CHECK(path_length(via) <= 1.5 * optimum);
  CHECK(path_length(via) >= optimum - 1e-9);
  (void)corner;
}

TEST_CASE("an impossible corridor reports no path with guidance") {
  RectMinusObstacles shape;
  shape.rect = Rect{{0, 0}, {1.0, 0.5}, 0.0};
  // A wall of obstacles separating left from right.
  for (int i = 0; i < 5; ++i)
    shape.obstacles.push_back(
        Ellipse{{0.0, -0.5 + 0.25 * i}, {0.15, 0.2}, 0.0});
  const Region region = shape;
  try {
    plan_path(region, {-0.8, 0.0}, {0.8, 0.0});
    FAIL("expected a no-path error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("finer") != std::string::npos);
  }
}

TEST_CASE("start or target without clearance is rejected") {
  const Region region = SingleRect{Rect{{0, 0}, {1, 1}, 0.0}};
  CHECK_THROWS_AS(plan_path(region, {0.999, 0.0}, {0.0, 0.0}),
                  std::invalid_argument);
}

TEST_CASE("path sampler interpolates by arc length") {
  PathSampler sampler({{0, 0}, {1, 0}, {1, 1}});
  CHECK(sampler.total_length() == doctest::Approx(2.0));
  CHECK((sampler.position(0.0) - Eigen::Vector2d{0, 0}).norm() == 0.0);
  CHECK((sampler.position(0.25) - Eigen::Vector2d{0.5, 0}).norm() < 1e-12);
  CHECK((sampler.position(0.5) - Eigen::Vector2d{1, 0}).norm() < 1e-12);
  CHECK((sampler.position(0.75) - Eigen::Vector2d{1, 0.5}).norm() < 1e-12);
  CHECK((sampler.position(1.0) - Eigen::Vector2d{1, 1}).norm() == 0.0);
  CHECK((sampler.tangent(0.2) - Eigen::Vector2d{1, 0}).norm() < 1e-12);
  CHECK((sampler.tangent(0.9) - Eigen::Vector2d{0, 1}).norm() < 1e-12);
}
