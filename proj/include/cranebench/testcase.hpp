#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "cranebench/crane.hpp"
#include "cranebench/regions.hpp"

namespace cranebench::testcases {

enum class Family { kWedge, kEdgeCircles, kRegionEllipses };

std::string family_name(Family family);
Family family_from_name(const std::string& name);

// One grading scenario. The plant simulated against a controller uses
// perturb_params(nominal_params, param_perturbation, seed); controllers only
// ever see the public view.
struct Testcase {
  std::string name;
  regions::Region region;
  Eigen::Vector2d start{0, 0};
  Eigen::Vector2d target{0, 0};
  double T_f = 5.0;
  double ts = 0.05;
  double eps_t = 0.02;   // m
  double eps_r = 0.01;   // m/s, rad/s and input units per channel
  double W_max = 10.0;   // J
  double param_perturbation = 0.0;
  std::uint64_t seed = 0;
  Eigen::Vector4d measurement_noise_std = Eigen::Vector4d::Zero();
  crane::CraneParams nominal_params;

  int num_samples() const { return static_cast<int>(std::lround(T_f / ts)); }
};

// Controller-visible subset: perturbation and noise settings stay hidden and
// the parameters reported are the nominal ones.
struct PublicTestcase {
  std::string name;
  regions::Region region;
  Eigen::Vector2d start{0, 0};
  Eigen::Vector2d target{0, 0};
  double T_f = 5.0;
  double ts = 0.05;
  double eps_t = 0.02;
  double eps_r = 0.01;
  double W_max = 10.0;
  crane::CraneParams params;
};

PublicTestcase public_view(const Testcase& tc);

// Start/target containment and clearance (0.05 m by default), positive
// tolerances and budgets, T_f an integer multiple of ts.
constexpr double kDefaultClearance = 0.05;
bool validate(const Testcase& tc, std::string* why = nullptr,
              double clearance = kDefaultClearance);

// The one published testcase per shape family. Deterministic.
Testcase default_testcase(Family family);

struct SuiteSpec {
  Family family = Family::kWedge;
  int count = 32;
  std::uint64_t seed = 0;
  // Knobs for the four secret-testcase generation classes.
  double region_scale_min = 0.75;
  double region_scale_max = 1.3;
  double target_clearance_min = 0.055;
  double target_clearance_max = 0.12;
  int obstacle_count_min = 1;
  int obstacle_count_max = 6;
  double param_perturbation_min = 0.05;
  double param_perturbation_max = 0.2;
};

// The default testcase followed by seeded variations cycling through the
// four generation classes (region rescaling, target moved toward the
// constraints, extra elliptical obstacles, plant parameter perturbation).
// Deterministic for a fixed spec; every testcase satisfies validate().
std::vector<Testcase> generate_suite(const SuiteSpec& spec);

}  // namespace cranebench::testcases
