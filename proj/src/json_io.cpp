#include "cranebench/json_io.hpp"

#include <fstream>
#include <stdexcept>

namespace cranebench::json_io {

namespace {

json point_to_json(const Eigen::Vector2d& p) { return json::array({p.x(), p.y()}); }

Eigen::Vector2d point_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2)
    throw std::invalid_argument("expected a 2-element point array");
  return {j[0].get<double>(), j[1].get<double>()};
}

json rect_to_json(const regions::Rect& r) {
  return {{"center", point_to_json(r.center)},
          {"half_widths", point_to_json(r.half_widths)},
          {"rotation", r.rotation}};
}

regions::Rect rect_from_json(const json& j) {
  regions::Rect r;
  r.center = point_from_json(j.at("center"));
  r.half_widths = point_from_json(j.at("half_widths"));
  r.rotation = j.at("rotation").get<double>();
  return r;
}

json ellipse_to_json(const regions::Ellipse& e) {
  return {{"center", point_to_json(e.center)},
          {"semi_axes", point_to_json(e.semi_axes)},
          {"rotation", e.rotation}};
}

regions::Ellipse ellipse_from_json(const json& j) {
  regions::Ellipse e;
  e.center = point_from_json(j.at("center"));
  e.semi_axes = point_from_json(j.at("semi_axes"));
  e.rotation = j.at("rotation").get<double>();
  return e;
}

}  // namespace

json to_json(const crane::CraneParams& p) {
  return {{"cart_mass", p.cart_mass},
          {"payload_mass", p.payload_mass},
          {"cable_length", p.cable_length},
          {"force_gain", p.force_gain},
          {"cart_friction", p.cart_friction},
          {"swing_damping", p.swing_damping},
          {"gravity", p.gravity}};
}

crane::CraneParams params_from_json(const json& j) {
  crane::CraneParams p;
  p.cart_mass = j.at("cart_mass").get<double>();
  p.payload_mass = j.at("payload_mass").get<double>();
  p.cable_length = j.at("cable_length").get<double>();
  p.force_gain = j.at("force_gain").get<double>();
  p.cart_friction = j.at("cart_friction").get<double>();
  p.swing_damping = j.at("swing_damping").get<double>();
  p.gravity = j.at("gravity").get<double>();
  if (!p.valid()) throw std::invalid_argument("invalid crane parameters");
  return p;
}

json to_json(const regions::Region& region) {
  if (const auto* sr = std::get_if<regions::SingleRect>(&region))
    return {{"kind", "single_rect"}, {"rect", rect_to_json(sr->rect)}};
  if (const auto* w = std::get_if<regions::WedgeUnion>(&region))
    return {{"kind", "wedge_union"},
            {"first", rect_to_json(w->first)},
            {"second", rect_to_json(w->second)}};
  const auto& rm = std::get<regions::RectMinusObstacles>(region);
  json obstacles = json::array();
  for (const auto& e : rm.obstacles) obstacles.push_back(ellipse_to_json(e));
  return {{"kind", "rect_minus_obstacles"},
          {"rect", rect_to_json(rm.rect)},
          {"obstacles", obstacles}};
}

regions::Region region_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "single_rect")
    return regions::SingleRect{rect_from_json(j.at("rect"))};
  if (kind == "wedge_union")
    return regions::WedgeUnion{rect_from_json(j.at("first")),
                               rect_from_json(j.at("second"))};
  if (kind == "rect_minus_obstacles") {
    regions::RectMinusObstacles rm;
    rm.rect = rect_from_json(j.at("rect"));
    for (const auto& e : j.at("obstacles")) {
      rm.obstacles.push_back(ellipse_from_json(e));
      if (rm.obstacles.size() > 10)
        throw std::invalid_argument("at most 10 obstacles are allowed");
    }
    return rm;
  }
  throw std::invalid_argument("unknown region kind: " + kind);
}

json to_json(const testcases::Testcase& tc) {
  return {{"name", tc.name},
          {"region", to_json(tc.region)},
          {"start", point_to_json(tc.start)},
          {"target", point_to_json(tc.target)},
          {"T_f", tc.T_f},
          {"ts", tc.ts},
          {"eps_t", tc.eps_t},
          {"eps_r", tc.eps_r},
          {"W_max", tc.W_max},
          {"param_perturbation", tc.param_perturbation},
          {"seed", tc.seed},
          {"measurement_noise_std",
           json::array({tc.measurement_noise_std[0], tc.measurement_noise_std[1],
                        tc.measurement_noise_std[2],
                        tc.measurement_noise_std[3]})},
          {"nominal_params", to_json(tc.nominal_params)}};
}

testcases::Testcase testcase_from_json(const json& j) {
  testcases::Testcase tc;
  tc.name = j.at("name").get<std::string>();
  tc.region = region_from_json(j.at("region"));
  tc.start = point_from_json(j.at("start"));
  tc.target = point_from_json(j.at("target"));
  tc.T_f = j.at("T_f").get<double>();
  tc.ts = j.at("ts").get<double>();
  tc.eps_t = j.at("eps_t").get<double>();
  tc.eps_r = j.at("eps_r").get<double>();
  tc.W_max = j.at("W_max").get<double>();
  tc.param_perturbation = j.at("param_perturbation").get<double>();
  tc.seed = j.at("seed").get<std::uint64_t>();
  const auto& noise = j.at("measurement_noise_std");
  for (int i = 0; i < 4; ++i)
    tc.measurement_noise_std[i] = noise.at(i).get<double>();
  tc.nominal_params = params_from_json(j.at("nominal_params"));
  std::string why;
  if (!testcases::validate(tc, &why))
    throw std::invalid_argument("invalid testcase '" + tc.name + "': " + why);
  return tc;
}

json to_json(const testcases::PublicTestcase& view) {
  return {{"name", view.name},
          {"region", to_json(view.region)},
          {"start", point_to_json(view.start)},
          {"target", point_to_json(view.target)},
          {"T_f", view.T_f},
          {"ts", view.ts},
          {"eps_t", view.eps_t},
          {"eps_r", view.eps_r},
          {"W_max", view.W_max},
          {"params", to_json(view.params)}};
}

json suite_to_json(const std::vector<testcases::Testcase>& suite,
                   const testcases::SuiteSpec& spec) {
  json testcase_array = json::array();
  for (const auto& tc : suite) testcase_array.push_back(to_json(tc));
  return {{"generator",
           {{"algorithm", "splitmix64"},
            {"family", testcases::family_name(spec.family)},
            {"count", spec.count},
            {"seed", spec.seed},
            {"region_scale_range",
             json::array({spec.region_scale_min, spec.region_scale_max})},
            {"target_clearance_range",
             json::array(
                 {spec.target_clearance_min, spec.target_clearance_max})},
            {"obstacle_count_range",
             json::array({spec.obstacle_count_min, spec.obstacle_count_max})},
            {"param_perturbation_range",
             json::array({spec.param_perturbation_min,
                          spec.param_perturbation_max})}}},
          {"testcases", testcase_array}};
}

std::vector<testcases::Testcase> suite_from_json(const json& j) {
  std::vector<testcases::Testcase> suite;
  for (const auto& tc : j.at("testcases"))
    suite.push_back(testcase_from_json(tc));
  if (suite.empty()) throw std::invalid_argument("suite file has no testcases");
  return suite;
}

json trajectory_to_json(const harness::Trajectory& traj) {
  const auto matrix_rows = [](const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
      rows.push_back(row);
    }
    return rows;
  };
  json states = json::array();
  for (const auto& s : traj.true_states) {
    json row = json::array();
    const auto v = s.vec();
    for (int i = 0; i < 8; ++i) row.push_back(v[i]);
    states.push_back(row);
  }
  json events = json::array();
  for (const auto& e : traj.error_events)
    events.push_back({{"level", e.level},
                      {"sample", e.sample},
                      {"description", e.description}});
  return {{"times", traj.times},
          {"true_states", states},
          {"measurements", matrix_rows(traj.measurements)},
          {"estimates", matrix_rows(traj.estimates)},
          {"references", matrix_rows(traj.references)},
          {"inputs", matrix_rows(traj.inputs)},
          {"solver_time_per_sample", traj.solver_time_per_sample},
          {"error_events", events},
          {"truncated", traj.truncated}};
}

void save_json(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << j.dump(2) << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  json j;
  in >> j;
  return j;
}

}  // namespace cranebench::json_io
