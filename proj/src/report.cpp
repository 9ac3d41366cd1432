#include "cranebench/report.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cranebench/json_io.hpp"

namespace cranebench::grading {

namespace {

namespace fs = std::filesystem;
using json_io::json;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

struct Mapper {
  double min_x, max_y, scale, pad;
  double x(double wx) const { return (wx - min_x) * scale + pad; }
  double y(double wy) const { return (max_y - wy) * scale + pad; }
};

void svg_rect(std::ostringstream& out, const regions::Rect& r,
              const Mapper& map, const char* style) {
  Eigen::Matrix2d R;
  R << std::cos(r.rotation), -std::sin(r.rotation), std::sin(r.rotation),
      std::cos(r.rotation);
  out << "<polygon points=\"";
  for (const auto& corner :
       {Eigen::Vector2d{1, 1}, Eigen::Vector2d{-1, 1}, Eigen::Vector2d{-1, -1},
        Eigen::Vector2d{1, -1}}) {
    const Eigen::Vector2d p =
        r.center + R * corner.cwiseProduct(r.half_widths);
    out << fmt(map.x(p.x())) << "," << fmt(map.y(p.y())) << " ";
  }
  out << "\" " << style << "/>\n";
}

void svg_region(std::ostringstream& out, const regions::Region& region,
                const Mapper& map) {
  constexpr const char* kOutline =
      "fill=\"none\" stroke=\"black\" stroke-width=\"2\"";
  if (const auto* sr = std::get_if<regions::SingleRect>(&region)) {
    svg_rect(out, sr->rect, map, kOutline);
    return;
  }
  if (const auto* w = std::get_if<regions::WedgeUnion>(&region)) {
    svg_rect(out, w->first, map, kOutline);
    svg_rect(out, w->second, map, kOutline);
    return;
  }
  const auto& rm = std::get<regions::RectMinusObstacles>(region);
  svg_rect(out, rm.rect, map, kOutline);
  for (const auto& e : rm.obstacles) {
    out << "<ellipse cx=\"0\" cy=\"0\" rx=\"" << fmt(e.semi_axes.x() * map.scale)
        << "\" ry=\"" << fmt(e.semi_axes.y() * map.scale)
        << "\" transform=\"translate(" << fmt(map.x(e.center.x())) << " "
        << fmt(map.y(e.center.y())) << ") rotate("
        << fmt(-e.rotation * 180.0 / M_PI)
        << ")\" fill=\"#f4c7c3\" stroke=\"#c0392b\"/>\n";
  }
}

void svg_polyline(std::ostringstream& out,
                  const std::vector<Eigen::Vector2d>& points,
                  const Mapper& map, const char* color) {
  out << "<polyline fill=\"none\" stroke=\"" << color
      << "\" stroke-width=\"1.5\" points=\"";
  for (const auto& p : points)
    out << fmt(map.x(p.x())) << "," << fmt(map.y(p.y())) << " ";
  out << "\"/>\n";
}

void region_bounds(const regions::Region& region, Eigen::Vector2d& lo,
                   Eigen::Vector2d& hi) {
  const auto expand_rect = [&](const regions::Rect& r) {
    const double radius = r.half_widths.norm();
    lo = lo.cwiseMin(r.center - Eigen::Vector2d::Constant(radius));
    hi = hi.cwiseMax(r.center + Eigen::Vector2d::Constant(radius));
  };
  if (const auto* sr = std::get_if<regions::SingleRect>(&region)) {
    expand_rect(sr->rect);
  } else if (const auto* w = std::get_if<regions::WedgeUnion>(&region)) {
    expand_rect(w->first);
    expand_rect(w->second);
  } else {
    expand_rect(std::get<regions::RectMinusObstacles>(region).rect);
  }
}

json violation_to_json(const Violation& v) {
  return {{"kind", violation_kind_name(v.kind)},
          {"subject", subject_name(v.subject)},
          {"time", v.time},
          {"magnitude", v.magnitude},
          {"detail", v.detail}};
}

json clause_to_json(const ClauseResult& c) {
  return {{"ok", c.ok},
          {"worst_value", c.worst_value},
          {"worst_time", c.worst_time},
          {"detail", c.detail}};
}

json report_to_json(const CompletionReport& r) {
  return {{"overall_ok", r.overall_ok},
          {"equilibrium", clause_to_json(r.equilibrium)},
          {"input_interval", clause_to_json(r.input_interval)},
          {"work", clause_to_json(r.work)},
          {"constraints", clause_to_json(r.constraints)}};
}

}  // namespace

std::string trajectory_svg(const testcases::Testcase& tc,
                           const harness::Trajectory& traj) {
  Eigen::Vector2d lo = tc.start.cwiseMin(tc.target);
  Eigen::Vector2d hi = tc.start.cwiseMax(tc.target);
  region_bounds(tc.region, lo, hi);

  std::vector<Eigen::Vector2d> cart_path, payload_path;
  const crane::CraneParams params = crane::perturb_params(
      tc.nominal_params, tc.param_perturbation, tc.seed);
  for (const auto& s : traj.true_states) {
    cart_path.push_back({s.x, s.y});
    payload_path.push_back(crane::payload_position(s, params));
    lo = lo.cwiseMin(cart_path.back());
    hi = hi.cwiseMax(cart_path.back());
  }

  constexpr double kScale = 300.0;
  constexpr double kPad = 20.0;
  const Mapper map{lo.x(), hi.y(), kScale, kPad};
  const double width = (hi.x() - lo.x()) * kScale + 2 * kPad;
  const double height = (hi.y() - lo.y()) * kScale + 2 * kPad;

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(width)
      << "\" height=\"" << fmt(height) << "\">\n";
  svg_region(out, tc.region, map);
  if (!cart_path.empty()) {
    svg_polyline(out, cart_path, map, "#1f77b4");
    svg_polyline(out, payload_path, map, "#ff7f0e");
  }
  // Start: filled circle. Target: empty square.
  out << "<circle cx=\"" << fmt(map.x(tc.start.x())) << "\" cy=\""
      << fmt(map.y(tc.start.y())) << "\" r=\"5\" fill=\"black\"/>\n";
  out << "<rect x=\"" << fmt(map.x(tc.target.x()) - 5) << "\" y=\""
      << fmt(map.y(tc.target.y()) - 5)
      << "\" width=\"10\" height=\"10\" fill=\"none\" stroke=\"black\" "
         "stroke-width=\"2\"/>\n";
  out << "</svg>\n";
  return out.str();
}

std::vector<std::string> render_report(
    const std::vector<testcases::Testcase>& suite,
    const std::vector<harness::Trajectory>& trajectories,
    const std::vector<TestcaseGrade>& grades, const MarksBreakdown& marks,
    const std::string& out_dir) {
  std::vector<std::string> failures;
  const auto fail = [&](const std::string& path, const std::string& what) {
    failures.push_back(path + ": " + what);
  };
  const auto write_file = [&](const fs::path& path,
                              const std::string& content) {
    std::ofstream out(path);
    if (!out) {
      fail(path.string(), "cannot open for writing");
      return;
    }
    out << content;
    if (!out) fail(path.string(), "write failed");
  };

  if (suite.size() != trajectories.size() || suite.size() != grades.size())
    throw std::invalid_argument("suite/trajectory/grade size mismatch");

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) return {out_dir + ": " + ec.message()};

  for (size_t i = 0; i < suite.size(); ++i) {
    const auto& tc = suite[i];
    const fs::path dir = fs::path(out_dir) / tc.name;
    fs::create_directories(dir, ec);
    if (ec) {
      fail(dir.string(), ec.message());
      continue;
    }

    try {
      harness::write_trajectory_csv(trajectories[i],
                                    (dir / "trajectory.csv").string());
    } catch (const std::exception& e) {
      fail((dir / "trajectory.csv").string(), e.what());
    }
    write_file(dir / "trajectory.svg", trajectory_svg(tc, trajectories[i]));

    json violations = json::array();
    for (const auto& v : grades[i].violations)
      violations.push_back(violation_to_json(v));
    const json detail = {{"testcase", tc.name},
                         {"report", report_to_json(grades[i].report)},
                         {"violations", violations}};
    write_file(dir / "violations.json", detail.dump(2) + "\n");

    std::ostringstream txt;
    txt << "testcase: " << tc.name << "\n";
    txt << "completed: " << (grades[i].report.overall_ok ? "yes" : "no")
        << "\n";
    if (grades[i].violations.empty()) {
      txt << "no violations\n";
    } else {
      for (const auto& v : grades[i].violations) {
        txt << "- " << violation_kind_name(v.kind) << " ("
            << subject_name(v.subject) << ") at t=" << fmt(v.time)
            << " s, magnitude " << fmt(v.magnitude);
        if (!v.detail.empty()) txt << " [" << v.detail << "]";
        txt << "\n";
      }
    }
    write_file(dir / "violations.txt", txt.str());
  }

  json summary = json::array();
  for (size_t i = 0; i < suite.size(); ++i) {
    summary.push_back({{"testcase", suite[i].name},
                       {"report", report_to_json(grades[i].report)},
                       {"violation_count", grades[i].violations.size()},
                       {"work", grades[i].work},
                       {"truncated", trajectories[i].truncated}});
  }
  write_file(fs::path(out_dir) / "summary.json",
             json{{"testcases", summary}}.dump(2) + "\n");

  json marks_json = json::array();
  for (const auto& tm : marks.per_testcase)
    marks_json.push_back({{"testcase", tm.name},
                          {"marks", tm.marks},
                          {"completed", tm.completed}});
  write_file(fs::path(out_dir) / "marks.json",
             json{{"per_testcase", marks_json},
                  {"total", marks.total},
                  {"max_total", marks.max_total}}
                 .dump(2) +
                 "\n");
  return failures;
}

}  // namespace cranebench::grading
