#include "cranebench/grading.hpp"

#include <algorithm>
#include <cmath>

#include "cranebench/json_io.hpp"
#include "cranebench/quadrature.hpp"

namespace cranebench::grading {

std::string violation_kind_name(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::kRegion:
      return "region";
    case ViolationKind::kInputInterval:
      return "input_interval";
    case ViolationKind::kWorkBudget:
      return "work_budget";
    case ViolationKind::kEquilibrium:
      return "equilibrium";
    case ViolationKind::kRuntimeError:
      return "runtime_error";
  }
  return "?";
}

std::string subject_name(Subject subject) {
  switch (subject) {
    case Subject::kCart:
      return "cart";
    case Subject::kPayload:
      return "payload";
    case Subject::kInput:
      return "input";
    case Subject::kSystem:
      return "system";
  }
  return "?";
}

namespace {

// Worst equilibrium offense at one sample: the largest ratio of
// |offending value| to its clause tolerance,
// so <= 1 means the sample meets Definition 1.
struct EquilibriumAtSample {
  double worst_ratio = 0.0;
  std::string worst_clause;
};

EquilibriumAtSample equilibrium_at(const harness::Trajectory& traj,
                                   const testcases::Testcase& tc,
                                   const crane::CraneParams& params, int k) {
  const crane::CraneState& s = traj.true_states[k];
  const Eigen::Vector2d cart{s.x, s.y};
  const Eigen::Vector2d payload = crane::payload_position(s, params);
  const double cart_err = (cart - tc.target).lpNorm<Eigen::Infinity>();
  const double payload_err = (payload - tc.target).lpNorm<Eigen::Infinity>();
  const double rate_err =
      std::max({std::abs(s.xdot), std::abs(s.ydot), std::abs(s.thetadot),
                std::abs(s.psidot)});
  const double input_err = traj.inputs.row(k).cwiseAbs().maxCoeff();

  EquilibriumAtSample result;
  const auto consider = [&](double ratio, const char* clause) {
    if (ratio > result.worst_ratio) {
      result.worst_ratio = ratio;
      result.worst_clause = clause;
    }
  };
  consider(cart_err / tc.eps_t, "cart position");
  consider(payload_err / tc.eps_t, "payload position");
  consider(rate_err / tc.eps_r, "rates");
  consider(input_err / tc.eps_r, "inputs");
  return result;
}

}  // namespace

ClauseResult check_equilibrium(const harness::Trajectory& traj,
                               const testcases::Testcase& tc,
                               const crane::CraneParams& params,
                               const GradeOptions& options) {
  ClauseResult clause;
  if (!traj.full_length(tc)) {
    clause.ok = false;
    clause.detail = "trajectory truncated by a runtime error";
    clause.worst_time = traj.times.empty() ? 0.0 : traj.times.back();
    return clause;
  }
  if (options.legacy_equilibrium) {
    // Pre-2021 wording: one conforming instant anywhere suffices.
    double best_ratio = std::numeric_limits<double>::infinity();
    for (int k = 0; k < traj.num_samples(); ++k) {
      const auto at = equilibrium_at(traj, tc, params, k);
      if (at.worst_ratio < best_ratio) {
        best_ratio = at.worst_ratio;
        clause.worst_time = traj.times[k];
        clause.worst_value = at.worst_ratio;
        clause.detail = at.worst_clause;
      }
      if (at.worst_ratio <= 1.0) {
        clause.ok = true;
        return clause;
      }
    }
    clause.ok = false;
    return clause;
  }
  const int last = traj.num_samples() - 1;
  const auto at = equilibrium_at(traj, tc, params, last);
  clause.ok = at.worst_ratio <= 1.0;
  clause.worst_value = at.worst_ratio;
  clause.worst_time = traj.times[last];
  clause.detail = at.worst_clause;
  return clause;
}

double compute_work(const harness::Trajectory& traj,
                    const crane::CraneParams& params) {
  const int n = traj.num_samples();
  if (n < 2) return 0.0;
  std::vector<double> power(n);
  for (int k = 0; k < n; ++k) {
    const crane::CraneState& s = traj.true_states[k];
    power[k] = std::abs(params.force_gain * traj.inputs(k, 0) * s.xdot) +
               std::abs(params.force_gain * traj.inputs(k, 1) * s.ydot);
  }
  const double h = traj.times[1] - traj.times[0];
  const bool even_intervals = (n - 1) % 2 == 0;
  return even_intervals ? numerics::quad_simpson(power, h)
                        : numerics::quad_trapezoid(power, h);
}

std::vector<Violation> detect_violations(const harness::Trajectory& traj,
                                         const testcases::Testcase& tc) {
  const crane::CraneParams params = crane::perturb_params(
      tc.nominal_params, tc.param_perturbation, tc.seed);
  std::vector<Violation> out;

  // Contiguous excursion tracker per (kind, subject) stream.
  struct Excursion {
    bool active = false;
    Violation peak;
  };
  const auto update = [&out](Excursion& e, bool violated, ViolationKind kind,
                             Subject subject, double magnitude, double time) {
    if (violated) {
      if (!e.active) {
        e.active = true;
        e.peak = Violation{kind, time, magnitude, subject, {}};
      } else if (magnitude > e.peak.magnitude) {
        e.peak.magnitude = magnitude;
        e.peak.time = time;
      }
    } else if (e.active) {
      out.push_back(e.peak);
      e = Excursion{};
    }
  };

  Excursion cart_exc, payload_exc, input_exc;
  for (int k = 0; k < traj.num_samples(); ++k) {
    const double t = traj.times[k];
    const crane::CraneState& s = traj.true_states[k];
    const Eigen::Vector2d cart{s.x, s.y};
    const Eigen::Vector2d payload = crane::payload_position(s, params);

    const bool cart_out = !regions::contains(tc.region, cart);
    update(cart_exc, cart_out, ViolationKind::kRegion, Subject::kCart,
           std::abs(regions::signed_margin(tc.region, cart)), t);
    const bool payload_out = !regions::contains(tc.region, payload);
    update(payload_exc, payload_out, ViolationKind::kRegion, Subject::kPayload,
           std::abs(regions::signed_margin(tc.region, payload)), t);

    const double exceedance = traj.inputs.row(k).cwiseAbs().maxCoeff() - 1.0;
    update(input_exc, exceedance > 0.0, ViolationKind::kInputInterval,
           Subject::kInput, exceedance, t);
  }
  // Close any excursion still running at the final sample.
  update(cart_exc, false, ViolationKind::kRegion, Subject::kCart, 0, 0);
  update(payload_exc, false, ViolationKind::kRegion, Subject::kPayload, 0, 0);
  update(input_exc, false, ViolationKind::kInputInterval, Subject::kInput, 0,
         0);

  for (const auto& event : traj.error_events) {
    Violation v;
    v.kind = ViolationKind::kRuntimeError;
    v.subject = Subject::kSystem;
    v.time = event.sample * tc.ts;
    v.magnitude = 0.0;
    v.detail = "level " + std::to_string(event.level) + ": " +
               event.description;
    out.push_back(v);
  }
  return out;
}

CompletionReport check_completion(const harness::Trajectory& traj,
                                  const testcases::Testcase& tc,
                                  const crane::CraneParams& params,
                                  const GradeOptions& options) {
  CompletionReport report;
  report.equilibrium = check_equilibrium(traj, tc, params, options);

  // Input interval over the whole run.
  report.input_interval.ok = true;
  for (int k = 0; k < traj.num_samples(); ++k) {
    const double mag = traj.inputs.row(k).cwiseAbs().maxCoeff();
    if (mag > report.input_interval.worst_value) {
      report.input_interval.worst_value = mag;
      report.input_interval.worst_time = traj.times[k];
    }
  }
  report.input_interval.ok = report.input_interval.worst_value <= 1.0 + 1e-12;
  report.input_interval.detail = "max |u|";

  const double work = compute_work(traj, params);
  report.work.ok = work <= tc.W_max;
  report.work.worst_value = work;
  report.work.worst_time = traj.times.empty() ? 0.0 : traj.times.back();
  report.work.detail = "total work (J)";

  report.constraints.ok = true;
  for (const auto& v : detect_violations(traj, tc)) {
    if (v.kind != ViolationKind::kRegion) continue;
    report.constraints.ok = false;
    if (v.magnitude > report.constraints.worst_value) {
      report.constraints.worst_value = v.magnitude;
      report.constraints.worst_time = v.time;
      report.constraints.detail =
          subject_name(v.subject) + " left the region";
    }
  }

  report.overall_ok = report.equilibrium.ok && report.input_interval.ok &&
                      report.work.ok && report.constraints.ok;
  return report;
}

TestcaseGrade grade_testcase(const harness::Trajectory& traj,
                             const testcases::Testcase& tc,
                             const GradeOptions& options) {
  const crane::CraneParams params = crane::perturb_params(
      tc.nominal_params, tc.param_perturbation, tc.seed);
  TestcaseGrade grade;
  grade.testcase_name = tc.name;
  grade.report = check_completion(traj, tc, params, options);
  grade.violations = detect_violations(traj, tc);
  grade.work = grade.report.work.worst_value;

  // Clause failures join the listing so reports show every breach.
  if (!grade.report.equilibrium.ok) {
    Violation v;
    v.kind = ViolationKind::kEquilibrium;
    v.subject = Subject::kSystem;
    v.time = grade.report.equilibrium.worst_time;
    v.magnitude = grade.report.equilibrium.worst_value;
    v.detail = grade.report.equilibrium.detail;
    grade.violations.push_back(v);
  }
  if (!grade.report.work.ok) {
    Violation v;
    v.kind = ViolationKind::kWorkBudget;
    v.subject = Subject::kSystem;
    v.time = grade.report.work.worst_time;
    v.magnitude = grade.work - tc.W_max;
    v.detail = "work above budget";
    grade.violations.push_back(v);
  }
  return grade;
}

Rubric rubric_from_json_file(const std::string& path) {
  const auto j = json_io::load_json(path);
  Rubric rubric;
  rubric.max_marks_per_testcase = j.at("max_marks_per_testcase").get<double>();
  rubric.deductions.clear();  // the file fully specifies the deductions
  const auto& deductions = j.at("deductions");
  const auto read = [&](ViolationKind kind) {
    const std::string key = violation_kind_name(kind);
    if (deductions.contains(key)) {
      const double value = deductions.at(key).get<double>();
      if (value < 0)
        throw std::invalid_argument("rubric weights must be nonnegative");
      rubric.deductions[kind] = value;
    }
  };
  read(ViolationKind::kRegion);
  read(ViolationKind::kInputInterval);
  read(ViolationKind::kWorkBudget);
  read(ViolationKind::kEquilibrium);
  read(ViolationKind::kRuntimeError);
  return rubric;
}

MarksBreakdown score(const std::vector<TestcaseGrade>& grades,
                     const Rubric& rubric) {
  for (const auto& [kind, weight] : rubric.deductions)
    if (weight < 0)
      throw std::invalid_argument("rubric weights must be nonnegative");

  MarksBreakdown breakdown;
  for (const auto& grade : grades) {
    TestcaseMarks marks;
    marks.name = grade.testcase_name;
    marks.completed = grade.report.overall_ok;
    double value = rubric.max_marks_per_testcase;
    if (!grade.report.overall_ok) {
      for (const auto& v : grade.violations) {
        const auto it = rubric.deductions.find(v.kind);
        if (it != rubric.deductions.end()) value -= it->second;
      }
      value = std::max(0.0, value);
    }
    marks.marks = value;
    breakdown.per_testcase.push_back(marks);
    breakdown.total += value;
    breakdown.max_total += rubric.max_marks_per_testcase;
  }
  return breakdown;
}

}  // namespace cranebench::grading
