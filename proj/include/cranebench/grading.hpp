#pragma once

#include <map>
#include <string>
#include <vector>

#include "cranebench/harness.hpp"
#include "cranebench/testcase.hpp"

namespace cranebench::grading {

enum class ViolationKind {
  kRegion,
  kInputInterval,
  kWorkBudget,
  kEquilibrium,
  kRuntimeError,
};

enum class Subject { kCart, kPayload, kInput, kSystem };

std::string violation_kind_name(ViolationKind kind);
std::string subject_name(Subject subject);

// One specification breach. Contiguous per-sample excursions of the same
// kind and subject collapse into a single violation carrying the peak
// magnitude and the time it occurred.
struct Violation {
  ViolationKind kind;
  double time = 0.0;       // s, at the peak
  double magnitude = 0.0;  // |signed margin| for region, exceedance for input
  Subject subject = Subject::kSystem;
  std::string detail;
};

struct ClauseResult {
  bool ok = false;
  double worst_value = 0.0;  // worst offending value of the clause
  double worst_time = 0.0;
  std::string detail;
};

// Verdict per Definition 2: equilibrium at T_f, inputs within [-1, 1]
// throughout, work within budget, no constraint violations.
struct CompletionReport {
  ClauseResult equilibrium;
  ClauseResult input_interval;
  ClauseResult work;
  ClauseResult constraints;
  bool overall_ok = false;
};

struct GradeOptions {
  // Reproduces the pre-2021 wording: equilibrium holds if all its clauses
  // are met at any single sample instead of exactly at T_f.
  bool legacy_equilibrium = false;
};

// Equilibrium clause at t = T_f exactly (infinity norm on each group):
// cart and payload within eps_t of the target, rates and inputs within
// eps_r of zero. A truncated trajectory fails with runtime context.
ClauseResult check_equilibrium(const harness::Trajectory& traj,
                               const testcases::Testcase& tc,
                               const crane::CraneParams& params,
                               const GradeOptions& options = {});

// Total absolute mechanical work of the drive forces,
// W = integral of |k ux xdot| + |k uy ydot| dt, composite Simpson over the
// samples (trapezoid when the interval count is odd).
double compute_work(const harness::Trajectory& traj,
                    const crane::CraneParams& params);

// Region membership of cart and payload per sample plus the input-interval
// scan; runtime error events map to runtime_error violations.
std::vector<Violation> detect_violations(const harness::Trajectory& traj,
                                         const testcases::Testcase& tc);

CompletionReport check_completion(const harness::Trajectory& traj,
                                  const testcases::Testcase& tc,
                                  const crane::CraneParams& params,
                                  const GradeOptions& options = {});

// Everything grading derives from one closed-loop run. Violations include
// equilibrium/work entries when those clauses fail, so reports carry the
// full breach listing.
struct TestcaseGrade {
  std::string testcase_name;
  CompletionReport report;
  std::vector<Violation> violations;
  double work = 0.0;
};

// Grades with the same perturbed plant parameters the harness simulated.
TestcaseGrade grade_testcase(const harness::Trajectory& traj,
                             const testcases::Testcase& tc,
                             const GradeOptions& options = {});

struct Rubric {
  double max_marks_per_testcase = 10.0;
  // Deduction per violation of each kind; missing kinds deduct nothing.
  std::map<ViolationKind, double> deductions = {
      {ViolationKind::kRegion, 3.0},        {ViolationKind::kInputInterval, 2.0},
      {ViolationKind::kWorkBudget, 2.0},    {ViolationKind::kEquilibrium, 4.0},
      {ViolationKind::kRuntimeError, 5.0},
  };
};

Rubric rubric_from_json_file(const std::string& path);

struct TestcaseMarks {
  std::string name;
  double marks = 0.0;
  bool completed = false;
};

struct MarksBreakdown {
  std::vector<TestcaseMarks> per_testcase;
  double total = 0.0;
  double max_total = 0.0;
};

// Full marks for completed testcases, weighted deductions per violation
// otherwise, floored at zero. Deterministic.
MarksBreakdown score(const std::vector<TestcaseGrade>& grades,
                     const Rubric& rubric);

}  // namespace cranebench::grading
