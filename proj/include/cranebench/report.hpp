#pragma once

#include <string>
#include <vector>

#include "cranebench/grading.hpp"

namespace cranebench::grading {

// Report bundle under out_dir:
//   <testcase-name>/trajectory.csv
//   <testcase-name>/trajectory.svg
//   <testcase-name>/violations.json
//   <testcase-name>/violations.txt
//   summary.json
//   marks.json
// I/O failures are reported per file and rendering continues; the returned
// list holds failure messages (empty on full success). Regeneration from the
// same inputs is byte-identical.
std::vector<std::string> render_report(
    const std::vector<testcases::Testcase>& suite,
    const std::vector<harness::Trajectory>& trajectories,
    const std::vector<TestcaseGrade>& grades, const MarksBreakdown& marks,
    const std::string& out_dir);

// Plan-view plot: region outline, obstacles, cart and payload paths, start
// and target markers.
std::string trajectory_svg(const testcases::Testcase& tc,
                           const harness::Trajectory& traj);

}  // namespace cranebench::grading
