#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "cranebench/harness.hpp"
#include "cranebench/testcase.hpp"

namespace cranebench::json_io {

using nlohmann::json;

json to_json(const crane::CraneParams& params);
crane::CraneParams params_from_json(const json& j);

json to_json(const regions::Region& region);
regions::Region region_from_json(const json& j);

json to_json(const testcases::Testcase& tc);
testcases::Testcase testcase_from_json(const json& j);

// Public view carries no perturbation or noise fields at all.
json to_json(const testcases::PublicTestcase& view);

// Suite file: a provenance block naming the generator algorithm and spec,
// then the testcase array.
json suite_to_json(const std::vector<testcases::Testcase>& suite,
                   const testcases::SuiteSpec& spec);
std::vector<testcases::Testcase> suite_from_json(const json& j);

// Full trajectory export with the error events embedded.
json trajectory_to_json(const harness::Trajectory& traj);

void save_json(const json& j, const std::string& path);
json load_json(const std::string& path);

}  // namespace cranebench::json_io
