#include <CLI11.hpp>
#include <dlfcn.h>

#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>

#include "cranebench/controllers.hpp"
#include "cranebench/grading.hpp"
#include "cranebench/json_io.hpp"
#include "cranebench/report.hpp"

namespace {

using namespace cranebench;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;

// Plugin contract: a shared object exporting
//   extern "C" cranebench::harness::ControllerHooks*
//   cranebench_make_controller(const cranebench::testcases::PublicTestcase*);
// The returned hooks are heap-allocated and owned by the caller. Plugins
// must be built against the same toolchain and headers as this binary.
using PluginEntry =
    harness::ControllerHooks* (*)(const testcases::PublicTestcase*);

class PluginLibrary {
 public:
  explicit PluginLibrary(const std::string& path) {
    handle_ = dlopen(path.c_str(), RTLD_NOW | RTLD_LOCAL);
    if (handle_ == nullptr)
      throw std::invalid_argument("cannot load controller plugin: " +
                                  std::string(dlerror()));
    entry_ = reinterpret_cast<PluginEntry>(
        dlsym(handle_, "cranebench_make_controller"));
    if (entry_ == nullptr)
      throw std::invalid_argument(
          path + " does not export cranebench_make_controller");
  }
  ~PluginLibrary() {
    if (handle_ != nullptr) dlclose(handle_);
  }
  PluginLibrary(const PluginLibrary&) = delete;
  PluginLibrary& operator=(const PluginLibrary&) = delete;

  harness::ControllerHooks make(const testcases::PublicTestcase& view) const {
    std::unique_ptr<harness::ControllerHooks> hooks(entry_(&view));
    if (!hooks) throw std::runtime_error("plugin returned no hooks");
    return *hooks;
  }

 private:
  void* handle_ = nullptr;
  PluginEntry entry_ = nullptr;
};

bool looks_like_plugin(const std::string& controller) {
  return controller.find(".so") != std::string::npos ||
         controller.find('/') != std::string::npos;
}

// Resolves --controller/--config into a per-testcase hooks factory.
harness::HooksFactory make_hooks_factory(const std::string& controller,
                                         const std::string& config_path,
                                         std::shared_ptr<PluginLibrary>* keep) {
  if (looks_like_plugin(controller)) {
    auto plugin = std::make_shared<PluginLibrary>(controller);
    *keep = plugin;
    return [plugin](const testcases::PublicTestcase& view) {
      return plugin->make(view);
    };
  }
  controllers::ControllerConfig config =
      controllers::corpus_config(controller);
  if (!config_path.empty())
    config = controllers::config_from_json(json_io::load_json(config_path),
                                           config);
  return [config](const testcases::PublicTestcase& view) {
    return controllers::make_controller(config, view);
  };
}

int cmd_generate(std::uint64_t seed, int count, const std::string& family,
                 const std::string& out) {
  testcases::SuiteSpec spec;
  spec.seed = seed;
  spec.count = count;
  spec.family = testcases::family_from_name(family);
  const auto suite = testcases::generate_suite(spec);
  json_io::save_json(json_io::suite_to_json(suite, spec), out);
  std::printf("wrote %zu testcases to %s\n", suite.size(), out.c_str());
  return kExitOk;
}

int cmd_simulate(const std::string& testcase_path,
                 const std::string& controller, const std::string& config_path,
                 const std::string& out_dir) {
  const auto tc =
      json_io::testcase_from_json(json_io::load_json(testcase_path));
  std::shared_ptr<PluginLibrary> plugin;
  const auto factory = make_hooks_factory(controller, config_path, &plugin);
  const auto traj = harness::simulate(tc, factory(testcases::public_view(tc)));
  const auto grade = grading::grade_testcase(traj, tc);

  std::filesystem::create_directories(out_dir);
  const auto base = std::filesystem::path(out_dir);
  harness::write_trajectory_csv(traj, (base / "trajectory.csv").string());
  json_io::save_json(json_io::trajectory_to_json(traj),
                     (base / "trajectory.json").string());
  {
    std::ofstream svg(base / "trajectory.svg");
    svg << grading::trajectory_svg(tc, traj);
  }
  json_io::json violations = json_io::json::array();
  for (const auto& v : grade.violations)
    violations.push_back({{"kind", grading::violation_kind_name(v.kind)},
                          {"subject", grading::subject_name(v.subject)},
                          {"time", v.time},
                          {"magnitude", v.magnitude},
                          {"detail", v.detail}});
  json_io::save_json({{"testcase", tc.name},
                      {"completed", grade.report.overall_ok},
                      {"violations", violations}},
                     (base / "violations.json").string());
  std::printf("%s: %s (%zu violations)\n", tc.name.c_str(),
              grade.report.overall_ok ? "completed" : "failed",
              grade.violations.size());
  return kExitOk;
}

int cmd_grade(const std::string& suite_path, const std::string& controller,
              const std::string& config_path, const std::string& rubric_path,
              const std::string& out_dir, int parallelism,
              double watchdog_secs, bool legacy_equilibrium) {
  const auto suite = json_io::suite_from_json(json_io::load_json(suite_path));
  std::shared_ptr<PluginLibrary> plugin;
  const auto factory = make_hooks_factory(controller, config_path, &plugin);

  harness::RunOptions run_options;
  run_options.parallelism = parallelism;
  run_options.watchdog_budget_s = watchdog_secs;
  const auto trajectories = harness::run_suite(suite, factory, run_options);

  grading::GradeOptions grade_options;
  grade_options.legacy_equilibrium = legacy_equilibrium;
  std::vector<grading::TestcaseGrade> grades;
  grades.reserve(suite.size());
  int completed = 0;
  for (size_t i = 0; i < suite.size(); ++i) {
    grades.push_back(
        grading::grade_testcase(trajectories[i], suite[i], grade_options));
    if (grades.back().report.overall_ok) ++completed;
  }

  const grading::Rubric rubric =
      rubric_path.empty() ? grading::Rubric{}
                          : grading::rubric_from_json_file(rubric_path);
  const auto marks = grading::score(grades, rubric);
  const auto failures =
      grading::render_report(suite, trajectories, grades, marks, out_dir);
  for (const auto& f : failures)
    std::fprintf(stderr, "report: %s\n", f.c_str());

  for (size_t i = 0; i < grades.size(); ++i)
    std::printf("%-24s %-9s %5.1f marks, %zu violations\n",
                grades[i].testcase_name.c_str(),
                grades[i].report.overall_ok ? "completed" : "failed",
                marks.per_testcase[i].marks, grades[i].violations.size());
  std::printf("total: %.1f / %.1f (%d of %zu testcases completed)\n",
              marks.total, marks.max_total, completed, suite.size());
  return failures.empty() ? kExitOk : kExitIo;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gantry crane MPC benchmark: suite generation, closed-loop "
               "simulation and specification grading"};
  app.require_subcommand(1);

  auto* generate = app.add_subcommand(
      "generate", "Generate a deterministic testcase suite");
  std::uint64_t seed = 0;
  int count = 32;
  std::string family = "wedge";
  std::string out_path = "suite.json";
  generate->add_option("--seed", seed, "Suite generator seed");
  generate->add_option("--count", count, "Number of testcases (>= 1)");
  generate->add_option("--family", family,
                       "Shape family: wedge, edge_circles, region_ellipses");
  generate->add_option("--out", out_path, "Output suite file");

  auto* simulate =
      app.add_subcommand("simulate", "Closed-loop run of one testcase");
  std::string testcase_path, controller = "linear_hard", config_path;
  std::string sim_out = "sim-out";
  simulate->add_option("--testcase", testcase_path, "Testcase JSON file")
      ->required();
  simulate->add_option("--controller", controller,
                       "Reference controller name or plugin .so path");
  simulate->add_option("--config", config_path,
                       "Controller configuration JSON");
  simulate->add_option("--out", sim_out, "Output directory");

  auto* grade = app.add_subcommand(
      "grade", "Run a controller over a suite, grade and render reports");
  std::string suite_path, rubric_path;
  std::string grade_out = "report";
  int parallelism = 1;
  double watchdog_secs = 120.0;
  bool legacy_equilibrium = false;
  grade->add_option("--suite", suite_path, "Suite JSON file")->required();
  grade->add_option("--controller", controller,
                    "Reference controller name or plugin .so path");
  grade->add_option("--config", config_path, "Controller configuration JSON");
  grade->add_option("--rubric", rubric_path, "Rubric JSON file");
  grade->add_option("--out", grade_out, "Report output directory");
  grade->add_option("--parallelism", parallelism, "Concurrent testcases");
  grade->add_option("--watchdog-secs", watchdog_secs,
                    "Per-testcase watchdog budget in seconds");
  grade->add_flag("--legacy-equilibrium", legacy_equilibrium,
                  "Accept any single conforming instant (pre-2021 wording)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (generate->parsed())
      return cmd_generate(seed, count, family, out_path);
    if (simulate->parsed())
      return cmd_simulate(testcase_path, controller, config_path, sim_out);
    return cmd_grade(suite_path, controller, config_path, rubric_path,
                     grade_out, parallelism, watchdog_secs,
                     legacy_equilibrium);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  }
}
