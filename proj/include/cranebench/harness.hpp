#pragma once

#include <Eigen/Dense>
#include <any>
#include <functional>
#include <string>
#include <vector>

#include "cranebench/crane.hpp"
#include "cranebench/testcase.hpp"

namespace cranebench::harness {

// Opaque controller-owned state threaded through the hook calls.
using ControllerState = std::any;

// The four controller callbacks. Wrong shapes, non-finite values and thrown
// exceptions are tolerated and graded, never fatal; see ErrorEvent.
struct ControllerHooks {
  std::function<ControllerState(const testcases::PublicTestcase&)> setup;
  // (t, measurement[4]) -> reference state [8]
  std::function<Eigen::VectorXd(double, const Eigen::VectorXd&,
                                ControllerState&)>
      target_generator;
  // (t, measurement[4], reference[8]) -> state estimate [8]
  std::function<Eigen::VectorXd(double, const Eigen::VectorXd&,
                                const Eigen::VectorXd&, ControllerState&)>
      state_estimator;
  // (t, estimate[8], reference[8]) -> input [2]
  std::function<Eigen::VectorXd(double, const Eigen::VectorXd&,
                                const Eigen::VectorXd&, ControllerState&)>
      mp_controller;
};

// 1: exception thrown inside a hook; 2: hook output failed validation
// (shape or finiteness); 3: plant integration produced a non-finite state;
// 4: per-testcase watchdog expired.
struct ErrorEvent {
  int level = 0;
  int sample = 0;
  std::string description;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<crane::CraneState> true_states;
  Eigen::MatrixXd measurements;  // one row per sample, 4 columns
  Eigen::MatrixXd estimates;     // 8 columns
  Eigen::MatrixXd references;    // 8 columns
  Eigen::MatrixXd inputs;        // 2 columns, applied unclamped
  std::vector<double> solver_time_per_sample;  // mp_controller wall time, s
  std::vector<ErrorEvent> error_events;
  bool truncated = false;  // level-3 early termination

  int num_samples() const { return static_cast<int>(times.size()); }
  bool full_length(const testcases::Testcase& tc) const {
    return !truncated && num_samples() == tc.num_samples() + 1;
  }
};

using PlantModel = std::function<crane::CraneState::Vector8(
    const crane::CraneState&, const crane::ControlInput&,
    const crane::CraneParams&)>;

struct SimulateOptions {
  int plant_substeps = 10;  // RK4 substeps per sample interval
  // Replaces the nonlinear crane dynamics, e.g. with a linearized model for
  // closed-loop validation runs. Empty means the true plant.
  PlantModel plant_override;
  // Added to the controller's input before it reaches the plant; recorded
  // inputs stay untouched. Used for disturbance-rejection experiments.
  Eigen::Vector2d input_disturbance = Eigen::Vector2d::Zero();
};

// Closed-loop run of one testcase. The plant uses the perturbed parameters;
// hooks are called at every sample 0..N in the order target generator,
// state estimator, controller, and the sample-k input is held over
// [t_k, t_{k+1}). Controller misbehavior never throws out of this function:
// level-1/2 faults zero that sample's input and continue, a level-3 fault
// truncates the run.
Trajectory simulate(const testcases::Testcase& tc, const ControllerHooks& hooks,
                    const SimulateOptions& options = {});

// Fresh hooks (and so fresh controller-state) per testcase; the factory only
// ever sees the public view.
using HooksFactory =
    std::function<ControllerHooks(const testcases::PublicTestcase&)>;

struct RunOptions {
  int parallelism = 1;
  double watchdog_budget_s = 120.0;  // per testcase
  SimulateOptions sim;
};

// One trajectory per testcase in input order, regardless of parallelism.
// A testcase that exceeds the watchdog budget yields an empty trajectory
// with a level-4 event; its worker thread is abandoned (reclaimed at
// process exit), so the rest of the suite is unaffected.
std::vector<Trajectory> run_suite(const std::vector<testcases::Testcase>& suite,
                                  const HooksFactory& hooks_factory,
                                  const RunOptions& options = {});

// Measurement map shared with controllers: y = (x, y, theta, psi).
Eigen::Vector4d measure(const crane::CraneState& state);

// CSV export, one row per sample; the column order is documented in the
// header line.
void write_trajectory_csv(const Trajectory& traj, const std::string& path);

}  // namespace cranebench::harness
