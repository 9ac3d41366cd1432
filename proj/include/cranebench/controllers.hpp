#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "cranebench/harness.hpp"
#include "cranebench/mpc.hpp"
#include "cranebench/planner.hpp"

namespace cranebench::controllers {

enum class Formulation {
  kLqrUnconstrained,
  kLinearHard,
  kLinearSoft,
  kOffsetFree,
  kMoveBlocked,
  kNmpcRti,
};

std::string formulation_name(Formulation f);
Formulation formulation_from_name(const std::string& name);

struct ControllerConfig {
  Formulation formulation = Formulation::kLinearHard;
  int horizon = 30;
  // Diagonal stage weights over (x, xdot, y, ydot, theta, thetadot, psi,
  // psidot); the terminal weight is the Riccati solution.
  Eigen::Matrix<double, 8, 1> q_diag =
      (Eigen::Matrix<double, 8, 1>() << 60, 4, 60, 4, 20, 1.5, 20, 1.5)
          .finished();
  double r_weight = 0.08;
  double input_margin = 0.02;    // inputs kept within |u| <= 1 - margin
  double region_margin = 0.04;   // cart/payload kept this far inside
  double obstacle_margin = 0.05; // extra distance from ellipse obstacles
  double rho1 = 1e5;             // soft-constraint linear slack weight
  double rho2 = 1.0;             // soft-constraint quadratic slack weight
  std::vector<int> block_lengths;  // move blocking; empty means none
  bool use_kalman = true;          // else finite-difference velocities
  bool use_planner = true;         // else straight-line reference
  PlannerOptions planner;
  // The reference reaches the target at this fraction of T_f and holds so
  // the crane can settle by the fixed final time.
  double arrival_fraction = 0.72;
};

// Builds the four hooks for one testcase. Incompatible (formulation, shape)
// pairs are rejected here with an explanation: the linear formulations need
// the planner corridor to take on elliptical obstacles.
harness::ControllerHooks make_controller(const ControllerConfig& config,
                                         const testcases::PublicTestcase& view);

std::vector<std::string> corpus_names();
ControllerConfig corpus_config(const std::string& name);
ControllerConfig config_from_json(const nlohmann::json& j,
                                  ControllerConfig base = {});

// ---------------------------------------------------------------------------
// Real-time iteration: one linearized QP per sample along a warm-started
// guess trajectory.
// ---------------------------------------------------------------------------

struct RtiModel {
  // Discrete one-sample map and its Jacobians at a linearization point.
  std::function<Eigen::VectorXd(const Eigen::VectorXd& x,
                                const Eigen::VectorXd& u)>
      step;
  std::function<void(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                     Eigen::MatrixXd& A, Eigen::MatrixXd& B)>
      jacobians;
  Eigen::Index nx = 8;
  Eigen::Index nu = 2;
};

// A planar point tracked through the region constraints: its position and
// position Jacobian at a state.
struct TrackedPoint {
  std::function<void(const Eigen::VectorXd& x, Eigen::Vector2d& p,
                     Eigen::Matrix<double, 2, Eigen::Dynamic>& jacobian)>
      eval;
};

struct RtiConstraintSpec {
  const regions::Region* region = nullptr;  // null: no region constraints
  double region_margin = 0.0;
  double obstacle_margin = 0.0;
  double input_bound = 1.0;
  std::vector<TrackedPoint> tracked_points;
  // Fixed-final-time device: an equilibrium box on one prediction stage
  // (soft rows, so transients cannot make the QP fatally infeasible).
  int arrival_stage = -1;  // 1..N, -1 disables
  Eigen::Vector2d arrival_target = Eigen::Vector2d::Zero();
  double arrival_pos_tol = 0.0;
  double arrival_rate_tol = 0.0;
  std::vector<int> rate_indices;  // state entries boxed by the rate tol
};

struct RtiGuess {
  Eigen::MatrixXd inputs;  // N x nu linearization trajectory
  std::vector<int> warm_active_set;

  static RtiGuess zero(int horizon, Eigen::Index nu) {
    RtiGuess g;
    g.inputs = Eigen::MatrixXd::Zero(horizon, nu);
    return g;
  }
  // Receding-horizon shift: drop the first input, repeat the last.
  void shift();
};

struct RtiResult {
  Eigen::VectorXd input;
  bool used_soft_fallback = false;
  bool failed = false;  // even the softened QP failed; input is zero
};

// Dynamics are linearized along the rollout of guess.inputs from estimate;
// ellipse constraints are linearized at the guess positions; exactly one QP
// is solved (a slack-softened retry on infeasibility). The guess is updated
// to the solved input sequence.
RtiResult rti_step(const RtiModel& model, const Eigen::VectorXd& estimate,
                   const Eigen::MatrixXd& reference_preview,  // N x nx
                   const mpc::CostSpec& cost,
                   const RtiConstraintSpec& constraints, RtiGuess& guess);

}  // namespace cranebench::controllers
