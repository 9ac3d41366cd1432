#pragma once

#include <Eigen/Dense>
#include <vector>

namespace cranebench::numerics {

// min 0.5 x'Hx + f'x  s.t.  A_ineq x <= b_ineq,  A_eq x = b_eq.
// H is symmetrized by the solver; zero-row constraint blocks are allowed.
struct QpProblem {
  Eigen::MatrixXd H;
  Eigen::VectorXd f;
  Eigen::MatrixXd A_ineq;
  Eigen::VectorXd b_ineq;
  Eigen::MatrixXd A_eq;
  Eigen::VectorXd b_eq;

  Eigen::Index num_vars() const { return f.size(); }
  Eigen::Index num_ineq() const { return b_ineq.size(); }
  Eigen::Index num_eq() const { return b_eq.size(); }
};

enum class QpStatus { kOptimal, kInfeasible, kMaxIterations };

struct QpSolution {
  Eigen::VectorXd x;
  std::vector<int> active_set;      // inequality rows active at the solution
  Eigen::VectorXd ineq_multipliers; // one per inequality row, 0 when inactive
  Eigen::VectorXd eq_multipliers;
  QpStatus status = QpStatus::kMaxIterations;
  double objective = 0.0;
  bool regularized = false;  // ridge added to a semidefinite H
  int iterations = 0;
};

struct QpOptions {
  // Active-set warm start carried over from a previous solve; invalid row
  // indices are ignored.
  std::vector<int> warm_start;
  // Starting-point hint (e.g. the previous solution shifted one step). When
  // feasible it skips phase 1 entirely; otherwise phase 1 recentres from it.
  Eigen::VectorXd initial_point;
  // Iteration cap; <= 0 means the default 50 * (n + m).
  int max_iterations = 0;
  double feasibility_tol = 1e-8;
};

// Dense primal active-set solve. Exchange rules are deterministic:
// most-violated constraint enters, most-negative multiplier leaves, lowest
// row index on ties.
QpSolution solve_qp(const QpProblem& problem, const QpOptions& options = {});

}  // namespace cranebench::numerics
