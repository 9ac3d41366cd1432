#pragma once

#include <Eigen/Dense>
#include <vector>

namespace cranebench::mpc {

struct DiscreteModel {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::MatrixXd C;
  double ts = 0.0;

  Eigen::Index num_states() const { return A.rows(); }
  Eigen::Index num_inputs() const { return B.cols(); }
};

struct CostSpec {
  Eigen::MatrixXd Q;  // stage state weight, PSD
  Eigen::MatrixXd R;  // stage input weight, PD
  Eigen::MatrixXd P;  // terminal weight, PSD
};

// Per-stage constraint E x_k + F u_k <= c for k = 0..N-1, plus an optional
// terminal block E_terminal x_N <= c_terminal (zero rows when absent).
struct StageConstraint {
  Eigen::MatrixXd E;
  Eigen::MatrixXd F;
  Eigen::VectorXd c;
  Eigen::MatrixXd E_terminal;
  Eigen::VectorXd c_terminal;

  Eigen::Index stage_rows() const { return c.size(); }
  Eigen::Index terminal_rows() const { return c_terminal.size(); }
};

struct BlockingSpec {
  std::vector<int> block_lengths;  // positive, summing to the horizon
};

// Stacked prediction [x_1; ...; x_N] = Phi x_0 + Gamma [u_0; ...; u_{N-1}]
// + offset. The offset is zero for time-invariant predictions and carries
// the linearization residue for time-varying ones.
struct Prediction {
  Eigen::MatrixXd Phi;
  Eigen::MatrixXd Gamma;
  Eigen::VectorXd offset;
  int horizon = 0;
  Eigen::Index nx = 0;
  Eigen::Index nu = 0;
};

// Condensed cost J(u; x0) = 0.5 u'Hu + x0'G'u + 0.5 x0' const_quad x0,
// excluding the constant stage-0 state cost.
struct CondensedCost {
  Eigen::MatrixXd H;
  Eigen::MatrixXd G;  // (N nu) x n, linear coupling to x0
  Eigen::MatrixXd const_quad;
};

// Condensed constraints Gc u <= wc + Lc x0.
struct CondensedConstraints {
  Eigen::MatrixXd Gc;
  Eigen::VectorXd wc;
  Eigen::MatrixXd Lc;
};

// Constraint pieces over the extended decision vector [u; s] with slacks
// s >= 0 relaxing the original rows, plus the slack cost terms
// rho1 1's + 0.5 rho2 s's.
struct SoftenedConstraints {
  Eigen::MatrixXd Gc;  // rows over [u; s]: original rows then s >= 0 rows
  Eigen::VectorXd wc;
  Eigen::MatrixXd Lc;
  Eigen::Index n_slack = 0;
  double rho1 = 0.0;
  double rho2 = 0.0;
};

// Exact zero-order-hold discretization through the augmented-matrix
// exponential, evaluated by scaling and squaring to 1e-12.
DiscreteModel discretize_zoh(const Eigen::MatrixXd& Ac,
                             const Eigen::MatrixXd& Bc, double ts);

Prediction build_prediction(const DiscreteModel& model, int horizon);

// Time-varying variant for linearizations along a guess trajectory:
// x_{k+1} = A_k x_k + B_k u_k + d_k.
Prediction build_prediction_tv(const std::vector<Eigen::MatrixXd>& A_seq,
                               const std::vector<Eigen::MatrixXd>& B_seq,
                               const std::vector<Eigen::VectorXd>& d_seq);

CondensedCost build_cost(const Prediction& prediction, const CostSpec& cost);

// Stacked weights Qbar = blkdiag(Q, ..., Q, P) over x_1..x_N and
// Rbar = blkdiag(R, ..., R); building blocks for tracking objectives.
struct StackedWeights {
  Eigen::MatrixXd Qbar;
  Eigen::MatrixXd Rbar;
};
StackedWeights stack_weights(const CostSpec& cost, int horizon);

// First-input receding-horizon gain K with u_0 = -K x_0.
Eigen::MatrixXd unconstrained_rhc_gain(const DiscreteModel& model,
                                       const CostSpec& cost, int horizon);

CondensedConstraints build_trajectory_constraints(
    const StageConstraint& constraint, const Prediction& prediction);

SoftenedConstraints soften_constraints(const CondensedConstraints& hard,
                                       double rho1, double rho2);

// N nu x (#blocks) nu selector holding inputs constant within each block.
Eigen::MatrixXd build_blocking(const BlockingSpec& spec, int nu);

// Augments the state with constant input/output disturbance states
// (d+ = d); throws when the augmented pair fails the rank condition
// rank([A - I, Bd; C, Cd]) = n + nd.
DiscreteModel offset_free_augment(const DiscreteModel& model,
                                  const Eigen::MatrixXd& Bd,
                                  const Eigen::MatrixXd& Cd);

StageConstraint tighten_constraints(const StageConstraint& constraint,
                                    const Eigen::VectorXd& margins);

// Terminal weight from iterating the discrete Riccati difference equation to
// a fixed point (tolerance 1e-10).
Eigen::MatrixXd riccati_terminal_weight(const DiscreteModel& model,
                                        const Eigen::MatrixXd& Q,
                                        const Eigen::MatrixXd& R);

struct KalmanState {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

// One predict-then-update step of the discrete Kalman filter; the posterior
// covariance is re-symmetrized. Throws when the innovation covariance is
// numerically singular.
KalmanState kalman_step(const DiscreteModel& model, const Eigen::MatrixXd& Qw,
                        const Eigen::MatrixXd& Rv, const KalmanState& prior,
                        const Eigen::VectorXd& u_prev,
                        const Eigen::VectorXd& y);

}  // namespace cranebench::mpc
