#include "cranebench/controllers.hpp"

#include <cmath>
#include <stdexcept>

#include "cranebench/ode.hpp"
#include "cranebench/qp.hpp"

namespace cranebench::controllers {

using crane::kPsi;
using crane::kPsiDot;
using crane::kTheta;
using crane::kThetaDot;
using crane::kX;
using crane::kXdot;
using crane::kY;
using crane::kYdot;
using regions::Region;

std::string formulation_name(Formulation f) {
  switch (f) {
    case Formulation::kLqrUnconstrained:
      return "lqr_unconstrained";
    case Formulation::kLinearHard:
      return "linear_hard";
    case Formulation::kLinearSoft:
      return "linear_soft";
    case Formulation::kOffsetFree:
      return "offset_free";
    case Formulation::kMoveBlocked:
      return "move_blocked";
    case Formulation::kNmpcRti:
      return "nmpc_rti";
  }
  throw std::invalid_argument("unknown formulation");
}

Formulation formulation_from_name(const std::string& name) {
  for (Formulation f :
       {Formulation::kLqrUnconstrained, Formulation::kLinearHard,
        Formulation::kLinearSoft, Formulation::kOffsetFree,
        Formulation::kMoveBlocked, Formulation::kNmpcRti})
    if (formulation_name(f) == name) return f;
  throw std::invalid_argument("unknown formulation: " + name);
}

void RtiGuess::shift() {
  const Eigen::Index n = inputs.rows();
  if (n < 2) return;
  inputs.topRows(n - 1) = inputs.bottomRows(n - 1).eval();
}

namespace {

// ---------------------------------------------------------------------------
// Reference path with a quintic progress profile reaching the target at
// arrive_time and holding.
// ---------------------------------------------------------------------------

struct PathProfile {
  PathSampler sampler{{Eigen::Vector2d::Zero()}};
  double arrive_time = 1.0;

  Eigen::VectorXd state_at(double t) const {
    const double tau = std::clamp(t / arrive_time, 0.0, 1.0);
    // Quintic profile: zero velocity and acceleration at both ends, which
    // keeps the swing excitation down.
    const double s = tau * tau * tau * (10.0 + tau * (-15.0 + 6.0 * tau));
    const double ds_dt =
        (t >= 0.0 && t <= arrive_time)
            ? 30.0 * tau * tau * (1.0 - tau) * (1.0 - tau) / arrive_time
            : 0.0;
    const Eigen::Vector2d p = sampler.position(s);
    const Eigen::Vector2d v =
        sampler.tangent(s) * sampler.total_length() * ds_dt;
    Eigen::VectorXd r = Eigen::VectorXd::Zero(8);
    r[kX] = p.x();
    r[kXdot] = v.x();
    r[kY] = p.y();
    r[kYdot] = v.y();
    return r;
  }
};

// Region halfspaces applicable at a position, tightened by margin. For the
// wedge this is the member rectangle with the larger interior margin (the
// multiple-constraint-sets strategy).
std::vector<regions::Halfspace> region_rows_at(const Region& region,
                                               const Eigen::Vector2d& p,
                                               double margin) {
  const regions::Rect* rect = nullptr;
  if (const auto* sr = std::get_if<regions::SingleRect>(&region)) {
    rect = &sr->rect;
  } else if (const auto* w = std::get_if<regions::WedgeUnion>(&region)) {
    rect = regions::rect_margin(w->first, p) >= regions::rect_margin(w->second, p)
               ? &w->first
               : &w->second;
  } else {
    rect = &std::get<regions::RectMinusObstacles>(region).rect;
  }
  std::vector<regions::Halfspace> rows;
  for (const auto& row : regions::rect_halfspaces(*rect))
    rows.push_back({row.a, row.b - margin});
  return rows;
}

const std::vector<regions::Ellipse>* region_obstacles(const Region& region) {
  if (const auto* rm = std::get_if<regions::RectMinusObstacles>(&region))
    return &rm->obstacles;
  return nullptr;
}

// Residual floor implementing a distance margin, scaled by the smaller
// semi-axis: g >= (1 + m/b)^2 - 1 keeps the point at least ~m away.
double obstacle_residual_floor(const regions::Ellipse& e, double margin) {
  const double ratio = 1.0 + margin / e.semi_axes.minCoeff();
  return ratio * ratio - 1.0;
}

// One linearized row -grad' p <= c for the convex residual g(p) >= floor;
// by convexity the linearization is a sufficient (inner) approximation.
struct ObstacleRow {
  Eigen::Vector2d coeff;  // row acts as coeff' p <= rhs
  double rhs;
};

ObstacleRow linearized_obstacle_row(const regions::Ellipse& e,
                                    const Eigen::Vector2d& at, double margin) {
  const double g = regions::ellipse_residual(e, at);
  const Eigen::Vector2d grad = regions::ellipse_residual_gradient(e, at);
  ObstacleRow row;
  row.coeff = -grad;
  row.rhs = g - grad.dot(at) - obstacle_residual_floor(e, margin);
  return row;
}

// ---------------------------------------------------------------------------
// Controller state shared by the four hooks.
// ---------------------------------------------------------------------------

struct ControllerData {
  ControllerConfig config;
  testcases::PublicTestcase view;

  mpc::DiscreteModel model;  // nominal 8-state plant model
  mpc::CostSpec cost;
  Eigen::Matrix<double, 2, 8> lqr_gain;

  // Linear-MPC machinery (unused by lqr/rti formulations).
  mpc::Prediction pred;
  mpc::StackedWeights weights;
  Eigen::MatrixXd hessian;   // over the (possibly blocked) decision vector
  Eigen::MatrixXd blocking;  // empty when no move blocking

  PathProfile path;

  // Estimation.
  bool kalman_ready = false;
  mpc::KalmanState kf;
  mpc::DiscreteModel est_model;  // 8-state, or 10-state when offset-free
  Eigen::MatrixXd Qw, Rv;
  Eigen::Vector2d u_prev = Eigen::Vector2d::Zero();
  Eigen::Vector4d y_prev = Eigen::Vector4d::Zero();
  bool have_y_prev = false;
  Eigen::Vector2d dhat = Eigen::Vector2d::Zero();

  std::vector<int> warm_active_set;
  std::vector<int> warm_soft_active_set;
  Eigen::VectorXd prev_decision;
  RtiGuess rti_guess;
  RtiModel rti_model;

  Eigen::Matrix<double, 2, 8> J_cart = Eigen::Matrix<double, 2, 8>::Zero();
  Eigen::Matrix<double, 2, 8> J_payload = Eigen::Matrix<double, 2, 8>::Zero();
};

bool is_linear_mpc(Formulation f) {
  return f == Formulation::kLinearHard || f == Formulation::kLinearSoft ||
         f == Formulation::kOffsetFree || f == Formulation::kMoveBlocked;
}

// Assembles and solves min 0.5 z'Hz + f'z with hard rows plus optionally
// softened rows over an extended decision [z; s].
struct SolveOutcome {
  Eigen::VectorXd decision;
  bool ok = false;
  bool used_soft = false;
  std::vector<int> active_set;
  std::vector<int> soft_active_set;
};

SolveOutcome solve_with_soft_fallback(
    const Eigen::MatrixXd& H, const Eigen::VectorXd& f,
    const Eigen::MatrixXd& A_hard, const Eigen::VectorXd& b_hard,
    const Eigen::MatrixXd& A_softenable, const Eigen::VectorXd& b_softenable,
    double rho1, double rho2, bool soften_immediately,
    const std::vector<int>& warm, const Eigen::VectorXd& hint,
    const std::vector<int>& warm_soft = {}) {
  namespace num = cranebench::numerics;
  const Eigen::Index n = f.size();

  if (!soften_immediately) {
    num::QpProblem qp;
    qp.H = H;
    qp.f = f;
    qp.A_ineq.resize(A_hard.rows() + A_softenable.rows(), n);
    qp.A_ineq << A_hard, A_softenable;
    qp.b_ineq.resize(b_hard.size() + b_softenable.size());
    qp.b_ineq << b_hard, b_softenable;
    qp.A_eq.resize(0, n);
    qp.b_eq.resize(0);
    num::QpOptions options;
    options.warm_start = warm;
    if (hint.size() == n) options.initial_point = hint;
    const auto sol = num::solve_qp(qp, options);
    if (sol.status == num::QpStatus::kOptimal) {
      SolveOutcome out;
      out.decision = sol.x;
      out.ok = true;
      out.active_set = sol.active_set;
      return out;
    }
  }

  // Softened retry: slacks on the softenable rows only.
  const Eigen::Index m_soft = A_softenable.rows();
  num::QpProblem qp;
  qp.H = Eigen::MatrixXd::Zero(n + m_soft, n + m_soft);
  qp.H.topLeftCorner(n, n) = H;
  qp.H.bottomRightCorner(m_soft, m_soft) =
      std::max(rho2, 1e-6) * Eigen::MatrixXd::Identity(m_soft, m_soft);
  qp.f = Eigen::VectorXd::Zero(n + m_soft);
  qp.f.head(n) = f;
  qp.f.tail(m_soft).setConstant(rho1);
  qp.A_ineq = Eigen::MatrixXd::Zero(A_hard.rows() + 2 * m_soft, n + m_soft);
  qp.A_ineq.topLeftCorner(A_hard.rows(), n) = A_hard;
  qp.A_ineq.block(A_hard.rows(), 0, m_soft, n) = A_softenable;
  qp.A_ineq.block(A_hard.rows(), n, m_soft, m_soft) =
      -Eigen::MatrixXd::Identity(m_soft, m_soft);
  qp.A_ineq.bottomRightCorner(m_soft, m_soft) =
      -Eigen::MatrixXd::Identity(m_soft, m_soft);
  qp.b_ineq.resize(b_hard.size() + 2 * m_soft);
  qp.b_ineq << b_hard, b_softenable, Eigen::VectorXd::Zero(m_soft);
  qp.A_eq.resize(0, n + m_soft);
  qp.b_eq.resize(0);
  // The softened problem always has a feasible start: take the hint (or
  // zero inputs) and open exactly the slack each row needs.
  num::QpOptions soft_options;
  soft_options.warm_start = warm_soft;
  Eigen::VectorXd z0 = Eigen::VectorXd::Zero(n + m_soft);
  if (hint.size() == n) z0.head(n) = hint;
  z0.tail(m_soft) = (A_softenable * z0.head(n) - b_softenable)
                        .cwiseMax(Eigen::VectorXd::Zero(m_soft));
  soft_options.initial_point = z0;
  const auto sol = num::solve_qp(qp, soft_options);
  SolveOutcome out;
  out.used_soft = true;
  if (sol.status == num::QpStatus::kOptimal) {
    out.decision = sol.x.head(n);
    out.ok = true;
    out.soft_active_set = sol.active_set;
  }
  return out;
}

// Stage rows over (predicted state, input) for the linear formulations,
// stage-invariant within one sample. State rows are mapped one step through
// the model so they bind x_1..x_N instead of the fixed x_0.
mpc::StageConstraint linear_stage_rows(const ControllerData& d,
                                       const Eigen::VectorXd& xhat) {
  std::vector<Eigen::Matrix<double, 1, 8>> state_rows;
  std::vector<double> state_bounds;
  for (const Eigen::Matrix<double, 2, 8>* map : {&d.J_cart, &d.J_payload}) {
    const Eigen::Vector2d p = *map * xhat;
    for (const auto& row :
         region_rows_at(d.view.region, p, d.config.region_margin)) {
      state_rows.push_back(row.a.transpose() * *map);
      state_bounds.push_back(row.b);
    }
    if (const auto* obstacles = region_obstacles(d.view.region)) {
      for (const auto& e : *obstacles) {
        // Only rows for obstacles in the neighbourhood matter.
        if (regions::ellipse_residual(e, p) >
            obstacle_residual_floor(e, 0.45))
          continue;
        const auto row =
            linearized_obstacle_row(e, p, d.config.obstacle_margin);
        state_rows.push_back(row.coeff.transpose() * *map);
        state_bounds.push_back(row.rhs);
      }
    }
  }

  const Eigen::Index n_state = static_cast<Eigen::Index>(state_rows.size());
  mpc::StageConstraint rows;
  rows.E.resize(n_state + 4, 8);
  rows.F.resize(n_state + 4, 2);
  rows.c.resize(n_state + 4);
  for (Eigen::Index i = 0; i < n_state; ++i) {
    // E x_{k+1} <= c written as (E A) x_k + (E B) u_k <= c.
    rows.E.row(i) = state_rows[i] * d.model.A;
    rows.F.row(i) = state_rows[i] * d.model.B;
    rows.c[i] = state_bounds[i];
  }
  const double bound = 1.0 - d.config.input_margin;
  rows.E.bottomRows(4).setZero();
  rows.F.bottomRows(4) << 1, 0, -1, 0, 0, 1, 0, -1;
  rows.c.tail(4).setConstant(bound);
  return rows;
}

Eigen::VectorXd stack_preview(const ControllerData& d, double t) {
  const int N = d.config.horizon;
  Eigen::VectorXd stacked(8 * N);
  for (int j = 1; j <= N; ++j)
    stacked.segment(8 * (j - 1), 8) = d.path.state_at(t + j * d.model.ts);
  return stacked;
}

// Tight rows pinning the prediction stage that lands exactly at T_f to an
// equilibrium box around the target: the fixed-final-time device.
struct ArrivalRows {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
};

ArrivalRows arrival_stage_rows(const ControllerData& d,
                               const mpc::Prediction& pred, double t,
                               const Eigen::VectorXd& xhat) {
  ArrivalRows rows;
  const int N = d.config.horizon;
  const double ts = d.model.ts;
  const int stage = static_cast<int>(std::lround((d.view.T_f - t) / ts));
  if (stage < 1 || stage > N) {
    rows.A.resize(0, pred.Gamma.cols());
    rows.b.resize(0);
    return rows;
  }
  const double pos_tol = 0.5 * d.view.eps_t;
  const double rate_tol = 0.5 * d.view.eps_r;
  const auto phi_block = pred.Phi.middleRows((stage - 1) * 8, 8);
  const auto gamma_block = pred.Gamma.middleRows((stage - 1) * 8, 8);
  const Eigen::VectorXd base =
      phi_block * xhat + pred.offset.segment((stage - 1) * 8, 8);

  std::vector<Eigen::RowVectorXd> list_a;
  std::vector<double> list_b;
  const auto box = [&](const Eigen::RowVectorXd& coeff, double center,
                       double tol) {
    list_a.push_back(coeff * gamma_block);
    list_b.push_back(center + tol - coeff.dot(base));
    list_a.push_back(-coeff * gamma_block);
    list_b.push_back(-(center - tol) + coeff.dot(base));
  };
  for (int axis = 0; axis < 2; ++axis) {
    box(d.J_cart.row(axis), d.view.target[axis], pos_tol);
    box(d.J_payload.row(axis), d.view.target[axis], pos_tol);
  }
  for (int idx : {kXdot, kYdot, kThetaDot, kPsiDot})
    box(Eigen::RowVectorXd::Unit(8, idx), 0.0, rate_tol);

  rows.A.resize(static_cast<Eigen::Index>(list_a.size()), pred.Gamma.cols());
  rows.b.resize(static_cast<Eigen::Index>(list_b.size()));
  for (size_t i = 0; i < list_a.size(); ++i) {
    rows.A.row(static_cast<Eigen::Index>(i)) = list_a[i];
    rows.b[static_cast<Eigen::Index>(i)] = list_b[i];
  }
  return rows;
}

Eigen::VectorXd linear_mpc_input(ControllerData& d, double t,
                                 const Eigen::VectorXd& xhat) {
  const int N = d.config.horizon;
  const Eigen::VectorXd r_stack = stack_preview(d, t);

  // Offset-free prediction: the estimated input disturbance acts at every
  // stage, which is exactly an affine prediction offset Gamma (1 (x) dhat).
  const mpc::Prediction* pred = &d.pred;
  mpc::Prediction pred_disturbed;
  if (d.config.formulation == Formulation::kOffsetFree &&
      d.dhat.cwiseAbs().maxCoeff() > 0.0) {
    pred_disturbed = d.pred;
    Eigen::VectorXd dstack(2 * N);
    for (int j = 0; j < N; ++j) dstack.segment(2 * j, 2) = d.dhat;
    pred_disturbed.offset = d.pred.Gamma * dstack;
    pred = &pred_disturbed;
  }

  // Tracking cost linear term: f = Gamma' Qbar (Phi x + offset - R) - Rbar Us.
  Eigen::VectorXd w = pred->Phi * xhat + pred->offset - r_stack;
  Eigen::VectorXd f = pred->Gamma.transpose() * (d.weights.Qbar * w);
  if (d.config.formulation == Formulation::kOffsetFree) {
    // Input-disturbance compensation: steady input is -dhat.
    Eigen::VectorXd us_stack(2 * N);
    for (int j = 0; j < N; ++j) us_stack.segment(2 * j, 2) = -d.dhat;
    f -= d.weights.Rbar * us_stack;
  }

  const mpc::StageConstraint rows = linear_stage_rows(d, xhat);
  const auto condensed = mpc::build_trajectory_constraints(rows, *pred);

  // Region/obstacle rows are softenable; input rows stay hard.
  const ArrivalRows arrival = arrival_stage_rows(d, *pred, t, xhat);
  const Eigen::Index n_state_rows = rows.stage_rows() - 4;
  Eigen::MatrixXd A_soft(n_state_rows * N + arrival.A.rows(),
                         pred->Gamma.cols());
  Eigen::VectorXd b_soft(n_state_rows * N + arrival.b.size());
  Eigen::MatrixXd A_hard(4 * N, pred->Gamma.cols());
  Eigen::VectorXd b_hard(4 * N);
  const Eigen::VectorXd b_all = condensed.wc + condensed.Lc * xhat;
  for (int k = 0; k < N; ++k) {
    const Eigen::Index row0 = k * rows.stage_rows();
    A_soft.middleRows(k * n_state_rows, n_state_rows) =
        condensed.Gc.middleRows(row0, n_state_rows);
    b_soft.segment(k * n_state_rows, n_state_rows) =
        b_all.segment(row0, n_state_rows);
    A_hard.middleRows(4 * k, 4) =
        condensed.Gc.middleRows(row0 + n_state_rows, 4);
    b_hard.segment(4 * k, 4) = b_all.segment(row0 + n_state_rows, 4);
  }
  A_soft.bottomRows(arrival.A.rows()) = arrival.A;
  b_soft.tail(arrival.b.size()) = arrival.b;

  // Input taper: plan stages at or past T_f stay within the equilibrium
  // input tolerance (centered on the disturbance-compensating input when
  // offset-free estimation is active).
  const int first_settled_stage =
      static_cast<int>(std::lround((d.view.T_f - t) / d.model.ts));
  std::vector<Eigen::Index> taper_entries;
  if (first_settled_stage <= N - 1) {
    for (int j = std::max(0, first_settled_stage); j < N; ++j) {
      taper_entries.push_back(2 * j);
      taper_entries.push_back(2 * j + 1);
    }
  }
  if (!taper_entries.empty()) {
    const double tol = 0.5 * d.view.eps_r;
    const Eigen::Vector2d center =
        d.config.formulation == Formulation::kOffsetFree
            ? Eigen::Vector2d(-d.dhat)
            : Eigen::Vector2d::Zero();
    const Eigen::Index old_rows = A_hard.rows();
    A_hard.conservativeResize(
        old_rows + 2 * static_cast<Eigen::Index>(taper_entries.size()),
        Eigen::NoChange);
    b_hard.conservativeResize(A_hard.rows());
    Eigen::Index row = old_rows;
    for (Eigen::Index entry : taper_entries) {
      const double c = center[entry % 2];
      A_hard.row(row).setZero();
      A_hard(row, entry) = 1.0;
      b_hard[row++] = c + tol;
      A_hard.row(row).setZero();
      A_hard(row, entry) = -1.0;
      b_hard[row++] = -(c - tol);
    }
  }

  Eigen::MatrixXd H = d.hessian;
  Eigen::VectorXd f_solve = f;
  Eigen::MatrixXd A_hard_solve = A_hard;
  Eigen::MatrixXd A_soft_solve = A_soft;
  if (d.blocking.size() > 0) {
    H = d.blocking.transpose() * d.hessian * d.blocking;
    f_solve = d.blocking.transpose() * f;
    A_hard_solve = A_hard * d.blocking;
    A_soft_solve = A_soft * d.blocking;
  }

  // Hint: previous decision shifted one sample (unshifted in block space).
  Eigen::VectorXd hint;
  if (d.prev_decision.size() == H.rows()) {
    hint = d.prev_decision;
    if (d.blocking.size() == 0 && hint.size() >= 4) {
      hint.head(hint.size() - 2) = d.prev_decision.tail(hint.size() - 2);
    }
  }

  const bool always_soft =
      d.config.formulation == Formulation::kLinearSoft;
  const auto outcome = solve_with_soft_fallback(
      H, f_solve, A_hard_solve, b_hard, A_soft_solve, b_soft, d.config.rho1,
      d.config.rho2, always_soft, d.warm_active_set, hint,
      d.warm_soft_active_set);
  if (!outcome.ok) {
    d.warm_active_set.clear();
    d.warm_soft_active_set.clear();
    d.prev_decision.resize(0);
    return Eigen::VectorXd::Zero(2);
  }
  if (outcome.used_soft)
    d.warm_soft_active_set = outcome.soft_active_set;
  else
    d.warm_active_set = outcome.active_set;
  d.prev_decision = outcome.decision;
  Eigen::VectorXd u_sequence = d.blocking.size() > 0
                                   ? Eigen::VectorXd(d.blocking *
                                                     outcome.decision)
                                   : outcome.decision;
  return u_sequence.head(2);
}

// ---------------------------------------------------------------------------
// Hook assembly.
// ---------------------------------------------------------------------------

Eigen::VectorXd estimate_from(ControllerData& d, double t,
                              const Eigen::VectorXd& y) {
  if (!d.config.use_kalman) {
    Eigen::VectorXd xhat = Eigen::VectorXd::Zero(8);
    xhat[kX] = y[0];
    xhat[kY] = y[1];
    xhat[kTheta] = y[2];
    xhat[kPsi] = y[3];
    if (d.have_y_prev) {
      const double ts = d.model.ts;
      xhat[kXdot] = (y[0] - d.y_prev[0]) / ts;
      xhat[kYdot] = (y[1] - d.y_prev[1]) / ts;
      xhat[kThetaDot] = (y[2] - d.y_prev[2]) / ts;
      xhat[kPsiDot] = (y[3] - d.y_prev[3]) / ts;
    }
    d.y_prev = y;
    d.have_y_prev = true;
    return xhat;
  }

  const Eigen::Index n_est = d.est_model.num_states();
  if (!d.kalman_ready) {
    d.kf.mean = Eigen::VectorXd::Zero(n_est);
    d.kf.mean[kX] = y[0];
    d.kf.mean[kY] = y[1];
    d.kf.mean[kTheta] = y[2];
    d.kf.mean[kPsi] = y[3];
    d.kf.cov = 10.0 * Eigen::MatrixXd::Identity(n_est, n_est);
    d.kalman_ready = true;
  } else {
    d.kf = mpc::kalman_step(d.est_model, d.Qw, d.Rv, d.kf, d.u_prev, y);
  }
  if (n_est > 8) d.dhat = d.kf.mean.tail(2);
  (void)t;
  return d.kf.mean.head(8);
}

harness::ControllerHooks assemble_hooks(const ControllerConfig& config) {
  harness::ControllerHooks hooks;

  hooks.setup = [config](const testcases::PublicTestcase& view)
      -> harness::ControllerState {
    ControllerData d;
    d.config = config;
    d.view = view;

    const auto lin = crane::linearize(view.params, crane::CraneState{});
    d.model = mpc::discretize_zoh(lin.A, lin.B, view.ts);
    d.model.C = lin.C;

    d.cost.Q = config.q_diag.asDiagonal();
    d.cost.R = config.r_weight * Eigen::MatrixXd::Identity(2, 2);
    d.cost.P = mpc::riccati_terminal_weight(d.model, d.cost.Q, d.cost.R);
    d.lqr_gain =
        mpc::unconstrained_rhc_gain(d.model, d.cost, config.horizon);

    d.J_cart.setZero();
    d.J_cart(0, kX) = 1.0;
    d.J_cart(1, kY) = 1.0;
    d.J_payload = d.J_cart;
    d.J_payload(0, kTheta) = view.params.cable_length;
    d.J_payload(1, kPsi) = view.params.cable_length;

    // Reference path: planner via-points or the straight segment.
    std::vector<Eigen::Vector2d> via;
    if (config.use_planner) {
      via = plan_path(view.region, view.start, view.target, config.planner);
    } else {
      via = {view.start, view.target};
    }
    d.path = PathProfile{PathSampler(via),
                         config.arrival_fraction * view.T_f};

    if (is_linear_mpc(config.formulation)) {
      d.pred = mpc::build_prediction(d.model, config.horizon);
      d.weights = mpc::stack_weights(d.cost, config.horizon);
      d.hessian = mpc::build_cost(d.pred, d.cost).H;
      if (config.formulation == Formulation::kMoveBlocked &&
          !config.block_lengths.empty()) {
        mpc::BlockingSpec spec{config.block_lengths};
        d.blocking = mpc::build_blocking(spec, 2);
      }
    }

    // Estimator model: offset-free augments with input-disturbance states.
    if (config.formulation == Formulation::kOffsetFree) {
      d.est_model = mpc::offset_free_augment(
          d.model, d.model.B, Eigen::MatrixXd::Zero(4, 2));
      d.Qw = Eigen::MatrixXd::Identity(10, 10) * 1e-5;
      d.Qw.bottomRightCorner(2, 2) = 1e-2 * Eigen::MatrixXd::Identity(2, 2);
      d.Rv = 1e-6 * Eigen::MatrixXd::Identity(4, 4);
    } else {
      d.est_model = d.model;
      d.Qw = 1e-5 * Eigen::MatrixXd::Identity(8, 8);
      d.Rv = 1e-6 * Eigen::MatrixXd::Identity(4, 4);
    }

    if (config.formulation == Formulation::kNmpcRti) {
      d.rti_guess = RtiGuess::zero(config.horizon, 2);
      const auto params = view.params;
      const double ts = view.ts;
      d.rti_model.step = [params, ts](const Eigen::VectorXd& x,
                                      const Eigen::VectorXd& u) {
        const crane::ControlInput input{u[0], u[1]};
        Eigen::VectorXd state = x;
        const int substeps = 5;
        for (int i = 0; i < substeps; ++i)
          state = numerics::rk4_step(
              [&](double, const Eigen::VectorXd& xv) {
                return Eigen::VectorXd(crane::dynamics(
                    crane::CraneState::from_vec(xv), input, params));
              },
              0.0, state, ts / substeps);
        return state;
      };
      d.rti_model.jacobians = [params, ts](const Eigen::VectorXd& x,
                                           const Eigen::VectorXd& u,
                                           Eigen::MatrixXd& A,
                                           Eigen::MatrixXd& B) {
        const auto lin_k = crane::linearize_at(
            params, crane::CraneState::from_vec(x),
            crane::ControlInput{u[0], u[1]});
        const auto disc = mpc::discretize_zoh(lin_k.A, lin_k.B, ts);
        A = disc.A;
        B = disc.B;
      };
    }
    return d;
  };

  hooks.target_generator = [](double t, const Eigen::VectorXd&,
                              harness::ControllerState& cs) {
    ControllerData& d = std::any_cast<ControllerData&>(cs);
    if (d.config.formulation == Formulation::kLqrUnconstrained &&
        !d.config.use_planner) {
      Eigen::VectorXd r = Eigen::VectorXd::Zero(8);
      r[kX] = d.view.target.x();
      r[kY] = d.view.target.y();
      return r;
    }
    return d.path.state_at(t);
  };

  hooks.state_estimator = [](double t, const Eigen::VectorXd& y,
                             const Eigen::VectorXd&,
                             harness::ControllerState& cs) {
    ControllerData& d = std::any_cast<ControllerData&>(cs);
    return estimate_from(d, t, y);
  };

  hooks.mp_controller = [](double t, const Eigen::VectorXd& xhat,
                           const Eigen::VectorXd& reference,
                           harness::ControllerState& cs) {
    ControllerData& d = std::any_cast<ControllerData&>(cs);
    Eigen::VectorXd u;
    switch (d.config.formulation) {
      case Formulation::kLqrUnconstrained:
        u = -d.lqr_gain * (xhat - reference);
        break;
      case Formulation::kNmpcRti: {
        const int N = d.config.horizon;
        Eigen::MatrixXd preview(N, 8);
        for (int j = 1; j <= N; ++j)
          preview.row(j - 1) = d.path.state_at(t + j * d.model.ts).transpose();
        RtiConstraintSpec spec;
        spec.region = &d.view.region;
        spec.region_margin = d.config.region_margin;
        spec.obstacle_margin = d.config.obstacle_margin;
        spec.input_bound = 1.0 - d.config.input_margin;
        TrackedPoint cart;
        cart.eval = [&d](const Eigen::VectorXd& x, Eigen::Vector2d& p,
                         Eigen::Matrix<double, 2, Eigen::Dynamic>& jac) {
          p = {x[kX], x[kY]};
          jac = d.J_cart;
        };
        TrackedPoint payload;
        const double cable = d.view.params.cable_length;
        payload.eval = [cable](const Eigen::VectorXd& x, Eigen::Vector2d& p,
                               Eigen::Matrix<double, 2, Eigen::Dynamic>& jac) {
          p = {x[kX] + cable * std::sin(x[kTheta]),
               x[kY] + cable * std::sin(x[kPsi])};
          jac = Eigen::Matrix<double, 2, 8>::Zero();
          jac(0, kX) = 1.0;
          jac(0, kTheta) = cable * std::cos(x[kTheta]);
          jac(1, kY) = 1.0;
          jac(1, kPsi) = cable * std::cos(x[kPsi]);
        };
        spec.tracked_points = {cart, payload};
        const int stage =
            static_cast<int>(std::lround((d.view.T_f - t) / d.model.ts));
        if (stage <= N) {
          spec.arrival_stage = stage;
          spec.arrival_target = d.view.target;
          spec.arrival_pos_tol = 0.5 * d.view.eps_t;
          spec.arrival_rate_tol = 0.5 * d.view.eps_r;
          spec.rate_indices = {kXdot, kYdot, kThetaDot, kPsiDot};
        }

        d.rti_guess.shift();
        const auto result =
            rti_step(d.rti_model, xhat, preview, d.cost, spec, d.rti_guess);
        u = result.failed ? Eigen::VectorXd::Zero(2) : result.input;
        break;
      }
      default:
        u = linear_mpc_input(d, t, xhat);
    }
    d.u_prev = u.head(2);
    return u;
  };

  return hooks;
}

}  // namespace

harness::ControllerHooks make_controller(const ControllerConfig& config,
                                         const testcases::PublicTestcase& view) {
  if (config.horizon < 1)
    throw std::invalid_argument("controller horizon must be >= 1");
  if (!(config.r_weight > 0))
    throw std::invalid_argument("input weight must be positive");
  if (!config.block_lengths.empty()) {
    int total = 0;
    for (int len : config.block_lengths) total += len;
    if (total != config.horizon)
      throw std::invalid_argument("block lengths must sum to the horizon");
  }
  const auto* with_obstacles =
      std::get_if<regions::RectMinusObstacles>(&view.region);
  const bool has_obstacles = with_obstacles && !with_obstacles->obstacles.empty();
  if (is_linear_mpc(config.formulation) && has_obstacles &&
      !config.use_planner)
    throw std::invalid_argument(
        formulation_name(config.formulation) +
        " cannot take on elliptical obstacles without the planner corridor; "
        "enable the planner or use nmpc_rti");
  return assemble_hooks(config);
}

std::vector<std::string> corpus_names() {
  return {"lqr_unconstrained", "linear_hard", "linear_soft",
          "offset_free",       "move_blocked", "nmpc_rti"};
}

ControllerConfig corpus_config(const std::string& name) {
  ControllerConfig config;
  config.formulation = formulation_from_name(name);
  switch (config.formulation) {
    case Formulation::kLqrUnconstrained:
      config.use_planner = false;  // the naive straight-to-target baseline
      config.use_kalman = true;
      break;
    case Formulation::kMoveBlocked:
      config.block_lengths = {1, 1, 2, 2, 4, 4, 8, 8};
      break;
    default:
      break;
  }
  return config;
}

ControllerConfig config_from_json(const nlohmann::json& j,
                                  ControllerConfig base) {
  ControllerConfig config = std::move(base);
  if (j.contains("formulation"))
    config.formulation =
        formulation_from_name(j.at("formulation").get<std::string>());
  if (j.contains("horizon")) config.horizon = j.at("horizon").get<int>();
  if (j.contains("q_diag")) {
    const auto& q = j.at("q_diag");
    if (q.size() != 8)
      throw std::invalid_argument("q_diag needs 8 entries");
    for (int i = 0; i < 8; ++i) config.q_diag[i] = q.at(i).get<double>();
  }
  if (j.contains("r_weight")) config.r_weight = j.at("r_weight").get<double>();
  if (j.contains("input_margin"))
    config.input_margin = j.at("input_margin").get<double>();
  if (j.contains("region_margin"))
    config.region_margin = j.at("region_margin").get<double>();
  if (j.contains("obstacle_margin"))
    config.obstacle_margin = j.at("obstacle_margin").get<double>();
  if (j.contains("rho1")) config.rho1 = j.at("rho1").get<double>();
  if (j.contains("rho2")) config.rho2 = j.at("rho2").get<double>();
  if (j.contains("block_lengths"))
    config.block_lengths =
        j.at("block_lengths").get<std::vector<int>>();
  if (j.contains("use_kalman"))
    config.use_kalman = j.at("use_kalman").get<bool>();
  if (j.contains("use_planner"))
    config.use_planner = j.at("use_planner").get<bool>();
  if (j.contains("planner")) {
    const auto& p = j.at("planner");
    if (p.contains("cell_size"))
      config.planner.cell_size = p.at("cell_size").get<double>();
    if (p.contains("clearance"))
      config.planner.clearance = p.at("clearance").get<double>();
    if (p.contains("n_via")) config.planner.n_via = p.at("n_via").get<int>();
  }
  if (j.contains("arrival_fraction"))
    config.arrival_fraction = j.at("arrival_fraction").get<double>();
  return config;
}

RtiResult rti_step(const RtiModel& model, const Eigen::VectorXd& estimate,
                   const Eigen::MatrixXd& reference_preview,
                   const mpc::CostSpec& cost,
                   const RtiConstraintSpec& constraints, RtiGuess& guess) {
  const int N = static_cast<int>(guess.inputs.rows());
  const Eigen::Index nx = model.nx;
  const Eigen::Index nu = model.nu;
  if (reference_preview.rows() != N || reference_preview.cols() != nx)
    throw std::invalid_argument("reference preview must be N x nx");
  if (estimate.size() != nx)
    throw std::invalid_argument("estimate dimension mismatch");

  // Roll the guess inputs out from the estimate; linearize along the way.
  std::vector<Eigen::VectorXd> guess_states{estimate};
  std::vector<Eigen::MatrixXd> A_seq(N), B_seq(N);
  std::vector<Eigen::VectorXd> d_seq(N);
  for (int k = 0; k < N; ++k) {
    const Eigen::VectorXd u_k = guess.inputs.row(k).transpose();
    const Eigen::VectorXd next = model.step(guess_states.back(), u_k);
    model.jacobians(guess_states.back(), u_k, A_seq[k], B_seq[k]);
    d_seq[k] = next - A_seq[k] * guess_states.back() - B_seq[k] * u_k;
    guess_states.push_back(next);
  }

  const mpc::Prediction pred = mpc::build_prediction_tv(A_seq, B_seq, d_seq);
  const mpc::StackedWeights weights = mpc::stack_weights(cost, N);
  const Eigen::MatrixXd H = mpc::build_cost(pred, cost).H;

  Eigen::VectorXd r_stack(N * nx);
  for (int k = 0; k < N; ++k)
    r_stack.segment(k * nx, nx) = reference_preview.row(k).transpose();
  const Eigen::VectorXd w = pred.Phi * estimate + pred.offset - r_stack;
  const Eigen::VectorXd f = pred.Gamma.transpose() * (weights.Qbar * w);

  // Constraint rows on the predicted states x_1..x_N, linearized at the
  // guess, plus hard input bounds.
  std::vector<Eigen::RowVectorXd> soft_rows;
  std::vector<double> soft_bounds;
  if (constraints.region != nullptr) {
    const auto* obstacles = region_obstacles(*constraints.region);
    Eigen::Vector2d p;
    Eigen::Matrix<double, 2, Eigen::Dynamic> jac;
    for (int k = 1; k <= N; ++k) {
      const Eigen::VectorXd& xbar = guess_states[static_cast<size_t>(k)];
      const auto phi_block = pred.Phi.middleRows((k - 1) * nx, nx);
      const auto gamma_block = pred.Gamma.middleRows((k - 1) * nx, nx);
      const auto offset_block = pred.offset.segment((k - 1) * nx, nx);
      const auto add_row = [&](const Eigen::RowVectorXd& coeff_x, double rhs) {
        // coeff_x x_k <= rhs condensed onto the input sequence:
        // (coeff Gamma_k) U <= rhs - coeff (Phi_k x0 + offset_k).
        Eigen::RowVectorXd row = coeff_x * gamma_block;
        const double bound =
            rhs - coeff_x.dot(phi_block * estimate + offset_block);
        soft_rows.push_back(row);
        soft_bounds.push_back(bound);
      };
      for (const auto& tracked : constraints.tracked_points) {
        tracked.eval(xbar, p, jac);
        for (const auto& half :
             region_rows_at(*constraints.region, p, constraints.region_margin)) {
          // a'(p(xbar) + J (x - xbar)) <= b
          const Eigen::RowVectorXd coeff = half.a.transpose() * jac;
          add_row(coeff, half.b - half.a.dot(p) + coeff.dot(xbar));
        }
        if (obstacles != nullptr) {
          for (const auto& e : *obstacles) {
            if (regions::ellipse_residual(e, p) >
                obstacle_residual_floor(e, 0.45))
              continue;
            const auto row =
                linearized_obstacle_row(e, p, constraints.obstacle_margin);
            const Eigen::RowVectorXd coeff = row.coeff.transpose() * jac;
            add_row(coeff, row.rhs - row.coeff.dot(p) + coeff.dot(xbar));
          }
        }
      }
    }
  }

  if (constraints.arrival_stage >= 1 && constraints.arrival_stage <= N) {
    const int k = constraints.arrival_stage;
    const auto phi_block = pred.Phi.middleRows((k - 1) * nx, nx);
    const auto gamma_block = pred.Gamma.middleRows((k - 1) * nx, nx);
    const Eigen::VectorXd base =
        phi_block * estimate + pred.offset.segment((k - 1) * nx, nx);
    const auto box = [&](const Eigen::RowVectorXd& coeff_x, double center,
                         double tol) {
      soft_rows.push_back(coeff_x * gamma_block);
      soft_bounds.push_back(center + tol - coeff_x.dot(base));
      soft_rows.push_back(-(coeff_x * gamma_block));
      soft_bounds.push_back(-(center - tol) + coeff_x.dot(base));
    };
    const Eigen::VectorXd& xbar = guess_states[static_cast<size_t>(k)];
    Eigen::Vector2d p;
    Eigen::Matrix<double, 2, Eigen::Dynamic> jac;
    for (const auto& tracked : constraints.tracked_points) {
      tracked.eval(xbar, p, jac);
      for (int axis = 0; axis < 2; ++axis) {
        // Linearized position box around the arrival target.
        const Eigen::RowVectorXd coeff = jac.row(axis);
        const double offset_term = p[axis] - coeff.dot(xbar);
        box(coeff, constraints.arrival_target[axis] - offset_term,
            constraints.arrival_pos_tol);
      }
    }
    for (int idx : constraints.rate_indices)
      box(Eigen::RowVectorXd::Unit(nx, idx), 0.0,
          constraints.arrival_rate_tol);
  }

  Eigen::MatrixXd A_soft(static_cast<Eigen::Index>(soft_rows.size()),
                         N * nu);
  Eigen::VectorXd b_soft(static_cast<Eigen::Index>(soft_rows.size()));
  for (size_t i = 0; i < soft_rows.size(); ++i) {
    A_soft.row(static_cast<Eigen::Index>(i)) = soft_rows[i];
    b_soft[static_cast<Eigen::Index>(i)] = soft_bounds[i];
  }
  Eigen::MatrixXd A_hard = Eigen::MatrixXd::Zero(2 * N * nu, N * nu);
  Eigen::VectorXd b_hard =
      Eigen::VectorXd::Constant(2 * N * nu, constraints.input_bound);
  A_hard.topRows(N * nu) = Eigen::MatrixXd::Identity(N * nu, N * nu);
  A_hard.bottomRows(N * nu) = -Eigen::MatrixXd::Identity(N * nu, N * nu);
  if (constraints.arrival_stage <= N - 1 &&
      constraints.arrival_rate_tol > 0.0) {
    // Plan stages at or past the arrival stage hold a near-zero input.
    const Eigen::Index first =
        static_cast<Eigen::Index>(std::max(0, constraints.arrival_stage)) * nu;
    for (Eigen::Index e = first; e < N * nu; ++e) {
      b_hard[e] = constraints.arrival_rate_tol;
      b_hard[N * nu + e] = constraints.arrival_rate_tol;
    }
  }

  Eigen::VectorXd hint(N * nu);
  for (int k = 0; k < N; ++k)
    hint.segment(k * nu, nu) = guess.inputs.row(k).transpose();
  const auto outcome =
      solve_with_soft_fallback(H, f, A_hard, b_hard, A_soft, b_soft, 1e6, 1.0,
                               false, guess.warm_active_set, hint);
  RtiResult result;
  result.used_soft_fallback = outcome.used_soft;
  if (!outcome.ok) {
    result.failed = true;
    result.input = Eigen::VectorXd::Zero(nu);
    guess.warm_active_set.clear();
    return result;
  }
  guess.warm_active_set = outcome.used_soft ? std::vector<int>{}
                                            : outcome.active_set;
  for (int k = 0; k < N; ++k)
    guess.inputs.row(k) = outcome.decision.segment(k * nu, nu).transpose();
  result.input = outcome.decision.head(nu);
  return result;
}

}  // namespace cranebench::controllers
