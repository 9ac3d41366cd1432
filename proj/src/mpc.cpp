#include "cranebench/mpc.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace cranebench::mpc {

namespace {

// Matrix exponential by scaling and squaring with a truncated Taylor series;
// terms are added until their norm falls below 1e-12 relative.
Eigen::MatrixXd expm(const Eigen::MatrixXd& M) {
  const double norm = M.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  double scale = 1.0;
  while (norm * scale > 0.5) {
    scale *= 0.5;
    ++squarings;
  }
  const Eigen::MatrixXd S = scale * M;
  Eigen::MatrixXd result =
      Eigen::MatrixXd::Identity(M.rows(), M.cols());
  Eigen::MatrixXd term = result;
  for (int k = 1; k <= 40; ++k) {
    term = (term * S) / static_cast<double>(k);
    result += term;
    if (term.cwiseAbs().maxCoeff() <= 1e-12 * result.cwiseAbs().maxCoeff())
      break;
  }
  for (int i = 0; i < squarings; ++i) result = result * result;
  return result;
}

}  // namespace

DiscreteModel discretize_zoh(const Eigen::MatrixXd& Ac,
                             const Eigen::MatrixXd& Bc, double ts) {
  if (!(ts > 0.0)) throw std::invalid_argument("sample time must be positive");
  if (Ac.rows() != Ac.cols() || Ac.rows() != Bc.rows())
    throw std::invalid_argument("continuous model dimension mismatch");
  const Eigen::Index n = Ac.rows();
  const Eigen::Index nu = Bc.cols();

  // exp([Ac Bc; 0 0] ts) = [A B; 0 I].
  Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(n + nu, n + nu);
  aug.topLeftCorner(n, n) = Ac * ts;
  aug.topRightCorner(n, nu) = Bc * ts;
  const Eigen::MatrixXd e = expm(aug);

  DiscreteModel model;
  model.A = e.topLeftCorner(n, n);
  model.B = e.topRightCorner(n, nu);
  model.C = Eigen::MatrixXd::Identity(n, n);
  model.ts = ts;
  return model;
}

Prediction build_prediction(const DiscreteModel& model, int horizon) {
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  const Eigen::Index n = model.num_states();
  const Eigen::Index nu = model.num_inputs();

  Prediction pred;
  pred.horizon = horizon;
  pred.nx = n;
  pred.nu = nu;
  pred.Phi.resize(horizon * n, n);
  pred.Gamma = Eigen::MatrixXd::Zero(horizon * n, horizon * nu);
  pred.offset = Eigen::VectorXd::Zero(horizon * n);

  Eigen::MatrixXd a_power = model.A;  // A^{i+1} for block row i
  for (int i = 0; i < horizon; ++i) {
    pred.Phi.middleRows(i * n, n) = a_power;
    // Gamma block (i, j) = A^{i-j-1} B.
    pred.Gamma.block(i * n, i * nu, n, nu) = model.B;
    if (i + 1 < horizon) a_power = model.A * a_power;
  }
  for (int i = 1; i < horizon; ++i)
    for (int j = 0; j < i; ++j)
      pred.Gamma.block(i * n, j * nu, n, nu) =
          model.A * pred.Gamma.block((i - 1) * n, j * nu, n, nu);
  return pred;
}

Prediction build_prediction_tv(const std::vector<Eigen::MatrixXd>& A_seq,
                               const std::vector<Eigen::MatrixXd>& B_seq,
                               const std::vector<Eigen::VectorXd>& d_seq) {
  const int horizon = static_cast<int>(A_seq.size());
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  if (B_seq.size() != A_seq.size() || d_seq.size() != A_seq.size())
    throw std::invalid_argument("sequence length mismatch");
  const Eigen::Index n = A_seq[0].rows();
  const Eigen::Index nu = B_seq[0].cols();

  Prediction pred;
  pred.horizon = horizon;
  pred.nx = n;
  pred.nu = nu;
  pred.Phi.resize(horizon * n, n);
  pred.Gamma = Eigen::MatrixXd::Zero(horizon * n, horizon * nu);
  pred.offset.resize(horizon * n);

  // Row block i: x_{i+1} = A_i (previous row) + B_i u_i + d_i.
  for (int i = 0; i < horizon; ++i) {
    if (A_seq[i].rows() != n || A_seq[i].cols() != n || B_seq[i].rows() != n ||
        B_seq[i].cols() != nu || d_seq[i].size() != n)
      throw std::invalid_argument("sequence dimension mismatch");
    if (i == 0) {
      pred.Phi.topRows(n) = A_seq[0];
      pred.Gamma.topLeftCorner(n, nu) = B_seq[0];
      pred.offset.head(n) = d_seq[0];
    } else {
      pred.Phi.middleRows(i * n, n) = A_seq[i] * pred.Phi.middleRows((i - 1) * n, n);
      pred.Gamma.middleRows(i * n, n) =
          A_seq[i] * pred.Gamma.middleRows((i - 1) * n, n);
      pred.Gamma.block(i * n, i * nu, n, nu) = B_seq[i];
      pred.offset.segment(i * n, n) =
          A_seq[i] * pred.offset.segment((i - 1) * n, n) + d_seq[i];
    }
  }
  return pred;
}

StackedWeights stack_weights(const CostSpec& cost, int horizon) {
  const Eigen::Index n = cost.Q.rows();
  const Eigen::Index nu = cost.R.rows();
  StackedWeights w;
  w.Qbar = Eigen::MatrixXd::Zero(horizon * n, horizon * n);
  w.Rbar = Eigen::MatrixXd::Zero(horizon * nu, horizon * nu);
  for (int i = 0; i < horizon; ++i) {
    w.Qbar.block(i * n, i * n, n, n) =
        (i + 1 == horizon) ? cost.P : cost.Q;
    w.Rbar.block(i * nu, i * nu, nu, nu) = cost.R;
  }
  return w;
}

CondensedCost build_cost(const Prediction& prediction, const CostSpec& cost) {
  if (cost.Q.rows() != prediction.nx || cost.R.rows() != prediction.nu ||
      cost.P.rows() != prediction.nx)
    throw std::invalid_argument("cost dimension mismatch");
  const StackedWeights w = stack_weights(cost, prediction.horizon);
  CondensedCost out;
  const Eigen::MatrixXd QG = w.Qbar * prediction.Gamma;
  out.H = prediction.Gamma.transpose() * QG + w.Rbar;
  out.H = (0.5 * (out.H + out.H.transpose())).eval();
  out.G = QG.transpose() * prediction.Phi;
  out.const_quad = prediction.Phi.transpose() * w.Qbar * prediction.Phi;
  return out;
}

Eigen::MatrixXd unconstrained_rhc_gain(const DiscreteModel& model,
                                       const CostSpec& cost, int horizon) {
  const Prediction pred = build_prediction(model, horizon);
  const CondensedCost cc = build_cost(pred, cost);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(cc.H);
  if (ldlt.info() != Eigen::Success || ldlt.rcond() < 1e-12)
    throw std::invalid_argument(
        "condensed Hessian is singular; is the input penalty missing?");
  const Eigen::MatrixXd full_gain = ldlt.solve(cc.G);
  return full_gain.topRows(model.num_inputs());
}

CondensedConstraints build_trajectory_constraints(
    const StageConstraint& constraint, const Prediction& prediction) {
  const Eigen::Index n = prediction.nx;
  const Eigen::Index nu = prediction.nu;
  const int N = prediction.horizon;
  const Eigen::Index rows_stage = constraint.stage_rows();
  const Eigen::Index rows_term = constraint.terminal_rows();
  if (rows_stage > 0 &&
      (constraint.E.rows() != rows_stage || constraint.F.rows() != rows_stage ||
       constraint.E.cols() != n || constraint.F.cols() != nu))
    throw std::invalid_argument("stage constraint dimension mismatch");
  if (rows_term > 0 && constraint.E_terminal.cols() != n)
    throw std::invalid_argument("terminal constraint dimension mismatch");

  const Eigen::Index total = rows_stage * N + rows_term;
  CondensedConstraints out;
  out.Gc = Eigen::MatrixXd::Zero(total, N * nu);
  out.wc = Eigen::VectorXd::Zero(total);
  out.Lc = Eigen::MatrixXd::Zero(total, n);

  for (int k = 0; k < N && rows_stage > 0; ++k) {
    const Eigen::Index row0 = k * rows_stage;
    out.wc.segment(row0, rows_stage) = constraint.c;
    out.Gc.block(row0, k * nu, rows_stage, nu) = constraint.F;
    if (k == 0) {
      // E x_0 + F u_0 <= c: x_0 enters through Lc directly.
      out.Lc.middleRows(row0, rows_stage) = -constraint.E;
    } else {
      // E x_k = E (Phi_{k-1} x0 + Gamma_{k-1} u + offset_{k-1}).
      const auto phi_k = prediction.Phi.middleRows((k - 1) * n, n);
      const auto gamma_k = prediction.Gamma.middleRows((k - 1) * n, n);
      out.Gc.block(row0, 0, rows_stage, N * nu) += constraint.E * gamma_k;
      out.Lc.middleRows(row0, rows_stage) = -constraint.E * phi_k;
      out.wc.segment(row0, rows_stage) -=
          constraint.E * prediction.offset.segment((k - 1) * n, n);
    }
  }
  if (rows_term > 0) {
    const Eigen::Index row0 = rows_stage * N;
    const auto phi_n = prediction.Phi.bottomRows(n);
    const auto gamma_n = prediction.Gamma.bottomRows(n);
    out.Gc.block(row0, 0, rows_term, N * nu) =
        constraint.E_terminal * gamma_n;
    out.Lc.middleRows(row0, rows_term) = -constraint.E_terminal * phi_n;
    out.wc.segment(row0, rows_term) =
        constraint.c_terminal -
        constraint.E_terminal * prediction.offset.tail(n);
  }
  return out;
}

SoftenedConstraints soften_constraints(const CondensedConstraints& hard,
                                       double rho1, double rho2) {
  if (!(rho1 > 0.0) && !(rho2 > 0.0))
    throw std::invalid_argument(
        "soft constraints need a positive slack weight");
  const Eigen::Index rows = hard.Gc.rows();
  const Eigen::Index nu_total = hard.Gc.cols();

  SoftenedConstraints out;
  out.n_slack = rows;
  out.rho1 = rho1;
  out.rho2 = rho2;
  out.Gc = Eigen::MatrixXd::Zero(2 * rows, nu_total + rows);
  out.wc = Eigen::VectorXd::Zero(2 * rows);
  out.Lc = Eigen::MatrixXd::Zero(2 * rows, hard.Lc.cols());
  // Gc u - s <= wc + Lc x0
  out.Gc.topLeftCorner(rows, nu_total) = hard.Gc;
  out.Gc.topRightCorner(rows, rows) = -Eigen::MatrixXd::Identity(rows, rows);
  out.wc.head(rows) = hard.wc;
  out.Lc.topRows(rows) = hard.Lc;
  // -s <= 0
  out.Gc.bottomRightCorner(rows, rows) =
      -Eigen::MatrixXd::Identity(rows, rows);
  return out;
}

Eigen::MatrixXd build_blocking(const BlockingSpec& spec, int nu) {
  if (nu < 1) throw std::invalid_argument("nu must be >= 1");
  if (spec.block_lengths.empty())
    throw std::invalid_argument("blocking spec must not be empty");
  int horizon = 0;
  for (int len : spec.block_lengths) {
    if (len < 1) throw std::invalid_argument("block lengths must be >= 1");
    horizon += len;
  }
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(
      horizon * nu, static_cast<Eigen::Index>(spec.block_lengths.size()) * nu);
  int stage = 0;
  for (size_t blk = 0; blk < spec.block_lengths.size(); ++blk) {
    for (int i = 0; i < spec.block_lengths[blk]; ++i, ++stage)
      T.block(stage * nu, static_cast<Eigen::Index>(blk) * nu, nu, nu) =
          Eigen::MatrixXd::Identity(nu, nu);
  }
  return T;
}

DiscreteModel offset_free_augment(const DiscreteModel& model,
                                  const Eigen::MatrixXd& Bd,
                                  const Eigen::MatrixXd& Cd) {
  const Eigen::Index n = model.num_states();
  const Eigen::Index ny = model.C.rows();
  const Eigen::Index nd = Bd.cols();
  if (Bd.rows() != n || Cd.rows() != ny || Cd.cols() != nd)
    throw std::invalid_argument("disturbance map dimension mismatch");

  // Rank condition for detectability of the augmented pair:
  // rank([A - I, Bd; C, Cd]) = n + nd.
  Eigen::MatrixXd test(n + ny, n + nd);
  test.topLeftCorner(n, n) = model.A - Eigen::MatrixXd::Identity(n, n);
  test.topRightCorner(n, nd) = Bd;
  test.bottomLeftCorner(ny, n) = model.C;
  test.bottomRightCorner(ny, nd) = Cd;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(test);
  qr.setThreshold(1e-10);
  if (qr.rank() < n + nd)
    throw std::invalid_argument(
        "augmented model not detectable: rank([A-I, Bd; C, Cd]) = " +
        std::to_string(qr.rank()) + " < " + std::to_string(n + nd));

  DiscreteModel aug;
  aug.ts = model.ts;
  aug.A = Eigen::MatrixXd::Zero(n + nd, n + nd);
  aug.A.topLeftCorner(n, n) = model.A;
  aug.A.topRightCorner(n, nd) = Bd;
  aug.A.bottomRightCorner(nd, nd) = Eigen::MatrixXd::Identity(nd, nd);
  aug.B = Eigen::MatrixXd::Zero(n + nd, model.num_inputs());
  aug.B.topRows(n) = model.B;
  aug.C = Eigen::MatrixXd::Zero(ny, n + nd);
  aug.C.leftCols(n) = model.C;
  aug.C.rightCols(nd) = Cd;
  return aug;
}

StageConstraint tighten_constraints(const StageConstraint& constraint,
                                    const Eigen::VectorXd& margins) {
  if (margins.size() != constraint.stage_rows())
    throw std::invalid_argument("margin row count mismatch");
  if (margins.size() > 0 && margins.minCoeff() < 0.0)
    throw std::invalid_argument("margins must be nonnegative");
  StageConstraint out = constraint;
  out.c = constraint.c - margins;
  return out;
}

Eigen::MatrixXd riccati_terminal_weight(const DiscreteModel& model,
                                        const Eigen::MatrixXd& Q,
                                        const Eigen::MatrixXd& R) {
  Eigen::MatrixXd P = Q;
  for (int it = 0; it < 10000; ++it) {
    const Eigen::MatrixXd BtPB = R + model.B.transpose() * P * model.B;
    const Eigen::MatrixXd BtPA = model.B.transpose() * P * model.A;
    const Eigen::MatrixXd next =
        Q + model.A.transpose() * P * model.A -
        BtPA.transpose() * BtPB.ldlt().solve(BtPA);
    const double diff = (next - P).cwiseAbs().maxCoeff();
    P = 0.5 * (next + next.transpose());
    if (diff <= 1e-10) return P;
  }
  throw std::runtime_error("Riccati iteration did not converge");
}

KalmanState kalman_step(const DiscreteModel& model, const Eigen::MatrixXd& Qw,
                        const Eigen::MatrixXd& Rv, const KalmanState& prior,
                        const Eigen::VectorXd& u_prev,
                        const Eigen::VectorXd& y) {
  const Eigen::Index n = model.num_states();
  const Eigen::Index ny = model.C.rows();
  if (prior.mean.size() != n || prior.cov.rows() != n || y.size() != ny)
    throw std::invalid_argument("kalman dimension mismatch");

  // Predict.
  const Eigen::VectorXd mean_pred = model.A * prior.mean + model.B * u_prev;
  const Eigen::MatrixXd cov_pred =
      model.A * prior.cov * model.A.transpose() + Qw;

  // Update.
  const Eigen::MatrixXd S =
      model.C * cov_pred * model.C.transpose() + Rv;
  const double s_scale = S.cwiseAbs().maxCoeff();
  Eigen::LDLT<Eigen::MatrixXd> ldlt(S);
  if (s_scale <= 0.0 || ldlt.info() != Eigen::Success ||
      ldlt.vectorD().minCoeff() < 1e-14 * s_scale)
    throw std::runtime_error("innovation covariance numerically singular");
  const Eigen::MatrixXd K =
      ldlt.solve(model.C * cov_pred.transpose()).transpose();

  KalmanState post;
  post.mean = mean_pred + K * (y - model.C * mean_pred);
  const Eigen::MatrixXd IKC =
      Eigen::MatrixXd::Identity(n, n) - K * model.C;
  // Joseph form keeps the covariance PSD under roundoff.
  post.cov = IKC * cov_pred * IKC.transpose() + K * Rv * K.transpose();
  post.cov = (0.5 * (post.cov + post.cov.transpose())).eval();
  return post;
}

}  // namespace cranebench::mpc
