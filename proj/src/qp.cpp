#include "cranebench/qp.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace cranebench::numerics {

namespace {

constexpr double kRidge = 1e-8;
constexpr double kPdProbeShift = 1e-9;
constexpr double kDualTol = 1e-9;
constexpr double kDependenceTol = 1e-10;

struct Workspace {
  Eigen::MatrixXd H;  // symmetrized, ridge-regularized if needed
  Eigen::VectorXd f;
  Eigen::LLT<Eigen::MatrixXd> llt;
  bool regularized = false;
};

Workspace prepare_hessian(const QpProblem& p) {
  Workspace ws;
  ws.H = 0.5 * (p.H + p.H.transpose());
  ws.f = p.f;

  // LLT of H - shift*I succeeds iff lambda_min(H) is comfortably above shift.
  Eigen::MatrixXd probe = ws.H;
  probe.diagonal().array() -= kPdProbeShift;
  Eigen::LLT<Eigen::MatrixXd> probe_llt(probe);
  if (probe_llt.info() != Eigen::Success) {
    ws.regularized = true;
    double ridge = kRidge;
    for (int attempt = 0; attempt < 20; ++attempt) {
      Eigen::MatrixXd regd = ws.H;
      regd.diagonal().array() += ridge;
      ws.llt.compute(regd);
      if (ws.llt.info() == Eigen::Success) {
        ws.H = regd;
        return ws;
      }
      ridge *= 10.0;
    }
    throw std::invalid_argument("QP Hessian is not positive definite");
  }
  ws.llt.compute(ws.H);
  if (ws.llt.info() != Eigen::Success)
    throw std::invalid_argument("QP Hessian factorization failed");
  return ws;
}

// All equality rows plus the working inequality rows, pruned to full row
// rank. A pruned (dependent) row whose bound disagrees with the value implied
// by the retained rows renders the active system inconsistent.
struct ActiveSystem {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  std::vector<int> tags;  // >= 0: inequality row; < 0: equality ~(index)
  bool consistent = true;
};

ActiveSystem assemble_active(const QpProblem& p,
                             const std::vector<int>& working) {
  const Eigen::Index n = p.num_vars();
  const Eigen::Index rows =
      p.num_eq() + static_cast<Eigen::Index>(working.size());
  ActiveSystem sys;

  Eigen::MatrixXd candidates(rows, n);
  Eigen::VectorXd bounds(rows);
  std::vector<int> tags;
  tags.reserve(rows);
  for (Eigen::Index i = 0; i < p.num_eq(); ++i) {
    candidates.row(i) = p.A_eq.row(i);
    bounds[i] = p.b_eq[i];
    tags.push_back(~static_cast<int>(i));
  }
  for (size_t j = 0; j < working.size(); ++j) {
    const Eigen::Index i = p.num_eq() + static_cast<Eigen::Index>(j);
    candidates.row(i) = p.A_ineq.row(working[j]);
    bounds[i] = p.b_ineq[working[j]];
    tags.push_back(working[j]);
  }
  if (rows == 0) {
    sys.A.resize(0, n);
    sys.b.resize(0);
    return sys;
  }

  // One rank-revealing factorization finds a maximal independent row subset.
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(candidates.transpose());
  qr.setThreshold(kDependenceTol);
  const Eigen::Index rank = qr.rank();
  const auto& perm = qr.colsPermutation().indices();
  std::vector<Eigen::Index> kept(perm.data(), perm.data() + rank);
  std::sort(kept.begin(), kept.end());

  sys.A.resize(rank, n);
  sys.b.resize(rank);
  std::vector<bool> is_kept(rows, false);
  for (Eigen::Index i = 0; i < rank; ++i) {
    sys.A.row(i) = candidates.row(kept[static_cast<size_t>(i)]);
    sys.b[i] = bounds[kept[static_cast<size_t>(i)]];
    sys.tags.push_back(tags[static_cast<size_t>(kept[static_cast<size_t>(i)])]);
    is_kept[static_cast<size_t>(kept[static_cast<size_t>(i)])] = true;
  }

  if (rank == rows) return sys;

  // Dropped rows must carry bounds consistent with the rows that imply them.
  Eigen::HouseholderQR<Eigen::MatrixXd> kept_qr(sys.A.transpose());
  const Eigen::MatrixXd R =
      kept_qr.matrixQR().topRows(rank).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd Q = kept_qr.householderQ();
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (is_kept[static_cast<size_t>(i)]) continue;
    const Eigen::VectorXd a = candidates.row(i).transpose();
    if (a.norm() <= kDependenceTol) {
      if (std::abs(bounds[i]) > 1e-9) sys.consistent = false;
      continue;
    }
    const Eigen::VectorXd qta = (Q.transpose() * a).head(rank);
    const Eigen::VectorXd y =
        R.triangularView<Eigen::Upper>().solve(qta);
    const double implied = y.dot(sys.b);
    if (std::abs(implied - bounds[i]) >
        1e-8 * std::max({1.0, std::abs(implied), std::abs(bounds[i])}))
      sys.consistent = false;
  }
  return sys;
}

// Null-space factorization of the active rows: A_act = (Q R)' with Q
// orthogonal, so the trailing columns of Q span null(A_act). Working in that
// basis keeps the stationarity test exact: a full-rank working set yields a
// zero step by construction instead of a roundoff-sized one.
struct ActiveFactors {
  Eigen::MatrixXd Q;   // n x n
  Eigen::MatrixXd R;   // r x r upper triangular
  Eigen::MatrixXd Z;   // n x (n - r) null-space basis
  Eigen::Index r = 0;
};

ActiveFactors factor_active(const Eigen::MatrixXd& A_act) {
  ActiveFactors f;
  f.r = A_act.rows();
  const Eigen::Index n = A_act.cols();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(A_act.transpose());
  // Thin blocks of Q: the leading r columns for multipliers, the trailing
  // n - r columns as the null-space basis.
  Eigen::MatrixXd pick = Eigen::MatrixXd::Zero(n, n);
  pick.setIdentity();
  const Eigen::MatrixXd Qfull_applied = qr.householderQ() * pick;
  f.Q = Qfull_applied.leftCols(f.r);
  f.Z = Qfull_applied.rightCols(n - f.r);
  f.R = qr.matrixQR().topRows(f.r).triangularView<Eigen::Upper>();
  return f;
}

// Least-squares multipliers nu with A_act' nu ~= g, reusing the QR factors.
Eigen::VectorXd active_multipliers(const ActiveFactors& fac,
                                   const Eigen::VectorXd& g) {
  if (fac.r == 0) return Eigen::VectorXd();
  const Eigen::VectorXd qtg = fac.Q.transpose() * g;
  return fac.R.triangularView<Eigen::Upper>().solve(qtg);
}

// Equality-constrained subproblem min 0.5 x'Hx + f'x s.t. act.A x = act.b.
// Stationarity is written Hx + f = A' nu; the KKT multiplier of a <= row is
// lambda = -nu, so dual feasibility there is nu <= 0.
struct EqpResult {
  Eigen::VectorXd x;
  Eigen::VectorXd nu;
};

EqpResult solve_eqp(const Workspace& ws, const ActiveSystem& act) {
  EqpResult res;
  if (act.A.rows() == 0) {
    res.x = ws.llt.solve(-ws.f);
    res.nu.resize(0);
    return res;
  }
  const ActiveFactors fac = factor_active(act.A);
  // Particular solution: x_p = Q_1 R^{-T} b.
  const Eigen::VectorXd w =
      fac.R.transpose().triangularView<Eigen::Lower>().solve(act.b);
  Eigen::VectorXd x = fac.Q.leftCols(fac.r) * w;
  if (fac.Z.cols() > 0) {
    const Eigen::MatrixXd Hz = ws.H * fac.Z;
    const Eigen::MatrixXd reduced = fac.Z.transpose() * Hz;
    const Eigen::VectorXd rhs = -fac.Z.transpose() * (ws.H * x + ws.f);
    Eigen::LLT<Eigen::MatrixXd> llt(reduced);
    x += fac.Z * llt.solve(rhs);
  }
  res.x = x;
  res.nu = active_multipliers(fac, ws.H * x + ws.f);
  return res;
}

double objective_of(const QpProblem& p, const Eigen::VectorXd& x) {
  const Eigen::MatrixXd Hs = 0.5 * (p.H + p.H.transpose());
  return 0.5 * x.dot(Hs * x) + p.f.dot(x);
}

double max_ineq_violation(const QpProblem& p, const Eigen::VectorXd& x) {
  if (p.num_ineq() == 0) return 0.0;
  return (p.A_ineq * x - p.b_ineq).maxCoeff();
}

// Packs an optimal point. kkt_lambda holds the multipliers per retained
// active row in the convention Hx + f + A_ineq' lambda + A_eq' mu = 0,
// lambda >= 0 on inequality rows.
QpSolution finish(const QpProblem& p, const Workspace& ws,
                  const Eigen::VectorXd& x, const ActiveSystem& act,
                  const Eigen::VectorXd& kkt_lambda, int iterations) {
  QpSolution sol;
  sol.x = x;
  sol.status = QpStatus::kOptimal;
  sol.objective = objective_of(p, x);
  sol.regularized = ws.regularized;
  sol.iterations = iterations;
  sol.ineq_multipliers = Eigen::VectorXd::Zero(p.num_ineq());
  sol.eq_multipliers = Eigen::VectorXd::Zero(p.num_eq());
  for (size_t i = 0; i < act.tags.size(); ++i) {
    const double lam = kkt_lambda[static_cast<Eigen::Index>(i)];
    if (act.tags[i] >= 0) {
      sol.ineq_multipliers[act.tags[i]] = lam;
      sol.active_set.push_back(act.tags[i]);
    } else {
      sol.eq_multipliers[~act.tags[i]] = lam;
    }
  }
  std::sort(sol.active_set.begin(), sol.active_set.end());
  return sol;
}

// Primal active-set iteration from a feasible point. When seed_working is
// non-null the initial working set is its rows that are active at the start
// point (a carried-over active set); otherwise every active row enters.
QpSolution solve_from_feasible(const QpProblem& problem,
                               const Eigen::VectorXd& x_feasible,
                               const QpOptions& options,
                               const std::vector<int>* seed_working = nullptr) {
  Workspace ws = prepare_hessian(problem);
  const Eigen::Index m = problem.num_ineq();
  const double feas_tol = options.feasibility_tol;
  const int max_iter =
      options.max_iterations > 0
          ? options.max_iterations
          : 50 * static_cast<int>(problem.num_vars() + m + problem.num_eq());

  Eigen::VectorXd x = x_feasible;
  std::vector<int> working;
  if (seed_working != nullptr) {
    for (int i : *seed_working)
      if (problem.A_ineq.row(i).dot(x) >= problem.b_ineq[i] - feas_tol)
        working.push_back(i);
    std::sort(working.begin(), working.end());
  } else {
    for (Eigen::Index i = 0; i < m; ++i)
      if (problem.A_ineq.row(i).dot(x) >= problem.b_ineq[i] - feas_tol)
        working.push_back(static_cast<int>(i));
  }

  ActiveSystem act = assemble_active(problem, working);
  int iterations = 0;
  while (iterations++ < max_iter) {
    if (!act.consistent) {
      QpSolution sol;
      sol.status = QpStatus::kInfeasible;
      sol.regularized = ws.regularized;
      sol.iterations = iterations;
      return sol;
    }

    // Direction subproblem: min 0.5 d'Hd + g'd s.t. A_act d = 0, solved in
    // the null-space basis of the working rows.
    const Eigen::VectorXd g = ws.H * x + ws.f;
    Eigen::VectorXd d = Eigen::VectorXd::Zero(problem.num_vars());
    Eigen::VectorXd nu;
    ActiveFactors fac;
    if (act.A.rows() == 0) {
      d = ws.llt.solve(-g);
    } else {
      fac = factor_active(act.A);
      if (fac.Z.cols() > 0) {
        const Eigen::MatrixXd reduced = fac.Z.transpose() * ws.H * fac.Z;
        Eigen::LLT<Eigen::MatrixXd> llt(reduced);
        d = fac.Z * llt.solve(-fac.Z.transpose() * g);
      }
      // else: working rows span the space, d = 0 exactly
    }

    const double step_scale = std::max(1.0, x.cwiseAbs().maxCoeff());
    if (d.size() == 0 || d.cwiseAbs().maxCoeff() <= 1e-9 * step_scale) {
      nu = act.A.rows() > 0 ? active_multipliers(fac, g) : Eigen::VectorXd();
      // Stationary on the working set; with Hx + f = A' nu a <= row is at a
      // KKT point when nu <= 0. Drop the worst offender, lowest index first.
      int drop = -1;
      double worst = kDualTol;
      for (size_t i = 0; i < act.tags.size(); ++i) {
        if (act.tags[i] < 0) continue;
        if (nu[static_cast<Eigen::Index>(i)] > worst) {
          worst = nu[static_cast<Eigen::Index>(i)];
          drop = static_cast<int>(i);
        }
      }
      if (drop < 0) return finish(problem, ws, x, act, -nu, iterations);
      const int row = act.tags[static_cast<size_t>(drop)];
      working.erase(std::find(working.begin(), working.end(), row));
      act = assemble_active(problem, working);
      continue;
    }

    // Ratio test over rows outside the working set; lowest index on ties.
    double alpha = 1.0;
    int blocking = -1;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (std::binary_search(working.begin(), working.end(),
                             static_cast<int>(i)))
        continue;
      const double ad = problem.A_ineq.row(i).dot(d);
      if (ad <= 1e-12) continue;
      const double gap = problem.b_ineq[i] - problem.A_ineq.row(i).dot(x);
      const double ratio = std::max(gap, 0.0) / ad;
      if (ratio < alpha - 1e-14) {
        alpha = ratio;
        blocking = static_cast<int>(i);
      }
    }
    x += alpha * d;
    if (blocking >= 0) {
      working.insert(
          std::lower_bound(working.begin(), working.end(), blocking),
          blocking);
      act = assemble_active(problem, working);
    }
  }

  QpSolution sol;
  sol.x = x;
  sol.status = QpStatus::kMaxIterations;
  sol.objective = objective_of(problem, x);
  sol.regularized = ws.regularized;
  sol.iterations = iterations;
  return sol;
}

}  // namespace

QpSolution solve_qp(const QpProblem& problem, const QpOptions& options) {
  const Eigen::Index n = problem.num_vars();
  const Eigen::Index m = problem.num_ineq();
  if (problem.H.rows() != n || problem.H.cols() != n)
    throw std::invalid_argument("QP Hessian dimension mismatch");
  if (problem.A_ineq.rows() != m || (m > 0 && problem.A_ineq.cols() != n))
    throw std::invalid_argument("QP inequality dimension mismatch");
  if (problem.A_eq.rows() != problem.num_eq() ||
      (problem.num_eq() > 0 && problem.A_eq.cols() != n))
    throw std::invalid_argument("QP equality dimension mismatch");
  if (!problem.H.allFinite() || !problem.f.allFinite())
    throw std::invalid_argument("QP data must be finite");

  Workspace ws = prepare_hessian(problem);
  const double feas_tol = options.feasibility_tol;

  // Warm start: solve the EQP for the carried-over active set. If the full
  // KKT conditions hold, done in one solve; if the point is at least primal
  // feasible, continue the primal iteration from there instead of paying for
  // a cold phase 1.
  if (!options.warm_start.empty()) {
    std::set<int> dedup;
    std::vector<int> warm;
    for (int idx : options.warm_start)
      if (idx >= 0 && idx < m && dedup.insert(idx).second) warm.push_back(idx);
    std::sort(warm.begin(), warm.end());
    const ActiveSystem act = assemble_active(problem, warm);
    if (act.consistent) {
      const EqpResult eqp = solve_eqp(ws, act);
      if (eqp.x.size() > 0 && eqp.x.allFinite()) {
        const bool eq_ok =
            problem.num_eq() == 0 ||
            (problem.A_eq * eqp.x - problem.b_eq).cwiseAbs().maxCoeff() <=
                feas_tol;
        const bool primal_ok =
            eq_ok && max_ineq_violation(problem, eqp.x) <= feas_tol;
        bool dual_ok = true;
        for (size_t i = 0; i < act.tags.size(); ++i)
          if (act.tags[i] >= 0 &&
              eqp.nu[static_cast<Eigen::Index>(i)] > kDualTol)
            dual_ok = false;
        if (primal_ok && dual_ok)
          return finish(problem, ws, eqp.x, act, -eqp.nu, 1);
        if (primal_ok) return solve_from_feasible(problem, eqp.x, options, &warm);
      }
    }
  }

  // Phase 1: a feasible starting point. An initial-point hint that is
  // already feasible skips it; an infeasible hint at least recentres the
  // search near the previous solution.
  Eigen::VectorXd x;
  if (options.initial_point.size() == n &&
      options.initial_point.allFinite() &&
      (problem.num_eq() == 0 ||
       (problem.A_eq * options.initial_point - problem.b_eq)
               .cwiseAbs()
               .maxCoeff() <= feas_tol)) {
    x = options.initial_point;
    if (max_ineq_violation(problem, x) <= feas_tol) {
      std::set<int> dedup;
      std::vector<int> warm;
      for (int idx : options.warm_start)
        if (idx >= 0 && idx < m && dedup.insert(idx).second)
          warm.push_back(idx);
      std::sort(warm.begin(), warm.end());
      return solve_from_feasible(problem, x, options,
                                 warm.empty() ? nullptr : &warm);
    }
  } else if (problem.num_eq() > 0) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(
        problem.A_eq, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(1e-12);
    x = svd.solve(problem.b_eq);
    if ((problem.A_eq * x - problem.b_eq).cwiseAbs().maxCoeff() >
        1e-8 * std::max(1.0, problem.b_eq.cwiseAbs().maxCoeff())) {
      QpSolution sol;
      sol.status = QpStatus::kInfeasible;
      sol.regularized = ws.regularized;
      return sol;
    }
  } else {
    x = Eigen::VectorXd::Zero(n);
  }

  // Phase 1: minimize t (plus a small strictly convex term) subject to
  // A x - t <= b. The start (x, max violation + 1) is feasible by
  // construction, so the inner solve needs no phase 1 of its own. The
  // quadratic term biases the solve toward the recentring point, so the
  // loop re-centres until the violation stops shrinking: a genuinely
  // infeasible problem stalls at its positive minimax violation. The
  // fairly strong regularization keeps the subproblem well conditioned
  // (fewer vertex-to-vertex crawls); recentring removes its bias.
  const double delta = 1e-4;
  double violation = max_ineq_violation(problem, x);
  for (int round = 0; round < 8 && violation > feas_tol; ++round) {
    QpProblem p1;
    p1.H = delta * Eigen::MatrixXd::Identity(n + 1, n + 1);
    p1.f.resize(n + 1);
    p1.f.head(n) = -delta * x;
    p1.f[n] = 1.0;
    p1.A_ineq.resize(m, n + 1);
    p1.A_ineq.leftCols(n) = problem.A_ineq;
    p1.A_ineq.col(n).setConstant(-1.0);
    p1.b_ineq = problem.b_ineq;
    p1.A_eq.resize(problem.num_eq(), n + 1);
    if (problem.num_eq() > 0) {
      p1.A_eq.leftCols(n) = problem.A_eq;
      p1.A_eq.col(n).setZero();
    }
    p1.b_eq = problem.b_eq;

    Eigen::VectorXd x1(n + 1);
    x1.head(n) = x;
    x1[n] = violation + 1.0;

    QpOptions o1;
    o1.max_iterations = options.max_iterations;
    o1.feasibility_tol = feas_tol;
    const QpSolution s1 = solve_from_feasible(p1, x1, o1);
    if (s1.status == QpStatus::kMaxIterations) {
      QpSolution sol;
      sol.status = QpStatus::kMaxIterations;
      sol.regularized = ws.regularized;
      sol.iterations = s1.iterations;
      return sol;
    }
    if (s1.x.size() != n + 1) break;
    const double new_violation = max_ineq_violation(problem, s1.x.head(n));
    if (new_violation >= violation) break;  // stalled
    x = s1.x.head(n);
    violation = new_violation;
  }
  if (violation > feas_tol) {
    QpSolution sol;
    sol.status = QpStatus::kInfeasible;
    sol.regularized = ws.regularized;
    return sol;
  }

  return solve_from_feasible(problem, x, options);
}

}  // namespace cranebench::numerics
