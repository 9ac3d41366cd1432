#include "cranebench/qp.hpp"

#include <doctest.h>

#include <cmath>
#include <optional>

#include "cranebench/rng.hpp"

using namespace cranebench::numerics;
using cranebench::SplitMix64;

namespace {

// Brute-force oracle: enumerate every subset of inequality rows as a
// candidate active set, solve the equality-constrained KKT system by a
// direct dense solve, and keep primal- and dual-feasible candidates. Fully
// independent of the production solver's machinery.
std::optional<double> enumerate_qp_objective(const QpProblem& p) {
  const Eigen::Index n = p.num_vars();
  const Eigen::Index m = p.num_ineq();
  const Eigen::Index q = p.num_eq();
  std::optional<double> best;
  for (unsigned mask = 0; mask < (1u << m); ++mask) {
    std::vector<int> act;
    for (Eigen::Index i = 0; i < m; ++i)
      if (mask & (1u << i)) act.push_back(static_cast<int>(i));
    const Eigen::Index w = static_cast<Eigen::Index>(act.size()) + q;

    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + w, n + w);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + w);
    kkt.topLeftCorner(n, n) = 0.5 * (p.H + p.H.transpose());
    rhs.head(n) = -p.f;
    Eigen::Index row = 0;
    for (Eigen::Index i = 0; i < q; ++i, ++row) {
      kkt.block(n + row, 0, 1, n) = p.A_eq.row(i);
      kkt.block(0, n + row, n, 1) = p.A_eq.row(i).transpose();
      rhs[n + row] = p.b_eq[i];
    }
    for (int i : act) {
      kkt.block(n + row, 0, 1, n) = p.A_ineq.row(i);
      kkt.block(0, n + row, n, 1) = p.A_ineq.row(i).transpose();
      rhs[n + row] = p.b_ineq[i];
      ++row;
    }

    const Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    if (!lu.isInvertible()) continue;
    const Eigen::VectorXd sol = lu.solve(rhs);
    const Eigen::VectorXd x = sol.head(n);

    // Multipliers of the active rows must be nonnegative in the convention
    // Hx + f + A' lambda = 0; the KKT block above solves Hx - A' mu = -f,
    // so lambda = mu.
    bool ok = true;
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(act.size()); ++i)
      if (sol[n + q + i] < -1e-9) ok = false;
    if (!ok) continue;
    if (m > 0 && (p.A_ineq * x - p.b_ineq).maxCoeff() > 1e-8) continue;
    if (q > 0 && (p.A_eq * x - p.b_eq).cwiseAbs().maxCoeff() > 1e-8) continue;

    const double obj =
        0.5 * x.dot(0.5 * (p.H + p.H.transpose()) * x) + p.f.dot(x);
    if (!best || obj < *best) best = obj;
  }
  return best;
}

Eigen::MatrixXd random_spd(SplitMix64& rng, int n) {
  Eigen::MatrixXd M(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) M(i, j) = rng.next_in(-1.0, 1.0);
  return M * M.transpose() + 0.5 * Eigen::MatrixXd::Identity(n, n);
}

// Random QP with a guaranteed feasible point.
QpProblem random_feasible_qp(SplitMix64& rng, int n, int m) {
  QpProblem p;
  p.H = random_spd(rng, n);
  p.f.resize(n);
  for (int i = 0; i < n; ++i) p.f[i] = rng.next_in(-2.0, 2.0);
  Eigen::VectorXd interior(n);
  for (int i = 0; i < n; ++i) interior[i] = rng.next_in(-1.0, 1.0);
  p.A_ineq.resize(m, n);
  p.b_ineq.resize(m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) p.A_ineq(i, j) = rng.next_in(-1.0, 1.0);
    p.b_ineq[i] = p.A_ineq.row(i).dot(interior) + rng.next_in(0.01, 1.0);
  }
  p.A_eq.resize(0, n);
  p.b_eq.resize(0);
  return p;
}

double kkt_stationarity(const QpProblem& p, const QpSolution& s) {
  Eigen::VectorXd grad =
      0.5 * (p.H + p.H.transpose()) * s.x + p.f;
  if (p.num_ineq() > 0)
    grad += p.A_ineq.transpose() * s.ineq_multipliers;
  if (p.num_eq() > 0) grad += p.A_eq.transpose() * s.eq_multipliers;
  return grad.lpNorm<Eigen::Infinity>();
}

}  // namespace

TEST_CASE("unconstrained minimum of a separable quadratic") {
  QpProblem p;
  p.H = Eigen::MatrixXd::Identity(2, 2);
  p.f.resize(2);
  p.f << -1.0, -1.0;
  p.A_ineq.resize(0, 2);
  p.b_ineq.resize(0);
  p.A_eq.resize(0, 2);
  p.b_eq.resize(0);
  const auto sol = solve_qp(p);
  REQUIRE(sol.status == QpStatus::kOptimal);
  CHECK(sol.x[0] == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(sol.x[1] == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(sol.active_set.empty());
}

TEST_CASE("active bound: min x^2 subject to x >= 1") {
  QpProblem p;
  p.H = 2.0 * Eigen::MatrixXd::Identity(1, 1);
  p.f = Eigen::VectorXd::Zero(1);
  p.A_ineq.resize(1, 1);
  p.A_ineq << -1.0;  // -x <= -1
  p.b_ineq.resize(1);
  p.b_ineq << -1.0;
  p.A_eq.resize(0, 1);
  p.b_eq.resize(0);
  const auto sol = solve_qp(p);
  REQUIRE(sol.status == QpStatus::kOptimal);
  CHECK(sol.x[0] == doctest::Approx(1.0).epsilon(1e-9));
  REQUIRE(sol.active_set.size() == 1);
  CHECK(sol.active_set[0] == 0);
  CHECK(sol.ineq_multipliers[0] == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("contradictory bounds are reported infeasible") {
  QpProblem p;
  p.H = Eigen::MatrixXd::Identity(1, 1);
  p.f = Eigen::VectorXd::Zero(1);
  p.A_ineq.resize(2, 1);
  p.A_ineq << 1.0, -1.0;  // x <= 0 and x >= 1
  p.b_ineq.resize(2);
  p.b_ineq << 0.0, -1.0;
  p.A_eq.resize(0, 1);
  p.b_eq.resize(0);
  CHECK(solve_qp(p).status == QpStatus::kInfeasible);
}

TEST_CASE("equality constraints are honored") {
  QpProblem p;
  p.H = Eigen::MatrixXd::Identity(2, 2);
  p.f = Eigen::VectorXd::Zero(2);
  p.A_ineq.resize(0, 2);
  p.b_ineq.resize(0);
  p.A_eq.resize(1, 2);
  p.A_eq << 1.0, 1.0;
  p.b_eq.resize(1);
  p.b_eq << 2.0;
  const auto sol = solve_qp(p);
  REQUIRE(sol.status == QpStatus::kOptimal);
  CHECK(sol.x[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(sol.x[1] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(kkt_stationarity(p, sol) < 1e-6);
}

TEST_CASE("500 random QPs match the active-set enumeration oracle") {
  SplitMix64 rng(2024);
  int optimal_count = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 1 + static_cast<int>(rng.next_below(6));
    const int m = 1 + static_cast<int>(rng.next_below(8));
    const QpProblem p = random_feasible_qp(rng, n, m);
    const auto oracle = enumerate_qp_objective(p);
    const auto sol = solve_qp(p);
    REQUIRE(sol.status == QpStatus::kOptimal);
    REQUIRE(oracle.has_value());
    CHECK(std::abs(sol.objective - *oracle) <=
          1e-6 * std::max(1.0, std::abs(*oracle)));

    // KKT residuals on every optimal result.
    CHECK(kkt_stationarity(p, sol) < 1e-6);
    CHECK((p.A_ineq * sol.x - p.b_ineq).maxCoeff() < 1e-6);
    CHECK(sol.ineq_multipliers.minCoeff() > -1e-6);
    // Complementarity: inactive rows carry zero multipliers by construction;
    // active rows must be (near) tight.
    for (int idx : sol.active_set)
      CHECK(std::abs(p.A_ineq.row(idx).dot(sol.x) - p.b_ineq[idx]) < 1e-6);
    ++optimal_count;
  }
  CHECK(optimal_count == 500);
}

TEST_CASE("solver is deterministic: identical inputs, identical active sets") {
  SplitMix64 rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const QpProblem p = random_feasible_qp(rng, 4, 6);
    const auto a = solve_qp(p);
    const auto b = solve_qp(p);
    CHECK(a.active_set == b.active_set);
    CHECK((a.x - b.x).lpNorm<Eigen::Infinity>() == 0.0);
  }
}

TEST_CASE("warm start from the previous active set reproduces the solution") {
  SplitMix64 rng(123);
  const QpProblem p = random_feasible_qp(rng, 5, 7);
  const auto cold = solve_qp(p);
  REQUIRE(cold.status == QpStatus::kOptimal);
  QpOptions opts;
  opts.warm_start = cold.active_set;
  const auto warm = solve_qp(p, opts);
  REQUIRE(warm.status == QpStatus::kOptimal);
  CHECK(warm.iterations <= 1);
  CHECK(std::abs(warm.objective - cold.objective) < 1e-9);
}

TEST_CASE("semidefinite Hessian is ridge-regularized and flagged") {
  QpProblem p;
  p.H = Eigen::MatrixXd::Zero(2, 2);
  p.H(0, 0) = 1.0;  // second direction is flat
  p.f.resize(2);
  p.f << -1.0, 0.5;
  p.A_ineq.resize(2, 2);
  p.A_ineq << 0.0, 1.0, 0.0, -1.0;  // -1 <= x2 <= 1
  p.b_ineq.resize(2);
  p.b_ineq << 1.0, 1.0;
  p.A_eq.resize(0, 2);
  p.b_eq.resize(0);
  const auto sol = solve_qp(p);
  REQUIRE(sol.status == QpStatus::kOptimal);
  CHECK(sol.regularized);
  CHECK(sol.x[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(sol.x[1] == doctest::Approx(-1.0).epsilon(1e-4));  // linear term pushes down
}

TEST_CASE("non-finite data is rejected up front") {
  QpProblem p;
  p.H = Eigen::MatrixXd::Identity(1, 1);
  p.f.resize(1);
  p.f << std::numeric_limits<double>::infinity();
  p.A_ineq.resize(0, 1);
  p.b_ineq.resize(0);
  p.A_eq.resize(0, 1);
  p.b_eq.resize(0);
  CHECK_THROWS_AS(solve_qp(p), std::invalid_argument);
}
