// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one pass/fail line per criterion. Exit code is the number of
// failing criteria.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>

#include "cranebench/controllers.hpp"
#include "cranebench/grading.hpp"
#include "cranebench/json_io.hpp"
#include "cranebench/ode.hpp"
#include "cranebench/qp.hpp"
#include "cranebench/quadrature.hpp"
#include "cranebench/rng.hpp"

using namespace cranebench;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(const Clock::time_point& t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Eigen::MatrixXd random_matrix(SplitMix64& rng, int rows, int cols,
                              double lo = -1.0, double hi = 1.0) {
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.next_in(lo, hi);
  return m;
}

// ---------------------------------------------------------------------------
// 1. Prediction/cost/constraint builders against brute-force rollouts.
// ---------------------------------------------------------------------------
bool criterion_matrix_oracles(std::string& detail) {
  const auto t0 = Clock::now();
  SplitMix64 rng(4242);
  double worst = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 1 + static_cast<int>(rng.next_below(5));
    const int nu = 1 + static_cast<int>(rng.next_below(2));
    const int N = 1 + static_cast<int>(rng.next_below(20));
    mpc::DiscreteModel model;
    model.A = random_matrix(rng, n, n, -0.7, 0.7);
    model.B = random_matrix(rng, n, nu);
    model.C = Eigen::MatrixXd::Identity(n, n);
    model.ts = 0.1;

    mpc::CostSpec cost;
    Eigen::MatrixXd Mq = random_matrix(rng, n, n);
    cost.Q = Mq * Mq.transpose();
    Eigen::MatrixXd Mr = random_matrix(rng, nu, nu);
    cost.R = Mr * Mr.transpose() + 0.1 * Eigen::MatrixXd::Identity(nu, nu);
    Eigen::MatrixXd Mp = random_matrix(rng, n, n);
    cost.P = Mp * Mp.transpose();

    const int rows = 1 + static_cast<int>(rng.next_below(3));
    mpc::StageConstraint con;
    con.E = random_matrix(rng, rows, n);
    con.F = random_matrix(rng, rows, nu);
    con.c = random_matrix(rng, rows, 1);

    const auto pred = mpc::build_prediction(model, N);
    const auto cc = mpc::build_cost(pred, cost);
    const auto condensed = mpc::build_trajectory_constraints(con, pred);

    const Eigen::VectorXd x0 = random_matrix(rng, n, 1);
    const Eigen::MatrixXd u_cols = random_matrix(rng, nu, N);
    const Eigen::VectorXd u =
        Eigen::Map<const Eigen::VectorXd>(u_cols.data(), nu * N);

    // Rollout oracle.
    std::vector<Eigen::VectorXd> xs{x0};
    for (int k = 0; k < N; ++k)
      xs.push_back(model.A * xs.back() + model.B * u_cols.col(k));

    const Eigen::VectorXd stacked = pred.Phi * x0 + pred.Gamma * u;
    for (int k = 1; k <= N; ++k)
      worst = std::max(worst, (stacked.segment((k - 1) * n, n) - xs[k])
                                  .lpNorm<Eigen::Infinity>());

    double direct = 0.0;
    for (int k = 1; k < N; ++k) direct += 0.5 * xs[k].dot(cost.Q * xs[k]);
    direct += 0.5 * xs[N].dot(cost.P * xs[N]);
    for (int k = 0; k < N; ++k)
      direct += 0.5 * u_cols.col(k).dot(cost.R * u_cols.col(k));
    const double condensed_cost = 0.5 * u.dot(cc.H * u) +
                                  x0.dot(cc.G.transpose() * u) +
                                  0.5 * x0.dot(cc.const_quad * x0);
    worst = std::max(worst, std::abs(condensed_cost - direct) /
                                std::max(1.0, std::abs(direct)));

    const Eigen::VectorXd lhs = condensed.Gc * u - condensed.wc -
                                condensed.Lc * x0;
    for (int k = 0; k < N; ++k) {
      const Eigen::VectorXd stage =
          con.E * xs[k] + con.F * u_cols.col(k) - con.c;
      worst = std::max(worst, (lhs.segment(k * rows, rows) - stage)
                                  .lpNorm<Eigen::Infinity>());
    }
  }
  const double elapsed = seconds_since(t0);
  std::ostringstream os;
  os << "worst residual " << worst << ", " << elapsed << " s";
  detail = os.str();
  return worst <= 1e-9 && elapsed < 30.0;
}

// ---------------------------------------------------------------------------
// 2. QP solver against the active-set enumeration oracle.
// ---------------------------------------------------------------------------
double enumerate_qp_objective(const numerics::QpProblem& p, bool& found) {
  const Eigen::Index n = p.num_vars();
  const Eigen::Index m = p.num_ineq();
  double best = 0.0;
  found = false;
  for (unsigned mask = 0; mask < (1u << m); ++mask) {
    std::vector<int> act;
    for (Eigen::Index i = 0; i < m; ++i)
      if (mask & (1u << i)) act.push_back(static_cast<int>(i));
    const Eigen::Index w = static_cast<Eigen::Index>(act.size());
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + w, n + w);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + w);
    kkt.topLeftCorner(n, n) = 0.5 * (p.H + p.H.transpose());
    rhs.head(n) = -p.f;
    for (Eigen::Index i = 0; i < w; ++i) {
      kkt.block(n + i, 0, 1, n) = p.A_ineq.row(act[i]);
      kkt.block(0, n + i, n, 1) = p.A_ineq.row(act[i]).transpose();
      rhs[n + i] = p.b_ineq[act[i]];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    if (!lu.isInvertible()) continue;
    const Eigen::VectorXd sol = lu.solve(rhs);
    bool ok = true;
    for (Eigen::Index i = 0; i < w; ++i)
      if (sol[n + i] < -1e-9) ok = false;
    if (!ok) continue;
    const Eigen::VectorXd x = sol.head(n);
    if (m > 0 && (p.A_ineq * x - p.b_ineq).maxCoeff() > 1e-8) continue;
    const double obj =
        0.5 * x.dot(0.5 * (p.H + p.H.transpose()) * x) + p.f.dot(x);
    if (!found || obj < best) best = obj;
    found = true;
  }
  return best;
}

bool criterion_qp(std::string& detail) {
  SplitMix64 rng(777);
  double worst_gap = 0.0, worst_kkt = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 1 + static_cast<int>(rng.next_below(6));
    const int m = 1 + static_cast<int>(rng.next_below(8));
    numerics::QpProblem p;
    Eigen::MatrixXd M = random_matrix(rng, n, n);
    p.H = M * M.transpose() + 0.5 * Eigen::MatrixXd::Identity(n, n);
    p.f = random_matrix(rng, n, 1, -2, 2);
    const Eigen::VectorXd interior = random_matrix(rng, n, 1);
    p.A_ineq = random_matrix(rng, m, n);
    p.b_ineq.resize(m);
    for (int i = 0; i < m; ++i)
      p.b_ineq[i] = p.A_ineq.row(i).dot(interior) + rng.next_in(0.01, 1.0);
    p.A_eq.resize(0, n);
    p.b_eq.resize(0);

    bool found = false;
    const double oracle = enumerate_qp_objective(p, found);
    const auto sol = numerics::solve_qp(p);
    if (sol.status != numerics::QpStatus::kOptimal || !found) {
      detail = "solver or oracle failed on trial " + std::to_string(trial);
      return false;
    }
    worst_gap = std::max(worst_gap, std::abs(sol.objective - oracle) /
                                        std::max(1.0, std::abs(oracle)));
    const Eigen::VectorXd grad = 0.5 * (p.H + p.H.transpose()) * sol.x +
                                 p.f +
                                 p.A_ineq.transpose() * sol.ineq_multipliers;
    worst_kkt = std::max(worst_kkt, grad.lpNorm<Eigen::Infinity>());
    worst_kkt = std::max(worst_kkt, (p.A_ineq * sol.x - p.b_ineq).maxCoeff());
    worst_kkt = std::max(worst_kkt, -sol.ineq_multipliers.minCoeff());
  }
  std::ostringstream os;
  os << "objective gap " << worst_gap << ", KKT residual " << worst_kkt;
  detail = os.str();
  return worst_gap <= 1e-6 && worst_kkt <= 1e-6;
}

// ---------------------------------------------------------------------------
// 3. Integrator convergence orders and quadrature exactness.
// ---------------------------------------------------------------------------
bool criterion_integrators(std::string& detail) {
  const numerics::VectorField decay = [](double, const Eigen::VectorXd& x) {
    return Eigen::VectorXd(-x);
  };
  Eigen::VectorXd one(1);
  one << 1.0;
  const double exact = std::exp(-1.0);

  const auto order_of = [&](auto integrate, int levels) {
    double prev = std::abs(integrate(0.1, 10) - exact);
    double sum = 0.0;
    for (int i = 1; i <= levels; ++i) {
      const double err =
          std::abs(integrate(0.1 / std::pow(2, i), 10 << i) - exact);
      sum += std::log2(prev / err);
      prev = err;
    }
    return sum / levels;
  };
  const double euler_order = order_of(
      [&](double h, int n) {
        return numerics::euler_explicit(decay, 0, one, h, n).final_state()[0];
      },
      4);
  const double rk4_order = order_of(
      [&](double h, int n) {
        return numerics::rk4(decay, 0, one, h, n).final_state()[0];
      },
      3);

  // Simpson exactness on degree-3 polynomials.
  double simpson_err = 0.0;
  const double c[4] = {0.7, -1.3, 2.1, 0.4};
  for (int n_samples : {5, 11, 41}) {
    std::vector<double> samples(n_samples);
    const double h = 2.0 / (n_samples - 1);
    for (int i = 0; i < n_samples; ++i) {
      const double t = i * h;
      samples[i] = c[0] + t * (c[1] + t * (c[2] + t * c[3]));
    }
    const double exact_poly =
        c[0] * 2 + c[1] * 2 + c[2] * 8.0 / 3 + c[3] * 4.0;
    simpson_err = std::max(
        simpson_err, std::abs(numerics::quad_simpson(samples, h) - exact_poly));
  }

  const auto rk45 = numerics::rk45_adaptive(decay, 0.0, one, 1.0, 1e-8, 1e-10);
  const double rk45_err = std::abs(rk45.final_state()[0] - exact);

  std::ostringstream os;
  os << "Euler order " << euler_order << ", RK4 order " << rk4_order
     << ", Simpson err " << simpson_err << ", RK45 err " << rk45_err;
  detail = os.str();
  return std::abs(euler_order - 1.0) <= 0.15 &&
         std::abs(rk4_order - 4.0) <= 0.15 && simpson_err <= 1e-12 &&
         rk45_err <= 1e-6;
}

// ---------------------------------------------------------------------------
// 4. RHC gain against the backward Riccati recursion.
// ---------------------------------------------------------------------------
Eigen::MatrixXd riccati_gain(const mpc::DiscreteModel& m,
                             const mpc::CostSpec& cost, int horizon) {
  Eigen::MatrixXd P = cost.P;
  Eigen::MatrixXd K;
  for (int k = horizon - 1; k >= 0; --k) {
    const Eigen::MatrixXd BtPB = cost.R + m.B.transpose() * P * m.B;
    const Eigen::MatrixXd BtPA = m.B.transpose() * P * m.A;
    K = BtPB.ldlt().solve(BtPA);
    P = cost.Q + m.A.transpose() * P * (m.A - m.B * K);
    P = (0.5 * (P + P.transpose())).eval();
  }
  return K;
}

bool criterion_rhc(std::string& detail) {
  double worst = 0.0;
  {
    const auto lin =
        crane::linearize(crane::CraneParams{}, crane::CraneState{});
    const auto model = mpc::discretize_zoh(lin.A, lin.B, 0.05);
    mpc::CostSpec cost;
    cost.Q = Eigen::MatrixXd::Identity(8, 8);
    cost.R = Eigen::MatrixXd::Identity(2, 2);
    cost.P = Eigen::MatrixXd::Identity(8, 8);
    const auto K = mpc::unconstrained_rhc_gain(model, cost, 100);
    worst = (K - riccati_gain(model, cost, 100)).cwiseAbs().maxCoeff();
  }
  SplitMix64 rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + static_cast<int>(rng.next_below(4));
    const int nu = 1 + static_cast<int>(rng.next_below(2));
    mpc::DiscreteModel m;
    m.A = random_matrix(rng, n, n, -0.6, 0.6);
    const auto eigenvalues = m.A.eigenvalues();
    double rho = 0.0;
    for (Eigen::Index i = 0; i < eigenvalues.size(); ++i)
      rho = std::max(rho, std::abs(eigenvalues[i]));
    if (rho > 0.95) m.A *= 0.95 / rho;
    m.B = random_matrix(rng, n, nu);
    m.C = Eigen::MatrixXd::Identity(n, n);
    m.ts = 0.1;
    mpc::CostSpec cost;
    cost.Q = Eigen::MatrixXd::Identity(n, n);
    cost.R = Eigen::MatrixXd::Identity(nu, nu);
    cost.P = Eigen::MatrixXd::Identity(n, n);
    const auto K = mpc::unconstrained_rhc_gain(m, cost, 100);
    worst = std::max(
        worst, (K - riccati_gain(m, cost, 100)).cwiseAbs().maxCoeff());
  }
  std::ostringstream os;
  os << "worst gain gap " << worst;
  detail = os.str();
  return worst <= 1e-6;
}

// ---------------------------------------------------------------------------
// 5 and 6. End-to-end reference controllers on the default testcases.
// ---------------------------------------------------------------------------
struct EndToEnd {
  bool completed = false;
  double wall = 0.0;
  int region_violations = 0;
};

EndToEnd run_reference(const std::string& controller, testcases::Family family,
                       Eigen::Vector2d disturbance = {0, 0}) {
  const auto tc = testcases::default_testcase(family);
  const auto t0 = Clock::now();
  const auto hooks = controllers::make_controller(
      controllers::corpus_config(controller), testcases::public_view(tc));
  harness::SimulateOptions options;
  options.input_disturbance = disturbance;
  const auto traj = harness::simulate(tc, hooks, options);
  EndToEnd result;
  result.wall = seconds_since(t0);
  const auto grade = grading::grade_testcase(traj, tc);
  result.completed = grade.report.overall_ok;
  for (const auto& v : grade.violations)
    if (v.kind == grading::ViolationKind::kRegion) ++result.region_violations;
  return result;
}

bool criterion_end_to_end(std::string& detail) {
  const auto wedge = run_reference("linear_hard", testcases::Family::kWedge);
  const auto edge =
      run_reference("linear_hard", testcases::Family::kEdgeCircles);
  const auto ellipse =
      run_reference("nmpc_rti", testcases::Family::kRegionEllipses);
  std::ostringstream os;
  os << "linear_hard wedge " << (wedge.completed ? "completed" : "FAILED")
     << " (" << wedge.wall << " s), edge "
     << (edge.completed ? "completed" : "FAILED") << " (" << edge.wall
     << " s), nmpc_rti ellipses "
     << (ellipse.completed ? "completed" : "FAILED") << " (" << ellipse.wall
     << " s)";
  detail = os.str();
  return wedge.completed && edge.completed && ellipse.completed &&
         wedge.wall < 60.0 && edge.wall < 60.0 && ellipse.wall < 60.0;
}

bool criterion_negative_control(std::string& detail) {
  const auto lqr =
      run_reference("lqr_unconstrained", testcases::Family::kWedge);
  std::ostringstream os;
  os << lqr.region_violations << " region violations detected";
  detail = os.str();
  return lqr.region_violations >= 1;
}

// ---------------------------------------------------------------------------
// 7. Suite generation determinism, coverage and feasibility.
// ---------------------------------------------------------------------------
bool criterion_suite_generation(std::string& detail) {
  testcases::SuiteSpec spec;
  spec.seed = 0;
  spec.count = 32;
  const auto a = testcases::generate_suite(spec);
  const auto b = testcases::generate_suite(spec);
  const std::string bytes_a = json_io::suite_to_json(a, spec).dump();
  const std::string bytes_b = json_io::suite_to_json(b, spec).dump();
  if (bytes_a != bytes_b) {
    detail = "suite generation is not byte-deterministic";
    return false;
  }
  if (a.size() < 30) {
    detail = "suite has fewer than 30 testcases";
    return false;
  }
  std::map<std::string, int> class_counts;
  int feasible = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    std::string why;
    if (testcases::validate(a[i], &why)) ++feasible;
    if (i == 0) continue;
    const std::string& name = a[i].name;
    class_counts[name.substr(0, name.rfind('-'))]++;
  }
  bool classes_ok = class_counts.size() == 4;
  for (const auto& [cls, count] : class_counts)
    if (count < 5) classes_ok = false;
  std::ostringstream os;
  os << a.size() << " testcases, " << feasible << " feasible, classes:";
  for (const auto& [cls, count] : class_counts)
    os << " " << cls << "=" << count;
  detail = os.str();
  return classes_ok && feasible == static_cast<int>(a.size());
}

// ---------------------------------------------------------------------------
// 8. Robustness battery through the CLI with the adversary plugin.
// ---------------------------------------------------------------------------
int run_command(const std::string& command) {
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

bool criterion_robustness(std::string& detail) {
  namespace fs = std::filesystem;
  const fs::path work = "/tmp/cranebench_acceptance_battery";
  fs::remove_all(work);
  fs::create_directories(work);

  // One-testcase suite file (the wedge default).
  testcases::SuiteSpec spec;
  spec.count = 1;
  const auto suite = testcases::generate_suite(spec);
  const auto suite_path = (work / "suite.json").string();
  json_io::save_json(json_io::suite_to_json(suite, spec), suite_path);

  struct Case {
    const char* mode;
    int expected_level;  // 0: no error events expected
  };
  const Case battery[] = {
      {"throws", 1},   {"nan", 2},   {"wrong_dim", 2},      {"huge", 3},
      {"infinite_loop", 4}, {"slow", 0}, {"empty", 2},      {"stateful", 1},
  };

  std::ostringstream os;
  bool all_ok = true;
  for (const auto& c : battery) {
    setenv("CRANEBENCH_ADVERSARY_MODE", c.mode, 1);
    const auto out_dir = work / c.mode;
    const double watchdog = std::string(c.mode) == "infinite_loop" ? 2.0 : 60.0;
    const int code = run_command(
        std::string(CRANEBENCH_CLI_PATH) + " grade --suite " + suite_path +
        " --controller " + CRANEBENCH_ADVERSARY_PLUGIN_PATH +
        " --watchdog-secs " + std::to_string(watchdog) + " --out " +
        out_dir.string() + " > /dev/null 2>&1");
    bool case_ok = code == 0;

    // The recorded events surface in the violation listing as
    // "level N: ..." details.
    std::ifstream in(out_dir / suite[0].name / "violations.json");
    std::string content((std::istreambuf_iterator<char>(in)),
                        std::istreambuf_iterator<char>());
    if (c.expected_level == 0) {
      case_ok = case_ok && content.find("runtime_error") == std::string::npos;
    } else {
      const std::string needle =
          "level " + std::to_string(c.expected_level) + ":";
      case_ok = case_ok && content.find(needle) != std::string::npos;
    }
    os << c.mode << (case_ok ? " ok; " : " FAILED; ");
    all_ok = all_ok && case_ok;
  }
  unsetenv("CRANEBENCH_ADVERSARY_MODE");
  detail = os.str();
  return all_ok;
}

// ---------------------------------------------------------------------------
// 9. Offset-free disturbance rejection, binary outcome.
// ---------------------------------------------------------------------------
bool criterion_offset_free(std::string& detail) {
  const auto tc = testcases::default_testcase(testcases::Family::kWedge);
  const auto final_error = [&](const std::string& name) {
    const auto hooks = controllers::make_controller(
        controllers::corpus_config(name), testcases::public_view(tc));
    harness::SimulateOptions options;
    options.input_disturbance = {0.05, 0.05};
    const auto traj = harness::simulate(tc, hooks, options);
    const auto& s = traj.true_states.back();
    return std::max(std::abs(s.x - tc.target.x()),
                    std::abs(s.y - tc.target.y()));
  };
  const double with_estimator = final_error("offset_free");
  const double without = final_error("linear_hard");
  std::ostringstream os;
  os << "offset_free error " << with_estimator << ", linear_hard error "
     << without << " (eps_t " << tc.eps_t << ")";
  detail = os.str();
  return with_estimator <= tc.eps_t && without > tc.eps_t;
}

// ---------------------------------------------------------------------------
// 10. Grading against independently coded brute-force evaluators.
// ---------------------------------------------------------------------------
bool oracle_rect(const regions::Rect& r, double px, double py) {
  const double c = std::cos(r.rotation), s = std::sin(r.rotation);
  const double lx = c * (px - r.center.x()) + s * (py - r.center.y());
  const double ly = -s * (px - r.center.x()) + c * (py - r.center.y());
  return std::abs(lx) <= r.half_widths.x() + 1e-12 &&
         std::abs(ly) <= r.half_widths.y() + 1e-12;
}

bool oracle_in_region(const regions::Region& region, double px, double py) {
  if (const auto* sr = std::get_if<regions::SingleRect>(&region))
    return oracle_rect(sr->rect, px, py);
  if (const auto* w = std::get_if<regions::WedgeUnion>(&region))
    return oracle_rect(w->first, px, py) || oracle_rect(w->second, px, py);
  const auto& rm = std::get<regions::RectMinusObstacles>(region);
  if (!oracle_rect(rm.rect, px, py)) return false;
  for (const auto& e : rm.obstacles) {
    const double c = std::cos(e.rotation), s = std::sin(e.rotation);
    const double dx = px - e.center.x(), dy = py - e.center.y();
    const double u = (c * dx + s * dy) / e.semi_axes.x();
    const double v = (-s * dx + c * dy) / e.semi_axes.y();
    if (u * u + v * v < 1.0 - 1e-12) return false;
  }
  return true;
}

bool criterion_grading_oracle(std::string& detail) {
  SplitMix64 rng(31337);
  const auto wedge = testcases::default_testcase(testcases::Family::kWedge);
  const auto ellipses =
      testcases::default_testcase(testcases::Family::kRegionEllipses);
  int disagreements = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    testcases::Testcase tc = (trial % 2 == 0) ? wedge : ellipses;
    tc.T_f = 0.5;  // 11 samples per trajectory
    const int rows = tc.num_samples() + 1;
    harness::Trajectory traj;
    traj.measurements = Eigen::MatrixXd::Zero(rows, 4);
    traj.estimates = Eigen::MatrixXd::Zero(rows, 8);
    traj.references = Eigen::MatrixXd::Zero(rows, 8);
    traj.inputs = Eigen::MatrixXd::Zero(rows, 2);
    traj.solver_time_per_sample.assign(rows, 0.0);
    for (int k = 0; k < rows; ++k) {
      traj.times.push_back(k * tc.ts);
      crane::CraneState s;
      s.x = rng.next_in(-0.2, 2.2);
      s.y = rng.next_in(-0.2, 1.4);
      s.xdot = rng.next_in(-0.5, 0.5);
      s.ydot = rng.next_in(-0.5, 0.5);
      s.theta = rng.next_in(-0.3, 0.3);
      s.thetadot = rng.next_in(-0.5, 0.5);
      s.psi = rng.next_in(-0.3, 0.3);
      s.psidot = rng.next_in(-0.5, 0.5);
      traj.true_states.push_back(s);
      traj.inputs(k, 0) = rng.next_in(-1.3, 1.3);
      traj.inputs(k, 1) = rng.next_in(-1.3, 1.3);
    }
    if (trial % 9 == 0) {
      auto& s = traj.true_states.back();
      s = crane::CraneState{};
      s.x = tc.target.x();
      s.y = tc.target.y();
      traj.inputs.row(rows - 1).setZero();
    }
    const auto params = crane::perturb_params(tc.nominal_params,
                                              tc.param_perturbation, tc.seed);

    // Independent equilibrium evaluation.
    const auto& last = traj.true_states.back();
    bool eq_oracle = true;
    const double px =
        last.x + params.cable_length * std::sin(last.theta);
    const double py = last.y + params.cable_length * std::sin(last.psi);
    if (std::abs(last.x - tc.target.x()) > tc.eps_t) eq_oracle = false;
    if (std::abs(last.y - tc.target.y()) > tc.eps_t) eq_oracle = false;
    if (std::abs(px - tc.target.x()) > tc.eps_t) eq_oracle = false;
    if (std::abs(py - tc.target.y()) > tc.eps_t) eq_oracle = false;
    if (std::max(std::abs(last.xdot), std::abs(last.ydot)) > tc.eps_r)
      eq_oracle = false;
    if (std::max(std::abs(last.thetadot), std::abs(last.psidot)) > tc.eps_r)
      eq_oracle = false;
    if (traj.inputs.row(rows - 1).cwiseAbs().maxCoeff() > tc.eps_r)
      eq_oracle = false;
    const bool eq =
        grading::check_equilibrium(traj, tc, params).ok;
    if (eq != eq_oracle) ++disagreements;

    // Independent excursion counting.
    int cart_oracle = 0, payload_oracle = 0, input_oracle = 0;
    bool in_cart = false, in_payload = false, in_input = false;
    for (int k = 0; k < rows; ++k) {
      const auto& s = traj.true_states[k];
      const bool cart_out = !oracle_in_region(tc.region, s.x, s.y);
      const double ppx = s.x + params.cable_length * std::sin(s.theta);
      const double ppy = s.y + params.cable_length * std::sin(s.psi);
      const bool payload_out = !oracle_in_region(tc.region, ppx, ppy);
      const bool input_out =
          traj.inputs.row(k).cwiseAbs().maxCoeff() > 1.0;
      if (cart_out && !in_cart) ++cart_oracle;
      if (payload_out && !in_payload) ++payload_oracle;
      if (input_out && !in_input) ++input_oracle;
      in_cart = cart_out;
      in_payload = payload_out;
      in_input = input_out;
    }
    int cart = 0, payload = 0, input = 0;
    for (const auto& v : grading::detect_violations(traj, tc)) {
      if (v.kind == grading::ViolationKind::kRegion &&
          v.subject == grading::Subject::kCart)
        ++cart;
      if (v.kind == grading::ViolationKind::kRegion &&
          v.subject == grading::Subject::kPayload)
        ++payload;
      if (v.kind == grading::ViolationKind::kInputInterval) ++input;
    }
    if (cart != cart_oracle || payload != payload_oracle ||
        input != input_oracle)
      ++disagreements;
  }
  detail = std::to_string(disagreements) + " disagreements over 10000";
  return disagreements == 0;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    bool (*run)(std::string&);
  };
  const Criterion criteria[] = {
      {"1 matrix builders vs rollout oracles", criterion_matrix_oracles},
      {"2 QP vs active-set enumeration", criterion_qp},
      {"3 integrator orders and quadrature", criterion_integrators},
      {"4 RHC gain vs backward Riccati", criterion_rhc},
      {"5 reference controllers complete the defaults", criterion_end_to_end},
      {"6 negative control detects region breaches",
       criterion_negative_control},
      {"7 suite generation determinism and coverage",
       criterion_suite_generation},
      {"8 robustness battery via the CLI", criterion_robustness},
      {"9 offset-free disturbance rejection", criterion_offset_free},
      {"10 grading vs brute-force evaluators", criterion_grading_oracle},
  };

  int failures = 0;
  for (const auto& criterion : criteria) {
    std::string detail;
    bool ok = false;
    try {
      ok = criterion.run(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    std::printf("[%s] criterion %s: %s\n", ok ? "PASS" : "FAIL",
                criterion.name, detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
  }
  return failures;
}
