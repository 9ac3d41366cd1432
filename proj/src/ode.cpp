#include "cranebench/ode.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace cranebench::numerics {

namespace {

void check_step_args(double h, int n_steps) {
  if (!(h > 0.0)) throw std::invalid_argument("step size must be positive");
  if (n_steps < 1) throw std::invalid_argument("n_steps must be >= 1");
}

void store_row(Eigen::MatrixXd& states, int row, const Eigen::VectorXd& x) {
  states.row(row) = x.transpose();
}

void require_finite(const Eigen::VectorXd& x, int step) {
  if (!x.allFinite())
    throw IntegrationError("non-finite state at step " + std::to_string(step),
                           step);
}

}  // namespace

IntegratorResult euler_explicit(const VectorField& f, double t0,
                                const Eigen::VectorXd& x0, double h,
                                int n_steps) {
  check_step_args(h, n_steps);
  IntegratorResult res;
  res.times.resize(n_steps + 1);
  res.states.resize(n_steps + 1, x0.size());
  res.times[0] = t0;
  store_row(res.states, 0, x0);
  Eigen::VectorXd x = x0;
  for (int k = 0; k < n_steps; ++k) {
    const double t = t0 + k * h;
    x += h * f(t, x);
    require_finite(x, k);
    res.times[k + 1] = t0 + (k + 1) * h;
    store_row(res.states, k + 1, x);
  }
  res.step_count = n_steps;
  return res;
}

namespace {

// Solve g(z) = z - x - h f(t, z) = 0 for one implicit Euler step.
Eigen::VectorXd implicit_step(const VectorField& f, double t,
                              const Eigen::VectorXd& x, double h, int step) {
  constexpr double kTol = 1e-10;
  constexpr int kMaxIter = 100;
  const Eigen::Index n = x.size();

  Eigen::VectorXd z = x + h * f(t, x);  // explicit predictor
  for (int it = 0; it < kMaxIter; ++it) {
    const Eigen::VectorXd g = z - x - h * f(t, z);
    if (g.lpNorm<Eigen::Infinity>() <= kTol) return z;

    // Finite-difference Jacobian of g at z.
    Eigen::MatrixXd J(n, n);
    const Eigen::VectorXd fz = f(t, z);
    for (Eigen::Index j = 0; j < n; ++j) {
      const double dz = 1e-7 * std::max(1.0, std::abs(z[j]));
      Eigen::VectorXd zp = z;
      zp[j] += dz;
      J.col(j) = -h * (f(t, zp) - fz) / dz;
      J(j, j) += 1.0;
    }

    Eigen::PartialPivLU<Eigen::MatrixXd> lu(J);
    Eigen::VectorXd dz = lu.solve(-g);
    if (!dz.allFinite()) {
      // Singular Newton system; damped fixed-point fallback.
      dz = -0.5 * g;
    }
    z += dz;
    if (!z.allFinite())
      throw IntegrationError("implicit Euler iterate diverged", step);
  }
  throw IntegrationError("implicit Euler inner iteration did not converge",
                         step);
}

}  // namespace

IntegratorResult euler_implicit(const VectorField& f, double t0,
                                const Eigen::VectorXd& x0, double h,
                                int n_steps) {
  check_step_args(h, n_steps);
  IntegratorResult res;
  res.times.resize(n_steps + 1);
  res.states.resize(n_steps + 1, x0.size());
  res.times[0] = t0;
  store_row(res.states, 0, x0);
  Eigen::VectorXd x = x0;
  for (int k = 0; k < n_steps; ++k) {
    x = implicit_step(f, t0 + (k + 1) * h, x, h, k);
    require_finite(x, k);
    res.times[k + 1] = t0 + (k + 1) * h;
    store_row(res.states, k + 1, x);
  }
  res.step_count = n_steps;
  return res;
}

Eigen::VectorXd rk4_step(const VectorField& f, double t,
                         const Eigen::VectorXd& x, double h) {
  const Eigen::VectorXd k1 = f(t, x);
  const Eigen::VectorXd k2 = f(t + 0.5 * h, x + 0.5 * h * k1);
  const Eigen::VectorXd k3 = f(t + 0.5 * h, x + 0.5 * h * k2);
  const Eigen::VectorXd k4 = f(t + h, x + h * k3);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

IntegratorResult rk4(const VectorField& f, double t0, const Eigen::VectorXd& x0,
                     double h, int n_steps) {
  check_step_args(h, n_steps);
  IntegratorResult res;
  res.times.resize(n_steps + 1);
  res.states.resize(n_steps + 1, x0.size());
  res.times[0] = t0;
  store_row(res.states, 0, x0);
  Eigen::VectorXd x = x0;
  for (int k = 0; k < n_steps; ++k) {
    x = rk4_step(f, t0 + k * h, x, h);
    require_finite(x, k);
    res.times[k + 1] = t0 + (k + 1) * h;
    store_row(res.states, k + 1, x);
  }
  res.step_count = n_steps;
  return res;
}

IntegratorResult rk45_adaptive(const VectorField& f, double t0,
                               const Eigen::VectorXd& x0, double t_end,
                               double rel_tol, double abs_tol) {
  if (!(t_end > t0)) throw std::invalid_argument("t_end must exceed t0");
  if (!(rel_tol > 0.0) || !(abs_tol > 0.0))
    throw std::invalid_argument("tolerances must be positive");

  // Dormand-Prince 5(4) tableau.
  static const double c[7] = {0.0,     1.0 / 5, 3.0 / 10, 4.0 / 5,
                              8.0 / 9, 1.0,     1.0};
  static const double a[7][6] = {
      {},
      {1.0 / 5},
      {3.0 / 40, 9.0 / 40},
      {44.0 / 45, -56.0 / 15, 32.0 / 9},
      {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
      {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176,
       -5103.0 / 18656},
      {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84}};
  // 5th order solution weights (= a[6]); 4th order weights for the error.
  static const double b4[7] = {5179.0 / 57600, 0.0,           7571.0 / 16695,
                               393.0 / 640,    -92097.0 / 339200,
                               187.0 / 2100,   1.0 / 40};

  const Eigen::Index n = x0.size();
  const double span = t_end - t0;
  const double h_min = 1e-12 * span;

  IntegratorResult res;
  res.times.push_back(t0);
  std::vector<Eigen::VectorXd> rows{x0};

  Eigen::VectorXd x = x0;
  double t = t0;
  double h = span / 100.0;

  std::array<Eigen::VectorXd, 7> k;
  k[0] = f(t, x);  // FSAL

  while (t < t_end - 1e-14 * span) {
    h = std::min(h, t_end - t);
    for (int i = 1; i < 7; ++i) {
      Eigen::VectorXd xi = x;
      for (int j = 0; j < i; ++j) xi += h * a[i][j] * k[j];
      k[i] = f(t + c[i] * h, xi);
    }
    Eigen::VectorXd x5 = x;
    for (int j = 0; j < 6; ++j) x5 += h * a[6][j] * k[j];
    Eigen::VectorXd x4 = x;
    for (int j = 0; j < 7; ++j) x4 += h * b4[j] * k[j];

    // Scaled error norm; accept when <= 1.
    double err = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double sc =
          abs_tol + rel_tol * std::max(std::abs(x[i]), std::abs(x5[i]));
      err = std::max(err, std::abs(x5[i] - x4[i]) / sc);
    }

    if (err <= 1.0 || h <= h_min) {
      t += h;
      x = x5;
      require_finite(x, res.step_count);
      res.times.push_back(t);
      rows.push_back(x);
      ++res.step_count;
      k[0] = k[6];  // FSAL: k7 of the accepted step is k1 of the next
    } else {
      ++res.rejected_step_count;
    }

    const double factor =
        (err > 0.0) ? 0.9 * std::pow(err, -0.2) : 5.0;
    h *= std::clamp(factor, 0.2, 5.0);
    if (h < h_min && t < t_end - 1e-14 * span)
      throw IntegrationError("rk45 step size underflow", res.step_count);
  }

  res.states.resize(static_cast<Eigen::Index>(rows.size()), n);
  for (size_t i = 0; i < rows.size(); ++i)
    res.states.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  res.times.back() = t_end;  // clamp rounding residue, within 1e-12
  return res;
}

}  // namespace cranebench::numerics
