#pragma once

#include <Eigen/Dense>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cranebench::numerics {

using VectorField =
    std::function<Eigen::VectorXd(double t, const Eigen::VectorXd& x)>;

/// Thrown when an integrator produces a non-finite state or its inner
/// iteration fails. step_index is the step at which integration broke down.
class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, int step_index)
      : std::runtime_error(what), step_index(step_index) {}
  int step_index;
};

struct IntegratorResult {
  std::vector<double> times;  // strictly increasing, times[0] = t0
  Eigen::MatrixXd states;     // one row per time
  int step_count = 0;
  int rejected_step_count = 0;  // adaptive methods only

  Eigen::VectorXd final_state() const { return states.row(states.rows() - 1); }
};

IntegratorResult euler_explicit(const VectorField& f, double t0,
                                const Eigen::VectorXd& x0, double h,
                                int n_steps);

// Each step solves x_{k+1} = x_k + h f(t_{k+1}, x_{k+1}) by Newton with a
// finite-difference Jacobian, falling back to damped fixed-point iteration.
IntegratorResult euler_implicit(const VectorField& f, double t0,
                                const Eigen::VectorXd& x0, double h,
                                int n_steps);

IntegratorResult rk4(const VectorField& f, double t0, const Eigen::VectorXd& x0,
                     double h, int n_steps);

// Embedded Dormand-Prince 4(5) pair with the standard PI-free step controller.
IntegratorResult rk45_adaptive(const VectorField& f, double t0,
                               const Eigen::VectorXd& x0, double t_end,
                               double rel_tol, double abs_tol);

// Single classical RK4 step, exposed for plant propagation in the harness.
Eigen::VectorXd rk4_step(const VectorField& f, double t,
                         const Eigen::VectorXd& x, double h);

}  // namespace cranebench::numerics
