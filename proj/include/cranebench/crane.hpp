#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace cranebench::crane {

// Physical parameters of the planar gantry crane, one identical drive per
// axis. The cable length is fixed.
struct CraneParams {
  double cart_mass = 1.2;       // kg
  double payload_mass = 0.5;    // kg
  double cable_length = 0.75;   // m
  double force_gain = 10.0;     // N per unit input, per axis
  double cart_friction = 0.5;   // N s/m, per axis
  double swing_damping = 0.01;  // N m s/rad
  double gravity = 9.81;        // m/s^2

  bool valid() const {
    return cart_mass > 0 && payload_mass > 0 && cable_length > 0 &&
           force_gain > 0 && cart_friction >= 0 && swing_damping >= 0 &&
           gravity > 0;
  }
};

// Cart position/velocity per axis plus the cable swing angle and its rate.
// theta swings in the x-z plane, psi in the y-z plane.
struct CraneState {
  double x = 0, xdot = 0;
  double y = 0, ydot = 0;
  double theta = 0, thetadot = 0;
  double psi = 0, psidot = 0;

  using Vector8 = Eigen::Matrix<double, 8, 1>;
  Vector8 vec() const {
    Vector8 v;
    v << x, xdot, y, ydot, theta, thetadot, psi, psidot;
    return v;
  }
  static CraneState from_vec(const Eigen::Ref<const Eigen::VectorXd>& v);
};

// State vector layout shared by the whole project.
enum StateIndex : int {
  kX = 0,
  kXdot = 1,
  kY = 2,
  kYdot = 3,
  kTheta = 4,
  kThetaDot = 5,
  kPsi = 6,
  kPsiDot = 7,
};

struct ControlInput {
  double ux = 0;
  double uy = 0;
  Eigen::Vector2d vec() const { return {ux, uy}; }
};

// Time derivative of the 8-state model. Each axis is a planar pendulum on a
// driven cart; the two axes are decoupled:
//   (M+m) a'' + m l phi'' cos(phi) - m l phi'^2 sin(phi) = k u - c a'
//   l phi'' + a'' cos(phi) + g sin(phi) = -(c_th / (m l)) phi'
// solved per axis as a 2x2 linear system for (a'', phi'').
CraneState::Vector8 dynamics(const CraneState& state, const ControlInput& input,
                             const CraneParams& params);

// Payload position projected onto the plan view: p = cart + l sin(angle).
Eigen::Vector2d payload_position(const CraneState& state,
                                 const CraneParams& params);

struct LinearModel {
  Eigen::Matrix<double, 8, 8> A;
  Eigen::Matrix<double, 8, 2> B;
  Eigen::Matrix<double, 4, 8> C;  // measured outputs: x, y, theta, psi
};

// Analytic Jacobians of dynamics() at (operating_point, u = 0).
LinearModel linearize(const CraneParams& params,
                      const CraneState& operating_point);

// Jacobians at a general (state, input) pair, for linearization along
// nonzero-input guess trajectories.
LinearModel linearize_at(const CraneParams& params, const CraneState& state,
                         const ControlInput& input);

// Multiplies every parameter except gravity by an independent factor drawn
// uniformly from [1 - magnitude, 1 + magnitude]; deterministic in the seed.
CraneParams perturb_params(const CraneParams& params, double magnitude,
                           std::uint64_t seed);

// Kinetic plus payload potential energy; used by dissipation checks.
double mechanical_energy(const CraneState& state, const CraneParams& params);

}  // namespace cranebench::crane
