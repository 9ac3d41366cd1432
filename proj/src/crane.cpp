#include "cranebench/crane.hpp"

#include <cmath>
#include <stdexcept>

#include "cranebench/rng.hpp"

namespace cranebench::crane {

CraneState CraneState::from_vec(const Eigen::Ref<const Eigen::VectorXd>& v) {
  if (v.size() != 8)
    throw std::invalid_argument("crane state vector must have 8 entries");
  CraneState s;
  s.x = v[kX];
  s.xdot = v[kXdot];
  s.y = v[kY];
  s.ydot = v[kYdot];
  s.theta = v[kTheta];
  s.thetadot = v[kThetaDot];
  s.psi = v[kPsi];
  s.psidot = v[kPsiDot];
  return s;
}

namespace {

// Accelerations (a'', phi'') of one cart/pendulum axis.
Eigen::Vector2d axis_accelerations(double adot, double phi, double phidot,
                                   double u, const CraneParams& p) {
  const double mt = p.cart_mass + p.payload_mass;
  const double ml = p.payload_mass * p.cable_length;
  const double s = std::sin(phi);
  const double c = std::cos(phi);

  Eigen::Matrix2d mass;
  mass << mt, ml * c, c, p.cable_length;
  Eigen::Vector2d rhs;
  rhs << p.force_gain * u - p.cart_friction * adot + ml * phidot * phidot * s,
      -p.gravity * s - (p.swing_damping / ml) * phidot;
  return mass.inverse() * rhs;  // det = l (M + m sin^2 phi) > 0
}

}  // namespace

CraneState::Vector8 dynamics(const CraneState& state, const ControlInput& input,
                             const CraneParams& params) {
  if (!params.valid()) throw std::invalid_argument("invalid crane parameters");
  if (!state.vec().allFinite() || !std::isfinite(input.ux) ||
      !std::isfinite(input.uy))
    throw std::invalid_argument("crane dynamics given non-finite state/input");

  const Eigen::Vector2d ax =
      axis_accelerations(state.xdot, state.theta, state.thetadot, input.ux,
                         params);
  const Eigen::Vector2d ay =
      axis_accelerations(state.ydot, state.psi, state.psidot, input.uy, params);

  CraneState::Vector8 deriv;
  deriv[kX] = state.xdot;
  deriv[kXdot] = ax[0];
  deriv[kY] = state.ydot;
  deriv[kYdot] = ay[0];
  deriv[kTheta] = state.thetadot;
  deriv[kThetaDot] = ax[1];
  deriv[kPsi] = state.psidot;
  deriv[kPsiDot] = ay[1];
  return deriv;
}

Eigen::Vector2d payload_position(const CraneState& state,
                                 const CraneParams& params) {
  return {state.x + params.cable_length * std::sin(state.theta),
          state.y + params.cable_length * std::sin(state.psi)};
}

namespace {

// 2x2 Jacobian blocks of one axis: d(a'', phi'')/d(a', phi, phi', u).
// With M(phi) w = r(a', phi, phi', u), differentiating implicitly gives
// dw/dz = M^{-1} (dr/dz - dM/dphi w dphi/dz).
struct AxisJacobian {
  Eigen::Vector2d d_adot, d_phi, d_phidot, d_u;
};

AxisJacobian axis_jacobian(double adot, double phi, double phidot, double u,
                           const CraneParams& p) {
  const double mt = p.cart_mass + p.payload_mass;
  const double ml = p.payload_mass * p.cable_length;
  const double s = std::sin(phi);
  const double c = std::cos(phi);

  Eigen::Matrix2d mass;
  mass << mt, ml * c, c, p.cable_length;
  const Eigen::Matrix2d mass_inv = mass.inverse();

  Eigen::Vector2d rhs;
  rhs << p.force_gain * u - p.cart_friction * adot + ml * phidot * phidot * s,
      -p.gravity * s - (p.swing_damping / ml) * phidot;
  const Eigen::Vector2d w = mass_inv * rhs;

  Eigen::Matrix2d dmass_dphi;
  dmass_dphi << 0.0, -ml * s, -s, 0.0;

  AxisJacobian jac;
  jac.d_adot = mass_inv * Eigen::Vector2d(-p.cart_friction, 0.0);
  jac.d_phi = mass_inv * (Eigen::Vector2d(ml * phidot * phidot * c,
                                          -p.gravity * c) -
                          dmass_dphi * w);
  jac.d_phidot = mass_inv * Eigen::Vector2d(2.0 * ml * phidot * s,
                                            -p.swing_damping / ml);
  jac.d_u = mass_inv * Eigen::Vector2d(p.force_gain, 0.0);
  return jac;
}

}  // namespace

LinearModel linearize(const CraneParams& params,
                      const CraneState& operating_point) {
  return linearize_at(params, operating_point, ControlInput{});
}

LinearModel linearize_at(const CraneParams& params, const CraneState& state,
                         const ControlInput& input) {
  if (!params.valid()) throw std::invalid_argument("invalid crane parameters");
  if (std::abs(state.theta) >= M_PI / 2 || std::abs(state.psi) >= M_PI / 2)
    throw std::invalid_argument(
        "linearize requires swing angles within (-pi/2, pi/2)");

  LinearModel lin;
  lin.A.setZero();
  lin.B.setZero();
  lin.C.setZero();

  const AxisJacobian jx = axis_jacobian(state.xdot, state.theta,
                                        state.thetadot, input.ux, params);
  const AxisJacobian jy = axis_jacobian(state.ydot, state.psi, state.psidot,
                                        input.uy, params);

  const auto fill_axis = [&](int pos, int ang, const AxisJacobian& j, int ucol) {
    lin.A(pos, pos + 1) = 1.0;
    lin.A(ang, ang + 1) = 1.0;
    lin.A(pos + 1, pos + 1) = j.d_adot[0];
    lin.A(pos + 1, ang) = j.d_phi[0];
    lin.A(pos + 1, ang + 1) = j.d_phidot[0];
    lin.A(ang + 1, pos + 1) = j.d_adot[1];
    lin.A(ang + 1, ang) = j.d_phi[1];
    lin.A(ang + 1, ang + 1) = j.d_phidot[1];
    lin.B(pos + 1, ucol) = j.d_u[0];
    lin.B(ang + 1, ucol) = j.d_u[1];
  };
  fill_axis(kX, kTheta, jx, 0);
  fill_axis(kY, kPsi, jy, 1);

  lin.C(0, kX) = 1.0;
  lin.C(1, kY) = 1.0;
  lin.C(2, kTheta) = 1.0;
  lin.C(3, kPsi) = 1.0;
  return lin;
}

CraneParams perturb_params(const CraneParams& params, double magnitude,
                           std::uint64_t seed) {
  if (!(magnitude >= 0.0) || magnitude >= 1.0)
    throw std::invalid_argument("perturbation magnitude must be in [0, 1)");
  SplitMix64 rng(seed);
  const auto factor = [&] {
    return rng.next_in(1.0 - magnitude, 1.0 + magnitude);
  };
  CraneParams out = params;
  out.cart_mass *= factor();
  out.payload_mass *= factor();
  out.cable_length *= factor();
  out.force_gain *= factor();
  out.cart_friction *= factor();
  out.swing_damping *= factor();
  // gravity stays nominal
  return out;
}

double mechanical_energy(const CraneState& state, const CraneParams& params) {
  const double m = params.payload_mass;
  const double l = params.cable_length;
  const auto axis_energy = [&](double adot, double phi, double phidot) {
    const double kinetic = 0.5 * (params.cart_mass + m) * adot * adot +
                           m * l * adot * phidot * std::cos(phi) +
                           0.5 * m * l * l * phidot * phidot;
    const double potential = -m * params.gravity * l * std::cos(phi);
    return kinetic + potential;
  };
  return axis_energy(state.xdot, state.theta, state.thetadot) +
         axis_energy(state.ydot, state.psi, state.psidot);
}

}  // namespace cranebench::crane
