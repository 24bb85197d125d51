#include "gpsmpc/vehicle_model.hpp"

#include <algorithm>
#include <cmath>

namespace gpsmpc {

namespace {

double slip_angle(double delta, const VehicleGeometry& geom) {
  return std::atan(geom.l_r / (geom.l_r + geom.l_f) * std::tan(delta));
}

}  // namespace

Vec4 ev_dynamics_continuous(const EvState& state, const EvInput& input,
                            const VehicleGeometry& geom) {
  const double alpha = slip_angle(input.delta, geom);
  Vec4 dxi;
  dxi(0) = state.v * std::cos(state.phi + alpha);
  dxi(1) = state.v * std::sin(state.phi + alpha);
  dxi(2) = state.v / geom.l_r * std::sin(alpha);
  dxi(3) = input.a;
  return dxi;
}

EvState ev_integrate(const EvState& state, const EvInput& input,
                     const VehicleGeometry& geom, double dt) {
  auto f = [&](const Vec4& xi) {
    return ev_dynamics_continuous(EvState::from_vec(xi), input, geom);
  };
  const Vec4 x0 = state.vec();
  const Vec4 k1 = f(x0);
  const Vec4 k2 = f(x0 + 0.5 * dt * k1);
  const Vec4 k3 = f(x0 + 0.5 * dt * k2);
  const Vec4 k4 = f(x0 + dt * k3);
  Vec4 x1 = x0 + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  x1(3) = std::max(x1(3), 0.0);
  return EvState::from_vec(x1);
}

DiscreteEvModel ev_linearize_discretize(const EvState& state0,
                                        const VehicleGeometry& geom,
                                        double T) {
  // Jacobians of the bicycle model at u = 0, where the slip angle vanishes
  // and d(alpha)/d(delta) = l_r / (l_r + l_f).
  const double cphi = std::cos(state0.phi);
  const double sphi = std::sin(state0.phi);
  const double v = state0.v;
  const double dalpha = geom.l_r / (geom.l_r + geom.l_f);

  Mat4 A_c = Mat4::Zero();
  A_c(0, 2) = -v * sphi;
  A_c(0, 3) = cphi;
  A_c(1, 2) = v * cphi;
  A_c(1, 3) = sphi;

  Mat42 B_c = Mat42::Zero();
  B_c(0, 1) = -v * sphi * dalpha;
  B_c(1, 1) = v * cphi * dalpha;
  B_c(2, 1) = v / geom.l_r * dalpha;
  B_c(3, 0) = 1.0;

  DiscreteEvModel model;
  model.T = T;
  model.A_d = Mat4::Identity() + T * A_c;
  model.B_d = T * B_c;

  const Vec4 xi0 = state0.vec();
  const Vec4 f0 = ev_dynamics_continuous(state0, EvInput{}, geom);
  model.affine = xi0 + T * f0 - model.A_d * xi0;
  return model;
}

void tv_model_matrices(double T, Mat4& A, Mat42& B) {
  A = Mat4::Identity();
  A(0, 1) = T;
  A(2, 3) = T;
  B = Mat42::Zero();
  B(0, 0) = 0.5 * T * T;
  B(1, 0) = T;
  B(2, 1) = 0.5 * T * T;
  B(3, 1) = T;
}

}  // namespace gpsmpc
