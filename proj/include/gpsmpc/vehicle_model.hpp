#pragma once

#include <Eigen/Dense>

namespace gpsmpc {

using Vec2 = Eigen::Vector2d;
using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;
using Mat42 = Eigen::Matrix<double, 4, 2>;

// EV state in road-aligned coordinates: longitudinal position s along the
// centerline, lateral offset d, heading phi relative to the road, speed v.
struct EvState {
  double s = 0.0;
  double d = 0.0;
  double phi = 0.0;
  double v = 0.0;

  Vec4 vec() const { return Vec4(s, d, phi, v); }
  static EvState from_vec(const Vec4& x) { return {x(0), x(1), x(2), x(3)}; }
};

struct EvInput {
  double a = 0.0;      // acceleration [m/s^2]
  double delta = 0.0;  // steering angle [rad]

  Vec2 vec() const { return Vec2(a, delta); }
  static EvInput from_vec(const Vec2& u) { return {u(0), u(1)}; }
};

struct VehicleGeometry {
  double l_f = 2.0;    // CoG to front axle [m]
  double l_r = 2.0;    // CoG to rear axle [m]
  double l_veh = 5.0;  // overall length [m]
  double w_veh = 2.0;  // overall width [m]

  bool valid() const {
    return l_f > 0.0 && l_r > 0.0 && l_veh > 0.0 && w_veh > 0.0 &&
           l_f + l_r <= l_veh;
  }
};

// TV state: longitudinal position x and velocity vx, lateral position y and
// velocity vy. Note the interleaved ordering, it differs from EvState.
struct TvState {
  double x = 0.0;
  double vx = 0.0;
  double y = 0.0;
  double vy = 0.0;

  Vec4 vec() const { return Vec4(x, vx, y, vy); }
  static TvState from_vec(const Vec4& z) { return {z(0), z(1), z(2), z(3)}; }
};

// Linearization of the bicycle model about (state0, u = 0), discretized with
// sampling time T. Propagates as xi_{k+1} = affine + A_d xi_k + B_d u_k.
struct DiscreteEvModel {
  Mat4 A_d = Mat4::Identity();
  Mat42 B_d = Mat42::Zero();
  Vec4 affine = Vec4::Zero();
  double T = 0.0;

  Vec4 step(const Vec4& xi, const Vec2& u) const {
    return affine + A_d * xi + B_d * u;
  }
};

// Kinematic bicycle model, returns [s_dot, d_dot, phi_dot, v_dot].
Vec4 ev_dynamics_continuous(const EvState& state, const EvInput& input,
                            const VehicleGeometry& geom);

// One RK4 step of the continuous model; the resulting speed is clamped at 0.
EvState ev_integrate(const EvState& state, const EvInput& input,
                     const VehicleGeometry& geom, double dt);

DiscreteEvModel ev_linearize_discretize(const EvState& state0,
                                        const VehicleGeometry& geom, double T);

// Discrete double-integrator matrices for the TV.
void tv_model_matrices(double T, Mat4& A, Mat42& B);

}  // namespace gpsmpc
