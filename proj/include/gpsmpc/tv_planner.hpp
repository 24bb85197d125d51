#pragma once

#include <Eigen/Dense>

#include "gpsmpc/vehicle_model.hpp"

namespace gpsmpc {

enum class TvDirection { none, left, right, straight };

const char* to_string(TvDirection d);

struct TvPolicyParams {
  Eigen::Matrix<double, 2, 4> K;  // saturated state feedback
  Vec2 u_min{-15.0, -0.4};
  Vec2 u_max{10.0, 0.4};
  double commit_threshold = 0.5;  // lateral dead-band before committing [m]

  static TvPolicyParams defaults();
};

// Mutable blocking state of the simulated opponent. Once committed to a
// lateral direction it never changes for the rest of the run.
struct TvPolicyState {
  TvDirection committed = TvDirection::none;
  double vx_ref0 = 0.0;  // longitudinal velocity held throughout
};

// Blocking reference: track the EV's lateral position while it is behind,
// drive straight once it has passed. The one-maneuver rule filters moves
// that oppose the committed direction.
TvState tv_reference(const EvState& ev, const TvState& tv,
                     TvPolicyState& policy, const TvPolicyParams& params);

// One double-integrator step under the clamped feedback law.
TvState tv_step(const TvState& tv, const TvState& ref,
                const TvPolicyParams& params, double T);

}  // namespace gpsmpc
