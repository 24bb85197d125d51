#include "gpsmpc/tv_planner.hpp"

#include <cmath>

namespace gpsmpc {

const char* to_string(TvDirection d) {
  switch (d) {
    case TvDirection::none: return "none";
    case TvDirection::left: return "left";
    case TvDirection::right: return "right";
    case TvDirection::straight: return "straight";
  }
  return "?";
}

TvPolicyParams TvPolicyParams::defaults() {
  TvPolicyParams p;
  p.K << 0.0, -0.55, 0.0, 0.0,
         0.0, 0.0, -0.63, -1.15;
  return p;
}

TvState tv_reference(const EvState& ev, const TvState& tv,
                     TvPolicyState& policy, const TvPolicyParams& params) {
  TvState ref;
  ref.x = tv.x;  // first feedback column is zero, value irrelevant
  ref.vx = policy.vx_ref0;
  ref.vy = 0.0;

  if (ev.s >= tv.x) {
    ref.y = tv.y;
    return ref;
  }

  double desired = ev.d;
  const double move = desired - tv.y;
  if (policy.committed == TvDirection::none) {
    if (std::abs(move) > params.commit_threshold) {
      policy.committed = move > 0.0 ? TvDirection::left : TvDirection::right;
    }
  } else if ((policy.committed == TvDirection::left && move < 0.0) ||
             (policy.committed == TvDirection::right && move > 0.0) ||
             policy.committed == TvDirection::straight) {
    desired = tv.y;  // hold, the one maneuver is spent
  }
  ref.y = desired;
  return ref;
}

TvState tv_step(const TvState& tv, const TvState& ref,
                const TvPolicyParams& params, double T) {
  Mat4 A;
  Mat42 B;
  tv_model_matrices(T, A, B);
  const Vec2 u_raw = params.K * (tv.vec() - ref.vec());
  const Vec2 u = u_raw.cwiseMax(params.u_min).cwiseMin(params.u_max);
  return TvState::from_vec(A * tv.vec() + B * u);
}

}  // namespace gpsmpc
