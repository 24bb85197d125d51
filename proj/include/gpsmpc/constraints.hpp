#pragma once

#include "gpsmpc/vehicle_model.hpp"

namespace gpsmpc {

// Axis-aligned exclusion box around the TV.
struct SafetyRectangle {
  double cx = 0.0;
  double cy = 0.0;
  double half_length = 0.0;
  double half_width = 0.0;
};

// Linear collision constraint on the EV: satisfied iff
// q_y * d + q_x * s + q_t <= 0. Case A produces an inactive constraint.
struct HalfPlaneConstraint {
  double q_y = 0.0;
  double q_x = 0.0;
  double q_t = 0.0;
  bool active = false;

  double residual(double s, double d) const { return q_y * d + q_x * s + q_t; }
  bool satisfied(double s, double d, double tol = 0.0) const {
    return !active || residual(s, d) <= tol;
  }
};

// Chance-constraint level and the matching 2-dof chi-squared quantile.
struct RiskParams {
  double beta = 0.0;
  double eta = 0.0;

  static RiskParams from_beta(double beta);
};

enum class ConstraintCase { A, B, C, D, E };

const char* to_string(ConstraintCase c);

struct RoadBounds {
  double d_min = 0.0;
  double d_max = 0.0;
};

struct CaseThresholds {
  double d_far = 0.0;          // beyond this longitudinal gap: no constraint
  double margin_switch = 0.0;  // lateral room below which the side flips
};

CaseThresholds default_thresholds(const SafetyRectangle& rect,
                                  const VehicleGeometry& geom,
                                  double eps_safe);

// Rectangle around the (predicted) TV: width w_veh + eps_safe, length grown
// by a headway term on the closing speed.
SafetyRectangle base_rectangle(const EvState& ev, const TvState& tv_pred,
                               const VehicleGeometry& geom, double eps_safe,
                               double t_headway);

// Grows the rectangle by sqrt(eta) predicted standard deviations: lateral TV
// variance widens it, longitudinal variance lengthens it. literal_pairing
// swaps the two, matching the subscripts of the source formula verbatim.
SafetyRectangle tighten_rectangle(const SafetyRectangle& rect,
                                  const Vec4& variance, const RiskParams& risk,
                                  bool literal_pairing = false);

ConstraintCase classify_case(const EvState& ev, const TvState& tv,
                             const RoadBounds& road,
                             const SafetyRectangle& rect,
                             const CaseThresholds& thresholds);

// One half-plane per prediction step, from the current EV position and the
// step-k rectangle. Re-anchors when the construction would cut off the
// current EV state.
HalfPlaneConstraint build_constraint(ConstraintCase ccase, const EvState& ev0,
                                     const TvState& tv_pred_k,
                                     const SafetyRectangle& rect_k,
                                     const RoadBounds& road,
                                     double eps_anchor = 0.01);

}  // namespace gpsmpc
