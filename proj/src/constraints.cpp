#include "gpsmpc/constraints.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gpsmpc {

RiskParams RiskParams::from_beta(double beta) {
  if (!(beta > 0.0 && beta < 1.0)) {
    throw std::invalid_argument("RiskParams: beta must lie in (0, 1)");
  }
  return {beta, -2.0 * std::log(1.0 - beta)};
}

const char* to_string(ConstraintCase c) {
  switch (c) {
    case ConstraintCase::A: return "A";
    case ConstraintCase::B: return "B";
    case ConstraintCase::C: return "C";
    case ConstraintCase::D: return "D";
    case ConstraintCase::E: return "E";
  }
  return "?";
}

CaseThresholds default_thresholds(const SafetyRectangle& rect,
                                  const VehicleGeometry& geom,
                                  double eps_safe) {
  CaseThresholds t;
  t.d_far = 3.0 * 2.0 * rect.half_length;
  t.margin_switch = 0.5 * geom.w_veh + eps_safe;
  return t;
}

SafetyRectangle base_rectangle(const EvState& ev, const TvState& tv_pred,
                               const VehicleGeometry& geom, double eps_safe,
                               double t_headway) {
  const double closing = std::max(0.0, ev.v * std::cos(ev.phi) - tv_pred.vx);
  SafetyRectangle rect;
  rect.cx = tv_pred.x;
  rect.cy = tv_pred.y;
  rect.half_length = 0.5 * (geom.l_veh + t_headway * closing);
  rect.half_width = 0.5 * (geom.w_veh + eps_safe);
  return rect;
}

SafetyRectangle tighten_rectangle(const SafetyRectangle& rect,
                                  const Vec4& variance, const RiskParams& risk,
                                  bool literal_pairing) {
  const double sd_long = std::sqrt(std::max(variance(0), 0.0));
  const double sd_lat = std::sqrt(std::max(variance(2), 0.0));
  const double root_eta = std::sqrt(risk.eta);
  SafetyRectangle out = rect;
  if (literal_pairing) {
    out.half_width += 0.5 * sd_long * root_eta;
    out.half_length += 0.5 * sd_lat * root_eta;
  } else {
    out.half_width += 0.5 * sd_lat * root_eta;
    out.half_length += 0.5 * sd_long * root_eta;
  }
  return out;
}

ConstraintCase classify_case(const EvState& ev, const TvState& tv,
                             const RoadBounds& road,
                             const SafetyRectangle& rect,
                             const CaseThresholds& thresholds) {
  const double gap = tv.x - ev.s;
  const bool fully_ahead = ev.s > rect.cx + rect.half_length;
  if (gap > thresholds.d_far || fully_ahead) {
    return ConstraintCase::A;
  }
  if (ev.d >= tv.y) {
    return (road.d_max - ev.d) > thresholds.margin_switch ? ConstraintCase::B
                                                          : ConstraintCase::D;
  }
  return (ev.d - road.d_min) > thresholds.margin_switch ? ConstraintCase::C
                                                        : ConstraintCase::E;
}

namespace {

// Inclined line from the current EV position to the rectangle's rear corner
// on the overtaking side. side = +1 keeps the EV above the line (pass left),
// side = -1 keeps it below (pass right). Falls back to the horizontal
// rectangle-edge level when the EV is alongside/past the corner or when the
// two-point line would dip into the rectangle beyond the corner.
HalfPlaneConstraint incline_constraint(double side, const EvState& ev0,
                                       const SafetyRectangle& rect,
                                       double eps_anchor) {
  const double corner_x = rect.cx - rect.half_length;
  const double corner_y = rect.cy + side * rect.half_width;

  HalfPlaneConstraint c;
  c.active = true;
  if (ev0.s >= corner_x) {
    c.q_y = -side;
    c.q_x = 0.0;
    c.q_t = side * corner_y;
  } else {
    const double slope = (corner_y - ev0.d) / (corner_x - ev0.s);
    if (side * slope < 0.0) {
      c.q_y = -side;
      c.q_x = 0.0;
      c.q_t = side * corner_y;
    } else {
      c.q_y = -side;
      c.q_x = side * slope;
      c.q_t = side * (ev0.d - slope * ev0.s);
    }
  }
  const double r = c.residual(ev0.s, ev0.d);
  if (r > 0.0) {
    c.q_t -= r + eps_anchor;
  }
  return c;
}

}  // namespace

HalfPlaneConstraint build_constraint(ConstraintCase ccase, const EvState& ev0,
                                     const TvState& tv_pred_k,
                                     const SafetyRectangle& rect_k,
                                     const RoadBounds& road,
                                     double eps_anchor) {
  (void)tv_pred_k;
  (void)road;
  switch (ccase) {
    case ConstraintCase::A:
      return {};
    case ConstraintCase::B:
    case ConstraintCase::E:
      return incline_constraint(+1.0, ev0, rect_k, eps_anchor);
    case ConstraintCase::C:
    case ConstraintCase::D:
      return incline_constraint(-1.0, ev0, rect_k, eps_anchor);
  }
  return {};
}

}  // namespace gpsmpc
