#pragma once

#include <deque>
#include <vector>

#include "gpsmpc/constraints.hpp"
#include "gpsmpc/gp.hpp"
#include "gpsmpc/qp.hpp"
#include "gpsmpc/vehicle_model.hpp"

namespace gpsmpc {

struct MpcWeights {
  Vec4 q_diag{0.0, 0.25, 0.2, 10.0};
  Vec2 r_diag{0.33, 5.0};
  Vec2 s_diag{0.33, 15.0};
};

struct InputBounds {
  Vec2 u_min{-15.0, -0.2};
  Vec2 u_max{10.0, 0.2};
  Vec2 du_min{-5.0, -0.1};
  Vec2 du_max{5.0, 0.1};
};

struct SmpcConfig {
  int N = 10;
  double T = 0.2;
  MpcWeights weights;
  InputBounds bounds;
  RoadBounds road{-6.0, 6.0};
  double v_ref = 60.0;
  double d_ref = 0.0;
  double phi_ref = 0.0;
  double beta = 0.95;
  double eps_safe = 0.5;
  double t_headway = 1.0;
  double eps_anchor = 0.01;
  double hessian_reg = 1e-8;
  bool literal_tightening_pairing = false;
  QpSettings qp;
};

// Condensed QP over the stacked inputs U = [u_0; ...; u_{N-1}]. refs[k-1] is
// the reference state at step k. collision holds one half-plane per step
// k = 0..N; inactive entries contribute no rows.
QpProblem build_qp(const DiscreteEvModel& model, const EvState& ev0,
                   const EvInput& u_prev, const std::vector<Vec4>& refs,
                   const MpcWeights& weights, const InputBounds& bounds,
                   const RoadBounds& road,
                   const std::vector<HalfPlaneConstraint>& collision,
                   double hessian_reg = 1e-8);

struct SmpcDiagnostics {
  QpStatus status = QpStatus::max_iter;
  ConstraintCase ccase = ConstraintCase::A;
  double objective = 0.0;
  double kkt_residual = 0.0;
  int qp_iterations = 0;
  bool used_fallback = false;
  int fallback_depth = 0;  // how many stored inputs have been consumed
};

// Receding-horizon controller. Owns the previous input and the stored input
// sequence used when the QP reports infeasibility.
class SmpcController {
 public:
  SmpcController(const SmpcConfig& config, const VehicleGeometry& geom);

  // Runs one cycle: linearize, predict constraints, solve, apply. On an
  // infeasible (or max_iter) cycle the next stored input is applied, or zero
  // input once the buffer is exhausted.
  EvInput step(const EvState& ev0, const TvState& tv0,
               const TvPredictionStats& stats, SmpcDiagnostics* diag = nullptr);

  // Planned states xi_0..xi_N from the most recent optimal solve, shifted as
  // fallback inputs get consumed. Used as the EV proxy for GP queries.
  const std::vector<EvState>& planned_states() const { return planned_; }

  const EvInput& previous_input() const { return u_prev_; }
  const SmpcConfig& config() const { return config_; }

 private:
  SmpcConfig config_;
  VehicleGeometry geom_;
  RiskParams risk_;
  EvInput u_prev_{};
  std::deque<EvInput> stored_inputs_;
  std::vector<EvState> planned_;
  int fallback_depth_ = 0;
};

}  // namespace gpsmpc
