#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "gpsmpc/config.hpp"
#include "gpsmpc/constraints.hpp"
#include "gpsmpc/gp.hpp"
#include "gpsmpc/smpc.hpp"
#include "gpsmpc/tv_planner.hpp"
#include "gpsmpc/vehicle_model.hpp"

namespace gpsmpc {

struct StepRecord {
  int step = 0;
  double time = 0.0;
  EvState ev;
  EvInput input;
  TvState tv;
  QpStatus solver_status = QpStatus::max_iter;
  ConstraintCase ccase = ConstraintCase::A;
  int gp_points = 0;
  TvDirection tv_committed = TvDirection::none;
  std::vector<Vec4> pred_means;      // horizon prediction used this cycle
  std::vector<Vec4> pred_variances;
  std::vector<EvState> planned;      // EV plan xi_1..xi_N
};

struct RunResult {
  std::vector<StepRecord> records;
  bool overtake_success = false;
  std::optional<int> overtake_step;
  double min_gap = 0.0;  // smallest box-to-box clearance, negative on overlap
  bool collision = false;
  int infeasible_cycles = 0;
  std::uint64_t seed = 0;
  bool failed = false;        // numerical failure aborted the run
  std::string failure_reason;
};

// Physical overlap of the two vehicle boxes (closed sets). The EV box is
// rotated by phi and then bounded axis-aligned.
bool collision_check(const EvState& ev, const TvState& tv,
                     const VehicleGeometry& geom);

// Signed clearance between the boxes; <= 0 when they touch or overlap.
double vehicle_gap(const EvState& ev, const TvState& tv,
                   const VehicleGeometry& geom);

// First index where ev.s - tv.x > l_veh held for settle_steps consecutive
// samples (the index of the first sample of that stretch).
std::optional<int> overtake_detect(const std::vector<double>& lead_gap,
                                   double l_veh, int settle_steps);

RunResult run_scenario(const ScenarioConfig& config, std::uint64_t seed);

// Runs one scenario per seed on a bounded worker pool. Results are ordered
// like seeds and do not depend on the pool size.
std::vector<RunResult> run_batch(const ScenarioConfig& config,
                                 const std::vector<std::uint64_t>& seeds,
                                 int jobs);

}  // namespace gpsmpc
