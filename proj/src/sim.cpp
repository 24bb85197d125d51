#include "gpsmpc/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

namespace gpsmpc {

bool collision_check(const EvState& ev, const TvState& tv,
                     const VehicleGeometry& geom) {
  return vehicle_gap(ev, tv, geom) <= 0.0;
}

double vehicle_gap(const EvState& ev, const TvState& tv,
                   const VehicleGeometry& geom) {
  const double c = std::abs(std::cos(ev.phi));
  const double s = std::abs(std::sin(ev.phi));
  const double ev_hx = 0.5 * (geom.l_veh * c + geom.w_veh * s);
  const double ev_hy = 0.5 * (geom.l_veh * s + geom.w_veh * c);
  const double dx = std::abs(ev.s - tv.x) - (ev_hx + 0.5 * geom.l_veh);
  const double dy = std::abs(ev.d - tv.y) - (ev_hy + 0.5 * geom.w_veh);
  return std::max(dx, dy);
}

std::optional<int> overtake_detect(const std::vector<double>& lead_gap,
                                   double l_veh, int settle_steps) {
  const int n = static_cast<int>(lead_gap.size());
  int streak = 0;
  for (int i = 0; i < n; ++i) {
    streak = lead_gap[static_cast<std::size_t>(i)] > l_veh ? streak + 1 : 0;
    if (streak >= settle_steps) {
      return i - settle_steps + 1;
    }
  }
  return std::nullopt;
}

namespace {

// Constant-velocity TV prediction with a nominal variance ramp, used until
// the GP has seen enough transitions.
TvPredictionStats warmup_prediction(const TvState& tv0, int N, double T,
                                    const std::array<double, 4>& var_rate) {
  TvPredictionStats stats;
  stats.means.resize(static_cast<std::size_t>(N));
  stats.variances.resize(static_cast<std::size_t>(N));
  TvState tv = tv0;
  for (int k = 0; k < N; ++k) {
    tv.x += T * tv.vx;
    tv.y += T * tv.vy;
    stats.means[static_cast<std::size_t>(k)] = tv.vec();
    for (int d = 0; d < 4; ++d) {
      stats.variances[static_cast<std::size_t>(k)](d) =
          var_rate[static_cast<std::size_t>(d)] * (k + 1);
    }
  }
  return stats;
}

std::uint64_t step_seed(std::uint64_t run_seed, int step) {
  return run_seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(step + 1);
}

}  // namespace

RunResult run_scenario(const ScenarioConfig& config, std::uint64_t seed) {
  config.validate();

  RunResult result;
  result.seed = seed;
  result.min_gap = std::numeric_limits<double>::infinity();

  EvState ev = config.ev.initial;
  TvState tv = config.tv.initial;

  SmpcController controller(config.smpc_config(), config.geometry);
  TvPolicyState policy;
  policy.vx_ref0 = config.tv.initial.vx;

  GpModel gp;
  gp.params = config.gp.kernel_params();
  gp.dataset.capacity = static_cast<std::size_t>(config.gp.capacity);

  std::vector<double> lead_gap;
  lead_gap.reserve(static_cast<std::size_t>(config.run.max_steps));

  result.min_gap = std::min(result.min_gap, vehicle_gap(ev, tv, config.geometry));
  if (result.min_gap <= 0.0) {
    result.collision = true;
    return result;
  }

  for (int step = 0; step < config.run.max_steps; ++step) {
    const int gp_points = static_cast<int>(gp.dataset.size());

    TvPredictionStats stats;
    try {
      if (step >= config.gp.warmup_steps && gp.fitted) {
        std::vector<EvState> ev_plan(static_cast<std::size_t>(config.N));
        const std::vector<EvState>& prev = controller.planned_states();
        if (static_cast<int>(prev.size()) == config.N + 1) {
          for (int k = 0; k < config.N; ++k) {
            ev_plan[static_cast<std::size_t>(k)] =
                prev[static_cast<std::size_t>(k + 1)];
          }
        } else {
          const DiscreteEvModel nominal =
              ev_linearize_discretize(ev, config.geometry, config.T);
          Vec4 xi = ev.vec();
          for (int k = 0; k < config.N; ++k) {
            ev_plan[static_cast<std::size_t>(k)] = EvState::from_vec(xi);
            xi = nominal.step(xi, Vec2::Zero());
          }
        }
        stats = sample_tv_trajectories(gp, ev_plan, tv, config.gp.samples,
                                       config.N, step_seed(seed, step));
      } else {
        stats = warmup_prediction(tv, config.N, config.T,
                                  config.gp.warmup_var_rate);
      }
    } catch (const std::exception& e) {
      result.failed = true;
      result.failure_reason = std::string("prediction: ") + e.what();
      break;
    }

    SmpcDiagnostics diag;
    const EvInput input = controller.step(ev, tv, stats, &diag);
    if (diag.used_fallback) {
      ++result.infeasible_cycles;
    }

    StepRecord rec;
    rec.step = step;
    rec.time = step * config.T;
    rec.ev = ev;
    rec.input = input;
    rec.tv = tv;
    rec.solver_status = diag.status;
    rec.ccase = diag.ccase;
    rec.gp_points = gp_points;
    rec.tv_committed = policy.committed;
    rec.pred_means = stats.means;
    rec.pred_variances = stats.variances;
    rec.planned.assign(controller.planned_states().begin() + 1,
                       controller.planned_states().end());
    result.records.push_back(std::move(rec));

    lead_gap.push_back(ev.s - tv.x);
    if (auto ot = overtake_detect(lead_gap, config.geometry.l_veh,
                                  config.run.settle_steps)) {
      result.overtake_step = ot;
      result.overtake_success = true;
      break;
    }

    const EvState ev_next = ev_integrate(ev, input, config.geometry, config.T);
    const TvState tv_ref = tv_reference(ev, tv, policy, config.tv.policy);
    const TvState tv_next = tv_step(tv, tv_ref, config.tv.policy, config.T);

    try {
      gp = gp_observe(gp, ev, tv, tv_next);
    } catch (const GpFitError& e) {
      result.failed = true;
      result.failure_reason = std::string("gp: ") + e.what();
      break;
    }

    ev = ev_next;
    tv = tv_next;

    result.min_gap = std::min(result.min_gap, vehicle_gap(ev, tv, config.geometry));
    if (result.min_gap <= 0.0) {
      result.collision = true;
      result.overtake_success = false;
      break;
    }
  }

  if (result.collision) {
    result.overtake_success = false;
    result.overtake_step.reset();
  }
  return result;
}

std::vector<RunResult> run_batch(const ScenarioConfig& config,
                                 const std::vector<std::uint64_t>& seeds,
                                 int jobs) {
  std::vector<RunResult> results(seeds.size());
  const int workers = std::max(
      1, std::min(jobs, static_cast<int>(seeds.size())));
  if (workers == 1) {
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      results[i] = run_scenario(config, seeds[i]);
    }
    return results;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= seeds.size()) {
          return;
        }
        results[i] = run_scenario(config, seeds[i]);
      }
    });
  }
  for (auto& t : pool) {
    t.join();
  }
  return results;
}

}  // namespace gpsmpc
