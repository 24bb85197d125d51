#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "gpsmpc/smpc.hpp"
#include "gpsmpc/tv_planner.hpp"
#include "gpsmpc/vehicle_model.hpp"

namespace gpsmpc {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GpConfig {
  std::array<double, 4> sigma2{1.0, 1.0, 1.0, 1.0};
  std::array<double, 8> lengthscales{10.0, 10.0, 10.0, 10.0,
                                     10.0, 10.0, 10.0, 10.0};
  double noise2 = 1e-6;
  int capacity = 300;
  int samples = 20;      // M
  int warmup_steps = 5;  // constant-velocity prediction before the GP is used
  std::array<double, 4> warmup_var_rate{1.0, 0.1, 0.25, 0.05};

  std::array<KernelParams, 4> kernel_params() const;
};

struct TvConfig {
  TvState initial{80.0, 50.0, -2.5, 0.0};
  TvPolicyParams policy = TvPolicyParams::defaults();
};

struct EvConfig {
  EvState initial{0.0, 0.0, 0.0, 60.0};
  double v_ref = 60.0;
  double d_ref = 0.0;
  double phi_ref = 0.0;
};

struct RunConfig {
  int max_steps = 150;
  int settle_steps = 10;
  std::vector<std::uint64_t> seeds{1};
};

// Everything a closed-loop run needs; mirrors the library modules.
struct ScenarioConfig {
  double T = 0.2;
  int N = 10;
  MpcWeights weights;
  InputBounds bounds;
  double w_lane = 12.0;
  VehicleGeometry geometry;
  double eps_safe = 0.5;
  double t_headway = 1.0;
  double beta = 0.95;
  double eps_anchor = 0.01;
  double hessian_reg = 1e-8;
  bool literal_tightening_pairing = false;
  GpConfig gp;
  TvConfig tv;
  EvConfig ev;
  RunConfig run;

  RoadBounds road() const { return {-0.5 * w_lane, 0.5 * w_lane}; }
  SmpcConfig smpc_config() const;
  void validate() const;  // throws ConfigError naming the violated invariant
};

// Parses and validates a scenario file. Unknown keys are rejected, missing
// optional keys take their defaults.
ScenarioConfig load_config(const std::string& path);
ScenarioConfig parse_config(const std::string& json_text);

// Canonical serialized form (sorted keys, shortest round-trip floats).
std::string canonical_json(const ScenarioConfig& config);

// FNV-1a over the canonical bytes, as a hex string.
std::string config_hash(const ScenarioConfig& config);

// Parameters race sweep can vary. lengthscale_scale multiplies every GP
// lengthscale by the given factor.
const std::vector<std::string>& sweepable_parameters();
void set_sweep_parameter(ScenarioConfig& config, const std::string& name,
                         double value);

}  // namespace gpsmpc
